//! Fixed-magnetization basis of a spin-1/2 chain.
//!
//! A basis state is an `L`-bit mask where bit `j` set means site `j` carries
//! spin up. States of one sector are stored in ascending numeric order, so
//! `unrank` is a plain array lookup. `rank` uses a split lookup table: the
//! mask is cut into a high and a low half, and because numeric order sorts
//! by the high half first, the index is the offset of the high-half block
//! plus the rank of the low half among masks of equal popcount.

use crate::error::{Error, Result};

pub const MAX_SITES: usize = 30;
pub const MIN_SITES: usize = 4;

/// Exact binomial coefficient, `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    u64::try_from(acc).ok()
}

/// Next larger integer with the same popcount (Gosper's hack).
#[inline]
fn next_same_popcount(v: u64) -> u64 {
    let c = v & v.wrapping_neg();
    let r = v + c;
    (((r ^ v) >> 2) / c) | r
}

fn enumerate_masks(bits: usize, ones: usize) -> Vec<u64> {
    if ones > bits {
        return Vec::new();
    }
    if ones == 0 {
        return vec![0];
    }
    let count = binomial(bits as u64, ones as u64).unwrap_or(0) as usize;
    let mut out = Vec::with_capacity(count);
    let limit = 1u64 << bits;
    let mut v = (1u64 << ones) - 1;
    while v < limit {
        out.push(v);
        v = next_same_popcount(v);
    }
    out
}

#[derive(Debug, Clone)]
pub struct SectorBasis {
    sites: usize,
    n_up: usize,
    states: Vec<u64>,
    low_bits: usize,
    low_rank: Vec<u32>,
    high_offset: Vec<u32>,
}

impl SectorBasis {
    /// Accepts even chain lengths in `MIN_SITES..=MAX_SITES`.
    pub fn check_sites(sites: usize) -> Result<()> {
        if sites % 2 != 0 {
            return Err(Error::OddLength(sites));
        }
        if !(MIN_SITES..=MAX_SITES).contains(&sites) {
            return Err(Error::LengthOutOfRange(sites));
        }
        Ok(())
    }

    /// Builds the sector with `n_up` up spins on `sites` sites.
    pub fn new(sites: usize, n_up: usize) -> Result<Self> {
        Self::check_sites(sites)?;
        if n_up > sites {
            return Err(Error::FillingOutOfRange { sites, n_up });
        }
        let states = enumerate_masks(sites, n_up);

        let low_bits = sites / 2;
        let high_bits = sites - low_bits;
        let mut low_rank = vec![0u32; 1 << low_bits];
        let mut seen = vec![0u32; low_bits + 1];
        for (low, slot) in low_rank.iter_mut().enumerate() {
            let p = (low as u64).count_ones() as usize;
            *slot = seen[p];
            seen[p] += 1;
        }
        let mut high_offset = vec![u32::MAX; 1 << high_bits];
        let mut prev = u64::MAX;
        for (i, &s) in states.iter().enumerate() {
            let high = s >> low_bits;
            if high != prev {
                high_offset[high as usize] = i as u32;
                prev = high;
            }
        }
        Ok(Self {
            sites,
            n_up,
            states,
            low_bits,
            low_rank,
            high_offset,
        })
    }

    /// The zero-magnetization sector, where the ground state lives for even `L`.
    pub fn zero_magnetization(sites: usize) -> Result<Self> {
        Self::new(sites, sites / 2)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn n_up(&self) -> usize {
        self.n_up
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn contains(&self, mask: u64) -> bool {
        mask >> self.sites == 0 && mask.count_ones() as usize == self.n_up
    }

    /// Index of a sector member; no membership check.
    #[inline]
    pub(crate) fn rank_unchecked(&self, mask: u64) -> usize {
        let low = mask & ((1u64 << self.low_bits) - 1);
        let high = mask >> self.low_bits;
        self.high_offset[high as usize] as usize + self.low_rank[low as usize] as usize
    }

    pub fn rank(&self, mask: u64) -> Result<usize> {
        if !self.contains(mask) {
            return Err(Error::NotInSector {
                mask,
                sites: self.sites,
                n_up: self.n_up,
            });
        }
        let index = self.rank_unchecked(mask);
        debug_assert_eq!(self.states[index], mask);
        Ok(index)
    }

    pub fn unrank(&self, index: usize) -> Result<u64> {
        self.states
            .get(index)
            .copied()
            .ok_or(Error::IndexOutOfRange {
                index,
                dim: self.dim(),
            })
    }
}
