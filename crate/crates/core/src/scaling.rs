//! Peak location on a sampled column and finite-size extrapolation of
//! peak positions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default peak prominence as a fraction of the column's full range.
pub const DEFAULT_PROMINENCE_FRACTION: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakRecord {
    #[serde(rename = "L")]
    pub sites: usize,
    pub lambda_peak: f64,
    pub peak_value: f64,
    pub grid_index: usize,
    pub refinement_offset: f64,
    pub prominence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalingVariable {
    #[serde(rename = "inv_L")]
    InvL,
    #[serde(rename = "inv_L2")]
    InvL2,
}

impl ScalingVariable {
    pub fn abscissa(&self, sites: usize) -> f64 {
        let l = sites as f64;
        match self {
            ScalingVariable::InvL => 1.0 / l,
            ScalingVariable::InvL2 => 1.0 / (l * l),
        }
    }
}

impl fmt::Display for ScalingVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScalingVariable::InvL => "inv_L",
            ScalingVariable::InvL2 => "inv_L2",
        })
    }
}

impl FromStr for ScalingVariable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inv_L" | "inv-l" | "1/L" => Ok(ScalingVariable::InvL),
            "inv_L2" | "inv-l2" | "1/L2" | "1/L^2" => Ok(ScalingVariable::InvL2),
            other => Err(Error::InvalidArgument(format!("unknown scaling variable {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub variable: ScalingVariable,
    pub points: Vec<PeakRecord>,
    pub slope: f64,
    pub lambda_c: f64,
    pub intercept_std_error: f64,
    pub r_squared: f64,
}

/// Absolute prominence threshold equal to `fraction` of the column range.
pub fn prominence_threshold(column: &[(f64, f64)], fraction: f64) -> f64 {
    let (lo, hi) = column
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, y)| (lo.min(y), hi.max(y)));
    if lo.is_finite() && hi.is_finite() {
        fraction * (hi - lo)
    } else {
        0.0
    }
}

fn validate(column: &[(f64, f64)]) -> Result<()> {
    if column.len() < 5 {
        return Err(Error::InvalidArgument(format!(
            "peak search needs at least 5 grid points, got {}",
            column.len()
        )));
    }
    if !column.windows(2).all(|w| w[0].0 < w[1].0) {
        return Err(Error::InvalidArgument("grid is not strictly ascending".into()));
    }
    if column.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::InvalidArgument("column contains non-finite values".into()));
    }
    Ok(())
}

/// Height of the local maximum at `i` above the higher of its two
/// flanking minima; each flank extends until a strictly higher sample.
fn prominence(ys: &[f64], i: usize) -> f64 {
    let peak = ys[i];
    let mut left_min = peak;
    for &y in ys[..i].iter().rev() {
        if y > peak {
            break;
        }
        left_min = left_min.min(y);
    }
    let mut right_min = peak;
    for &y in &ys[i + 1..] {
        if y > peak {
            break;
        }
        right_min = right_min.min(y);
    }
    peak - left_min.max(right_min)
}

/// All interior local maxima with prominence at least `min_prominence`,
/// as `(index, prominence)`.
pub fn qualifying_maxima(column: &[(f64, f64)], min_prominence: f64) -> Result<Vec<(usize, f64)>> {
    validate(column)?;
    let ys: Vec<f64> = column.iter().map(|p| p.1).collect();
    Ok((1..ys.len() - 1)
        .filter(|&i| ys[i] > ys[i - 1] && ys[i] >= ys[i + 1])
        .map(|i| (i, prominence(&ys, i)))
        .filter(|&(_, p)| p >= min_prominence && p > 0.0)
        .collect())
}

/// Vertex of the parabola through three points.
fn parabola_vertex(p0: (f64, f64), p1: (f64, f64), p2: (f64, f64)) -> f64 {
    let (x0, y0) = p0;
    let (x1, y1) = p1;
    let (x2, y2) = p2;
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if den == 0.0 {
        x1
    } else {
        x1 - 0.5 * num / den
    }
}

/// Highest qualifying interior peak, refined by a three-point parabola.
pub fn find_peak(sites: usize, column: &[(f64, f64)], min_prominence: f64) -> Result<Option<PeakRecord>> {
    let candidates = qualifying_maxima(column, min_prominence)?;
    let best = candidates
        .into_iter()
        .fold(None::<(usize, f64)>, |acc, (i, p)| match acc {
            Some((j, _)) if column[j].1 >= column[i].1 => acc,
            _ => Some((i, p)),
        });
    Ok(best.map(|(i, prom)| {
        let vertex = parabola_vertex(column[i - 1], column[i], column[i + 1]);
        let vertex = vertex.clamp(column[i - 1].0, column[i + 1].0);
        PeakRecord {
            sites,
            lambda_peak: vertex,
            peak_value: column[i].1,
            grid_index: i,
            refinement_offset: vertex - column[i].0,
            prominence: prom,
        }
    }))
}

/// Ordinary least squares of peak position against `1/L` or `1/L²`.
pub fn extrapolate(peaks: &[PeakRecord], variable: ScalingVariable) -> Result<ScalingResult> {
    if peaks.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "extrapolation needs at least 3 peaks, got {}",
            peaks.len()
        )));
    }
    let mut points = peaks.to_vec();
    points.sort_by_key(|p| p.sites);
    if points.windows(2).any(|w| w[0].sites == w[1].sites) {
        return Err(Error::InvalidArgument("duplicate system sizes".into()));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| variable.abscissa(p.sites)).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.lambda_peak).collect();
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidArgument("identical abscissae".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let sst: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    let sum_x2: f64 = xs.iter().map(|x| x * x).sum();
    let sigma2 = ssr / (n - 2.0);
    Ok(ScalingResult {
        variable,
        points,
        slope,
        lambda_c: intercept,
        intercept_std_error: (sigma2 * sum_x2 / (n * sxx)).sqrt(),
        r_squared: if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 },
    })
}
