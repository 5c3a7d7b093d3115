//! Ground-state fidelity and its expansion coefficients.
//!
//! `F(λ, δ) = |⟨Ψ0(λ)|Ψ0(λ+δ)⟩|` and `F² = 1 − Σ_l δ^l χ^(l)`. Two routes
//! extract `χ^(2)` and `χ^(3)` from ground states on the stencil
//! `λ + k·h, k ∈ {±1, ±2}`:
//!
//! * [`Method::Stencil`] fits `F² − 1` against `δ, δ², δ³, δ⁴`;
//! * [`Method::Derivative`] builds `∂Ψ0`, `∂²Ψ0` by finite differences of
//!   sign-aligned vectors and evaluates the projected overlaps
//!   `χ^(2) = ⟨∂Ψ0|P|∂Ψ0⟩`, `χ^(3) = ⟨∂Ψ0|P|∂²Ψ0⟩` with `P = 1 − |Ψ0⟩⟨Ψ0|`.
//!
//! Each point is evaluated at `h` and `h/2` (and `h/4` if those disagree);
//! the reported values are Richardson-extrapolated from the last pair.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::basis::SectorBasis;
use crate::eigen::{gauge_fix, ground_state, GroundStateSolution, SolverOptions};
use crate::error::{Error, Result};
use crate::hamiltonian::{ChainOperator, ChainSpec};
use crate::linalg::{distance_sq, dot};

/// `F = |⟨v1|v2⟩|`.
pub fn overlap_fidelity(v1: &[f64], v2: &[f64]) -> Result<f64> {
    if v1.len() != v2.len() {
        return Err(Error::DimensionMismatch {
            expected: v1.len(),
            got: v2.len(),
        });
    }
    Ok(dot(v1, v2).abs().min(1.0))
}

/// `1 − F²` for normalized vectors, without cancellation when `F ≈ 1`.
pub fn infidelity_sq(v1: &[f64], v2: &[f64]) -> Result<f64> {
    let f = overlap_fidelity(v1, v2)?;
    let aligned = if dot(v1, v2) < 0.0 {
        v2.iter().map(|x| -x).collect::<Vec<_>>()
    } else {
        v2.to_vec()
    };
    let one_minus_f = 0.5 * distance_sq(v1, &aligned);
    Ok(one_minus_f * (1.0 + f))
}

/// Produces ground states along the driving parameter.
pub trait GroundStateSource: Sync {
    /// Without `warm` the solve is self-contained and must report a
    /// converged gap; with `warm` it may start from that solution and only
    /// the ground pair needs to be converged.
    fn solve(&self, lambda: f64, warm: Option<&GroundStateSolution>) -> Result<GroundStateSolution>;
}

/// Lanczos ground states of the chain in a fixed sector.
#[derive(Debug, Clone)]
pub struct ChainSolver<'a> {
    pub basis: &'a SectorBasis,
    pub opts: SolverOptions,
}

impl<'a> ChainSolver<'a> {
    pub fn new(basis: &'a SectorBasis, opts: SolverOptions) -> Self {
        Self { basis, opts }
    }
}

impl GroundStateSource for ChainSolver<'_> {
    fn solve(&self, lambda: f64, warm: Option<&GroundStateSolution>) -> Result<GroundStateSolution> {
        let spec = ChainSpec::new(self.basis.sites(), lambda)?;
        let op = ChainOperator::hamiltonian(&spec, self.basis)?;
        match warm {
            None => ground_state(&op, lambda, &self.opts, None),
            Some(w) => {
                let opts = SolverOptions {
                    block: 1,
                    ..self.opts
                };
                ground_state(&op, lambda, &opts, Some(&w.vector))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Stencil,
    Derivative,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Stencil => "stencil",
            Method::Derivative => "derivative",
        })
    }
}

/// Non-fatal conditions recorded on an [`ExpansionPoint`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointWarning {
    /// Fit residual above `1e-3 (1 − min F²)`.
    FitResidual,
    /// Successive step halvings never agreed within tolerance.
    StepUnconverged,
    /// Stencil and derivative routes disagree (only set by sweeps running both).
    MethodMismatch,
}

impl PointWarning {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointWarning::FitResidual => "fit_residual",
            PointWarning::StepUnconverged => "h_unconverged",
            PointWarning::MethodMismatch => "method_mismatch",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExpansionOptions {
    /// Base stencil step `h`.
    pub step: f64,
    /// Relative agreement of `χ^(2)` between successive steps.
    pub chi2_agreement: f64,
    /// Relative agreement of `χ^(3)` between successive steps.
    pub chi3_agreement: f64,
    /// Additional halvings after the first `h/2` check.
    pub extra_halvings: u32,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        Self {
            step: 1e-3,
            chi2_agreement: 5e-3,
            chi3_agreement: 2e-2,
            extra_halvings: 1,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ExpansionPoint {
    pub lambda: f64,
    /// Base step of the pair the reported values were extrapolated from.
    pub step: f64,
    /// `(offset, F)` for every stencil offset that was solved.
    pub f_values: Vec<(f64, f64)>,
    pub chi2: f64,
    pub chi3: f64,
    /// Fitted `δ⁴` coefficient (stencil route only).
    pub chi4_nuisance: f64,
    /// Coefficient of `δ¹` in `F²`; zero up to numerical noise.
    pub linear_coeff: f64,
    /// Stencil: largest fit residual. Derivative: `|⟨∂Ψ|∂Ψ⟩ + ⟨Ψ|∂²Ψ⟩|`.
    pub fit_residual: f64,
    pub method: Method,
    pub energy: f64,
    pub gap_at_lambda: f64,
    pub warnings: Vec<PointWarning>,
    /// Operator applications spent on this point.
    pub iterations: usize,
}

impl ExpansionPoint {
    /// `F(λ, λ + h)` at the base step.
    pub fn f_plus(&self, offset: f64) -> Option<f64> {
        self.f_values
            .iter()
            .find(|(o, _)| (o - offset).abs() <= 1e-12 * offset.abs().max(1e-300))
            .map(|&(_, f)| f)
    }
}

/// One estimate at a fixed step.
#[derive(Debug, Clone, Copy)]
struct StepEstimate {
    chi2: f64,
    chi3: f64,
    chi4: f64,
    linear: f64,
    residual: f64,
    fit_warning: bool,
}

/// Stencil offsets are stored as integer multiples of `h / 2^MAX_LEVEL`.
const MAX_LEVEL: u32 = 8;

struct Stencil<'s, S: GroundStateSource + ?Sized> {
    source: &'s S,
    lambda: f64,
    step: f64,
    center: GroundStateSolution,
    solved: BTreeMap<i64, GroundStateSolution>,
    iterations: usize,
}

impl<'s, S: GroundStateSource + ?Sized> Stencil<'s, S> {
    fn new(source: &'s S, lambda: f64, step: f64) -> Result<Self> {
        let raw = source.solve(lambda, None)?;
        if raw.near_degenerate {
            return Err(Error::Degenerate {
                lambda,
                energy: raw.energy,
                gap: raw.gap(),
            });
        }
        let mut center = raw;
        center.vector = gauge_fix(&center.vector, None)?;
        let iterations = center.iterations;
        Ok(Self {
            source,
            lambda,
            step,
            center,
            solved: BTreeMap::new(),
            iterations,
        })
    }

    /// Sign-aligned ground state at `λ + k · step / 2^level`.
    fn at(&mut self, k: i64, level: u32) -> Result<&[f64]> {
        let key = k << (MAX_LEVEL - level);
        if k == 0 {
            return Ok(&self.center.vector);
        }
        if !self.solved.contains_key(&key) {
            let offset = self.offset(key);
            let mut sol = self.source.solve(self.lambda + offset, Some(&self.center))?;
            self.iterations += sol.iterations;
            sol.vector = gauge_fix(&sol.vector, Some(&self.center.vector))?;
            self.solved.insert(key, sol);
        }
        Ok(&self.solved[&key].vector)
    }

    fn offset(&self, key: i64) -> f64 {
        key as f64 * self.step / f64::from(1u32 << MAX_LEVEL)
    }

    fn f_values(&self) -> Vec<(f64, f64)> {
        self.solved
            .iter()
            .map(|(&key, sol)| {
                (
                    self.offset(key),
                    dot(&self.center.vector, &sol.vector).abs().min(1.0),
                )
            })
            .collect()
    }

    fn stencil_estimate(&mut self, level: u32) -> Result<StepEstimate> {
        let h = self.step / f64::from(1u32 << level);
        let ks = [-2i64, -1, 1, 2];
        let mut rows = Vec::with_capacity(4);
        let mut deviation = Vec::with_capacity(4);
        let mut min_f2 = 1.0f64;
        for &k in &ks {
            let v = self.at(k, level)?.to_vec();
            let one_minus_f2 = infidelity_sq(&self.center.vector, &v)?;
            min_f2 = min_f2.min(1.0 - one_minus_f2);
            rows.push(k as f64);
            deviation.push(-one_minus_f2);
        }
        // Solve in the scaled variable k = δ/h, then undo the scaling.
        let design = DMatrix::from_fn(4, 4, |r, c| rows[r].powi(c as i32 + 1));
        let rhs = DVector::from_vec(deviation.clone());
        let coeffs = design
            .clone()
            .svd(true, true)
            .solve(&rhs, 1e-14)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let fitted = &design * &coeffs;
        let residual = (fitted - rhs).amax();
        let c: Vec<f64> = (0..4).map(|i| coeffs[i] / h.powi(i as i32 + 1)).collect();
        Ok(StepEstimate {
            chi2: -c[1],
            chi3: -c[2],
            chi4: -c[3],
            linear: c[0],
            residual,
            fit_warning: residual > 1e-3 * (1.0 - min_f2),
        })
    }

    fn derivative_estimate(&mut self, level: u32) -> Result<StepEstimate> {
        let h = self.step / f64::from(1u32 << level);
        let m2 = self.at(-2, level)?.to_vec();
        let m1 = self.at(-1, level)?.to_vec();
        let p1 = self.at(1, level)?.to_vec();
        let p2 = self.at(2, level)?.to_vec();
        let psi = &self.center.vector;
        let (d1, d2) = derivatives(psi, &m2, &m1, &p1, &p2, h);
        let psi_d1 = dot(psi, &d1);
        let psi_d2 = dot(psi, &d2);
        let d1_d1 = dot(&d1, &d1);
        let d1_d2 = dot(&d1, &d2);
        Ok(StepEstimate {
            chi2: d1_d1 - psi_d1 * psi_d1,
            chi3: d1_d2 - psi_d1 * psi_d2,
            chi4: f64::NAN,
            linear: 2.0 * psi_d1,
            residual: (d1_d1 + psi_d2).abs(),
            fit_warning: false,
        })
    }

    fn estimate(&mut self, method: Method, level: u32) -> Result<StepEstimate> {
        match method {
            Method::Stencil => self.stencil_estimate(level),
            Method::Derivative => self.derivative_estimate(level),
        }
    }
}

/// Five-point first and second derivatives of a vector-valued function.
fn derivatives(
    psi: &[f64],
    m2: &[f64],
    m1: &[f64],
    p1: &[f64],
    p2: &[f64],
    h: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = psi.len();
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    for i in 0..n {
        d1.push((m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * h));
        d2.push((-m2[i] + 16.0 * m1[i] - 30.0 * psi[i] + 16.0 * p1[i] - p2[i]) / (12.0 * h * h));
    }
    (d1, d2)
}

fn agrees(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(a.abs()) + 1e-9
}

/// Richardson combination of estimates at `h` (coarse) and `h/2` (fine)
/// for a leading error of order `h^order`.
fn richardson(coarse: f64, fine: f64, order: i32) -> f64 {
    let w = 2f64.powi(order);
    (w * fine - coarse) / (w - 1.0)
}

fn check_step(opts: &ExpansionOptions) -> Result<()> {
    if opts.step > 0.0 && opts.step.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("step h = {}", opts.step)))
    }
}

fn run_method<S: GroundStateSource + ?Sized>(
    stencil: &mut Stencil<'_, S>,
    opts: &ExpansionOptions,
    method: Method,
) -> Result<ExpansionPoint> {
    let (order2, order3) = match method {
        Method::Stencil => (4, 2),
        Method::Derivative => (4, 4),
    };
    let max_level = (1 + opts.extra_halvings).min(MAX_LEVEL);
    let mut coarse = stencil.estimate(method, 0)?;
    let mut level = 1;
    let mut warnings = Vec::new();
    let (fine, used_level) = loop {
        let fine = stencil.estimate(method, level)?;
        let ok = agrees(coarse.chi2, fine.chi2, opts.chi2_agreement)
            && agrees(coarse.chi3, fine.chi3, opts.chi3_agreement);
        if ok || level >= max_level {
            if !ok {
                warnings.push(PointWarning::StepUnconverged);
            }
            break (fine, level);
        }
        coarse = fine;
        level += 1;
    };
    if coarse.fit_warning || fine.fit_warning {
        warnings.push(PointWarning::FitResidual);
    }
    Ok(ExpansionPoint {
        lambda: stencil.lambda,
        step: opts.step / f64::from(1u32 << (used_level - 1)),
        f_values: stencil.f_values(),
        chi2: richardson(coarse.chi2, fine.chi2, order2),
        chi3: richardson(coarse.chi3, fine.chi3, order3),
        chi4_nuisance: fine.chi4,
        linear_coeff: fine.linear,
        fit_residual: coarse.residual.max(fine.residual),
        method,
        energy: stencil.center.energy,
        gap_at_lambda: stencil.center.gap(),
        warnings,
        iterations: stencil.iterations,
    })
}

fn expansion_point<S: GroundStateSource + ?Sized>(
    source: &S,
    lambda: f64,
    opts: &ExpansionOptions,
    method: Method,
) -> Result<ExpansionPoint> {
    check_step(opts)?;
    let mut stencil = Stencil::new(source, lambda, opts.step)?;
    run_method(&mut stencil, opts, method)
}

/// Both routes on one shared set of ground states, as `(stencil, derivative)`.
/// The stencil point carries [`PointWarning::MethodMismatch`] when the two
/// disagree beyond the step-agreement tolerances.
pub fn chi_from_both<S: GroundStateSource + ?Sized>(
    source: &S,
    lambda: f64,
    opts: &ExpansionOptions,
) -> Result<(ExpansionPoint, ExpansionPoint)> {
    check_step(opts)?;
    let mut stencil = Stencil::new(source, lambda, opts.step)?;
    let mut fit = run_method(&mut stencil, opts, Method::Stencil)?;
    let deriv = run_method(&mut stencil, opts, Method::Derivative)?;
    if !agrees(fit.chi2, deriv.chi2, opts.chi2_agreement)
        || !agrees(fit.chi3, deriv.chi3, opts.chi3_agreement)
    {
        fit.warnings.push(PointWarning::MethodMismatch);
    }
    fit.iterations = stencil.iterations;
    fit.f_values = stencil.f_values();
    Ok((fit, deriv))
}

/// `χ^(2)`, `χ^(3)` from a least-squares fit of `F² − 1` over the stencil.
pub fn chi_from_stencil<S: GroundStateSource + ?Sized>(
    source: &S,
    lambda: f64,
    opts: &ExpansionOptions,
) -> Result<ExpansionPoint> {
    expansion_point(source, lambda, opts, Method::Stencil)
}

/// `χ^(2)`, `χ^(3)` from projected finite-difference derivative vectors.
pub fn chi_from_derivatives<S: GroundStateSource + ?Sized>(
    source: &S,
    lambda: f64,
    opts: &ExpansionOptions,
) -> Result<ExpansionPoint> {
    expansion_point(source, lambda, opts, Method::Derivative)
}

/// The two lowest-order norm identities of `d^n/dλ^n ⟨Ψ|Ψ⟩ = 0`:
/// `2⟨Ψ|∂Ψ⟩` and `⟨∂Ψ|∂Ψ⟩ + ⟨Ψ|∂²Ψ⟩`, from gauge-fixed finite differences.
#[derive(Debug, Clone, Copy)]
pub struct NormIdentities {
    pub first: f64,
    pub second: f64,
    pub chi2: f64,
}

pub fn norm_identities<S: GroundStateSource + ?Sized>(
    source: &S,
    lambda: f64,
    step: f64,
) -> Result<NormIdentities> {
    let mut stencil = Stencil::new(source, lambda, step)?;
    let m2 = stencil.at(-2, 0)?.to_vec();
    let m1 = stencil.at(-1, 0)?.to_vec();
    let p1 = stencil.at(1, 0)?.to_vec();
    let p2 = stencil.at(2, 0)?.to_vec();
    let psi = &stencil.center.vector;
    let (d1, d2) = derivatives(psi, &m2, &m1, &p1, &p2, step);
    let psi_d1 = dot(psi, &d1);
    Ok(NormIdentities {
        first: 2.0 * psi_d1,
        second: dot(&d1, &d1) + dot(psi, &d2),
        chi2: dot(&d1, &d1) - psi_d1 * psi_d1,
    })
}
