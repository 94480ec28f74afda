//! Root of s ↦ P(φ_s) for a one-parameter potential family, found twice:
//! from the partition-function pressure and from log λ of the grid operator.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::potential::Model;
use crate::pressure::{pressure_estimate, PressureEstimate};
use crate::shift::AlphabetCutoff;
use crate::transfer::{power_iteration, HatOperator, SpectralParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DimensionParams {
    /// word depth of the partition functions
    pub depth: usize,
    pub tol_s: f64,
    pub max_steps: usize,
    pub spectral: SpectralParams,
}

impl Default for DimensionParams {
    fn default() -> Self {
        DimensionParams {
            depth: 14,
            tol_s: 1e-4,
            max_steps: 60,
            spectral: SpectralParams::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BracketStep {
    pub lo: f64,
    pub hi: f64,
    pub mid: f64,
    /// pressure value at `mid` whose sign moved the bracket
    pub value: f64,
    /// rigorous pressure interval at `mid` (partition-function oracle only)
    pub interval: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionResult {
    pub s_star: f64,
    pub zn_bracket: (f64, f64),
    pub lambda_bracket: (f64, f64),
    pub lambda_root: f64,
    pub combined: (f64, f64),
    pub overlap: bool,
    /// |zn midpoint − λ midpoint|
    pub agreement: f64,
    pub monotone: bool,
    pub zn_history: Vec<BracketStep>,
    pub lambda_history: Vec<BracketStep>,
}

fn pressure_at<F>(family: &F, cut: &AlphabetCutoff, s: f64, depth: usize) -> Result<PressureEstimate>
where
    F: Fn(f64) -> Result<Model>,
{
    pressure_estimate(&family(s)?, cut, depth, &[])
}

fn log_lambda_at<F>(family: &F, cut: &AlphabetCutoff, s: f64, spectral: &SpectralParams) -> Result<f64>
where
    F: Fn(f64) -> Result<Model>,
{
    let model = family(s)?;
    let grid = Grid::new(*model.system().domain(), spectral.grid_cells)?;
    let op = HatOperator::new(&model, cut, grid)?;
    Ok(power_iteration(&op, spectral.tol, spectral.max_iter)?.lambda.ln())
}

fn nested(history: &[BracketStep]) -> bool {
    history
        .windows(2)
        .all(|w| w[1].lo >= w[0].lo && w[1].hi <= w[0].hi && w[1].hi - w[1].lo < w[0].hi - w[0].lo)
}

/// Bisection on the sign of the pressure point estimate until the bracket
/// is narrower than `tol_s` and the rigorous interval at the midpoint
/// contains 0, cross-checked by bisection on log λ(s).
pub fn solve_dimension<F>(
    family: F,
    cut: &AlphabetCutoff,
    s_lo: f64,
    s_hi: f64,
    params: &DimensionParams,
) -> Result<DimensionResult>
where
    F: Fn(f64) -> Result<Model>,
{
    if !(s_lo < s_hi) || params.tol_s <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "need s_lo < s_hi and tol_s > 0, got [{s_lo}, {s_hi}] and {}",
            params.tol_s
        )));
    }
    let p_lo = pressure_at(&family, cut, s_lo, params.depth)?.point;
    let p_hi = pressure_at(&family, cut, s_hi, params.depth)?.point;
    if !(p_lo > 0.0 && p_hi < 0.0) {
        return Err(Error::BracketInvalid {
            lo: s_lo,
            hi: s_hi,
            p_lo,
            p_hi,
        });
    }

    let (mut lo, mut hi) = (s_lo, s_hi);
    let mut zn_history = Vec::new();
    let mut s_star = 0.5 * (lo + hi);
    for _ in 0..params.max_steps {
        let mid = 0.5 * (lo + hi);
        let est = pressure_at(&family, cut, mid, params.depth)?;
        zn_history.push(BracketStep {
            lo,
            hi,
            mid,
            value: est.point,
            interval: Some((est.lower, est.upper)),
        });
        s_star = mid;
        if hi - lo <= params.tol_s && est.lower <= 0.0 && 0.0 <= est.upper {
            break;
        }
        if est.point > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let zn_bracket = (lo, hi);

    let l_lo = log_lambda_at(&family, cut, s_lo, &params.spectral)?;
    let l_hi = log_lambda_at(&family, cut, s_hi, &params.spectral)?;
    if !(l_lo > 0.0 && l_hi < 0.0) {
        return Err(Error::BracketInvalid {
            lo: s_lo,
            hi: s_hi,
            p_lo: l_lo,
            p_hi: l_hi,
        });
    }
    let (mut a, mut b) = (s_lo, s_hi);
    let mut lambda_history = Vec::new();
    while b - a > params.tol_s && lambda_history.len() < params.max_steps {
        let mid = 0.5 * (a + b);
        let v = log_lambda_at(&family, cut, mid, &params.spectral)?;
        lambda_history.push(BracketStep {
            lo: a,
            hi: b,
            mid,
            value: v,
            interval: None,
        });
        if v > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let lambda_bracket = (a, b);
    let lambda_root = 0.5 * (a + b);

    let combined = (lo.min(a), hi.max(b));
    let overlap = lo <= b && a <= hi;
    Ok(DimensionResult {
        s_star,
        zn_bracket,
        lambda_bracket,
        lambda_root,
        combined,
        overlap,
        agreement: (s_star - lambda_root).abs(),
        monotone: nested(&zn_history) && nested(&lambda_history),
        zn_history,
        lambda_history,
    })
}
