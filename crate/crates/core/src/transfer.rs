//! The operator L̂g(x) = Σᵢ e^{φ⁽ⁱ⁾(x)} g(φᵢ(x)) on a grid, its leading
//! eigendata, the dual eigenmeasure and the distortion bounds for L̂₀ⁿ𝟙.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::ifs::Interval;
use crate::ledger::ErrorLedger;
use crate::potential::Model;
use crate::shift::AlphabetCutoff;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Entry {
    weight: f64,
    cell: u32,
    t: f64,
}

/// L̂ restricted to {1..N}, precomputed as a sparse interpolation matrix.
#[derive(Clone, Debug)]
pub struct HatOperator {
    grid: Grid,
    alphabet: u32,
    entries: Vec<Entry>,
    tail: f64,
}

impl HatOperator {
    pub fn new(model: &Model, cut: &AlphabetCutoff, grid: Grid) -> Result<Self> {
        if grid.domain() != model.system().domain() {
            return Err(Error::InvalidParameter("grid does not span the system domain".into()));
        }
        let tail = model.exp_tail(cut)?;
        let alphabet = model.alphabet(cut);
        let entries = (0..grid.len())
            .into_par_iter()
            .flat_map_iter(|k| {
                let x = grid.node(k);
                (1..=alphabet).map(move |i| {
                    let (p, y) = model.step(i, x);
                    let (cell, t) = grid.locate(y);
                    Entry {
                        weight: p.exp(),
                        cell: cell as u32,
                        t,
                    }
                })
            })
            .collect();
        Ok(HatOperator {
            grid,
            alphabet,
            entries,
            tail,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn alphabet(&self) -> u32 {
        self.alphabet
    }

    /// Σ_{i>N} sup_X e^{φ⁽ⁱ⁾}, the truncation error of one application per
    /// unit of ‖g‖_sup.
    pub fn tail(&self) -> f64 {
        self.tail
    }

    fn row(&self, k: usize) -> &[Entry] {
        let a = self.alphabet as usize;
        &self.entries[k * a..(k + 1) * a]
    }

    /// Node-wise Σ_{i≤N} e^{φ⁽ⁱ⁾(x_k)} g(φᵢ(x_k)).
    pub fn apply(&self, g: &GridFunction) -> GridFunction {
        let v = g.values();
        let values = (0..self.grid.len())
            .into_par_iter()
            .map(|k| {
                self.row(k)
                    .iter()
                    .map(|e| {
                        let c = e.cell as usize;
                        e.weight * ((1.0 - e.t) * v[c] + e.t * v[c + 1])
                    })
                    .sum()
            })
            .collect();
        GridFunction::new(self.grid, values).expect("same grid")
    }

    /// sup over nodes of Σ_{i≤N} e^{φ⁽ⁱ⁾(x_k)} = sup L̂𝟙.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.grid.len())
            .map(|k| self.row(k).iter().map(|e| e.weight).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// One application of L̂ to g over {1..N}, with the alphabet tail recorded.
pub fn apply_hat(model: &Model, g: &GridFunction, cut: &AlphabetCutoff) -> Result<(GridFunction, ErrorLedger)> {
    let op = HatOperator::new(model, cut, *g.grid())?;
    let out = op.apply(g);
    let ledger = ErrorLedger::new().with("alphabet tail", op.tail() * g.sup_abs());
    Ok((out, ledger))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenData {
    pub lambda: f64,
    pub h: GridFunction,
    /// sup |L̂h/λ − h| relative to sup h
    pub residual: f64,
    pub iterations: usize,
}

/// Power iteration g ← L̂g/‖L̂g‖_sup from g₀ = 𝟙. The returned h is
/// sup-normalized.
pub fn power_iteration(op: &HatOperator, tol: f64, max_iter: usize) -> Result<EigenData> {
    let mut g = GridFunction::constant(*op.grid(), 1.0);
    let mut lambda_prev = f64::NAN;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let mut next = op.apply(&g);
        let lambda = next.sup();
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::NonConvergence {
                what: "power iteration",
                iterations: it,
                residual: lambda,
            });
        }
        next.scale(1.0 / lambda);
        residual = next.distance(&g);
        let settled = (lambda - lambda_prev).abs() <= tol * lambda;
        lambda_prev = lambda;
        if settled && residual <= tol {
            return Ok(EigenData {
                lambda,
                h: g,
                residual,
                iterations: it,
            });
        }
        g = next;
    }
    Err(Error::NonConvergence {
        what: "power iteration",
        iterations: max_iter,
        residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Atom {
    pub x: f64,
    pub w: f64,
}

/// A finite weighted point measure on X.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AtomMeasure {
    atoms: Vec<Atom>,
}

impl AtomMeasure {
    pub fn new(mut atoms: Vec<Atom>) -> Result<Self> {
        if atoms.iter().any(|a| !(a.w > 0.0) || !a.x.is_finite()) {
            return Err(Error::InvalidParameter("atom weights must be positive".into()));
        }
        atoms.sort_by(|a, b| a.x.total_cmp(&b.x));
        Ok(AtomMeasure { atoms })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn positions(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.x).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.w).collect()
    }

    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.w).sum()
    }

    pub fn normalize(&mut self) -> f64 {
        let m = self.mass();
        self.atoms.iter_mut().for_each(|a| a.w /= m);
        m
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|a| a.w * f(a.x)).sum()
    }

    /// Mass of the closed interval I.
    pub fn mass_in(&self, iv: &Interval) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.x >= iv.lo && a.x <= iv.hi)
            .map(|a| a.w)
            .sum()
    }

    /// Mass within distance r of x.
    pub fn mass_near(&self, x: f64, r: f64) -> f64 {
        self.atoms.iter().filter(|a| (a.x - x).abs() <= r).map(|a| a.w).sum()
    }

    /// Wasserstein-1 distance ∫|F − G| between two probability measures.
    pub fn w1(&self, other: &AtomMeasure) -> f64 {
        let (a, b) = (&self.atoms, &other.atoms);
        let (mut i, mut j) = (0, 0);
        let (mut fa, mut fb) = (0.0f64, 0.0f64);
        let mut last = match (a.first(), b.first()) {
            (Some(p), Some(q)) => p.x.min(q.x),
            _ => return 0.0,
        };
        let mut dist = 0.0;
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(p), Some(q)) => p.x.min(q.x),
                (Some(p), None) => p.x,
                (None, Some(q)) => q.x,
                (None, None) => break,
            };
            dist += (fa - fb).abs() * (next - last);
            last = next;
            while i < a.len() && a[i].x == next {
                fa += a[i].w;
                i += 1;
            }
            while j < b.len() && b[j].x == next {
                fb += b[j].w;
                j += 1;
            }
        }
        dist
    }
}

/// One dual sweep: every atom (x, w) spawns (φᵢ(x), w·e^{φ⁽ⁱ⁾(x)}), then atoms
/// sharing a grid cell merge at their weighted mean. Returns the merged
/// measure and the largest within-cell variance.
fn dual_sweep(model: &Model, alphabet: u32, grid: &Grid, m: &AtomMeasure) -> (AtomMeasure, f64) {
    let children: Vec<Vec<(usize, f64, f64)>> = m
        .atoms
        .par_iter()
        .map(|a| {
            (1..=alphabet)
                .map(|i| {
                    let (p, y) = model.step(i, a.x);
                    (grid.cell_of(y), y, a.w * p.exp())
                })
                .collect()
        })
        .collect();
    let cells = grid.cells();
    let mut w = vec![0.0; cells];
    let mut wx = vec![0.0; cells];
    for (c, y, cw) in children.iter().flatten() {
        w[*c] += cw;
        wx[*c] += cw * y;
    }
    let mut var = vec![0.0f64; cells];
    for (c, y, cw) in children.iter().flatten() {
        let d = y - wx[*c] / w[*c];
        var[*c] += cw * d * d;
    }
    let mut atoms = Vec::new();
    let mut max_var = 0.0f64;
    for c in 0..cells {
        if w[c] > 0.0 {
            atoms.push(Atom {
                x: wx[c] / w[c],
                w: w[c],
            });
            max_var = max_var.max(var[c] / w[c]);
        }
    }
    (AtomMeasure { atoms }, max_var)
}

/// Merges the lightest atoms into their nearest neighbours until at most
/// `cap` remain. Total mass is preserved exactly.
fn enforce_cap(m: &mut AtomMeasure, cap: usize) {
    let cap = cap.max(1);
    while m.atoms.len() > cap {
        let (k, _) = m
            .atoms
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.w.total_cmp(&b.1.w))
            .expect("non-empty");
        let a = m.atoms[k];
        let left = k.checked_sub(1).map(|j| (j, a.x - m.atoms[j].x));
        let right = m.atoms.get(k + 1).map(|b| (k + 1, b.x - a.x));
        let j = match (left, right) {
            (Some(l), Some(r)) => {
                if l.1 <= r.1 {
                    l.0
                } else {
                    r.0
                }
            }
            (Some(l), None) => l.0,
            (None, Some(r)) => r.0,
            (None, None) => return,
        };
        let b = m.atoms[j];
        let w = a.w + b.w;
        m.atoms[j] = Atom {
            x: (a.x * a.w + b.x * b.w) / w,
            w,
        };
        m.atoms.remove(k);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualResult {
    pub measure: AtomMeasure,
    /// mass of the last sweep before normalization
    pub lambda_dual: f64,
    pub iterations: usize,
    /// W1 distance between the last two iterates
    pub change: f64,
    /// largest within-cell variance merged away in the last sweep
    pub merge_variance: f64,
}

/// Fixed point of μ ↦ L̂*μ/L̂*μ(𝟙) on atom measures.
pub fn eigenmeasure(
    model: &Model,
    cut: &AlphabetCutoff,
    grid: &Grid,
    atom_cap: usize,
    tol: f64,
    max_iter: usize,
) -> Result<DualResult> {
    let alphabet = model.alphabet(cut);
    let h = grid.step();
    let lo = grid.domain().lo;
    let start: Vec<Atom> = (0..grid.cells())
        .map(|c| Atom {
            x: lo + (c as f64 + 0.5) * h,
            w: 1.0 / grid.cells() as f64,
        })
        .collect();
    let mut m = AtomMeasure { atoms: start };
    let mut lambda_prev = f64::NAN;
    let mut change = f64::INFINITY;
    let diam = grid.domain().diam();
    for it in 1..=max_iter {
        let (mut next, var) = dual_sweep(model, alphabet, grid, &m);
        enforce_cap(&mut next, atom_cap);
        let lambda = next.normalize();
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::NonConvergence {
                what: "eigenmeasure",
                iterations: it,
                residual: lambda,
            });
        }
        change = next.w1(&m);
        let settled = (lambda - lambda_prev).abs() <= tol * lambda;
        lambda_prev = lambda;
        m = next;
        if settled && change <= tol * diam {
            return Ok(DualResult {
                measure: m,
                lambda_dual: lambda,
                iterations: it,
                change,
                merge_variance: var,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "eigenmeasure",
        iterations: max_iter,
        residual: change,
    })
}

/// Numerical knobs for the spectral computations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralParams {
    pub grid_cells: usize,
    pub atom_cap: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SpectralParams {
    fn default() -> Self {
        SpectralParams {
            grid_cells: 2048,
            atom_cap: 4096,
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

/// Primal and dual eigendata, with h normalized so that ∫h dm = 1.
#[derive(Clone, Debug, Serialize)]
pub struct Spectrum {
    pub eigen: EigenData,
    pub dual: DualResult,
    /// |log λ_primal − log λ_dual|
    pub lambda_gap: f64,
    /// relative error bounds; see [`Spectrum::compute`]
    pub ledger: ErrorLedger,
    #[serde(skip)]
    operator: HatOperator,
}

impl Spectrum {
    pub fn compute(model: &Model, cut: &AlphabetCutoff, params: &SpectralParams) -> Result<Self> {
        let grid = Grid::new(*model.system().domain(), params.grid_cells)?;
        let op = HatOperator::new(model, cut, grid)?;
        let mut eigen = power_iteration(&op, params.tol, params.max_iter)?;
        let dual = eigenmeasure(model, cut, &grid, params.atom_cap, params.tol, params.max_iter)?;
        let norm = dual.measure.integrate(|x| eigen.h.eval(x));
        eigen.h.scale(1.0 / norm);
        let lambda_gap = (eigen.lambda.ln() - dual.lambda_dual.ln()).abs();

        let (g1, g2) = model.branch_sum_derivative_bounds();
        let cell = grid.step();
        let h_min = eigen.h.inf();
        let mut ledger = ErrorLedger::new();
        ledger.add("alphabet tail", op.tail() * eigen.h.sup() / (eigen.lambda * h_min));
        ledger.add("interpolation", eigen.h.max_second_difference() / (8.0 * h_min));
        ledger.add("eigen residual", eigen.residual * eigen.h.sup() / h_min);
        ledger.add(
            "atom merge",
            0.5 * (g2 + g1 * g1) * (g1 * cell).exp() * dual.merge_variance,
        );
        ledger.add(
            "dual convergence",
            g1 * (g1 * model.system().domain().diam()).exp() * dual.change,
        );
        Ok(Spectrum {
            eigen,
            dual,
            lambda_gap,
            ledger,
            operator: op,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.eigen.lambda
    }

    pub fn lambda_dual(&self) -> f64 {
        self.dual.lambda_dual
    }

    pub fn measure(&self) -> &AtomMeasure {
        &self.dual.measure
    }

    pub fn h(&self) -> &GridFunction {
        &self.eigen.h
    }

    pub fn operator(&self) -> &HatOperator {
        &self.operator
    }

    /// Uncertainty of log λ: the primal/dual disagreement plus the ledger.
    pub fn log_lambda_uncertainty(&self) -> f64 {
        self.lambda_gap + self.ledger.total()
    }

    /// sup over cell midpoints of |L̂h/λ − h| / h: how well the
    /// interpolated h is an eigenfunction away from the nodes.
    pub fn off_node_residual(&self, model: &Model, lambda: f64) -> f64 {
        let grid = self.operator.grid();
        let alphabet = self.operator.alphabet();
        let lo = grid.domain().lo;
        let step = grid.step();
        let h = &self.eigen.h;
        (0..grid.cells())
            .into_par_iter()
            .map(|c| {
                let x = lo + (c as f64 + 0.5) * step;
                let lh: f64 = (1..=alphabet)
                    .map(|i| {
                        let (p, y) = model.step(i, x);
                        p.exp() * h.eval(y)
                    })
                    .sum();
                let hx = h.eval(x);
                (lh / lambda - hx).abs() / hx
            })
            .reduce(|| 0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsRow {
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub q: f64,
    pub p_est: f64,
    pub rows: Vec<BoundsRow>,
    pub violations: usize,
    pub pass: bool,
}

/// Sweeps L̂₀ⁿ𝟙 = e^{−nP}L̂ⁿ𝟙 for n ≤ n_max against [Q⁻¹, Q]. The slack
/// absorbs e^{n·δP} − 1, accumulated interpolation error and the alphabet
/// tail.
pub fn check_bounds_q(op: &HatOperator, q: f64, n_max: usize, p_est: f64, p_uncertainty: f64) -> BoundsReport {
    let mut g = GridFunction::constant(*op.grid(), 1.0);
    let scale = (-p_est).exp();
    let row = op.max_row_sum() * scale;
    let tail = op.tail() * scale;
    let mut accumulated = 0.0;
    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let interp = g.max_second_difference() / 8.0 * row;
        let tail_err = tail * g.sup();
        g = op.apply(&g);
        g.scale(scale);
        accumulated += (interp + tail_err) / g.inf();
        let slack = (n as f64 * p_uncertainty).exp_m1() + accumulated + 1e-12;
        let lower = q.recip() * (1.0 - slack);
        let upper = q * (1.0 + slack);
        let (min, max) = (g.inf(), g.sup());
        rows.push(BoundsRow {
            n,
            min,
            max,
            lower,
            upper,
            pass: min >= lower && max <= upper,
        });
    }
    let violations = rows.iter().filter(|r| !r.pass).count();
    BoundsReport {
        q,
        p_est,
        rows,
        violations,
        pass: violations == 0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceProfile {
    /// eₙ = ‖λ⁻ⁿL̂ⁿg − (∫g dm)·h‖_sup for n = 1..=n_max
    pub errors: Vec<f64>,
    /// exp of the least-squares slope of log eₙ over the second half
    pub rate: Option<f64>,
}

pub fn convergence_profile(
    op: &HatOperator,
    eigen: &EigenData,
    measure: &AtomMeasure,
    g: &GridFunction,
    n_max: usize,
) -> ConvergenceProfile {
    let mean = measure.integrate(|x| g.eval(x));
    let mut target = eigen.h.clone();
    target.scale(mean);
    let mut cur = g.clone();
    let mut errors = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        cur = op.apply(&cur);
        cur.scale(1.0 / eigen.lambda);
        errors.push(cur.distance(&target));
    }
    let start = n_max / 2;
    let pts: Vec<(f64, f64)> = errors
        .iter()
        .enumerate()
        .skip(start)
        .filter(|(_, e)| **e > 1e-13)
        .map(|(n, e)| ((n + 1) as f64, e.ln()))
        .collect();
    let rate = if pts.len() >= 2 {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        Some((sxy / sxx).exp())
    } else {
        None
    };
    ConvergenceProfile { errors, rate }
}
