//! Entropy of the invariant Gibbs measure, ∫φ dμ̂, the equilibrium identity
//! h + ∫φ = P and the three finiteness conditions for infinite alphabets.

use serde::Serialize;

use crate::error::Error;
use crate::gibbs::GibbsTable;
use crate::ledger::ErrorLedger;
use crate::potential::{Model, TailDecay};
use crate::shift::AlphabetCutoff;

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.ln()
    } else {
        0.0
    }
}

/// Hₙ = Σ_{|ω|=n} −μ̂[ω]·log μ̂[ω].
pub fn block_entropy(table: &GibbsTable, n: usize) -> f64 {
    table.level_mu(n).iter().map(|&p| plogp(p)).sum()
}

/// Σ_{i>N} −μ̂[i]·log μ̂[i], using μ̂[i] ≤ Q·e^{sup φ⁽ⁱ⁾ − P}; `None` when the
/// comparison is unavailable or −p log p is not monotone on the tail.
pub fn entropy_tail(model: &Model, cut: &AlphabetCutoff, p: f64) -> Option<f64> {
    let q = model.distortion().q;
    let t = match model.exp_tail(cut) {
        Ok(t) => t,
        Err(_) => return None,
    };
    if t == 0.0 {
        return Some(0.0);
    }
    let n = model.alphabet(cut);
    let first = q * (model.potential_range(n + 1).1 - p).exp();
    if first > (-1.0f64).exp() {
        return None;
    }
    let neglog = model.neglog_exp_tail(cut).ok()?;
    Some(q * (-p).exp() * (neglog + (p - q.ln()).max(0.0) * t))
}

/// H(α) over {1..N} plus the analytic tail bound.
pub fn partition_entropy(table: &GibbsTable, model: &Model, cut: &AlphabetCutoff) -> (f64, Option<f64>) {
    (block_entropy(table, 1), entropy_tail(model, cut, table.pressure))
}

/// Hₙ/n.
pub fn entropy_rate(table: &GibbsTable, n: usize) -> f64 {
    block_entropy(table, n) / n as f64
}

/// Hₙ − Hₙ₋₁, which decreases to the entropy of the shift.
pub fn conditional_entropy(table: &GibbsTable, n: usize) -> f64 {
    block_entropy(table, n) - block_entropy(table, n - 1)
}

/// Σ_{i>N} ∫_{[i]} |φ| dμ̂ ≤ Q·e^{−P}·Σ_{i>N} sup(−φ⁽ⁱ⁾)⁺·e^{sup φ⁽ⁱ⁾}.
pub fn integral_phi_tail(model: &Model, cut: &AlphabetCutoff, p: f64) -> Option<f64> {
    let q = model.distortion().q;
    model.neglog_exp_tail(cut).ok().map(|v| q * (-p).exp() * v)
}

/// ∫φ dμ̂ from the depth-d cylinders (the amalgamated potential is evaluated
/// exactly at every atom image) and its tail bound.
pub fn integral_phi(table: &GibbsTable, model: &Model, cut: &AlphabetCutoff, depth: usize) -> (f64, Option<f64>) {
    (
        table.integral_phi(depth.max(1)),
        integral_phi_tail(model, cut, table.pressure),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Finiteness {
    Finite,
    Infinite,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Condition {
    pub head: f64,
    pub tail: Option<f64>,
    pub verdict: Finiteness,
    /// > 0 when the tail comparison series converges, ≤ 0 when it diverges
    pub margin: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FinitenessReport {
    /// ∫ −φ dμ̂ < ∞
    pub a: Condition,
    /// Σᵢ inf(−φ|[i])·exp(inf φ|[i]) < ∞
    pub b: Condition,
    /// H(α) < ∞
    pub c: Condition,
    /// all decisive verdicts agree
    pub coherent: bool,
}

fn condition(head: f64, tail: Option<f64>, decay: Option<TailDecay>) -> Condition {
    let margin = decay.map(|d| d.margin());
    let verdict = match (tail, margin) {
        (_, Some(m)) if m <= 0.0 => Finiteness::Infinite,
        (Some(t), Some(_)) if t.is_finite() => Finiteness::Finite,
        _ => Finiteness::Inconclusive,
    };
    Condition {
        head,
        tail,
        verdict,
        margin,
    }
}

/// The three equivalent finiteness conditions with head sums over {1..N}
/// and analytic tails.
pub fn check_finiteness(model: &Model, table: &GibbsTable, cut: &AlphabetCutoff) -> FinitenessReport {
    let n = table.alphabet;
    let p = table.pressure;
    let decay = analytic_decay(model, cut);

    let mu1 = table.level_mu(1);
    let head_a: f64 = (1..=n)
        .map(|i| {
            let (lo, _) = model.potential_range(i);
            -lo * mu1[i as usize - 1]
        })
        .sum();
    let head_b: f64 = (1..=n)
        .map(|i| {
            let (lo, hi) = model.potential_range(i);
            -hi * lo.exp()
        })
        .sum();
    let (head_c, tail_c) = partition_entropy(table, model, cut);
    let tail_a = integral_phi_tail(model, cut, p);
    let tail_b = model.neglog_exp_tail(cut).ok();

    let a = condition(head_a, tail_a, decay);
    let b = condition(head_b, tail_b, decay);
    let c = condition(head_c, tail_c, decay);
    let decisive: Vec<Finiteness> = [a.verdict, b.verdict, c.verdict]
        .into_iter()
        .filter(|v| *v != Finiteness::Inconclusive)
        .collect();
    let coherent = decisive.windows(2).all(|w| w[0] == w[1]);
    FinitenessReport { a, b, c, coherent }
}

/// The tail decay when an analytic comparison exists for the family.
fn analytic_decay(model: &Model, cut: &AlphabetCutoff) -> Option<TailDecay> {
    match model.exp_tail(cut) {
        Ok(_) | Err(Error::Divergent(_)) => Some(model.tail_decay(cut)),
        Err(_) => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EntropyRow {
    pub n: usize,
    /// Hₙ/n
    pub rate: f64,
    /// Hₙ − Hₙ₋₁
    pub conditional: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub h_alpha: f64,
    pub h_alpha_tail: Option<f64>,
    pub int_phi: f64,
    pub int_phi_tail: Option<f64>,
    pub entropy_n: Vec<EntropyRow>,
    /// Hₙ − Hₙ₋₁ at the table depth
    pub entropy: f64,
    pub pressure_ref: f64,
    /// |entropy + ∫φ − P|
    pub defect: f64,
    /// |H(α) + ∫φ − P|, exact for Bernoulli measures
    pub defect_alpha: f64,
    /// entropy + ∫φ − P_upper, must not exceed the ledger
    pub variational_excess: f64,
    pub variational_ok: bool,
    /// Hₙ/n non-increasing up to ledger
    pub rate_monotone: bool,
    pub ledger: ErrorLedger,
    pub pass: bool,
}

/// Assembles the equilibrium report from one table snapshot.
pub fn equilibrium_defect(
    model: &Model,
    table: &GibbsTable,
    cut: &AlphabetCutoff,
    p_upper: f64,
    log_lambda_uncertainty: f64,
) -> EquilibriumReport {
    let depth = table.depth.max(1);
    let p = table.pressure;
    let (h_alpha, h_alpha_tail) = partition_entropy(table, model, cut);
    let (int_phi, int_phi_tail) = integral_phi(table, model, cut, depth);
    let entropy_n: Vec<EntropyRow> = (1..=depth)
        .map(|n| EntropyRow {
            n,
            rate: entropy_rate(table, n),
            conditional: conditional_entropy(table, n),
        })
        .collect();
    let entropy = entropy_n[depth - 1].conditional;

    // remaining gap Hₙ − Hₙ₋₁ − h, extrapolated geometrically from the
    // last two decrements
    let dec = |n: usize| (entropy_n[n - 2].conditional - entropy_n[n - 1].conditional).max(0.0);
    let remainder = match depth {
        1 => 0.0,
        2 => dec(2),
        _ => {
            let (d1, d2) = (dec(depth - 1), dec(depth));
            if d1 > 0.0 && d2 < d1 {
                let r = d2 / d1;
                d2 * r / (1.0 - r)
            } else {
                d2
            }
        }
    };
    let rel = depth as f64 * (table.ledger.mass_step + table.ledger.tail) + 2.0 * table.ledger.density_step;
    let mut ledger = ErrorLedger::new();
    ledger.add("entropy convergence", remainder);
    ledger.add(
        "table error in entropy",
        rel * (block_entropy(table, depth) + 1.0) * 2.0,
    );
    ledger.add("table error in ∫φ", rel * int_phi.abs());
    ledger.add("pressure", log_lambda_uncertainty);
    ledger.add("entropy tail", h_alpha_tail.unwrap_or(f64::INFINITY) * depth as f64);
    ledger.add("∫φ tail", int_phi_tail.unwrap_or(f64::INFINITY));
    ledger.add("rounding", 1e-12 * (1.0 + int_phi.abs() + entropy.abs()));

    let defect = (entropy + int_phi - p).abs();
    let defect_alpha = (h_alpha + int_phi - p).abs();
    let total = ledger.total();
    let variational_excess = entropy + int_phi - p_upper;
    let variational_ok = variational_excess <= total;
    let rate_monotone = entropy_n
        .windows(2)
        .all(|w| w[1].rate <= w[0].rate + rel * (w[0].rate.abs() + 1.0) + 1e-12);
    EquilibriumReport {
        h_alpha,
        h_alpha_tail,
        int_phi,
        int_phi_tail,
        entropy_n,
        entropy,
        pressure_ref: p,
        defect,
        defect_alpha,
        variational_excess,
        variational_ok,
        rate_monotone,
        pass: defect <= total && variational_ok,
        ledger,
    }
}
