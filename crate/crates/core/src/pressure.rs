//! Partition functions, two-sided pressure bounds, the periodic-orbit
//! pressure and positive-recurrence certificates.

use rayon::prelude::*;
use serde::Serialize;

use crate::branches::sweep;
use crate::error::{Error, Result};
use crate::ledger::{ErrorLedger, LogSumExp};
use crate::potential::Model;
use crate::shift::{periodic_words, AlphabetCutoff, Word};

/// Sample points for extrema over X and the padding that makes sampled
/// extrema of S_ω sound: the smaller of Lip(S_ω)·δ/2 and sup|S_ω''|·δ²/8
/// (a C² function exceeds its linear interpolant by at most the latter).
pub fn extremum_samples(model: &Model, resolution: usize) -> (Vec<f64>, f64) {
    let (g1, g2) = model.branch_sum_derivative_bounds();
    let d = model.system().domain();
    if g1 == 0.0 {
        return (vec![d.midpoint()], 0.0);
    }
    let k = resolution.max(2);
    let pts = d.samples(k);
    let delta = d.diam() / (k - 1) as f64;
    let pad = (g1 * delta / 2.0).min(g2 * delta * delta / 8.0);
    (pts, pad)
}

/// Padding for sampled extrema of log L̂ⁿ𝟙(x) − log L̂ⁿ⁻¹𝟙(x). Each term is
/// log Σ e^{S_ω}, whose second derivative is a weighted variance of S_ω'
/// plus a weighted mean of S_ω''.
fn ratio_padding(model: &Model, points: usize) -> f64 {
    let (g1, g2) = model.branch_sum_derivative_bounds();
    if g1 == 0.0 || points < 2 {
        return 0.0;
    }
    let delta = model.system().domain().diam() / (points - 1) as f64;
    let per_log = (g1 * g1 + g2) * delta * delta / 8.0;
    (2.0 * per_log).min(2.0 * g1 * delta / 2.0)
}

/// Default number of sample points for extrema over X.
pub const EXTREMUM_RESOLUTION: usize = 257;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PartitionLevel {
    pub n: usize,
    /// log Σ_{|ω|=n} sup_X e^{S_ω}
    pub log_sup: f64,
    /// log Σ_{|ω|=n} inf_X e^{S_ω}
    pub log_inf: f64,
    /// bound on the words with a symbol beyond the cutoff, (H + T)ⁿ − Hⁿ
    pub tail: f64,
    /// inf_X log(L̂ⁿ𝟙/L̂ⁿ⁻¹𝟙), a lower bound for log λ
    pub ratio_lower: f64,
    /// sup_X log((L̂ⁿ𝟙 + tail)/L̂ⁿ⁻¹𝟙), an upper bound for log λ
    pub ratio_upper: f64,
}

/// Largest n ≤ n_max whose enumeration (all lengths up to n) fits the cap.
pub fn affordable_depth(model: &Model, cut: &AlphabetCutoff, n_max: usize) -> usize {
    let cut = model.effective_cutoff(cut);
    (0..=n_max)
        .take_while(|&n| cut.check(cut.count_up_to(n)).is_ok())
        .last()
        .unwrap_or(0)
}

/// Partition sums for n = 1..=n_max in one enumeration.
///
/// Besides Σ sup_X e^{S_ω} and Σ inf_X e^{S_ω} this tracks L̂ⁿ𝟙(x) =
/// Σ_{|ω|=n} e^{S_ω(x)} at every sample point: if c·g ≤ L̂g ≤ C·g for a
/// positive g then c ≤ λ ≤ C, and g = L̂ⁿ⁻¹𝟙 makes the bracket shrink
/// exponentially in n.
pub fn partition_levels(model: &Model, cut: &AlphabetCutoff, n_max: usize) -> Result<Vec<PartitionLevel>> {
    partition_levels_with(model, cut, n_max, EXTREMUM_RESOLUTION)
}

pub fn partition_levels_with(
    model: &Model,
    cut: &AlphabetCutoff,
    n_max: usize,
    resolution: usize,
) -> Result<Vec<PartitionLevel>> {
    let ecut = model.effective_cutoff(cut);
    ecut.check(ecut.count_up_to(n_max))?;
    let alphabet = ecut.symbols();
    let (pts, pad) = extremum_samples(model, resolution);
    let k = pts.len();
    struct Acc {
        sup: Vec<LogSumExp>,
        inf: Vec<LogSumExp>,
        at: Vec<LogSumExp>,
    }
    let blocks = sweep(
        model,
        alphabet,
        n_max,
        &pts,
        || Acc {
            sup: vec![LogSumExp::new(); n_max + 1],
            inf: vec![LogSumExp::new(); n_max + 1],
            at: vec![LogSumExp::new(); (n_max + 1) * k],
        },
        |acc, b| {
            let n = b.len();
            let (lo, hi) = b.s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
            acc.sup[n].push(hi + pad);
            acc.inf[n].push(lo - pad);
            for (slot, &v) in acc.at[n * k..(n + 1) * k].iter_mut().zip(b.s) {
                slot.push(v);
            }
        },
    );
    let mut sup = vec![LogSumExp::new(); n_max + 1];
    let mut inf = vec![LogSumExp::new(); n_max + 1];
    let mut at = vec![LogSumExp::new(); (n_max + 1) * k];
    for block in &blocks {
        for n in 0..=n_max {
            sup[n].merge(&block.sup[n]);
            inf[n].merge(&block.inf[n]);
        }
        for (a, b) in at.iter_mut().zip(&block.at) {
            a.merge(b);
        }
    }
    let head: f64 = (1..=alphabet).map(|i| model.potential_range(i).1.exp()).sum();
    let t = model.exp_tail(cut)?;
    let rpad = ratio_padding(model, k);
    let log_at = |n: usize, j: usize| if n == 0 { 0.0 } else { at[n * k + j].value() };
    Ok((1..=n_max)
        .map(|n| {
            let tail = (head + t).powi(n as i32) - head.powi(n as i32);
            let (mut rl, mut ru) = (f64::INFINITY, f64::NEG_INFINITY);
            for j in 0..k {
                let (cur, prev) = (log_at(n, j), log_at(n - 1, j));
                rl = rl.min(cur - prev);
                ru = ru.max(cur + (tail * (-cur).exp()).ln_1p() - prev);
            }
            PartitionLevel {
                n,
                log_sup: sup[n].value(),
                log_inf: inf[n].value(),
                tail,
                ratio_lower: rl - rpad,
                ratio_upper: ru + rpad,
            }
        })
        .collect())
}

/// log Σ_{|ω|=n} sup_X e^{S_ω(φ)} over {1..N}ⁿ, and the bound on the omitted
/// words.
pub fn partition_function(model: &Model, n: usize, cut: &AlphabetCutoff) -> Result<(f64, f64)> {
    if n == 0 {
        return Ok((0.0, 0.0));
    }
    let lv = partition_levels(model, cut, n)?;
    let last = lv[n - 1];
    Ok((last.log_sup, last.tail))
}

/// π(ρ^∞) as the fixed point of φ_ρ, iterated until the contraction bound
/// s^{k|ρ|}·diam(X) drops below 10⁻¹².
pub fn periodic_point(model: &Model, rho: &Word) -> Result<f64> {
    let sys = model.system();
    let d = sys.domain();
    let s = sys.contraction();
    let per = s.powi(rho.len() as i32);
    let mut x = d.midpoint();
    if rho.is_empty() {
        return Err(Error::InvalidParameter("periodic point of the empty word".into()));
    }
    let mut bound = d.diam();
    let mut guard = 0;
    while bound >= 1e-12 && guard < 100_000 {
        x = sys.apply_word(rho, x)?;
        bound *= per;
        guard += 1;
        if per == 0.0 {
            break;
        }
    }
    Ok(x)
}

/// log Z_n(φ, i) = log Σ exp(S_ρ(φ)(π(ρ^∞))) over words ρ of length n with
/// ρ₁ = i.
pub fn periodic_partition_function(model: &Model, i: u32, n: usize, cut: &AlphabetCutoff) -> Result<f64> {
    model.check_symbol(i)?;
    let ecut = model.effective_cutoff(cut);
    if i > ecut.symbols() {
        return Err(Error::SymbolOutOfRange {
            symbol: i,
            size: ecut.symbols(),
        });
    }
    let words: Vec<Word> = periodic_words(i, n, &ecut)?.collect();
    let terms: Vec<f64> = words
        .par_iter()
        .map(|rho| {
            let x = periodic_point(model, rho)?;
            model.branch_sum(rho, x)
        })
        .collect::<Result<_>>()?;
    let mut acc = LogSumExp::new();
    terms.iter().for_each(|&v| acc.push(v));
    Ok(acc.value())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PressureEstimate {
    pub n_used: usize,
    pub cutoff: u32,
    /// best rigorous upper bound on P
    pub upper: f64,
    /// best rigorous lower bound on P
    pub lower: f64,
    /// log(Zₙ/Zₙ₋₁) at n_used, clamped into [lower, upper]
    pub point: f64,
    /// sup over n of (1/n)·log Σ inf_X e^{S_ω}
    pub lower_inf_sum: f64,
    /// sup over probes of (1/n)(log Zₙ(φ,i) − 2 log Q)
    pub lower_periodic: Option<f64>,
    /// min over n of (1/n)·log(Zₙ + tail)
    pub upper_subadditive: f64,
    /// best (inf_X, sup_X) of log(L̂ⁿ𝟙/L̂ⁿ⁻¹𝟙) over n
    pub ratio_bounds: (f64, f64),
    pub levels: Vec<PartitionLevel>,
    pub ledger: ErrorLedger,
}

impl PressureEstimate {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, p: f64) -> bool {
        self.lower <= p && p <= self.upper
    }
}

/// Rounding allowance added to both ends of the pressure interval.
fn rounding(v: f64) -> f64 {
    1e-14 * (1.0 + v.abs())
}

pub fn pressure_estimate(
    model: &Model,
    cut: &AlphabetCutoff,
    n_max: usize,
    probe_symbols: &[u32],
) -> Result<PressureEstimate> {
    if n_max < 1 {
        return Err(Error::InvalidParameter("pressure needs n_max ≥ 1".into()));
    }
    let n_used = affordable_depth(model, cut, n_max);
    if n_used == 0 {
        let ecut = model.effective_cutoff(cut);
        return Err(Error::ResourceLimit {
            requested: ecut.count_up_to(1),
            cap: ecut.word_cap(),
        });
    }
    let levels = partition_levels(model, cut, n_used)?;
    let mut upper = f64::INFINITY;
    let mut lower_inf = f64::NEG_INFINITY;
    let mut tail_effect = 0.0f64;
    let mut ratio_lower = f64::NEG_INFINITY;
    let mut ratio_upper = f64::INFINITY;
    for lv in &levels {
        let n = lv.n as f64;
        let z = lv.log_sup.exp();
        let u = if z.is_finite() && z > 0.0 {
            (z + lv.tail).ln() / n
        } else {
            lv.log_sup / n + (lv.tail * (-lv.log_sup).exp()).ln_1p() / n
        };
        if u < upper {
            upper = u;
            tail_effect = u - lv.log_sup / n;
        }
        lower_inf = lower_inf.max(lv.log_inf / n);
        ratio_lower = ratio_lower.max(lv.ratio_lower);
        ratio_upper = ratio_upper.min(lv.ratio_upper);
    }
    let log_q = model.distortion().log_q();
    let ecut = model.effective_cutoff(cut);
    let mut lower_periodic: Option<f64> = None;
    for &i in probe_symbols {
        if i == 0 || i > ecut.symbols() {
            continue;
        }
        let zp = periodic_partition_function(model, i, n_used, cut)?;
        let b = (zp - 2.0 * log_q) / n_used as f64;
        lower_periodic = Some(lower_periodic.map_or(b, |p: f64| p.max(b)));
    }
    let last = levels[n_used - 1];
    let raw_point = if n_used >= 2 {
        last.log_sup - levels[n_used - 2].log_sup
    } else {
        last.log_sup
    };
    let upper_sub = upper;
    let upper = upper.min(ratio_upper);
    let upper = upper + rounding(upper);
    let lower_raw = lower_periodic.map_or(lower_inf, |p| p.max(lower_inf)).max(ratio_lower);
    let lower = lower_raw - rounding(lower_raw);
    let point = raw_point.clamp(lower.min(upper), upper);
    let (pts, pad) = extremum_samples(model, EXTREMUM_RESOLUTION);
    let ledger = ErrorLedger::new()
        .with("alphabet tail", tail_effect)
        .with("extremum padding", 2.0 * pad)
        .with("ratio padding", 2.0 * ratio_padding(model, pts.len()))
        .with("rounding", rounding(upper) + rounding(lower_raw));
    Ok(PressureEstimate {
        n_used,
        cutoff: ecut.symbols(),
        upper,
        lower,
        point,
        lower_inf_sum: lower_inf,
        lower_periodic,
        upper_subadditive: upper_sub,
        ratio_bounds: (ratio_lower, ratio_upper),
        levels,
        ledger,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    /// exceeded the threshold by less than a factor of 2
    Flag,
    Fail,
}

impl Verdict {
    pub fn from_ratio(value: f64, threshold: f64) -> Verdict {
        if value <= threshold {
            Verdict::Pass
        } else if value <= 2.0 * threshold {
            Verdict::Flag
        } else {
            Verdict::Fail
        }
    }

    pub fn is_fail(self) -> bool {
        self == Verdict::Fail
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DefsRow {
    pub n: usize,
    /// (1/n)·log Zₙ(φ)
    pub full: f64,
    /// (1/(n+1))·log Z_{n+1}(φ, i)
    pub periodic: f64,
    pub gap: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DefsReport {
    pub symbol: u32,
    pub rows: Vec<DefsRow>,
    pub verdict: Verdict,
}

impl DefsReport {
    pub fn gap(&self, n: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.n == n).map(|r| r.gap)
    }
}

/// gₙ = |(1/n)log Zₙ(φ) − (1/(n+1))log Z_{n+1}(φ,i)| against
/// (2 log Q + |log m̂[i]|)/n, with m̂[i] ≥ e^{inf φ⁽ⁱ⁾ − P}.
pub fn check_pressure_defs(model: &Model, cut: &AlphabetCutoff, i: u32, n_max: usize) -> Result<DefsReport> {
    let levels = partition_levels(model, cut, n_max)?;
    let p_upper = levels
        .iter()
        .map(|l| (l.log_sup.exp() + l.tail).ln() / l.n as f64)
        .fold(f64::INFINITY, f64::min);
    model.check_symbol(i)?;
    let log_mass = (model.potential_range(i).0 - p_upper).min(0.0);
    let log_q = model.distortion().log_q();
    let mut rows = Vec::with_capacity(n_max);
    for lv in &levels {
        let n = lv.n;
        let full = lv.log_sup / n as f64;
        let periodic = periodic_partition_function(model, i, n + 1, cut)? / (n + 1) as f64;
        let gap = (full - periodic).abs();
        let threshold = (2.0 * log_q + log_mass.abs()) / n as f64 + rounding(full);
        rows.push(DefsRow {
            n,
            full,
            periodic,
            gap,
            threshold,
            verdict: Verdict::from_ratio(gap, threshold),
        });
    }
    let verdict = rows.iter().map(|r| r.verdict).fold(Verdict::Pass, worst);
    Ok(DefsReport {
        symbol: i,
        rows,
        verdict,
    })
}

pub fn worst(a: Verdict, b: Verdict) -> Verdict {
    use Verdict::*;
    match (a, b) {
        (Fail, _) | (_, Fail) => Fail,
        (Flag, _) | (_, Flag) => Flag,
        _ => Pass,
    }
}

/// Inputs from the spectral and Gibbs computations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RecurrenceInputs {
    pub lambda: f64,
    /// bound on |log λ − P|
    pub log_lambda_uncertainty: f64,
    /// m̂_φ([i])
    pub m_hat: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecurrenceRow {
    pub n: usize,
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecurrenceCertificate {
    pub symbol: u32,
    pub n_max: usize,
    pub q: f64,
    /// (Q⁻¹·m̂[i], Q²)
    pub bounds: (f64, f64),
    pub rows: Vec<RecurrenceRow>,
    pub pass: bool,
}

/// rₙ = Zₙ(φ,i)·λ⁻ⁿ ∈ [Q⁻¹·m̂[i]·(1 − slack), Q²·(1 + slack)] for n = 1..=n_max.
pub fn certify_recurrence(
    model: &Model,
    cut: &AlphabetCutoff,
    i: u32,
    n_max: usize,
    inputs: &RecurrenceInputs,
) -> Result<RecurrenceCertificate> {
    let q = model.distortion().q;
    let ecut = model.effective_cutoff(cut);
    let head: f64 = (1..=ecut.symbols()).map(|j| model.potential_range(j).1.exp()).sum();
    let tail_rel = model.exp_tail(cut)? / head;
    let lo = inputs.m_hat / q;
    let hi = q * q;
    let log_lambda = inputs.lambda.ln();
    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let z = periodic_partition_function(model, i, n, cut)?;
        let ratio = (z - n as f64 * log_lambda).exp();
        let slack = (n as f64 * (inputs.log_lambda_uncertainty + tail_rel.ln_1p())).exp_m1() + 1e-12;
        let lower = lo * (1.0 - slack);
        let upper = hi * (1.0 + slack);
        rows.push(RecurrenceRow {
            n,
            ratio,
            lower,
            upper,
            pass: ratio >= lower && ratio <= upper,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(RecurrenceCertificate {
        symbol: i,
        n_max,
        q,
        bounds: (lo, hi),
        rows,
        pass,
    })
}
