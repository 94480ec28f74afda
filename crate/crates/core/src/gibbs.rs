//! Cylinder measures m̂[ω] = ∫ e^{S_ω − P|ω|} dm, the invariant measure
//! μ̂ = h·m̂, and finite checks of their defining properties.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::branches::sweep;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::ifs::verify_separation;
use crate::ledger::ErrorLedger;
use crate::potential::Model;
use crate::pressure::{extremum_samples, Verdict, EXTREMUM_RESOLUTION};
use crate::shift::{AlphabetCutoff, Word};
use crate::transfer::{AtomMeasure, Spectrum};

/// m̂[ω] = Σ_atoms w·e^{S_ω(x) − P|ω|}.
pub fn cylinder_mass(model: &Model, word: &Word, m: &AtomMeasure, p_est: f64) -> Result<f64> {
    if word.is_empty() {
        return Ok(m.mass());
    }
    let shift = p_est * word.len() as f64;
    m.atoms()
        .iter()
        .map(|a| Ok(a.w * (model.branch_sum(word, a.x)? - shift).exp()))
        .sum()
}

/// ∫_{[ω]} h dm̂ = Σ_atoms w·e^{S_ω(x) − P|ω|}·h(φ_ω(x)).
pub fn invariant_mass(model: &Model, word: &Word, m: &AtomMeasure, h: &GridFunction, p_est: f64) -> Result<f64> {
    let shift = p_est * word.len() as f64;
    m.atoms()
        .iter()
        .map(|a| {
            let s = model.branch_sum(word, a.x)?;
            let y = model.system().apply_word(word, a.x)?;
            Ok(a.w * (s - shift).exp() * h.eval(y))
        })
        .sum()
}

/// Relative error bounds shared by every table entry.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableLedger {
    /// relative error of one right-extension step of m̂
    pub mass_step: f64,
    /// relative error of L̂₀h = h along branches
    pub density_step: f64,
    /// Σ_{i>N} m̂[ωi] ≤ tail·m̂[ω]
    pub tail: f64,
    /// padding of the sampled sup_X S_ω
    pub sup_padding: f64,
    pub sources: ErrorLedger,
}

/// m̂ and μ̂ on every cylinder of length ≤ depth over {1..N}.
#[derive(Clone, Debug, Serialize)]
pub struct GibbsTable {
    pub alphabet: u32,
    pub depth: usize,
    /// log λ_dual, the P used in every weight
    pub pressure: f64,
    pub q: f64,
    m_hat: Vec<Vec<f64>>,
    mu_hat: Vec<Vec<f64>>,
    sup_s: Vec<Vec<f64>>,
    /// Σ_{|ω|=d} ∫_{[ω]} φ dμ̂ per depth
    int_phi: Vec<f64>,
    /// per-depth normalizer of μ̂ before normalization
    pub mu_norm: Vec<f64>,
    pub ledger: TableLedger,
}

struct Row {
    depth: usize,
    rank: usize,
    m: f64,
    mu: f64,
    phi: f64,
    sup: f64,
}

impl GibbsTable {
    pub fn build(model: &Model, cut: &AlphabetCutoff, depth: usize, spectrum: &Spectrum) -> Result<Self> {
        let ecut = model.effective_cutoff(cut);
        ecut.check(ecut.count_up_to(depth))?;
        let alphabet = ecut.symbols();
        let m = spectrum.measure();
        let h = spectrum.h();
        let p = spectrum.lambda_dual().ln();
        let weights = m.weights();
        let n_atoms = weights.len();
        let (samples, pad) = extremum_samples(model, EXTREMUM_RESOLUTION);
        let mut points = m.positions();
        points.extend_from_slice(&samples);

        let blocks = sweep(model, alphabet, depth, &points, Vec::new, |acc: &mut Vec<Row>, b| {
            let d = b.len();
            let shift = p * d as f64;
            let (mut mass, mut mu, mut phi) = (0.0, 0.0, 0.0);
            for (a, w) in weights.iter().enumerate() {
                let e = w * (b.s[a] - shift).exp();
                let hy = e * h.eval(b.y[a]);
                mass += e;
                mu += hy;
                phi += hy * b.first[a];
            }
            let sup = b.s[n_atoms..].iter().copied().fold(f64::NEG_INFINITY, f64::max) + pad;
            acc.push(Row {
                depth: d,
                rank: b.rank(alphabet),
                m: mass,
                mu,
                phi,
                sup,
            });
        });

        let size = |d: usize| (alphabet as usize).pow(d as u32);
        let mut m_hat: Vec<Vec<f64>> = (0..=depth).map(|d| vec![0.0; size(d)]).collect();
        let mut mu_hat = m_hat.clone();
        let mut sup_s = m_hat.clone();
        let mut int_phi = vec![0.0; depth + 1];
        m_hat[0][0] = m.mass();
        mu_hat[0][0] = m.integrate(|x| h.eval(x));
        for row in blocks.iter().flatten() {
            m_hat[row.depth][row.rank] = row.m;
            mu_hat[row.depth][row.rank] = row.mu;
            sup_s[row.depth][row.rank] = row.sup;
        }
        // the per-depth φ integrals are summed in lexicographic order
        let mut phi_rows: Vec<Vec<f64>> = (0..=depth).map(|d| vec![0.0; size(d)]).collect();
        for row in blocks.iter().flatten() {
            phi_rows[row.depth][row.rank] = row.phi;
        }
        let mut mu_norm = vec![1.0; depth + 1];
        for d in 0..=depth {
            let total: f64 = mu_hat[d].iter().sum();
            mu_norm[d] = total;
            mu_hat[d].iter_mut().for_each(|v| *v /= total);
            int_phi[d] = phi_rows[d].iter().sum::<f64>() / total;
        }

        let q = model.distortion().q;
        let tail_t = model.exp_tail(cut)?;
        let tail = q * tail_t / spectrum.lambda_dual();
        let l = &spectrum.ledger;
        let mass_step = l.get("atom merge").unwrap_or(0.0) + l.get("dual convergence").unwrap_or(0.0) + 1e-13;
        let lam_ratio = (spectrum.lambda() / spectrum.lambda_dual() - 1.0).abs();
        let h_min = h.inf();
        let density_step = spectrum.off_node_residual(model, spectrum.lambda())
            + (spectrum.eigen.residual * h.sup() + h.max_second_difference() / 4.0) / h_min
            + lam_ratio
            + 1e-13;
        let sources = ErrorLedger::new()
            .with("atom merge", l.get("atom merge").unwrap_or(0.0))
            .with("dual convergence", l.get("dual convergence").unwrap_or(0.0))
            .with("eigenfunction off-node residual", density_step - lam_ratio)
            .with("primal/dual eigenvalue mismatch", lam_ratio)
            .with("alphabet tail", tail)
            .with("sup padding", pad);
        Ok(GibbsTable {
            alphabet,
            depth,
            pressure: p,
            q,
            m_hat,
            mu_hat,
            sup_s,
            int_phi,
            mu_norm,
            ledger: TableLedger {
                mass_step,
                density_step,
                tail,
                sup_padding: pad,
                sources,
            },
        })
    }

    fn index(&self, word: &Word) -> Option<(usize, usize)> {
        if word.len() > self.depth || word.max_symbol() > self.alphabet {
            return None;
        }
        Some((word.len(), word.lex_rank(self.alphabet)))
    }

    pub fn m_hat(&self, word: &Word) -> Option<f64> {
        self.index(word).map(|(d, r)| self.m_hat[d][r])
    }

    pub fn mu_hat(&self, word: &Word) -> Option<f64> {
        self.index(word).map(|(d, r)| self.mu_hat[d][r])
    }

    pub fn level_m(&self, d: usize) -> &[f64] {
        &self.m_hat[d]
    }

    pub fn level_mu(&self, d: usize) -> &[f64] {
        &self.mu_hat[d]
    }

    /// ∫φ dμ̂ assembled from the depth-d cylinders.
    pub fn integral_phi(&self, d: usize) -> f64 {
        self.int_phi[d]
    }

    /// Absolute error bound for m̂[ω].
    pub fn mass_ledger(&self, d: usize, value: f64) -> f64 {
        value * (d as f64 * (self.ledger.mass_step + self.ledger.tail)) + 1e-15
    }

    /// Absolute error bound for μ̂[ω].
    pub fn invariant_ledger(&self, d: usize, value: f64) -> f64 {
        value * (d as f64 * (self.ledger.mass_step + self.ledger.tail) + 2.0 * self.ledger.density_step) + 1e-15
    }

    fn size(&self, d: usize) -> usize {
        (self.alphabet as usize).pow(d as u32)
    }

    /// JSON-lines records {word, m_hat, mu_hat, ledger} for 1 ≤ |ω| ≤ depth.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Record<'a> {
            word: &'a [u32],
            m_hat: f64,
            mu_hat: f64,
            ledger: f64,
        }
        for d in 1..=self.depth {
            for r in 0..self.size(d) {
                let w = Word::from_lex_rank(r, d, self.alphabet);
                let (m, mu) = (self.m_hat[d][r], self.mu_hat[d][r]);
                let rec = Record {
                    word: w.symbols(),
                    m_hat: m,
                    mu_hat: mu,
                    ledger: self.mass_ledger(d, m).max(self.invariant_ledger(d, mu)),
                };
                serde_json::to_writer(&mut out, &rec)?;
                out.write_all(b"\n")?;
            }
        }
        Ok(())
    }
}

/// Largest |Σ_i m̂[ωi] − m̂[ω]| and how far it exceeds the allowance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DefectReport {
    pub max_defect: f64,
    pub max_excess: f64,
    pub checked: usize,
    pub pass: bool,
}

impl DefectReport {
    fn new() -> Self {
        DefectReport {
            max_defect: 0.0,
            max_excess: 0.0,
            checked: 0,
            pass: true,
        }
    }

    fn record(&mut self, defect: f64, allowance: f64) {
        self.checked += 1;
        self.max_defect = self.max_defect.max(defect);
        let excess = (defect - allowance).max(0.0);
        self.max_excess = self.max_excess.max(excess);
        self.pass = self.max_excess == 0.0;
    }
}

/// Right-extension consistency Σ_i m̂[ωi] = m̂[ω].
pub fn check_kolmogorov_consistency(table: &GibbsTable) -> DefectReport {
    let a = table.alphabet as usize;
    let mut rep = DefectReport::new();
    for d in 0..table.depth {
        for r in 0..table.size(d) {
            let parent = table.m_hat[d][r];
            let children: f64 = table.m_hat[d + 1][r * a..(r + 1) * a].iter().sum();
            let allowance = parent * (table.ledger.mass_step + table.ledger.tail) + 1e-15;
            rep.record((children - parent).abs(), allowance);
        }
    }
    rep
}

/// Shift invariance Σ_i μ̂[iω] = μ̂[ω] for |ω| < depth.
pub fn check_shift_invariance(table: &GibbsTable, depth: usize) -> DefectReport {
    let a = table.alphabet as usize;
    let depth = depth.min(table.depth);
    let mut rep = DefectReport::new();
    for d in 0..depth {
        let stride = table.size(d);
        for r in 0..stride {
            let target = table.mu_hat[d][r];
            let sum: f64 = (0..a).map(|i| table.mu_hat[d + 1][i * stride + r]).sum();
            let allowance = target * (2.0 * table.ledger.density_step + table.q * table.ledger.tail) + 1e-15;
            rep.record((sum - target).abs(), allowance);
        }
    }
    rep
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub checked: usize,
    pub skipped: usize,
    /// outside the bound but within a factor of 2
    pub flagged: usize,
    pub violations: usize,
    pub verdict: Verdict,
}

fn ratio_report(ratios: impl Iterator<Item = Option<(f64, f64)>>, lower: f64, upper: f64) -> RatioReport {
    let mut rep = RatioReport {
        min_ratio: f64::INFINITY,
        max_ratio: f64::NEG_INFINITY,
        lower,
        upper,
        checked: 0,
        skipped: 0,
        flagged: 0,
        violations: 0,
        verdict: Verdict::Pass,
    };
    for item in ratios {
        let Some((ratio, slack)) = item else {
            rep.skipped += 1;
            continue;
        };
        rep.checked += 1;
        rep.min_ratio = rep.min_ratio.min(ratio);
        rep.max_ratio = rep.max_ratio.max(ratio);
        let (lo, hi) = (lower * (1.0 - slack), upper * (1.0 + slack));
        if ratio < lo / 2.0 || ratio > 2.0 * hi {
            rep.violations += 1;
        } else if ratio < lo || ratio > hi {
            rep.flagged += 1;
        }
    }
    rep.verdict = if rep.violations > 0 {
        Verdict::Fail
    } else if rep.flagged > 0 {
        Verdict::Flag
    } else {
        Verdict::Pass
    };
    rep
}

/// μ̂[ω]/m̂[ω] ∈ [Q⁻¹, Q]; cylinders with m̂ below 10× their ledger are skipped.
pub fn check_density_ratio(table: &GibbsTable) -> RatioReport {
    let q = table.q;
    let it = (1..=table.depth).flat_map(move |d| {
        (0..table.size(d)).map(move |r| {
            let (m, mu) = (table.m_hat[d][r], table.mu_hat[d][r]);
            let ledger = table.mass_ledger(d, m);
            if !(m > 10.0 * ledger) {
                return None;
            }
            let slack = (table.mass_ledger(d, m) + table.invariant_ledger(d, mu)) / mu.min(m) + 1e-12;
            Some((mu / m, slack))
        })
    });
    ratio_report(it, 1.0 / q, q)
}

/// m̂[ω]/e^{sup_X S_ω − P|ω|} ∈ [Q⁻¹, 1].
pub fn check_gibbs_property(table: &GibbsTable) -> RatioReport {
    let q = table.q;
    let pad = table.ledger.sup_padding;
    let it = (1..=table.depth).flat_map(move |d| {
        (0..table.size(d)).map(move |r| {
            let m = table.m_hat[d][r];
            let ledger = table.mass_ledger(d, m);
            if !(m > 10.0 * ledger) {
                return None;
            }
            let weight = (table.sup_s[d][r] - table.pressure * d as f64).exp();
            let slack = ledger / m + pad.exp_m1() + 1e-12;
            Some((m / weight, slack))
        })
    });
    ratio_report(it, 1.0 / q, 1.0)
}

/// m_φ(φ_ω(X)) = m̂[ω] on cylinders of length ≤ depth. Requires disjoint
/// first-level images.
pub fn check_pushforward(
    table: &GibbsTable,
    model: &Model,
    cut: &AlphabetCutoff,
    m: &AtomMeasure,
    cell: f64,
    depth: usize,
) -> Result<DefectReport> {
    if !verify_separation(model.system(), &model.effective_cutoff(cut)) {
        return Err(Error::Precondition(
            "the first-level images φ_i(X) are not pairwise disjoint".into(),
        ));
    }
    let mut rep = DefectReport::new();
    for d in 0..=depth.min(table.depth) {
        for r in 0..table.size(d) {
            let w = Word::from_lex_rank(r, d, table.alphabet);
            let iv = model.system().word_image(&w)?;
            let direct = m.mass_in(&iv);
            let boundary = m.mass_near(iv.lo, cell) + m.mass_near(iv.hi, cell);
            let target = table.m_hat[d][r];
            let allowance = boundary + table.mass_ledger(d, target) + d as f64 * table.ledger.tail;
            rep.record((direct - target).abs(), allowance);
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingReport {
    /// Q⁻¹m̂[τ] ≤ m̂(σ⁻ⁿ[τ]) ≤ Q·m̂[τ]
    pub preimage_checked: usize,
    pub preimage_violations: usize,
    pub preimage_ratio_range: (f64, f64),
    /// m̂[ωτ] ≤ (1 − (1 − m̂[τ])/(2Q))·m̂[ω]
    pub pair_checked: usize,
    pub pair_violations: usize,
    /// largest m̂[ωτ]/bound
    pub pair_max_ratio: f64,
    pub pass: bool,
}

/// Both finite mixing inequalities on every admissible cylinder
/// combination with n ≤ n_shift.
pub fn mixing_diagnostic(table: &GibbsTable, depth: usize, n_shift: usize) -> MixingReport {
    let q = table.q;
    let depth = depth.min(table.depth);
    let (mut pc, mut pv) = (0, 0);
    let mut range = (f64::INFINITY, f64::NEG_INFINITY);
    for n in 1..=n_shift.min(depth) {
        for t in 1..=depth - n {
            let stride = table.size(t);
            for r in 0..stride {
                let base = table.m_hat[t][r];
                let pre: f64 = (0..table.size(n)).map(|u| table.m_hat[n + t][u * stride + r]).sum();
                if base <= 0.0 {
                    continue;
                }
                let slack = (n + t) as f64 * (table.ledger.mass_step + table.ledger.tail) + 1e-12;
                let ratio = pre / base;
                range = (range.0.min(ratio), range.1.max(ratio));
                pc += 1;
                if ratio < (1.0 - slack) / q || ratio > q * (1.0 + slack) {
                    pv += 1;
                }
            }
        }
    }
    let (mut qc, mut qv) = (0, 0);
    let mut worst = 0.0f64;
    for a in 1..depth {
        for b in 1..=depth - a {
            let stride = table.size(b);
            for wr in 0..table.size(a) {
                let mw = table.m_hat[a][wr];
                for tr in 0..stride {
                    let mt = table.m_hat[b][tr];
                    let joint = table.m_hat[a + b][wr * stride + tr];
                    let bound = (1.0 - (1.0 - mt) / (2.0 * q)) * mw;
                    let slack = (a + b) as f64 * (table.ledger.mass_step + table.ledger.tail) + 1e-12;
                    qc += 1;
                    if bound > 0.0 {
                        worst = worst.max(joint / bound);
                    }
                    if joint > bound * (1.0 + slack) + 1e-15 {
                        qv += 1;
                    }
                }
            }
        }
    }
    MixingReport {
        preimage_checked: pc,
        preimage_violations: pv,
        preimage_ratio_range: range,
        pair_checked: qc,
        pair_violations: qv,
        pair_max_ratio: worst,
        pass: pv == 0 && qv == 0,
    }
}

/// Draws ω₁, then ω₂ | ω₁, … from the conditional invariant masses.
pub fn sample_word(table: &GibbsTable, n: usize, seed: u64) -> Result<Word> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_word_with(table, n, &mut rng)
}

pub fn sample_word_with<R: Rng>(table: &GibbsTable, n: usize, rng: &mut R) -> Result<Word> {
    if n > table.depth {
        return Err(Error::InvalidParameter(format!(
            "cannot sample length {n} from a table of depth {}",
            table.depth
        )));
    }
    let a = table.alphabet as usize;
    let mut rank = 0usize;
    let mut symbols = Vec::with_capacity(n);
    for d in 0..n {
        let row = &table.mu_hat[d + 1][rank * a..(rank + 1) * a];
        let total: f64 = row.iter().sum();
        let mut u = rng.gen::<f64>() * total;
        let mut pick = a - 1;
        for (i, &v) in row.iter().enumerate() {
            if u < v {
                pick = i;
                break;
            }
            u -= v;
        }
        symbols.push(pick as u32 + 1);
        rank = rank * a + pick;
    }
    Word::new(symbols)
}
