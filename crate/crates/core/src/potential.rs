//! Potential families φ⁽ⁱ⁾ on X, the amalgamated potential
//! φ(ω) = φ^{(ω₁)}(π(σω)), branch sums S_ω(φ), Hölder data and the
//! distortion constant Q.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ifs::{ContractionMap, IfsSystem, MapFamily};
use crate::shift::{AlphabetCutoff, Word};

/// The per-symbol functions φ⁽ⁱ⁾: X → ℝ.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Potential {
    /// φ⁽ⁱ⁾ ≡ values[i-1] on a finite alphabet.
    Constant { values: Vec<f64> },
    /// φ⁽ⁱ⁾ ≡ −rate·i on the whole of ℕ.
    LinearTail { rate: f64 },
    /// φ⁽ⁱ⁾(x) = a·x + b on a finite alphabet.
    Affine { coefficients: Vec<(f64, f64)> },
    /// φ⁽ⁱ⁾(x) = s·log|φᵢ'(x)|; for continued-fraction maps this is
    /// −2s·log(d + x).
    Geometric { s: f64 },
}

impl Potential {
    pub fn symbol_count(&self) -> Option<u32> {
        match self {
            Potential::Constant { values } => Some(values.len() as u32),
            Potential::Affine { coefficients } => Some(coefficients.len() as u32),
            Potential::LinearTail { .. } | Potential::Geometric { .. } => None,
        }
    }

    #[inline]
    pub fn eval(&self, map: &ContractionMap, symbol: u32, x: f64) -> f64 {
        match self {
            Potential::Constant { values } => values[symbol as usize - 1],
            Potential::LinearTail { rate } => -rate * symbol as f64,
            Potential::Affine { coefficients } => {
                let (a, b) = coefficients[symbol as usize - 1];
                a * x + b
            }
            Potential::Geometric { s } => match *map {
                ContractionMap::Affine { slope, .. } => s * slope.abs().ln(),
                ContractionMap::MoebiusCf { digit } => -2.0 * s * (digit as f64 + x).ln(),
            },
        }
    }

    pub fn derivative(&self, map: &ContractionMap, symbol: u32, x: f64) -> f64 {
        match self {
            Potential::Constant { .. } | Potential::LinearTail { .. } => 0.0,
            Potential::Affine { coefficients } => coefficients[symbol as usize - 1].0,
            Potential::Geometric { s } => match *map {
                ContractionMap::Affine { .. } => 0.0,
                ContractionMap::MoebiusCf { digit } => -2.0 * s / (digit as f64 + x),
            },
        }
    }
}

/// Hölder order β and variation bound V with V ≥ e^{βn}Vₙ(φ) for all n.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HolderData {
    pub beta: f64,
    pub v: f64,
}

/// Q = exp(V·e^{−β}/(1 − e^{−β})).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DistortionData {
    pub q: f64,
    pub beta: f64,
    pub v: f64,
}

impl DistortionData {
    pub fn log_q(&self) -> f64 {
        self.q.ln()
    }
}

pub fn distortion_constant(holder: &HolderData) -> DistortionData {
    // e^{−β}/(1 − e^{−β}) = 1/(e^β − 1)
    let exponent = if holder.v == 0.0 {
        0.0
    } else {
        holder.v / holder.beta.exp_m1()
    };
    DistortionData {
        q: exponent.exp(),
        beta: holder.beta,
        v: holder.v,
    }
}

/// How the per-symbol weights decay beyond any finite cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TailDecay {
    /// No symbols beyond the cutoff.
    None,
    /// Terms decay like ratioⁱ (up to polynomial factors).
    Exponential { ratio: f64 },
    /// Terms decay like i^{−exponent} (up to logarithmic factors).
    Polynomial { exponent: f64 },
}

impl TailDecay {
    /// Positive when the tail series converge, negative when they diverge.
    pub fn margin(&self) -> f64 {
        match *self {
            TailDecay::None => 1.0,
            TailDecay::Exponential { ratio } => 1.0 - ratio,
            TailDecay::Polynomial { exponent } => exponent - 1.0,
        }
    }
}

/// An IFS together with a potential family and its certified Hölder data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Model {
    system: IfsSystem,
    potential: Potential,
    holder: HolderData,
}

/// Symbols scanned when a sup over an infinite family is needed; every
/// built-in infinite family is monotone in the symbol.
const SCAN_SYMBOLS: u32 = 4096;

impl Model {
    /// Model with β = −log s, the natural order for potentials that are
    /// Lipschitz on X.
    pub fn new(system: IfsSystem, potential: Potential) -> Result<Self> {
        let s = system.contraction();
        let beta = if s > 0.0 { -s.ln() } else { 50.0 };
        Self::with_beta(system, potential, beta)
    }

    pub fn with_beta(system: IfsSystem, potential: Potential, beta: f64) -> Result<Self> {
        if let (Some(a), Some(b)) = (system.symbol_count(), potential.symbol_count()) {
            if a != b {
                return Err(Error::InvalidSystem(format!(
                    "system has {a} maps but the potential family has {b} members"
                )));
            }
        }
        if let Potential::Geometric { s } = potential {
            if !s.is_finite() {
                return Err(Error::InvalidParameter(format!("s_param {s} is not finite")));
            }
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Hölder order β = {beta} must be positive"
            )));
        }
        let mut model = Model {
            system,
            potential,
            holder: HolderData { beta, v: 0.0 },
        };
        model.holder = model.certify_holder(beta)?;
        Ok(model)
    }

    /// V = e^β·Lip·diam(X), valid when e^β·s ≤ 1: points agreeing on n
    /// symbols code into a cylinder image of diameter ≤ s^{n−1}·diam(X).
    fn certify_holder(&self, beta: f64) -> Result<HolderData> {
        let lip = self.potential_lipschitz();
        if lip == 0.0 {
            return Ok(HolderData { beta, v: 0.0 });
        }
        let s = self.system.contraction();
        if beta.exp() * s > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "cannot certify Hölder order β = {beta}: e^β·s = {} > 1",
                beta.exp() * s
            )));
        }
        Ok(HolderData {
            beta,
            v: beta.exp() * lip * self.system.domain().diam(),
        })
    }

    pub fn system(&self) -> &IfsSystem {
        &self.system
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn holder(&self) -> HolderData {
        self.holder
    }

    pub fn distortion(&self) -> DistortionData {
        distortion_constant(&self.holder)
    }

    /// Alphabet size, `None` when countably infinite.
    pub fn symbol_count(&self) -> Option<u32> {
        match (self.system.symbol_count(), self.potential.symbol_count()) {
            (Some(a), _) | (None, Some(a)) => Some(a),
            (None, None) => None,
        }
    }

    /// Effective alphabet size under a cutoff.
    pub fn alphabet(&self, cut: &AlphabetCutoff) -> u32 {
        match self.symbol_count() {
            Some(n) => n.min(cut.symbols()),
            None => cut.symbols(),
        }
    }

    /// The cutoff restricted to the effective alphabet.
    pub fn effective_cutoff(&self, cut: &AlphabetCutoff) -> AlphabetCutoff {
        cut.restricted(self.alphabet(cut))
    }

    fn scan_count(&self) -> u32 {
        self.symbol_count().unwrap_or(SCAN_SYMBOLS).min(SCAN_SYMBOLS)
    }

    /// φ⁽ⁱ⁾(x).
    #[inline]
    pub fn phi(&self, symbol: u32, x: f64) -> f64 {
        let map = self.system.map_unchecked(symbol);
        self.potential.eval(&map, symbol, x)
    }

    /// (φ⁽ⁱ⁾(x), φᵢ(x)).
    #[inline]
    pub(crate) fn step(&self, symbol: u32, x: f64) -> (f64, f64) {
        let map = self.system.map_unchecked(symbol);
        (self.potential.eval(&map, symbol, x), map.apply(x))
    }

    pub fn check_symbol(&self, symbol: u32) -> Result<()> {
        match self.symbol_count() {
            Some(n) if symbol == 0 || symbol > n => Err(Error::SymbolOutOfRange { symbol, size: n }),
            _ if symbol == 0 => Err(Error::InvalidSymbol(0)),
            _ => Ok(()),
        }
    }

    fn check_word(&self, word: &Word) -> Result<()> {
        word.symbols().iter().try_for_each(|&s| self.check_symbol(s))
    }

    /// (inf_X φ⁽ⁱ⁾, sup_X φ⁽ⁱ⁾). Every built-in family is monotone on X.
    pub fn potential_range(&self, symbol: u32) -> (f64, f64) {
        let d = self.system.domain();
        let a = self.phi(symbol, d.lo);
        let b = self.phi(symbol, d.hi);
        (a.min(b), a.max(b))
    }

    /// sup over symbols of the Lipschitz constant of φ⁽ⁱ⁾ on X.
    pub fn potential_lipschitz(&self) -> f64 {
        let d = *self.system.domain();
        (1..=self.scan_count())
            .map(|i| {
                let map = self.system.map_unchecked(i);
                self.potential
                    .derivative(&map, i, d.lo)
                    .abs()
                    .max(self.potential.derivative(&map, i, d.hi).abs())
            })
            .fold(0.0, f64::max)
    }

    /// sup over symbols and X of |φ⁽ⁱ⁾''|.
    pub fn potential_second_bound(&self) -> f64 {
        let lo = self.system.domain().lo;
        match self.potential {
            Potential::Geometric { s } => (1..=self.scan_count())
                .map(|i| match self.system.map_unchecked(i) {
                    ContractionMap::MoebiusCf { digit } => {
                        let d = digit as f64 + lo;
                        2.0 * s.abs() / (d * d)
                    }
                    ContractionMap::Affine { .. } => 0.0,
                })
                .fold(0.0, f64::max),
            _ => 0.0,
        }
    }

    /// Uniform bounds (|S_ω'|, |S_ω''|) over all words and X.
    pub fn branch_sum_derivative_bounds(&self) -> (f64, f64) {
        let s = self.system.contraction();
        let l1 = self.potential_lipschitz();
        let l2 = self.potential_second_bound();
        let k2 = self.system.second_derivative_bound();
        if s >= 1.0 {
            return (f64::INFINITY, f64::INFINITY);
        }
        let g1 = l1 / (1.0 - s);
        let g2 = l2 / (1.0 - s * s) + l1 * k2 / ((1.0 - s) * (1.0 - s));
        (g1, g2)
    }

    /// S_ω(φ)(x) = Σⱼ φ^{(ωⱼ)}(φ_{σʲω}(x)), with S_∅ = 0.
    pub fn branch_sum(&self, word: &Word, x: f64) -> Result<f64> {
        self.check_word(word)?;
        let d = self.system.domain();
        if !d.contains_approx(x) {
            return Err(Error::Domain { x, lo: d.lo, hi: d.hi });
        }
        Ok(self.branch_sum_symbols(word.symbols(), x).0)
    }

    /// (S_ω(x), φ_ω(x)) for pre-validated symbols.
    #[inline]
    pub(crate) fn branch_sum_symbols(&self, symbols: &[u32], x: f64) -> (f64, f64) {
        let mut y = x;
        let mut total = 0.0;
        for &s in symbols.iter().rev() {
            let (p, next) = self.step(s, y);
            total += p;
            y = next;
        }
        (total, y)
    }

    /// Σ_{i>N} sup_X e^{φ⁽ⁱ⁾}.
    pub fn exp_tail(&self, cut: &AlphabetCutoff) -> Result<f64> {
        let n = cut.symbols();
        if let Some(count) = self.symbol_count() {
            if n >= count {
                return Ok(0.0);
            }
        }
        match (&self.potential, self.system.family()) {
            (Potential::LinearTail { rate }, _) => {
                if *rate <= 0.0 {
                    return Err(Error::Divergent(format!("Σ e^(-{rate}·i) diverges for rate <= 0")));
                }
                let q = (-rate).exp();
                Ok(q.powi(n as i32 + 1) / (1.0 - q))
            }
            (Potential::Geometric { s }, MapFamily::GeometricTail) => {
                if *s <= 0.0 {
                    return Err(Error::Divergent(format!("Σ 2^(-{s}·i) diverges for s <= 0")));
                }
                let q = 2f64.powf(-s);
                Ok(4f64.powf(-s) * q.powi(n as i32 + 1) / (1.0 - q))
            }
            (Potential::Geometric { s }, MapFamily::ContinuedFractionTail { first_digit }) => {
                if 2.0 * s <= 1.0 {
                    return Err(Error::Divergent(format!(
                        "Σ (i + x)^(-2s) diverges for s_param = {s} <= 1/2"
                    )));
                }
                let u = (*first_digit as f64 - 1.0) + n as f64 + self.system.domain().lo;
                Ok(u.powf(1.0 - 2.0 * s) / (2.0 * s - 1.0))
            }
            _ => Err(Error::InvalidSystem(
                "no analytic tail bound for this potential family".into(),
            )),
        }
    }

    /// Σ_{i>N} sup_X(−φ⁽ⁱ⁾)⁺ · sup_X e^{φ⁽ⁱ⁾}.
    pub fn neglog_exp_tail(&self, cut: &AlphabetCutoff) -> Result<f64> {
        let n = cut.symbols();
        if let Some(count) = self.symbol_count() {
            if n >= count {
                return Ok(0.0);
            }
        }
        match (&self.potential, self.system.family()) {
            (Potential::LinearTail { rate }, _) => {
                self.exp_tail(cut)?;
                let q = (-rate).exp();
                Ok(rate * weighted_geometric_tail(q, n))
            }
            (Potential::Geometric { s }, MapFamily::GeometricTail) => {
                self.exp_tail(cut)?;
                let q = 2f64.powf(-s);
                let ln2 = std::f64::consts::LN_2;
                let geo = q.powi(n as i32 + 1) / (1.0 - q);
                Ok(s * ln2 * 4f64.powf(-s) * (weighted_geometric_tail(q, n) + 2.0 * geo))
            }
            (Potential::Geometric { s }, MapFamily::ContinuedFractionTail { first_digit }) => {
                self.exp_tail(cut)?;
                let d = self.system.domain();
                let p = 2.0 * s;
                let width = d.diam();
                let mut u = (*first_digit as f64 - 1.0) + (n + 1) as f64 + d.lo;
                let knee = (1.0 / p).exp() + 1.0;
                let mut total = 0.0;
                while u <= knee {
                    total += p * (u + width).ln() * u.powf(-p);
                    u += 1.0;
                }
                // log(u + width) ≤ log u + width/u; log(u)·u^{−p} decreases past e^{1/p}
                let a = u - 1.0;
                let log_part = a.powf(1.0 - p) * (a.ln() / (p - 1.0) + 1.0 / ((p - 1.0) * (p - 1.0)));
                let shift_part = width * a.powf(-p) / p;
                Ok(total + p * (log_part + shift_part))
            }
            _ => Err(Error::InvalidSystem(
                "no analytic tail bound for this potential family".into(),
            )),
        }
    }

    pub fn tail_decay(&self, cut: &AlphabetCutoff) -> TailDecay {
        if let Some(count) = self.symbol_count() {
            if cut.symbols() >= count {
                return TailDecay::None;
            }
        }
        match (&self.potential, self.system.family()) {
            (Potential::LinearTail { rate }, _) => TailDecay::Exponential { ratio: (-rate).exp() },
            (Potential::Geometric { s }, MapFamily::GeometricTail) => TailDecay::Exponential { ratio: 2f64.powf(-s) },
            (Potential::Geometric { s }, _) => TailDecay::Polynomial { exponent: 2.0 * s },
            _ => TailDecay::None,
        }
    }
}

/// Σ_{i>n} i·qⁱ.
fn weighted_geometric_tail(q: f64, n: u32) -> f64 {
    let n = n as f64;
    q.powf(n + 1.0) * ((n + 1.0) - n * q) / ((1.0 - q) * (1.0 - q))
}

/// φ(ω) = φ^{(ω₁)}(π(σω)) evaluated on the finite prefix ω, with the coding
/// error propagated through the Lipschitz constant of φ^{(ω₁)}.
pub fn eval_amalgamated(model: &Model, prefix: &Word) -> Result<(f64, f64)> {
    let first = prefix
        .first()
        .ok_or_else(|| Error::InvalidParameter("the amalgamated potential needs a non-empty prefix".into()))?;
    model.check_symbol(first)?;
    let (point, code_err) = model.system().code_point(&prefix.shift())?;
    let map = model.system().map(first)?;
    let d = model.system().domain();
    let lip = model
        .potential()
        .derivative(&map, first, d.lo)
        .abs()
        .max(model.potential().derivative(&map, first, d.hi).abs());
    Ok((model.phi(first, point), lip * code_err))
}

/// S_ω(φ)(x).
pub fn birkhoff_branch_sum(model: &Model, word: &Word, x: f64) -> Result<f64> {
    model.branch_sum(word, x)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summability {
    /// sup over the grid of Σ_{i≤N} e^{φ⁽ⁱ⁾(x)}
    pub head: f64,
    /// Σ_{i>N} sup_X e^{φ⁽ⁱ⁾}
    pub tail: f64,
}

pub fn summability_bound(model: &Model, cut: &AlphabetCutoff, resolution: usize) -> Result<Summability> {
    let tail = model.exp_tail(cut)?;
    let n = model.alphabet(cut);
    let head = model
        .system()
        .domain()
        .samples(resolution)
        .into_iter()
        .map(|x| (1..=n).map(|i| model.phi(i, x).exp()).sum::<f64>())
        .fold(0.0, f64::max);
    Ok(Summability { head, tail })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariationEstimate {
    /// max_n e^{βn}·Vₙ (a lower estimate of V)
    pub v_est: f64,
    /// Vₙ estimates for n = 1..=n_max
    pub per_n: Vec<f64>,
    /// e^{βn}·Vₙ for n = 1..=n_max
    pub weighted: Vec<f64>,
}

/// Samples pairs of sequences agreeing on n symbols and records the largest
/// observed |φ(x) − φ(y)|.
pub fn estimate_variation<R: Rng>(
    model: &Model,
    cut: &AlphabetCutoff,
    n_max: usize,
    samples: usize,
    tail_len: usize,
    rng: &mut R,
) -> VariationEstimate {
    let alphabet = model.alphabet(cut);
    let sys = model.system();
    let mid = sys.domain().midpoint();
    let beta = model.holder().beta;
    let mut per_n = Vec::with_capacity(n_max);
    let draw = |len: usize, rng: &mut R| -> Vec<u32> { (0..len).map(|_| rng.gen_range(1..=alphabet)).collect() };
    for n in 1..=n_max {
        let mut best = 0.0f64;
        for _ in 0..samples {
            let common = draw(n, rng);
            let mut a = common.clone();
            a.extend(draw(tail_len, rng));
            let mut b = common;
            b.extend(draw(tail_len, rng));
            let pa = sys.apply_symbols(&a[1..], mid);
            let pb = sys.apply_symbols(&b[1..], mid);
            let diff = (model.phi(a[0], pa) - model.phi(b[0], pb)).abs();
            best = best.max(diff);
        }
        per_n.push(best);
    }
    let weighted: Vec<f64> = per_n
        .iter()
        .enumerate()
        .map(|(k, v)| (beta * (k + 1) as f64).exp() * v)
        .collect();
    VariationEstimate {
        v_est: weighted.iter().copied().fold(0.0, f64::max),
        per_n,
        weighted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::Interval;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn w(s: &[u32]) -> Word {
        Word::new(s.to_vec()).unwrap()
    }

    fn cut(n: u32) -> AlphabetCutoff {
        AlphabetCutoff::with_cap(n, 1 << 24).unwrap()
    }

    fn cf12(s: f64) -> Model {
        let sys = IfsSystem::new(
            Interval::new(1.0 / 3.0, 1.0).unwrap(),
            MapFamily::continued_fraction(&[1, 2]),
        )
        .unwrap();
        Model::new(sys, Potential::Geometric { s }).unwrap()
    }

    fn halving_identity() -> Model {
        let sys = IfsSystem::new(Interval::unit(), MapFamily::affine(&[(0.5, 0.0), (0.5, 0.5)])).unwrap();
        Model::new(
            sys,
            Potential::Affine {
                coefficients: vec![(1.0, 0.0), (1.0, 0.0)],
            },
        )
        .unwrap()
    }

    fn bernoulli_half() -> Model {
        let sys = IfsSystem::new(
            Interval::unit(),
            MapFamily::affine(&[(1.0 / 3.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)]),
        )
        .unwrap();
        Model::new(
            sys,
            Potential::Constant {
                values: vec![0.5f64.ln(), 0.5f64.ln()],
            },
        )
        .unwrap()
    }

    fn geometric_tail() -> Model {
        let sys = IfsSystem::new(Interval::unit(), MapFamily::GeometricTail).unwrap();
        Model::new(
            sys,
            Potential::LinearTail {
                rate: std::f64::consts::LN_2,
            },
        )
        .unwrap()
    }

    #[test]
    fn amalgamated_constant() {
        let (v, e) = eval_amalgamated(&bernoulli_half(), &w(&[2, 1, 2])).unwrap();
        assert_abs_diff_eq!(v, 0.5f64.ln());
        assert_eq!(e, 0.0);
    }

    #[test]
    fn amalgamated_cf_golden_points() {
        // x* solves x² + x − 1 = 0
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let m = cf12(1.0);
        let (v, e) = eval_amalgamated(&m, &Word::repeat(1, 30).unwrap()).unwrap();
        assert!((v - (-2.0 * (1.0 + golden).ln())).abs() < 1e-4);
        assert!(e < 1e-6);
        assert!((v + 0.9624).abs() < 1e-4);
        let mut word = vec![2];
        word.extend(std::iter::repeat_n(1, 30));
        let (v, _) = eval_amalgamated(&m, &w(&word)).unwrap();
        assert!((v - (-2.0 * (2.0 + golden).ln())).abs() < 1e-4);
        assert!((v + 1.9248).abs() < 1e-4);
    }

    #[test]
    fn branch_sum_examples() {
        let m = bernoulli_half();
        assert_abs_diff_eq!(birkhoff_branch_sum(&m, &w(&[1, 2, 2]), 0.4).unwrap(), 3.0 * 0.5f64.ln());
        let m = halving_identity();
        assert_abs_diff_eq!(birkhoff_branch_sum(&m, &w(&[1, 2]), 0.0).unwrap(), 0.5);
        assert_eq!(birkhoff_branch_sum(&m, &Word::empty(), 0.7).unwrap(), 0.0);
        let m = cf12(0.8);
        for (i, x) in [(1, 0.4), (2, 0.9), (1, 1.0)] {
            assert_abs_diff_eq!(
                birkhoff_branch_sum(&m, &w(&[i]), x).unwrap(),
                m.phi(i, x),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn summability_examples() {
        let s = summability_bound(&bernoulli_half(), &cut(10), 16).unwrap();
        assert_abs_diff_eq!(s.head, 1.0, epsilon = 1e-15);
        assert_eq!(s.tail, 0.0);

        let s = summability_bound(&geometric_tail(), &cut(40), 16).unwrap();
        assert_abs_diff_eq!(s.head, 1.0 - 2f64.powi(-40), epsilon = 1e-15);
        assert!(s.tail <= 2f64.powi(-40) * (1.0 + 1e-12));

        let sys = IfsSystem::unchecked(
            Interval::new(1.0 / 3.0, 1.0).unwrap(),
            MapFamily::ContinuedFractionTail { first_digit: 1 },
        );
        // digits beyond 2 leave [1/3, 1]; the tail bound only needs the family
        assert!(sys.is_err());
        let sys = IfsSystem::new(
            Interval::new(0.0, 0.5).unwrap(),
            MapFamily::ContinuedFractionTail { first_digit: 2 },
        )
        .unwrap();
        let m = Model::new(sys.clone(), Potential::Geometric { s: 1.0 }).unwrap();
        let tail = m.exp_tail(&cut(100)).unwrap();
        // integral comparison for Σ_{i>100} (i + 1 + 0)^{-2}
        let brute: f64 = (101..2_000_000).map(|i| ((i + 1) as f64).powi(-2)).sum();
        assert!(tail >= brute && tail <= 0.01);

        let m = Model::new(sys, Potential::Geometric { s: 0.5 }).unwrap();
        assert!(matches!(summability_bound(&m, &cut(10), 8), Err(Error::Divergent(_))));
    }

    #[test]
    fn neglog_tail_dominates_brute_force() {
        let m = geometric_tail();
        let t = m.neglog_exp_tail(&cut(10)).unwrap();
        let brute: f64 = (11..200)
            .map(|i| i as f64 * std::f64::consts::LN_2 * 0.5f64.powi(i))
            .sum();
        assert_abs_diff_eq!(t, brute, epsilon = 1e-14);

        let sys = IfsSystem::new(
            Interval::new(0.0, 0.5).unwrap(),
            MapFamily::ContinuedFractionTail { first_digit: 2 },
        )
        .unwrap();
        let m = Model::new(sys, Potential::Geometric { s: 0.75 }).unwrap();
        let t = m.neglog_exp_tail(&cut(5)).unwrap();
        let brute: f64 = (6..2_000_000u64)
            .map(|i| {
                let d = (i + 1) as f64;
                1.5 * (d + 0.5).ln() * d.powf(-1.5)
            })
            .sum();
        assert!(t >= brute, "{t} < {brute}");
        assert!(t < 2.0 * brute + 1.0);
    }

    #[test]
    fn distortion_examples() {
        assert_eq!(distortion_constant(&HolderData { beta: 0.7, v: 0.0 }).q, 1.0);
        let beta: f64 = 0.7;
        let v = (1.0 - (-beta).exp()) * beta.exp();
        assert_abs_diff_eq!(
            distortion_constant(&HolderData { beta, v }).q,
            std::f64::consts::E,
            epsilon = 1e-12
        );
        let m = cf12(1.0);
        assert_abs_diff_eq!(m.holder().beta, (16.0f64 / 9.0).ln(), epsilon = 1e-14);
        // Lip = 2/(1 + 1/3), diam = 2/3, e^β = 16/9
        assert_abs_diff_eq!(m.holder().v, 16.0 / 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.distortion().log_q(), 16.0 / 7.0, epsilon = 1e-12);
    }

    #[test]
    fn variation_estimates() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let est = estimate_variation(&bernoulli_half(), &cut(2), 6, 50, 10, &mut rng);
        assert!(est.per_n.iter().all(|&v| v == 0.0));

        let m = cf12(1.0);
        let est = estimate_variation(&m, &cut(2), 8, 400, 20, &mut rng);
        let s = m.system().contraction();
        let lip = 1.5;
        for (k, v) in est.per_n.iter().enumerate() {
            assert!(*v <= lip * s.powi(k as i32) * (2.0 / 3.0) + 1e-12);
        }
        // β = −log s keeps e^{βn}Vₙ bounded by the certificate
        assert!(est.v_est <= m.holder().v);
        assert!(est.v_est > 0.0);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistortionSample {
    pub samples: usize,
    pub violations: usize,
    /// largest |S_ω(x) − S_ω(y)| divided by its bound
    pub max_ratio: f64,
}

/// Draws (τ, ω, u, w) with 0 ≤ |τ|, 1 ≤ |ω| ≤ max_len and tests
/// |S_ω(φ_τ u) − S_ω(φ_τ w)| ≤ V/(1 − e^{−β})·e^{−β|τ|}.
pub fn sample_distortion<R: Rng>(
    model: &Model,
    cut: &AlphabetCutoff,
    samples: usize,
    max_len: usize,
    rng: &mut R,
) -> DistortionSample {
    let alphabet = model.alphabet(cut);
    let sys = model.system();
    let d = sys.domain();
    let HolderData { beta, v } = model.holder();
    let mut violations = 0;
    let mut max_ratio = 0.0f64;
    for _ in 0..samples {
        let tau: Vec<u32> = (0..rng.gen_range(0..=max_len))
            .map(|_| rng.gen_range(1..=alphabet))
            .collect();
        let omega: Vec<u32> = (0..rng.gen_range(1..=max_len.max(1)))
            .map(|_| rng.gen_range(1..=alphabet))
            .collect();
        let x = sys.apply_symbols(&tau, rng.gen_range(d.lo..=d.hi));
        let y = sys.apply_symbols(&tau, rng.gen_range(d.lo..=d.hi));
        let diff = (model.branch_sum_symbols(&omega, x).0 - model.branch_sum_symbols(&omega, y).0).abs();
        let bound = v / -(-beta).exp_m1() * (-beta * tau.len() as f64).exp();
        if diff > bound * (1.0 + 1e-12) + 1e-15 {
            violations += 1;
        }
        if bound > 0.0 {
            max_ratio = max_ratio.max(diff / bound);
        }
    }
    DistortionSample {
        samples,
        violations,
        max_ratio,
    }
}
