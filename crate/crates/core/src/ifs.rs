//! Contracting iterated function systems on a compact interval.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::shift::{AlphabetCutoff, Word};

/// A compact interval `[lo, hi]` with `lo < hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidSystem(format!(
                "domain [{lo}, {hi}] is not a non-degenerate compact interval"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn unit() -> Self {
        Interval { lo: 0.0, hi: 1.0 }
    }

    pub fn diam(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Containment up to a relative slack of a few ulps of the diameter.
    pub fn contains_approx(&self, x: f64) -> bool {
        let eps = 1e-12 * self.diam();
        x >= self.lo - eps && x <= self.hi + eps
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    /// `other ⊆ self` up to rounding.
    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.contains_approx(other.lo) && self.contains_approx(other.hi)
    }

    /// `n + 1` equispaced points including both endpoints.
    pub fn samples(&self, n: usize) -> Vec<f64> {
        let n = n.max(1);
        (0..=n)
            .map(|k| {
                if k == n {
                    self.hi
                } else {
                    self.lo + self.diam() * k as f64 / n as f64
                }
            })
            .collect()
    }
}

/// One branch φᵢ of the system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ContractionMap {
    /// x ↦ slope·x + offset
    Affine { slope: f64, offset: f64 },
    /// x ↦ 1/(digit + x)
    MoebiusCf { digit: u32 },
}

impl ContractionMap {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            ContractionMap::Affine { slope, offset } => slope * x + offset,
            ContractionMap::MoebiusCf { digit } => 1.0 / (digit as f64 + x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            ContractionMap::Affine { slope, .. } => slope,
            ContractionMap::MoebiusCf { digit } => {
                let d = digit as f64 + x;
                -1.0 / (d * d)
            }
        }
    }

    /// sup over the domain of |φ'|. Both families are monotone in |φ'|, so the
    /// sup sits at an endpoint.
    pub fn lipschitz(&self, domain: &Interval) -> f64 {
        self.derivative(domain.lo).abs().max(self.derivative(domain.hi).abs())
    }

    /// sup over the domain of |φ''|.
    pub fn second_derivative_bound(&self, domain: &Interval) -> f64 {
        match *self {
            ContractionMap::Affine { .. } => 0.0,
            ContractionMap::MoebiusCf { digit } => {
                let d = digit as f64 + domain.lo;
                2.0 / (d * d * d)
            }
        }
    }

    pub fn image(&self, domain: &Interval) -> Interval {
        let a = self.apply(domain.lo);
        let b = self.apply(domain.hi);
        Interval {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            ContractionMap::Affine { slope, offset } => format!("x -> {slope}*x + {offset}"),
            ContractionMap::MoebiusCf { digit } => format!("x -> 1/({digit} + x)"),
        }
    }
}

/// The branch family, indexed by symbols 1, 2, ...
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MapFamily {
    Finite {
        maps: Vec<ContractionMap>,
    },
    /// x ↦ 1/(d + x) for every digit d ≥ `first_digit`; symbol i uses digit
    /// `first_digit + i - 1`.
    ContinuedFractionTail {
        first_digit: u32,
    },
    /// x ↦ 2⁻ⁱ(1 + x/4) on [0, 1]: infinitely many pairwise disjoint images.
    GeometricTail,
}

impl MapFamily {
    pub fn continued_fraction(digits: &[u32]) -> Self {
        MapFamily::Finite {
            maps: digits
                .iter()
                .map(|&digit| ContractionMap::MoebiusCf { digit })
                .collect(),
        }
    }

    pub fn affine(pairs: &[(f64, f64)]) -> Self {
        MapFamily::Finite {
            maps: pairs
                .iter()
                .map(|&(slope, offset)| ContractionMap::Affine { slope, offset })
                .collect(),
        }
    }

    /// `None` for infinite families.
    pub fn symbol_count(&self) -> Option<u32> {
        match self {
            MapFamily::Finite { maps } => Some(maps.len() as u32),
            _ => None,
        }
    }

    pub fn map(&self, symbol: u32) -> Option<ContractionMap> {
        if symbol == 0 {
            return None;
        }
        match self {
            MapFamily::Finite { maps } => maps.get(symbol as usize - 1).copied(),
            MapFamily::ContinuedFractionTail { first_digit } => Some(ContractionMap::MoebiusCf {
                digit: first_digit + symbol - 1,
            }),
            MapFamily::GeometricTail => {
                let scale = 0.5f64.powi(symbol as i32);
                Some(ContractionMap::Affine {
                    slope: 0.25 * scale,
                    offset: scale,
                })
            }
        }
    }
}

/// A contracting IFS {φᵢ} on the interval X.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IfsSystem {
    domain: Interval,
    family: MapFamily,
    contraction: f64,
    #[serde(skip)]
    maps_cache: Vec<ContractionMap>,
}

/// Number of leading maps cached for infinite families.
const MAP_CACHE: u32 = 4096;

impl IfsSystem {
    /// Builds the system, rejecting any map with sup|φᵢ'| ≥ 1 or φᵢ(X) ⊄ X.
    pub fn new(domain: Interval, family: MapFamily) -> Result<Self> {
        let sys = Self::unchecked(domain, family)?;
        for (i, map) in sys.maps_cache.iter().enumerate() {
            let factor = map.lipschitz(&sys.domain);
            if factor >= 1.0 {
                return Err(Error::NotContracting {
                    map: format!("φ_{} ({})", i + 1, map.describe()),
                    factor,
                });
            }
        }
        Ok(sys)
    }

    /// Builds the system without the contraction check (φᵢ(X) ⊆ X is still
    /// enforced). Used for diagnostics of candidate systems.
    pub fn unchecked(domain: Interval, family: MapFamily) -> Result<Self> {
        let cached = family.symbol_count().unwrap_or(MAP_CACHE);
        if cached == 0 {
            return Err(Error::InvalidSystem("system has no maps".into()));
        }
        let maps_cache: Vec<_> = (1..=cached).map(|i| family.map(i).expect("symbol in range")).collect();
        for (i, map) in maps_cache.iter().enumerate() {
            if let ContractionMap::MoebiusCf { digit } = map {
                if *digit == 0 || domain.lo + (*digit as f64) <= 0.0 {
                    return Err(Error::InvalidSystem(format!(
                        "map φ_{} ({}) has a pole on the domain",
                        i + 1,
                        map.describe()
                    )));
                }
            }
            if !domain.contains_interval(&map.image(&domain)) {
                return Err(Error::InvalidSystem(format!(
                    "map φ_{} ({}) does not send [{}, {}] into itself",
                    i + 1,
                    map.describe(),
                    domain.lo,
                    domain.hi
                )));
            }
        }
        // Infinite families are monotone in the symbol, so the first map
        // carries the sup of |φᵢ'| and |φᵢ''|.
        let contraction = maps_cache.iter().map(|m| m.lipschitz(&domain)).fold(0.0, f64::max);
        Ok(IfsSystem {
            domain,
            family,
            contraction,
            maps_cache,
        })
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }

    pub fn family(&self) -> &MapFamily {
        &self.family
    }

    /// Analytic uniform contraction factor s = supᵢ sup_X |φᵢ'|.
    pub fn contraction(&self) -> f64 {
        self.contraction
    }

    pub fn symbol_count(&self) -> Option<u32> {
        self.family.symbol_count()
    }

    /// Effective alphabet size under a cutoff.
    pub fn alphabet(&self, cut: &AlphabetCutoff) -> u32 {
        match self.symbol_count() {
            Some(n) => n.min(cut.symbols()),
            None => cut.symbols(),
        }
    }

    pub fn map(&self, symbol: u32) -> Result<ContractionMap> {
        if symbol >= 1 && symbol as usize <= self.maps_cache.len() {
            return Ok(self.maps_cache[symbol as usize - 1]);
        }
        self.family.map(symbol).ok_or(Error::SymbolOutOfRange {
            symbol,
            size: self.symbol_count().unwrap_or(u32::MAX),
        })
    }

    /// Map lookup for symbols already validated against the alphabet.
    #[inline]
    pub(crate) fn map_unchecked(&self, symbol: u32) -> ContractionMap {
        match self.maps_cache.get(symbol as usize - 1) {
            Some(m) => *m,
            None => self.family.map(symbol).expect("symbol validated"),
        }
    }

    /// sup of |φᵢ''| over all maps.
    pub fn second_derivative_bound(&self) -> f64 {
        self.maps_cache
            .iter()
            .map(|m| m.second_derivative_bound(&self.domain))
            .fold(0.0, f64::max)
    }

    fn check_symbols(&self, word: &Word) -> Result<()> {
        if let Some(size) = self.symbol_count() {
            if let Some(&bad) = word.symbols().iter().find(|&&s| s > size) {
                return Err(Error::SymbolOutOfRange { symbol: bad, size });
            }
        }
        Ok(())
    }

    /// φ_ω(x) = φ_{ω₁}∘…∘φ_{ωₙ}(x); φ_∅ = Id.
    pub fn apply_word(&self, word: &Word, x: f64) -> Result<f64> {
        if !self.domain.contains_approx(x) {
            return Err(Error::Domain {
                x,
                lo: self.domain.lo,
                hi: self.domain.hi,
            });
        }
        self.check_symbols(word)?;
        Ok(self.apply_symbols(word.symbols(), x))
    }

    #[inline]
    pub(crate) fn apply_symbols(&self, symbols: &[u32], x: f64) -> f64 {
        symbols.iter().rev().fold(x, |acc, &s| self.map_unchecked(s).apply(acc))
    }

    /// The interval φ_ω(X).
    pub fn word_image(&self, word: &Word) -> Result<Interval> {
        let a = self.apply_word(word, self.domain.lo)?;
        let b = self.apply_word(word, self.domain.hi)?;
        Ok(Interval {
            lo: a.min(b),
            hi: a.max(b),
        })
    }

    /// φ_ω(x_ref) at the domain midpoint, with the bound
    /// |φ_ω(x_ref) − π(ωρ)| ≤ s^|ω|·diam(X)/2 valid for every extension ρ.
    pub fn code_point(&self, word: &Word) -> Result<(f64, f64)> {
        let x = self.apply_word(word, self.domain.midpoint())?;
        let err = self.contraction.powi(word.len() as i32) * 0.5 * self.domain.diam();
        Ok((x, err))
    }
}

/// Outcome of a grid check of the contraction hypothesis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContractionCheck {
    pub contracting: bool,
    pub factor: f64,
}

/// max over i ≤ N and `resolution + 1` grid points of |φᵢ'(x)|.
pub fn verify_contraction(sys: &IfsSystem, cut: &AlphabetCutoff, resolution: usize) -> ContractionCheck {
    let xs = sys.domain.samples(resolution);
    let factor = (1..=sys.alphabet(cut))
        .map(|i| {
            let map = sys.map_unchecked(i);
            xs.iter().map(|&x| map.derivative(x).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    ContractionCheck {
        contracting: factor < 1.0,
        factor,
    }
}

/// True iff the closed images φᵢ(X), i ≤ N, are pairwise disjoint.
pub fn verify_separation(sys: &IfsSystem, cut: &AlphabetCutoff) -> bool {
    let mut images: Vec<Interval> = (1..=sys.alphabet(cut))
        .map(|i| sys.map_unchecked(i).image(&sys.domain))
        .collect();
    images.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    images.windows(2).all(|w| w[0].hi < w[1].lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn w(s: &[u32]) -> Word {
        Word::new(s.to_vec()).unwrap()
    }

    fn cut(n: u32) -> AlphabetCutoff {
        AlphabetCutoff::with_cap(n, 1 << 24).unwrap()
    }

    fn halving() -> IfsSystem {
        IfsSystem::new(Interval::unit(), MapFamily::affine(&[(0.5, 0.0), (0.5, 0.5)])).unwrap()
    }

    fn cf12() -> IfsSystem {
        IfsSystem::new(
            Interval::new(1.0 / 3.0, 1.0).unwrap(),
            MapFamily::continued_fraction(&[1, 2]),
        )
        .unwrap()
    }

    #[test]
    fn apply_word_examples() {
        let sys = halving();
        assert_abs_diff_eq!(sys.apply_word(&w(&[1, 2]), 0.0).unwrap(), 0.25);
        assert_eq!(sys.apply_word(&Word::empty(), 0.3).unwrap(), 0.3);
        assert_abs_diff_eq!(cf12().apply_word(&w(&[1]), 1.0).unwrap(), 0.5);
    }

    #[test]
    fn apply_word_rejects_outside_points() {
        assert!(matches!(halving().apply_word(&w(&[1]), 1.5), Err(Error::Domain { .. })));
        assert!(matches!(
            halving().apply_word(&w(&[3]), 0.5),
            Err(Error::SymbolOutOfRange { symbol: 3, size: 2 })
        ));
    }

    #[test]
    fn code_point_fixed_points() {
        let sys = halving();
        for k in [5, 10, 20] {
            let (x, err) = sys.code_point(&Word::repeat(1, k).unwrap()).unwrap();
            assert!(x.abs() <= err && err <= 0.5f64.powi(k as i32));
            let (x, err) = sys.code_point(&Word::repeat(2, k).unwrap()).unwrap();
            assert!((x - 1.0).abs() <= err);
        }
        // root of x² + x − 1 = 0
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let (x, _) = cf12().code_point(&Word::repeat(1, 20).unwrap()).unwrap();
        assert!((x - golden).abs() < 1e-6);
    }

    #[test]
    fn contraction_examples() {
        let c = verify_contraction(&halving(), &cut(10), 64);
        assert!(c.contracting);
        assert_abs_diff_eq!(c.factor, 0.5);

        let c = verify_contraction(&cf12(), &cut(10), 64);
        assert!(c.contracting);
        assert_abs_diff_eq!(c.factor, 9.0 / 16.0, epsilon = 1e-15);

        let sys = IfsSystem::unchecked(Interval::unit(), MapFamily::continued_fraction(&[1, 2])).unwrap();
        let c = verify_contraction(&sys, &cut(10), 64);
        assert!(!c.contracting);
        assert_eq!(c.factor, 1.0);
    }

    #[test]
    fn constructor_rejects_non_contracting_cf() {
        let err = IfsSystem::new(Interval::unit(), MapFamily::continued_fraction(&[1, 2])).unwrap_err();
        match err {
            Error::NotContracting { map, factor } => {
                assert!(map.contains("φ_1"));
                assert_eq!(factor, 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn constructor_rejects_escaping_maps() {
        assert!(IfsSystem::new(Interval::unit(), MapFamily::affine(&[(0.5, 0.8)])).is_err());
    }

    #[test]
    fn separation_examples() {
        assert!(!verify_separation(&halving(), &cut(10)));
        let cantor = IfsSystem::new(
            Interval::unit(),
            MapFamily::affine(&[(1.0 / 3.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)]),
        )
        .unwrap();
        assert!(verify_separation(&cantor, &cut(10)));
        let sys = cf12();
        let i1 = sys.map(1).unwrap().image(sys.domain());
        let i2 = sys.map(2).unwrap().image(sys.domain());
        assert_abs_diff_eq!(i1.lo, 0.5);
        assert_abs_diff_eq!(i1.hi, 0.75);
        assert_abs_diff_eq!(i2.lo, 1.0 / 3.0);
        assert_abs_diff_eq!(i2.hi, 3.0 / 7.0);
        assert!(verify_separation(&sys, &cut(10)));
    }

    #[test]
    fn infinite_families_are_valid() {
        let tail = IfsSystem::new(Interval::unit(), MapFamily::GeometricTail).unwrap();
        assert_abs_diff_eq!(tail.contraction(), 0.125);
        assert!(verify_separation(&tail, &cut(40)));
        let cf = IfsSystem::new(
            Interval::new(0.0, 0.5).unwrap(),
            MapFamily::ContinuedFractionTail { first_digit: 2 },
        )
        .unwrap();
        assert_abs_diff_eq!(cf.contraction(), 0.25);
        assert!(verify_separation(&cf, &cut(50)));
    }
}
