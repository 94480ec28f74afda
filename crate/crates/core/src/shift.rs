//! Finite words over the countable alphabet {1, 2, ...}, cylinder indexing,
//! and eventually periodic symbol streams.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Default cap on the number of words a single enumeration may visit.
pub const DEFAULT_WORD_CAP: u64 = 1 << 24;

/// Environment variable overriding [`DEFAULT_WORD_CAP`].
pub const CAP_ENV_VAR: &str = "THERMOSHIFT_CAP_WORDS";

/// A finite word ω = ω₁…ωₙ with every ωⱼ ≥ 1. The empty word is valid.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Word(Vec<u32>);

impl Word {
    pub fn new(symbols: impl Into<Vec<u32>>) -> Result<Self> {
        let symbols = symbols.into();
        if let Some(&bad) = symbols.iter().find(|&&s| s == 0) {
            return Err(Error::InvalidSymbol(bad));
        }
        Ok(Word(symbols))
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// A word repeating `symbol` `n` times.
    pub fn repeat(symbol: u32, n: usize) -> Result<Self> {
        Word::new(vec![symbol; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[u32] {
        &self.0
    }

    pub fn first(&self) -> Option<u32> {
        self.0.first().copied()
    }

    /// σω: the word with its first symbol removed (σ∅ = ∅).
    pub fn shift(&self) -> Word {
        Word(self.0.get(1..).unwrap_or_default().to_vec())
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut symbols = Vec::with_capacity(self.len() + other.len());
        symbols.extend_from_slice(&self.0);
        symbols.extend_from_slice(&other.0);
        Word(symbols)
    }

    /// Appends one symbol on the right.
    pub fn extended(&self, symbol: u32) -> Word {
        let mut symbols = self.0.clone();
        symbols.push(symbol);
        Word(symbols)
    }

    /// Prepends one symbol on the left.
    pub fn prepended(&self, symbol: u32) -> Word {
        let mut symbols = Vec::with_capacity(self.len() + 1);
        symbols.push(symbol);
        symbols.extend_from_slice(&self.0);
        Word(symbols)
    }

    pub fn max_symbol(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// Position of this word in the lexicographic enumeration of all words of
    /// the same length over {1..n}.
    pub fn lex_rank(&self, alphabet: u32) -> usize {
        self.0
            .iter()
            .fold(0usize, |acc, &s| acc * alphabet as usize + (s - 1) as usize)
    }

    /// Inverse of [`Word::lex_rank`].
    pub fn from_lex_rank(mut rank: usize, len: usize, alphabet: u32) -> Word {
        let mut symbols = vec![1u32; len];
        for slot in symbols.iter_mut().rev() {
            *slot = (rank % alphabet as usize) as u32 + 1;
            rank /= alphabet as usize;
        }
        Word(symbols)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "∅");
        }
        write!(f, "(")?;
        for (k, s) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

impl TryFrom<Vec<u32>> for Word {
    type Error = Error;

    fn try_from(symbols: Vec<u32>) -> Result<Self> {
        Word::new(symbols)
    }
}

/// uv.
pub fn concat(u: &Word, v: &Word) -> Word {
    u.concat(v)
}

/// Truncation of the alphabet ℕ to {1..N}, together with the enumeration cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AlphabetCutoff {
    symbols: u32,
    word_cap: u64,
}

impl AlphabetCutoff {
    /// Cutoff with the word cap taken from `THERMOSHIFT_CAP_WORDS` when set.
    pub fn new(symbols: u32) -> Result<Self> {
        let cap = std::env::var(CAP_ENV_VAR)
            .ok()
            .and_then(|v| v.trim().parse::<u64>().ok())
            .unwrap_or(DEFAULT_WORD_CAP);
        Self::with_cap(symbols, cap)
    }

    pub fn with_cap(symbols: u32, word_cap: u64) -> Result<Self> {
        if symbols == 0 {
            return Err(Error::InvalidCutoff(symbols));
        }
        Ok(AlphabetCutoff { symbols, word_cap })
    }

    pub fn symbols(&self) -> u32 {
        self.symbols
    }

    pub fn word_cap(&self) -> u64 {
        self.word_cap
    }

    /// The same cap applied to a (possibly smaller) alphabet.
    pub fn restricted(&self, symbols: u32) -> AlphabetCutoff {
        AlphabetCutoff {
            symbols: symbols.clamp(1, self.symbols),
            word_cap: self.word_cap,
        }
    }

    /// Fails with a resource-limit error if `count` words exceed the cap.
    pub fn check(&self, count: u128) -> Result<()> {
        if count > self.word_cap as u128 {
            Err(Error::ResourceLimit {
                requested: count,
                cap: self.word_cap,
            })
        } else {
            Ok(())
        }
    }

    /// Number of words of length `n`, saturating.
    pub fn count(&self, n: usize) -> u128 {
        (self.symbols as u128).saturating_pow(n.min(u32::MAX as usize) as u32)
    }

    /// Number of words of every length `0..=n`, saturating.
    pub fn count_up_to(&self, n: usize) -> u128 {
        (0..=n).fold(0u128, |acc, k| acc.saturating_add(self.count(k)))
    }
}

/// Lexicographic odometer over {1..N}ⁿ, optionally with a pinned first symbol.
#[derive(Clone, Debug)]
pub struct WordIter {
    current: Option<Vec<u32>>,
    alphabet: u32,
    pinned_first: bool,
}

impl Iterator for WordIter {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        let out = self.current.clone()?;
        let start = usize::from(self.pinned_first);
        let cur = self.current.as_mut().expect("checked above");
        let mut k = cur.len();
        loop {
            if k == start {
                self.current = None;
                break;
            }
            k -= 1;
            if cur[k] < self.alphabet {
                cur[k] += 1;
                break;
            }
            cur[k] = 1;
        }
        Some(Word(out))
    }
}

/// All Nⁿ words of length `n` in lexicographic order.
pub fn enumerate_words(n: usize, cut: &AlphabetCutoff) -> Result<WordIter> {
    cut.check(cut.count(n))?;
    Ok(WordIter {
        current: Some(vec![1; n]),
        alphabet: cut.symbols(),
        pinned_first: false,
    })
}

/// All words ω of length `n` with ω₁ = `first`, each standing for the
/// period-n point ω^∞.
pub fn periodic_words(first: u32, n: usize, cut: &AlphabetCutoff) -> Result<WordIter> {
    if n == 0 {
        return Err(Error::InvalidParameter("period must be at least 1".into()));
    }
    if first == 0 || first > cut.symbols() {
        return Err(Error::SymbolOutOfRange {
            symbol: first,
            size: cut.symbols(),
        });
    }
    cut.check(cut.count(n - 1))?;
    let mut start = vec![1; n];
    start[0] = first;
    Ok(WordIter {
        current: Some(start),
        alphabet: cut.symbols(),
        pinned_first: true,
    })
}

/// An eventually periodic infinite symbol stream `head · cycle^∞`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordStream {
    head: Vec<u32>,
    cycle: Vec<u32>,
}

impl WordStream {
    pub fn new(head: Word, cycle: Word) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::InvalidParameter("stream cycle must be non-empty".into()));
        }
        Ok(WordStream {
            head: head.0,
            cycle: cycle.0,
        })
    }

    /// The constant stream `symbol, symbol, ...`.
    pub fn constant(symbol: u32) -> Result<Self> {
        WordStream::new(Word::empty(), Word::new(vec![symbol])?)
    }

    pub fn symbol(&self, k: usize) -> u32 {
        if k < self.head.len() {
            self.head[k]
        } else {
            self.cycle[(k - self.head.len()) % self.cycle.len()]
        }
    }

    pub fn prefix(&self, len: usize) -> Word {
        Word((0..len).map(|k| self.symbol(k)).collect())
    }

    /// σⁿ applied to the stream.
    pub fn shift(&self, n: usize) -> WordStream {
        if n <= self.head.len() {
            return WordStream {
                head: self.head[n..].to_vec(),
                cycle: self.cycle.clone(),
            };
        }
        let r = (n - self.head.len()) % self.cycle.len();
        let mut cycle = self.cycle[r..].to_vec();
        cycle.extend_from_slice(&self.cycle[..r]);
        WordStream {
            head: Vec::new(),
            cycle,
        }
    }
}

/// k(τ): the periodic stream (τ₁…τₙ)^∞.
pub fn periodize(tau: &Word, n: usize) -> Result<WordStream> {
    if n == 0 || tau.len() < n {
        return Err(Error::InvalidParameter(format!(
            "periodize needs 1 <= n <= |τ|, got n = {n}, |τ| = {}",
            tau.len()
        )));
    }
    WordStream::new(Word::empty(), tau.prefix(n))
}

/// j(ρ): the stream ρ₁…ρₙ followed by `tail`.
pub fn splice_preimage(rho: &Word, tail: &WordStream) -> WordStream {
    let mut head = rho.0.clone();
    head.extend_from_slice(&tail.head);
    WordStream {
        head,
        cycle: tail.cycle.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &[u32]) -> Word {
        Word::new(s.to_vec()).unwrap()
    }

    fn cut(n: u32) -> AlphabetCutoff {
        AlphabetCutoff::with_cap(n, DEFAULT_WORD_CAP).unwrap()
    }

    #[test]
    fn concat_examples() {
        assert_eq!(concat(&w(&[1, 2]), &w(&[3])), w(&[1, 2, 3]));
        assert_eq!(concat(&Word::empty(), &w(&[5])), w(&[5]));
        assert_eq!(concat(&w(&[2]), &Word::empty()), w(&[2]));
    }

    #[test]
    fn zero_symbol_rejected() {
        assert_eq!(Word::new(vec![1, 0]), Err(Error::InvalidSymbol(0)));
        assert!(AlphabetCutoff::with_cap(0, 10).is_err());
    }

    #[test]
    fn enumerate_examples() {
        let empty: Vec<_> = enumerate_words(0, &cut(5)).unwrap().collect();
        assert_eq!(empty, vec![Word::empty()]);
        let two: Vec<_> = enumerate_words(2, &cut(2)).unwrap().collect();
        assert_eq!(two, vec![w(&[1, 1]), w(&[1, 2]), w(&[2, 1]), w(&[2, 2])]);
        assert_eq!(enumerate_words(3, &cut(3)).unwrap().count(), 27);
    }

    #[test]
    fn enumeration_cap_enforced() {
        let c = AlphabetCutoff::with_cap(10, 999).unwrap();
        assert!(matches!(
            enumerate_words(3, &c),
            Err(Error::ResourceLimit { requested: 1000, .. })
        ));
        assert!(enumerate_words(2, &c).is_ok());
    }

    #[test]
    fn periodic_examples() {
        let p: Vec<_> = periodic_words(1, 1, &cut(3)).unwrap().collect();
        assert_eq!(p, vec![w(&[1])]);
        let p: Vec<_> = periodic_words(1, 2, &cut(2)).unwrap().collect();
        assert_eq!(p, vec![w(&[1, 1]), w(&[1, 2])]);
        let p: Vec<_> = periodic_words(2, 3, &cut(2)).unwrap().collect();
        assert_eq!(p.len(), 4);
        assert!(p.iter().all(|x| x.first() == Some(2)));
        assert!(periodic_words(3, 2, &cut(2)).is_err());
    }

    #[test]
    fn periodize_examples() {
        let s = periodize(&w(&[1, 2, 3, 4]), 2).unwrap();
        assert_eq!(s.prefix(6), w(&[1, 2, 1, 2, 1, 2]));
        let s = periodize(&w(&[5]), 1).unwrap();
        assert_eq!(s.prefix(4), w(&[5, 5, 5, 5]));
        assert_eq!(periodize(&w(&[2, 1]), 2).unwrap().prefix(5), w(&[2, 1, 2, 1, 2]));
        assert!(periodize(&w(&[1]), 2).is_err());
    }

    #[test]
    fn splice_examples() {
        let tail = WordStream::constant(3).unwrap();
        assert_eq!(splice_preimage(&w(&[1, 2]), &tail).prefix(5), w(&[1, 2, 3, 3, 3]));
        assert_eq!(splice_preimage(&Word::empty(), &tail), tail);
        let ones = periodize(&w(&[1]), 1).unwrap();
        assert_eq!(splice_preimage(&w(&[4]), &ones).prefix(4), w(&[4, 1, 1, 1]));
    }

    #[test]
    fn lex_rank_matches_enumeration_order() {
        for (k, word) in enumerate_words(3, &cut(3)).unwrap().enumerate() {
            assert_eq!(word.lex_rank(3), k);
            assert_eq!(Word::from_lex_rank(k, 3, 3), word);
        }
    }
}
