//! Explicit error accounting attached to every numerical result.

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerEntry {
    pub source: String,
    pub bound: f64,
}

/// Named, additive error bounds. Truncation tails, interpolation and
/// merge errors land here instead of being dropped.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ErrorLedger {
    entries: Vec<LedgerEntry>,
}

impl ErrorLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, source: impl Into<String>, bound: f64) {
        self.entries.push(LedgerEntry {
            source: source.into(),
            bound,
        });
    }

    pub fn with(mut self, source: impl Into<String>, bound: f64) -> Self {
        self.add(source, bound);
        self
    }

    pub fn extend(&mut self, other: &ErrorLedger) {
        self.entries.extend(other.entries.iter().cloned());
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn get(&self, source: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.source == source).map(|e| e.bound)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.bound).sum()
    }
}

/// Numerically stable Σ exp(vᵢ), accumulated in a fixed order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, v: f64) {
        if v == f64::NEG_INFINITY {
            return;
        }
        if v <= self.max {
            self.sum += (v - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - v).exp() + 1.0;
            self.max = v;
        }
    }

    pub fn merge(&mut self, other: &LogSumExp) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if other.max <= self.max {
            self.sum += other.sum * (other.max - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - other.max).exp() + other.sum;
            self.max = other.max;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ledger_totals() {
        let l = ErrorLedger::new().with("tail", 1e-3).with("grid", 2e-3);
        assert!((l.total() - 3e-3).abs() < 1e-18);
        assert_eq!(l.get("grid"), Some(2e-3));
        assert_eq!(l.get("none"), None);
    }

    #[test]
    fn logsumexp_matches_direct_sum() {
        let vals = [-3.0, 0.5, 700.0, 699.0, -1e300];
        let mut a = LogSumExp::new();
        vals.iter().for_each(|&v| a.push(v));
        let expected = 700.0 + (1.0 + (-1f64).exp()).ln();
        assert!((a.value() - expected).abs() < 1e-12);

        let mut b = LogSumExp::new();
        b.push(0.0);
        let mut c = LogSumExp::new();
        c.push(2f64.ln());
        b.merge(&c);
        assert!((b.value() - 3f64.ln()).abs() < 1e-15);
        assert_eq!(LogSumExp::new().value(), f64::NEG_INFINITY);
    }
}
