use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid word: symbol {0} is not a positive integer")]
    InvalidSymbol(u32),

    #[error("symbol {symbol} is outside the alphabet of size {size}")]
    SymbolOutOfRange { symbol: u32, size: u32 },

    #[error("invalid alphabet cutoff {0}: must be at least 1")]
    InvalidCutoff(u32),

    #[error("enumeration of {requested} words exceeds the cap of {cap} (set THERMOSHIFT_CAP_WORDS to raise it)")]
    ResourceLimit { requested: u128, cap: u64 },

    #[error("point {x} lies outside the domain [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("map {map} is not a contraction on the domain: contraction factor {factor} >= 1")]
    NotContracting { map: String, factor: f64 },

    #[error("divergent series: {0}")]
    Divergent(String),

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("invalid bracket [{lo}, {hi}]: pressure values {p_lo} and {p_hi} do not straddle zero")]
    BracketInvalid { lo: f64, hi: f64, p_lo: f64, p_hi: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    pub fn is_resource_limit(&self) -> bool {
        matches!(self, Error::ResourceLimit { .. })
    }
}
