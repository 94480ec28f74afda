//! Thermodynamic formalism for iterated function systems on an interval:
//! words and cylinders, summable Hölder potential families, the transfer
//! operator and its eigendata, rigorous pressure brackets, Gibbs cylinder
//! tables, the equilibrium identity and dimension roots.
//!
//! Every numerical result carries an [`ErrorLedger`] of its known error
//! sources; checks compare defects against the ledger rather than against
//! fixed tolerances.

// NaN-rejecting comparisons like `!(x > 0.0)` are intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod branches;
pub mod dimension;
pub mod equilibrium;
pub mod error;
pub mod gibbs;
pub mod grid;
pub mod ifs;
pub mod ledger;
pub mod potential;
pub mod pressure;
pub mod shift;
pub mod transfer;

pub use dimension::{DimensionParams, DimensionResult};
pub use equilibrium::EquilibriumReport;
pub use error::{Error, Result};
pub use gibbs::GibbsTable;
pub use grid::{Grid, GridFunction};
pub use ifs::{ContractionMap, IfsSystem, Interval, MapFamily};
pub use ledger::{ErrorLedger, LogSumExp};
pub use potential::{DistortionData, HolderData, Model, Potential};
pub use pressure::{PressureEstimate, RecurrenceCertificate, Verdict};
pub use shift::{AlphabetCutoff, Word, WordStream};
pub use transfer::{AtomMeasure, EigenData, HatOperator, SpectralParams, Spectrum};
