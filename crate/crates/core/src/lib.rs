//! Path information assurance from compressed traffic windows.
//!
//! Each 30-minute event window of per-tick feature counts is compressed with
//! a partial-DCT sensing matrix, screened for volume anomalies in the
//! residual PCA subspace, and, when anomalous, clustered and matched against
//! known attack signatures. Signature match probabilities weighted by threat
//! level give a path threat score `O_f` and an assurance factor `I = 1/O_f`.
//!
//! The modules follow that pipeline:
//!
//! * [`traffic`]: windows, the feature catalog, the synthetic generator.
//! * [`cs`]: sensing matrices, compression and sparse reconstruction.
//! * [`anomaly`]: residual-subspace detection with Q-statistic limits.
//! * [`signature`]: complete-linkage clustering and signature matching.
//! * [`assurance`]: threat scores, assurance factors, the multipath graph
//!   and the per-window pipeline.
//! * [`experiment`]: seeded batch runs, metrics and plot data.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anomaly;
pub mod assurance;
pub mod cs;
mod error;
pub mod experiment;
pub mod signature;
pub mod traffic;

pub use error::{Error, Result};
