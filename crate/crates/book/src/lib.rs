//! The guide under `book/src`, compiled so that `cargo test --doc` runs every
//! listing. One module per chapter keeps failures traceable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/traffic.md")]
pub mod traffic {}
#[doc = include_str!("../../../book/src/compressed-sensing.md")]
pub mod compressed_sensing {}
#[doc = include_str!("../../../book/src/residual-detection.md")]
pub mod residual_detection {}
#[doc = include_str!("../../../book/src/signature-matching.md")]
pub mod signature_matching {}
#[doc = include_str!("../../../book/src/assurance.md")]
pub mod assurance {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
