//! Evidence-based direct revelation mechanisms.
//!
//! This crate models social choice environments with hard or costly evidence,
//! synthesizes the direct implementing mechanisms for them (large-transfer,
//! budget-balanced, small-transfer, cost-robust, cost-variation, and
//! renegotiation-proof variants) as executable outcome/transfer rules, and
//! verifies implementation claims by exhaustive equilibrium analysis of the
//! induced finite games in exact rational arithmetic.

pub mod costly;
pub mod env;
pub mod fixtures;
pub mod game;
pub mod hard;
pub mod io;
pub mod lies;
pub mod mech;
pub mod rational;
pub mod renegotiation;
pub mod simplex;
pub mod states;
pub mod variant;
pub mod variation;
pub mod verify;

pub use env::{validate_structure, Environment, UtilityProfile, ValidationReport};
pub use variant::{synthesize, Mechanism, VariantRequest};
pub use verify::{verify_implementation, VerificationReport, Verdict, VerifyConfig};
pub use rational::{Cost, Q};
pub use states::{OutcomeId, StateId, StateSet, StateSpace};
