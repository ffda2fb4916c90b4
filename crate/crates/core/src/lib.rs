//! Random-sum stability toolkit.
//!
//! A law `X` is stable under a random count `N` when `X₁ + … + X_N` has the
//! law of `cX`. In transform terms the Laplace transform `L` of `X` and the
//! PGF `φ` of `N` satisfy `φ(L(u)) = L(cu)`, so `φ = L ∘ (c·) ∘ L⁻¹`.
//!
//! Modules:
//! - [`series`]: truncated power series and PGF checks.
//! - [`families`]: named PGF families and continuous-time brood laws.
//! - [`stable`]: closed-form stable laws, exponents and samplers.
//! - [`transform`]: PGF-ness tests of `L ∘ (c·) ∘ L⁻¹` and semigroup scans.
//! - [`sim`]: Galton–Watson and continuous-time branching simulation.
//! - [`stats`]: goodness-of-fit statistics.
//! - [`catalog`]: textual names for the above.

pub mod catalog;
pub mod error;
pub mod families;
pub mod quad;
pub mod rng;
pub mod series;
pub mod sim;
pub mod stable;
pub mod stats;
pub mod transform;

pub use error::{Error, Result};
pub use families::{GeneratingDistribution, PgfFamily};
pub use rng::{SeedTree, SimRng, StreamRole};
pub use series::{PgfFailure, PgfVerdict, SeriesMean, TruncatedSeries};
pub use sim::{SimReport, Verdict};
pub use stable::{ClosedFormLaw, StableExponent};
pub use transform::{LaplaceSpec, PgfnessReport, ScanClassification, SemigroupScan};

/// Toolkit version string embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
