//! Berezin-type bounds for Dirichlet-Laplacian eigenvalue moments on twisted
//! tubes whose twisting velocity explodes at infinity, together with a
//! finite-difference eigensolver used to check them on truncated tubes.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the
//! `*F64` aliases below fix the scalar to double precision, which is what
//! the verification pipeline is calibrated for.

pub mod bound;
pub mod eigen;
pub mod error;
pub mod quadrature;
pub mod roots;
pub mod scalar;
pub mod section;
pub mod slice;
pub mod special;
pub mod twist;

pub use bound::{BoundQuery, BoundResult, ConstantPolicy, EpsilonChoice, Variant};
pub use eigen::{GridMask, GridSpec, SparseOperator, Spectrum, VerificationReport};
pub use error::{Error, Result};
pub use scalar::{Interval, Real};
pub use section::{AngleWindow, CrossSection, Point};
pub use slice::{SliceIntervals, SliceLawReport};
pub use twist::{Branch, ConditionReport, ConditionSet, Family, TwistProfile};

pub type TwistProfileF64 = TwistProfile<f64>;
pub type TwistProfileF32 = TwistProfile<f32>;
pub type CrossSectionF64 = CrossSection<f64>;
pub type CrossSectionF32 = CrossSection<f32>;
pub type BoundQueryF64 = BoundQuery<f64>;
pub type BoundResultF64 = BoundResult<f64>;
pub type SliceIntervalsF64 = SliceIntervals<f64>;
pub type GridSpecF64 = GridSpec<f64>;
pub type SpectrumF64 = Spectrum<f64>;

/// Version string embedded in emitted reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
