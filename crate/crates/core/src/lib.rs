//! Arcsine and Upsilon transformations of Lévy measures in polar form,
//! the classes they generate, and the stochastic integrals behind them.

// `!(x > 0.0)` deliberately rejects NaN; quadrature nodes are kept as published.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::type_complexity)]

pub mod battery;
pub mod classes;
pub mod error;
pub mod quadrature;
pub mod radial;
pub mod spec;
pub mod special;
pub mod stochastic;
pub mod transforms;
pub mod verify;

pub use nalgebra;

pub use classes::{classify, classify_measure, ClassFlag, ClassVerdict};
pub use error::{LevyError, Result};
pub use quadrature::{Decay, Estimate, QuadratureBudget, QuadratureError};
pub use radial::{Atom, LevyTriplet, PolarLevyMeasure, RadialDensity, RadialMeasure};
pub use spec::{parse_measure_spec, Expr, MeasureSpec};
pub use stochastic::{IntegrandSpec, SampleSet, SamplerConfig};
pub use transforms::{DensityTable, DilationMeasure, TransformedDensity};
pub use verify::{run_suite, Suite, VerificationReport, VerifyConfig};
