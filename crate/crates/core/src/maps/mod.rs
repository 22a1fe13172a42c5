//! Piecewise-linear interval maps, the builtin systems and the zero-chaos
//! certificate.

pub mod builtin;
pub mod certificate;
pub mod config;
pub mod pl;

pub use builtin::{builtin, builtin_by_name, identify, Builtin};
pub use certificate::{zero_chaos_certificate, Certificate, Verdict};
pub use config::{MapJson, SystemConfig, SystemJson};
pub use pl::{covering_gaps, Branch, FiniteSet, Interval, PiecewiseLinearMap, Uncovered};
