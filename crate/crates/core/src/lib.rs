//! Multiplicative pair correlations of norm-form values in imaginary
//! quadratic fields: lattice enumeration, empirical measures, closed-form
//! limit objects and a small experiment runner.

pub mod config;
pub mod empirical;
pub mod error;
pub mod pairgeom;
pub mod quad;
pub mod ring;
pub mod runner;
pub mod theory;

pub use config::{BinGrid, CorrelationConfig, PsiMode, Scaling};
pub use empirical::{empirical_measure, oracle_measure, Atom, Histogram, TestFunction};
pub use error::{Error, Result};
pub use ring::{FieldParams, QuadInt};
pub use theory::{classify_regime, CaseId, RegimeInfo};
