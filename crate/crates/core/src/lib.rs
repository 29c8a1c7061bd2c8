//! Numerical differential geometry on coordinate charts: classify vector
//! fields on chart-defined Riemannian manifolds as metric-preserving
//! (Killing), geodesic-preserving (globally Jacobi), and volume-preserving
//! (solenoidal), and verify the relations between those classes by direct
//! computation — pointwise operator residuals, flow integration, and volume
//! integrals.

pub mod catalog;
pub mod dynamics;
pub mod expr;
pub mod geometry;
pub mod manifest;
pub mod operators;
pub mod quadrature;
pub mod report;
pub mod runner;
pub mod sampling;
pub mod suite;
pub mod tensor;

pub use expr::{EvalError, Expression, JetValue, Order, ParseError};
pub use geometry::{ChartManifold, ChartSpec, GeometryError, GeometryJet};
pub use operators::{
    classify, ClassificationReport, ClassifyOptions, FieldSpec, FieldSpecError, OperatorError,
    Thresholds,
};
