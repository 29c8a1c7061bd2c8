//! Differential operators on vector fields and grid-based classification.
//!
//! Index conventions, continuing the geometry module's:
//!
//! * `x_up[i]`          = Xⁱ (components of the field)
//! * `dx[[i, j]]`       = ∂ⱼ Xⁱ
//! * `ddx[[i, j, k]]`   = ∂ⱼ∂ₖ Xⁱ
//! * `nabla[[i, k]]`    = (∇ₖ X)ⁱ = ∂ₖ Xⁱ + Γⁱ_kl Xˡ
//! * `second[[i, j, k]]` = (∇ⱼ∇ₖ X)ⁱ, the second covariant derivative with
//!   the outer derivative in slot `j`
//!
//! The three classification residuals are sup-norms over a deterministic
//! sample grid of: the symmetrized lowered covariant differential (the
//! metric's Lie derivative along the field), the geodesic-deviation operator
//! ∇²X + R(X, ·)·, and the divergence.

use crate::expr::{EvalError, Expression, JetValue, Order, ParseError};
use crate::geometry::{ChartManifold, GeometryError, GeometryJet};
use crate::sampling::{grid_points, GridSpec};
use crate::tensor::{Matrix, Tensor3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from parsing a vector field's component expressions.
#[derive(Debug, Error)]
pub enum FieldSpecError {
    #[error("field must have {expected} components, got {got}")]
    WrongArity { expected: usize, got: usize },
    #[error("field component {index} = {text:?}: {source}")]
    Parse {
        index: usize,
        text: String,
        source: ParseError,
    },
}

/// Errors from evaluating operators at points.
#[derive(Debug, Error)]
pub enum OperatorError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("field evaluation failed at {point:?}: {source}")]
    FieldEval {
        point: Vec<f64>,
        source: EvalError,
    },
}

/// A vector field given componentwise as expressions in chart coordinates.
#[derive(Clone, Debug)]
pub struct FieldSpec {
    components: Vec<Expression>,
    text: Vec<String>,
}

impl FieldSpec {
    /// Parse component expressions against a chart's coordinate names.
    pub fn parse(components: &[String], coordinates: &[String]) -> Result<Self, FieldSpecError> {
        if components.len() != coordinates.len() {
            return Err(FieldSpecError::WrongArity {
                expected: coordinates.len(),
                got: components.len(),
            });
        }
        let parsed = components
            .iter()
            .enumerate()
            .map(|(index, text)| {
                Expression::parse(text, coordinates).map_err(|source| FieldSpecError::Parse {
                    index,
                    text: text.clone(),
                    source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FieldSpec { components: parsed, text: components.to_vec() })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// The component expressions as originally written.
    pub fn text(&self) -> &[String] {
        &self.text
    }

    /// Component values Xⁱ at a point (no derivatives).
    pub fn values(&self, point: &[f64]) -> Result<Vec<f64>, OperatorError> {
        self.components
            .iter()
            .map(|expr| {
                expr.eval(point)
                    .map_err(|source| OperatorError::FieldEval { point: point.to_vec(), source })
            })
            .collect()
    }

    /// Components with first and second partials at a point.
    pub fn jet(&self, point: &[f64]) -> Result<FieldJet, OperatorError> {
        let dim = self.dim();
        let mut x_up = vec![0.0; dim];
        let mut dx = Matrix::zeros(dim);
        let mut ddx = Tensor3::zeros(dim);
        for (i, expr) in self.components.iter().enumerate() {
            let JetValue { value, gradient, hessian, .. } = expr
                .eval_jet(point, Order::Second)
                .map_err(|source| OperatorError::FieldEval { point: point.to_vec(), source })?;
            x_up[i] = value;
            for j in 0..dim {
                dx[[i, j]] = gradient[j];
                for k in 0..dim {
                    ddx[[i, j, k]] = hessian[[j, k]];
                }
            }
        }
        Ok(FieldJet { x_up, dx, ddx })
    }
}

/// A vector field's components and partials at one point.
#[derive(Clone, Debug)]
pub struct FieldJet {
    /// Xⁱ
    pub x_up: Vec<f64>,
    /// `dx[[i, j]]` = ∂ⱼ Xⁱ
    pub dx: Matrix,
    /// `ddx[[i, j, k]]` = ∂ⱼ∂ₖ Xⁱ
    pub ddx: Tensor3,
}

/// Covariant differential `nabla[[i, k]]` = (∇ₖ X)ⁱ = ∂ₖ Xⁱ + Γⁱ_kl Xˡ.
pub fn covariant_differential(geo: &GeometryJet, field: &FieldJet) -> Matrix {
    let dim = geo.dim();
    Matrix::from_fn(dim, |i, k| {
        let mut value = field.dx[[i, k]];
        for l in 0..dim {
            value += geo.gamma[[i, k, l]] * field.x_up[l];
        }
        value
    })
}

/// Deformation tensor `K[[i, k]]` = ∇ᵢ X_k + ∇ₖ X_i (the Lie derivative of
/// the metric along X). The field is a Killing field exactly when this
/// vanishes.
pub fn metric_deformation(geo: &GeometryJet, field: &FieldJet) -> Matrix {
    let nabla = covariant_differential(geo, field);
    let lowered = geo.g.mat_mul(&nabla);
    lowered.transpose().add(&lowered)
}

/// Second covariant derivative `second[[i, j, k]]` = (∇ⱼ∇ₖ X)ⁱ.
pub fn second_covariant_derivative(geo: &GeometryJet, field: &FieldJet) -> Tensor3 {
    let dim = geo.dim();
    let nabla = covariant_differential(geo, field);
    let mut second = Tensor3::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                let mut value = field.ddx[[i, j, k]];
                for l in 0..dim {
                    value += geo.dgamma[[i, k, l, j]] * field.x_up[l]
                        + geo.gamma[[i, k, l]] * field.dx[[l, j]]
                        + geo.gamma[[i, j, l]] * nabla[[l, k]]
                        - geo.gamma[[l, j, k]] * nabla[[i, l]];
                }
                second[[i, j, k]] = value;
            }
        }
    }
    second
}

/// Geodesic-deviation operator `J[[i, j, k]]` with J(T, T) = ∇_T∇_T X +
/// R(X, T)T along any geodesic with velocity T. The field restricts to a
/// Jacobi field along every geodesic exactly when this vanishes.
pub fn jacobi_operator(geo: &GeometryJet, field: &FieldJet) -> Tensor3 {
    let dim = geo.dim();
    let second = second_covariant_derivative(geo, field);
    let mut jacobi = Tensor3::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                let mut value = second[[i, j, k]];
                for m in 0..dim {
                    value -= geo.riemann[[i, k, j, m]] * field.x_up[m];
                }
                jacobi[[i, j, k]] = value;
            }
        }
    }
    jacobi
}

/// Lie derivative of the Levi-Civita connection along the field,
/// `lie[[i, j, k]]` = (L_X Γ)ⁱ_jk. Agrees with [`jacobi_operator`]
/// identically; both are computed so the identity can be checked numerically.
pub fn connection_lie_derivative(geo: &GeometryJet, field: &FieldJet) -> Tensor3 {
    let dim = geo.dim();
    let mut lie = Tensor3::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                let mut value = field.ddx[[i, j, k]];
                for l in 0..dim {
                    value += field.x_up[l] * geo.dgamma[[i, j, k, l]]
                        - geo.gamma[[l, j, k]] * field.dx[[i, l]]
                        + geo.gamma[[i, k, l]] * field.dx[[l, j]]
                        + geo.gamma[[i, j, l]] * field.dx[[l, k]];
                }
                lie[[i, j, k]] = value;
            }
        }
    }
    lie
}

/// Divergence ∇ᵢ Xⁱ (trace of the covariant differential).
pub fn divergence(geo: &GeometryJet, field: &FieldJet) -> f64 {
    let nabla = covariant_differential(geo, field);
    (0..geo.dim()).map(|i| nabla[[i, i]]).sum()
}

/// Acceptance thresholds for the sup-norm residuals.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub killing: f64,
    pub jacobi: f64,
    pub solenoidal: f64,
    /// Maximum allowed spread (max − min) for the divergence to count as
    /// constant over the chart.
    pub divergence_constancy: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds::uniform(1e-8)
    }
}

impl Thresholds {
    pub fn uniform(tol: f64) -> Self {
        Thresholds {
            killing: tol,
            jacobi: tol,
            solenoidal: tol,
            divergence_constancy: tol,
        }
    }
}

/// Descriptor of the sample grid a classification ran over.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GridDescriptor {
    pub lattice_per_dim: usize,
    pub quasi_random: usize,
    pub total_points: usize,
}

/// Summary statistics of the divergence over the sample grid.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DivergenceSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// max − min.
    pub spread: f64,
}

/// Result of classifying one field on one chart.
#[derive(Clone, Debug, Serialize)]
pub struct ClassificationReport {
    pub field: Vec<String>,
    pub grid: GridDescriptor,
    pub thresholds: Thresholds,
    /// sup‖∇X + (∇X)ᵀ‖ over the grid (both indices lowered).
    pub killing_residual: f64,
    /// sup‖∇²X + R(X, ·)·‖ over the grid.
    pub jacobi_residual: f64,
    /// sup|div X| over the grid.
    pub divergence_sup: f64,
    pub divergence: DivergenceSummary,
    pub is_killing: bool,
    pub is_global_jacobi: bool,
    pub is_solenoidal: bool,
    /// Mean divergence when it is constant over the grid (spread within
    /// threshold), otherwise absent.
    pub constant_divergence: Option<f64>,
}

/// Options for [`classify`].
#[derive(Clone, Copy, Debug, Default)]
pub struct ClassifyOptions {
    pub grid: GridSpec,
    pub thresholds: Thresholds,
}

/// Classify a field on a chart by measuring all three residuals on the
/// deterministic sample grid.
pub fn classify(
    manifold: &ChartManifold,
    field: &FieldSpec,
    options: &ClassifyOptions,
) -> Result<ClassificationReport, OperatorError> {
    let points = grid_points(manifold, &options.grid);
    let mut killing_residual = 0.0f64;
    let mut jacobi_residual = 0.0f64;
    let mut div_min = f64::INFINITY;
    let mut div_max = f64::NEG_INFINITY;
    let mut div_sum = 0.0;

    for point in &points {
        let geo = manifold.geometry_jet(point)?;
        let jet = field.jet(point)?;
        killing_residual = killing_residual.max(metric_deformation(&geo, &jet).max_abs());
        jacobi_residual = jacobi_residual.max(jacobi_operator(&geo, &jet).max_abs());
        let div = divergence(&geo, &jet);
        div_min = div_min.min(div);
        div_max = div_max.max(div);
        div_sum += div;
    }

    let spread = div_max - div_min;
    let mean = div_sum / points.len() as f64;
    let divergence_sup = div_min.abs().max(div_max.abs());
    let thresholds = options.thresholds;
    Ok(ClassificationReport {
        field: field.text().to_vec(),
        grid: GridDescriptor {
            lattice_per_dim: options.grid.lattice_per_dim,
            quasi_random: options.grid.quasi_random,
            total_points: points.len(),
        },
        thresholds,
        killing_residual,
        jacobi_residual,
        divergence_sup,
        divergence: DivergenceSummary { min: div_min, max: div_max, mean, spread },
        is_killing: killing_residual <= thresholds.killing,
        is_global_jacobi: jacobi_residual <= thresholds.jacobi,
        is_solenoidal: divergence_sup <= thresholds.solenoidal,
        constant_divergence: (spread <= thresholds.divergence_constancy).then_some(mean),
    })
}
