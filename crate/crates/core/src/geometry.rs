//! Chart-level Riemannian geometry: metric evaluation, Christoffel symbols,
//! and the curvature tensor, all with exact forward-mode derivatives.
//!
//! A [`ChartManifold`] is a single coordinate chart: named coordinates, a
//! symmetric positive-definite metric given entrywise as expressions, an open
//! box domain, per-coordinate periodicity flags, and a boundary margin that
//! separates the working interior from the chart edge.
//!
//! Index conventions for the stored tensors (all indices are coordinate
//! slots):
//!
//! * `dg[[i, j, k]]`      = ∂ₖ g_ij
//! * `ddg[[i, j, k, l]]`  = ∂ₖ∂ₗ g_ij
//! * `dginv[[i, j, k]]`   = ∂ₖ gⁱʲ (inverse metric)
//! * `gamma[[i, j, k]]`   = Γⁱ_jk
//! * `dgamma[[i, j, k, l]]` = ∂ₗ Γⁱ_jk
//! * `riemann[[i, j, k, l]]` = Rⁱ_jkl, the component of R(∂ₖ, ∂ₗ)∂_j along ∂ᵢ
//!   for the curvature convention R(U, V)W = ∇_U∇_V W − ∇_V∇_U W − ∇_[U,V] W.

use crate::expr::{EvalError, Expression, Function, JetValue, Order, ParseError};
use crate::tensor::{Matrix, Tensor3, Tensor4};
use thiserror::Error;

/// Errors from chart construction and pointwise geometry evaluation.
#[derive(Debug, Error)]
pub enum GeometryError {
    /// The chart description itself is malformed (bad names, ragged metric,
    /// asymmetric metric, invalid domain or margins).
    #[error("invalid chart: {message}")]
    InvalidChart { message: String },
    /// A point fell outside the open chart domain.
    #[error("point {point:?} is outside the chart domain")]
    OutsideDomain { point: Vec<f64> },
    /// The metric failed its positive-definiteness check at a point.
    #[error("metric is not positive definite at {point:?}")]
    NotPositiveDefinite { point: Vec<f64> },
    /// A metric entry hit a domain error (division by zero, log of a
    /// non-positive value, ...) while being evaluated.
    #[error("metric evaluation failed at {point:?}: {source}")]
    Eval {
        point: Vec<f64>,
        source: EvalError,
    },
}

/// Plain-data description of a chart, as read from a manifest or a builtin
/// catalog entry. All strings are parsed and validated by
/// [`ChartManifold::new`].
#[derive(Clone, Debug)]
pub struct ChartSpec {
    pub name: String,
    pub coordinates: Vec<String>,
    /// Metric entries g_ij as expressions in the coordinates, row-major.
    pub metric: Vec<Vec<String>>,
    /// Per-coordinate open interval (lo, hi).
    pub domain: Vec<(f64, f64)>,
    /// Coordinates marked periodic wrap modulo their domain span.
    pub periodic: Vec<bool>,
    /// Working-interior inset from each non-periodic boundary.
    pub boundary_margin: Vec<f64>,
    /// Whether the chart covers a compact manifold (enables volume
    /// integrals).
    pub compact: bool,
}

/// A validated single-chart Riemannian manifold.
#[derive(Clone, Debug)]
pub struct ChartManifold {
    name: String,
    coordinates: Vec<String>,
    /// Upper-triangle metric entries, indexed by `i * dim + j` for `i <= j`.
    /// The lower triangle is mirrored at evaluation time so symmetry of every
    /// derived tensor is exact by construction.
    metric: Vec<Option<Expression>>,
    metric_text: Vec<Vec<String>>,
    domain: Vec<(f64, f64)>,
    periodic: Vec<bool>,
    boundary_margin: Vec<f64>,
    compact: bool,
}

fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn invalid(message: impl Into<String>) -> GeometryError {
    GeometryError::InvalidChart { message: message.into() }
}

impl ChartManifold {
    pub fn new(spec: ChartSpec) -> Result<Self, GeometryError> {
        let dim = spec.coordinates.len();
        if dim == 0 {
            return Err(invalid("chart needs at least one coordinate"));
        }
        for name in &spec.coordinates {
            if !is_identifier(name) {
                return Err(invalid(format!("coordinate name {name:?} is not a valid identifier")));
            }
            if Function::is_reserved(name) {
                return Err(invalid(format!(
                    "coordinate name {name:?} collides with a built-in function"
                )));
            }
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                if spec.coordinates[i] == spec.coordinates[j] {
                    return Err(invalid(format!(
                        "duplicate coordinate name {:?}",
                        spec.coordinates[i]
                    )));
                }
            }
        }
        if spec.metric.len() != dim || spec.metric.iter().any(|row| row.len() != dim) {
            return Err(invalid(format!("metric must be a {dim}x{dim} matrix of expressions")));
        }
        if spec.domain.len() != dim {
            return Err(invalid(format!("domain must list {dim} intervals")));
        }
        if spec.periodic.len() != dim {
            return Err(invalid(format!("periodic must list {dim} flags")));
        }
        if spec.boundary_margin.len() != dim {
            return Err(invalid(format!("boundary_margin must list {dim} values")));
        }
        for (k, &(lo, hi)) in spec.domain.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || !(lo < hi) {
                return Err(invalid(format!(
                    "domain for {:?} must be a finite interval with lo < hi, got ({lo}, {hi})",
                    spec.coordinates[k]
                )));
            }
            let margin = spec.boundary_margin[k];
            if !margin.is_finite() || margin < 0.0 {
                return Err(invalid(format!(
                    "boundary margin for {:?} must be non-negative, got {margin}",
                    spec.coordinates[k]
                )));
            }
            if !spec.periodic[k] && 2.0 * margin >= hi - lo {
                return Err(invalid(format!(
                    "boundary margin {margin} leaves no interior in domain ({lo}, {hi}) for {:?}",
                    spec.coordinates[k]
                )));
            }
        }

        // Parse the full metric grid so asymmetries and bad entries are both
        // reported, then keep only the upper triangle for evaluation.
        let mut parsed: Vec<Expression> = Vec::with_capacity(dim * dim);
        for (i, row) in spec.metric.iter().enumerate() {
            for (j, text) in row.iter().enumerate() {
                let expr = Expression::parse(text, &spec.coordinates).map_err(|err| match err {
                    ParseError::Syntax { position, message } => invalid(format!(
                        "metric entry g[{i}][{j}] = {text:?}: syntax error at byte {position}: {message}"
                    )),
                    ParseError::UnknownIdentifier { name } => invalid(format!(
                        "metric entry g[{i}][{j}] = {text:?}: unknown identifier {name:?}"
                    )),
                })?;
                parsed.push(expr);
            }
        }

        let manifold = ChartManifold {
            name: spec.name,
            coordinates: spec.coordinates,
            metric: (0..dim * dim)
                .map(|idx| {
                    let (i, j) = (idx / dim, idx % dim);
                    (i <= j).then(|| parsed[idx].clone())
                })
                .collect(),
            metric_text: spec.metric,
            domain: spec.domain,
            periodic: spec.periodic,
            boundary_margin: spec.boundary_margin,
            compact: spec.compact,
        };

        // Probe a few deterministic interior points: the metric must evaluate,
        // be symmetric, and be positive definite there.
        for point in manifold.probe_points() {
            for i in 0..dim {
                for j in 0..i {
                    let upper = parsed[j * dim + i]
                        .eval(&point)
                        .map_err(|source| GeometryError::Eval { point: point.clone(), source })?;
                    let lower = parsed[i * dim + j]
                        .eval(&point)
                        .map_err(|source| GeometryError::Eval { point: point.clone(), source })?;
                    let scale = 1.0 + upper.abs().max(lower.abs());
                    if (upper - lower).abs() > 1e-12 * scale {
                        return Err(invalid(format!(
                            "metric is not symmetric: g[{i}][{j}] = {lower} but g[{j}][{i}] = {upper} at {point:?}"
                        )));
                    }
                }
            }
            manifold.metric_values(&point)?;
        }
        Ok(manifold)
    }

    /// A handful of deterministic interior points used for construction-time
    /// sanity probes.
    fn probe_points(&self) -> Vec<Vec<f64>> {
        let fractions = [0.5, 0.31, 0.73, 0.12, 0.88];
        (0..fractions.len())
            .map(|k| {
                (0..self.dim())
                    .map(|d| {
                        let (lo, hi) = self.interior_interval(d);
                        // Stagger coordinates so probes are not on a diagonal.
                        let f = fractions[(k + d) % fractions.len()];
                        lo + f * (hi - lo)
                    })
                    .collect()
            })
            .collect()
    }

    fn interior_interval(&self, d: usize) -> (f64, f64) {
        let (lo, hi) = self.domain[d];
        if self.periodic[d] {
            (lo, hi)
        } else {
            (lo + self.boundary_margin[d], hi - self.boundary_margin[d])
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.coordinates.len()
    }

    pub fn coordinates(&self) -> &[String] {
        &self.coordinates
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    pub fn boundary_margin(&self) -> &[f64] {
        &self.boundary_margin
    }

    pub fn is_compact(&self) -> bool {
        self.compact
    }

    /// The metric entry expressions as originally written, row-major.
    pub fn metric_text(&self) -> &[Vec<String>] {
        &self.metric_text
    }

    fn upper(&self, i: usize, j: usize) -> &Expression {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.metric[a * self.dim() + b]
            .as_ref()
            .expect("upper triangle entries are always present")
    }

    /// Whether the point lies in the open chart domain. Periodic coordinates
    /// accept any value (they wrap).
    pub fn contains_open(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point.iter().enumerate().all(|(d, &x)| {
                x.is_finite()
                    && (self.periodic[d] || (self.domain[d].0 < x && x < self.domain[d].1))
            })
    }

    /// Whether the point lies in the working interior: at least the boundary
    /// margin away from every non-periodic chart edge.
    pub fn contains_interior(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point.iter().enumerate().all(|(d, &x)| {
                if !x.is_finite() {
                    return false;
                }
                if self.periodic[d] {
                    return true;
                }
                let (lo, hi) = self.interior_interval(d);
                lo <= x && x <= hi
            })
    }

    pub fn check_open(&self, point: &[f64]) -> Result<(), GeometryError> {
        if self.contains_open(point) {
            Ok(())
        } else {
            Err(GeometryError::OutsideDomain { point: point.to_vec() })
        }
    }

    /// Copy of `point` with periodic coordinates wrapped into [lo, hi).
    pub fn wrap_position(&self, point: &[f64]) -> Vec<f64> {
        point
            .iter()
            .enumerate()
            .map(|(d, &x)| {
                if self.periodic[d] {
                    let (lo, hi) = self.domain[d];
                    let span = hi - lo;
                    let mut w = (x - lo).rem_euclid(span) + lo;
                    if w >= hi {
                        w = lo;
                    }
                    w
                } else {
                    x
                }
            })
            .collect()
    }

    /// Component displacement `to - from`, taking each periodic coordinate
    /// through its nearest image.
    pub fn displacement(&self, from: &[f64], to: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|d| {
                let raw = to[d] - from[d];
                if self.periodic[d] {
                    let span = self.domain[d].1 - self.domain[d].0;
                    let wrapped = raw.rem_euclid(span);
                    if wrapped > 0.5 * span {
                        wrapped - span
                    } else {
                        wrapped
                    }
                } else {
                    raw
                }
            })
            .collect()
    }

    /// Metric matrix and √det g at a point, by plain value evaluation.
    pub fn metric_values(&self, point: &[f64]) -> Result<(Matrix, f64), GeometryError> {
        self.check_open(point)?;
        let dim = self.dim();
        let mut g = Matrix::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let value = self
                    .upper(i, j)
                    .eval(point)
                    .map_err(|source| GeometryError::Eval { point: point.to_vec(), source })?;
                g[[i, j]] = value;
                g[[j, i]] = value;
            }
        }
        let (_, sqrt_det) = g
            .spd_inverse()
            .ok_or_else(|| GeometryError::NotPositiveDefinite { point: point.to_vec() })?;
        Ok((g, sqrt_det))
    }

    /// √det g at a point (the Riemannian volume density in these
    /// coordinates).
    pub fn volume_factor(&self, point: &[f64]) -> Result<f64, GeometryError> {
        Ok(self.metric_values(point)?.1)
    }

    /// Full geometry bundle at a point: metric, inverse, first and second
    /// metric derivatives, Christoffel symbols, their derivatives, and the
    /// curvature tensor.
    pub fn geometry_jet(&self, point: &[f64]) -> Result<GeometryJet, GeometryError> {
        self.check_open(point)?;
        let dim = self.dim();

        let mut g = Matrix::zeros(dim);
        let mut dg = Tensor3::zeros(dim);
        let mut ddg = Tensor4::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let JetValue { value, gradient, hessian, .. } = self
                    .upper(i, j)
                    .eval_jet(point, Order::Second)
                    .map_err(|source| GeometryError::Eval { point: point.to_vec(), source })?;
                g[[i, j]] = value;
                g[[j, i]] = value;
                for k in 0..dim {
                    dg[[i, j, k]] = gradient[k];
                    dg[[j, i, k]] = gradient[k];
                    for l in 0..dim {
                        ddg[[i, j, k, l]] = hessian[[k, l]];
                        ddg[[j, i, k, l]] = hessian[[k, l]];
                    }
                }
            }
        }

        let (ginv, sqrt_det) = g
            .spd_inverse()
            .ok_or_else(|| GeometryError::NotPositiveDefinite { point: point.to_vec() })?;

        // ∂ₖ g⁻¹ = −g⁻¹ (∂ₖ g) g⁻¹
        let mut dginv = Tensor3::zeros(dim);
        for k in 0..dim {
            let dgk = Matrix::from_fn(dim, |i, j| dg[[i, j, k]]);
            let prod = ginv.mat_mul(&dgk).mat_mul(&ginv);
            for i in 0..dim {
                for j in 0..dim {
                    dginv[[i, j, k]] = -prod[[i, j]];
                }
            }
        }

        // Γⁱ_jk = ½ gⁱˡ (∂_j g_lk + ∂_k g_lj − ∂_l g_jk)
        let mut gamma = Tensor3::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                for k in j..dim {
                    let mut sum = 0.0;
                    for l in 0..dim {
                        sum += ginv[[i, l]] * (dg[[l, k, j]] + dg[[l, j, k]] - dg[[j, k, l]]);
                    }
                    gamma[[i, j, k]] = 0.5 * sum;
                    gamma[[i, k, j]] = 0.5 * sum;
                }
            }
        }

        // ∂ₘ Γⁱ_jk, by the product rule on the expression above.
        let mut dgamma = Tensor4::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                for k in j..dim {
                    for m in 0..dim {
                        let mut sum = 0.0;
                        for l in 0..dim {
                            sum += dginv[[i, l, m]]
                                * (dg[[l, k, j]] + dg[[l, j, k]] - dg[[j, k, l]])
                                + ginv[[i, l]]
                                    * (ddg[[l, k, j, m]] + ddg[[l, j, k, m]] - ddg[[j, k, l, m]]);
                        }
                        dgamma[[i, j, k, m]] = 0.5 * sum;
                        dgamma[[i, k, j, m]] = 0.5 * sum;
                    }
                }
            }
        }

        // Rⁱ_jkl = ∂ₖ Γⁱ_lj − ∂ₗ Γⁱ_kj + Γⁱ_km Γᵐ_lj − Γⁱ_lm Γᵐ_kj
        let mut riemann = Tensor4::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        let mut value = dgamma[[i, l, j, k]] - dgamma[[i, k, j, l]];
                        for m in 0..dim {
                            value += gamma[[i, k, m]] * gamma[[m, l, j]]
                                - gamma[[i, l, m]] * gamma[[m, k, j]];
                        }
                        riemann[[i, j, k, l]] = value;
                    }
                }
            }
        }

        Ok(GeometryJet {
            point: point.to_vec(),
            g,
            ginv,
            sqrt_det,
            dg,
            ddg,
            dginv,
            gamma,
            dgamma,
            riemann,
        })
    }
}

/// Pointwise geometric data, see the module docs for index conventions.
#[derive(Clone, Debug)]
pub struct GeometryJet {
    pub point: Vec<f64>,
    pub g: Matrix,
    pub ginv: Matrix,
    pub sqrt_det: f64,
    pub dg: Tensor3,
    pub ddg: Tensor4,
    pub dginv: Tensor3,
    pub gamma: Tensor3,
    pub dgamma: Tensor4,
    pub riemann: Tensor4,
}

impl GeometryJet {
    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    /// Lower an index: X_i = g_ij Xʲ.
    pub fn lower_index(&self, up: &[f64]) -> Vec<f64> {
        self.g.mul_vec(up)
    }

    /// Raise an index: Xⁱ = gⁱʲ X_j.
    pub fn raise_index(&self, down: &[f64]) -> Vec<f64> {
        self.ginv.mul_vec(down)
    }

    /// Inner product g(u, v) of two vectors (upper indices).
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let lowered = self.lower_index(u);
        lowered.iter().zip(v).map(|(a, b)| a * b).sum()
    }
}
