use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, WindError};

/// Central-difference step for first derivatives.
pub const FD_STEP_FIRST: f64 = 1e-5;
/// Step for second derivatives of the metric.
pub const FD_STEP_SECOND: f64 = 1e-4;

pub type DomainFn = dyn Fn(&[f64]) -> bool + Send + Sync;
pub type MetricFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;
/// `d1(p)[k] = ∂_k g(p)`.
pub type MetricD1Fn = dyn Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync;
/// `d2(p)[k][l] = ∂_k ∂_l g(p)`.
pub type MetricD2Fn = dyn Fn(&[f64]) -> Vec<Vec<DMatrix<f64>>> + Send + Sync;
pub type FieldFn = dyn Fn(&[f64]) -> DVector<f64> + Send + Sync;
/// `J(p)[(i, j)] = ∂_j W^i(p)`.
pub type JacobianFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

/// Which classical complete model a chart represents, when the builder knows it.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSpace {
    Euclidean,
    Sphere { radius: f64 },
    Hyperbolic { curvature: f64 },
}

/// A single coordinate chart carrying a Riemannian metric.
#[derive(Clone)]
pub struct ChartedSpace {
    dim: usize,
    label: String,
    domain: Arc<DomainFn>,
    metric: Arc<MetricFn>,
    metric_d1: Option<Arc<MetricD1Fn>>,
    metric_d2: Option<Arc<MetricD2Fn>>,
    model: Option<ModelSpace>,
}

impl fmt::Debug for ChartedSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartedSpace")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("analytic_d1", &self.metric_d1.is_some())
            .field("analytic_d2", &self.metric_d2.is_some())
            .field("model", &self.model)
            .finish()
    }
}

/// Value, gradient and Hessian of a conformal factor `φ` for `g = φ δ`.
pub type ConformalFactorFn = dyn Fn(&[f64]) -> (f64, DVector<f64>, DMatrix<f64>) + Send + Sync;

impl ChartedSpace {
    pub fn new<M>(dim: usize, label: impl Into<String>, metric: M) -> Self
    where
        M: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        assert!(dim > 0, "dimension must be positive");
        ChartedSpace {
            dim,
            label: label.into(),
            domain: Arc::new(|_| true),
            metric: Arc::new(metric),
            metric_d1: None,
            metric_d2: None,
            model: None,
        }
    }

    pub fn euclidean(dim: usize) -> Self {
        let zero = move |_: &[f64]| vec![DMatrix::zeros(dim, dim); dim];
        let zero2 = move |_: &[f64]| vec![vec![DMatrix::zeros(dim, dim); dim]; dim];
        ChartedSpace::new(dim, format!("euclidean R^{dim}"), move |_| DMatrix::identity(dim, dim))
            .with_derivatives(zero, zero2)
            .with_model(ModelSpace::Euclidean)
    }

    /// `g = φ δ` with analytic derivatives supplied by `factor`.
    pub fn conformally_flat<C>(dim: usize, label: impl Into<String>, factor: C) -> Self
    where
        C: Fn(&[f64]) -> (f64, DVector<f64>, DMatrix<f64>) + Send + Sync + 'static,
    {
        let factor: Arc<ConformalFactorFn> = Arc::new(factor);
        let f0 = factor.clone();
        let f1 = factor.clone();
        let f2 = factor;
        ChartedSpace::new(dim, label, move |p| DMatrix::identity(dim, dim) * f0(p).0).with_derivatives(
            move |p| {
                let (_, grad, _) = f1(p);
                (0..dim).map(|k| DMatrix::identity(dim, dim) * grad[k]).collect()
            },
            move |p| {
                let (_, _, hess) = f2(p);
                (0..dim)
                    .map(|k| (0..dim).map(|l| DMatrix::identity(dim, dim) * hess[(k, l)]).collect())
                    .collect()
            },
        )
    }

    pub fn with_domain<D>(mut self, domain: D) -> Self
    where
        D: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        self.domain = Arc::new(domain);
        self
    }

    pub fn with_derivatives<D1, D2>(mut self, d1: D1, d2: D2) -> Self
    where
        D1: Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync + 'static,
        D2: Fn(&[f64]) -> Vec<Vec<DMatrix<f64>>> + Send + Sync + 'static,
    {
        self.metric_d1 = Some(Arc::new(d1));
        self.metric_d2 = Some(Arc::new(d2));
        self
    }

    pub fn with_model(mut self, model: ModelSpace) -> Self {
        self.model = Some(model);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Forgets the model-space identification (e.g. after removing points).
    pub fn without_model(mut self) -> Self {
        self.model = None;
        self
    }

    /// Same metric, derivatives always taken by finite differences.
    pub fn without_derivatives(&self) -> Self {
        ChartedSpace {
            metric_d1: None,
            metric_d2: None,
            ..self.clone()
        }
    }

    /// The metric multiplied by the constant `c²`.
    pub fn scaled(&self, c: f64) -> Self {
        let c2 = c * c;
        let m = self.metric.clone();
        let mut out = ChartedSpace {
            dim: self.dim,
            label: format!("{} (scaled by {c}^2)", self.label),
            domain: self.domain.clone(),
            metric: Arc::new(move |p| m(p) * c2),
            metric_d1: None,
            metric_d2: None,
            model: match self.model {
                Some(ModelSpace::Euclidean) => Some(ModelSpace::Euclidean),
                Some(ModelSpace::Sphere { radius }) => Some(ModelSpace::Sphere {
                    radius: radius * c.abs(),
                }),
                Some(ModelSpace::Hyperbolic { curvature }) => Some(ModelSpace::Hyperbolic {
                    curvature: curvature / c2,
                }),
                None => None,
            },
        };
        if let (Some(d1), Some(d2)) = (self.metric_d1.clone(), self.metric_d2.clone()) {
            out.metric_d1 = Some(Arc::new(move |p| d1(p).into_iter().map(|m| m * c2).collect()));
            out.metric_d2 = Some(Arc::new(move |p| {
                d2(p)
                    .into_iter()
                    .map(|row| row.into_iter().map(|m| m * c2).collect())
                    .collect()
            }));
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn model(&self) -> Option<ModelSpace> {
        self.model
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.metric_d1.is_some()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim && p.iter().all(|x| x.is_finite()) && (self.domain)(p)
    }

    pub fn check(&self, p: &[f64]) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(WindError::OutsideDomain {
                label: self.label.clone(),
                point: p.to_vec(),
            })
        }
    }

    /// Metric components at `p`, domain-checked.
    pub fn metric_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.check(p)?;
        Ok((self.metric)(p))
    }

    /// Metric components without the domain check (finite-difference stencils).
    pub fn metric_raw(&self, p: &[f64]) -> DMatrix<f64> {
        (self.metric)(p)
    }

    /// `[∂_k g]_k`, analytic when available.
    pub fn metric_d1_at(&self, p: &[f64]) -> Vec<DMatrix<f64>> {
        if let Some(d1) = &self.metric_d1 {
            return d1(p);
        }
        let h = FD_STEP_FIRST;
        let mut q = p.to_vec();
        (0..self.dim)
            .map(|k| {
                q[k] = p[k] + h;
                let plus = (self.metric)(&q);
                q[k] = p[k] - h;
                let minus = (self.metric)(&q);
                q[k] = p[k];
                (plus - minus) / (2.0 * h)
            })
            .collect()
    }

    /// `[[∂_k ∂_l g]_l]_k`, analytic when available.
    pub fn metric_d2_at(&self, p: &[f64]) -> Vec<Vec<DMatrix<f64>>> {
        if let Some(d2) = &self.metric_d2 {
            return d2(p);
        }
        let h = FD_STEP_SECOND;
        let n = self.dim;
        let mut out = vec![vec![DMatrix::zeros(n, n); n]; n];
        let mut q = p.to_vec();
        let mut eval = |dk: f64, k: usize, dl: f64, l: usize| {
            q.copy_from_slice(p);
            q[k] += dk;
            q[l] += dl;
            (self.metric)(&q)
        };
        for k in 0..n {
            for l in k..n {
                let m = (eval(h, k, h, l) - eval(h, k, -h, l) - eval(-h, k, h, l) + eval(-h, k, -h, l)) / (4.0 * h * h);
                out[k][l] = m.clone();
                out[l][k] = m;
            }
        }
        out
    }

    pub fn inner(&self, p: &[f64], u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        let g = self.metric_at(p)?;
        Ok(u.dot(&(&g * v)))
    }

    pub fn norm(&self, p: &[f64], v: &DVector<f64>) -> Result<f64> {
        Ok(self.inner(p, v, v)?.max(0.0).sqrt())
    }
}

/// A smooth vector field on a chart.
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    label: String,
    value: Arc<FieldFn>,
    jacobian: Option<Arc<JacobianFn>>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl VectorField {
    pub fn new<V>(dim: usize, label: impl Into<String>, value: V) -> Self
    where
        V: Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
    {
        VectorField {
            dim,
            label: label.into(),
            value: Arc::new(value),
            jacobian: None,
        }
    }

    pub fn with_jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    pub fn zero(dim: usize) -> Self {
        VectorField::constant(DVector::zeros(dim)).with_label("zero")
    }

    pub fn constant(c: DVector<f64>) -> Self {
        let dim = c.len();
        let label = format!("constant {:?}", c.as_slice());
        VectorField::new(dim, label, move |_| c.clone()).with_jacobian(move |_| DMatrix::zeros(dim, dim))
    }

    /// `W(x) = A x + b`.
    pub fn affine(a: DMatrix<f64>, b: DVector<f64>) -> Self {
        let dim = b.len();
        assert_eq!(a.shape(), (dim, dim));
        let a2 = a.clone();
        VectorField::new(dim, "affine", move |p| &a * DVector::from_column_slice(p) + &b)
            .with_jacobian(move |_| a2.clone())
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn without_jacobian(&self) -> Self {
        VectorField {
            jacobian: None,
            ..self.clone()
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value_at(&self, p: &[f64]) -> DVector<f64> {
        (self.value)(p)
    }

    /// `J[(i, j)] = ∂_j W^i`, analytic when available.
    pub fn jacobian_at(&self, p: &[f64]) -> DMatrix<f64> {
        if let Some(j) = &self.jacobian {
            return j(p);
        }
        let h = FD_STEP_FIRST;
        let mut out = DMatrix::zeros(self.dim, self.dim);
        let mut q = p.to_vec();
        for j in 0..self.dim {
            q[j] = p[j] + h;
            let plus = (self.value)(&q);
            q[j] = p[j] - h;
            let minus = (self.value)(&q);
            q[j] = p[j];
            out.set_column(j, &((plus - minus) / (2.0 * h)));
        }
        out
    }

    pub fn scaled(&self, c: f64) -> Self {
        let v = self.value.clone();
        VectorField {
            dim: self.dim,
            label: format!("{c} * ({})", self.label),
            value: Arc::new(move |p| v(p) * c),
            jacobian: self.jacobian.clone().map(|j| {
                let f: Arc<JacobianFn> = Arc::new(move |p| j(p) * c);
                f
            }),
        }
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0).with_label(format!("-({})", self.label))
    }

    pub fn sum(&self, other: &VectorField) -> Self {
        assert_eq!(self.dim, other.dim);
        let (a, b) = (self.value.clone(), other.value.clone());
        let jac = match (&self.jacobian, &other.jacobian) {
            (Some(ja), Some(jb)) => {
                let (ja, jb) = (ja.clone(), jb.clone());
                let f: Arc<JacobianFn> = Arc::new(move |p| ja(p) + jb(p));
                Some(f)
            }
            _ => None,
        };
        VectorField {
            dim: self.dim,
            label: format!("{} + {}", self.label, other.label),
            value: Arc::new(move |p| a(p) + b(p)),
            jacobian: jac,
        }
    }
}

/// A point together with a tangent basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFrame {
    pub point: Vec<f64>,
    pub basis: Vec<DVector<f64>>,
}

impl PointFrame {
    /// Builds a frame, rejecting bases whose Gram determinant under `g` vanishes.
    pub fn new(space: &ChartedSpace, point: Vec<f64>, basis: Vec<DVector<f64>>) -> Result<Self> {
        let g = space.metric_at(&point)?;
        if basis.len() != space.dim() {
            return Err(WindError::argument(format!(
                "frame needs {} vectors, got {}",
                space.dim(),
                basis.len()
            )));
        }
        let n = basis.len();
        let gram = DMatrix::from_fn(n, n, |i, j| basis[i].dot(&(&g * &basis[j])));
        let scale: f64 = (0..n).map(|i| gram[(i, i)]).product();
        if gram.determinant().abs() <= 1e-12 * scale.abs().max(f64::MIN_POSITIVE) {
            return Err(WindError::argument("frame vectors are linearly dependent"));
        }
        Ok(PointFrame { point, basis })
    }

    /// A `g`-orthonormal frame obtained by Gram-Schmidt on the coordinate basis.
    pub fn orthonormal(space: &ChartedSpace, point: Vec<f64>) -> Result<Self> {
        let g = space.metric_at(&point)?;
        let n = space.dim();
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n);
        for k in 0..n {
            let mut v = DVector::zeros(n);
            v[k] = 1.0;
            for b in &basis {
                let c = b.dot(&(&g * &v));
                v -= b * c;
            }
            let len = v.dot(&(&g * &v)).sqrt();
            basis.push(v / len);
        }
        Ok(PointFrame { point, basis })
    }
}

/// Cholesky factor `L` with `g = L Lᵀ`; `L⁻ᵀ e` maps Euclidean unit vectors to `g`-unit vectors.
pub(crate) fn unit_map(g: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let chol = g.clone().cholesky()?;
    let l = chol.l();
    let linv = l.try_inverse()?;
    Some(linv.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bumpy() -> ChartedSpace {
        ChartedSpace::conformally_flat(2, "bumpy", |p| {
            let (x, y) = (p[0], p[1]);
            let e = (0.3 * x * y).exp();
            let phi = 1.0 + x * x + e;
            let grad = DVector::from_vec(vec![2.0 * x + 0.3 * y * e, 0.3 * x * e]);
            let hess = DMatrix::from_row_slice(
                2,
                2,
                &[
                    2.0 + 0.09 * y * y * e,
                    0.3 * e + 0.09 * x * y * e,
                    0.3 * e + 0.09 * x * y * e,
                    0.09 * x * x * e,
                ],
            );
            (phi, grad, hess)
        })
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let s = bumpy();
        let fd = s.without_derivatives();
        for p in [[0.3, -0.2], [1.1, 0.7], [-0.8, 0.4]] {
            let (a1, f1) = (s.metric_d1_at(&p), fd.metric_d1_at(&p));
            for k in 0..2 {
                assert!((&a1[k] - &f1[k]).amax() < 1e-8);
            }
            let (a2, f2) = (s.metric_d2_at(&p), fd.metric_d2_at(&p));
            for k in 0..2 {
                for l in 0..2 {
                    assert!((&a2[k][l] - &f2[k][l]).amax() < 1e-6, "{k}{l}");
                }
            }
        }
    }

    #[test]
    fn domain_errors() {
        let s = ChartedSpace::euclidean(2).with_domain(|p| p[1] > 0.0);
        assert!(s.metric_at(&[0.0, 1.0]).is_ok());
        assert!(matches!(
            s.metric_at(&[0.0, -1.0]),
            Err(WindError::OutsideDomain { .. })
        ));
        assert!(s.metric_at(&[0.0]).is_err());
    }

    #[test]
    fn jacobian_fallback() {
        let w = VectorField::new(2, "w", |p| DVector::from_vec(vec![p[0] * p[1], p[1].sin()]));
        let j = w.jacobian_at(&[0.5, 0.2]);
        assert!((j[(0, 0)] - 0.2).abs() < 1e-9);
        assert!((j[(0, 1)] - 0.5).abs() < 1e-9);
        assert!((j[(1, 1)] - 0.2f64.cos()).abs() < 1e-9);
        assert!(j[(1, 0)].abs() < 1e-12);
    }

    #[test]
    fn frames() {
        let s = bumpy();
        let f = PointFrame::orthonormal(&s, vec![0.2, 0.1]).unwrap();
        let g = s.metric_at(&f.point).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((f.basis[i].dot(&(&g * &f.basis[j])) - want).abs() < 1e-12);
            }
        }
        let dep = vec![DVector::from_vec(vec![1.0, 2.0]), DVector::from_vec(vec![2.0, 4.0])];
        assert!(PointFrame::new(&s, vec![0.0, 0.0], dep).is_err());
    }

    #[test]
    fn unit_map_gives_unit_vectors() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.5]);
        let m = unit_map(&g).unwrap();
        for th in [0.0, 1.0, 2.5] {
            let e = DVector::from_vec(vec![f64::cos(th), f64::sin(th)]);
            let u = &m * e;
            assert!((u.dot(&(&g * &u)) - 1.0).abs() < 1e-12);
        }
    }
}
