//! Lie derivatives, homothety and curvature diagnostics for vector fields.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::space::{ChartedSpace, VectorField};
use super::tensors::{christoffel, curvature};
use crate::error::{Result, WindError};

/// `(L_W g)_ij = W^k ∂_k g_ij + g_kj ∂_i W^k + g_ik ∂_j W^k`.
pub fn lie_derivative_metric(space: &ChartedSpace, w: &VectorField, p: &[f64]) -> Result<DMatrix<f64>> {
    let g = space.metric_at(p)?;
    let d1 = space.metric_d1_at(p);
    let wv = w.value_at(p);
    let jac = w.jacobian_at(p);
    let n = space.dim();
    let mut out = DMatrix::zeros(n, n);
    for (k, dk) in d1.iter().enumerate() {
        out += dk * wv[k];
    }
    // g_kj ∂_i W^k = (Jᵀ g)_ij
    let jt_g = jac.transpose() * &g;
    out += &jt_g + jt_g.transpose();
    Ok((&out + out.transpose()) * 0.5)
}

/// `∇_X Z` at `p`.
pub fn covariant_derivative(
    space: &ChartedSpace,
    z: &VectorField,
    p: &[f64],
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    let gamma = christoffel(space, p)?;
    let zv = z.value_at(p);
    let mut out = z.jacobian_at(p) * x;
    let n = space.dim();
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            for k in 0..n {
                s += gamma.get(i, j, k) * x[j] * zv[k];
            }
        }
        out[i] += s;
    }
    Ok(out)
}

/// `|∇_Z Z|_g` at `p`; zero exactly for geodesic fields.
pub fn geodesic_field_residual(space: &ChartedSpace, z: &VectorField, p: &[f64]) -> Result<f64> {
    let zv = z.value_at(p);
    let a = covariant_derivative(space, z, p, &zv)?;
    space.norm(p, &a)
}

/// `g(∇_X Z, ∇_Y Z) − R(X,Z,Z,Y)`.
pub fn killing_identity_residual(
    space: &ChartedSpace,
    z: &VectorField,
    p: &[f64],
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<f64> {
    let g = space.metric_at(p)?;
    let nx = covariant_derivative(space, z, p, x)?;
    let ny = covariant_derivative(space, z, p, y)?;
    let zv = z.value_at(p);
    let r = curvature(space, p)?.lowered(x, &zv, &zv, y);
    Ok(nx.dot(&(&g * ny)) - r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HomothetyClass {
    Killing,
    Homothetic { mu: f64 },
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomothetyReport {
    pub class: HomothetyClass,
    /// Least-squares `μ` over all samples (reported even when not homothetic).
    pub mu: f64,
    /// `max_s |L_W g − 2μ g|_F`.
    pub residual: f64,
    /// `max_s |L_W g|_F`.
    pub lie_max: f64,
}

/// Decides Killing / μ-homothetic / neither from Lie derivatives at `samples`.
pub fn homothety_classify(
    space: &ChartedSpace,
    w: &VectorField,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<HomothetyReport> {
    if samples.len() < 2 {
        return Err(WindError::argument("homothety check needs at least 2 sample points"));
    }
    let mut pairs = Vec::with_capacity(samples.len());
    for p in samples {
        pairs.push((lie_derivative_metric(space, w, p)?, space.metric_at(p)?));
    }
    let lie_max = pairs.iter().map(|(l, _)| l.norm()).fold(0.0, f64::max);
    let num: f64 = pairs.iter().map(|(l, g)| l.dot(g)).sum();
    let den: f64 = pairs.iter().map(|(_, g)| g.dot(g)).sum();
    let mu = num / (2.0 * den);
    let residual = pairs
        .iter()
        .map(|(l, g)| (l - g * (2.0 * mu)).norm())
        .fold(0.0, f64::max);
    let class = if lie_max < tol {
        HomothetyClass::Killing
    } else if residual < tol {
        HomothetyClass::Homothetic { mu }
    } else {
        HomothetyClass::Neither
    };
    Ok(HomothetyReport {
        class,
        mu: if lie_max < tol { 0.0 } else { mu },
        residual,
        lie_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurvatureCheck {
    Constant { k0: f64, spread: f64 },
    NotConstant { mean: f64, spread: f64 },
}

impl CurvatureCheck {
    pub fn constant(&self) -> Option<f64> {
        match *self {
            CurvatureCheck::Constant { k0, .. } => Some(k0),
            CurvatureCheck::NotConstant { .. } => None,
        }
    }

    pub fn spread(&self) -> f64 {
        match *self {
            CurvatureCheck::Constant { spread, .. } | CurvatureCheck::NotConstant { spread, .. } => spread,
        }
    }
}

/// Number of random planes per sample in [`constant_curvature_check`].
pub const RANDOM_PLANES: usize = 3;

/// Samples sectional curvature over coordinate planes plus random planes at each sample.
///
/// Dimension one has no planes; it reports `Constant { k0: 0 }`.
pub fn constant_curvature_check(space: &ChartedSpace, samples: &[Vec<f64>], tol: f64) -> Result<CurvatureCheck> {
    if samples.len() < 2 {
        return Err(WindError::argument("curvature check needs at least 2 sample points"));
    }
    let n = space.dim();
    if n == 1 {
        for p in samples {
            space.check(p)?;
        }
        return Ok(CurvatureCheck::Constant { k0: 0.0, spread: 0.0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de);
    let mut values = Vec::new();
    for p in samples {
        let c = curvature(space, p)?;
        for i in 0..n {
            for j in (i + 1)..n {
                let mut u = DVector::zeros(n);
                let mut v = DVector::zeros(n);
                u[i] = 1.0;
                v[j] = 1.0;
                values.push(c.sectional(&u, &v)?);
            }
        }
        let mut drawn = 0;
        while drawn < RANDOM_PLANES {
            let u = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            if let Ok(k) = c.sectional(&u, &v) {
                values.push(k);
                drawn += 1;
            }
        }
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi - lo;
    Ok(if spread < tol {
        CurvatureCheck::Constant { k0: mean, spread }
    } else {
        CurvatureCheck::NotConstant { mean, spread }
    })
}
