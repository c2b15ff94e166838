//! Christoffel symbols and the Riemann tensor from metric derivatives.
//!
//! Sign convention, used everywhere in the crate:
//!
//! `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z`, with components
//! `R(∂_k, ∂_l) ∂_j = R^i_{jkl} ∂_i`, and `R(X,Y,Z,T) = g(R(X,Y)Z, T)`.
//! Sectional curvature is `R(u,v,v,u) / (|u|²|v|² − g(u,v)²)`, positive on
//! round spheres.

use nalgebra::{DMatrix, DVector};

use super::space::ChartedSpace;
use crate::error::{Result, WindError};

/// `Γ^k_ij`, stored densely with index order `(k, i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    /// Symbols of an arbitrary nondegenerate metric from its inverse and first derivatives.
    pub fn from_parts(g_inv: &DMatrix<f64>, dg: &[DMatrix<f64>]) -> Self {
        let n = g_inv.nrows();
        let mut data = vec![0.0; n * n * n];
        // lowered symbols Γ_lij = ½(∂_i g_lj + ∂_j g_li − ∂_l g_ij)
        let mut lowered = vec![0.0; n * n * n];
        for l in 0..n {
            for i in 0..n {
                for j in i..n {
                    let v = 0.5 * (dg[i][(l, j)] + dg[j][(l, i)] - dg[l][(i, j)]);
                    lowered[(l * n + i) * n + j] = v;
                    lowered[(l * n + j) * n + i] = v;
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += g_inv[(k, l)] * lowered[(l * n + i) * n + j];
                    }
                    data[(k * n + i) * n + j] = s;
                    data[(k * n + j) * n + i] = s;
                }
            }
        }
        Christoffel { dim: n, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    /// `a^k = −Γ^k_ij u^i u^j`, the geodesic acceleration.
    pub fn acceleration(&self, u: &[f64]) -> DVector<f64> {
        let n = self.dim;
        DVector::from_fn(n, |k, _| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += self.get(k, i, j) * u[i] * u[j];
                }
            }
            -s
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Christoffel symbols of `space` at `p`.
pub fn christoffel(space: &ChartedSpace, p: &[f64]) -> Result<Christoffel> {
    let g = space.metric_at(p)?;
    let g_inv = invert(&g)?;
    Ok(Christoffel::from_parts(&g_inv, &space.metric_d1_at(p)))
}

pub(crate) fn invert(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    g.clone()
        .try_inverse()
        .ok_or_else(|| WindError::argument("metric is singular"))
}

/// `R^i_{jkl}`, index order `(i, j, k, l)`, plus the metric it was built from.
#[derive(Debug, Clone)]
pub struct Curvature {
    dim: usize,
    metric: DMatrix<f64>,
    data: Vec<f64>,
}

impl Curvature {
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.dim;
        self.data[((i * n + j) * n + k) * n + l]
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.metric
    }

    /// `R(X,Y)Z`.
    pub fn apply(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        let n = self.dim;
        DVector::from_fn(n, |i, _| {
            let mut s = 0.0;
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        s += self.get(i, j, k, l) * z[j] * x[k] * y[l];
                    }
                }
            }
            s
        })
    }

    /// `R(X,Y,Z,T) = g(R(X,Y)Z, T)`.
    pub fn lowered(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>, t: &DVector<f64>) -> f64 {
        self.apply(x, y, z).dot(&(&self.metric * t))
    }

    pub fn sectional(&self, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        let g = &self.metric;
        let uu = u.dot(&(g * u));
        let vv = v.dot(&(g * v));
        let uv = u.dot(&(g * v));
        let area = uu * vv - uv * uv;
        if area <= 1e-14 * uu * vv || area <= 0.0 {
            return Err(WindError::DegeneratePlane);
        }
        Ok(self.lowered(u, v, v, u) / area)
    }
}

/// Riemann tensor of `space` at `p`, from first and second metric derivatives.
pub fn curvature(space: &ChartedSpace, p: &[f64]) -> Result<Curvature> {
    let n = space.dim();
    let g = space.metric_at(p)?;
    let g_inv = invert(&g)?;
    let d1 = space.metric_d1_at(p);
    let d2 = space.metric_d2_at(p);
    let gamma = Christoffel::from_parts(&g_inv, &d1);

    // ∂_m g^{-1} = −g^{-1} (∂_m g) g^{-1}
    let dg_inv: Vec<DMatrix<f64>> = d1.iter().map(|d| -(&g_inv * d * &g_inv)).collect();

    // dgamma[m][(k,i,j)] = ∂_m Γ^k_ij
    let idx = |k: usize, i: usize, j: usize| (k * n + i) * n + j;
    let mut dgamma = vec![vec![0.0; n * n * n]; n];
    for (m, dgm) in dgamma.iter_mut().enumerate() {
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let s = 0.5 * (d1[i][(l, j)] + d1[j][(l, i)] - d1[l][(i, j)]);
                    let ds = 0.5 * (d2[m][i][(l, j)] + d2[m][j][(l, i)] - d2[m][l][(i, j)]);
                    for k in 0..n {
                        dgm[idx(k, i, j)] += dg_inv[m][(k, l)] * s + g_inv[(k, l)] * ds;
                    }
                }
            }
        }
    }

    let mut data = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut r = dgamma[k][idx(i, l, j)] - dgamma[l][idx(i, k, j)];
                    for m in 0..n {
                        r += gamma.get(i, k, m) * gamma.get(m, l, j) - gamma.get(i, l, m) * gamma.get(m, k, j);
                    }
                    data[((i * n + j) * n + k) * n + l] = r;
                }
            }
        }
    }
    Ok(Curvature {
        dim: n,
        metric: g,
        data,
    })
}

/// Sectional curvature of the plane spanned by `u`, `v` at `p`.
pub fn sectional(space: &ChartedSpace, p: &[f64], u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
    curvature(space, p)?.sectional(u, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::space::ChartedSpace;

    fn half_plane() -> ChartedSpace {
        ChartedSpace::conformally_flat(2, "half-plane", |p| {
            let y = p[1];
            (
                1.0 / (y * y),
                DVector::from_vec(vec![0.0, -2.0 / (y * y * y)]),
                DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 6.0 / (y * y * y * y)]),
            )
        })
        .with_domain(|p| p[1] > 0.0)
    }

    fn stereo(dim: usize, r: f64) -> ChartedSpace {
        ChartedSpace::conformally_flat(dim, "stereo", move |p| {
            let s: f64 = p.iter().map(|x| x * x).sum();
            let d = 1.0 + s;
            let phi = 4.0 * r * r / (d * d);
            let grad = DVector::from_fn(dim, |k, _| -16.0 * r * r * p[k] / (d * d * d));
            let hess = DMatrix::from_fn(dim, dim, |k, l| {
                let delta = if k == l { 1.0 } else { 0.0 };
                -16.0 * r * r * delta / (d * d * d) + 96.0 * r * r * p[k] * p[l] / (d * d * d * d)
            });
            (phi, grad, hess)
        })
    }

    fn e(n: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        v
    }

    #[test]
    fn euclidean_symbols_vanish() {
        let s = ChartedSpace::euclidean(3);
        assert_eq!(christoffel(&s, &[0.3, -1.0, 2.0]).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn half_plane_symbols() {
        // conformal metric e^{2σ}δ with σ = −ln y: Γ^x_xy = −1/y, Γ^y_xx = 1/y, Γ^y_yy = −1/y
        let s = half_plane();
        for space in [s.clone(), s.without_derivatives()] {
            let c = christoffel(&space, &[0.0, 1.0]).unwrap();
            assert!((c.get(0, 0, 1) + 1.0).abs() < 1e-8);
            assert!((c.get(0, 1, 0) + 1.0).abs() < 1e-8);
            assert!((c.get(1, 0, 0) - 1.0).abs() < 1e-8);
            assert!((c.get(1, 1, 1) + 1.0).abs() < 1e-8);
            assert!(c.get(0, 0, 0).abs() < 1e-8);
            assert!(c.get(1, 0, 1).abs() < 1e-8);
        }
    }

    #[test]
    fn stereographic_origin_symbols_vanish() {
        let c = christoffel(&stereo(2, 1.0), &[0.0, 0.0]).unwrap();
        assert!(c.max_abs() < 1e-14);
    }

    #[test]
    fn sectional_values() {
        let u = e(2, 0);
        let v = e(2, 1);
        assert_eq!(
            sectional(&ChartedSpace::euclidean(2), &[1.0, 2.0], &u, &v).unwrap(),
            0.0
        );
        let k = sectional(&half_plane(), &[0.0, 1.0], &u, &v).unwrap();
        assert!((k + 1.0).abs() < 1e-10);
        let kfd = sectional(&half_plane().without_derivatives(), &[0.3, 1.4], &u, &v).unwrap();
        assert!((kfd + 1.0).abs() < 1e-5, "{kfd}");
        for p in [[0.0, 0.0], [0.7, -1.2], [2.5, 0.3]] {
            let k = sectional(&stereo(2, 2.0), &p, &u, &v).unwrap();
            assert!((k - 0.25).abs() < 1e-10, "{k}");
        }
    }

    #[test]
    fn degenerate_plane() {
        let u = e(2, 0);
        assert_eq!(
            sectional(&ChartedSpace::euclidean(2), &[0.0, 0.0], &u, &(u.clone() * 2.0)),
            Err(WindError::DegeneratePlane)
        );
    }

    #[test]
    fn first_bianchi_and_antisymmetry() {
        let s = stereo(3, 1.3);
        let c = curvature(&s, &[0.4, -0.3, 0.9]).unwrap();
        let vs = [
            DVector::from_vec(vec![1.0, 0.2, -0.5]),
            DVector::from_vec(vec![0.3, -1.0, 0.4]),
            DVector::from_vec(vec![-0.7, 0.1, 1.1]),
        ];
        let (u, v, w) = (&vs[0], &vs[1], &vs[2]);
        let cyc = c.apply(u, v, w) + c.apply(v, w, u) + c.apply(w, u, v);
        assert!(cyc.amax() < 1e-9);
        let anti = c.apply(u, v, w) + c.apply(v, u, w);
        assert!(anti.amax() < 1e-12);
        // pair symmetry R(u,v,w,z) = R(w,z,u,v)
        let z = DVector::from_vec(vec![0.5, 0.5, -0.2]);
        assert!((c.lowered(u, v, w, &z) - c.lowered(w, &z, u, v)).abs() < 1e-9);
    }
}
