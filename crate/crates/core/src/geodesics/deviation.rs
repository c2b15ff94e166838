use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::curve::{SampledCurve, Termination};
use crate::error::{Result, WindError};
use crate::exec::Execution;
use crate::ode::OdeOptions;
use crate::sstk::NullOptions;
use crate::wrs::{PointData, WindData};

use super::ivp::{geodesic_ivp, GeodesicOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlagEstimate {
    pub kappa: f64,
    /// `|κ(ε₁) − κ(ε₂)|`, the spread between the two offset sizes.
    pub stderr: f64,
    /// Number of separation samples used per fit.
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlagOptions {
    /// Fit window in `F`-length.
    pub window: f64,
    /// Velocity offsets; the first two are combined by Richardson extrapolation.
    pub offsets: [f64; 2],
    /// Separation samples on `(0, window]`.
    pub samples: usize,
    pub ode: OdeOptions,
    pub exec: Execution,
}

impl Default for FlagOptions {
    fn default() -> Self {
        FlagOptions {
            window: 0.5,
            offsets: [1e-4, 5e-5],
            samples: 50,
            ode: OdeOptions {
                h_max: 0.01,
                ..OdeOptions::default()
            },
            exec: Execution::default(),
        }
    }
}

/// `sn_κ(t)`: `sin(√κ t)/√κ`, `t` or `sinh(√−κ t)/√−κ`.
pub fn sn(kappa: f64, t: f64) -> f64 {
    if kappa.abs() < 1e-12 {
        t
    } else if kappa > 0.0 {
        let r = kappa.sqrt();
        (r * t).sin() / r
    } else {
        let r = (-kappa).sqrt();
        (r * t).sinh() / r
    }
}

/// Fundamental tensor `g_v = Hess(½F²)(v)` by central differences.
pub fn fundamental_tensor(pd: &PointData, v: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = v.len();
    let e = |x: &DVector<f64>| -> Result<f64> {
        let f = pd.speeds(x)?.f;
        Ok(0.5 * f * f)
    };
    let d = 1e-4 * v.norm();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut pp = v.clone();
            let mut pm = v.clone();
            let mut mp = v.clone();
            let mut mm = v.clone();
            pp[i] += d;
            pp[j] += d;
            pm[i] += d;
            pm[j] -= d;
            mp[i] -= d;
            mp[j] += d;
            mm[i] -= d;
            mm[j] -= d;
            let val = (e(&pp)? - e(&pm)? - e(&mp)? + e(&mm)?) / (4.0 * d * d);
            h[(i, j)] = val;
            h[(j, i)] = val;
        }
    }
    Ok(h)
}

/// Least-squares fit of `N(t) ≈ A sn_κ(t)`; returns `κ`.
fn fit_kappa(ts: &[f64], ns: &[f64]) -> f64 {
    let cost = |k: f64| {
        let s: Vec<f64> = ts.iter().map(|&t| sn(k, t)).collect();
        let a = s.iter().zip(ns).map(|(s, n)| s * n).sum::<f64>() / s.iter().map(|s| s * s).sum::<f64>();
        s.iter().zip(ns).map(|(s, n)| (n - a * s).powi(2)).sum::<f64>()
    };
    // coarse grid, then golden section around the best node
    let (lo, hi, steps) = (-30.0, 30.0, 600);
    let h = (hi - lo) / steps as f64;
    let best = (0..=steps)
        .map(|i| lo + h * i as f64)
        .min_by(|a, b| cost(*a).partial_cmp(&cost(*b)).expect("finite cost"))
        .expect("non-empty grid");
    let (mut a, mut b) = (best - h, best + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    while b - a > 1e-12 {
        if cost(c) < cost(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    0.5 * (a + b)
}

/// Flag curvature of the flag `(v, span{v, transverse})` at `p` by geodesic deviation.
///
/// Integrates the geodesic with velocity `v` (`F(v) = 1`) and four neighbours
/// whose initial velocities are offset by `±ε·transverse` and rescaled to
/// `F = 1`. The separation is differenced, its `g_γ̇`-orthogonal part measured
/// with the fundamental tensor, and its norm fitted to `A sn_κ(t)` on
/// `(0, window]`. The two offsets are combined by Richardson extrapolation.
pub fn flag_curvature_deviation(
    wd: &WindData,
    p: &[f64],
    v: &DVector<f64>,
    transverse: &DVector<f64>,
    opts: &FlagOptions,
) -> Result<FlagEstimate> {
    let pd = wd.at(p)?;
    let f = pd.speeds(v)?.f;
    if (f - 1.0).abs() > 1e-8 {
        return Err(WindError::argument(format!("flagpole must have F(v) = 1, got {f}")));
    }
    let vn = v.norm();
    let tn = transverse.norm();
    if tn == 0.0 || (v.dot(transverse).abs() / (vn * tn)) > 1.0 - 1e-9 {
        return Err(WindError::DegeneratePlane);
    }
    let gopts = GeodesicOptions {
        span: opts.window,
        null: NullOptions {
            ode: opts.ode,
            ..NullOptions::default()
        },
    };
    let mut starts = vec![v.clone()];
    for eps in opts.offsets {
        for sign in [1.0, -1.0] {
            let w = v + transverse * (sign * eps);
            let fw = pd.speeds(&w)?.f;
            starts.push(w / fw);
        }
    }
    let curves: Vec<Result<SampledCurve>> = opts.exec.map_slice(&starts, |s| geodesic_ivp(wd, p, s, &gopts));
    let curves: Vec<SampledCurve> = curves.into_iter().collect::<Result<_>>()?;
    if curves
        .iter()
        .any(|c| c.meta.termination != Termination::Completed || c.end() < opts.window * (1.0 - 1e-12))
    {
        return Err(WindError::ChartExit { window: opts.window });
    }
    let ts: Vec<f64> = (1..=opts.samples)
        .map(|k| opts.window * k as f64 / opts.samples as f64)
        .collect();
    let frames: Vec<(DMatrix<f64>, DVector<f64>)> = ts
        .iter()
        .map(|&t| {
            let (x, vel) = curves[0].sample(t);
            let pd = wd.at(x.as_slice())?;
            Ok((fundamental_tensor(&pd, &vel)?, vel))
        })
        .collect::<Result<_>>()?;
    let kappa_for = |k: usize| {
        let eps = opts.offsets[k];
        let (plus, minus) = (&curves[1 + 2 * k], &curves[2 + 2 * k]);
        let ns: Vec<f64> = ts
            .iter()
            .zip(&frames)
            .map(|(&t, (gv, vel))| {
                let j = (plus.point_at(t) - minus.point_at(t)) / (2.0 * eps);
                let along = (j.transpose() * gv * vel)[0] / (vel.transpose() * gv * vel)[0];
                let perp = &j - vel * along;
                (perp.transpose() * gv * &perp)[0].max(0.0).sqrt()
            })
            .collect();
        fit_kappa(&ts, &ns)
    };
    let k1 = kappa_for(0);
    let k2 = kappa_for(1);
    Ok(FlagEstimate {
        kappa: k2 + (k2 - k1) / 3.0,
        stderr: (k1 - k2).abs(),
        samples: ts.len(),
    })
}
