//! The SSTK spacetime `(ℝ × M, g)` of a wind Riemannian structure.
//!
//! In coordinates `(t, x¹..xⁿ)` the metric is
//! `g = [[−Λ, ωᵀ], [ω, g_R]]` with `ω = −g_R(W, ·)`. It is independent of `t`,
//! so `K = ∂_t` is Killing and `g(γ̇, K)` is conserved along geodesics.
//! Future-directed lightlike geodesics project onto WRS geodesics.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::curve::{SampledCurve, Termination};
use crate::error::{Result, WindError};
use crate::geometry::{invert, Christoffel};
use crate::ode::{adaptive_step, dopri_step, OdeOptions};
use crate::wrs::{PointData, WindData};

/// `(τ, v)`: the `dt` component and the spatial part.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimeVec {
    pub tau: f64,
    pub spatial: DVector<f64>,
}

impl SpacetimeVec {
    pub fn new(tau: f64, spatial: DVector<f64>) -> Self {
        SpacetimeVec { tau, spatial }
    }

    /// The Killing field `K = ∂_t` in dimension `n`.
    pub fn killing(n: usize) -> Self {
        SpacetimeVec::new(1.0, DVector::zeros(n))
    }

    pub fn stacked(&self) -> DVector<f64> {
        let n = self.spatial.len();
        DVector::from_fn(n + 1, |i, _| if i == 0 { self.tau } else { self.spatial[i - 1] })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CausalType {
    Timelike,
    Lightlike,
    Spacelike,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeOrientation {
    Future,
    Past,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalCharacter {
    pub kind: CausalType,
    pub orientation: TimeOrientation,
}

/// Relative threshold for the lightlike test `|g(v, v)| ≤ tol · (τ² + |v|²)`.
pub const NULL_TOL: f64 = 1e-9;

pub(crate) fn block_metric(pd: &PointData) -> DMatrix<f64> {
    let n = pd.g.nrows();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m[(0, 0)] = -pd.lambda;
    for i in 0..n {
        m[(0, i + 1)] = -pd.gw[i];
        m[(i + 1, 0)] = -pd.gw[i];
    }
    m.view_mut((1, 1), (n, n)).copy_from(&pd.g);
    m
}

pub fn metric_at(wd: &WindData, p: &[f64]) -> Result<DMatrix<f64>> {
    Ok(block_metric(&wd.at(p)?))
}

/// `∂_a g` for `a = t, x¹..xⁿ` (the `t` entry vanishes).
fn metric_derivatives(wd: &WindData, p: &[f64], pd: &PointData) -> Vec<DMatrix<f64>> {
    let n = wd.dim();
    let dg = wd.space.metric_d1_at(p);
    let jac = wd.wind.jacobian_at(p);
    let mut out = vec![DMatrix::zeros(n + 1, n + 1)];
    for (k, dgk) in dg.iter().enumerate() {
        let dw = jac.column(k).into_owned();
        // ∂_k(gW) = (∂_k g) W + g ∂_k W
        let dgw = dgk * &pd.w + &pd.g * &dw;
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m[(0, 0)] = pd.w.dot(&(dgk * &pd.w)) + 2.0 * pd.gw.dot(&dw);
        for i in 0..n {
            m[(0, i + 1)] = -dgw[i];
            m[(i + 1, 0)] = -dgw[i];
        }
        m.view_mut((1, 1), (n, n)).copy_from(dgk);
        out.push(m);
    }
    out
}

/// Christoffel symbols of the spacetime metric at spatial point `p`.
pub fn christoffel_at(wd: &WindData, p: &[f64]) -> Result<Christoffel> {
    let pd = wd.at(p)?;
    let g_inv = invert(&block_metric(&pd))?;
    Ok(Christoffel::from_parts(&g_inv, &metric_derivatives(wd, p, &pd)))
}

/// Causal character from a spacetime metric matrix.
///
/// Causal vectors are future-directed iff `τ > 0`, or `τ = 0` and `g_R(W, v) > 0`.
pub fn classify_causal(g: &DMatrix<f64>, sv: &SpacetimeVec) -> Result<CausalCharacter> {
    let x = sv.stacked();
    let scale = sv.tau * sv.tau + sv.spatial.norm_squared();
    if scale == 0.0 {
        return Err(WindError::argument("causal character of the zero vector is undefined"));
    }
    let q = x.dot(&(g * &x));
    let tol = NULL_TOL * scale * g.amax().max(1.0);
    let kind = if q < -tol {
        CausalType::Timelike
    } else if q <= tol {
        CausalType::Lightlike
    } else {
        CausalType::Spacelike
    };
    let orientation = if kind == CausalType::Spacelike {
        TimeOrientation::NotApplicable
    } else {
        // g_R(W, v) = −ω(v)
        let beta = -(g.row(0).columns(1, sv.spatial.len()) * &sv.spatial)[0];
        if sv.tau > 0.0 || (sv.tau == 0.0 && beta > 0.0) {
            TimeOrientation::Future
        } else {
            TimeOrientation::Past
        }
    };
    Ok(CausalCharacter { kind, orientation })
}

pub fn causal_character(wd: &WindData, p: &[f64], sv: &SpacetimeVec) -> Result<CausalCharacter> {
    classify_causal(&metric_at(wd, p)?, sv)
}

/// `(1, v)` for `v` on either piece of the indicatrix `Σ_p`.
pub fn null_lift(wd: &WindData, p: &[f64], v: &DVector<f64>) -> Result<SpacetimeVec> {
    const TOL: f64 = 1e-8;
    let s = wd.speeds(p, v)?;
    let on_f = (s.f - 1.0).abs() < TOL;
    let on_fl = s.f_l.finite().is_some_and(|fl| (fl - 1.0).abs() < TOL);
    if !(on_f || on_fl) {
        return Err(WindError::argument(format!(
            "vector is not on the indicatrix (F = {}, F_l = {})",
            s.f, s.f_l
        )));
    }
    Ok(SpacetimeVec::new(1.0, v.clone()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopAt {
    /// Stop at this value of the affine parameter.
    Affine(f64),
    /// Stop when the coordinate `t` reaches this value.
    CoordinateTime(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullOptions {
    pub ode: OdeOptions,
    /// Restore `g(γ̇, γ̇) = 0` through `τ̇` every this many accepted steps (0 = never).
    pub renormalize_every: usize,
    pub stop: StopAt,
}

impl Default for NullOptions {
    fn default() -> Self {
        NullOptions {
            ode: OdeOptions::default(),
            renormalize_every: 100,
            stop: StopAt::Affine(1.0),
        }
    }
}

/// An integrated lightlike geodesic with its conservation diagnostics.
#[derive(Debug, Clone)]
pub struct NullGeodesic {
    /// Points `(t, x)` and velocities `(τ̇, ẋ)` over the affine parameter.
    pub curve: SampledCurve,
    /// `g(γ̇, K)` at the start.
    pub energy: f64,
    /// `max |g(γ̇, K) − energy|` along the curve.
    pub energy_drift: f64,
    /// `max |g(γ̇, γ̇)| / ‖γ̇‖²` along the curve.
    pub null_drift: f64,
    /// Number of chart switches performed.
    pub chart_switches: usize,
}

fn rhs(wd: &WindData, y: &DVector<f64>) -> Result<DVector<f64>> {
    let n = wd.dim();
    let x = y.rows(1, n);
    let u = y.rows(n + 1, n + 1);
    let gamma = christoffel_at(wd, x.as_slice())?;
    let acc = gamma.acceleration(u.as_slice());
    let mut out = DVector::zeros(2 * (n + 1));
    out.rows_mut(0, n + 1).copy_from(&u);
    out.rows_mut(n + 1, n + 1).copy_from(&acc);
    Ok(out)
}

fn invariants(wd: &WindData, y: &DVector<f64>) -> Result<(f64, f64)> {
    let n = wd.dim();
    let g = metric_at(wd, y.rows(1, n).as_slice())?;
    let u = y.rows(n + 1, n + 1).into_owned();
    let gu = &g * &u;
    Ok((gu[0], u.dot(&gu) / u.norm_squared()))
}

/// Re-solves `τ̇` so that the velocity is exactly null, keeping `ẋ`.
fn renormalize(wd: &WindData, y: &mut DVector<f64>) -> Result<()> {
    let n = wd.dim();
    let pd = wd.at(y.rows(1, n).as_slice())?;
    let xd = y.rows(n + 2, n).into_owned();
    let tau = y[n + 1];
    // −Λ τ² − 2 β τ + |ẋ|² = 0
    let a = -pd.lambda;
    let b = -2.0 * pd.beta(&xd);
    let c = pd.norm2(&xd);
    let new_tau = if a.abs() < 1e-14 * (b.abs() + c.abs()).max(1.0) {
        if b == 0.0 {
            return Ok(());
        }
        -c / b
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return Ok(());
        }
        let sq = disc.sqrt();
        let q = -0.5 * (b + b.signum() * sq);
        let roots = [q / a, if q != 0.0 { c / q } else { q / a }];
        if (roots[0] - tau).abs() < (roots[1] - tau).abs() {
            roots[0]
        } else {
            roots[1]
        }
    };
    if new_tau.is_finite() {
        y[n + 1] = new_tau;
    }
    Ok(())
}

fn spatial_norm(y: &DVector<f64>, n: usize) -> f64 {
    y.rows(1, n).norm()
}

/// State in the original chart for output.
fn to_original(current: &WindData, in_other: bool, y: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let n = current.dim();
    let mut pt = y.rows(0, n + 1).into_owned();
    let mut vel = y.rows(n + 1, n + 1).into_owned();
    if in_other {
        let sw = current.chart_switch().expect("other chart has a switch back");
        let x = y.rows(1, n).into_owned();
        let xd = y.rows(n + 2, n).into_owned();
        pt.rows_mut(1, n).copy_from(&(sw.map)(x.as_slice()));
        vel.rows_mut(1, n).copy_from(&(sw.push)(x.as_slice(), &xd));
    }
    (pt, vel)
}

/// Integrates the lightlike geodesic from `(t0, p)` with initial velocity `dir`.
pub fn null_geodesic(
    wd: &WindData,
    t0: f64,
    p: &[f64],
    dir: &SpacetimeVec,
    opts: &NullOptions,
) -> Result<NullGeodesic> {
    null_geodesic_until(wd, t0, p, dir, opts, |_| false)
}

/// As [`null_geodesic`], additionally stopping (with [`Termination::TouchPoint`])
/// as soon as `stop(x)` holds at an accepted spatial point in the original chart.
pub fn null_geodesic_until<S>(
    wd: &WindData,
    t0: f64,
    p: &[f64],
    dir: &SpacetimeVec,
    opts: &NullOptions,
    stop: S,
) -> Result<NullGeodesic>
where
    S: Fn(&[f64]) -> bool,
{
    let n = wd.dim();
    if dir.spatial.len() != n || p.len() != n {
        return Err(WindError::argument("dimension mismatch in null_geodesic"));
    }
    let g0 = metric_at(wd, p)?;
    let u0 = dir.stacked();
    let q0 = u0.dot(&(&g0 * &u0));
    if q0.abs() > 1e-8 * u0.norm_squared() * g0.amax().max(1.0) {
        return Err(WindError::argument(format!(
            "initial direction is not lightlike: g(v, v) = {q0:e}"
        )));
    }
    let mut y = DVector::zeros(2 * (n + 1));
    y[0] = t0;
    y.rows_mut(1, n).copy_from_slice(p);
    y.rows_mut(n + 1, n + 1).copy_from(&u0);

    let other = wd.chart_switch().map(|s| (s.other)());
    let mut current = wd;
    let mut in_other = false;
    let mut switches = 0;

    let (energy, _) = invariants(wd, &y)?;
    let mut energy_drift: f64 = 0.0;
    let mut null_drift = q0.abs() / u0.norm_squared();

    let mut params = vec![0.0];
    let mut points = vec![y.rows(0, n + 1).into_owned()];
    let mut velocities = vec![u0.clone()];
    let mut termination = Termination::MaxSteps;

    let mut s = 0.0;
    let mut h = opts.ode.h_init.min(opts.ode.h_max);
    let mut accepted = 0usize;
    for _ in 0..opts.ode.max_steps {
        if let StopAt::Affine(s_end) = opts.stop {
            if s >= s_end - 1e-14 * s_end.abs().max(1.0) {
                termination = Termination::Completed;
                break;
            }
            h = h.min(s_end - s);
        }
        let f = |_s: f64, y: &DVector<f64>| rhs(current, y);
        let (s1, mut y1, h1) = match adaptive_step(&f, s, &y, h, &opts.ode) {
            Ok(r) => r,
            Err(WindError::OutsideDomain { .. }) => {
                termination = Termination::ChartExit;
                break;
            }
            Err(e) => return Err(e),
        };
        let mut s_new = s1;
        let mut finished = false;
        if let StopAt::CoordinateTime(t_end) = opts.stop {
            if y1[0] >= t_end {
                // Newton on the step length so that t lands on t_end
                let mut hh = s1 - s;
                let mut yy = y1.clone();
                for _ in 0..8 {
                    let resid = yy[0] - t_end;
                    if resid.abs() <= 1e-13 * t_end.abs().max(1.0) {
                        break;
                    }
                    hh -= resid / yy[n + 1];
                    yy = dopri_step(&f, s, &y, hh, &opts.ode)?.0;
                }
                yy[0] = t_end;
                y1 = yy;
                s_new = s + hh;
                finished = true;
            }
        }
        accepted += 1;
        if opts.renormalize_every > 0 && accepted.is_multiple_of(opts.renormalize_every) {
            renormalize(current, &mut y1)?;
        }
        let (e, q) = invariants(current, &y1)?;
        energy_drift = energy_drift.max((e - energy).abs());
        null_drift = null_drift.max(q.abs());
        y = y1;
        s = s_new;
        h = h1;
        let (pt, vel) = to_original(current, in_other, &y);
        let touched = stop(pt.rows(1, n).as_slice());
        params.push(s);
        points.push(pt);
        velocities.push(vel);
        if touched {
            termination = Termination::TouchPoint;
            break;
        }
        if finished {
            termination = Termination::Completed;
            break;
        }
        if let Some(sw) = current.chart_switch() {
            if spatial_norm(&y, n) > sw.threshold {
                let x = y.rows(1, n).into_owned();
                let xd = y.rows(n + 2, n).into_owned();
                y.rows_mut(1, n).copy_from(&(sw.map)(x.as_slice()));
                y.rows_mut(n + 2, n).copy_from(&(sw.push)(x.as_slice(), &xd));
                in_other = !in_other;
                current = if in_other {
                    other.as_ref().expect("switch target")
                } else {
                    wd
                };
                switches += 1;
            }
        }
    }
    let mut curve = SampledCurve::new(params, points, velocities)?;
    curve.meta.termination = termination;
    Ok(NullGeodesic {
        curve,
        energy,
        energy_drift,
        null_drift,
        chart_switches: switches,
    })
}

/// Reparametrizes a spacetime curve by its `t` coordinate: points `x`, velocities `ẋ/τ̇`.
pub fn project(curve: &SampledCurve) -> Result<SampledCurve> {
    curve.validate()?;
    let n = curve.points[0].len() - 1;
    let params: Vec<f64> = curve.points.iter().map(|p| p[0]).collect();
    if let Some(i) = params.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(WindError::ContractViolation(format!(
            "t is not strictly increasing at sample {}",
            i + 1
        )));
    }
    let points = curve.points.iter().map(|p| p.rows(1, n).into_owned()).collect();
    let velocities = curve
        .velocities
        .iter()
        .map(|v| v.rows(1, n).into_owned() / v[0])
        .collect();
    let mut out = SampledCurve::new(params, points, velocities)?;
    out.meta = curve.meta.clone();
    Ok(out)
}
