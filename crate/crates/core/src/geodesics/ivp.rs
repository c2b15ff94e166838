use nalgebra::{DMatrix, DVector};

use crate::curve::{GeodesicCase, RegionEntry, SampledCurve, Termination};
use crate::error::{Result, WindError};
use crate::geometry::{invert, Christoffel, FD_STEP_FIRST};
use crate::ode::{adaptive_step, dopri_step, OdeOptions};
use crate::sstk::{null_geodesic_until, null_lift, project, NullOptions, StopAt};
use crate::wrs::{AdmissibleClass, PointData, RegionKind, WindData, TOL_LAMBDA};

/// `|Λ|` below which a boundary geodesic is considered to touch `∂M_l`.
pub const TOUCH_TOL: f64 = 1e-6;
/// Tolerance for the unit-speed checks that assign the geodesic case.
pub const CASE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicOptions {
    /// Length of the time interval to integrate (the `t` coordinate of the lift).
    pub span: f64,
    pub null: NullOptions,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        GeodesicOptions {
            span: 1.0,
            null: NullOptions::default(),
        }
    }
}

impl GeodesicOptions {
    pub fn with_span(span: f64) -> Self {
        GeodesicOptions {
            span,
            ..Default::default()
        }
    }
}

fn region_trace(wd: &WindData, c: &SampledCurve) -> Result<Vec<RegionEntry>> {
    let mut out: Vec<RegionEntry> = Vec::new();
    for (i, p) in c.points.iter().enumerate() {
        let region = wd.region_at(p.as_slice())?.kind;
        if out.last().map(|r| r.region) != Some(region) {
            out.push(RegionEntry { index: i, region });
        }
    }
    Ok(out)
}

fn assign_case(wd: &WindData, c: &SampledCurve, cone_start: bool) -> Result<Option<GeodesicCase>> {
    if cone_start {
        return Ok(Some(GeodesicCase::Boundary));
    }
    let mut all_f = true;
    let mut all_fl = true;
    for (p, v) in c.points.iter().zip(&c.velocities) {
        let pd = wd.at(p.as_slice())?;
        match pd.speeds(v) {
            Ok(s) => {
                all_f &= (s.f - 1.0).abs() < CASE_TOL;
                all_fl &= pd.lambda < 0.0 && s.f_l.finite().is_some_and(|fl| (fl - 1.0).abs() < CASE_TOL);
            }
            Err(_) => {
                all_f = false;
                all_fl = false;
            }
        }
    }
    Ok(if all_f {
        Some(GeodesicCase::ConicF)
    } else if all_fl {
        Some(GeodesicCase::LorentzFl)
    } else {
        None
    })
}

/// WRS geodesic from `p` with unit initial velocity `v` (`F(v) = 1` or `F_l(v) = 1`).
///
/// Integrated as the projection of the SSTK lightlike geodesic through `(0, p)`
/// with velocity `(1, v)`, parametrized by `t`; the result is tagged with the
/// geodesic case and the region trace. Geodesics launched along the cone stop
/// when they reach `|Λ| < TOUCH_TOL`.
pub fn geodesic_ivp(wd: &WindData, p: &[f64], v: &DVector<f64>, opts: &GeodesicOptions) -> Result<SampledCurve> {
    let class = wd.admissible(p, v)?;
    match class {
        AdmissibleClass::InteriorA | AdmissibleClass::ConeBoundary => {}
        AdmissibleClass::ZeroCritical => {
            return Err(WindError::Inadmissible(
                "the zero vector at a critical point generates no geodesic".into(),
            ))
        }
        AdmissibleClass::Outside => {
            return Err(wd.speeds(p, v).err().unwrap_or_else(|| {
                WindError::Inadmissible("initial velocity is outside the admissible domain".into())
            }))
        }
    }
    let dir = null_lift(wd, p, v)?;
    let cone = class == AdmissibleClass::ConeBoundary;
    let nopts = NullOptions {
        stop: StopAt::CoordinateTime(opts.span),
        ..opts.null
    };
    let ng = if cone {
        null_geodesic_until(wd, 0.0, p, &dir, &nopts, |x| {
            wd.lambda_at(x).map(|l| l.abs() < TOUCH_TOL).unwrap_or(true)
        })?
    } else {
        null_geodesic_until(wd, 0.0, p, &dir, &nopts, |_| false)?
    };
    let mut c = project(&ng.curve)?;
    c.meta.case = assign_case(wd, &c, cone)?;
    c.meta.regions = region_trace(wd, &c)?;
    if ng.chart_switches > 0 {
        c.meta.notes.push(format!("{} chart switches", ng.chart_switches));
    }
    Ok(c)
}

/// `∂_k h` for the matrix `h = Λ g + (gW)(gW)ᵀ`.
fn h_derivatives(wd: &WindData, p: &[f64], pd: &PointData) -> Vec<DMatrix<f64>> {
    let dg = wd.space.metric_d1_at(p);
    let jac = wd.wind.jacobian_at(p);
    dg.iter()
        .enumerate()
        .map(|(k, dgk)| {
            let dw = jac.column(k).into_owned();
            let dgw = dgk * &pd.w + &pd.g * &dw;
            let dlambda = -(pd.w.dot(&(dgk * &pd.w)) + 2.0 * pd.gw.dot(&dw));
            &pd.g * dlambda + dgk * pd.lambda + &dgw * pd.gw.transpose() + &pd.gw * dgw.transpose()
        })
        .collect()
}

fn h_christoffel(wd: &WindData, p: &[f64]) -> Result<Christoffel> {
    let pd = wd.at(p)?;
    let h_inv = invert(&pd.h_matrix())?;
    Ok(Christoffel::from_parts(&h_inv, &h_derivatives(wd, p, &pd)))
}

/// Moves `v` back onto the cone `h(v, v) = 0` along `W` (the root nearest zero).
fn onto_cone(pd: &PointData, v: &mut DVector<f64>) {
    let h = pd.h(v, v);
    let beta = pd.beta(v);
    let w2 = pd.norm2(&pd.w);
    // h(v + aW) = h + 2aβ + a²|W|²
    let disc = beta * beta - w2 * h;
    if disc < 0.0 || w2 == 0.0 {
        return;
    }
    let sq = disc.sqrt();
    let a = if beta >= 0.0 { -h / (beta + sq) } else { h / (sq - beta) };
    v.axpy(a, &pd.w, 1.0);
}

/// Lightlike pregeodesic of `h` from `p` along the cone direction `cone_dir`,
/// reparametrized so that `F(γ̇) = c`, over the parameter interval `[0, span]`.
///
/// Stops with [`Termination::TouchPoint`] when `|Λ|` drops below `TOUCH_TOL`.
pub fn boundary_geodesic(
    wd: &WindData,
    p: &[f64],
    cone_dir: &DVector<f64>,
    span: f64,
    c: f64,
    ode: &OdeOptions,
) -> Result<SampledCurve> {
    let n = wd.dim();
    let pd = wd.at(p)?;
    if pd.region() != RegionKind::Strong {
        return Err(WindError::argument(
            "boundary geodesics start strictly inside the strong region",
        ));
    }
    if wd.admissible(p, cone_dir)? != AdmissibleClass::ConeBoundary {
        return Err(WindError::argument(format!(
            "direction is not on the future cone: h(v, v) = {:e}",
            pd.h(cone_dir, cone_dir)
        )));
    }
    if !(c > 0.0) {
        return Err(WindError::argument("the speed constant c must be positive"));
    }
    let cone_speed = |pd: &PointData, v: &DVector<f64>| pd.norm2(v) / pd.beta(v);
    // state (x, ẋ, s) in the affine parameter of h, with ds/dλ = F(ẋ)/c
    let rhs = |_l: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
        let x = y.rows(0, n);
        let u = y.rows(n, n).into_owned();
        let pd = wd.at(x.as_slice())?;
        let acc = h_christoffel(wd, x.as_slice())?.acceleration(u.as_slice());
        let mut out = DVector::zeros(2 * n + 1);
        out.rows_mut(0, n).copy_from(&u);
        out.rows_mut(n, n).copy_from(&acc);
        out[2 * n] = cone_speed(&pd, &u) / c;
        Ok(out)
    };
    // start with F(ẋ) = c so that λ and s agree initially
    let v0 = cone_dir * (c / cone_speed(&pd, cone_dir));
    let mut y = DVector::zeros(2 * n + 1);
    y.rows_mut(0, n).copy_from_slice(p);
    y.rows_mut(n, n).copy_from(&v0);

    let emit = |y: &DVector<f64>| -> Result<(f64, DVector<f64>, DVector<f64>)> {
        let x = y.rows(0, n).into_owned();
        let u = y.rows(n, n).into_owned();
        let pd = wd.at(x.as_slice())?;
        let vel = &u * (c / cone_speed(&pd, &u));
        Ok((y[2 * n], x, vel))
    };
    let (s0, x0, v0) = emit(&y)?;
    let mut params = vec![s0];
    let mut points = vec![x0];
    let mut velocities = vec![v0];
    let mut termination = Termination::MaxSteps;
    let mut lam = 0.0;
    let mut h = ode.h_init.min(ode.h_max);
    for _ in 0..ode.max_steps {
        let (l1, mut y1, h1) = match adaptive_step(&rhs, lam, &y, h, ode) {
            Ok(r) => r,
            Err(WindError::OutsideDomain { .. }) => {
                termination = Termination::ChartExit;
                break;
            }
            Err(e) => return Err(e),
        };
        let mut done = false;
        if y1[2 * n] >= span {
            let mut hh = l1 - lam;
            let mut yy = y1.clone();
            for _ in 0..8 {
                let resid = yy[2 * n] - span;
                if resid.abs() <= 1e-13 * span.max(1.0) {
                    break;
                }
                let rate = rhs(lam + hh, &yy)?[2 * n];
                hh -= resid / rate;
                yy = dopri_step(&rhs, lam, &y, hh, ode)?.0;
            }
            yy[2 * n] = span;
            y1 = yy;
            done = true;
        }
        let pd1 = wd.at(y1.rows(0, n).as_slice())?;
        let mut u = y1.rows(n, n).into_owned();
        onto_cone(&pd1, &mut u);
        y1.rows_mut(n, n).copy_from(&u);
        lam = l1;
        y = y1;
        h = h1;
        let (s, x, v) = emit(&y)?;
        let touched = pd1.lambda.abs() < TOUCH_TOL;
        params.push(s);
        points.push(x);
        velocities.push(v);
        if touched {
            termination = Termination::TouchPoint;
            break;
        }
        if done {
            termination = Termination::Completed;
            break;
        }
    }
    let mut curve = SampledCurve::new(params, points, velocities)?;
    curve.meta.case = Some(GeodesicCase::Boundary);
    curve.meta.termination = termination;
    curve.meta.regions = region_trace(wd, &curve)?;
    Ok(curve)
}

/// Whether `p` is exceptional: `Λ(p) = 0` and `dΛ` vanishes on `W_p^⊥`.
pub fn exceptional_test(wd: &WindData, p: &[f64]) -> Result<bool> {
    const GRAD_TOL: f64 = 1e-6;
    let pd = wd.at(p)?;
    if pd.lambda.abs() >= TOL_LAMBDA {
        return Ok(false);
    }
    let n = wd.dim();
    let mut grad = DVector::zeros(n);
    for k in 0..n {
        let mut a = p.to_vec();
        let mut b = p.to_vec();
        a[k] += FD_STEP_FIRST;
        b[k] -= FD_STEP_FIRST;
        grad[k] = (wd.lambda_at(&a)? - wd.lambda_at(&b)?) / (2.0 * FD_STEP_FIRST);
    }
    // restriction of dΛ to W^⊥ = {v : g(W, v) = 0}, measured with g⁻¹
    let w2 = pd.norm2(&pd.w);
    let restricted = if w2 > 0.0 {
        &grad - &pd.gw * (grad.dot(&pd.w) / w2)
    } else {
        grad
    };
    let g_inv = invert(&pd.g)?;
    Ok(restricted.dot(&(&g_inv * &restricted)).sqrt() < GRAD_TOL)
}
