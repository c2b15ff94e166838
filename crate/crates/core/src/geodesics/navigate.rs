use nalgebra::DVector;
use serde::Serialize;

use crate::curve::SampledCurve;
use crate::error::{Result, WindError};
use crate::exec::Execution;
use crate::geometry::unit_map;
use crate::ode::OdeOptions;
use crate::reachability::{forward_ball_with, GridSpec};
use crate::sstk::NullOptions;
use crate::wrs::{sphere_directions, PointData, RegionKind, WindData};

use super::ivp::{geodesic_ivp, GeodesicOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NavStatus {
    Optimal,
    Unreachable,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavigationResult {
    /// Arrival time; infinite when no solution was found.
    pub time: f64,
    /// Unit-`F` geodesic from `p` to `q` when `Optimal`.
    pub curve: Option<SampledCurve>,
    pub status: NavStatus,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavOptions {
    /// Coarse scan size; `None` uses 64 in dimension 2 and 512 in dimension 3.
    pub directions: Option<usize>,
    /// Longest arrival time searched.
    pub t_max: f64,
    /// Accepted endpoint miss distance.
    pub tol: f64,
    pub max_iter: usize,
    /// Grid resolution of the reachability fallback used to prove unreachability.
    pub reach_resolution: usize,
    pub ode: OdeOptions,
    pub exec: Execution,
}

impl Default for NavOptions {
    fn default() -> Self {
        NavOptions {
            directions: None,
            t_max: 4.0,
            tol: 1e-7,
            max_iter: 80,
            reach_resolution: 128,
            ode: OdeOptions {
                h_max: 0.01,
                ..OdeOptions::default()
            },
            exec: Execution::default(),
        }
    }
}

/// Closest approach of a shot to the target.
#[derive(Debug, Clone)]
struct Shot {
    time: f64,
    distance: f64,
    /// Signed miss `cross(γ̇, q − γ)/|γ̇|` (dimension 2 only).
    miss: f64,
    /// Closest approach is interior to the integrated interval.
    interior: bool,
}

struct Shooter<'a> {
    wd: &'a WindData,
    p: &'a [f64],
    q: DVector<f64>,
    pd: PointData,
    m: nalgebra::DMatrix<f64>,
    gopts: GeodesicOptions,
}

impl Shooter<'_> {
    /// Unit-`F` velocity `W + u(e)` for a Euclidean unit `e`, if on the convex piece.
    fn velocity(&self, e: &DVector<f64>) -> Option<DVector<f64>> {
        let u = &self.m * e;
        if self.pd.region() != RegionKind::Mild && 1.0 + self.pd.beta(&u) <= 1e-9 * (1.0 + self.pd.norm2(&self.pd.w)) {
            return None;
        }
        Some(&self.pd.w + u)
    }

    fn curve(&self, e: &DVector<f64>) -> Option<SampledCurve> {
        let v = self.velocity(e)?;
        geodesic_ivp(self.wd, self.p, &v, &self.gopts).ok()
    }

    fn shoot(&self, e: &DVector<f64>) -> Option<Shot> {
        let c = self.curve(e)?;
        Some(closest_approach(&c, &self.q))
    }
}

fn closest_approach(c: &SampledCurve, q: &DVector<f64>) -> Shot {
    let dist = |s: f64| (c.point_at(s) - q).norm();
    let k = (0..c.len())
        .min_by(|&a, &b| {
            (&c.points[a] - q)
                .norm()
                .partial_cmp(&(&c.points[b] - q).norm())
                .expect("finite distances")
        })
        .expect("non-empty curve");
    let (mut a, mut b) = (c.params[k.saturating_sub(1)], c.params[(k + 1).min(c.len() - 1)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (dist(x1), dist(x2));
    while b - a > 1e-13 * (1.0 + b.abs()) {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = dist(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = dist(x2);
        }
    }
    let t = 0.5 * (a + b);
    let (x, v) = c.sample(t);
    let d = q - &x;
    let miss = if x.len() == 2 {
        (v[0] * d[1] - v[1] * d[0]) / v.norm()
    } else {
        d.norm()
    };
    let span = c.end() - c.start();
    Shot {
        time: t,
        distance: d.norm(),
        miss,
        interior: t > c.start() + 1e-9 * span && t < c.end() - 1e-9 * span,
    }
}

fn angle_dir(theta: f64) -> DVector<f64> {
    DVector::from_vec(vec![theta.cos(), theta.sin()])
}

/// Zermelo navigation: least-time wind geodesic from `p` to `q`.
///
/// Shoots unit-`F` geodesics over a coarse scan of indicatrix directions and
/// refines sign changes of the miss function (dimension 2) or the best seeds
/// by Gauss-Newton (dimension ≥ 3). When nothing converges, a reachability
/// sweep decides between `Unreachable` and `MaxIter`.
pub fn navigate(wd: &WindData, p: &[f64], q: &[f64], opts: &NavOptions) -> Result<NavigationResult> {
    let n = wd.dim();
    if p.len() != n || q.len() != n {
        return Err(WindError::argument("p and q must have the model dimension"));
    }
    let pd = wd.at(p)?;
    wd.at(q)?;
    let qv = DVector::from_column_slice(q);
    if (DVector::from_column_slice(p) - &qv).norm() <= opts.tol {
        let c = SampledCurve::new(vec![0.0], vec![qv.clone()], vec![DVector::zeros(n)])?;
        return Ok(NavigationResult {
            time: 0.0,
            curve: Some(c),
            status: NavStatus::Optimal,
            notes: vec!["p = q".into()],
        });
    }
    let m = unit_map(&pd.g).ok_or_else(|| WindError::argument("metric is not positive definite at p"))?;
    let shooter = Shooter {
        wd,
        p,
        q: qv.clone(),
        pd,
        m,
        gopts: GeodesicOptions {
            span: opts.t_max,
            null: NullOptions {
                ode: opts.ode,
                ..NullOptions::default()
            },
        },
    };
    let mut notes = Vec::new();
    let found: Vec<(f64, DVector<f64>)> = match n {
        1 => shoot_line(&shooter, opts),
        2 => shoot_plane(&shooter, opts),
        _ => shoot_space(&shooter, opts, &mut notes),
    };
    let best = found
        .into_iter()
        .min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite times"));
    if let Some((time, e)) = best {
        let curve = shooter
            .curve(&e)
            .ok_or_else(|| WindError::Integration("converged direction failed to re-integrate".into()))?
            .truncated(time);
        return Ok(NavigationResult {
            time,
            curve: Some(curve),
            status: NavStatus::Optimal,
            notes,
        });
    }
    let status = reachability_verdict(wd, p, q, opts, &mut notes)?;
    Ok(NavigationResult {
        time: f64::INFINITY,
        curve: None,
        status,
        notes,
    })
}

fn accept(shot: &Shot, opts: &NavOptions) -> bool {
    shot.interior && shot.distance < opts.tol || shot.distance < opts.tol && shot.time > 0.0
}

fn shoot_line(s: &Shooter, opts: &NavOptions) -> Vec<(f64, DVector<f64>)> {
    [1.0, -1.0]
        .iter()
        .filter_map(|&sign| {
            let e = DVector::from_vec(vec![sign]);
            let shot = s.shoot(&e)?;
            accept(&shot, opts).then_some((shot.time, e))
        })
        .collect()
}

fn shoot_plane(s: &Shooter, opts: &NavOptions) -> Vec<(f64, DVector<f64>)> {
    let k = opts.directions.unwrap_or(64);
    let thetas: Vec<f64> = (0..k)
        .map(|i| 2.0 * std::f64::consts::PI * i as f64 / k as f64)
        .collect();
    let shots: Vec<Option<Shot>> = opts.exec.map_slice(&thetas, |&th| s.shoot(&angle_dir(th)));
    let mut found = Vec::new();
    for i in 0..k {
        if let Some(sh) = &shots[i] {
            if accept(sh, opts) {
                found.push((sh.time, angle_dir(thetas[i])));
            }
        }
    }
    let brackets: Vec<(f64, f64, f64, f64)> = (0..k)
        .filter_map(|i| {
            let j = (i + 1) % k;
            let (a, b) = (shots[i].as_ref()?, shots[j].as_ref()?);
            let ok = a.interior && b.interior && a.miss.signum() != b.miss.signum();
            // a sign flip with both misses large is a jump of the closest point, not a root
            let scale = (a.distance + b.distance).max(1e-12);
            let continuous = (a.miss - b.miss).abs() <= 0.999 * scale + 1e-12 || a.distance.min(b.distance) < 0.5;
            let hi = if j == 0 { 2.0 * std::f64::consts::PI } else { thetas[j] };
            (ok && continuous).then_some((thetas[i], hi, a.miss, b.miss))
        })
        .collect();
    let refined: Vec<Option<(f64, DVector<f64>)>> = opts.exec.map_slice(&brackets, |&(a, b, fa, fb)| {
        illinois(s, a, b, fa, fb, opts).map(|(t, th)| (t, angle_dir(th)))
    });
    found.extend(refined.into_iter().flatten());
    found
}

/// Illinois false position on the signed miss, falling back to bisection when it stalls.
fn illinois(s: &Shooter, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, opts: &NavOptions) -> Option<(f64, f64)> {
    let mut side = 0i8;
    for it in 0..opts.max_iter {
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) || it % 8 == 7 {
            c = 0.5 * (a + b);
        }
        let shot = s.shoot(&angle_dir(c))?;
        if shot.distance < opts.tol && shot.interior {
            return Some((shot.time, c));
        }
        if (b - a).abs() < 1e-15 {
            break;
        }
        let fc = shot.miss;
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    None
}

/// Orthonormal basis of `e^⊥`.
fn complement(e: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = e.len();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for k in 0..n {
        let mut v = DVector::zeros(n);
        v[k] = 1.0;
        v -= e * e[k];
        for b in &basis {
            let c = b.dot(&v);
            v -= b * c;
        }
        if v.norm() > 1e-6 {
            basis.push(v.normalize());
        }
        if basis.len() == n - 1 {
            break;
        }
    }
    basis
}

fn shoot_space(s: &Shooter, opts: &NavOptions, notes: &mut Vec<String>) -> Vec<(f64, DVector<f64>)> {
    let n = s.q.len();
    let k = opts.directions.unwrap_or(if n == 3 { 512 } else { 256 * n });
    let dirs = sphere_directions(n, k);
    let shots: Vec<Option<Shot>> = opts.exec.map_slice(&dirs, |e| s.shoot(e));
    let mut order: Vec<usize> = (0..k).filter(|&i| shots[i].is_some()).collect();
    order.sort_by(|&a, &b| {
        let (da, db) = (shots[a].as_ref().unwrap().distance, shots[b].as_ref().unwrap().distance);
        da.partial_cmp(&db).expect("finite distances")
    });
    order.truncate(5);
    let seeds: Vec<DVector<f64>> = order.iter().map(|&i| dirs[i].clone()).collect();
    let refined: Vec<Option<(f64, DVector<f64>)>> = opts.exec.map_slice(&seeds, |e| gauss_newton(s, e, opts));
    let found: Vec<(f64, DVector<f64>)> = refined.into_iter().flatten().collect();
    if found.is_empty() {
        notes.push(format!("Gauss-Newton did not converge from {} seeds", seeds.len()));
    }
    found
}

/// Newton iteration on `γ_e(t) − q = 0` in the unknowns `(e-tangent offsets, t)`.
fn gauss_newton(s: &Shooter, seed: &DVector<f64>, opts: &NavOptions) -> Option<(f64, DVector<f64>)> {
    let n = seed.len();
    let mut e = seed.clone();
    let mut t = s.shoot(&e)?.time;
    let step = 1e-6;
    for _ in 0..opts.max_iter {
        let c = s.curve(&e)?;
        let resid = c.point_at(t) - &s.q;
        if resid.norm() < opts.tol && t > 0.0 && t < s.gopts.span {
            return Some((t, e));
        }
        let basis = complement(&e);
        let mut jac = nalgebra::DMatrix::zeros(n, n);
        for (j, b) in basis.iter().enumerate() {
            let ep = (&e + b * step).normalize();
            let em = (&e - b * step).normalize();
            let d = (s.curve(&ep)?.point_at(t) - s.curve(&em)?.point_at(t)) / (2.0 * step);
            jac.set_column(j, &d);
        }
        jac.set_column(n - 1, &c.sample(t).1);
        let delta = jac.lu().solve(&(-&resid))?;
        let mut scale = 1.0;
        let offsets: DVector<f64> = delta.rows(0, n - 1).into_owned();
        let max_turn = offsets.norm();
        if max_turn > 0.3 {
            scale = 0.3 / max_turn;
        }
        let mut shift = DVector::zeros(n);
        for (j, b) in basis.iter().enumerate() {
            shift += b * (scale * offsets[j]);
        }
        e = (&e + shift).normalize();
        t = (t + scale * delta[n - 1]).clamp(1e-9, s.gopts.span);
    }
    None
}

/// Decides `Unreachable` vs `MaxIter` from a forward-ball sweep of radius `t_max`.
fn reachability_verdict(
    wd: &WindData,
    p: &[f64],
    q: &[f64],
    opts: &NavOptions,
    notes: &mut Vec<String>,
) -> Result<NavStatus> {
    let n = wd.dim();
    let wmax = [p, q]
        .iter()
        .map(|x| wd.at(x).map(|pd| pd.w.norm()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let reach = opts.t_max * (wmax + 1.0);
    let lower: Vec<f64> = (0..n).map(|a| p[a].min(q[a]) - reach).collect();
    let upper: Vec<f64> = (0..n).map(|a| p[a].max(q[a]) + reach).collect();
    let res = match n {
        1 => opts.reach_resolution * 8,
        2 => opts.reach_resolution,
        _ => opts.reach_resolution.min(32),
    };
    let grid = GridSpec::new(lower, upper, res);
    let field = forward_ball_with(wd, p, opts.t_max, &grid, false, opts.exec)?;
    let Some(cell) = grid.cell_of(q) else {
        notes.push("target outside the reachability box".into());
        return Ok(NavStatus::MaxIter);
    };
    let idx = grid.unflatten(cell);
    let mut touched = false;
    let neighbours = 3usize.pow(n as u32);
    for k in 0..neighbours {
        let mut m = k;
        let mut nb = Vec::with_capacity(n);
        let mut inside = true;
        for &i in &idx {
            let off = (m % 3) as isize - 1;
            m /= 3;
            let j = i as isize + off;
            if j < 0 || j >= res as isize {
                inside = false;
                break;
            }
            nb.push(j as usize);
        }
        if inside {
            let c = grid.flatten(&nb);
            touched |= field.times[c].is_some() || field.in_closed(c);
        }
    }
    if touched {
        notes.push(format!(
            "target cell is reached within t_max = {}; refinement stalled",
            opts.t_max
        ));
        Ok(NavStatus::MaxIter)
    } else {
        notes.push(format!(
            "target and its neighbour cells are not reached within t_max = {} on a {res}-cell grid",
            opts.t_max
        ));
        Ok(NavStatus::Unreachable)
    }
}
