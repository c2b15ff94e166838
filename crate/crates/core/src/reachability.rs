//! Forward and backward wind balls on a uniform grid.
//!
//! The reachable set at exact time `t` is tracked as the sublevel set
//! `{φ_t ≤ 0}` of a level function advanced by the Hopf-Lax step
//! `φ_{t+dt}(y) = min_{v ∈ A_y} φ_t(y − dt v)`, where `A_y` is the solid region
//! `W + (g-unit ball)` bounded by the indicatrix. Standing still is only in
//! `A_y` where `0` lies inside it, which is exactly the mild region, so strong
//! wind carries the whole set downstream. In one dimension the endpoints of
//! the reachable interval are integrated directly.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Result, WindError};
use crate::exec::Execution;
use crate::geometry::unit_map;
use crate::ode::{integrate, OdeOptions};
use crate::wrs::{sphere_directions, WindData};

/// Boundary directions sampled per cell update.
pub const VELOCITY_DIRECTIONS: usize = 32;
/// Radial shells of the `g`-unit ball.
pub const VELOCITY_SHELLS: [f64; 5] = [1.0, 0.8, 0.6, 0.4, 0.2];
/// Fraction of the CFL bound used when `dt` is not given.
pub const AUTO_DT_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Cells per axis.
    pub resolution: usize,
    /// Time step; `None` picks `AUTO_DT_FRACTION` of the CFL bound.
    pub dt: Option<f64>,
}

impl GridSpec {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, resolution: usize) -> Self {
        GridSpec {
            lower,
            upper,
            resolution,
            dt: None,
        }
    }

    /// Square (cubic) box of half-width `half` around `center`.
    pub fn centered(center: &[f64], half: f64, resolution: usize) -> Self {
        GridSpec::new(
            center.iter().map(|c| c - half).collect(),
            center.iter().map(|c| c + half).collect(),
            resolution,
        )
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn cell_sizes(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| (b - a) / self.resolution as f64)
            .collect()
    }

    pub fn min_cell(&self) -> f64 {
        self.cell_sizes().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn cell_count(&self) -> usize {
        self.resolution.pow(self.dim() as u32)
    }

    /// Multi-index of a flat cell index; axis 0 varies fastest.
    pub fn unflatten(&self, mut i: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dim());
        for _ in 0..self.dim() {
            out.push(i % self.resolution);
            i /= self.resolution;
        }
        out
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().rev().fold(0, |acc, &k| acc * self.resolution + k)
    }

    pub fn center(&self, i: usize) -> Vec<f64> {
        let h = self.cell_sizes();
        self.unflatten(i)
            .iter()
            .enumerate()
            .map(|(a, &k)| self.lower[a] + (k as f64 + 0.5) * h[a])
            .collect()
    }

    /// Cell containing `p`, if inside the box.
    pub fn cell_of(&self, p: &[f64]) -> Option<usize> {
        let h = self.cell_sizes();
        let mut idx = Vec::with_capacity(self.dim());
        for a in 0..self.dim() {
            let k = ((p[a] - self.lower[a]) / h[a]).floor();
            if !(k >= 0.0 && k < self.resolution as f64) {
                return None;
            }
            idx.push(k as usize);
        }
        Some(self.flatten(&idx))
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .enumerate()
            .all(|(a, &x)| x >= self.lower[a] && x <= self.upper[a])
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.dim() != dim || self.upper.len() != dim {
            return Err(WindError::argument(format!(
                "grid has dimension {}, the model {dim}",
                self.dim()
            )));
        }
        if self.resolution < 3 {
            return Err(WindError::argument("grid resolution must be at least 3"));
        }
        if self.lower.iter().zip(&self.upper).any(|(a, b)| !(b > a)) {
            return Err(WindError::argument("grid box must have upper > lower on every axis"));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(WindError::argument("dt must be positive"));
            }
        }
        Ok(())
    }
}

/// Per-cell arrival data of a wind ball.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrivalField {
    pub grid: GridSpec,
    /// First time the cell centre is reached, if it is reached by `radius`.
    pub times: Vec<Option<f64>>,
    /// Final level function: the ball is `{level < 0}`, its closure `{level ≤ slack}`.
    pub level: Vec<f64>,
    /// Cells whose centre lies outside the chart domain.
    pub excluded: Vec<bool>,
    pub center: Vec<f64>,
    pub radius: f64,
    pub backward: bool,
    /// Effective time step (`0` for the one-dimensional endpoint integration).
    pub dt: f64,
    pub slack: f64,
}

impl ArrivalField {
    pub fn in_open(&self, i: usize) -> bool {
        self.level[i] < 0.0
    }

    pub fn in_closed(&self, i: usize) -> bool {
        self.level[i] <= self.slack
    }

    pub fn open_cells(&self) -> Vec<usize> {
        (0..self.level.len()).filter(|&i| self.in_open(i)).collect()
    }

    pub fn closed_cells(&self) -> Vec<usize> {
        (0..self.level.len()).filter(|&i| self.in_closed(i)).collect()
    }

    /// Whether `p` lies in the open ball, judged by its cell.
    pub fn contains(&self, p: &[f64]) -> bool {
        self.grid.cell_of(p).is_some_and(|i| self.in_open(i))
    }

    pub fn time_at(&self, p: &[f64]) -> Option<f64> {
        self.grid.cell_of(p).and_then(|i| self.times[i])
    }

    /// Cell-wise point reflection `x ↦ 2c − x` of the open ball about the box centre.
    pub fn reflected_open(&self) -> Vec<bool> {
        let r = self.grid.resolution;
        (0..self.level.len())
            .map(|i| {
                let idx: Vec<usize> = self.grid.unflatten(i).iter().map(|k| r - 1 - k).collect();
                self.in_open(self.grid.flatten(&idx))
            })
            .collect()
    }
}

const MAX_DIM: usize = 3;

#[derive(Clone, Copy)]
struct CellVelocities {
    w: [f64; MAX_DIM],
    /// Maps Euclidean unit vectors to `g`-unit vectors.
    m: [[f64; MAX_DIM]; MAX_DIM],
    /// `0` is admissible (`Λ ≥ 0`).
    still: bool,
    /// Largest coordinate speed `|W| + √(max eig g⁻¹)`.
    extent: f64,
}

fn cell_data(wd: &WindData, grid: &GridSpec, exec: Execution) -> Vec<Option<CellVelocities>> {
    let n = grid.dim();
    exec.map_range(grid.cell_count(), |i| {
        let c = grid.center(i);
        let pd = wd.at(&c).ok()?;
        let m = unit_map(&pd.g)?;
        let mut cv = CellVelocities {
            w: [0.0; MAX_DIM],
            m: [[0.0; MAX_DIM]; MAX_DIM],
            still: pd.lambda >= 0.0,
            extent: pd.w.norm() + 1.0 / pd.g.symmetric_eigenvalues().min().sqrt(),
        };
        for a in 0..n {
            cv.w[a] = pd.w[a];
            for b in 0..n {
                cv.m[a][b] = m[(a, b)];
            }
        }
        Some(cv)
    })
}

/// `dt ≤ 0.5 · cell / max(|W| + |g^{-1/2}|)` over the grid.
pub fn cfl_bound(wd: &WindData, grid: &GridSpec) -> Result<f64> {
    grid.validate(wd.dim())?;
    let cells = cell_data(wd, grid, Execution::default());
    Ok(cfl_from(&cells, grid))
}

fn cfl_from(cells: &[Option<CellVelocities>], grid: &GridSpec) -> f64 {
    let speed = cells.iter().flatten().map(|c| c.extent).fold(0.0, f64::max);
    if speed == 0.0 {
        f64::INFINITY
    } else {
        0.5 * grid.min_cell() / speed
    }
}

/// Stack-only grid geometry for the inner loop.
#[derive(Clone, Copy)]
struct Layout {
    n: usize,
    res: usize,
    lower: [f64; MAX_DIM],
    h: [f64; MAX_DIM],
}

impl Layout {
    fn new(grid: &GridSpec) -> Self {
        let mut l = Layout {
            n: grid.dim(),
            res: grid.resolution,
            lower: [0.0; MAX_DIM],
            h: [0.0; MAX_DIM],
        };
        let h = grid.cell_sizes();
        for a in 0..l.n {
            l.lower[a] = grid.lower[a];
            l.h[a] = h[a];
        }
        l
    }

    fn center(&self, mut i: usize) -> [f64; MAX_DIM] {
        let mut c = [0.0; MAX_DIM];
        for a in 0..self.n {
            c[a] = self.lower[a] + ((i % self.res) as f64 + 0.5) * self.h[a];
            i /= self.res;
        }
        c
    }

    /// Tensor-product quadratic interpolation of cell-centred values; `None` outside the box.
    ///
    /// Quadratic rather than multilinear: linear interpolation of a convex
    /// level function overestimates it by `O(h²/R)`, and that bias
    /// accumulates once per time step into a lagging front.
    fn interpolate(&self, values: &[f64], p: &[f64; MAX_DIM]) -> Option<f64> {
        let mut base = [0usize; MAX_DIM];
        let mut weights = [[0.0; 3]; MAX_DIM];
        for a in 0..self.n {
            let s = (p[a] - self.lower[a]) / self.h[a] - 0.5;
            if !(s >= -0.5 && s <= self.res as f64 - 0.5) {
                return None;
            }
            let k = s.round().clamp(1.0, (self.res - 2) as f64);
            let u = s - k;
            base[a] = k as usize - 1;
            weights[a] = [0.5 * u * (u - 1.0), (1.0 - u) * (1.0 + u), 0.5 * u * (u + 1.0)];
        }
        let mut acc = 0.0;
        if self.n == 2 {
            for j in 0..3 {
                let row = (base[1] + j) * self.res + base[0];
                let line = &values[row..row + 3];
                let inner = weights[0][0] * line[0] + weights[0][1] * line[1] + weights[0][2] * line[2];
                acc += weights[1][j] * inner;
            }
            return Some(if acc.is_finite() { acc } else { f64::INFINITY });
        }
        for corner in 0..3usize.pow(self.n as u32) {
            let mut weight = 1.0;
            let mut flat = 0;
            let mut stride = 1;
            let mut c = corner;
            for a in 0..self.n {
                let j = c % 3;
                c /= 3;
                weight *= weights[a][j];
                flat += (base[a] + j) * stride;
                stride *= self.res;
            }
            let v = values[flat];
            if !v.is_finite() {
                return Some(f64::INFINITY);
            }
            acc += weight * v;
        }
        Some(acc)
    }
}

/// Wind ball of radius `r` around `p0`; `backward` computes `B⁻` through the reverse structure.
pub fn forward_ball(wd: &WindData, p0: &[f64], r: f64, grid: &GridSpec, backward: bool) -> Result<ArrivalField> {
    forward_ball_with(wd, p0, r, grid, backward, Execution::default())
}

pub fn forward_ball_with(
    wd: &WindData,
    p0: &[f64],
    r: f64,
    grid: &GridSpec,
    backward: bool,
    exec: Execution,
) -> Result<ArrivalField> {
    let n = wd.dim();
    grid.validate(n)?;
    if n > MAX_DIM {
        return Err(WindError::argument(format!(
            "wind balls are computed up to dimension {MAX_DIM}"
        )));
    }
    if p0.len() != n || !grid.contains(p0) {
        return Err(WindError::argument("ball centre must lie inside the grid box"));
    }
    if !(r > 0.0) {
        return Err(WindError::argument("radius must be positive"));
    }
    let reversed;
    let wd = if backward {
        reversed = wd.reverse();
        &reversed
    } else {
        wd
    };
    let pd0 = wd.at(p0)?;
    if n == 1 {
        return interval_ball(wd, p0[0], r, grid, backward);
    }

    let cells = cell_data(wd, grid, exec);
    let bound = cfl_from(&cells, grid);
    let dt_max = match grid.dt {
        Some(dt) if dt > bound => return Err(WindError::Cfl { dt, bound }),
        Some(dt) => dt,
        None => AUTO_DT_FRACTION * bound,
    };
    let layout = Layout::new(grid);
    let excluded: Vec<bool> = cells.iter().map(|c| c.is_none()).collect();

    // Start from the frozen-coefficient set p0 + t0 (W + unit ball), four
    // cells across, so the flat interior of the level function stays out of
    // the interpolation stencil of the front.
    let max_h = layout.h[..n].iter().fold(0.0f64, |a, &b| a.max(b));
    let eig_max = pd0.g.symmetric_eigenvalues().max();
    let t0 = (4.0 * max_h * eig_max.sqrt()).min(r);
    let mut level: Vec<f64> = vec![f64::INFINITY; grid.cell_count()];
    let mut times: Vec<Option<f64>> = vec![None; grid.cell_count()];
    for i in 0..level.len() {
        if excluded[i] {
            continue;
        }
        let c = layout.center(i);
        let z = DVector::from_iterator(n, (0..n).map(|a| c[a] - p0[a] - t0 * pd0.w[a]));
        level[i] = pd0.norm2(&z).sqrt() - t0;
        if level[i] <= 0.0 {
            let d = DVector::from_iterator(n, (0..n).map(|a| c[a] - p0[a]));
            let t = pd0.speeds(&d).map(|s| s.f).unwrap_or(0.0);
            times[i] = Some(t.min(t0));
        }
    }
    let steps = ((r - t0) / dt_max).ceil().max(0.0) as usize;
    let dt = if steps == 0 {
        dt_max.min(r)
    } else {
        (r - t0) / steps as f64
    };

    let dirs: Vec<[f64; MAX_DIM]> = sphere_directions(n, VELOCITY_DIRECTIONS)
        .iter()
        .map(|e| {
            let mut a = [0.0; MAX_DIM];
            a[..n].copy_from_slice(e.as_slice());
            a
        })
        .collect();
    // away from the front only the boundary shell can hold the minimum
    let band = 3.0 * max_h * eig_max.sqrt();
    let mut next = vec![0.0; level.len()];
    for step in 0..steps {
        let prev = &level;
        exec.fill(&mut next, |i| {
            let Some(cv) = &cells[i] else {
                return f64::INFINITY;
            };
            let y = layout.center(i);
            let mut best = f64::INFINITY;
            let mut probe = |v: &[f64; MAX_DIM]| {
                let mut x = y;
                for a in 0..n {
                    x[a] -= dt * v[a];
                }
                if let Some(val) = layout.interpolate(prev, &x) {
                    best = best.min(val);
                }
            };
            probe(&cv.w);
            if cv.still {
                probe(&[0.0; MAX_DIM]);
            }
            let shells = if prev[i].abs() < band {
                &VELOCITY_SHELLS[..]
            } else {
                &VELOCITY_SHELLS[..1]
            };
            for e in &dirs {
                let mut u = [0.0; MAX_DIM];
                for a in 0..n {
                    u[a] = (0..n).map(|b| cv.m[a][b] * e[b]).sum();
                }
                for &rho in shells {
                    let mut v = cv.w;
                    for a in 0..n {
                        v[a] += rho * u[a];
                    }
                    probe(&v);
                }
            }
            best
        });
        let t_start = t0 + step as f64 * dt;
        for i in 0..level.len() {
            if times[i].is_none() && next[i] <= 0.0 {
                let (a, b) = (level[i], next[i]);
                let frac = if a.is_finite() && a > b {
                    (a / (a - b)).clamp(0.0, 1.0)
                } else {
                    1.0
                };
                times[i] = Some(t_start + frac * dt);
            }
        }
        std::mem::swap(&mut level, &mut next);
    }

    Ok(ArrivalField {
        grid: GridSpec {
            dt: Some(dt),
            ..grid.clone()
        },
        times,
        level,
        excluded,
        center: p0.to_vec(),
        radius: r,
        backward,
        dt,
        slack: 0.5 * grid.min_cell(),
    })
}

/// One-dimensional ball: the reachable interval `[a(t), b(t)]` with
/// `ȧ = W − 1/√g` at `a` and `ḃ = W + 1/√g` at `b`.
fn interval_ball(wd: &WindData, x0: f64, r: f64, grid: &GridSpec, backward: bool) -> Result<ArrivalField> {
    let rhs = |_t: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
        let lo = wd.at(&[y[0]])?;
        let hi = wd.at(&[y[1]])?;
        Ok(DVector::from_vec(vec![
            lo.w[0] - 1.0 / lo.g[(0, 0)].sqrt(),
            hi.w[0] + 1.0 / hi.g[(0, 0)].sqrt(),
        ]))
    };
    let opts = OdeOptions {
        h_max: (r / 200.0).min(0.01),
        ..OdeOptions::default()
    };
    let traj = integrate(&rhs, 0.0, DVector::from_vec(vec![x0, x0]), r, &opts)?;
    let (ts, ys): (Vec<f64>, Vec<DVector<f64>>) = traj.into_iter().unzip();
    let (a, b) = {
        let last = ys.last().expect("non-empty trajectory");
        (last[0], last[1])
    };
    let h = grid.cell_sizes()[0];
    let mut times = Vec::with_capacity(grid.resolution);
    let mut level = Vec::with_capacity(grid.resolution);
    let mut excluded = Vec::with_capacity(grid.resolution);
    for i in 0..grid.resolution {
        let x = grid.lower[0] + (i as f64 + 0.5) * h;
        excluded.push(!wd.space.contains(&[x]));
        level.push((a - x).max(x - b));
        let mut hit = None;
        for k in 0..ts.len() {
            let (lo, hi) = (ys[k][0], ys[k][1]);
            if lo <= x && x <= hi {
                hit = Some(if k == 0 {
                    ts[0]
                } else {
                    let (plo, phi) = (ys[k - 1][0], ys[k - 1][1]);
                    let gap_prev = (plo - x).max(x - phi);
                    let gap = (lo - x).max(x - hi);
                    let frac = if gap_prev > gap {
                        gap_prev / (gap_prev - gap)
                    } else {
                        1.0
                    };
                    ts[k - 1] + frac.clamp(0.0, 1.0) * (ts[k] - ts[k - 1])
                });
                break;
            }
        }
        times.push(hit);
    }
    Ok(ArrivalField {
        grid: grid.clone(),
        times,
        level,
        excluded,
        center: vec![x0],
        radius: r,
        backward,
        dt: 0.0,
        slack: 0.5 * h,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InclusionReport {
    /// Cells of the smaller open ball missing from the larger one.
    pub radius_violations: usize,
    /// Open cells missing from the closed variant, over both fields.
    pub open_closed_violations: usize,
    /// Closed-but-not-open cells of the larger field.
    pub closed_minus_open: usize,
    pub ok: bool,
}

/// Checks `B(r₁) ⊆ B(r₂)` and `B ⊆ B̄` cell-wise for two balls on the same grid.
pub fn ball_inclusion_report(small: &ArrivalField, large: &ArrivalField) -> Result<InclusionReport> {
    if small.grid.lower != large.grid.lower
        || small.grid.upper != large.grid.upper
        || small.grid.resolution != large.grid.resolution
    {
        return Err(WindError::GridMismatch(
            "the two fields use different boxes or resolutions".into(),
        ));
    }
    if small.center != large.center || small.backward != large.backward {
        return Err(WindError::GridMismatch(
            "the two fields have different centres or orientations".into(),
        ));
    }
    if small.radius > large.radius {
        return Err(WindError::argument("the first field must have the smaller radius"));
    }
    let cells = small.level.len();
    let radius_violations = (0..cells).filter(|&i| small.in_open(i) && !large.in_open(i)).count();
    let open_closed_violations = [small, large]
        .iter()
        .map(|f| (0..cells).filter(|&i| f.in_open(i) && !f.in_closed(i)).count())
        .sum();
    let closed_minus_open = (0..cells).filter(|&i| large.in_closed(i) && !large.in_open(i)).count();
    Ok(InclusionReport {
        radius_violations,
        open_closed_violations,
        closed_minus_open,
        ok: radius_violations == 0 && open_closed_violations == 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    /// The closed ball stays at least one cell away from the box and the excluded cells.
    pub bounded_inside: bool,
    /// Distance from the closed ball to the box boundary or the nearest excluded cell.
    pub margin: f64,
    pub note: String,
}

/// Numerical evidence (not proof) that the closed forward and backward balls are precompact.
pub fn precompactness_probe(wd: &WindData, p0: &[f64], r: f64, grid: &GridSpec) -> Result<ProbeReport> {
    let mut margin = f64::INFINITY;
    for backward in [false, true] {
        let f = forward_ball(wd, p0, r, grid, backward)?;
        margin = margin.min(ball_margin(&f));
    }
    let cell = grid.min_cell();
    Ok(ProbeReport {
        bounded_inside: margin > cell,
        margin,
        note: format!(
            "grid evidence at resolution {} (cell {cell:.3e}); not a proof",
            grid.resolution
        ),
    })
}

fn ball_margin(f: &ArrivalField) -> f64 {
    let grid = &f.grid;
    let h = grid.cell_sizes();
    let closed = f.closed_cells();
    let excluded: Vec<Vec<f64>> = (0..f.level.len())
        .filter(|&i| f.excluded[i])
        .map(|i| grid.center(i))
        .collect();
    let mut margin = f64::INFINITY;
    for i in closed {
        let c = grid.center(i);
        for a in 0..grid.dim() {
            margin = margin.min(c[a] - 0.5 * h[a] - grid.lower[a]);
            margin = margin.min(grid.upper[a] - c[a] - 0.5 * h[a]);
        }
        for e in &excluded {
            let d = c.iter().zip(e).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            margin = margin.min(d);
        }
    }
    margin.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ChartedSpace, VectorField};

    fn flat(w: [f64; 2]) -> WindData {
        WindData::new(
            ChartedSpace::euclidean(2),
            VectorField::constant(DVector::from_vec(w.to_vec())),
        )
        .unwrap()
    }

    fn disc_error(f: &ArrivalField, c: [f64; 2], rad: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..f.level.len() {
            let x = f.grid.center(i);
            let d = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt();
            if f.in_open(i) {
                worst = worst.max(d - rad);
            } else {
                worst = worst.max(rad - d);
            }
        }
        worst
    }

    #[test]
    fn translated_discs() {
        for (w, c) in [
            ([0.0, 0.0], [0.0, 0.0]),
            ([0.5, 0.0], [0.5, 0.0]),
            ([2.0, 0.0], [2.0, 0.0]),
        ] {
            let grid = GridSpec::new(vec![-1.5, -1.5], vec![3.5, 1.5], 64);
            let f = forward_ball(&flat(w), &[0.0, 0.0], 1.0, &grid, false).unwrap();
            let cell = grid.min_cell();
            let err = disc_error(&f, c, 1.0);
            assert!(err < 2.0 * cell, "w = {w:?}: {err} vs cell {cell}");
        }
        let grid = GridSpec::new(vec![-1.5, -1.5], vec![3.5, 1.5], 64);
        let f = forward_ball(&flat([2.0, 0.0]), &[0.0, 0.0], 1.0, &grid, false).unwrap();
        assert!(!f.contains(&[0.0, 0.0]));
    }

    #[test]
    fn cfl_violation_is_reported() {
        let grid = GridSpec::centered(&[0.0, 0.0], 2.0, 32).with_dt(1.0);
        assert!(matches!(
            forward_ball(&flat([0.5, 0.0]), &[0.0, 0.0], 1.0, &grid, false),
            Err(WindError::Cfl { .. })
        ));
    }

    #[test]
    fn inclusion_and_reversal() {
        let wd = flat([0.3, 0.1]);
        let grid = GridSpec::centered(&[0.0, 0.0], 2.0, 48);
        let a = forward_ball(&wd, &[0.0, 0.0], 0.5, &grid, false).unwrap();
        let b = forward_ball(&wd, &[0.0, 0.0], 1.0, &grid, false).unwrap();
        let rep = ball_inclusion_report(&a, &b).unwrap();
        assert!(rep.ok, "{rep:?}");
        assert!(rep.closed_minus_open > 0);
        let other = GridSpec::centered(&[0.0, 0.0], 2.0, 32);
        let c = forward_ball(&wd, &[0.0, 0.0], 1.0, &other, false).unwrap();
        assert!(matches!(ball_inclusion_report(&a, &c), Err(WindError::GridMismatch(_))));

        let strong = flat([2.0, 0.0]);
        let grid = GridSpec::centered(&[0.0, 0.0], 3.5, 64);
        let fwd = forward_ball(&strong, &[0.0, 0.0], 1.0, &grid, false).unwrap();
        let bwd = forward_ball(&strong, &[0.0, 0.0], 1.0, &grid, true).unwrap();
        let mirrored = fwd.reflected_open();
        let diff = (0..mirrored.len()).filter(|&i| mirrored[i] != bwd.in_open(i)).count();
        assert!(diff <= 4, "{diff} cells differ");
    }

    #[test]
    fn one_dimensional_interval() {
        let wd = WindData::new(
            ChartedSpace::euclidean(1),
            VectorField::constant(DVector::from_vec(vec![0.5])),
        )
        .unwrap();
        let grid = GridSpec::new(vec![-2.0], vec![3.0], 500);
        let f = forward_ball(&wd, &[0.0], 1.0, &grid, false).unwrap();
        assert!(f.contains(&[1.45]) && !f.contains(&[1.55]));
        assert!(f.contains(&[-0.45]) && !f.contains(&[-0.55]));
        let t = f.time_at(&[1.0]).unwrap();
        assert!((t - 1.0 / 1.5).abs() < 0.01, "{t}");
    }
}
