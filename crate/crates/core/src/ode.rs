//! Adaptive Dormand–Prince 5(4) stepper for `y' = f(t, y)`.

use nalgebra::DVector;

use crate::error::{Result, WindError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            h_init: 1e-3,
            h_min: 1e-12,
            h_max: 0.05,
            max_steps: 200_000,
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One attempted step: the 5th-order solution and the scaled error norm
/// (accept when `err ≤ 1`).
pub fn dopri_step<F>(f: &F, t: f64, y: &DVector<f64>, h: f64, opts: &OdeOptions) -> Result<(DVector<f64>, f64)>
where
    F: Fn(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
    for s in 0..7 {
        let mut ys = y.clone();
        for (j, kj) in k.iter().enumerate() {
            if A[s][j] != 0.0 {
                ys.axpy(h * A[s][j], kj, 1.0);
            }
        }
        k.push(f(t + C[s] * h, &ys)?);
    }
    let mut y5 = y.clone();
    let mut e = DVector::zeros(y.len());
    for s in 0..7 {
        y5.axpy(h * B5[s], &k[s], 1.0);
        e.axpy(h * (B5[s] - B4[s]), &k[s], 1.0);
    }
    let n = y.len() as f64;
    let err = (e
        .iter()
        .zip(y.iter().zip(y5.iter()))
        .map(|(ei, (a, b))| {
            let sc = opts.abs_tol + opts.rel_tol * a.abs().max(b.abs());
            (ei / sc).powi(2)
        })
        .sum::<f64>()
        / n)
        .sqrt();
    if !err.is_finite() {
        return Err(WindError::Integration("non-finite error estimate".into()));
    }
    Ok((y5, err))
}

/// Standard step-size controller for an order-5 method.
pub fn next_step(h: f64, err: f64, opts: &OdeOptions) -> f64 {
    let factor = if err == 0.0 {
        5.0
    } else {
        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
    };
    (h * factor).clamp(-opts.h_max, opts.h_max)
}

/// Adaptive step from `(t, y)` of at most `h_try`: returns `(t_new, y_new, h_suggested)`.
pub fn adaptive_step<F>(
    f: &F,
    t: f64,
    y: &DVector<f64>,
    h_try: f64,
    opts: &OdeOptions,
) -> Result<(f64, DVector<f64>, f64)>
where
    F: Fn(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let mut h = h_try;
    let mut domain_err = None;
    loop {
        if h.abs() < opts.h_min {
            return Err(domain_err.unwrap_or_else(|| WindError::Integration(format!("step size underflow at t = {t}"))));
        }
        match dopri_step(f, t, y, h, opts) {
            Ok((y_new, err)) if err <= 1.0 => {
                return Ok((t + h, y_new, next_step(h, err, opts)));
            }
            Ok((_, err)) => h = next_step(h, err, opts).min(0.5 * h),
            // derivative undefined somewhere in the trial stages (e.g. outside the domain)
            Err(e @ WindError::OutsideDomain { .. }) => {
                domain_err = Some(e);
                h *= 0.25;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Integrates to `t_end`, returning all accepted `(t, y)` pairs.
pub fn integrate<F>(f: &F, t0: f64, y0: DVector<f64>, t_end: f64, opts: &OdeOptions) -> Result<Vec<(f64, DVector<f64>)>>
where
    F: Fn(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let mut out = vec![(t0, y0.clone())];
    let (mut t, mut y) = (t0, y0);
    let mut h = opts.h_init.min(opts.h_max).min(t_end - t0);
    for _ in 0..opts.max_steps {
        if t >= t_end {
            return Ok(out);
        }
        let h_try = h.min(t_end - t);
        let (t1, y1, h1) = adaptive_step(f, t, &y, h_try, opts)?;
        t = if (t_end - t1).abs() < 1e-14 * t_end.abs().max(1.0) {
            t_end
        } else {
            t1
        };
        y = y1;
        h = h1;
        out.push((t, y.clone()));
    }
    Err(WindError::Integration("maximum number of steps exceeded".into()))
}
