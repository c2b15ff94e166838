//! Wind Riemannian structures: regions, `h`, `F`, `F_l`, indicatrices and wind curves.
//!
//! With `Λ = 1 − |W|²`, `β = g(W, v)` and `h(v, v) = Λ|v|² + β²`:
//!
//! - `F(v) = |v|² / (β + √h)` on the admissible domain,
//! - `F_l(v) = |v|² / (β − √h)` inside the strong region, `∞` elsewhere,
//! - `F = F_l` on the cone `h = 0`, and `F(0) = F_l(0) = 1` at critical points.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize, Serializer};

use crate::curve::SampledCurve;
use crate::error::{Result, WindError};
use crate::geometry::{unit_map, ChartedSpace, VectorField};

/// Region classification threshold on `Λ`.
pub const TOL_LAMBDA: f64 = 1e-10;
/// Cone membership threshold, relative to `|v|²`.
pub const TOL_CONE_REL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionKind {
    Mild,
    Critical,
    Strong,
}

impl RegionKind {
    pub fn of(lambda: f64) -> Self {
        if lambda > TOL_LAMBDA {
            RegionKind::Mild
        } else if lambda < -TOL_LAMBDA {
            RegionKind::Strong
        } else {
            RegionKind::Critical
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindRegion {
    pub kind: RegionKind,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdmissibleClass {
    InteriorA,
    ConeBoundary,
    Outside,
    ZeroCritical,
}

/// A speed value that may be the distinguished infinity of `F_l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Speed {
    Finite(f64),
    Infinite,
}

impl Speed {
    pub fn value(self) -> f64 {
        match self {
            Speed::Finite(x) => x,
            Speed::Infinite => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Speed::Finite(x) => Some(x),
            Speed::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Speed::Infinite)
    }
}

impl fmt::Display for Speed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Speed::Finite(x) => write!(f, "{x}"),
            Speed::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Speed {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Speed::Finite(x) => s.serialize_f64(*x),
            Speed::Infinite => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Speeds {
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "F_l")]
    pub f_l: Speed,
}

/// A tangent vector with its base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVec {
    pub base: Vec<f64>,
    pub components: DVector<f64>,
}

impl TangentVec {
    pub fn new(base: &[f64], components: DVector<f64>) -> Self {
        TangentVec {
            base: base.to_vec(),
            components,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndicatrixPiece {
    /// `F = 1` side.
    Convex,
    /// `F_l = 1` side, strong region only.
    Concave,
    Cone,
    /// The zero vector `W + (−W)` at a critical point.
    ZeroCritical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatrixSample {
    /// The `g_R`-unit vector `u`.
    pub u: DVector<f64>,
    /// `W + u`.
    pub v: DVector<f64>,
    pub piece: IndicatrixPiece,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// `1 − g(W, W)` in double-double accumulation, so that `Λ` keeps its
/// relative accuracy near the critical region.
fn compensated_lambda(g: &DMatrix<f64>, w: &DVector<f64>) -> f64 {
    let (mut hi, mut lo) = (1.0, 0.0);
    for i in 0..w.len() {
        for j in 0..w.len() {
            let (p, e1) = two_prod(g[(i, j)], w[j]);
            let (q, e2) = two_prod(w[i], p);
            let (s, e3) = two_sum(hi, -q);
            hi = s;
            lo += e3 - e2 - w[i] * e1;
        }
    }
    hi + lo
}

/// Everything at one point needed to evaluate `h`, `F`, `F_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointData {
    pub g: DMatrix<f64>,
    pub w: DVector<f64>,
    /// `g W`, the covector `g(W, ·)`.
    pub gw: DVector<f64>,
    pub lambda: f64,
}

impl PointData {
    pub fn new(g: DMatrix<f64>, w: DVector<f64>) -> Self {
        let gw = &g * &w;
        let lambda = compensated_lambda(&g, &w);
        PointData { g, w, gw, lambda }
    }

    pub fn region(&self) -> RegionKind {
        RegionKind::of(self.lambda)
    }

    pub fn norm2(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.g * v))
    }

    pub fn beta(&self, v: &DVector<f64>) -> f64 {
        self.gw.dot(v)
    }

    pub fn h(&self, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
        self.lambda * v.dot(&(&self.g * w)) + self.beta(v) * self.beta(w)
    }

    /// Matrix of `h` in coordinates.
    pub fn h_matrix(&self) -> DMatrix<f64> {
        &self.g * self.lambda + &self.gw * self.gw.transpose()
    }

    pub fn classify(&self, v: &DVector<f64>) -> AdmissibleClass {
        let n2 = self.norm2(v);
        let beta = self.beta(v);
        match self.region() {
            RegionKind::Mild => {
                if n2 > 0.0 {
                    AdmissibleClass::InteriorA
                } else {
                    AdmissibleClass::Outside
                }
            }
            RegionKind::Critical => {
                if n2 == 0.0 {
                    AdmissibleClass::ZeroCritical
                } else if beta > TOL_CONE_REL * n2.sqrt() {
                    AdmissibleClass::InteriorA
                } else {
                    AdmissibleClass::Outside
                }
            }
            RegionKind::Strong => {
                let h = self.lambda * n2 + beta * beta;
                if !(beta > 0.0) {
                    AdmissibleClass::Outside
                } else if h > TOL_CONE_REL * n2 {
                    AdmissibleClass::InteriorA
                } else if h >= -TOL_CONE_REL * n2 {
                    AdmissibleClass::ConeBoundary
                } else {
                    AdmissibleClass::Outside
                }
            }
        }
    }

    /// `F` and `F_l`, or an error naming the violated admissibility condition.
    pub fn speeds(&self, v: &DVector<f64>) -> Result<Speeds> {
        let n2 = self.norm2(v);
        let beta = self.beta(v);
        let h = (self.lambda * n2 + beta * beta).max(0.0);
        let sq = h.sqrt();
        match self.classify(v) {
            AdmissibleClass::ZeroCritical => Ok(Speeds {
                f: 1.0,
                f_l: Speed::Finite(1.0),
            }),
            AdmissibleClass::Outside => Err(WindError::Inadmissible(self.violation(v))),
            AdmissibleClass::ConeBoundary => {
                let f = n2 / beta;
                Ok(Speeds {
                    f,
                    f_l: Speed::Finite(f),
                })
            }
            AdmissibleClass::InteriorA => match self.region() {
                RegionKind::Mild => {
                    // rationalized form avoids cancellation when β < 0
                    let f = if beta >= 0.0 {
                        n2 / (beta + sq)
                    } else {
                        (sq - beta) / self.lambda
                    };
                    Ok(Speeds {
                        f,
                        f_l: Speed::Infinite,
                    })
                }
                RegionKind::Critical => Ok(Speeds {
                    f: n2 / (beta + sq),
                    f_l: Speed::Infinite,
                }),
                RegionKind::Strong => Ok(Speeds {
                    f: n2 / (beta + sq),
                    f_l: Speed::Finite((beta + sq) / (-self.lambda)),
                }),
            },
        }
    }

    fn violation(&self, v: &DVector<f64>) -> String {
        let n2 = self.norm2(v);
        let beta = self.beta(v);
        match self.region() {
            RegionKind::Mild => "zero vector is not in the admissible domain".into(),
            RegionKind::Critical => format!("critical point requires g_R(W, v) > 0, got {beta:e}"),
            RegionKind::Strong => {
                let h = self.lambda * n2 + beta * beta;
                if beta <= 0.0 {
                    format!("strong wind requires g_R(W, v) > 0, got {beta:e}")
                } else {
                    format!("strong wind requires h(v, v) >= 0, got {h:e}")
                }
            }
        }
    }

    /// The indicatrix piece of `W + u` for a `g`-unit `u`.
    pub fn piece(&self, u: &DVector<f64>) -> IndicatrixPiece {
        let s = 1.0 + self.beta(u);
        let scale = 1.0 + self.norm2(&self.w);
        if s.abs() <= TOL_CONE_REL * scale {
            if self.region() == RegionKind::Critical {
                IndicatrixPiece::ZeroCritical
            } else {
                IndicatrixPiece::Cone
            }
        } else if s > 0.0 {
            IndicatrixPiece::Convex
        } else {
            IndicatrixPiece::Concave
        }
    }
}

pub type ChartMap = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;
pub type ChartPush = Arc<dyn Fn(&[f64], &DVector<f64>) -> DVector<f64> + Send + Sync>;

/// Transition to a second chart of the same manifold, used to re-center
/// computations that approach the boundary of the current chart.
#[derive(Clone)]
pub struct ChartSwitch {
    /// Switch when the coordinate norm exceeds this value.
    pub threshold: f64,
    /// The same Zermelo data in the other chart (with a switch back).
    pub other: Arc<dyn Fn() -> WindData + Send + Sync>,
    /// Coordinate transition to the other chart.
    pub map: ChartMap,
    /// Differential of `map` applied to a vector.
    pub push: ChartPush,
}

impl fmt::Debug for ChartSwitch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartSwitch")
            .field("threshold", &self.threshold)
            .finish_non_exhaustive()
    }
}

/// Zermelo data `(g_R, W)`.
#[derive(Clone)]
pub struct WindData {
    pub space: ChartedSpace,
    pub wind: VectorField,
    switch: Option<ChartSwitch>,
}

impl fmt::Debug for WindData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WindData")
            .field("space", &self.space.label())
            .field("wind", &self.wind.label())
            .field("switch", &self.switch)
            .finish()
    }
}

/// Result of [`WindData::wind_curve_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindCurveReport {
    pub ok: bool,
    pub length_f: f64,
    pub length_fl: Speed,
    /// `max(F − 1, 1 − F_l, 0)` over the samples.
    pub worst_violation: f64,
}

impl WindData {
    pub fn new(space: ChartedSpace, wind: VectorField) -> Result<Self> {
        if space.dim() != wind.dim() {
            return Err(WindError::argument(format!(
                "wind has dimension {} but the chart has dimension {}",
                wind.dim(),
                space.dim()
            )));
        }
        Ok(WindData {
            space,
            wind,
            switch: None,
        })
    }

    pub fn with_chart_switch(mut self, switch: ChartSwitch) -> Self {
        self.switch = Some(switch);
        self
    }

    pub fn chart_switch(&self) -> Option<&ChartSwitch> {
        self.switch.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn at(&self, p: &[f64]) -> Result<PointData> {
        let g = self.space.metric_at(p)?;
        Ok(PointData::new(g, self.wind.value_at(p)))
    }

    pub fn lambda_at(&self, p: &[f64]) -> Result<f64> {
        Ok(self.at(p)?.lambda)
    }

    pub fn region_at(&self, p: &[f64]) -> Result<WindRegion> {
        let lambda = self.lambda_at(p)?;
        Ok(WindRegion {
            kind: RegionKind::of(lambda),
            lambda,
        })
    }

    pub fn h_bilinear(&self, v: &TangentVec, w: &TangentVec) -> Result<f64> {
        if v.base != w.base {
            return Err(WindError::argument("h_bilinear needs vectors at the same base point"));
        }
        Ok(self.at(&v.base)?.h(&v.components, &w.components))
    }

    pub fn admissible(&self, p: &[f64], v: &DVector<f64>) -> Result<AdmissibleClass> {
        Ok(self.at(p)?.classify(v))
    }

    pub fn speeds(&self, p: &[f64], v: &DVector<f64>) -> Result<Speeds> {
        self.at(p)?.speeds(v)
    }

    /// `W_p + u` for `k` unit vectors `u`, tagged by indicatrix piece.
    pub fn indicatrix(&self, p: &[f64], k: usize) -> Result<Vec<IndicatrixSample>> {
        if k < 4 {
            return Err(WindError::argument("indicatrix needs at least 4 samples"));
        }
        let pd = self.at(p)?;
        let m = unit_map(&pd.g).ok_or_else(|| WindError::argument("metric is not positive definite"))?;
        Ok(sphere_directions(self.dim(), k)
            .into_iter()
            .map(|e| {
                let u = &m * e;
                let v = &pd.w + &u;
                let piece = pd.piece(&u);
                let v = if piece == IndicatrixPiece::ZeroCritical {
                    DVector::zeros(v.len())
                } else {
                    v
                };
                IndicatrixSample { u, v, piece }
            })
            .collect())
    }

    /// Checks `F(ċ) ≤ 1 + tol` and `F_l(ċ) ≥ 1 − tol` along the samples.
    ///
    /// Zero velocities in the mild region count as standing still (`F = 0`).
    pub fn wind_curve_check(&self, c: &SampledCurve, tol: f64) -> Result<WindCurveReport> {
        c.validate()?;
        let mut fs = Vec::with_capacity(c.len());
        let mut fls = Vec::with_capacity(c.len());
        for (i, (p, v)) in c.points.iter().zip(&c.velocities).enumerate() {
            let pd = self.at(p.as_slice())?;
            let s = if pd.region() == RegionKind::Mild && pd.norm2(v) == 0.0 {
                Speeds {
                    f: 0.0,
                    f_l: Speed::Infinite,
                }
            } else {
                pd.speeds(v).map_err(|e| WindError::InadmissibleVelocity {
                    index: i,
                    reason: e.to_string(),
                })?
            };
            fs.push(s.f);
            fls.push(s.f_l.value());
        }
        let worst = fs
            .iter()
            .zip(&fls)
            .map(|(f, fl)| (f - 1.0).max(1.0 - fl).max(0.0))
            .fold(0.0, f64::max);
        let trap = |xs: &[f64]| {
            c.params
                .windows(2)
                .zip(xs.windows(2))
                .map(|(s, x)| 0.5 * (s[1] - s[0]) * (x[0] + x[1]))
                .sum::<f64>()
        };
        let length_fl = if fls.iter().all(|x| x.is_finite()) {
            Speed::Finite(trap(&fls))
        } else {
            Speed::Infinite
        };
        Ok(WindCurveReport {
            ok: worst <= tol,
            length_f: trap(&fs),
            length_fl,
            worst_violation: worst,
        })
    }

    /// The reverse structure `(g_R, −W)`.
    pub fn reverse(&self) -> WindData {
        let switch = self.switch.as_ref().map(|s| {
            let other = s.other.clone();
            ChartSwitch {
                threshold: s.threshold,
                other: Arc::new(move || other().reverse()),
                map: s.map.clone(),
                push: s.push.clone(),
            }
        });
        WindData {
            space: self.space.clone(),
            wind: self.wind.negated(),
            switch,
        }
    }

    /// Whether `φ` maps `(g₁, W₁)` to `(g₂, W₂)` at the samples:
    /// `φ*g₂ = g₁` and `dφ(W₁) = W₂∘φ` within `tol`.
    pub fn isometry_check<M, J>(
        &self,
        target: &WindData,
        phi: M,
        dphi: J,
        samples: &[Vec<f64>],
        tol: f64,
    ) -> Result<bool>
    where
        M: Fn(&[f64]) -> DVector<f64>,
        J: Fn(&[f64]) -> DMatrix<f64>,
    {
        for p in samples {
            let g1 = self.space.metric_at(p)?;
            let q = phi(p);
            let g2 = target.space.metric_at(q.as_slice())?;
            let j = dphi(p);
            let pulled = j.transpose() * g2 * &j;
            if (pulled - g1).amax() > tol {
                return Ok(false);
            }
            let pushed = &j * self.wind.value_at(p);
            if (pushed - target.wind.value_at(q.as_slice())).amax() > tol {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// `k` deterministic Euclidean unit vectors in dimension `dim`.
///
/// Dimension 1 gives `±1`; dimension 2 evenly spaced angles starting at 0;
/// dimension 3 a Fibonacci lattice; higher dimensions seeded Gaussian draws.
pub fn sphere_directions(dim: usize, k: usize) -> Vec<DVector<f64>> {
    match dim {
        1 => vec![DVector::from_element(1, 1.0), DVector::from_element(1, -1.0)],
        2 => (0..k)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / k as f64;
                DVector::from_vec(vec![a.cos(), a.sin()])
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..k)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / k as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * i as f64;
                    DVector::from_vec(vec![r * a.cos(), r * a.sin(), z])
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x000d_1ec7);
            (0..k)
                .map(|_| {
                    let v: DVector<f64> = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
                    let n = v.norm();
                    v / n
                })
                .collect()
        }
    }
}
