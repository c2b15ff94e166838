use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WindError};
use crate::wrs::RegionKind;

/// The four kinds of WRS geodesics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeodesicCase {
    /// Geodesic of the conic Finsler metric `F`.
    ConicF,
    /// Geodesic of the Lorentz-Finsler metric `F_l`, inside the strong region.
    LorentzFl,
    /// Constant curve at an exceptional critical point.
    Exceptional,
    /// Lightlike pregeodesic of `h` riding the cone boundary.
    Boundary,
}

impl GeodesicCase {
    pub fn number(self) -> u8 {
        match self {
            GeodesicCase::ConicF => 1,
            GeodesicCase::LorentzFl => 2,
            GeodesicCase::Exceptional => 3,
            GeodesicCase::Boundary => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    #[default]
    Completed,
    /// Left the chart domain (or the chart-safe radius without a re-centering hook).
    ChartExit,
    /// Reached the critical boundary of the strong region along the cone.
    TouchPoint,
    MaxSteps,
}

/// Sample index where the curve enters a region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionEntry {
    pub index: usize,
    pub region: RegionKind,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CurveMeta {
    pub case: Option<GeodesicCase>,
    pub regions: Vec<RegionEntry>,
    pub termination: Termination,
    pub notes: Vec<String>,
}

/// A parametrized curve as ordered `(parameter, point, velocity)` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    pub params: Vec<f64>,
    pub points: Vec<DVector<f64>>,
    pub velocities: Vec<DVector<f64>>,
    pub meta: CurveMeta,
}

impl SampledCurve {
    pub fn new(params: Vec<f64>, points: Vec<DVector<f64>>, velocities: Vec<DVector<f64>>) -> Result<Self> {
        let c = SampledCurve {
            params,
            points,
            velocities,
            meta: CurveMeta::default(),
        };
        c.validate()?;
        Ok(c)
    }

    /// Samples `f` on a uniform grid of `n` intervals; velocities by `df`.
    pub fn from_fn<P, V>(a: f64, b: f64, n: usize, p: P, v: V) -> Result<Self>
    where
        P: Fn(f64) -> DVector<f64>,
        V: Fn(f64) -> DVector<f64>,
    {
        let params: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
        let points = params.iter().map(|&s| p(s)).collect();
        let velocities = params.iter().map(|&s| v(s)).collect();
        SampledCurve::new(params, points, velocities)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.params.len();
        if n == 0 || self.points.len() != n || self.velocities.len() != n {
            return Err(WindError::argument(format!(
                "curve lists must be non-empty and of equal length (params {}, points {}, velocities {})",
                n,
                self.points.len(),
                self.velocities.len()
            )));
        }
        if let Some(i) = self.params.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(WindError::argument(format!(
                "curve parameters are not strictly increasing at sample {}",
                i + 1
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.params[0]
    }

    pub fn end(&self) -> f64 {
        *self.params.last().expect("non-empty curve")
    }

    pub fn last_point(&self) -> &DVector<f64> {
        self.points.last().expect("non-empty curve")
    }

    fn locate(&self, s: f64) -> usize {
        match self
            .params
            .binary_search_by(|x| x.partial_cmp(&s).expect("finite parameter"))
        {
            Ok(i) => i.min(self.len().saturating_sub(2)),
            Err(i) => i.saturating_sub(1).min(self.len().saturating_sub(2)),
        }
    }

    /// Cubic Hermite interpolation of the point and its velocity at `s`.
    ///
    /// Outside `[start, end]` the end segments are extrapolated.
    pub fn sample(&self, s: f64) -> (DVector<f64>, DVector<f64>) {
        if self.len() == 1 {
            return (self.points[0].clone(), self.velocities[0].clone());
        }
        let i = self.locate(s);
        let (s0, s1) = (self.params[i], self.params[i + 1]);
        let h = s1 - s0;
        let t = (s - s0) / h;
        let (p0, p1) = (&self.points[i], &self.points[i + 1]);
        let (m0, m1) = (&self.velocities[i] * h, &self.velocities[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let point = p0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + &m0 * (t3 - 2.0 * t2 + t)
            + p1 * (-2.0 * t3 + 3.0 * t2)
            + &m1 * (t3 - t2);
        let vel = (p0 * (6.0 * t2 - 6.0 * t)
            + &m0 * (3.0 * t2 - 4.0 * t + 1.0)
            + p1 * (-6.0 * t2 + 6.0 * t)
            + &m1 * (3.0 * t2 - 2.0 * t))
            / h;
        (point, vel)
    }

    pub fn point_at(&self, s: f64) -> DVector<f64> {
        self.sample(s).0
    }

    /// Largest coordinate distance between the curves on `n+1` common parameters
    /// covering the overlap of their parameter ranges.
    pub fn sup_distance(&self, other: &SampledCurve, n: usize) -> f64 {
        let a = self.start().max(other.start());
        let b = self.end().min(other.end());
        (0..=n)
            .map(|i| {
                let s = a + (b - a) * i as f64 / n as f64;
                (self.point_at(s) - other.point_at(s)).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Keeps the samples up to `s_end`, closing with an interpolated sample at `s_end`.
    pub fn truncated(&self, s_end: f64) -> SampledCurve {
        let mut out = SampledCurve {
            params: Vec::new(),
            points: Vec::new(),
            velocities: Vec::new(),
            meta: self.meta.clone(),
        };
        for i in 0..self.len() {
            if self.params[i] < s_end - 1e-14 {
                out.params.push(self.params[i]);
                out.points.push(self.points[i].clone());
                out.velocities.push(self.velocities[i].clone());
            }
        }
        let (p, v) = self.sample(s_end);
        out.params.push(s_end);
        out.points.push(p);
        out.velocities.push(v);
        out.meta.regions.retain(|r| r.index < out.params.len());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(n: usize) -> SampledCurve {
        SampledCurve::from_fn(
            0.0,
            std::f64::consts::PI,
            n,
            |s| DVector::from_vec(vec![s.cos(), s.sin()]),
            |s| DVector::from_vec(vec![-s.sin(), s.cos()]),
        )
        .unwrap()
    }

    #[test]
    fn hermite_interpolation_is_accurate() {
        let c = circle(200);
        for s in [0.01, 0.5, 1.234, 3.0] {
            let (p, v) = c.sample(s);
            assert!((p[0] - s.cos()).abs() < 1e-9 && (p[1] - s.sin()).abs() < 1e-9);
            assert!((v[0] + s.sin()).abs() < 1e-6);
        }
        assert!(c.sup_distance(&circle(300), 100) < 1e-9);
    }

    #[test]
    fn rejects_bad_params() {
        let p = vec![DVector::zeros(1); 3];
        assert!(SampledCurve::new(vec![0.0, 1.0, 1.0], p.clone(), p.clone()).is_err());
        assert!(SampledCurve::new(vec![0.0, 1.0], p.clone(), p).is_err());
    }

    #[test]
    fn truncation() {
        let c = circle(10).truncated(1.0);
        assert_eq!(c.end(), 1.0);
        assert!((c.last_point()[0] - 1f64.cos()).abs() < 1e-4);
    }
}
