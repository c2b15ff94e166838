//! Catalog of concrete Zermelo data.
//!
//! Every model is built by [`make_model`] from a name and a parameter map;
//! [`list_models`] returns the catalog entries together with the
//! classification verdicts they are expected to produce.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classify::{ExpectedVerdict, GlobalCase, KropinaCase, ObstructionReason, WindType};
use crate::error::{Result, WindError};
use crate::geometry::{ChartedSpace, ModelSpace, VectorField};
use crate::wrs::{ChartSwitch, RegionKind, WindData};

/// Coordinate norm beyond which sphere models switch to the inverted chart.
pub const SPHERE_SWITCH_RADIUS: f64 = 10.0;

/// A model parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Scalar(f64),
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

impl From<f64> for ParamValue {
    fn from(x: f64) -> Self {
        ParamValue::Scalar(x)
    }
}

impl From<Vec<f64>> for ParamValue {
    fn from(x: Vec<f64>) -> Self {
        ParamValue::Vector(x)
    }
}

impl From<Vec<Vec<f64>>> for ParamValue {
    fn from(x: Vec<Vec<f64>>) -> Self {
        ParamValue::Matrix(x)
    }
}

pub type ModelParams = BTreeMap<String, ParamValue>;

/// Builds a parameter map from `(key, value)` pairs.
pub fn params<I, K, V>(items: I) -> ModelParams
where
    I: IntoIterator<Item = (K, V)>,
    K: Into<String>,
    V: Into<ParamValue>,
{
    items.into_iter().map(|(k, v)| (k.into(), v.into())).collect()
}

struct Reader<'a> {
    model: &'a str,
    params: &'a ModelParams,
}

impl<'a> Reader<'a> {
    fn new(model: &'a str, params: &'a ModelParams, allowed: &[&str]) -> Result<Self> {
        if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(WindError::params(
                model,
                format!("unknown parameter `{k}` (allowed: {})", allowed.join(", ")),
            ));
        }
        Ok(Reader { model, params })
    }

    fn scalar(&self, key: &str, default: f64) -> Result<f64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(ParamValue::Scalar(x)) if x.is_finite() => Ok(*x),
            Some(_) => Err(WindError::params(
                self.model,
                format!("`{key}` must be a finite number"),
            )),
        }
    }

    fn count(&self, key: &str, default: usize) -> Result<usize> {
        let x = self.scalar(key, default as f64)?;
        if x < 1.0 || x.fract() != 0.0 {
            return Err(WindError::params(
                self.model,
                format!("`{key}` must be a positive integer"),
            ));
        }
        Ok(x as usize)
    }

    fn vector(&self, key: &str) -> Result<Option<DVector<f64>>> {
        match self.params.get(key) {
            None => Ok(None),
            Some(ParamValue::Vector(v)) => Ok(Some(DVector::from_vec(v.clone()))),
            Some(ParamValue::Scalar(x)) => Ok(Some(DVector::from_element(1, *x))),
            Some(_) => Err(WindError::params(self.model, format!("`{key}` must be a vector"))),
        }
    }

    fn matrix(&self, key: &str) -> Result<Option<DMatrix<f64>>> {
        match self.params.get(key) {
            None => Ok(None),
            Some(ParamValue::Matrix(rows)) => {
                let n = rows.len();
                if n == 0 || rows.iter().any(|r| r.len() != n) {
                    return Err(WindError::params(
                        self.model,
                        format!("`{key}` must be a square matrix"),
                    ));
                }
                Ok(Some(DMatrix::from_fn(n, n, |i, j| rows[i][j])))
            }
            Some(_) => Err(WindError::params(self.model, format!("`{key}` must be a matrix"))),
        }
    }
}

fn skew(model: &str, a: &DMatrix<f64>) -> Result<()> {
    if (a + a.transpose()).amax() > 1e-12 {
        return Err(WindError::params(model, "matrix `a` must be skew-symmetric"));
    }
    Ok(())
}

/// Builds the named model.
pub fn make_model(name: &str, params: &ModelParams) -> Result<WindData> {
    match name {
        "euclidean_parallel" => euclidean_parallel(params),
        "hyperbolic" => hyperbolic(params),
        "hyperbolic_horocyclic" => hyperbolic_horocyclic(params),
        "sphere_killing" => sphere_killing(params),
        "sphere_unit_rotation" => sphere_unit_rotation(params),
        "odd_sphere_hopf" => odd_sphere_hopf(params),
        "flat_homothetic" => flat_homothetic(params),
        "flat_shear" => flat_shear(params),
        "flat_twist" => flat_twist(params),
        "punctured_plane" => punctured_plane(params),
        "example_ex1" => example_ex1(params),
        "figure3" => figure3(params),
        "strong_constant" => strong_constant(params),
        _ => Err(WindError::UnknownModel(name.to_string())),
    }
}

pub const MODEL_NAMES: [&str; 13] = [
    "euclidean_parallel",
    "hyperbolic",
    "hyperbolic_horocyclic",
    "sphere_killing",
    "sphere_unit_rotation",
    "odd_sphere_hopf",
    "flat_homothetic",
    "flat_shear",
    "flat_twist",
    "punctured_plane",
    "example_ex1",
    "figure3",
    "strong_constant",
];

fn euclidean_parallel(p: &ModelParams) -> Result<WindData> {
    let r = Reader::new("euclidean_parallel", p, &["n", "c"])?;
    let c = r.vector("c")?.unwrap_or_else(|| DVector::from_vec(vec![0.5, 0.0]));
    let n = r.count("n", c.len())?;
    if c.len() != n {
        return Err(WindError::params(
            "euclidean_parallel",
            format!("`c` must have {n} entries"),
        ));
    }
    let label = format!("constant wind {:?}", c.as_slice());
    WindData::new(ChartedSpace::euclidean(n), VectorField::constant(c).with_label(label))
}

fn strong_constant(p: &ModelParams) -> Result<WindData> {
    Reader::new("strong_constant", p, &[])?;
    WindData::new(
        ChartedSpace::euclidean(2),
        VectorField::constant(DVector::from_vec(vec![2.0, 0.0])).with_label("constant wind (2, 0)"),
    )
}

/// Poincaré half-space `x_n > 0` with `g = δ / (|k| x_n²)`.
pub fn half_space(n: usize, k: f64) -> ChartedSpace {
    let a = k.abs();
    ChartedSpace::conformally_flat(n, format!("half-space H^{n}({k})"), move |p| {
        let y = p[n - 1];
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        grad[n - 1] = -2.0 / (a * y * y * y);
        hess[(n - 1, n - 1)] = 6.0 / (a * y * y * y * y);
        (1.0 / (a * y * y), grad, hess)
    })
    .with_domain(move |p| p[n - 1] > 0.0)
    .with_model(ModelSpace::Hyperbolic { curvature: k })
}

fn hyperbolic_params(name: &str, p: &ModelParams, extra: &[&str]) -> Result<(usize, f64)> {
    let mut allowed = vec!["n", "k"];
    allowed.extend_from_slice(extra);
    let r = Reader::new(name, p, &allowed)?;
    let n = r.count("n", 2)?;
    let k = r.scalar("k", -1.0)?;
    if n < 2 {
        return Err(WindError::params(name, "dimension must be at least 2"));
    }
    if !(k < 0.0) {
        return Err(WindError::params(name, "curvature `k` must be negative"));
    }
    Ok((n, k))
}

fn hyperbolic(p: &ModelParams) -> Result<WindData> {
    let (n, k) = hyperbolic_params("hyperbolic", p, &[])?;
    WindData::new(half_space(n, k), VectorField::zero(n))
}

/// `W = √|k| x_n ∂_1`: unit length, not Killing.
fn hyperbolic_horocyclic(p: &ModelParams) -> Result<WindData> {
    let (n, k) = hyperbolic_params("hyperbolic_horocyclic", p, &[])?;
    let s = k.abs().sqrt();
    let w = VectorField::new(n, "unit horocyclic field", move |x| {
        let mut v = DVector::zeros(n);
        v[0] = s * x[n - 1];
        v
    })
    .with_jacobian(move |_| {
        let mut j = DMatrix::zeros(n, n);
        j[(0, n - 1)] = s;
        j
    });
    WindData::new(half_space(n, k), w)
}

/// Inverse stereographic projection from the north pole of `S^n(r) ⊂ ℝ^{n+1}`.
pub fn stereo_inverse(u: &[f64], r: f64) -> DVector<f64> {
    let n = u.len();
    let s: f64 = u.iter().map(|x| x * x).sum();
    DVector::from_fn(n + 1, |i, _| {
        if i < n {
            2.0 * r * u[i] / (1.0 + s)
        } else {
            r * (s - 1.0) / (1.0 + s)
        }
    })
}

/// Differential of the stereographic projection at ambient `y` applied to `z`.
pub fn stereo_push(y: &DVector<f64>, z: &DVector<f64>, r: f64) -> DVector<f64> {
    let n = y.len() - 1;
    let d = r - y[n];
    DVector::from_fn(n, |i, _| z[i] / d + y[i] * z[n] / (d * d))
}

/// Stereographic chart of `S^n(r)`: `g = 4r² / (1 + |u|²)² δ`.
pub fn sphere_chart(n: usize, r: f64) -> ChartedSpace {
    let r2 = r * r;
    ChartedSpace::conformally_flat(n, format!("stereographic S^{n}({r})"), move |u| {
        let uv = DVector::from_column_slice(u);
        let s = uv.norm_squared();
        let q = 1.0 + s;
        let phi = 4.0 * r2 / (q * q);
        let grad = &uv * (-16.0 * r2 / (q * q * q));
        let hess =
            DMatrix::identity(n, n) * (-16.0 * r2 / (q * q * q)) + &uv * uv.transpose() * (96.0 * r2 / (q * q * q * q));
        (phi, grad, hess)
    })
    .with_model(ModelSpace::Sphere { radius: r })
}

fn inversion(u: &[f64]) -> DVector<f64> {
    let v = DVector::from_column_slice(u);
    let s = v.norm_squared();
    v / s
}

fn inversion_push(u: &[f64], z: &DVector<f64>) -> DVector<f64> {
    let v = DVector::from_column_slice(u);
    let s = v.norm_squared();
    z / s - &v * (2.0 * v.dot(z) / (s * s))
}

/// Sphere chart with the field `u ↦ dσ(A σ⁻¹(u))` for a skew `A`,
/// optionally normalized to unit length. Carries a switch to the inverted
/// chart (the reflection `y_n ↦ −y_n`, which conjugates `A`).
fn sphere_rotation_data(n: usize, r: f64, a: DMatrix<f64>, unit: bool, label: String) -> WindData {
    let a_field = a.clone();
    let w = VectorField::new(n, label.clone(), move |u| {
        let y = stereo_inverse(u, r);
        let z = &a_field * &y;
        let mut v = stereo_push(&y, &z, r);
        if unit {
            // |A y| is the ambient (hence chart) length of the field
            v /= z.norm();
        }
        v
    });
    let mut space = sphere_chart(n, r);
    if unit {
        let a_dom = a.clone();
        space = space.with_domain(move |u| (&a_dom * stereo_inverse(u, r)).norm() > 1e-3 * r);
    }
    let mut refl = DMatrix::identity(n + 1, n + 1);
    refl[(n, n)] = -1.0;
    let a_other = &refl * &a * &refl;
    let wd = WindData::new(space, w).expect("dimensions agree");
    wd.with_chart_switch(ChartSwitch {
        threshold: SPHERE_SWITCH_RADIUS,
        other: Arc::new(move || sphere_rotation_data(n, r, a_other.clone(), unit, format!("{label} (inverted chart)"))),
        map: Arc::new(inversion),
        push: Arc::new(inversion_push),
    })
}

fn rotation_generator(m: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(m, m);
    a[(j, i)] = 1.0;
    a[(i, j)] = -1.0;
    a
}

fn sphere_params(name: &str, p: &ModelParams) -> Result<(usize, f64, DMatrix<f64>)> {
    let r = Reader::new(name, p, &["n", "r", "a"])?;
    let n = r.count("n", 2)?;
    let radius = r.scalar("r", 1.0)?;
    if !(radius > 0.0) {
        return Err(WindError::params(name, "radius `r` must be positive"));
    }
    let a = r.matrix("a")?.unwrap_or_else(|| rotation_generator(n + 1, 0, 1));
    if a.nrows() != n + 1 {
        return Err(WindError::params(name, format!("`a` must be {0}x{0}", n + 1)));
    }
    skew(name, &a)?;
    Ok((n, radius, a))
}

fn sphere_killing(p: &ModelParams) -> Result<WindData> {
    let (n, r, a) = sphere_params("sphere_killing", p)?;
    Ok(sphere_rotation_data(n, r, a, false, "rotation Killing field".into()))
}

/// The rotation field normalized to unit length (singular at the rotation axis).
fn sphere_unit_rotation(p: &ModelParams) -> Result<WindData> {
    let (n, r, a) = sphere_params("sphere_unit_rotation", p)?;
    Ok(sphere_rotation_data(n, r, a, true, "unit rotation field".into()))
}

/// Block rotation `J` on `ℝ^{2m+2}`.
pub fn hopf_generator(m: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * m + 2, 2 * m + 2);
    for b in 0..=m {
        j[(2 * b + 1, 2 * b)] = 1.0;
        j[(2 * b, 2 * b + 1)] = -1.0;
    }
    j
}

fn odd_sphere_hopf(p: &ModelParams) -> Result<WindData> {
    let rd = Reader::new("odd_sphere_hopf", p, &["m", "n", "r"])?;
    let m = match p.get("n") {
        Some(_) => {
            let n = rd.count("n", 3)?;
            if n % 2 == 0 {
                return Err(WindError::params(
                    "odd_sphere_hopf",
                    format!("no unit Killing field exists on S^{n}: positive curvature in even dimension"),
                ));
            }
            (n - 1) / 2
        }
        None => rd.count("m", 1)?,
    };
    let r = rd.scalar("r", 1.0)?;
    if !(r > 0.0) {
        return Err(WindError::params("odd_sphere_hopf", "radius `r` must be positive"));
    }
    // J y / r has unit length on the sphere of radius r
    let j = hopf_generator(m) / r;
    Ok(sphere_rotation_data(2 * m + 1, r, j, false, "unit Hopf field".into()))
}

fn flat_homothetic(p: &ModelParams) -> Result<WindData> {
    let rd = Reader::new("flat_homothetic", p, &["n", "mu", "a", "puncture_radius"])?;
    let n = rd.count("n", 2)?;
    let mu = rd.scalar("mu", 1.0)?;
    let a = rd.matrix("a")?.unwrap_or_else(|| DMatrix::zeros(n, n));
    if a.nrows() != n {
        return Err(WindError::params("flat_homothetic", format!("`a` must be {n}x{n}")));
    }
    skew("flat_homothetic", &a)?;
    let rho = rd.scalar("puncture_radius", 0.0)?;
    let w = VectorField::affine(DMatrix::identity(n, n) * mu + a, DVector::zeros(n))
        .with_label(format!("{mu}-homothetic field"));
    let mut space = ChartedSpace::euclidean(n);
    if rho > 0.0 {
        space = space
            .with_domain(move |x| x.iter().map(|v| v * v).sum::<f64>() > rho * rho)
            .without_model()
            .with_label(format!("R^{n} minus the closed ball of radius {rho}"));
    }
    WindData::new(space, w)
}

fn flat_shear(p: &ModelParams) -> Result<WindData> {
    Reader::new("flat_shear", p, &[])?;
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    WindData::new(
        ChartedSpace::euclidean(2),
        VectorField::affine(a, DVector::zeros(2)).with_label("shear (y, 0)"),
    )
}

/// `W = (cos y, sin y)`: unit, not parallel.
fn flat_twist(p: &ModelParams) -> Result<WindData> {
    Reader::new("flat_twist", p, &[])?;
    let w = VectorField::new(2, "unit twist (cos y, sin y)", |x| {
        DVector::from_vec(vec![x[1].cos(), x[1].sin()])
    })
    .with_jacobian(|x| DMatrix::from_row_slice(2, 2, &[0.0, -x[1].sin(), 0.0, x[1].cos()]));
    WindData::new(ChartedSpace::euclidean(2), w)
}

fn punctured_plane(p: &ModelParams) -> Result<WindData> {
    let rd = Reader::new("punctured_plane", p, &["hole", "hole_radius"])?;
    let hole = rd.vector("hole")?.unwrap_or_else(|| DVector::from_vec(vec![1.0, 0.0]));
    let rho = rd.scalar("hole_radius", 0.02)?;
    if hole.len() != 2 || !(rho > 0.0) {
        return Err(WindError::params(
            "punctured_plane",
            "`hole` must be a 2-vector and `hole_radius` positive",
        ));
    }
    let (hx, hy) = (hole[0], hole[1]);
    let space = ChartedSpace::euclidean(2)
        .with_domain(move |x| (x[0] - hx).powi(2) + (x[1] - hy).powi(2) > rho * rho)
        .without_model()
        .with_label(format!("plane minus the disc of radius {rho} at ({hx}, {hy})"));
    WindData::new(space, VectorField::zero(2))
}

fn smoothstep(s: f64) -> (f64, f64) {
    let s = s.clamp(0.0, 1.0);
    (
        s * s * s * (s * (6.0 * s - 15.0) + 10.0),
        30.0 * s * s * (s - 1.0) * (s - 1.0),
    )
}

/// Plateau value of the ex1 wind on `I_k = [2^{−(k+1)}, 2^{−k}]` for even `k`.
fn ex1_plateau(k: i64) -> f64 {
    let e = 2f64.powi(-(k as i32 + 1));
    if k % 4 == 0 {
        e - 1.0
    } else {
        1.0 - e
    }
}

/// The ex1 wind `f(x)` and `f'(x)` on `x > 0`.
///
/// Even intervals carry the prescribed plateaus; odd intervals a quintic
/// smoothstep between the neighbouring plateaus; `f = −1/2` for `x ≥ 1`.
pub fn ex1_wind(x: f64) -> (f64, f64) {
    if x >= 1.0 {
        return (-0.5, 0.0);
    }
    let k = (-x.log2()).floor() as i64;
    // guard against rounding at the interval ends
    let k = if x > 2f64.powi(-(k as i32)) {
        k - 1
    } else if x < 2f64.powi(-(k as i32 + 1)) {
        k + 1
    } else {
        k
    };
    if k % 2 == 0 {
        return (ex1_plateau(k), 0.0);
    }
    let lo = 2f64.powi(-(k as i32 + 1));
    let width = lo;
    let left = ex1_plateau(k + 1);
    let right = ex1_plateau(k - 1);
    let (sv, ds) = smoothstep((x - lo) / width);
    (left + (right - left) * sv, (right - left) * ds / width)
}

fn example_ex1(p: &ModelParams) -> Result<WindData> {
    Reader::new("example_ex1", p, &[])?;
    let space = ChartedSpace::euclidean(1)
        .with_domain(|x| x[0] > 0.0)
        .without_model()
        .with_label("half-line x > 0");
    let w = VectorField::new(1, "ex1 wind f(x) d/dx", |x| DVector::from_element(1, ex1_wind(x[0]).0))
        .with_jacobian(|x| DMatrix::from_element(1, 1, ex1_wind(x[0]).1));
    WindData::new(space, w)
}

/// The `figure3` wind profile `f(x)` and `f'(x)`.
///
/// `−sin(πx/6)` on `[−3, 3]`, a tanh tail normalized to run from `−1` at
/// `x = 3` to `0` at `x = 6`, zero beyond, and odd.
pub fn figure3_wind(x: f64) -> (f64, f64) {
    if x < 0.0 {
        let (f, df) = figure3_wind(-x);
        return (-f, df);
    }
    if x <= 3.0 {
        let a = PI / 6.0;
        (-(a * x).sin(), -a * (a * x).cos())
    } else if x <= 6.0 {
        let t3 = 3f64.tanh();
        let th = (2.0 * (4.5 - x)).tanh();
        (-0.5 * th / t3 - 0.5, (1.0 - th * th) / t3)
    } else {
        (0.0, 0.0)
    }
}

fn figure3(p: &ModelParams) -> Result<WindData> {
    Reader::new("figure3", p, &[])?;
    let w = VectorField::new(2, "f(x) d/dx", |x| DVector::from_vec(vec![figure3_wind(x[0]).0, 0.0]))
        .with_jacobian(|x| DMatrix::from_row_slice(2, 2, &[figure3_wind(x[0]).1, 0.0, 0.0, 0.0]));
    WindData::new(ChartedSpace::euclidean(2), w)
}

/// A catalog entry.
#[derive(Debug, Clone, Serialize)]
pub struct ModelSpec {
    /// Unique catalog identifier.
    pub id: String,
    /// Builder name accepted by [`make_model`].
    pub name: String,
    pub params: ModelParams,
    pub description: String,
    /// Coordinate box used for sampling.
    pub sample_box: Vec<(f64, f64)>,
    /// Regions that occur in the model.
    pub regions: Vec<RegionKind>,
    pub expected: ExpectedVerdict,
    pub notes: Vec<String>,
}

impl ModelSpec {
    pub fn build(&self) -> Result<WindData> {
        make_model(&self.name, &self.params)
    }

    pub fn dim(&self) -> usize {
        self.sample_box.len()
    }

    /// Deterministic uniform samples in the box that lie in the domain.
    pub fn samples(&self, wd: &WindData, count: usize, seed: u64) -> Vec<Vec<f64>> {
        sample_in_box(wd, &self.sample_box, count, seed)
    }
}

/// Rejection-samples `count` domain points from a coordinate box.
pub fn sample_in_box(wd: &WindData, bbox: &[(f64, f64)], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count && tries < 1000 * count.max(1) {
        tries += 1;
        let p: Vec<f64> = bbox.iter().map(|&(a, b)| rng.gen_range(a..b)).collect();
        if wd.space.contains(&p) {
            out.push(p);
        }
    }
    out
}

fn entry(
    id: &str,
    name: &str,
    params: ModelParams,
    description: &str,
    sample_box: Vec<(f64, f64)>,
    regions: Vec<RegionKind>,
    expected: ExpectedVerdict,
) -> ModelSpec {
    ModelSpec {
        id: id.into(),
        name: name.into(),
        params,
        description: description.into(),
        sample_box,
        regions,
        expected,
        notes: Vec::new(),
    }
}

fn cfc(k0: f64, mu: f64, wind_type: WindType, global: GlobalCase, kropina: Option<KropinaCase>) -> ExpectedVerdict {
    ExpectedVerdict {
        is_cfc: true,
        k0: Some(k0),
        mu: Some(mu),
        kappa: Some(k0 - mu * mu / 4.0),
        wind_type,
        global_case: Some(global),
        kropina_case: kropina,
    }
}

fn not_cfc(k0: Option<f64>, wind_type: WindType, kropina: Option<KropinaCase>) -> ExpectedVerdict {
    ExpectedVerdict {
        is_cfc: false,
        k0,
        mu: None,
        kappa: None,
        wind_type,
        global_case: None,
        kropina_case: kropina,
    }
}

fn obstructed(reason: ObstructionReason) -> Option<KropinaCase> {
    Some(KropinaCase::Obstructed { reason })
}

/// The catalog with expected verdicts.
pub fn list_models() -> Vec<ModelSpec> {
    use RegionKind::*;
    use WindType::*;
    let e = ModelParams::new;
    let sq = |n: usize, a: f64| vec![(-a, a); n];
    let mut out = vec![
        entry(
            "euclidean_parallel",
            "euclidean_parallel",
            params([("c", vec![0.5, 0.0])]),
            "flat plane with a parallel mild wind",
            sq(2, 2.0),
            vec![Mild],
            cfc(0.0, 0.0, Killing, GlobalCase::ModelKilling, None),
        ),
        entry(
            "kropina_flat",
            "euclidean_parallel",
            params([("c", vec![1.0, 0.0])]),
            "flat plane with a parallel unit wind (Kropina)",
            sq(2, 2.0),
            vec![Critical],
            cfc(
                0.0,
                0.0,
                Killing,
                GlobalCase::ModelKilling,
                Some(KropinaCase::FlatParallel),
            ),
        ),
        entry(
            "strong_constant",
            "strong_constant",
            e(),
            "flat plane with the constant strong wind (2, 0)",
            sq(2, 2.0),
            vec![Strong],
            cfc(0.0, 0.0, Killing, GlobalCase::ModelKilling, None),
        ),
        entry(
            "hyperbolic",
            "hyperbolic",
            params([("n", 2.0), ("k", -1.0)]),
            "hyperbolic half-plane of curvature -1 without wind",
            vec![(-1.0, 1.0), (0.5, 2.0)],
            vec![Mild],
            cfc(-1.0, 0.0, Killing, GlobalCase::ModelKilling, None),
        ),
        entry(
            "hyperbolic_horocyclic",
            "hyperbolic_horocyclic",
            params([("n", 2.0), ("k", -1.0)]),
            "hyperbolic half-plane with a unit, non-Killing wind",
            vec![(-1.0, 1.0), (0.5, 2.0)],
            vec![Critical],
            not_cfc(Some(-1.0), Neither, obstructed(ObstructionReason::NegativeCurvature)),
        ),
        entry(
            "sphere_killing",
            "sphere_killing",
            params([("n", 2.0), ("r", 1.0)]),
            "unit 2-sphere with the rotation Killing field",
            sq(2, 1.5),
            vec![Mild, Critical],
            cfc(1.0, 0.0, Killing, GlobalCase::ModelKilling, None),
        ),
        entry(
            "sphere_unit_rotation",
            "sphere_unit_rotation",
            params([("n", 2.0), ("r", 1.0)]),
            "unit 2-sphere with the normalized rotation field (unit, not Killing)",
            sq(2, 1.5),
            vec![Critical],
            not_cfc(
                Some(1.0),
                Neither,
                obstructed(ObstructionReason::EvenDimensionalPositive),
            ),
        ),
        entry(
            "odd_sphere_hopf",
            "odd_sphere_hopf",
            params([("m", 1.0), ("r", 1.0)]),
            "unit 3-sphere with the unit Hopf field",
            sq(3, 1.0),
            vec![Critical],
            cfc(
                1.0,
                0.0,
                Killing,
                GlobalCase::ModelKilling,
                Some(KropinaCase::OddSphereHopf),
            ),
        ),
        entry(
            "odd_sphere_hopf_r2",
            "odd_sphere_hopf",
            params([("m", 1.0), ("r", 2.0)]),
            "3-sphere of radius 2 with the unit Hopf field",
            sq(3, 1.0),
            vec![Critical],
            cfc(
                0.25,
                0.0,
                Killing,
                GlobalCase::ModelKilling,
                Some(KropinaCase::OddSphereHopf),
            ),
        ),
        entry(
            "flat_homothetic",
            "flat_homothetic",
            params([("mu", 1.0)]),
            "flat plane with the radial homothetic wind r d/dr",
            sq(2, 2.0),
            vec![Mild, Critical, Strong],
            cfc(0.0, 1.0, ProperlyHomothetic, GlobalCase::FlatProperHomothetic, None),
        ),
        entry(
            "flat_shear",
            "flat_shear",
            e(),
            "flat plane with the shear wind (y, 0)",
            sq(2, 2.0),
            vec![Mild, Critical, Strong],
            not_cfc(Some(0.0), Neither, None),
        ),
        entry(
            "flat_twist",
            "flat_twist",
            e(),
            "flat plane with the unit twisting wind (cos y, sin y)",
            sq(2, 2.0),
            vec![Critical],
            not_cfc(Some(0.0), Neither, obstructed(ObstructionReason::FlatNonParallel)),
        ),
        entry(
            "punctured_plane",
            "punctured_plane",
            e(),
            "plane minus a small disc around (1, 0), no wind",
            sq(2, 2.0),
            vec![Mild],
            cfc(0.0, 0.0, Killing, GlobalCase::NotGlobalModel, None),
        ),
        entry(
            "example_ex1",
            "example_ex1",
            e(),
            "incomplete half-line whose wind makes the WRS complete",
            vec![(0.01, 2.0)],
            vec![Mild],
            ExpectedVerdict {
                is_cfc: true,
                k0: Some(0.0),
                mu: Some(0.0),
                kappa: Some(0.0),
                wind_type: Neither,
                global_case: Some(GlobalCase::NotGlobalModel),
                kropina_case: None,
            },
        ),
        entry(
            "figure3",
            "figure3",
            e(),
            "flat plane with wind f(x) d/dx, critical exactly on x = +-3",
            vec![(-8.0, 8.0), (-2.0, 2.0)],
            vec![Mild, Critical],
            not_cfc(Some(0.0), Neither, None),
        ),
    ];
    for m in &mut out {
        match m.id.as_str() {
            "example_ex1" => {
                m.notes.push("g_R incomplete, WRS complete (probe)".into());
                m.notes.push("dimension 1: flag curvature is vacuous".into());
            }
            "punctured_plane" => m.notes.push("g_R incomplete: not a global model".into()),
            "figure3" => m
                .notes
                .push("the strips |x| < 3 and |x| > 3 are not connectable by wind curves".into()),
            _ => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{constant_curvature_check, geodesic_field_residual, homothety_classify, HomothetyClass};
    use crate::wrs::RegionKind;

    #[test]
    fn catalog_builds_and_has_positive_metrics() {
        let cat = list_models();
        assert!(cat.len() >= 8);
        for m in &cat {
            let wd = m.build().unwrap();
            assert_eq!(wd.dim(), m.dim(), "{}", m.id);
            for p in m.samples(&wd, 10, 1) {
                let g = wd.space.metric_at(&p).unwrap();
                assert!((&g - g.transpose()).amax() < 1e-14);
                assert!(g.symmetric_eigenvalues().min() > 0.0, "{}", m.id);
            }
        }
    }

    #[test]
    fn unknown_and_invalid() {
        assert!(matches!(
            make_model("nope", &ModelParams::new()),
            Err(WindError::UnknownModel(_))
        ));
        assert!(make_model("hyperbolic", &params([("k", 1.0)])).is_err());
        assert!(make_model("strong_constant", &params([("c", 1.0)])).is_err());
        let err = make_model("odd_sphere_hopf", &params([("n", 2.0)])).unwrap_err();
        assert!(err.to_string().contains("even"));
    }

    #[test]
    fn parallel_lambda() {
        let wd = make_model("euclidean_parallel", &params([("c", vec![0.5, 0.0])])).unwrap();
        assert!((wd.lambda_at(&[3.0, -1.0]).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn hopf_is_unit_and_geodesic() {
        for r in [1.0, 2.0] {
            let wd = make_model("odd_sphere_hopf", &params([("m", 1.0), ("r", r)])).unwrap();
            let spec = list_models().into_iter().find(|m| m.id == "odd_sphere_hopf").unwrap();
            for p in spec.samples(&wd, 100, 3) {
                assert!(wd.lambda_at(&p).unwrap().abs() < 1e-10);
            }
            for p in spec.samples(&wd, 10, 4) {
                assert!(geodesic_field_residual(&wd.space, &wd.wind, &p).unwrap() < 1e-7);
            }
        }
    }

    #[test]
    fn sphere_killing_field_is_killing_in_both_charts() {
        let wd = make_model("sphere_killing", &ModelParams::new()).unwrap();
        let pts = vec![vec![0.3, -0.2], vec![1.0, 0.5], vec![-0.7, 0.1]];
        let r = homothety_classify(&wd.space, &wd.wind, &pts, 1e-6).unwrap();
        assert_eq!(r.class, HomothetyClass::Killing);
        let sw = wd.chart_switch().unwrap();
        let other = (sw.other)();
        let r = homothety_classify(&other.space, &other.wind, &pts, 1e-6).unwrap();
        assert_eq!(r.class, HomothetyClass::Killing);
        // the two charts describe the same field
        let u = [3.0, -2.0];
        let v = (sw.push)(&u, &wd.wind.value_at(&u));
        let u2 = (sw.map)(&u);
        assert!((v - other.wind.value_at(u2.as_slice())).norm() < 1e-12);
    }

    #[test]
    fn sphere_curvature() {
        let s = sphere_chart(2, 2.0);
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![0.3 * i as f64 - 1.0, 0.1 * i as f64]).collect();
        let k = constant_curvature_check(&s, &pts, 1e-6).unwrap().constant().unwrap();
        assert!((k - 0.25).abs() < 1e-9);
    }

    #[test]
    fn flat_homothetic_lie_derivative() {
        let a = vec![vec![0.0, -0.3], vec![0.3, 0.0]];
        let wd = make_model(
            "flat_homothetic",
            &params([("mu", ParamValue::Scalar(0.6)), ("a", a.into())]),
        )
        .unwrap();
        let l = crate::geometry::lie_derivative_metric(&wd.space, &wd.wind, &[0.4, -1.2]).unwrap();
        assert!((l - DMatrix::identity(2, 2) * 1.2).amax() < 1e-12);
    }

    #[test]
    fn ex1_plateaus_and_bounds() {
        for k in 0..4 {
            let lo = 2f64.powi(-(4 * k + 1));
            let mid = 0.75 * lo * 2.0;
            let (f, _) = ex1_wind(mid);
            assert_eq!(f, 2f64.powi(-(4 * k + 1)) - 1.0);
            let lo2 = 2f64.powi(-(4 * k + 3));
            let (f2, _) = ex1_wind(1.5 * lo2);
            assert_eq!(f2, 1.0 - 2f64.powi(-(4 * k + 3)));
        }
        let mut x = 1.5;
        while x > 1e-6 {
            let (f, df) = ex1_wind(x);
            assert!(f.abs() < 1.0);
            let h = 1e-7 * x;
            let fd = (ex1_wind(x + h).0 - ex1_wind(x - h).0) / (2.0 * h);
            assert!((fd - df).abs() < 1e-5 * (1.0 + df.abs()), "x = {x}: {fd} vs {df}");
            x *= 0.937;
        }
    }

    #[test]
    fn figure3_profile() {
        assert_eq!(figure3_wind(3.0).0, -1.0);
        assert_eq!(figure3_wind(-3.0).0, 1.0);
        assert!(figure3_wind(6.0).0.abs() < 1e-15);
        assert!((figure3_wind(3.0 + 1e-12).0 + 1.0).abs() < 1e-9);
        let wd = make_model("figure3", &ModelParams::new()).unwrap();
        let mut x = -9.0;
        while x < 9.0 {
            let f = figure3_wind(x).0;
            assert!(f.abs() <= 1.0);
            let region = wd.region_at(&[x, 0.3]).unwrap().kind;
            assert_ne!(region, RegionKind::Strong);
            x += 0.01;
        }
        assert_eq!(wd.region_at(&[3.0, 0.0]).unwrap().kind, RegionKind::Critical);
        assert_eq!(wd.region_at(&[-3.0, 1.0]).unwrap().kind, RegionKind::Critical);
    }

    #[test]
    fn figure3_two_norm_bound_only_where_wind_is_weak() {
        // the Randers bound F ≤ |v|/(1 − |W|) gives F ≤ 2|v| exactly where |f| ≤ 1/2
        let wd = make_model("figure3", &ModelParams::new()).unwrap();
        let spec = list_models().into_iter().find(|m| m.id == "figure3").unwrap();
        let mut checked = 0;
        for p in spec.samples(&wd, 200, 3) {
            if figure3_wind(p[0]).0.abs() > 0.5 {
                continue;
            }
            for v in crate::wrs::sphere_directions(2, 16) {
                assert!(wd.speeds(&p, &v).unwrap().f <= 2.0 + 1e-12);
            }
            checked += 1;
        }
        assert!(checked > 20);
        // transverse to a nearly unit wind, F = |v|/√Λ
        let lambda = 1.0 - figure3_wind(2.9).0.powi(2);
        let f = wd.speeds(&[2.9, 0.0], &DVector::from_vec(vec![0.0, 1.0])).unwrap().f;
        assert!((f - 1.0 / lambda.sqrt()).abs() < 1e-9 && f > 2.0);
    }
}
