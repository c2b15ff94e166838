//! Constant flag curvature verdicts from Zermelo data.
//!
//! A WRS has constant flag curvature `κ` exactly when `g_R` has constant
//! curvature `k0 = κ + μ²/4` and `W` is `μ`-homothetic. The verdict is decided
//! by these algebraic conditions; the geodesic-deviation estimator only
//! cross-checks `κ`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WindError};
use crate::exec::Execution;
use crate::geodesics::{flag_curvature_deviation, FlagOptions};
use crate::geometry::{
    constant_curvature_check, covariant_derivative, homothety_classify, CurvatureCheck, HomothetyClass, ModelSpace,
};
use crate::wrs::{sphere_directions, IndicatrixPiece, WindData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindType {
    Killing,
    ProperlyHomothetic,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlobalCase {
    /// Complete model space with a Killing wind.
    ModelKilling,
    /// Flat space with a properly homothetic wind.
    FlatProperHomothetic,
    NotGlobalModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstructionReason {
    /// No unit Killing field exists for negative curvature.
    NegativeCurvature,
    /// No unit Killing field exists for positive curvature in even dimension.
    EvenDimensionalPositive,
    /// On flat space a Killing field has constant norm only if it is parallel.
    FlatNonParallel,
    NonConstantCurvature,
    NotKilling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum KropinaCase {
    FlatParallel,
    OddSphereHopf,
    Obstructed { reason: ObstructionReason },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CfcVerdict {
    pub is_cfc: bool,
    /// Curvature of `g_R` (the sampled mean when not constant).
    pub k0: f64,
    pub mu: f64,
    pub kappa: f64,
    pub wind_type: WindType,
    pub global_case: Option<GlobalCase>,
    pub kropina_case: Option<KropinaCase>,
    pub curvature_spread: f64,
    pub homothety_residual: f64,
    pub lie_derivative_max: f64,
    /// Deviation-estimator values of `κ` on random flags (CFC only).
    pub deviation_kappa: Vec<f64>,
    pub warnings: Vec<String>,
    /// Hypotheses of the global classification that sampling cannot check.
    pub unchecked_hypotheses: Vec<String>,
}

/// What a catalog model should classify as.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedVerdict {
    pub is_cfc: bool,
    pub k0: Option<f64>,
    pub mu: Option<f64>,
    pub kappa: Option<f64>,
    pub wind_type: WindType,
    pub global_case: Option<GlobalCase>,
    pub kropina_case: Option<KropinaCase>,
}

impl ExpectedVerdict {
    /// Human-readable mismatches against `v` (empty when they agree).
    pub fn mismatches(&self, v: &CfcVerdict, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        let mut num = |name: &str, want: Option<f64>, got: f64| {
            if let Some(w) = want {
                if (w - got).abs() > tol * w.abs().max(1.0) {
                    out.push(format!("{name}: expected {w}, got {got}"));
                }
            }
        };
        num("k0", self.k0, v.k0);
        if self.is_cfc {
            num("mu", self.mu, v.mu);
            num("kappa", self.kappa, v.kappa);
        }
        if self.is_cfc != v.is_cfc {
            out.push(format!("is_cfc: expected {}, got {}", self.is_cfc, v.is_cfc));
        }
        if self.wind_type != v.wind_type {
            out.push(format!(
                "wind_type: expected {:?}, got {:?}",
                self.wind_type, v.wind_type
            ));
        }
        if self.global_case != v.global_case {
            out.push(format!(
                "global_case: expected {:?}, got {:?}",
                self.global_case, v.global_case
            ));
        }
        if self.kropina_case != v.kropina_case {
            out.push(format!(
                "kropina_case: expected {:?}, got {:?}",
                self.kropina_case, v.kropina_case
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    pub tol: f64,
    /// Number of random flags for the deviation cross-check (0 disables it).
    pub cross_check_flags: usize,
    pub exec: Execution,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            tol: 1e-6,
            cross_check_flags: 3,
            exec: Execution::default(),
        }
    }
}

const MIN_SAMPLES: usize = 8;

fn check_samples(samples: &[Vec<f64>]) -> Result<()> {
    if samples.len() < MIN_SAMPLES {
        return Err(WindError::argument(format!(
            "classification needs at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let first = DVector::from_column_slice(&samples[0]);
    let spread = samples
        .iter()
        .map(|p| (DVector::from_column_slice(p) - &first).norm())
        .fold(0.0, f64::max);
    if spread < 1e-9 {
        return Err(WindError::argument(
            "classification samples are degenerate (all coincide)",
        ));
    }
    Ok(())
}

/// Local verdict: constant curvature of `g_R` and homothety of `W`.
pub fn classify_cfc(wd: &WindData, samples: &[Vec<f64>], opts: &ClassifyOptions) -> Result<CfcVerdict> {
    check_samples(samples)?;
    let curv = constant_curvature_check(&wd.space, samples, opts.tol)?;
    let hom = homothety_classify(&wd.space, &wd.wind, samples, opts.tol)?;
    let wind_type = match hom.class {
        HomothetyClass::Killing => WindType::Killing,
        HomothetyClass::Homothetic { .. } => WindType::ProperlyHomothetic,
        HomothetyClass::Neither => WindType::Neither,
    };
    let k0 = match curv {
        CurvatureCheck::Constant { k0, .. } => k0,
        CurvatureCheck::NotConstant { mean, .. } => mean,
    };
    let mut warnings = Vec::new();
    let (is_cfc, mu) = if wd.dim() == 1 {
        warnings.push("dimension 1 has no flags: constant flag curvature holds vacuously".to_string());
        (true, 0.0)
    } else {
        let mu = match hom.class {
            HomothetyClass::Homothetic { mu } => mu,
            _ => 0.0,
        };
        (curv.constant().is_some() && wind_type != WindType::Neither, mu)
    };
    let kappa = k0 - mu * mu / 4.0;
    let mut verdict = CfcVerdict {
        is_cfc,
        k0,
        mu,
        kappa,
        wind_type,
        global_case: None,
        kropina_case: None,
        curvature_spread: curv.spread(),
        homothety_residual: hom.residual,
        lie_derivative_max: hom.lie_max,
        deviation_kappa: Vec::new(),
        warnings,
        unchecked_hypotheses: vec!["simple connectedness of M".into()],
    };
    if is_cfc && wd.dim() >= 2 && opts.cross_check_flags > 0 {
        cross_check(wd, samples, opts, &mut verdict);
    }
    Ok(verdict)
}

fn cross_check(wd: &WindData, samples: &[Vec<f64>], opts: &ClassifyOptions, verdict: &mut CfcVerdict) {
    let n = wd.dim();
    let dirs = sphere_directions(n, 16);
    let flags: Vec<(Vec<f64>, DVector<f64>, DVector<f64>)> = samples
        .iter()
        .filter_map(|p| {
            let ind = wd.indicatrix(p, 16).ok()?;
            let pd = wd.at(p).ok()?;
            // launch well inside the convex piece
            let s = ind
                .iter()
                .filter(|s| s.piece == IndicatrixPiece::Convex)
                .max_by(|a, b| pd.beta(&a.u).partial_cmp(&pd.beta(&b.u)).expect("finite"))?;
            let tr = dirs
                .iter()
                .find(|d| {
                    let c = d.dot(&s.v) / s.v.norm();
                    c.abs() < 0.9
                })?
                .clone();
            Some((p.clone(), s.v.clone(), tr))
        })
        .take(opts.cross_check_flags)
        .collect();
    let flag_opts = FlagOptions {
        exec: Execution::Sequential,
        ..FlagOptions::default()
    };
    let results = opts
        .exec
        .map_slice(&flags, |(p, v, tr)| flag_curvature_deviation(wd, p, v, tr, &flag_opts));
    for r in results {
        match r {
            Ok(est) => {
                let rel = (est.kappa - verdict.kappa).abs() / verdict.kappa.abs().max(1.0);
                if rel > 0.02 {
                    verdict.warnings.push(format!(
                        "deviation estimate kappa = {:.5} differs from {:.5} by {:.2}%",
                        est.kappa,
                        verdict.kappa,
                        100.0 * rel
                    ));
                }
                verdict.deviation_kappa.push(est.kappa);
            }
            Err(e) => verdict.warnings.push(format!("deviation cross-check skipped: {e}")),
        }
    }
}

fn model_curvature(m: ModelSpace) -> f64 {
    match m {
        ModelSpace::Euclidean => 0.0,
        ModelSpace::Sphere { radius } => 1.0 / (radius * radius),
        ModelSpace::Hyperbolic { curvature } => curvature,
    }
}

/// Global case for a CFC verdict.
///
/// `complete` carries the outcome of an optional completeness probe of `g_R`;
/// `Some(false)` forces `NotGlobalModel`.
pub fn global_match(wd: &WindData, verdict: &CfcVerdict, complete: Option<bool>) -> Result<GlobalCase> {
    if !verdict.is_cfc {
        return Err(WindError::NotCfc);
    }
    let Some(model) = wd.space.model() else {
        return Ok(GlobalCase::NotGlobalModel);
    };
    if complete == Some(false) {
        return Ok(GlobalCase::NotGlobalModel);
    }
    let tol = 1e-6;
    let curvature_matches = (model_curvature(model) - verdict.k0).abs() <= tol * verdict.k0.abs().max(1.0);
    Ok(match verdict.wind_type {
        WindType::Killing if curvature_matches => GlobalCase::ModelKilling,
        WindType::ProperlyHomothetic if verdict.k0.abs() < 1e-8 && model == ModelSpace::Euclidean => {
            GlobalCase::FlatProperHomothetic
        }
        _ => GlobalCase::NotGlobalModel,
    })
}

/// Kropina classification for unit winds.
pub fn kropina_classify(wd: &WindData, samples: &[Vec<f64>], tol: f64) -> Result<KropinaCase> {
    check_samples(samples)?;
    let mut deviation: f64 = 0.0;
    for p in samples {
        deviation = deviation.max((wd.space.norm(p, &wd.wind.value_at(p))? - 1.0).abs());
    }
    if deviation > tol {
        return Err(WindError::NotKropina { deviation });
    }
    let obstructed = |reason| Ok(KropinaCase::Obstructed { reason });
    let k0 = match constant_curvature_check(&wd.space, samples, tol)? {
        CurvatureCheck::Constant { k0, .. } => k0,
        CurvatureCheck::NotConstant { .. } => return obstructed(ObstructionReason::NonConstantCurvature),
    };
    if k0 < -tol {
        return obstructed(ObstructionReason::NegativeCurvature);
    }
    let n = wd.dim();
    if k0.abs() <= tol {
        let mut nabla: f64 = 0.0;
        for p in samples {
            for j in 0..n {
                let mut e = DVector::zeros(n);
                e[j] = 1.0;
                let d = covariant_derivative(&wd.space, &wd.wind, p, &e)?;
                nabla = nabla.max(wd.space.norm(p, &d)? / wd.space.norm(p, &e)?);
            }
        }
        return if nabla <= tol {
            Ok(KropinaCase::FlatParallel)
        } else {
            obstructed(ObstructionReason::FlatNonParallel)
        };
    }
    if n.is_multiple_of(2) {
        return obstructed(ObstructionReason::EvenDimensionalPositive);
    }
    let hom = homothety_classify(&wd.space, &wd.wind, samples, tol)?;
    if hom.class == HomothetyClass::Killing {
        Ok(KropinaCase::OddSphereHopf)
    } else {
        obstructed(ObstructionReason::NotKilling)
    }
}

/// [`classify_cfc`] followed by [`global_match`] (CFC only) and
/// [`kropina_classify`] (unit winds only).
pub fn classify_all(wd: &WindData, samples: &[Vec<f64>], opts: &ClassifyOptions) -> Result<CfcVerdict> {
    let mut v = classify_cfc(wd, samples, opts)?;
    if v.is_cfc {
        v.global_case = Some(global_match(wd, &v, None)?);
    }
    v.kropina_case = match kropina_classify(wd, samples, opts.tol) {
        Ok(k) => Some(k),
        Err(WindError::NotKropina { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{list_models, make_model, params, ModelParams};

    fn fast() -> ClassifyOptions {
        ClassifyOptions {
            cross_check_flags: 0,
            ..Default::default()
        }
    }

    #[test]
    fn catalog_verdicts() {
        for m in list_models() {
            let wd = m.build().unwrap();
            let samples = m.samples(&wd, 10, 7);
            let v = classify_all(&wd, &samples, &fast()).unwrap();
            let bad = m.expected.mismatches(&v, 1e-6);
            assert!(bad.is_empty(), "{}: {bad:?}", m.id);
            if v.is_cfc {
                assert!((v.kappa - (v.k0 - v.mu * v.mu / 4.0)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn shear_is_not_cfc() {
        let wd = make_model("flat_shear", &ModelParams::new()).unwrap();
        let m = list_models().into_iter().find(|m| m.id == "flat_shear").unwrap();
        let v = classify_cfc(&wd, &m.samples(&wd, 8, 1), &fast()).unwrap();
        assert!(!v.is_cfc);
        assert_eq!(v.wind_type, WindType::Neither);
        assert!(matches!(global_match(&wd, &v, None), Err(WindError::NotCfc)));
    }

    #[test]
    fn too_few_samples() {
        let wd = make_model("strong_constant", &ModelParams::new()).unwrap();
        assert!(classify_cfc(&wd, &vec![vec![0.0, 0.0]; 3], &fast()).is_err());
        assert!(classify_cfc(&wd, &vec![vec![0.0, 0.0]; 9], &fast()).is_err());
    }

    #[test]
    fn kropina_requires_unit_wind() {
        let wd = make_model("euclidean_parallel", &params([("c", vec![0.5, 0.0])])).unwrap();
        let m = &list_models()[0];
        assert!(matches!(
            kropina_classify(&wd, &m.samples(&wd, 8, 2), 1e-6),
            Err(WindError::NotKropina { .. })
        ));
    }

    #[test]
    fn incomplete_probe_forces_not_global() {
        let wd = make_model("strong_constant", &ModelParams::new()).unwrap();
        let m = list_models().into_iter().find(|m| m.id == "strong_constant").unwrap();
        let v = classify_cfc(&wd, &m.samples(&wd, 8, 1), &fast()).unwrap();
        assert_eq!(global_match(&wd, &v, Some(false)).unwrap(), GlobalCase::NotGlobalModel);
        assert_eq!(global_match(&wd, &v, Some(true)).unwrap(), GlobalCase::ModelKilling);
    }

    #[test]
    fn scale_covariance() {
        for id in ["sphere_killing", "hyperbolic", "flat_homothetic"] {
            let m = list_models().into_iter().find(|m| m.id == id).unwrap();
            let wd = m.build().unwrap();
            let samples = m.samples(&wd, 10, 5);
            let v = classify_cfc(&wd, &samples, &fast()).unwrap();
            let c = 1.7;
            let scaled = WindData::new(wd.space.scaled(c), wd.wind.clone()).unwrap();
            let vs = classify_cfc(&scaled, &samples, &fast()).unwrap();
            assert!((vs.k0 - v.k0 / (c * c)).abs() < 1e-6, "{id}");
            assert_eq!(vs.wind_type, v.wind_type, "{id}");
        }
    }
}
