//! WRS geodesics, flag curvature by geodesic deviation, and Zermelo navigation.
//!
//! Every geodesic is the projection of a lightlike geodesic of the SSTK
//! spacetime; boundary geodesics can also be integrated directly from `h`.

mod deviation;
mod ivp;
mod navigate;

pub use deviation::{flag_curvature_deviation, fundamental_tensor, sn, FlagEstimate, FlagOptions};
pub use ivp::{boundary_geodesic, exceptional_test, geodesic_ivp, GeodesicOptions, CASE_TOL, TOUCH_TOL};
pub use navigate::{navigate, NavOptions, NavStatus, NavigationResult};

#[cfg(test)]
mod tests {
    use nalgebra::DVector;

    use super::*;
    use crate::curve::{GeodesicCase, Termination};
    use crate::models::{make_model, params, stereo_inverse, ModelParams, ParamValue};
    use crate::ode::OdeOptions;
    use crate::wrs::WindData;

    fn constant(w: [f64; 2]) -> WindData {
        make_model("euclidean_parallel", &params([("c", ParamValue::from(w.to_vec()))])).unwrap()
    }

    fn dv(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn straight_line_without_wind() {
        let wd = constant([0.0, 0.0]);
        let c = geodesic_ivp(&wd, &[0.0, 0.0], &dv(&[1.0, 0.0]), &GeodesicOptions::default()).unwrap();
        assert_eq!(c.meta.case, Some(GeodesicCase::ConicF));
        for (s, p) in c.params.iter().zip(&c.points) {
            assert!((p[0] - s).abs() < 1e-9 && p[1].abs() < 1e-12);
        }
    }

    #[test]
    fn great_circle_on_the_round_sphere() {
        let wd = make_model(
            "sphere_killing",
            &params([("a", ParamValue::Matrix(vec![vec![0.0; 3]; 3]))]),
        )
        .unwrap();
        let u = [0.3, 0.2];
        let pd = wd.at(&u).unwrap();
        let v = dv(&[0.4, 0.7]);
        let v = &v / pd.norm2(&v).sqrt();
        let c = geodesic_ivp(&wd, &u, &v, &GeodesicOptions::with_span(2.0)).unwrap();
        assert_eq!(c.meta.case, Some(GeodesicCase::ConicF));
        let eps = 1e-6;
        let y0 = stereo_inverse(&u, 1.0);
        let up: Vec<f64> = u.iter().zip(v.iter()).map(|(a, b)| a + eps * b).collect();
        let um: Vec<f64> = u.iter().zip(v.iter()).map(|(a, b)| a - eps * b).collect();
        let ydot = (stereo_inverse(&up, 1.0) - stereo_inverse(&um, 1.0)) / (2.0 * eps);
        for (t, p) in c.params.iter().zip(&c.points) {
            let exact = &y0 * t.cos() + &ydot * t.sin();
            assert!((stereo_inverse(p.as_slice(), 1.0) - exact).norm() < 1e-6, "t = {t}");
        }
    }

    fn strong_cone_vector() -> DVector<f64> {
        // h(v, v) = -3|v|² + (2 v_x)² vanishes along (√3, 1); F = |v|²/β
        let v = dv(&[3f64.sqrt(), 1.0]);
        let f = v.norm_squared() / (2.0 * v[0]);
        v / f
    }

    #[test]
    fn cone_launch_under_constant_strong_wind() {
        let wd = constant([2.0, 0.0]);
        let v = strong_cone_vector();
        let c = geodesic_ivp(&wd, &[0.0, 0.0], &v, &GeodesicOptions::default()).unwrap();
        assert_eq!(c.meta.case, Some(GeodesicCase::Boundary));
        for (s, (p, vel)) in c.params.iter().zip(c.points.iter().zip(&c.velocities)) {
            assert!((p - &v * *s).norm() < 1e-8);
            let sp = wd.speeds(p.as_slice(), vel).unwrap();
            assert!((sp.f - 1.0).abs() < 1e-8 && (sp.f_l.value() - sp.f).abs() < 1e-8);
        }
        let b = boundary_geodesic(&wd, &[0.0, 0.0], &v, 1.0, 1.5, &OdeOptions::default()).unwrap();
        assert_eq!(b.meta.termination, Termination::Completed);
        for (p, vel) in b.points.iter().zip(&b.velocities) {
            assert!(wd.speeds(p.as_slice(), vel).unwrap().f - 1.5 < 1e-9);
            let cross = p[0] * v[1] - p[1] * v[0];
            assert!(cross.abs() < 1e-9);
        }
    }

    #[test]
    fn boundary_geodesic_matches_the_lift() {
        let wd = make_model("flat_homothetic", &params([("mu", 1.0)])).unwrap();
        let p = [2.0, 0.0];
        let v = strong_cone_vector();
        let lift = geodesic_ivp(&wd, &p, &v, &GeodesicOptions::with_span(0.4)).unwrap();
        let direct = boundary_geodesic(&wd, &p, &v, 0.4, 1.0, &OdeOptions::default()).unwrap();
        assert_eq!(lift.meta.case, Some(GeodesicCase::Boundary));
        let d = lift.sup_distance(&direct, 200);
        assert!(d < 1e-6, "sup distance {d:e}");
        for (q, vel) in direct.points.iter().zip(&direct.velocities) {
            assert!((wd.speeds(q.as_slice(), vel).unwrap().f - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn boundary_geodesic_rejects_bad_input() {
        let wd = constant([2.0, 0.0]);
        assert!(boundary_geodesic(&wd, &[0.0, 0.0], &dv(&[1.0, 0.0]), 1.0, 1.0, &OdeOptions::default()).is_err());
        let mild = constant([0.5, 0.0]);
        assert!(boundary_geodesic(&mild, &[0.0, 0.0], &dv(&[1.0, 0.0]), 1.0, 1.0, &OdeOptions::default()).is_err());
    }

    #[test]
    fn exceptional_points() {
        assert!(!exceptional_test(&constant([0.5, 0.0]), &[0.3, -1.0]).unwrap());
        let kropina = constant([1.0, 0.0]);
        assert!(exceptional_test(&kropina, &[0.3, -1.0]).unwrap());
        let fig3 = make_model("figure3", &ModelParams::new()).unwrap();
        assert!(exceptional_test(&fig3, &[3.0, 0.5]).unwrap());
        assert!(exceptional_test(&fig3, &[-3.0, -2.0]).unwrap());
        assert!(!exceptional_test(&fig3, &[0.0, 0.0]).unwrap());
    }

    fn unit(wd: &WindData, p: &[f64], v: DVector<f64>) -> DVector<f64> {
        let f = wd.speeds(p, &v).unwrap().f;
        v / f
    }

    #[test]
    fn flag_curvature_of_three_models() {
        let sphere = make_model(
            "sphere_killing",
            &params([("a", ParamValue::Matrix(vec![vec![0.0; 3]; 3]))]),
        )
        .unwrap();
        let homothetic = make_model("flat_homothetic", &params([("mu", 1.0)])).unwrap();
        let cases = [(sphere, 1.0), (constant([0.5, 0.0]), 0.0), (homothetic, -0.25)];
        for (wd, kappa) in cases {
            let p = [0.2, 0.1];
            let v = unit(&wd, &p, dv(&[0.6, 0.8]));
            let est = flag_curvature_deviation(&wd, &p, &v, &dv(&[-0.8, 0.6]), &FlagOptions::default()).unwrap();
            assert!((est.kappa - kappa).abs() < 0.02, "κ = {} vs {kappa}", est.kappa);
            assert!(est.stderr >= 0.0);
        }
    }

    #[test]
    fn flag_curvature_rejects_degenerate_planes() {
        let wd = constant([0.5, 0.0]);
        let v = unit(&wd, &[0.0, 0.0], dv(&[1.0, 0.0]));
        assert!(matches!(
            flag_curvature_deviation(&wd, &[0.0, 0.0], &v, &dv(&[2.0, 0.0]), &FlagOptions::default()),
            Err(crate::WindError::DegeneratePlane)
        ));
    }

    #[test]
    fn zermelo_constant_wind() {
        let r = navigate(&constant([0.0, 0.0]), &[0.0, 0.0], &[0.0, 1.0], &NavOptions::default()).unwrap();
        assert_eq!(r.status, NavStatus::Optimal);
        assert!((r.time - 1.0).abs() < 1e-6);

        let wd = constant([0.5, 0.0]);
        let r = navigate(&wd, &[0.0, 0.0], &[0.0, 1.0], &NavOptions::default()).unwrap();
        assert_eq!(r.status, NavStatus::Optimal);
        assert!((r.time - 2.0 / 3f64.sqrt()).abs() < 1e-4, "{}", r.time);
        let c = r.curve.unwrap();
        assert!(c.points.iter().all(|p| p[0].abs() < 1e-4));
        let heading = &c.velocities[0] - dv(&[0.5, 0.0]);
        assert!((heading - dv(&[-0.5, 0.75f64.sqrt()])).norm() < 1e-4);
        let report = wd.wind_curve_check(&c, 1e-6).unwrap();
        assert!(report.ok && (report.length_f - r.time).abs() < 1e-6);
    }

    #[test]
    fn upstream_target_is_unreachable() {
        let r = navigate(&constant([2.0, 0.0]), &[0.0, 0.0], &[-1.0, 0.0], &NavOptions::default()).unwrap();
        assert_eq!(r.status, NavStatus::Unreachable);
        assert!(r.curve.is_none());
    }

    #[test]
    fn navigation_in_three_dimensions() {
        let wd = make_model("euclidean_parallel", &params([("c", vec![0.0, 0.3, 0.0])])).unwrap();
        let q = [0.5, 0.5, 0.5];
        let r = navigate(&wd, &[0.0, 0.0, 0.0], &q, &NavOptions::default()).unwrap();
        assert_eq!(r.status, NavStatus::Optimal);
        let exact = wd.speeds(&[0.0, 0.0, 0.0], &dv(&q)).unwrap().f;
        assert!((r.time - exact).abs() < 1e-6, "{} vs {exact}", r.time);
    }
}
