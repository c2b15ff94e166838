//! Command dispatch and output files.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::Serialize;
use serde_json::{json, Value};

use windfield_core::classify::{classify_all, ClassifyOptions};
use windfield_core::geodesics::{geodesic_ivp, navigate, GeodesicOptions, NavOptions, CASE_TOL, TOUCH_TOL};
use windfield_core::models::{list_models, make_model, sample_in_box, ModelSpec};
use windfield_core::ode::OdeOptions;
use windfield_core::reachability::{forward_ball, GridSpec};
use windfield_core::sstk::metric_at;
use windfield_core::wrs::{IndicatrixPiece, WindData, TOL_CONE_REL, TOL_LAMBDA};
use windfield_core::{SampledCurve, VERSION};

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::svg::{contour, ramp, Canvas};

/// Whether every check of the command passed (only `verify` can fail).
pub struct Outcome {
    pub passed: bool,
    pub files: Vec<PathBuf>,
}

struct Outputs<'a> {
    dir: &'a Path,
    csv: bool,
    svg: bool,
    files: Vec<PathBuf>,
}

impl Outputs<'_> {
    fn json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
        if !self.csv {
            return Ok(());
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
        self.write(name, &bytes)
    }

    fn svg(&mut self, name: &str, canvas: Canvas) -> Result<(), CliError> {
        if !self.svg {
            return Ok(());
        }
        self.write(name, canvas.finish().as_bytes())
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        self.files.push(path);
        Ok(())
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn point(wd: &WindData, p: &[f64], what: &str) -> Result<Vec<f64>, CliError> {
    if p.len() != wd.dim() {
        return Err(config_err(format!(
            "{what} must have {} coordinates, got {}",
            wd.dim(),
            p.len()
        )));
    }
    Ok(p.to_vec())
}

/// Catalog entry with the same builder name, preferring identical parameters.
fn catalog_entry(cfg: &RunConfig) -> (Option<ModelSpec>, bool) {
    let models = list_models();
    if let Some(m) = models
        .iter()
        .find(|m| m.name == cfg.model.name && m.params == cfg.model.params)
    {
        return (Some(m.clone()), true);
    }
    (models.into_iter().find(|m| m.name == cfg.model.name), false)
}

fn sample_box(cfg: &RunConfig, explicit: &Option<Vec<(f64, f64)>>, dim: usize) -> Result<Vec<(f64, f64)>, CliError> {
    let b = match explicit {
        Some(b) => b.clone(),
        None => catalog_entry(cfg)
            .0
            .map(|m| m.sample_box)
            .ok_or_else(|| config_err("no catalog sampling box for this model; set sample_box"))?,
    };
    if b.len() != dim
        || b.iter()
            .any(|(a, c)| a.partial_cmp(c) != Some(std::cmp::Ordering::Less))
    {
        return Err(config_err(format!("sample_box must list {dim} increasing intervals")));
    }
    Ok(b)
}

fn tolerances(extra: Value) -> Value {
    let ode = OdeOptions::default();
    let mut t = json!({
        "lambda": TOL_LAMBDA,
        "cone_rel": TOL_CONE_REL,
        "case": CASE_TOL,
        "touch": TOUCH_TOL,
        "ode_abs": ode.abs_tol,
        "ode_rel": ode.rel_tol,
    });
    if let (Some(t), Value::Object(extra)) = (t.as_object_mut(), extra) {
        t.extend(extra);
    }
    t
}

pub fn run(command: Command, cfg: &RunConfig, effective: &Value, out: &Path) -> Result<Outcome, CliError> {
    if let Some(c) = cfg.command {
        if c != command {
            return Err(config_err(format!(
                "config is for `{}` but `{}` was requested",
                c.name(),
                command.name()
            )));
        }
    }
    let wd = make_model(&cfg.model.name, &cfg.model.params)?;
    fs::create_dir_all(out).map_err(|e| CliError::Output(format!("{}: {e}", out.display())))?;
    let mut outputs = Outputs {
        dir: out,
        csv: cfg.output.csv,
        svg: cfg.output.svg,
        files: Vec::new(),
    };
    let (result, tol, passed) = match command {
        Command::Eval => (eval(&wd, cfg)?, json!({}), true),
        Command::Indicatrix => (indicatrix(&wd, cfg, &mut outputs)?, json!({}), true),
        Command::Geodesic => geodesic(&wd, cfg, &mut outputs)?,
        Command::Navigate => nav(&wd, cfg, &mut outputs)?,
        Command::Ball => ball(&wd, cfg, &mut outputs)?,
        Command::Classify => classify(&wd, cfg)?,
        Command::Verify => verify(&wd, cfg)?,
    };
    let report = json!({
        "command": command.name(),
        "config": effective,
        "version": VERSION,
        "tolerances": tolerances(tol),
        "result": result,
    });
    outputs.json(&format!("{}.json", command.name()), &report)?;
    Ok(Outcome {
        passed,
        files: outputs.files,
    })
}

fn eval(wd: &WindData, cfg: &RunConfig) -> Result<Value, CliError> {
    if cfg.eval.points.is_empty() {
        return Err(config_err("eval.points is empty"));
    }
    let mut records = Vec::new();
    for p in &cfg.eval.points {
        let p = point(wd, p, "eval.points entry")?;
        let region = wd.region_at(&p)?;
        if cfg.eval.vectors.is_empty() {
            records.push(json!({"point": p, "Lambda": region.lambda, "region": region.kind}));
        }
        for v in &cfg.eval.vectors {
            let v = DVector::from_vec(point(wd, v, "eval.vectors entry")?);
            let class = wd.admissible(&p, &v)?;
            let sp = wd.speeds(&p, &v)?;
            records.push(json!({
                "point": p,
                "v": v.as_slice(),
                "Lambda": region.lambda,
                "region": region.kind,
                "admissible": class,
                "F": sp.f,
                "F_l": sp.f_l,
            }));
        }
    }
    Ok(if records.len() == 1 {
        records.pop().expect("one record")
    } else {
        json!({ "records": records })
    })
}

fn indicatrix(wd: &WindData, cfg: &RunConfig, out: &mut Outputs) -> Result<Value, CliError> {
    let ic = &cfg.indicatrix;
    if ic.points.is_empty() {
        return Err(config_err("indicatrix.points is empty"));
    }
    let n = wd.dim();
    let mut header: Vec<String> = vec!["point".into(), "piece".into()];
    header.extend((0..n).map(|k| format!("u{k}")));
    header.extend((0..n).map(|k| format!("v{k}")));
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (i, p) in ic.points.iter().enumerate() {
        let p = point(wd, p, "indicatrix.points entry")?;
        let samples = wd.indicatrix(&p, ic.directions)?;
        let count = |piece| samples.iter().filter(|s| s.piece == piece).count();
        let region = wd.region_at(&p)?;
        summary.push(json!({
            "point": p,
            "region": region.kind,
            "Lambda": region.lambda,
            "convex": count(IndicatrixPiece::Convex),
            "concave": count(IndicatrixPiece::Concave),
            "cone": count(IndicatrixPiece::Cone),
            "zero_critical": count(IndicatrixPiece::ZeroCritical),
        }));
        for s in &samples {
            let mut row = vec![
                i.to_string(),
                to_value(&s.piece).as_str().unwrap_or_default().to_string(),
            ];
            row.extend(s.u.iter().map(|x| num(*x)));
            row.extend(s.v.iter().map(|x| num(*x)));
            rows.push(row);
        }
        if n == 2 {
            let w = wd.at(&p)?.w;
            let pts: Vec<Vec<f64>> = samples.iter().map(|s| s.v.iter().copied().collect()).collect();
            let mut canvas = Canvas::fitting(pts.iter().map(|v| v.as_slice()).chain([&[0.0, 0.0][..]]));
            canvas.label(&format!("indicatrix at {p:?}, {:?}", region.kind));
            canvas.line(&[0.0, 0.0], w.as_slice(), "#888888", 1.0);
            for (s, v) in samples.iter().zip(&pts) {
                let colour = match s.piece {
                    IndicatrixPiece::Convex => "#1f77b4",
                    IndicatrixPiece::Concave => "#d62728",
                    IndicatrixPiece::Cone | IndicatrixPiece::ZeroCritical => "#2ca02c",
                };
                canvas.dot(v, 2.5, colour);
            }
            canvas.dot(&[0.0, 0.0], 3.0, "black");
            out.svg(&format!("indicatrix_{i}.svg"), canvas)?;
        }
    }
    out.csv("indicatrix.csv", &header, &rows)?;
    Ok(json!({ "points": summary, "directions": ic.directions }))
}

fn curve_rows(c: &SampledCurve) -> (Vec<String>, Vec<Vec<String>>) {
    let n = c.points.first().map_or(0, |p| p.len());
    let mut header = vec!["s".to_string()];
    header.extend((0..n).map(|k| format!("x{k}")));
    header.extend((0..n).map(|k| format!("v{k}")));
    let rows = c
        .params
        .iter()
        .zip(c.points.iter().zip(&c.velocities))
        .map(|(s, (p, v))| {
            let mut r = vec![num(*s)];
            r.extend(p.iter().map(|x| num(*x)));
            r.extend(v.iter().map(|x| num(*x)));
            r
        })
        .collect();
    (header, rows)
}

fn wind_arrows(wd: &WindData, canvas: &mut Canvas, lo: [f64; 2], hi: [f64; 2]) {
    let k = 12;
    let step = f64::max(hi[0] - lo[0], hi[1] - lo[1]) / k as f64;
    for i in 0..=k {
        for j in 0..=k {
            let p = [lo[0] + step * i as f64, lo[1] + step * j as f64];
            if let Ok(pd) = wd.at(&p) {
                let w = &pd.w * (0.4 * step);
                canvas.line(&p, &[p[0] + w[0], p[1] + w[1]], "#bbbbbb", 1.0);
            }
        }
    }
}

fn path_svg(wd: &WindData, c: &SampledCurve, marks: &[&[f64]], title: &str) -> Canvas {
    let pts: Vec<Vec<f64>> = c.points.iter().map(|p| p.iter().copied().collect()).collect();
    let mut canvas = Canvas::fitting(pts.iter().map(|p| p.as_slice()).chain(marks.iter().copied()));
    let (lo, hi) = bounds(pts.iter().map(|p| p.as_slice()).chain(marks.iter().copied()));
    wind_arrows(wd, &mut canvas, lo, hi);
    canvas.label(title);
    canvas.polyline(&pts, "#1f77b4", 2.0);
    for m in marks {
        canvas.dot(m, 4.0, "#d62728");
    }
    canvas
}

fn bounds<'a>(pts: impl IntoIterator<Item = &'a [f64]>) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in pts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

fn geodesic(wd: &WindData, cfg: &RunConfig, out: &mut Outputs) -> Result<(Value, Value, bool), CliError> {
    let gc = &cfg.geodesic;
    let p = point(wd, &gc.p, "geodesic.p")?;
    let mut v = DVector::from_vec(point(wd, &gc.v, "geodesic.v")?);
    if gc.normalize {
        v /= wd.speeds(&p, &v)?.f;
    }
    let mut opts = GeodesicOptions::with_span(gc.span);
    opts.null.ode.h_max = gc.h_max;
    let c = geodesic_ivp(wd, &p, &v, &opts)?;
    let check = wd.wind_curve_check(&c, 1e-6)?;
    let (header, rows) = curve_rows(&c);
    out.csv("geodesic.csv", &header, &rows)?;
    if wd.dim() == 2 {
        out.svg("geodesic.svg", path_svg(wd, &c, &[&p], "geodesic"))?;
    }
    let result = json!({
        "case": c.meta.case,
        "case_number": c.meta.case.map(|k| k.number()),
        "termination": c.meta.termination,
        "regions": c.meta.regions,
        "notes": c.meta.notes,
        "end": c.end(),
        "endpoint": c.last_point().as_slice(),
        "samples": c.len(),
        "wind_curve": check,
    });
    Ok((result, json!({ "ode_h_max": gc.h_max }), true))
}

fn nav(wd: &WindData, cfg: &RunConfig, out: &mut Outputs) -> Result<(Value, Value, bool), CliError> {
    let nc = &cfg.navigate;
    let p = point(wd, &nc.p, "navigate.p")?;
    let q = point(wd, &nc.q, "navigate.q")?;
    let opts = NavOptions {
        directions: nc.directions,
        t_max: nc.t_max,
        tol: nc.tol,
        max_iter: nc.max_iter,
        ..NavOptions::default()
    };
    let r = navigate(wd, &p, &q, &opts)?;
    let mut result = json!({
        "time": finite(r.time),
        "status": r.status,
        "notes": r.notes,
    });
    if let Some(c) = &r.curve {
        let v0 = &c.velocities[0];
        let heading = v0 - wd.at(&p)?.w;
        result["initial_velocity"] = json!(v0.as_slice());
        result["heading"] = json!(heading.as_slice());
        result["samples"] = json!(c.len());
        let (header, rows) = curve_rows(c);
        out.csv("navigate.csv", &header, &rows)?;
    }
    if wd.dim() == 2 {
        let title = format!("navigate: {:?}", r.status);
        let canvas = match &r.curve {
            Some(c) => path_svg(wd, c, &[&p, &q], &title),
            None => {
                let empty = SampledCurve::new(vec![0.0], vec![DVector::from_vec(p.clone())], vec![DVector::zeros(2)])?;
                path_svg(wd, &empty, &[&p, &q], &title)
            }
        };
        out.svg("navigate.svg", canvas)?;
    }
    let tol = json!({ "navigate_tol": nc.tol, "ode_h_max": opts.ode.h_max });
    Ok((result, tol, true))
}

fn ball(wd: &WindData, cfg: &RunConfig, out: &mut Outputs) -> Result<(Value, Value, bool), CliError> {
    let bc = &cfg.ball;
    let p0 = point(wd, &bc.p0, "ball.p0")?;
    let n = wd.dim();
    let grid = match &bc.grid {
        Some(g) => {
            if g.lower.len() != n || g.upper.len() != n {
                return Err(config_err(format!("ball.grid bounds must have {n} coordinates")));
            }
            let spec = GridSpec::new(g.lower.clone(), g.upper.clone(), g.resolution);
            match g.dt {
                Some(dt) => spec.with_dt(dt),
                None => spec,
            }
        }
        None => GridSpec::centered(&p0, 2.0 * bc.r, if n == 1 { 1024 } else { 128 }),
    };
    let field = forward_ball(wd, &p0, bc.r, &grid, bc.backward)?;
    let names = ["x", "y", "z"];
    let mut header: Vec<String> = names[..n].iter().map(|s| s.to_string()).collect();
    header.extend(["time".to_string(), "inside".to_string()]);
    let rows: Vec<Vec<String>> = (0..field.level.len())
        .map(|i| {
            let mut r: Vec<String> = grid.center(i).iter().map(|x| num(*x)).collect();
            r.push(field.times[i].map(num).unwrap_or_default());
            r.push(field.in_open(i).to_string());
            r
        })
        .collect();
    out.csv("ball.csv", &header, &rows)?;
    if n == 2 {
        let res = grid.resolution;
        let h = grid.cell_sizes();
        let mut canvas = Canvas::new([grid.lower[0], grid.lower[1]], [grid.upper[0], grid.upper[1]]);
        canvas.label(&format!(
            "{} ball, r = {}",
            if bc.backward { "backward" } else { "forward" },
            bc.r
        ));
        for i in 0..field.level.len() {
            if let (Some(t), true) = (field.times[i], field.in_open(i)) {
                let c = grid.center(i);
                canvas.rect(
                    &[c[0] - 0.5 * h[0], c[1] - 0.5 * h[1]],
                    &[c[0] + 0.5 * h[0], c[1] + 0.5 * h[1]],
                    &ramp(t / bc.r),
                );
            }
        }
        let segs = contour(
            res,
            |i, j| field.level[grid.flatten(&[i, j])],
            |i, j| {
                let c = grid.center(grid.flatten(&[i, j]));
                [c[0], c[1]]
            },
        );
        for [a, b] in &segs {
            canvas.line(a, b, "black", 1.5);
        }
        canvas.dot(&p0, 4.0, "#d62728");
        out.svg("ball.svg", canvas)?;
    }
    let open = field.open_cells();
    let cell_volume: f64 = grid.cell_sizes().iter().product();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for &i in &open {
        for (k, x) in grid.center(i).iter().enumerate() {
            lo[k] = lo[k].min(*x);
            hi[k] = hi[k].max(*x);
        }
    }
    let reached = if open.is_empty() {
        Value::Null
    } else {
        json!({ "lower": lo, "upper": hi })
    };
    let result = json!({
        "center": field.center,
        "radius": field.radius,
        "backward": field.backward,
        "grid": to_value(&field.grid),
        "dt": field.dt,
        "open_cells": open.len(),
        "closed_cells": field.closed_cells().len(),
        "excluded_cells": field.excluded.iter().filter(|e| **e).count(),
        "volume": open.len() as f64 * cell_volume,
        "reached_box": reached,
    });
    Ok((result, json!({ "slack": field.slack }), true))
}

fn classify(wd: &WindData, cfg: &RunConfig) -> Result<(Value, Value, bool), CliError> {
    let cc = &cfg.classify;
    let samples = match &cc.points {
        Some(pts) => pts
            .iter()
            .map(|p| point(wd, p, "classify.points entry"))
            .collect::<Result<Vec<_>, _>>()?,
        None => sample_in_box(wd, &sample_box(cfg, &cc.sample_box, wd.dim())?, cc.samples, cfg.seed),
    };
    if samples.is_empty() {
        return Err(config_err("no classification samples"));
    }
    let opts = ClassifyOptions {
        tol: cc.tol,
        cross_check_flags: cc.cross_check_flags,
        ..ClassifyOptions::default()
    };
    let verdict = classify_all(wd, &samples, &opts)?;
    let mut result = json!({ "verdict": verdict, "samples": samples.len() });
    if let (Some(m), true) = catalog_entry(cfg) {
        result["expected"] = to_value(&m.expected);
        result["mismatches"] = json!(m.expected.mismatches(&verdict, cc.tol));
    }
    Ok((result, json!({ "classify": cc.tol }), true))
}

struct Check {
    name: &'static str,
    worst: f64,
    tol: f64,
    count: usize,
}

impl Check {
    fn new(name: &'static str, tol: f64, scale: f64) -> Self {
        Check {
            name,
            worst: 0.0,
            tol: tol * scale,
            count: 0,
        }
    }

    fn record(&mut self, err: f64) {
        self.worst = if err.is_nan() { f64::NAN } else { self.worst.max(err) };
        self.count += 1;
    }

    fn passed(&self) -> bool {
        self.worst <= self.tol
    }

    fn value(&self) -> Value {
        json!({
            "name": self.name,
            "worst": finite(self.worst),
            "tol": self.tol,
            "count": self.count,
            "passed": self.passed(),
        })
    }
}

/// Classical Randers value `√(a(v,v)) + b(v)`, defined where `Λ > 0`.
fn randers(g: &nalgebra::DMatrix<f64>, gw: &DVector<f64>, lambda: f64, v: &DVector<f64>) -> f64 {
    let beta = gw.dot(v);
    let a = (lambda * v.dot(&(g * v)) + beta * beta) / (lambda * lambda);
    a.sqrt() - beta / lambda
}

fn verify(wd: &WindData, cfg: &RunConfig) -> Result<(Value, Value, bool), CliError> {
    let vc = &cfg.verify;
    let samples = sample_in_box(wd, &sample_box(cfg, &vc.sample_box, wd.dim())?, vc.samples, cfg.seed);
    if samples.is_empty() {
        return Err(config_err("no verification samples in the domain"));
    }
    let mut indicatrix = Check::new("indicatrix_identity", 1e-9, vc.tol_scale);
    let mut lift = Check::new("null_lift", 1e-9, vc.tol_scale);
    let mut det = Check::new("lift_determinant", 1e-9, vc.tol_scale);
    let mut randers_eq = Check::new("randers_equivalence", 1e-10, vc.tol_scale);
    let mut homogeneity = Check::new("positive_homogeneity", 1e-12, vc.tol_scale);
    let mut reverse = Check::new("reverse_structure", 1e-12, vc.tol_scale);
    let mut unit_speed = Check::new("geodesic_unit_speed", 1e-6, vc.tol_scale);
    let rev = wd.reverse();
    for p in &samples {
        let pd = wd.at(p)?;
        let g = metric_at(wd, p)?;
        let (dg, dr) = (g.determinant(), pd.g.determinant());
        det.record(((dg + dr) / dr).abs());
        for s in wd.indicatrix(p, vc.directions)? {
            let sp = wd.speeds(p, &s.v);
            match (s.piece, sp) {
                (IndicatrixPiece::Convex, Ok(sp)) => indicatrix.record((sp.f - 1.0).abs()),
                (IndicatrixPiece::Concave, Ok(sp)) => indicatrix.record((sp.f_l.value() - 1.0).abs()),
                (IndicatrixPiece::Cone, Ok(sp)) => indicatrix.record((sp.f - sp.f_l.value()).abs()),
                (IndicatrixPiece::ZeroCritical, _) => {}
                (_, Err(_)) => indicatrix.record(f64::NAN),
            }
            let mut x = DVector::zeros(p.len() + 1);
            x[0] = 1.0;
            x.rows_mut(1, p.len()).copy_from(&s.v);
            lift.record(x.dot(&(&g * &x)).abs());
            if let Ok(sp) = wd.speeds(p, &s.v) {
                let f2 = wd.speeds(p, &(&s.v * 2.0))?.f;
                homogeneity.record((f2 - 2.0 * sp.f).abs() / sp.f.max(1.0));
                let fr = rev.speeds(p, &(-&s.v))?.f;
                reverse.record((fr - sp.f).abs() / sp.f.max(1.0));
                if pd.lambda > 1e-6 {
                    let r = randers(&pd.g, &pd.gw, pd.lambda, &s.v);
                    randers_eq.record(((sp.f - r) / r).abs());
                }
            }
        }
    }
    for p in samples.iter().take(vc.geodesics) {
        let pd = wd.at(p)?;
        let Some(s) = wd
            .indicatrix(p, 8)?
            .into_iter()
            .find(|s| s.piece == IndicatrixPiece::Convex && pd.lambda > 0.0)
        else {
            continue;
        };
        let c = match geodesic_ivp(wd, p, &s.v, &GeodesicOptions::with_span(0.5)) {
            Ok(c) => c,
            Err(_) => continue,
        };
        for (q, v) in c.points.iter().zip(&c.velocities) {
            if let Ok(sp) = wd.speeds(q.as_slice(), v) {
                unit_speed.record((sp.f - 1.0).abs());
            }
        }
    }
    let checks = [indicatrix, lift, det, randers_eq, homogeneity, reverse, unit_speed];
    let passed = checks.iter().all(Check::passed);
    let result = json!({
        "samples": samples.len(),
        "checks": checks.iter().map(Check::value).collect::<Vec<_>>(),
        "passed": passed,
    });
    Ok((result, json!({ "verify_scale": vc.tol_scale }), passed))
}
