use std::io::Write as _;
use std::path::{Path, PathBuf};

use hypersurf::catalog::{sample_entry, Catalog};
use hypersurf::deform::{search_tau, switch_side, track, DeformationPath, HomotopyReport, TrackOptions};
use hypersurf::export::{curvature_csv, homotopy_csv, homotopy_summary, obj, round_json, sphere_map_csv};
use hypersurf::gauss::{degree as sphere_degree, predicted_orientation, GaussMapKind, Orientation, SphereMap};
use hypersurf::immersion::{curvature_samples, CurvatureRange, SharedImmersion};
use hypersurf::interval::CurvatureInterval;
use hypersurf::mesh::SphereMesh;
use hypersurf::model::ModelKind;
use hypersurf::verify::{verify_all as run_checks, VerifyOptions};
use hypersurf::GeometryError;
use serde_json::{json, Value};

use crate::config::{Built, DeformKindConfig, ExperimentConfig};
use crate::CliError;

const DEFAULT_LEVEL: u32 = 4;

struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    fn new(dir: Option<&Path>) -> Result<Self, CliError> {
        if let Some(d) = dir {
            std::fs::create_dir_all(d)
                .map_err(|e| CliError::Other(format!("cannot create {}: {e}", d.display())))?;
        }
        Ok(Output {
            dir: dir.map(Path::to_path_buf),
        })
    }

    fn from_config(c: &ExperimentConfig) -> Result<Self, CliError> {
        let out = Self::new(c.output.as_ref().and_then(|o| o.dir.as_deref()))?;
        if out.dir.is_some() {
            let text = toml::to_string(c).map_err(|e| CliError::Other(e.to_string()))?;
            out.write("config.toml", &text)?;
        }
        Ok(out)
    }

    fn write(&self, name: &str, text: &str) -> Result<(), CliError> {
        if let Some(d) = &self.dir {
            let p = d.join(name);
            std::fs::write(&p, text).map_err(|e| CliError::Other(format!("cannot write {}: {e}", p.display())))?;
        }
        Ok(())
    }

    /// Print the rounded summary and store it as `summary.json`.
    fn summary(&self, v: Value) -> Result<(), CliError> {
        let text = format!("{}\n", serde_json::to_string_pretty(&round_json(v)).expect("json value"));
        self.write("summary.json", &text)?;
        // A closed pipe on stdout (e.g. `| head`) is not an error.
        match std::io::stdout().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        }
    }
}

fn level(c: &ExperimentConfig) -> u32 {
    c.mesh_level.unwrap_or(DEFAULT_LEVEL)
}

fn mesh_for(f: &SharedImmersion, level: u32) -> Result<SphereMesh, CliError> {
    SphereMesh::for_dim(f.dim(), level).map_err(|e| CliError::Config(format!("mesh_level: {e}")))
}

fn want_obj(c: &ExperimentConfig) -> bool {
    c.output.as_ref().and_then(|o| o.obj).unwrap_or(false)
}

fn designated(b: &Built) -> Option<GaussMapKind> {
    let m = b.f.model();
    b.interval
        .and_then(|i| predicted_orientation(m.kind(), m.kappa(), b.f.dim(), &i).ok())
        .map(|(k, _)| k)
}

fn gauss_kind(c: &ExperimentConfig, b: &Built) -> GaussMapKind {
    c.gauss
        .as_ref()
        .and_then(|g| g.map)
        .or_else(|| designated(b))
        .unwrap_or(match b.f.model().kind() {
            ModelKind::Euclidean => GaussMapKind::Normal,
            ModelKind::HalfSpace => GaussMapKind::Flat,
            _ => GaussMapKind::Visual,
        })
}

pub fn curvature(c: &ExperimentConfig) -> Result<(), CliError> {
    let b = c.build(&Catalog::shipped())?;
    let out = Output::from_config(c)?;
    let mesh = mesh_for(&b.f, level(c))?;
    let samples = match &b.entry {
        Some(e) => sample_entry(e, &b.f, &mesh)?,
        None => curvature_samples(b.f.as_ref(), &mesh)?,
    };
    let range = CurvatureRange::from_samples(&samples, b.interval.as_ref());
    out.write("curvature.csv", &curvature_csv(&samples)?)?;
    let closed = b.entry.as_ref().map_or(true, |e| e.closed);
    if want_obj(c) && b.f.dim() == 2 && closed {
        let n = samples[0].lambdas.len();
        let attrs: Vec<(String, Vec<f64>)> = (0..n)
            .map(|k| (format!("lambda{}", k + 1), samples.iter().map(|s| s.lambdas[k]).collect()))
            .collect();
        let refs: Vec<(&str, Vec<f64>)> = attrs.iter().map(|(n, v)| (n.as_str(), v.clone())).collect();
        out.write("curvature.obj", &obj(b.f.as_ref(), &mesh, &refs)?)?;
    }
    let pass = range.verdict.map_or(true, |v| v.inside);
    out.summary(json!({
        "command": "curvature",
        "immersion": b.f.label(),
        "entry": b.entry.as_ref().map(|e| &e.id),
        "model": b.f.model(),
        "mesh_level": mesh.level(),
        "samples": samples.len(),
        "lambda_min": range.min,
        "lambda_max": range.max,
        "argmin_row": range.argmin,
        "argmax_row": range.argmax,
        "interval": b.interval,
        "margin": range.verdict.map(|v| v.margin),
        "pass": pass,
    }))?;
    if pass {
        Ok(())
    } else {
        let i = b.interval.expect("verdict implies interval");
        let bad = if range.min - i.lo <= i.hi - range.max { range.argmin } else { range.argmax };
        Err(CliError::Verdict(format!(
            "curvatures [{}, {}] leave {}; see curvature.csv row {}",
            range.min,
            range.max,
            i,
            bad
        )))
    }
}

fn sampled_map(c: &ExperimentConfig) -> Result<(Built, GaussMapKind, SphereMesh, SphereMap, Output), CliError> {
    let b = c.build(&Catalog::shipped())?;
    if b.entry.as_ref().is_some_and(|e| !e.closed) {
        return Err(CliError::Config(
            "immersion: Gauss maps are sampled on the whole sphere; this entry is only a patch".into(),
        ));
    }
    let kind = gauss_kind(c, &b);
    let out = Output::from_config(c)?;
    let mesh = mesh_for(&b.f, level(c))?;
    let map = SphereMap::with_jacobians(kind, b.f.as_ref(), &mesh).map_err(|e| match e {
        GeometryError::ModelMismatch(m) => CliError::Config(format!("gauss.map: {m}")),
        other => other.into(),
    })?;
    Ok((b, kind, mesh, map, out))
}

pub fn gauss(c: &ExperimentConfig) -> Result<(), CliError> {
    let (b, kind, mesh, map, out) = sampled_map(c)?;
    out.write("gauss.csv", &sphere_map_csv(&map, &mesh)?)?;
    let js = map.jacobians.as_ref().expect("sampled with Jacobians");
    let (lo, hi) = map.det_range().expect("sampled with Jacobians");
    let uncertified = js.iter().filter(|j| !j.certified).count();
    let observed = if uncertified == 0 && lo > 0.0 {
        Some(Orientation::Preserving)
    } else if uncertified == 0 && hi < 0.0 {
        Some(Orientation::Reversing)
    } else {
        None
    };
    let m = b.f.model();
    let predicted = b
        .interval
        .and_then(|i| predicted_orientation(m.kind(), m.kappa(), b.f.dim(), &i).ok())
        .filter(|(k, _)| *k == kind)
        .map(|(_, o)| o);
    let pass = observed.is_some() && predicted.map_or(true, |p| Some(p) == observed);
    out.summary(json!({
        "command": "gauss",
        "map": kind,
        "immersion": b.f.label(),
        "mesh_level": mesh.level(),
        "samples": mesh.len(),
        "max_unit_defect": map.max_unit_defect(),
        "det_min": lo,
        "det_max": hi,
        "uncertified": uncertified,
        "predicted": predicted,
        "observed": observed,
        "pass": pass,
    }))?;
    if pass {
        Ok(())
    } else {
        let row = js
            .iter()
            .position(|j| !j.certified || observed.is_none() || Some(Orientation::of_sign(j.det)) != predicted)
            .unwrap_or(0);
        Err(CliError::Verdict(format!(
            "{kind} Gauss map is not {} (det J in [{lo:.3e}, {hi:.3e}]); see gauss.csv row {row}",
            predicted.map_or("single-signed".to_string(), |p| format!("orientation {p}"))
        )))
    }
}

pub fn degree(c: &ExperimentConfig) -> Result<(), CliError> {
    let (b, kind, mesh, map, out) = sampled_map(c)?;
    out.write("degree.csv", &sphere_map_csv(&map, &mesh)?)?;
    let expected = b.entry.as_ref().and_then(|e| e.degree).filter(|_| designated(&b) == Some(kind));
    let report = sphere_degree(&map, &mesh);
    let (raw, rounded, residual, pass) = match &report {
        Ok(r) => (r.raw, Some(r.rounded), r.residual, expected.map_or(true, |d| d == r.rounded)),
        Err(GeometryError::UnresolvedDegree { raw, residual }) => (*raw, None, *residual, false),
        Err(e) => return Err(CliError::Other(e.to_string())),
    };
    out.summary(json!({
        "command": "degree",
        "map": kind,
        "immersion": b.f.label(),
        "mesh_level": mesh.level(),
        "samples": mesh.len(),
        "raw": raw,
        "rounded": rounded,
        "residual": residual,
        "expected": expected,
        "pass": pass,
    }))?;
    match (pass, rounded) {
        (true, _) => Ok(()),
        (false, None) => Err(CliError::Verdict(format!(
            "degree unresolved: raw {raw}, residual {residual}; rows of degree.csv sum to it"
        ))),
        (false, Some(d)) => Err(CliError::Verdict(format!(
            "degree {d} differs from the catalog value {}",
            expected.expect("mismatch implies expectation")
        ))),
    }
}

fn need<T: Copy>(v: Option<T>, field: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("missing field `{field}`")))
}

pub fn deform(c: &ExperimentConfig) -> Result<(), CliError> {
    let d = c
        .deform
        .as_ref()
        .ok_or_else(|| CliError::Config("missing field `deform`".into()))?;
    let b = c.build(&Catalog::shipped())?;
    let interval = need(b.interval, "interval")?;
    let out = Output::from_config(c)?;
    let mesh = mesh_for(&b.f, level(c))?;
    let defaults = TrackOptions::default();
    let opts = TrackOptions {
        steps: d.steps.unwrap_or(defaults.steps),
        drift_tol: d.drift_tol.unwrap_or(defaults.drift_tol),
        formula_tol: d.formula_tol.unwrap_or(defaults.formula_tol),
        ..defaults
    };
    if opts.steps < 2 {
        return Err(CliError::Config("deform.steps must be at least 2".into()));
    }
    let kappa = b.f.model().kappa();
    let regime = |e: GeometryError| CliError::Config(format!("deform: {e}"));
    // Positive-side retractions go through the reflected immersion.
    let switch = |above: f64| -> Result<(SharedImmersion, CurvatureInterval, f64, bool), CliError> {
        let mu = need(d.mu, "deform.mu")?;
        if interval.lies_above(above) {
            let (g, neg) = switch_side(&b.f, &interval)?;
            Ok((g, neg, -mu, true))
        } else {
            Ok((b.f.clone(), interval, mu, false))
        }
    };
    let mut extra = json!({});
    let (path, report, switched): (DeformationPath, HomotopyReport, bool) = match d.kind {
        DeformKindConfig::NormalFlow => {
            let p = DeformationPath::normal_flow(b.f.clone(), d.r_end.unwrap_or(4.0), interval).map_err(regime)?;
            let r = track(&p, &mesh, &opts);
            (p, r, false)
        }
        DeformKindConfig::EuclideanRetraction => {
            let (f, i, mu, sw) = switch(0.0)?;
            let p = DeformationPath::euclidean_retraction(f, mu, i).map_err(regime)?;
            let r = track(&p, &mesh, &opts);
            (p, r, sw)
        }
        DeformKindConfig::HalfSpaceRetraction => {
            let (f, i, mu, sw) = switch(kappa)?;
            let p = DeformationPath::halfspace_retraction(f, mu, i).map_err(regime)?;
            let r = track(&p, &mesh, &opts);
            (p, r, sw)
        }
        DeformKindConfig::OverlapPath => {
            let mu = need(d.mu, "deform.mu")?;
            match d.tau {
                Some(tau) => {
                    let p = DeformationPath::overlap(b.f.clone(), mu, tau, interval).map_err(regime)?;
                    let r = track(&p, &mesh, &opts);
                    (p, r, false)
                }
                None => {
                    let s = search_tau(b.f.clone(), mu, interval, &mesh, &opts, d.max_tau_k.unwrap_or(20))
                        .map_err(regime)?;
                    extra = json!({"tau_attempts": s.attempts, "tau_found": s.found});
                    let p = DeformationPath::overlap(b.f.clone(), mu, s.report.tau, interval).map_err(regime)?;
                    (p, s.report, false)
                }
            }
        }
    };
    out.write("homotopy.csv", &homotopy_csv(&report)?)?;
    // `output.obj` alone writes the two ends and every eighth step.
    let every = d.obj_every.or(want_obj(c).then_some(8));
    if let Some(every) = every.filter(|&m| m > 0) {
        if b.f.dim() == 2 && out.dir.is_some() {
            let last = opts.steps - 1;
            for i in (0..opts.steps).step_by(every).chain((last % every != 0).then_some(last)) {
                let s = path.s_max() * i as f64 / (opts.steps - 1) as f64;
                let g = path.stage(s)?;
                match obj(g.as_ref(), &mesh, &[]) {
                    Ok(text) => out.write(&format!("stage_{i:03}.obj"), &text)?,
                    Err(e) => eprintln!("skipping OBJ at s = {s}: {e}"),
                }
            }
        }
    }
    let mut summary = homotopy_summary(&report);
    let obj_map = summary.as_object_mut().expect("summary is an object");
    obj_map.insert("command".into(), json!("deform"));
    obj_map.insert("switched_side".into(), json!(switched));
    if let Value::Object(e) = extra {
        obj_map.extend(e);
    }
    out.summary(summary)?;
    match report.first_failure {
        None => Ok(()),
        Some(i) => {
            let row = &report.rows[i];
            Err(CliError::Verdict(format!(
                "step s = {} failed ({}); see homotopy.csv row {i}",
                row.s,
                row.error.clone().unwrap_or_else(|| format!(
                    "lambda in [{}, {}], margin {}, drift {:?}, residual {:?}",
                    row.lambda_min, row.lambda_max, row.interval_margin, row.drift, row.formula_residual
                ))
            )))
        }
    }
}

pub fn verify_all(level: Option<u32>, seed: Option<u64>, dir: Option<&Path>) -> Result<(), CliError> {
    let mut opts = VerifyOptions::default();
    if let Some(l) = level {
        opts.mesh_level = l.max(1);
    }
    if let Some(s) = seed {
        opts.seed = s;
    }
    let out = Output::new(dir)?;
    let summary = run_checks(&opts);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "name", "pass", "margin", "seconds", "budget_seconds", "detail"])
        .map_err(|e| CliError::Other(e.to_string()))?;
    for r in &summary.checks {
        eprintln!("[{}] {:>2} {} margin={:.3e} ({:.2}s)", if r.pass { "PASS" } else { "FAIL" }, r.id, r.name, r.margin, r.seconds);
        w.write_record([
            r.id.to_string(),
            r.name.clone(),
            r.pass.to_string(),
            format!("{:.17e}", r.margin),
            format!("{:.3}", r.seconds),
            r.budget_seconds.to_string(),
            r.detail.clone(),
        ])
        .map_err(|e| CliError::Other(e.to_string()))?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| CliError::Other(e.to_string()))?)
        .map_err(|e| CliError::Other(e.to_string()))?;
    out.write("checks.csv", &format!("# hypersurf-csv v1 checks\n{body}"))?;
    // Timings stay in checks.csv so that summary.json is reproducible.
    let mut v = serde_json::to_value(&summary).expect("serializable summary");
    for c in v["checks"].as_array_mut().expect("checks array") {
        c.as_object_mut().expect("check object").remove("seconds");
    }
    v["command"] = json!("verify-all");
    out.summary(v)?;
    let failed: Vec<String> = summary.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verdict(format!("checks failed: {}; see checks.csv", failed.join(", "))))
    }
}
