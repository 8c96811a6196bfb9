//! CSV, JSON and OBJ artifacts. CSV tables start with a `# hypersurf-csv v1
//! <table>` comment line; columns are fixed per table.

use std::fmt::Write as _;

use serde_json::Value;

use crate::deform::HomotopyReport;
use crate::error::{GeometryError, Result};
use crate::gauss::SphereMap;
use crate::immersion::{CurvatureSample, Immersion};
use crate::mesh::SphereMesh;
use crate::model::ModelKind;

pub const CSV_VERSION: &str = "v1";

/// Resolution to which floats are rounded in JSON summaries.
pub const JSON_ROUNDING: f64 = 1e-9;

fn csv_err(e: impl std::fmt::Display) -> GeometryError {
    GeometryError::Other(format!("csv: {e}"))
}

fn table(name: &str, header: Vec<String>, rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(csv_err)?).map_err(csv_err)?;
    Ok(format!("# hypersurf-csv {CSV_VERSION} {name}\n{body}"))
}

fn num(x: f64) -> String {
    format!("{x:.17e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| format!("{prefix}{i}"))
}

/// One row per sample: vertex, chart, chart coordinates, principal
/// curvatures (ascending) and their product.
pub fn curvature_csv(samples: &[CurvatureSample]) -> Result<String> {
    let n = samples.first().map_or(0, |s| s.lambdas.len());
    let mut header = vec!["vertex".to_string(), "chart".to_string()];
    header.extend(indexed("x", n));
    header.extend((1..=n).map(|i| format!("lambda{i}")));
    header.push("gaussian".into());
    let rows = samples
        .iter()
        .map(|s| {
            let mut r = vec![s.vertex.to_string(), s.at.chart.name().to_string()];
            r.extend(s.at.x.iter().map(|&v| num(v)));
            r.extend(s.lambdas.iter().map(|&v| num(v)));
            r.push(num(s.gaussian));
            r
        })
        .collect();
    table("curvature", header, rows)
}

/// One row per mesh vertex: source point, image point and `det J` when
/// Jacobians were sampled.
pub fn sphere_map_csv(map: &SphereMap, mesh: &SphereMesh) -> Result<String> {
    if map.values.len() != mesh.len() {
        return Err(GeometryError::Dimension {
            expected: mesh.len(),
            got: map.values.len(),
        });
    }
    let m = mesh.dim() + 1;
    let mut header = vec!["vertex".to_string(), "weight".to_string()];
    header.extend(indexed("q", m));
    header.extend(indexed("image", m));
    header.push("det".into());
    header.push("certified".into());
    let rows = mesh
        .vertices()
        .iter()
        .zip(mesh.weights())
        .zip(&map.values)
        .enumerate()
        .map(|(i, ((q, w), v))| {
            let mut r = vec![i.to_string(), num(*w)];
            r.extend(q.iter().map(|&x| num(x)));
            r.extend(v.iter().map(|&x| num(x)));
            match map.jacobians.as_ref().map(|js| &js[i]) {
                Some(j) => {
                    r.push(num(j.det));
                    r.push(j.certified.to_string());
                }
                None => {
                    r.push(String::new());
                    r.push(String::new());
                }
            }
            r
        })
        .collect();
    table("sphere-map", header, rows)
}

/// One row per tracked step, sorted by `s`.
pub fn homotopy_csv(report: &HomotopyReport) -> Result<String> {
    let header = [
        "s",
        "lambda_min",
        "lambda_max",
        "interval_margin",
        "immersivity",
        "drift",
        "formula_residual",
        "inside",
        "pass",
        "refined",
        "error",
    ]
    .map(String::from)
    .to_vec();
    let rows = report
        .rows
        .iter()
        .map(|r| {
            vec![
                num(r.s),
                num(r.lambda_min),
                num(r.lambda_max),
                num(r.interval_margin),
                num(r.immersivity),
                opt(r.drift),
                opt(r.formula_residual),
                r.inside.to_string(),
                r.pass.to_string(),
                r.refined.to_string(),
                r.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    table("homotopy", header, rows)
}

/// JSON summary of a tracked path without the per-step rows.
pub fn homotopy_summary(report: &HomotopyReport) -> Value {
    let (lo, hi) = report.lambda_range();
    serde_json::json!({
        "kind": report.kind,
        "label": report.label,
        "interval": report.interval,
        "mesh_level": report.mesh_level,
        "tau": report.tau,
        "steps": report.rows.len(),
        "refined_steps": report.rows.iter().filter(|r| r.refined).count(),
        "lambda_min": lo,
        "lambda_max": hi,
        "min_interval_margin": report.rows.iter().map(|r| r.interval_margin).fold(f64::INFINITY, f64::min),
        "min_immersivity": report.min_immersivity(),
        "max_drift": report.max_drift(),
        "max_formula_residual": report.max_formula_residual(),
        "first_failure_s": report.first_failure.map(|i| report.rows[i].s),
        "pass": report.pass,
    })
}

/// Round every float in a JSON value to `JSON_ROUNDING` so that repeated
/// runs serialize identically. Non-finite numbers become `null`.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("checked f64");
            let r = (x / JSON_ROUNDING).round() * JSON_ROUNDING;
            // Printing through `{:.9}` drops the binary noise of the product.
            let r: f64 = format!("{r:.9}").parse().expect("formatted float");
            serde_json::Number::from_f64(if r == 0.0 { 0.0 } else { r })
                .map(Value::Number)
                .unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Wavefront OBJ of an immersed icosphere. Hyperboloid points are written in
/// ball coordinates. Scalar attributes go into `# va` comment lines, one per
/// vertex, after a `# vertex-attributes` line naming the columns.
pub fn obj(f: &dyn Immersion, mesh: &SphereMesh, attributes: &[(&str, Vec<f64>)]) -> Result<String> {
    if mesh.dim() != 2 || mesh.faces().is_empty() {
        return Err(GeometryError::Dimension {
            expected: 2,
            got: mesh.dim(),
        });
    }
    for (name, vals) in attributes {
        if vals.len() != mesh.len() {
            return Err(GeometryError::Other(format!(
                "attribute {name} has {} values for {} vertices",
                vals.len(),
                mesh.len()
            )));
        }
    }
    let model = f.model();
    let mut out = format!("# hypersurf-obj {CSV_VERSION}\n# {}\n# model {}\n", f.label(), model);
    for q in mesh.vertices() {
        let mut p = f.eval(&crate::chart::ChartPoint::from_sphere(q))?;
        if model.kind() == ModelKind::Hyperboloid {
            p = model.convert(&p, &model.with_kind(ModelKind::Ball)?)?;
        }
        writeln!(out, "v {} {} {}", p[0], p[1], p[2]).expect("string write");
    }
    for t in mesh.faces() {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).expect("string write");
    }
    if !attributes.is_empty() {
        let names: Vec<&str> = attributes.iter().map(|(n, _)| *n).collect();
        writeln!(out, "# vertex-attributes {}", names.join(" ")).expect("string write");
        for i in 0..mesh.len() {
            let vals: Vec<String> = attributes.iter().map(|(_, v)| v[i].to_string()).collect();
            writeln!(out, "# va {} {}", i + 1, vals.join(" ")).expect("string write");
        }
    }
    Ok(out)
}
