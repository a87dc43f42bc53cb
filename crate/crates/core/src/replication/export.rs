use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use super::ExperimentReport;
use crate::error::{Error, Result};
use crate::json;
use crate::linalg::CMatrix;
use crate::qcore::BlochVector;

pub const FILE_BLOCH_IN: &str = "bloch_in.csv";
const META: &str = "meta.json";

fn bloch_csv(points: &[BlochVector]) -> String {
    let mut s = String::from("x,y,z\n");
    for p in points {
        let _ = writeln!(s, "{},{},{}", p.x, p.y, p.z);
    }
    s
}

fn matrix_map_value(m: &BTreeMap<String, CMatrix>) -> Value {
    Value::Object(
        m.iter()
            .map(|(k, v)| (k.clone(), json::matrix_to_value(v)))
            .collect::<Map<_, _>>(),
    )
}

/// Reads a `{label: matrix}` file as written for the basis outputs.
pub fn load_matrix_map(path: &Path) -> Result<BTreeMap<String, CMatrix>> {
    let v = json::read_value(path)?;
    let obj = v
        .as_object()
        .ok_or_else(|| Error::Format(format!("{} is not a JSON object", path.display())))?;
    obj.iter()
        .map(|(k, m)| Ok((k.clone(), json::matrix_from_value(m)?)))
        .collect()
}

fn files(report: &ExperimentReport) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (b, per) in &report.basis_outputs {
        out.insert(
            format!("rho_{}.json", b.label()),
            json::to_pretty(&matrix_map_value(per))?,
        );
    }
    for (label, m) in &report.chi {
        out.insert(
            format!("chi_{label}.json"),
            json::to_pretty(&json::matrix_to_value(m))?,
        );
    }
    for (label, m) in &report.choi {
        out.insert(
            format!("choi_{label}.json"),
            json::to_pretty(&json::matrix_to_value(m))?,
        );
    }
    if !report.bloch_in.is_empty() {
        out.insert(FILE_BLOCH_IN.into(), bloch_csv(&report.bloch_in));
    }
    for (label, pts) in &report.bloch_out {
        out.insert(format!("bloch_out_{label}.csv"), bloch_csv(pts));
    }
    let mut fid = String::from("metric,subject,input,value\n");
    for r in &report.fidelities {
        let _ = writeln!(fid, "{},{},{},{}", r.metric, r.subject, r.input, r.value);
    }
    out.insert("fidelities.csv".into(), fid);
    for (name, body) in &report.attachments {
        out.insert(name.clone(), body.clone());
    }
    let mut listed: Vec<String> = out.keys().cloned().collect();
    listed.push(META.into());
    listed.sort();
    let meta = json!({
        "experiment": report.experiment,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": report.seed,
        "sample_count": report.sample_count,
        "raw_matrices": report.raw_matrices,
        "bundle": {
            "names": report.bundle_names,
            "sha256": report.bundle_sha256,
            "max_unitarity_error": report.bundle_unitarity_error,
        },
        "tolerances": report.tolerances,
        "files": listed,
    });
    out.insert(META.into(), json::to_pretty(&meta)?);
    Ok(out)
}

/// Writes every artifact of `report` into `dir` and returns the paths
/// written, sorted. Identical reports produce identical bytes.
pub fn export_report(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (name, body) in files(report)? {
        let p = dir.join(name);
        fs::write(&p, body)?;
        written.push(p);
    }
    Ok(written)
}
