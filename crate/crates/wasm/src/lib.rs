//! Browser bindings for the demo page in `www/`. Every function returns a
//! JSON string so the page needs no generated type glue.

use serde_json::{json, Map, Value};
use superkit::linalg::CMatrix;
use superkit::qec::{self, QecConfig};
use superkit::replication::{self, ExperimentName, ExperimentReport, ExperimentSpec};
use wasm_bindgen::prelude::*;

fn js(e: superkit::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn report(experiment: &str, samples: usize, raw: bool) -> Result<ExperimentReport, JsError> {
    let name: ExperimentName = experiment.parse().map_err(js)?;
    if matches!(name, ExperimentName::QecScan | ExperimentName::GrapeDemo) {
        return Err(JsError::new(
            "only extreme, dephasing and decomposition have channel outputs",
        ));
    }
    let spec = ExperimentSpec {
        sample_count: samples.max(1),
        raw_matrices: raw,
        ..ExperimentSpec::new(name)
    };
    replication::run(&spec).map_err(js)
}

fn points(v: &[superkit::qcore::BlochVector]) -> Value {
    v.iter().map(|p| json!([p.x, p.y, p.z])).collect()
}

fn grid(m: &CMatrix, f: impl Fn(num_complex::Complex64) -> f64) -> Value {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| f(m[(r, c)])).collect::<Vec<_>>())
        .collect()
}

/// Input Bloch sample and its image under every channel of the experiment:
/// `{"input": [[x,y,z],...], "outputs": {label: [[x,y,z],...]}}`.
#[wasm_bindgen]
pub fn bloch_clouds(experiment: &str, samples: usize, raw: bool) -> Result<String, JsError> {
    let r = report(experiment, samples, raw)?;
    let outputs: Map<String, Value> = r
        .bloch_out
        .iter()
        .map(|(k, v)| (k.clone(), points(v)))
        .collect();
    Ok(json!({ "input": points(&r.bloch_in), "outputs": outputs }).to_string())
}

/// Choi matrices of every channel in the experiment as real, imaginary and
/// modulus grids: `{label: {"re": [[..]], "im": [[..]], "abs": [[..]]}}`.
#[wasm_bindgen]
pub fn choi_heatmaps(experiment: &str, raw: bool) -> Result<String, JsError> {
    let r = report(experiment, 1, raw)?;
    let maps: Map<String, Value> = r
        .choi
        .iter()
        .map(|(k, m)| {
            let v = json!({ "re": grid(m, |z| z.re), "im": grid(m, |z| z.im), "abs": grid(m, |z| z.norm()) });
            (k.clone(), v)
        })
        .collect();
    Ok(Value::Object(maps).to_string())
}

/// Corrected and bare entanglement fidelity over `start:stop:step`:
/// `[{"lambda", "corrected", "uncorrected"}, ...]`.
#[wasm_bindgen]
pub fn fidelity_curve(lambdas: &str, restarts: usize, seed: u64) -> Result<String, JsError> {
    let grid = qec::parse_lambda_range(lambdas).map_err(js)?;
    let cfg = QecConfig {
        restarts,
        seed,
        ..Default::default()
    };
    let curve = qec::fidelity_curve(&grid, &cfg).map_err(js)?;
    let rows: Vec<Value> = curve
        .iter()
        .map(|p| json!({ "lambda": p.lambda, "corrected": p.corrected, "uncorrected": p.uncorrected }))
        .collect();
    Ok(Value::Array(rows).to_string())
}
