use serde_json::Value;
use superkit_wasm::{bloch_clouds, choi_heatmaps, fidelity_curve};
use wasm_bindgen::JsError;

fn parse(s: Result<String, JsError>) -> Value {
    serde_json::from_str(&s.unwrap_or_else(|_| panic!("call failed"))).unwrap()
}

#[test]
fn clouds_have_one_point_per_sample() {
    let v = parse(bloch_clouds("extreme", 17, false));
    assert_eq!(v["input"].as_array().unwrap().len(), 17);
    assert_eq!(v["outputs"]["S_E"].as_array().unwrap().len(), 17);
    assert!(v["outputs"]["E"].is_array());
}

#[test]
fn heatmaps_are_four_by_four() {
    let v = parse(choi_heatmaps("dephasing", false));
    let abs = v["Sd_E"]["abs"].as_array().unwrap();
    assert_eq!(abs.len(), 4);
    let trace: f64 = (0..4)
        .map(|i| v["Sd_E"]["re"][i][i].as_f64().unwrap())
        .sum();
    assert!((trace - 1.0).abs() < 1e-9);
}

#[test]
fn curve_starts_at_one() {
    let v = parse(fidelity_curve("0:0.2:0.1", 1, 0));
    assert_eq!(v.as_array().unwrap().len(), 3);
    assert!((v[0]["corrected"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}
