use super::*;
use crate::decomp::ConvexDecomposition;
use crate::superchan::SuperchannelChoi;

fn spec(name: ExperimentName, samples: usize, raw: bool) -> ExperimentSpec {
    ExperimentSpec {
        sample_count: samples,
        raw_matrices: raw,
        ..ExperimentSpec::new(name)
    }
}

fn value(r: &ExperimentReport, metric: &str, subject: &str, input: &str) -> f64 {
    r.fidelity(metric, subject, input)
        .unwrap_or_else(|| panic!("missing {metric}/{subject}/{input}"))
}

#[test]
fn printed_matrices_are_nearly_unitary_and_project_cleanly() {
    for name in [
        ExperimentName::Extreme,
        ExperimentName::Dephasing,
        ExperimentName::Decomposition,
    ] {
        let b = MatrixBundle::printed(name);
        assert_eq!(b.names().len(), name.required().len());
        let raw = b.max_unitarity_error();
        assert!(raw > 1e-6 && raw <= PRINTED_UNITARY_TOL, "{name}: {raw}");
        let p = b.projected().unwrap();
        assert!(p.max_unitarity_error() <= PROJECTED_UNITARY_TOL);
        for (k, m) in b.iter() {
            // projection only moves entries at the printed precision
            assert!(
                linalg::max_abs_diff(m, p.get(k).unwrap()) < 1e-3,
                "{name}/{k}"
            );
        }
    }
}

#[test]
fn printed_extreme_v_gram_has_choi_trace_form() {
    let b = MatrixBundle::printed(ExperimentName::Extreme)
        .projected()
        .unwrap();
    let s = GenExtremeSuperchannel::new(b.get("V").unwrap().clone(), b.get("W").unwrap().clone())
        .unwrap();
    let k = s.circuit_to_kraus().unwrap();
    assert!(k.choi_trace_residual() < 1e-9);
    let off_identity = linalg::max_abs_diff(&k.gram(), &linalg::identity(4));
    assert!(
        off_identity > 1e-2,
        "gram unexpectedly identity: {off_identity}"
    );
}

#[test]
fn extreme_paths_agree_and_move_the_bloch_cloud() {
    for raw in [false, true] {
        let r = run_extreme(&spec(ExperimentName::Extreme, 200, raw)).unwrap();
        assert!(value(&r, "choi_path_max_abs_diff", "S_E", "choi") <= 1e-6);
        assert!(value(&r, "max_bloch_distance", "E_vs_S_E", "fibonacci") > 0.1);
        assert_eq!(r.bloch_out["S_E"].len(), 200);
        assert_eq!(r.choi.len(), 2);
    }
}

#[test]
fn extreme_report_matches_direct_computation() {
    let r = run_extreme(&spec(ExperimentName::Extreme, 10, false)).unwrap();
    let b = MatrixBundle::printed(ExperimentName::Extreme)
        .projected()
        .unwrap();
    let e = dilated_channel(b.get("U").unwrap(), false).unwrap();
    for bs in BasisState::ALL {
        let want = e.apply_matrix(bs.density().matrix());
        assert!(linalg::max_abs_diff(r.rho(bs, "E"), &want) < 1e-12);
    }
    assert!(e.tp_error() < 1e-12);
    assert!(linalg::max_abs_diff(&r.choi["E"], e.choi().unwrap().matrix()) < 1e-15);
}

#[test]
fn dephasing_keeps_choi_diagonal() {
    let r = run_dephasing(&spec(ExperimentName::Dephasing, 50, false)).unwrap();
    assert!(value(&r, "choi_diagonal_max_abs_diff", "Sd_E", "choi") <= 1e-9);
    assert!(value(&r, "choi_offdiagonal_max_growth", "Sd_E", "choi") <= 1e-9);
    let raw = run_dephasing(&spec(ExperimentName::Dephasing, 50, true)).unwrap();
    assert!(value(&raw, "choi_diagonal_max_abs_diff", "Sd_E", "choi") <= 1e-4);
}

#[test]
fn decomposition_gap_is_small_but_nonzero() {
    let r = run_decomposition(&spec(ExperimentName::Decomposition, 100, false)).unwrap();
    let gap = value(&r, "trace_distance", "Sg_vs_Sg_avg", "basis_max");
    assert!((gap - 0.004_449_704_8).abs() < 1e-6, "{gap}");
    assert!(gap <= 0.05);
    assert!(value(&r, "trace_distance", "Sg_vs_Sg_avg", "fibonacci_max") <= 0.05);
    assert!(value(&r, "process_fidelity", "Sg_vs_Sg_avg", "chi") > 0.99);
}

#[test]
fn register_channel_matches_gen_extreme_form() {
    let b = MatrixBundle::printed(ExperimentName::Decomposition)
        .projected()
        .unwrap();
    let u = b.get("U").unwrap();
    let input = KrausChannel::unitary(u.clone());
    for (v, w) in [("V1", "W1"), ("V2", "W2")] {
        let (vi, wi) = (b.get(v).unwrap(), b.get(w).unwrap());
        let circ = register_channel(&extreme_circuit(u, vi, wi).unwrap(), 3, 2).unwrap();
        let gen = extreme_as_gen_extreme(vi, wi, false)
            .unwrap()
            .output_channel(&input)
            .unwrap();
        let d = linalg::max_abs_diff(circ.choi().unwrap().matrix(), gen.choi().unwrap().matrix());
        assert!(d < 1e-12, "{v}: {d}");
    }
}

#[test]
fn degenerate_weights_reproduce_first_component() {
    let b = MatrixBundle::printed(ExperimentName::Decomposition)
        .projected()
        .unwrap();
    let g1 = extreme_as_gen_extreme(b.get("V1").unwrap(), b.get("W1").unwrap(), false).unwrap();
    let g2 = extreme_as_gen_extreme(b.get("V2").unwrap(), b.get("W2").unwrap(), false).unwrap();
    let c1 = g1.circuit_to_kraus().unwrap().to_choi();
    let d = ConvexDecomposition::new(vec![1.0, 0.0], vec![g1.clone(), g2.clone()], &c1).unwrap();
    assert!(d.achieved_distance < 1e-12);

    // reconstruction is linear in the weights
    let c2 = g2.circuit_to_kraus().unwrap().to_choi();
    let mix = ConvexDecomposition::new(vec![0.3, 0.7], vec![g1, g2], &c1)
        .unwrap()
        .reconstruct()
        .unwrap();
    let want = SuperchannelChoi::mixture(&[0.3, 0.7], &[c1, c2]).unwrap();
    assert!(linalg::max_abs_diff(mix.matrix(), want.matrix()) < 1e-13);
}

#[test]
fn register_channel_rejects_bad_shapes() {
    assert!(register_channel(&linalg::identity(4), 3, 0).is_err());
    assert!(register_channel(&linalg::identity(8), 3, 3).is_err());
    let ch = register_channel(&linalg::identity(8), 3, 1).unwrap();
    assert!(ch.tp_error() < 1e-15);
}

#[test]
fn overrides_are_shape_and_unitarity_checked() {
    let dir = tempfile::tempdir().unwrap();
    let small = dir.path().join("small.json");
    json::write_json(&small, &json::matrix_to_value(&linalg::identity(2))).unwrap();
    let mut s = ExperimentSpec::new(ExperimentName::Extreme);
    s.inputs.insert("V".into(), small.clone());
    assert!(matches!(
        MatrixBundle::for_spec(&s),
        Err(Error::DimensionMismatch(_))
    ));

    let bad = dir.path().join("bad.json");
    json::write_json(
        &bad,
        &json::matrix_to_value(&(linalg::identity(8) * c(1.1, 0.0))),
    )
    .unwrap();
    s.inputs.insert("V".into(), bad);
    assert!(matches!(
        MatrixBundle::for_spec(&s),
        Err(Error::Invariant(_))
    ));

    s.inputs.clear();
    s.inputs.insert("Q".into(), small);
    assert!(matches!(
        MatrixBundle::for_spec(&s),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn identity_override_changes_hash() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("v.json");
    json::write_json(&p, &json::matrix_to_value(&linalg::identity(8))).unwrap();
    let mut s = ExperimentSpec::new(ExperimentName::Extreme);
    let base = MatrixBundle::for_spec(&s).unwrap().sha256();
    assert_eq!(
        base,
        MatrixBundle::printed(ExperimentName::Extreme).sha256()
    );
    assert_eq!(base.len(), 64);
    s.inputs.insert("V".into(), p);
    assert_ne!(MatrixBundle::for_spec(&s).unwrap().sha256(), base);
}

#[test]
fn spec_file_resolves_relative_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("spec.json");
    std::fs::write(
        &p,
        r#"{"name": "extreme", "inputs": {"V": "v.json"}, "seed": 3}"#,
    )
    .unwrap();
    let s = ExperimentSpec::from_file(&p).unwrap();
    assert_eq!(s.name, ExperimentName::Extreme);
    assert_eq!(s.sample_count, DEFAULT_SAMPLES);
    assert_eq!(s.seed, 3);
    assert_eq!(s.inputs["V"], dir.path().join("v.json"));
    std::fs::write(&p, r#"{"name": "extreme", "bogus": 1}"#).unwrap();
    assert!(ExperimentSpec::from_file(&p).is_err());
}

#[test]
fn experiment_names_parse() {
    for n in ExperimentName::ALL {
        assert_eq!(n.as_str().parse::<ExperimentName>().unwrap(), n);
    }
    assert_eq!(
        "qec-scan".parse::<ExperimentName>().unwrap(),
        ExperimentName::QecScan
    );
    assert!("nope".parse::<ExperimentName>().is_err());
    let s = ExperimentSpec::new(ExperimentName::Dephasing);
    assert!(run_extreme(&s).is_err());
}

#[test]
fn export_is_byte_stable_and_round_trips() {
    let r = run_extreme(&spec(ExperimentName::Extreme, 25, false)).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let pa = export_report(&r, a.path()).unwrap();
    let pb = export_report(&r, b.path()).unwrap();
    assert_eq!(pa.len(), pb.len());
    for (x, y) in pa.iter().zip(&pb) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
    }
    let rho = load_matrix_map(&a.path().join("rho_x.json")).unwrap();
    assert_eq!(&rho["S_E"], r.rho(BasisState::X, "S_E"));
    let choi = json::read_matrix(&a.path().join("choi_S_E.json")).unwrap();
    assert_eq!(choi, r.choi["S_E"]);
    let csv = std::fs::read_to_string(a.path().join("bloch_out_S_E.csv")).unwrap();
    assert_eq!(csv.lines().count(), 26);
    let first: Vec<f64> = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|t| t.parse().unwrap())
        .collect();
    let p = r.bloch_out["S_E"][0];
    assert_eq!(first, vec![p.x, p.y, p.z]);
    let meta = json::read_value(&a.path().join("meta.json")).unwrap();
    assert_eq!(meta["bundle"]["sha256"], r.bundle_sha256.as_str());
    assert_eq!(meta["files"].as_array().unwrap().len(), pa.len());
}

#[test]
fn export_to_unwritable_path_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    std::fs::write(&file, "x").unwrap();
    let r = run_dephasing(&spec(ExperimentName::Dephasing, 5, false)).unwrap();
    assert!(matches!(
        export_report(&r, &file.join("sub")),
        Err(Error::Io(_))
    ));
}

#[test]
fn identity_dephasing_reproduces_input_channel() {
    let dir = tempfile::tempdir().unwrap();
    let id = dir.path().join("id.json");
    json::write_json(&id, &json::matrix_to_value(&linalg::identity(4))).unwrap();
    let mut s = ExperimentSpec::new(ExperimentName::Dephasing);
    for k in ["V1", "V2", "W1", "W2"] {
        s.inputs.insert(k.into(), id.clone());
    }
    let r = run_dephasing(&s).unwrap();
    assert!(linalg::max_abs_diff(&r.choi["E"], &r.choi["Sd_E"]) < 1e-14);
}

#[test]
fn every_output_is_a_density_matrix() {
    for name in [
        ExperimentName::Extreme,
        ExperimentName::Dephasing,
        ExperimentName::Decomposition,
    ] {
        let r = run(&spec(name, 20, false)).unwrap();
        for per in r.basis_outputs.values() {
            for (label, rho) in per {
                assert!((linalg::trace(rho).re - 1.0).abs() < 1e-9, "{name}/{label}");
                assert!(linalg::eigvalsh(rho)[0] > -1e-9, "{name}/{label}");
            }
        }
        for (label, choi) in &r.choi {
            crate::qcore::ChoiState::new(choi.clone())
                .unwrap_or_else(|e| panic!("{name}/{label}: {e}"));
        }
    }
}
