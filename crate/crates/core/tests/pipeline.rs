use superkit::decomp::{self, DecompositionConfig};
use superkit::json;
use superkit::qcore::BasisState;
use superkit::replication::{self, load_matrix_map, ExperimentName, ExperimentSpec};
use superkit::superchan::GenExtremeSuperchannel;

#[test]
fn exported_experiment_reloads_exactly() {
    for name in [
        ExperimentName::Extreme,
        ExperimentName::Dephasing,
        ExperimentName::Decomposition,
    ] {
        let spec = ExperimentSpec {
            sample_count: 40,
            ..ExperimentSpec::new(name)
        };
        let report = replication::run(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        replication::export_report(&report, dir.path()).unwrap();
        for b in BasisState::ALL {
            let loaded =
                load_matrix_map(&dir.path().join(format!("rho_{}.json", b.label()))).unwrap();
            assert_eq!(loaded, report.basis_outputs[&b]);
        }
        for (label, chi) in &report.chi {
            let m = json::read_matrix(&dir.path().join(format!("chi_{label}.json"))).unwrap();
            assert_eq!(&m, chi, "{name}/{label}");
        }
        let fid = std::fs::read_to_string(dir.path().join("fidelities.csv")).unwrap();
        assert_eq!(fid.lines().count(), report.fidelities.len() + 1);
        let meta = json::read_value(&dir.path().join("meta.json")).unwrap();
        assert_eq!(meta["experiment"], name.as_str());
    }
}

#[test]
fn decomposition_survives_json() {
    let target = GenExtremeSuperchannel::random(11)
        .circuit_to_kraus()
        .unwrap()
        .to_choi();
    let cfg = DecompositionConfig {
        restarts: 2,
        max_iters: 400,
        ..Default::default()
    };
    let d = decomp::decompose(&target, 1, &cfg).unwrap();
    let text = json::to_pretty(&json::decomposition_to_value(&d)).unwrap();
    let back =
        json::decomposition_from_value(&serde_json::from_str(&text).unwrap(), &target).unwrap();
    assert_eq!(back.weights, d.weights);
    assert_eq!(back.achieved_distance, d.achieved_distance);
}

#[test]
fn qec_scan_and_grape_demo_attach_their_outputs() {
    let spec = ExperimentSpec {
        lambdas: Some("0:0.2:0.1".into()),
        ..ExperimentSpec::new(ExperimentName::QecScan)
    };
    let r = replication::run(&spec).unwrap();
    assert_eq!(r.attachments["qec_curve.csv"].lines().count(), 4);
    assert!(
        r.fidelity("entanglement_fidelity", "corrected", "lambda=0.1")
            .unwrap()
            > 0.98
    );

    let r = replication::run(&ExperimentSpec::new(ExperimentName::GrapeDemo)).unwrap();
    assert!(r.fidelity("gate_fidelity", "cnot_c1_c2", "pulse").unwrap() >= 0.995);
    let pulse =
        json::pulse_from_value(&serde_json::from_str(&r.attachments["pulse.json"]).unwrap())
            .unwrap();
    assert_eq!(pulse.n_slices, 100);
}
