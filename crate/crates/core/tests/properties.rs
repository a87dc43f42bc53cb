use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use superkit::linalg;
use superkit::qcore::{random_channel, BasisState, KrausChannel};
use superkit::superchan::{GenExtremeSuperchannel, SuperchannelChoi};

fn channel(seed: u64, rank: usize) -> KrausChannel {
    random_channel(2, rank, &mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn superchannel_output_is_a_channel(s in any::<u64>(), e in any::<u64>(), rank in 1usize..=4) {
        let out = GenExtremeSuperchannel::random(s).output_channel(&channel(e, rank)).unwrap();
        prop_assert!(out.tp_error() < 1e-10);
        prop_assert!(out.choi().unwrap().marginal_error() < 1e-10);
    }

    #[test]
    fn choi_form_agrees_with_circuit_form(s in any::<u64>(), e in any::<u64>(), rank in 1usize..=4) {
        let sc = GenExtremeSuperchannel::random(s);
        let ch = channel(e, rank);
        let choi = SuperchannelChoi::new(sc.circuit_to_kraus().unwrap().to_choi().matrix().clone()).unwrap();
        let a = choi.apply_matrix(ch.choi().unwrap().matrix());
        let b = sc.output_channel(&ch).unwrap().choi().unwrap();
        prop_assert!(linalg::max_abs_diff(&a, b.matrix()) < 1e-10);
    }

    #[test]
    fn dephasing_construction_keeps_choi_diagonal(seed in any::<u64>(), e in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u: Vec<_> = (0..4).map(|_| linalg::haar_unitary(4, &mut rng)).collect();
        let sd = GenExtremeSuperchannel::dephasing(&u[0], &u[1], &u[2], &u[3]).unwrap();
        let ch = channel(e, 2);
        let before = ch.choi().unwrap();
        let after = sd.output_channel(&ch).unwrap().choi().unwrap();
        for k in 0..4 {
            prop_assert!((after.matrix()[(k, k)] - before.matrix()[(k, k)]).norm() < 1e-12);
        }
    }

    #[test]
    fn kraus_choi_chi_round_trips(e in any::<u64>(), rank in 1usize..=4) {
        let ch = channel(e, rank);
        let choi = ch.choi().unwrap();
        let via_kraus = choi.to_kraus().unwrap();
        let via_chi = choi.to_chi().unwrap().to_choi();
        prop_assert!(linalg::max_abs_diff(choi.matrix(), via_kraus.choi().unwrap().matrix()) < 1e-10);
        prop_assert!(linalg::max_abs_diff(choi.matrix(), via_chi.matrix()) < 1e-12);
        prop_assert!(via_kraus.kraus().len() <= rank);
        for b in BasisState::ALL {
            let rho = b.density();
            prop_assert!(linalg::max_abs_diff(&ch.apply_matrix(rho.matrix()), &choi.apply_matrix(rho.matrix())) < 1e-12);
        }
    }
}
