//! Property suites over masks, distributions and information measures.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};

use pcg_mum::analysis::{apply_background, kl_uniform, shannon_entropy};
use pcg_mum::cvsim::{BinMask, OutcomeDistribution};

#[test]
fn masks_partition_random_points() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    for _ in 0..10 {
        let mask = BinMask::new(rng.gen_range(0.2..30.0), rng.gen_range(2..12), rng.gen_range(-15.0..15.0)).unwrap();
        for _ in 0..100_000 {
            let q: f64 = rng.gen_range(-500.0..500.0);
            let hits: u32 = (0..mask.bins()).map(|u| u32::from(mask.value(q, u))).sum();
            assert_eq!(hits, 1, "q = {q}, {mask:?}");
        }
    }
}

fn weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..10.0, 2..12).prop_filter("all zero", |w| w.iter().sum::<f64>() > 0.0)
}

proptest! {
    #[test]
    fn normalized_weights_are_distributions(w in weights()) {
        let p = OutcomeDistribution::from_weights(w).unwrap();
        prop_assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.probs().iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn kl_and_entropy_identity(w in weights()) {
        let p = OutcomeDistribution::from_weights(w).unwrap();
        let d = p.len() as f64;
        prop_assert!((kl_uniform(&p) - (d.log2() - shannon_entropy(&p))).abs() < 1e-12);
        prop_assert!(kl_uniform(&p) >= 0.0);
    }

    #[test]
    fn full_background_is_uniform(w in weights()) {
        let p = OutcomeDistribution::from_weights(w).unwrap();
        let u = apply_background(&p, 1.0).unwrap();
        prop_assert!((shannon_entropy(&u) - (p.len() as f64).log2()).abs() < 1e-12);
        prop_assert!(kl_uniform(&u) < 1e-12);
    }

    #[test]
    fn bad_distributions_rejected(w in weights(), scale in 1.01f64..3.0) {
        let total: f64 = w.iter().sum();
        let over: Vec<f64> = w.iter().map(|x| x / total * scale).collect();
        prop_assert!(OutcomeDistribution::new(over).is_err());
    }
}
