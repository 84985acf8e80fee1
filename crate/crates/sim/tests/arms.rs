use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use safetynet_core::Arm;
use safetynet_sim::assign_arms;

proptest! {
    #[test]
    fn clinic_arms_differ_by_at_most_one(sizes in prop::collection::vec(0usize..30, 1..20), seed in any::<u64>()) {
        let arms = assign_arms(&sizes, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(arms.len(), sizes.len());
        for (clinic, &n) in arms.iter().zip(&sizes) {
            prop_assert_eq!(clinic.len(), n);
            let ai = clinic.iter().filter(|&&a| a == Arm::Ai).count();
            prop_assert!(ai.abs_diff(n - ai) <= 1);
        }
    }
}
