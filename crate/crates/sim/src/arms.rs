use rand::seq::SliceRandom;
use rand::Rng;
use safetynet_core::Arm;

/// Clinic-stratified block randomisation with block size 2 and 1:1 allocation.
/// Returns one arm per input position, in input order.
pub fn assign_arms<R: Rng>(clinic_sizes: &[usize], rng: &mut R) -> Vec<Vec<Arm>> {
    clinic_sizes
        .iter()
        .map(|&n| {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            let mut arms = vec![Arm::NonAi; n];
            for block in order.chunks(2) {
                if let [a, b] = block {
                    let first = if rng.random_bool(0.5) { Arm::Ai } else { Arm::NonAi };
                    arms[*a] = first;
                    arms[*b] = other(first);
                } else {
                    arms[block[0]] = if rng.random_bool(0.5) { Arm::Ai } else { Arm::NonAi };
                }
            }
            arms
        })
        .collect()
}

fn other(a: Arm) -> Arm {
    match a {
        Arm::Ai => Arm::NonAi,
        Arm::NonAi => Arm::Ai,
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn ai_count(arms: &[Arm]) -> usize {
        arms.iter().filter(|&&a| a == Arm::Ai).count()
    }

    #[test]
    fn even_clinics_split_exactly() {
        for seed in 0..50 {
            let arms = assign_arms(&[10, 4, 2], &mut ChaCha8Rng::seed_from_u64(seed));
            assert_eq!(arms.iter().map(|a| ai_count(a)).collect::<Vec<_>>(), vec![5, 2, 1]);
        }
    }

    #[test]
    fn odd_clinics_differ_by_one() {
        let mut seen = [false; 2];
        for seed in 0..50 {
            let k = ai_count(&assign_arms(&[5], &mut ChaCha8Rng::seed_from_u64(seed))[0]);
            assert!(k == 2 || k == 3);
            seen[k - 2] = true;
        }
        assert_eq!(seen, [true, true]);
    }
}
