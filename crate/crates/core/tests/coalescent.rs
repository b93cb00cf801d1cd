use std::collections::BTreeMap;

use hcm_core::mcmw::{mcmw_graphical, mcmw_rank_one, MassWeightVector};
use hcm_core::rng::{replicate, stream_rng};
use hcm_core::{ExactMassWeights, Rational};
use num_bigint::BigInt;
use num_traits::Zero;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn exact_masses_and_weights_are_conserved() {
    let v = ExactMassWeights::new(
        vec![q(1, 3), q(2, 7), q(5, 11), q(1, 2), q(3, 5)],
        vec![q(1, 1), q(2, 3), q(4, 5), q(1, 9), q(7, 4)],
    )
    .unwrap();
    let total = v.mass.iter().fold(Rational::zero(), |a, m| a + m);
    for seed in 0..200 {
        let (masses, mut sys) = mcmw_graphical(&v, 1.3, &mut stream_rng(3, seed)).unwrap();
        sys.check_conservation().unwrap();
        assert_eq!(masses.iter().fold(Rational::zero(), |a, m| a + m), total);
        assert!(masses.windows(2).all(|w| w[0] >= w[1]));
    }
}

// Four blocks: merges in the graphical construction depend only on the
// pairwise probabilities, so enumerating the 2^6 edge patterns gives the law
// of the largest mass.
fn largest_mass_law(x: &[f64], y: &[f64], t: f64) -> BTreeMap<u64, f64> {
    let n = x.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut law = BTreeMap::new();
    for mask in 0u32..1 << pairs.len() {
        let mut prob = 1.0;
        let mut label: Vec<usize> = (0..n).collect();
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let p = 1.0 - (-y[i] * y[j] * t).exp();
            if mask >> k & 1 == 1 {
                prob *= p;
                let (from, to) = (label[j], label[i]);
                label.iter_mut().filter(|l| **l == from).for_each(|l| *l = to);
            } else {
                prob *= 1.0 - p;
            }
        }
        let mut blocks = vec![0u64; n];
        for v in 0..n {
            blocks[label[v]] += x[v] as u64;
        }
        *law.entry(*blocks.iter().max().unwrap()).or_insert(0.0) += prob;
    }
    law
}

#[test]
fn both_samplers_match_enumeration() {
    let x = [1.0, 2.0, 4.0, 8.0];
    let y = [1.2, 0.4, 0.9, 0.3];
    let t = 0.8;
    let law = largest_mass_law(&x, &y, t);
    let v = MassWeightVector::new(x.to_vec(), y.to_vec()).unwrap();
    let reps = 40_000;
    for (name, seed) in [("graphical", 21u64), ("rank_one", 22)] {
        let draws: Vec<u64> = replicate(seed, reps, |_, rng| {
            let m = if seed == 21 {
                mcmw_graphical(&v, t, rng).unwrap().0
            } else {
                mcmw_rank_one(&v, t, rng).unwrap().0
            };
            m[0] as u64
        });
        for (&value, &p) in &law {
            let c = draws.iter().filter(|&&d| d == value).count() as f64;
            let sd = (reps as f64 * p * (1.0 - p)).sqrt();
            assert!(
                (c - reps as f64 * p).abs() <= 4.0 * sd.max(1.0),
                "{name}: largest {value} seen {c}, expected {}",
                reps as f64 * p
            );
        }
    }
}
