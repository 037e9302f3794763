//! Seeded random markets.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64(seed)`, so a seed
//! names the same instance on every platform.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Instance, PenaltySpec};

/// Draws a market with `n` students and `m` schools.
///
/// Preferences are uniform random orders (full length when `complete_prefs`,
/// otherwise truncated to a uniform length in `1..=m`). Every school starts
/// with one seat and the remaining `n − m` seats go to uniformly drawn
/// schools, one at a time. Schools order their applicants uniformly at random.
/// The result has budget 0 and access penalties.
pub fn generate_random(n: usize, m: usize, seed: u64, complete_prefs: bool) -> Result<Instance> {
    if m == 0 || n < m {
        return Err(Error::InvalidArgument(format!("need n >= m >= 1, got n={n}, m={m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut prefs = Vec::with_capacity(n);
    for _ in 0..n {
        let mut list: Vec<usize> = (0..m).collect();
        list.shuffle(&mut rng);
        if !complete_prefs {
            let len = rng.gen_range(1..=m);
            list.truncate(len);
        }
        prefs.push(list);
    }

    let mut capacities = vec![1usize; m];
    for _ in 0..(n - m) {
        capacities[rng.gen_range(0..m)] += 1;
    }

    let mut priorities: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (s, list) in prefs.iter().enumerate() {
        for &c in list {
            priorities[c].push(s);
        }
    }
    for list in priorities.iter_mut() {
        list.shuffle(&mut rng);
    }

    Instance::new(prefs, priorities, capacities, 0, PenaltySpec::Access, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_law() {
        let inst = generate_random(10, 3, 7, true).unwrap();
        assert_eq!(inst.capacities().iter().sum::<usize>(), 10);
        assert!(inst.capacities().iter().all(|&q| q >= 1));
    }

    #[test]
    fn complete_lists() {
        let inst = generate_random(1000, 10, 1, true).unwrap();
        assert!((0..1000).all(|s| inst.prefs(s).len() == 10));
    }

    #[test]
    fn deterministic_in_seed() {
        let a = generate_random(30, 4, 11, false).unwrap();
        let b = generate_random(30, 4, 11, false).unwrap();
        let c = generate_random(30, 4, 12, false).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_more_schools_than_students() {
        assert!(generate_random(2, 3, 0, true).is_err());
        assert!(generate_random(2, 0, 0, true).is_err());
    }
}
