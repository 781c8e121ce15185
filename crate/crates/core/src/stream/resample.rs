//! Class rebalancing by random under/oversampling of the top-k classes.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::StreamError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResampleMode {
    Undersample,
    Oversample,
}

/// Return the indices of the resampled set.
///
/// Undersample: each of the `top_k` most frequent classes is reduced (by
/// seeded sampling without replacement) to the mean count of the remaining
/// classes; output preserves the original order. Oversample: each non-top
/// class is raised to the mean count of the top-k classes by appending
/// duplicates drawn with replacement. No class ever crosses its own count in
/// the shrinking (undersample) or growing (oversample) direction.
pub fn resample_indices(
    labels: &[u32],
    mode: ResampleMode,
    top_k: usize,
    seed: u64,
) -> Result<Vec<usize>, StreamError> {
    let mut by_class: std::collections::BTreeMap<u32, Vec<usize>> = Default::default();
    for (i, &c) in labels.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    let n_classes = by_class.len();
    if top_k >= n_classes {
        return Err(StreamError::BadTopK { top_k, classes: n_classes });
    }
    // classes by descending count, ties broken by class id
    let mut ranked: Vec<(u32, usize)> = by_class.iter().map(|(&c, v)| (c, v.len())).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let top: std::collections::BTreeSet<u32> = ranked[..top_k].iter().map(|&(c, _)| c).collect();

    let mean_of = |classes: &[(u32, usize)]| -> usize {
        let total: usize = classes.iter().map(|&(_, n)| n).sum();
        ((total as f64 / classes.len() as f64).round()) as usize
    };

    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x4e5a_301eu64);
    match mode {
        ResampleMode::Undersample => {
            let target = mean_of(&ranked[top_k..]);
            let mut keep = vec![true; labels.len()];
            for (&class, idxs) in &by_class {
                if !top.contains(&class) || idxs.len() <= target {
                    continue;
                }
                let mut shuffled = idxs.clone();
                shuffled.shuffle(&mut rng);
                for &drop in &shuffled[target..] {
                    keep[drop] = false;
                }
            }
            Ok((0..labels.len()).filter(|&i| keep[i]).collect())
        }
        ResampleMode::Oversample => {
            let target = mean_of(&ranked[..top_k]);
            let mut out: Vec<usize> = (0..labels.len()).collect();
            for (&class, idxs) in &by_class {
                if top.contains(&class) || idxs.len() >= target {
                    continue;
                }
                for _ in 0..target - idxs.len() {
                    out.push(idxs[rng.gen_range(0..idxs.len())]);
                }
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(counts: &[(u32, usize)]) -> Vec<u32> {
        counts.iter().flat_map(|&(c, n)| std::iter::repeat(c).take(n)).collect()
    }

    fn class_counts(labels: &[u32], idxs: &[usize]) -> std::collections::BTreeMap<u32, usize> {
        let mut m = std::collections::BTreeMap::new();
        for &i in idxs {
            *m.entry(labels[i]).or_insert(0) += 1;
        }
        m
    }

    #[test]
    fn undersample_worked_example() {
        // counts {A:100, B:10, C:14}, undersample top_1 -> A:12, B:10, C:14
        let l = labels(&[(0, 100), (1, 10), (2, 14)]);
        let idxs = resample_indices(&l, ResampleMode::Undersample, 1, 9).unwrap();
        let c = class_counts(&l, &idxs);
        assert_eq!(c[&0], 12);
        assert_eq!(c[&1], 10);
        assert_eq!(c[&2], 14);
    }

    #[test]
    fn oversample_worked_example() {
        // counts {A:100, B:10, C:14}, oversample top_1 -> everyone at 100
        let l = labels(&[(0, 100), (1, 10), (2, 14)]);
        let idxs = resample_indices(&l, ResampleMode::Oversample, 1, 9).unwrap();
        let c = class_counts(&l, &idxs);
        assert_eq!(c[&0], 100);
        assert_eq!(c[&1], 100);
        assert_eq!(c[&2], 100);
    }

    #[test]
    fn balanced_input_is_unchanged() {
        let l = labels(&[(0, 10), (1, 10), (2, 10)]);
        for mode in [ResampleMode::Undersample, ResampleMode::Oversample] {
            let idxs = resample_indices(&l, mode, 1, 5).unwrap();
            assert_eq!(idxs, (0..30).collect::<Vec<_>>());
        }
    }

    #[test]
    fn monotonicity_and_determinism() {
        let l = labels(&[(0, 50), (1, 20), (2, 7), (3, 3)]);
        let before = class_counts(&l, &(0..l.len()).collect::<Vec<_>>());
        let under = resample_indices(&l, ResampleMode::Undersample, 2, 11).unwrap();
        for (&c, &n) in &class_counts(&l, &under) {
            assert!(n <= before[&c], "undersample grew class {c}");
        }
        let over = resample_indices(&l, ResampleMode::Oversample, 2, 11).unwrap();
        for (&c, &n) in &class_counts(&l, &over) {
            assert!(n >= before[&c], "oversample shrank class {c}");
        }
        assert_eq!(under, resample_indices(&l, ResampleMode::Undersample, 2, 11).unwrap());
        assert_eq!(over, resample_indices(&l, ResampleMode::Oversample, 2, 11).unwrap());
    }

    #[test]
    fn top_k_must_leave_a_reference_class() {
        let l = labels(&[(0, 5), (1, 5)]);
        assert!(resample_indices(&l, ResampleMode::Undersample, 2, 0).is_err());
    }
}
