use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(centers: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    centers
        .iter()
        .map(|c| sq_dist(c, x))
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, d)| if d < best.1 { (i, d) } else { best })
}

/// Lloyd's k-means with k-means++ seeding. Returns one label in `[0, k)` per
/// sample. A cluster that empties is re-seeded from the sample farthest from
/// its current center.
pub fn kmeans_label(samples: &[Vec<f64>], k: usize, seed: u64, max_iters: usize) -> Result<Vec<usize>> {
    if samples.is_empty() {
        return Err(Error::Empty("k-means samples"));
    }
    if k == 0 {
        return Err(Error::InvalidParams("k must be positive".into()));
    }
    if k == 1 {
        return Ok(vec![0; samples.len()]);
    }
    let dim = samples[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut centers = vec![samples[rng.random_range(0..samples.len())].clone()];
    let mut d2: Vec<f64> = samples.iter().map(|x| sq_dist(x, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            d2.iter()
                .position(|&w| {
                    target -= w;
                    target < 0.0
                })
                .unwrap_or(samples.len() - 1)
        } else {
            rng.random_range(0..samples.len())
        };
        centers.push(samples[pick].clone());
        for (d, x) in d2.iter_mut().zip(samples) {
            *d = d.min(sq_dist(x, &centers[centers.len() - 1]));
        }
    }

    let mut labels = vec![usize::MAX; samples.len()];
    for _ in 0..max_iters.max(1) {
        let mut changed = false;
        for (l, x) in labels.iter_mut().zip(samples) {
            let (c, _) = nearest(&centers, x);
            if *l != c {
                *l = c;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&l, x) in labels.iter().zip(samples) {
            counts[l] += 1;
            sums[l].iter_mut().zip(x).for_each(|(s, v)| *s += v);
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = samples
                    .iter()
                    .enumerate()
                    .map(|(i, x)| (i, nearest(&centers, x).1))
                    .fold((0, -1.0), |best, (i, d)| if d > best.1 { (i, d) } else { best })
                    .0;
                centers[c] = samples[far].clone();
                labels[far] = c;
                changed = true;
            } else {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        if !changed {
            break;
        }
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs_1d(seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::new();
        let mut truth = Vec::new();
        for i in 0..60 {
            let c = i % 2;
            xs.push(vec![c as f64 * 100.0 + rng.random_range(-3.0..3.0)]);
            truth.push(c);
        }
        (xs, truth)
    }

    /// Best 2-partition of 1-D points by exhaustive scan over sorted split points.
    fn best_split(xs: &[Vec<f64>]) -> Vec<usize> {
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&a, &b| xs[a][0].total_cmp(&xs[b][0]));
        let sse = |idx: &[usize]| {
            let m = idx.iter().map(|&i| xs[i][0]).sum::<f64>() / idx.len() as f64;
            idx.iter().map(|&i| (xs[i][0] - m).powi(2)).sum::<f64>()
        };
        let mut best = (f64::INFINITY, 1);
        for cut in 1..order.len() {
            let cost = sse(&order[..cut]) + sse(&order[cut..]);
            if cost < best.0 {
                best = (cost, cut);
            }
        }
        let mut labels = vec![0; xs.len()];
        for &i in &order[best.1..] {
            labels[i] = 1;
        }
        labels
    }

    fn same_partition(a: &[usize], b: &[usize]) -> bool {
        a.iter().zip(b).all(|(x, y)| x == y) || a.iter().zip(b).all(|(x, y)| *x == 1 - *y)
    }

    #[test]
    fn single_cluster_all_zero() {
        let xs = vec![vec![1.0], vec![2.0], vec![3.0]];
        assert_eq!(kmeans_label(&xs, 1, 0, 10).unwrap(), vec![0, 0, 0]);
    }

    #[test]
    fn recovers_separated_blobs() {
        for seed in 0..5 {
            let (xs, truth) = blobs_1d(seed);
            let labels = kmeans_label(&xs, 2, seed, 50).unwrap();
            assert!(same_partition(&labels, &best_split(&xs)));
            assert!(same_partition(&labels, &truth));
        }
    }

    #[test]
    fn agrees_with_naive_lloyd_up_to_relabeling() {
        // plain Lloyd from the two extreme points
        let (xs, _) = blobs_1d(9);
        let lo = xs.iter().map(|x| x[0]).fold(f64::INFINITY, f64::min);
        let hi = xs.iter().map(|x| x[0]).fold(f64::NEG_INFINITY, f64::max);
        let mut c = [lo, hi];
        let mut naive = vec![0; xs.len()];
        for _ in 0..20 {
            for (l, x) in naive.iter_mut().zip(&xs) {
                *l = usize::from((x[0] - c[1]).abs() < (x[0] - c[0]).abs());
            }
            for k in 0..2 {
                let m: Vec<f64> = xs.iter().zip(&naive).filter(|(_, &l)| l == k).map(|(x, _)| x[0]).collect();
                c[k] = m.iter().sum::<f64>() / m.len() as f64;
            }
        }
        let labels = kmeans_label(&xs, 2, 3, 50).unwrap();
        assert!(same_partition(&labels, &naive));
    }

    #[test]
    fn deterministic_and_in_range() {
        let xs: Vec<Vec<f64>> = (0..50).map(|i| vec![(i * 37 % 11) as f64, (i % 7) as f64]).collect();
        let a = kmeans_label(&xs, 4, 12, 30).unwrap();
        assert_eq!(a, kmeans_label(&xs, 4, 12, 30).unwrap());
        assert!(a.iter().all(|&l| l < 4));
    }

    #[test]
    fn duplicate_points_do_not_leave_empty_labels() {
        let xs = vec![vec![1.0]; 5];
        let labels = kmeans_label(&xs, 3, 1, 10).unwrap();
        assert!(labels.iter().all(|&l| l < 3));
    }

    #[test]
    fn rejects_empty_and_zero_k() {
        assert!(kmeans_label(&[], 2, 0, 10).is_err());
        assert!(kmeans_label(&[vec![1.0]], 0, 0, 10).is_err());
    }
}
