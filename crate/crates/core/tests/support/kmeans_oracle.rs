//! Exhaustive K-partition search and the small shipped clustering fixtures.

use std::collections::BTreeMap;

/// Within-cluster sum of squares of a labelling, with cluster means as centres.
pub fn partition_sse(points: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
    let d = points[0].len();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for j in 0..d {
            sums[l][j] += p[j];
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        s.iter_mut().for_each(|x| *x /= c as f64);
    }
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| p.iter().zip(&sums[l]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .sum()
}

/// Minimum SSE over all labellings into exactly `k` non-empty clusters.
pub fn brute_force_min_sse(points: &[Vec<f64>], k: usize) -> f64 {
    let n = points.len();
    let mut best = f64::INFINITY;
    let mut labels = vec![0usize; n];
    let total = k.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let mut used = vec![false; k];
        for l in labels.iter_mut() {
            *l = c % k;
            used[*l] = true;
            c /= k;
        }
        if used.iter().all(|&u| u) {
            best = best.min(partition_sse(points, &labels, k));
        }
    }
    best
}

pub struct Fixture {
    pub name: String,
    pub k: usize,
    pub points: Vec<Vec<f64>>,
}

pub fn load_fixtures(text: &str) -> Vec<Fixture> {
    let mut by_name: BTreeMap<String, Fixture> = BTreeMap::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        let entry = by_name.entry(f[0].to_string()).or_insert_with(|| Fixture {
            name: f[0].to_string(),
            k: f[1].parse().unwrap(),
            points: Vec::new(),
        });
        entry.points.push(f[2..].iter().map(|x| x.parse().unwrap()).collect());
    }
    by_name.into_values().collect()
}
