mod support;

use chrono::NaiveDate;
use ebts_core::copula::{Copula, EmpiricalMarginal, FittedCopula};
use ebts_core::scenario_gen::*;
use ebts_core::special::normal_quantile;
use ebts_core::weather_data::DayForecast;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::kmeans_oracle::{brute_force_min_sse, load_fixtures, partition_sse};

fn marginal(n: usize, scale: f64, shift: f64) -> EmpiricalMarginal {
    let xs: Vec<f64> = (1..=n).map(|i| shift + scale * normal_quantile(i as f64 / (n + 1) as f64)).collect();
    EmpiricalMarginal::fit(&xs).unwrap()
}

fn model(copula: Copula) -> FittedCopula {
    FittedCopula::from_copula(copula).unwrap().with_marginals(marginal(2001, 5.0, -8.0), marginal(2001, 5.5, -8.0))
}

fn forecast() -> DayForecast {
    let temps: Vec<f64> = (0..24).map(|h| -10.0 + 4.0 * ((h as f64 - 14.0) * std::f64::consts::PI / 12.0).cos()).collect();
    DayForecast::new(NaiveDate::from_ymd_opt(2021, 1, 15).unwrap(), &temps).unwrap()
}

fn clustered_points(seed: u64, centres: &[(f64, f64)], per: usize, radius: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::new();
    for &(cx, cy) in centres {
        for _ in 0..per {
            let a = rng.random_range(0.0..std::f64::consts::TAU);
            let r = radius * rng.random_range(0.0f64..1.0).sqrt();
            pts.push(vec![cx + r * a.cos(), cy + r * a.sin()]);
        }
    }
    pts
}

#[test]
fn kmeans_matches_exhaustive_search_on_fixtures() {
    let fixtures = load_fixtures(include_str!("../fixtures/kmeans_small.csv"));
    assert!(fixtures.len() >= 6);
    for fx in fixtures {
        let res = kmeans(&fx.points, fx.k, 1, DEFAULT_RESTARTS).unwrap();
        let oracle = brute_force_min_sse(&fx.points, fx.k);
        assert_eq!(partition_sse(&fx.points, &res.assignment, fx.k), oracle, "{}", fx.name);
        assert!(res.sse_trace.windows(2).all(|w| w[1] <= w[0]), "{}", fx.name);
    }
}

#[test]
fn kmeans_single_cluster_is_the_mean() {
    let pts: Vec<Vec<f64>> = vec![vec![1.0, 2.0], vec![3.0, -1.0], vec![5.0, 5.0], vec![-1.0, 0.0]];
    let res = kmeans(&pts, 1, 3, 4).unwrap();
    assert_eq!(res.centroids, vec![vec![2.0, 1.5]]);
}

#[test]
fn kmeans_with_k_equal_n_is_exact() {
    let pts: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64, (i * i) as f64]).collect();
    let res = kmeans(&pts, 7, 5, 3).unwrap();
    assert_eq!(res.mean_distance, 0.0);
    let mut labels = res.assignment.clone();
    labels.sort();
    assert_eq!(labels, (0..7).collect::<Vec<_>>());
    assert_eq!(kmeans(&pts, 8, 5, 3), Err(ScenarioError::KTooLarge { k: 8, n: 7 }));
}

#[test]
fn two_triples_give_their_means() {
    let pts: Vec<Vec<f64>> =
        [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (10.0, 10.0), (11.0, 10.0), (10.0, 11.0)].iter().map(|&(x, y)| vec![x, y]).collect();
    let res = kmeans(&pts, 2, 9, DEFAULT_RESTARTS).unwrap();
    let mut c = res.centroids.clone();
    c.sort_by(|a, b| a[0].total_cmp(&b[0]));
    assert!((c[0][0] - 1.0 / 3.0).abs() < 1e-15 && (c[0][1] - 1.0 / 3.0).abs() < 1e-15);
    assert!((c[1][0] - 31.0 / 3.0).abs() < 1e-12 && (c[1][1] - 31.0 / 3.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kmeans_is_monotone_and_a_fixed_point(
        pts in prop::collection::vec(prop::collection::vec(-20.0f64..20.0, 3), 4..60),
        k in 1usize..6,
        seed in 0u64..1000,
    ) {
        let k = k.min(pts.len());
        let res = kmeans(&pts, k, seed, 3).unwrap();
        prop_assert!(res.sse_trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-12));
        if res.iterations < MAX_LLOYD_ITERATIONS {
            // Reassigning to the returned centroids changes nothing.
            for (p, &l) in pts.iter().zip(&res.assignment) {
                let d = |c: &Vec<f64>| p.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                let own = d(&res.centroids[l]);
                for (j, c) in res.centroids.iter().enumerate() {
                    prop_assert!(d(c) > own || (d(c) == own && j >= l));
                }
            }
        }
    }
}

#[test]
fn elbow_finds_three_separated_clusters() {
    let mut hits = 0;
    for seed in 0..10 {
        let pts = clustered_points(seed, &[(0.0, 0.0), (40.0, 0.0), (20.0, 35.0)], 40, 1.0);
        let elbow = elbow_select(&pts, 1, 10, seed, DEFAULT_RESTARTS).unwrap();
        assert_eq!(elbow.curve.len(), 10);
        hits += usize::from(elbow.k_star == 3);
    }
    assert!(hits >= 9, "{hits}/10");
}

#[test]
fn elbow_needs_three_values() {
    let pts = clustered_points(0, &[(0.0, 0.0)], 10, 1.0);
    assert_eq!(elbow_select(&pts, 2, 3, 0, 2), Err(ScenarioError::RangeTooNarrow(2, 3)));
}

#[test]
fn scenario_probabilities_follow_cluster_shares() {
    let centroids = vec![vec![0.0; 24], vec![1.0; 24]];
    let mut assignment = vec![0; 100];
    assignment.extend(vec![1; 300]);
    let set = to_scenario_set(&centroids, &assignment, Weighting::Frequency).unwrap();
    assert_eq!(set.probabilities, vec![0.25, 0.75]);
    set.validate().unwrap();
    let eq = to_scenario_set(&centroids, &assignment, Weighting::EquiProbable).unwrap();
    assert_eq!(eq.probabilities, vec![0.5, 0.5]);

    let one = to_scenario_set(&centroids[..1], &[0, 0, 0], Weighting::Frequency).unwrap();
    assert_eq!(one.probabilities, vec![1.0]);
    let four: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64; 24]).collect();
    let uniform: Vec<usize> = (0..40).map(|i| i % 4).collect();
    assert_eq!(to_scenario_set(&four, &uniform, Weighting::Frequency).unwrap().probabilities, vec![0.25; 4]);
    assert_eq!(to_scenario_set(&four, &[0, 1, 3], Weighting::Frequency), Err(ScenarioError::EmptyCluster(2)));
}

#[test]
fn sampling_is_deterministic_per_seed() {
    let m = model(Copula::StudentT { rho: 0.9, nu: 5.0 });
    let a = sample_profiles(&m, &forecast(), 50, DEFAULT_AR_COEFFICIENT, 77).unwrap();
    let b = sample_profiles(&m, &forecast(), 50, DEFAULT_AR_COEFFICIENT, 77).unwrap();
    let c = sample_profiles(&m, &forecast(), 50, DEFAULT_AR_COEFFICIENT, 78).unwrap();
    let bytes = |p: &SamplePool| {
        let mut buf = Vec::new();
        write_sample_pool_csv(p, &mut buf).unwrap();
        buf
    };
    assert_eq!(bytes(&a), bytes(&b));
    assert_ne!(a, c);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let single = pool.install(|| sample_profiles(&m, &forecast(), 50, DEFAULT_AR_COEFFICIENT, 77).unwrap());
    assert_eq!(single, a);
}

#[test]
fn independent_samples_follow_the_actual_marginal() {
    let m = model(Copula::INDEPENDENCE);
    let pool = sample_profiles(&m, &forecast(), 250, 0.0, 5).unwrap();
    let mut all: Vec<f64> = pool.profiles.iter().flatten().copied().collect();
    assert!(all.len() >= 5000);
    all.sort_by(f64::total_cmp);
    let ma = m.marginal_actual.as_ref().unwrap();
    let n = all.len() as f64;
    let ks = all
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = ma.cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.05, "KS = {ks}");

    let single = sample_profiles(&m, &forecast(), 1, 0.0, 5).unwrap();
    assert_eq!(single.profiles.len(), 1);
}

#[test]
fn ar_paths_are_smoother_than_independent_ones() {
    let m = model(Copula::Gaussian { rho: 0.5 });
    let roughness = |ar: f64| {
        let pool = sample_profiles(&m, &forecast(), 200, ar, 3).unwrap();
        pool.profiles.iter().map(|p| p.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>()).sum::<f64>()
    };
    assert!(roughness(0.9) < 0.6 * roughness(0.0));
}

#[test]
fn csv_headers() {
    let set = ScenarioSet::singleton([1.5; 24]);
    let mut buf = Vec::new();
    write_scenarios_csv(&set, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("scenario,probability,h00,h01"));
    assert!(header.ends_with("h23"));
    assert!(lines.next().unwrap().starts_with("0,1,1.5,"));

    let elbow = ElbowCurve { k_star: 2, curve: vec![(1, 3.0), (2, 1.0), (3, 0.5)] };
    let mut buf = Vec::new();
    write_elbow_csv(&elbow, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "K,mean_distance\n1,3\n2,1\n3,0.5\n");
}
