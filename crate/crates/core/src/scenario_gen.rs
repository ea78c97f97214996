//! Temperature scenario generation: conditional sampling of day profiles and
//! reduction to a weighted scenario set by K-means.

use std::io::Write;

use chrono::Timelike;
use rand::seq::index::sample as sample_indices;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::copula::{CopulaError, FittedCopula};
use crate::seed::{child_seed, rng};
use crate::special::normal_cdf;
use crate::weather_data::{DayForecast, PairedSeries, HOURS_PER_DAY};

pub type Profile = [f64; HOURS_PER_DAY];

pub const DEFAULT_AR_COEFFICIENT: f64 = 0.9;
pub const DEFAULT_RESTARTS: usize = 10;
pub const MAX_LLOYD_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Copula(#[from] CopulaError),
    #[error("K = {k} exceeds the {n} available points")]
    KTooLarge { k: usize, n: usize },
    #[error("K range needs at least three values, got [{0}, {1}]")]
    RangeTooNarrow(usize, usize),
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("CSV error: {0}")]
    Csv(String),
}

/// Source of conditional draws of the actual temperature at a given hour.
pub trait ConditionalModel: Sync {
    fn sample_actual(&self, hour: usize, forecast_c: f64, w: f64) -> Result<f64, CopulaError>;
}

impl ConditionalModel for FittedCopula {
    fn sample_actual(&self, _hour: usize, forecast_c: f64, w: f64) -> Result<f64, CopulaError> {
        self.sample_conditional(forecast_c, w)
    }
}

/// One copula per hour of day instead of a single pooled model.
#[derive(Clone, Debug, PartialEq)]
pub struct PerHourModel {
    pub models: Vec<FittedCopula>,
}

impl PerHourModel {
    pub fn fit(series: &PairedSeries) -> Result<Self, CopulaError> {
        let models = (0..HOURS_PER_DAY)
            .into_par_iter()
            .map(|h| {
                let pairs: Vec<(f64, f64)> = series
                    .observations
                    .iter()
                    .filter(|o| o.timestamp.hour() as usize == h)
                    .map(|o| (o.forecast_c, o.actual_c))
                    .collect();
                crate::copula::fit_paired(&pairs)
            })
            .collect::<Result<_, _>>()?;
        Ok(PerHourModel { models })
    }
}

impl ConditionalModel for PerHourModel {
    fn sample_actual(&self, hour: usize, forecast_c: f64, w: f64) -> Result<f64, CopulaError> {
        self.models[hour].sample_conditional(forecast_c, w)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplePool {
    pub profiles: Vec<Profile>,
    pub rng_seed: u64,
}

/// Draws `n_samples` actual-temperature profiles conditioned on `forecast`.
///
/// Hourly uniforms come from a stationary Gaussian AR(1) path with coefficient
/// `ar_coefficient` mapped through the normal CDF. Sample `i` uses its own
/// stream `child_seed(seed, i)`, so results do not depend on thread count.
pub fn sample_profiles<M: ConditionalModel + ?Sized>(
    model: &M,
    forecast: &DayForecast,
    n_samples: usize,
    ar_coefficient: f64,
    seed: u64,
) -> Result<SamplePool, ScenarioError> {
    if n_samples == 0 {
        return Err(ScenarioError::InvalidInput("n_samples must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&ar_coefficient) {
        return Err(ScenarioError::InvalidInput(format!("AR coefficient {ar_coefficient} outside [0, 1)")));
    }
    let innovation = (1.0 - ar_coefficient * ar_coefficient).sqrt();
    let profiles = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut r = rng(child_seed(seed, i as u64));
            let mut z: f64 = StandardNormal.sample(&mut r);
            let mut profile = [0.0; HOURS_PER_DAY];
            for (h, slot) in profile.iter_mut().enumerate() {
                if h > 0 {
                    let e: f64 = StandardNormal.sample(&mut r);
                    z = ar_coefficient * z + innovation * e;
                }
                let w = normal_cdf(z).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
                *slot = model.sample_actual(h, forecast.temps_c[h], w)?;
            }
            Ok(profile)
        })
        .collect::<Result<Vec<_>, CopulaError>>()?;
    Ok(SamplePool { profiles, rng_seed: seed })
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansResult {
    pub centroids: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    /// Average Euclidean distance from each point to its centroid.
    pub mean_distance: f64,
    /// Within-cluster sum of squared distances.
    pub sse: f64,
    /// SSE after each Lloyd iteration of the winning restart.
    pub sse_trace: Vec<f64>,
    pub iterations: usize,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid per point, ties to the lowest index.
fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<usize> {
    points
        .iter()
        .map(|p| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (k, c) in centroids.iter().enumerate() {
                let d = squared_distance(p, c);
                if d < best_d {
                    best_d = d;
                    best = k;
                }
            }
            best
        })
        .collect()
}

fn update(points: &[Vec<f64>], assignment: &[usize], centroids: &mut [Vec<f64>]) -> Vec<usize> {
    let d = points[0].len();
    let mut counts = vec![0usize; centroids.len()];
    for c in centroids.iter_mut() {
        c.iter_mut().for_each(|x| *x = 0.0);
    }
    for (p, &k) in points.iter().zip(assignment) {
        counts[k] += 1;
        for j in 0..d {
            centroids[k][j] += p[j];
        }
    }
    for (c, &n) in centroids.iter_mut().zip(&counts) {
        if n > 0 {
            c.iter_mut().for_each(|x| *x /= n as f64);
        }
    }
    counts
}

fn sse(points: &[Vec<f64>], centroids: &[Vec<f64>], assignment: &[usize]) -> f64 {
    points.iter().zip(assignment).map(|(p, &k)| squared_distance(p, &centroids[k])).sum()
}

fn mean_distance(points: &[Vec<f64>], centroids: &[Vec<f64>], assignment: &[usize]) -> f64 {
    points.iter().zip(assignment).map(|(p, &k)| squared_distance(p, &centroids[k]).sqrt()).sum::<f64>()
        / points.len() as f64
}

/// Lloyd's algorithm from `k` distinct random points.
fn lloyd(points: &[Vec<f64>], k: usize, seed: u64) -> KMeansResult {
    let mut r = rng(seed);
    let mut centroids: Vec<Vec<f64>> =
        sample_indices(&mut r, points.len(), k).into_iter().map(|i| points[i].clone()).collect();
    let mut assignment = assign(points, &centroids);
    let mut trace = vec![sse(points, &centroids, &assignment)];
    let mut iterations = 0;
    while iterations < MAX_LLOYD_ITERATIONS {
        iterations += 1;
        let counts = update(points, &assignment, &mut centroids);
        let had_empty = counts.contains(&0);
        // Reseed each empty cluster to the point farthest from its centroid.
        for empty in (0..k).filter(|&c| counts[c] == 0) {
            let far = (0..points.len())
                .max_by(|&a, &b| {
                    let da = squared_distance(&points[a], &centroids[assignment[a]]);
                    let db = squared_distance(&points[b], &centroids[assignment[b]]);
                    da.total_cmp(&db).then(b.cmp(&a))
                })
                .expect("non-empty points");
            centroids[empty] = points[far].clone();
            assignment[far] = empty;
        }
        let next = assign(points, &centroids);
        trace.push(sse(points, &centroids, &next));
        let stable = next == assignment && !had_empty;
        assignment = next;
        if stable {
            break;
        }
    }
    update(points, &assignment, &mut centroids);
    let total = sse(points, &centroids, &assignment);
    if trace.last() != Some(&total) {
        trace.push(total);
    }
    KMeansResult {
        mean_distance: mean_distance(points, &centroids, &assignment),
        sse: total,
        centroids,
        assignment,
        sse_trace: trace,
        iterations,
    }
}

/// Best of `n_restarts` Lloyd runs by within-cluster sum of squares (the
/// quantity Lloyd iterations decrease); the earliest restart wins ties.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, n_restarts: usize) -> Result<KMeansResult, ScenarioError> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(ScenarioError::KTooLarge { k, n });
    }
    let d = points[0].len();
    if d == 0 || points.iter().any(|p| p.len() != d || p.iter().any(|x| !x.is_finite())) {
        return Err(ScenarioError::InvalidInput("points must share a positive dimension and be finite".into()));
    }
    let runs: Vec<KMeansResult> =
        (0..n_restarts.max(1)).into_par_iter().map(|i| lloyd(points, k, child_seed(seed, i as u64))).collect();
    Ok(runs.into_iter().reduce(|best, r| if r.sse < best.sse { r } else { best }).expect("at least one restart"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElbowCurve {
    pub k_star: usize,
    /// `(K, mean_distance)` for every K in the range.
    pub curve: Vec<(usize, f64)>,
}

/// Runs K-means over `k_min..=k_max` and picks the K with the largest second
/// difference of the mean-distance curve (smallest K on ties).
pub fn elbow_select(
    points: &[Vec<f64>],
    k_min: usize,
    k_max: usize,
    seed: u64,
    n_restarts: usize,
) -> Result<ElbowCurve, ScenarioError> {
    if k_max < k_min + 2 || k_min == 0 {
        return Err(ScenarioError::RangeTooNarrow(k_min, k_max));
    }
    if k_max > points.len() {
        return Err(ScenarioError::KTooLarge { k: k_max, n: points.len() });
    }
    let curve: Vec<(usize, f64)> = (k_min..=k_max)
        .into_par_iter()
        .map(|k| kmeans(points, k, child_seed(seed, k as u64), n_restarts).map(|r| (k, r.mean_distance)))
        .collect::<Result<_, _>>()?;
    let k_star = second_difference_argmax(&curve);
    Ok(ElbowCurve { k_star, curve })
}

fn second_difference_argmax(curve: &[(usize, f64)]) -> usize {
    let mut best = curve[1].0;
    let mut best_val = f64::NEG_INFINITY;
    for w in curve.windows(3) {
        let val = w[0].1 - 2.0 * w[1].1 + w[2].1;
        if val > best_val {
            best_val = val;
            best = w[1].0;
        }
    }
    best
}

/// How scenario probabilities are derived from a clustering.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Share of samples in each cluster.
    #[default]
    Frequency,
    EquiProbable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSet {
    pub profiles: Vec<Profile>,
    pub probabilities: Vec<f64>,
}

impl ScenarioSet {
    pub fn singleton(profile: Profile) -> Self {
        ScenarioSet { profiles: vec![profile], probabilities: vec![1.0] }
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.profiles.is_empty() || self.profiles.len() != self.probabilities.len() {
            return Err(ScenarioError::InvalidInput("scenario and probability counts differ or are zero".into()));
        }
        if let Some(i) = self.probabilities.iter().position(|&p| !(p > 0.0)) {
            return Err(ScenarioError::EmptyCluster(i));
        }
        let total: f64 = self.probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ScenarioError::InvalidInput(format!("probabilities sum to {total}")));
        }
        if self.profiles.iter().flatten().any(|x| !x.is_finite()) {
            return Err(ScenarioError::InvalidInput("non-finite scenario temperature".into()));
        }
        Ok(())
    }
}

pub fn to_scenario_set(
    centroids: &[Vec<f64>],
    assignment: &[usize],
    weighting: Weighting,
) -> Result<ScenarioSet, ScenarioError> {
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    for &a in assignment {
        if a >= k {
            return Err(ScenarioError::InvalidInput(format!("label {a} with only {k} centroids")));
        }
        counts[a] += 1;
    }
    if let Some(i) = counts.iter().position(|&c| c == 0) {
        return Err(ScenarioError::EmptyCluster(i));
    }
    let profiles = centroids
        .iter()
        .map(|c| {
            Profile::try_from(c.as_slice())
                .map_err(|_| ScenarioError::InvalidInput(format!("centroid has {} entries, need 24", c.len())))
        })
        .collect::<Result<_, _>>()?;
    let n = assignment.len() as f64;
    let probabilities = match weighting {
        Weighting::Frequency => counts.iter().map(|&c| c as f64 / n).collect(),
        Weighting::EquiProbable => vec![1.0 / k as f64; k],
    };
    Ok(ScenarioSet { profiles, probabilities })
}

pub fn profiles_as_points(profiles: &[Profile]) -> Vec<Vec<f64>> {
    profiles.iter().map(|p| p.to_vec()).collect()
}

fn hour_headers() -> impl Iterator<Item = String> {
    (0..HOURS_PER_DAY).map(|h| format!("h{h:02}"))
}

fn csv_err(e: impl std::fmt::Display) -> ScenarioError {
    ScenarioError::Csv(e.to_string())
}

pub fn write_scenarios_csv<W: Write>(set: &ScenarioSet, out: W) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = ["scenario".to_string(), "probability".to_string()].into_iter().chain(hour_headers()).collect();
    w.write_record(&header).map_err(csv_err)?;
    for (s, (profile, p)) in set.profiles.iter().zip(&set.probabilities).enumerate() {
        let row: Vec<String> =
            [s.to_string(), p.to_string()].into_iter().chain(profile.iter().map(|x| x.to_string())).collect();
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

pub fn write_sample_pool_csv<W: Write>(pool: &SamplePool, out: W) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = std::iter::once("sample".to_string()).chain(hour_headers()).collect();
    w.write_record(&header).map_err(csv_err)?;
    for (i, profile) in pool.profiles.iter().enumerate() {
        let row: Vec<String> = std::iter::once(i.to_string()).chain(profile.iter().map(|x| x.to_string())).collect();
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

pub fn write_elbow_csv<W: Write>(elbow: &ElbowCurve, out: W) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["K", "mean_distance"]).map_err(csv_err)?;
    for (k, d) in &elbow.curve {
        w.write_record([k.to_string(), d.to_string()]).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_curve_ties_to_smallest_k() {
        let curve: Vec<(usize, f64)> = (1..=6).map(|k| (k, 10.0 - k as f64)).collect();
        assert_eq!(second_difference_argmax(&curve), 2);
    }
}
