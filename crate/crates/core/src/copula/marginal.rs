use super::CopulaError;

/// Minimum sample size for a marginal or copula fit.
pub const MIN_SAMPLES: usize = 30;

/// Empirical CDF with `i/(n+1)` plotting positions and linear interpolation.
///
/// Tied samples collapse to one interpolation knot at their mean plotting
/// position, so the CDF stays a function and `inverse(cdf(x)) == x` for every
/// sample value.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMarginal {
    sorted_values: Vec<f64>,
    plotting_positions: Vec<f64>,
    knot_values: Vec<f64>,
    knot_positions: Vec<f64>,
}

impl EmpiricalMarginal {
    pub fn fit(samples: &[f64]) -> Result<Self, CopulaError> {
        if samples.len() < MIN_SAMPLES {
            return Err(CopulaError::TooFewSamples { needed: MIN_SAMPLES, got: samples.len() });
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(CopulaError::NonFiniteInput);
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self::from_sorted_unchecked(sorted))
    }

    /// Rebuilds a marginal from previously stored sorted values.
    pub fn from_sorted(sorted_values: Vec<f64>) -> Result<Self, CopulaError> {
        if sorted_values.len() < MIN_SAMPLES {
            return Err(CopulaError::TooFewSamples { needed: MIN_SAMPLES, got: sorted_values.len() });
        }
        if sorted_values.iter().any(|x| !x.is_finite()) || sorted_values.windows(2).any(|w| w[0] > w[1]) {
            return Err(CopulaError::NonFiniteInput);
        }
        Ok(Self::from_sorted_unchecked(sorted_values))
    }

    fn from_sorted_unchecked(sorted_values: Vec<f64>) -> Self {
        let n = sorted_values.len();
        let denom = (n + 1) as f64;
        let plotting_positions: Vec<f64> = (1..=n).map(|i| i as f64 / denom).collect();
        let mut knot_values = Vec::new();
        let mut knot_positions = Vec::new();
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && sorted_values[j + 1] == sorted_values[i] {
                j += 1;
            }
            knot_values.push(sorted_values[i]);
            // Mean of positions (i+1..=j+1)/(n+1).
            knot_positions.push((i + j + 2) as f64 / (2.0 * denom));
            i = j + 1;
        }
        EmpiricalMarginal { sorted_values, plotting_positions, knot_values, knot_positions }
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted_values
    }

    pub fn plotting_positions(&self) -> &[f64] {
        &self.plotting_positions
    }

    pub fn len(&self) -> usize {
        self.sorted_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_values.is_empty()
    }

    /// CDF value in `[knot_positions[0], knot_positions[last]]`, which is
    /// `[1/(n+1), n/(n+1)]` when the extremes are untied.
    pub fn cdf(&self, x: f64) -> f64 {
        interpolate(&self.knot_values, &self.knot_positions, x)
    }

    /// Inverse CDF; probabilities beyond the extreme knots map to the sample
    /// minimum or maximum.
    pub fn inverse(&self, p: f64) -> f64 {
        interpolate(&self.knot_positions, &self.knot_values, p)
    }
}

/// Piecewise-linear interpolation through ascending `xs`, flat outside.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let last = xs.len() - 1;
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[last] {
        return ys[last];
    }
    let hi = xs.partition_point(|&k| k <= x);
    let lo = hi - 1;
    let t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    ys[lo] + t * (ys[hi] - ys[lo])
}

/// Rank-based pseudo-observations: average ranks divided by `n + 1`.
pub fn pseudo_observations(pairs: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let us = average_ranks(pairs.iter().map(|p| p.0));
    let vs = average_ranks(pairs.iter().map(|p| p.1));
    let denom = (pairs.len() + 1) as f64;
    us.into_iter().zip(vs).map(|(u, v)| (u / denom, v / denom)).collect()
}

fn average_ranks(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let values: Vec<f64> = values.collect();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}
