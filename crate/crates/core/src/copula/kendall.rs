use super::CopulaError;

/// Kendall's tau-b in O(n log n) (Knight's merge-sort algorithm).
pub fn kendall_tau(pairs: &[(f64, f64)]) -> Result<f64, CopulaError> {
    let n = pairs.len();
    if n < 2 {
        return Err(CopulaError::DegenerateInput);
    }
    if pairs.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(CopulaError::NonFiniteInput);
    }
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let pairs_total = (n * (n - 1) / 2) as f64;
    let x_ties = tie_pairs(sorted.iter().map(|p| p.0));
    let mut joint_ties = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            joint_ties += run * (run - 1) / 2;
            run = 1;
        }
    }
    joint_ties += run * (run - 1) / 2;

    let mut ys: Vec<f64> = sorted.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);
    let y_ties = tie_pairs(ys.iter().copied());

    let (n1, n2, n3) = (x_ties as f64, y_ties as f64, joint_ties as f64);
    let denom = ((pairs_total - n1) * (pairs_total - n2)).sqrt();
    if denom == 0.0 {
        return Err(CopulaError::DegenerateInput);
    }
    let tau = (pairs_total - n1 - n2 + n3 - 2.0 * swaps as f64) / denom;
    Ok(tau.clamp(-1.0, 1.0))
}

/// Number of tied pairs in an already sorted sequence.
fn tie_pairs(sorted: impl Iterator<Item = f64>) -> u64 {
    let mut total = 0;
    let mut run = 0u64;
    let mut prev = None;
    for x in sorted {
        if prev == Some(x) {
            run += 1;
        } else {
            total += run * (run.saturating_sub(1)) / 2;
            run = 1;
        }
        prev = Some(x);
    }
    total + run * run.saturating_sub(1) / 2
}

/// Stable merge sort of `v`, returning the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (left, right) = v.split_at_mut(mid);
        merge_count(left, &mut buf[..mid]) + merge_count(right, &mut buf[mid..])
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}
