//! Dense comparison of the distribution kernels against 40-digit references.

use ebts_core::special::{normal_cdf, normal_quantile, student_t_cdf, student_t_quantile};

fn rows() -> Vec<(String, Option<f64>, f64, f64)> {
    let text = include_str!("data/special_reference.csv");
    text.lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            (f[0].to_string(), f[1].parse().ok(), f[2].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

#[test]
fn kernels_match_high_precision_grid() {
    let mut worst = [0.0f64; 3];
    for (kind, nu, x, want) in rows() {
        let (slot, got) = match kind.as_str() {
            "normal_cdf" => (0, normal_cdf(x)),
            "normal_quantile" => (1, normal_quantile(x)),
            "t_cdf" => (2, student_t_cdf(x, nu.unwrap())),
            other => panic!("unknown kind {other}"),
        };
        let err = if want.abs() < 1e-300 { got.abs() } else { rel(got, want) };
        worst[slot] = worst[slot].max(err);
    }
    assert!(worst[0] < 1e-13, "normal cdf {worst:?}");
    assert!(worst[1] < 1e-13, "normal quantile {worst:?}");
    assert!(worst[2] < 1e-11, "t cdf {worst:?}");
}

#[test]
fn t_quantile_inverts_cdf_on_grid() {
    for (kind, nu, x, want) in rows() {
        if kind == "t_cdf" && want > 1e-12 && want < 1.0 - 1e-12 {
            let t = student_t_quantile(want, nu.unwrap());
            assert!((t - x).abs() < 1e-8 * x.abs().max(1.0), "nu {nu:?} p {want}: {t} vs {x}");
        }
    }
}
