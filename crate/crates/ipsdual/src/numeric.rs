//! Small numerical helpers shared by the exact and Monte Carlo layers.

/// `ln(k!)` for `k = 0..=n`, by cumulative summation (exact enough for the
/// modest `n` used here, and free of special-function dependencies).
pub fn ln_factorial_table(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    table.push(0.0);
    let mut acc = 0.0;
    for k in 1..=n {
        acc += (k as f64).ln();
        table.push(acc);
    }
    table
}

/// `ln C(n, k)` against a table from [`ln_factorial_table`];
/// `-inf` when `k > n`.
pub fn ln_choose(table: &[f64], n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    table[n] - table[k] - table[n - k]
}

/// Sample mean and its standard error.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n >= 2, "need at least two values");
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Poisson(`lambda`) probabilities `w_0..=w_k`, truncated once the retained
/// mass reaches `1 - tol` and renormalized to sum to exactly one.
///
/// Weights are built by the pmf ratio recurrence anchored at the mode, so no
/// large factorials or underflowing exponentials appear even for `lambda` in
/// the millions; weights far from the mode flush to zero harmlessly.
pub fn poisson_weights(lambda: f64, tol: f64) -> Vec<f64> {
    assert!(lambda.is_finite() && lambda >= 0.0, "lambda = {lambda}");
    assert!(tol > 0.0 && tol < 1.0, "tol = {tol}");
    if lambda == 0.0 {
        return vec![1.0];
    }

    // Generous upper bound on the support we will ever need: the mass above
    // mode + 12*sqrt + 30 is far below any tolerance in use.
    let hi = (lambda + 12.0 * (lambda + 1.0).sqrt() + 30.0).ceil() as usize;
    let mode = lambda.floor() as usize;
    let mut w = vec![0.0f64; hi + 1];
    w[mode] = 1.0;
    for k in (1..=mode).rev() {
        w[k - 1] = w[k] * k as f64 / lambda;
    }
    for k in mode..hi {
        w[k + 1] = w[k] * lambda / (k + 1) as f64;
    }
    let total: f64 = w.iter().sum();

    let keep_mass = (1.0 - tol) * total;
    let mut acc = 0.0;
    let mut cut = hi;
    for (k, &wk) in w.iter().enumerate() {
        acc += wk;
        if acc >= keep_mass {
            cut = k;
            break;
        }
    }
    w.truncate(cut + 1);
    let sum: f64 = w.iter().sum();
    for wk in &mut w {
        *wk /= sum;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn choose_small_values() {
        let t = ln_factorial_table(10);
        assert!((ln_choose(&t, 4, 2).exp() - 6.0).abs() < 1e-12);
        assert!((ln_choose(&t, 10, 5).exp() - 252.0).abs() < 1e-9);
        assert_eq!(ln_choose(&t, 3, 5), f64::NEG_INFINITY);
    }

    #[test]
    fn poisson_weights_match_direct_pmf() {
        let lambda = 3.7;
        let w = poisson_weights(lambda, 1e-12);
        let t = ln_factorial_table(w.len());
        for (k, &wk) in w.iter().enumerate() {
            let exact = (k as f64 * lambda.ln() - lambda - t[k]).exp();
            assert!((wk - exact).abs() < 1e-12, "k = {k}");
        }
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn poisson_weights_survive_large_lambda() {
        let lambda = 2.0e5;
        let w = poisson_weights(lambda, 1e-12);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // Mass concentrates near the mode.
        let mean: f64 = w.iter().enumerate().map(|(k, &wk)| k as f64 * wk).sum();
        assert!((mean - lambda).abs() < 1.0);
        assert!(w.len() < lambda as usize + 12_000);
    }

    #[test]
    fn poisson_weights_degenerate() {
        assert_eq!(poisson_weights(0.0, 1e-12), vec![1.0]);
    }

    #[test]
    fn mean_and_se_known_values() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m - 2.5).abs() < 1e-15);
        // Sample variance 5/3, SE = sqrt(5/12).
        assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }
}
