//! Small statistics helpers shared by the Monte-Carlo experiments.

/// Sample mean and unbiased sample variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1.0))
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Kolmogorov-Smirnov distance between the samples (sorted in place) and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(xs: &mut [f64], cdf: F) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        // step over ties so atoms are compared against the right-continuous CDF
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        let below = cdf(xs[i].next_down());
        let f = cdf(xs[i]);
        d = d.max((below - i as f64 / n).abs()).max(((j + 1) as f64 / n - f).abs());
        i = j + 1;
    }
    d
}

/// Asymptotic p-value of a one-sample KS statistic `d` from `n` samples.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// `max_x |G(x) + G(-x) - 1|` for the empirical CDF `G`, scanned on `grid`
/// points over `[0, max |x|]`. Sorts the samples in place.
pub fn reflection_residual(xs: &mut [f64], grid: usize) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let reach = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let ecdf = |x: f64| xs.partition_point(|v| *v <= x) as f64 / n;
    (0..=grid)
        .map(|k| {
            let x = reach * k as f64 / grid as f64;
            (ecdf(x) + ecdf(-x) - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Result of a straight-line least-squares fit `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub intercept_se: f64,
    pub slope_se: f64,
}

/// Ordinary least squares with residual-based standard errors.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LineFit {
    weighted_linear_fit(x, y, &vec![1.0; x.len()])
}

/// Weighted least squares minimizing `Σ w_k (y_k - a - b x_k)²`.
pub fn weighted_linear_fit(x: &[f64], y: &[f64], w: &[f64]) -> LineFit {
    assert!(x.len() == y.len() && x.len() == w.len() && x.len() >= 3);
    let sw: f64 = w.iter().sum();
    let xm = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let ym = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for k in 0..x.len() {
        sxx += w[k] * (x[k] - xm) * (x[k] - xm);
        sxy += w[k] * (x[k] - xm) * (y[k] - ym);
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let rss: f64 = (0..x.len())
        .map(|k| w[k] * (y[k] - intercept - slope * x[k]).powi(2))
        .sum();
    let s2 = rss / (x.len() as f64 - 2.0);
    LineFit {
        intercept,
        slope,
        slope_se: (s2 / sxx).sqrt(),
        intercept_se: (s2 * (1.0 / sw + xm * xm / sxx)).sqrt(),
    }
}
