//! Test-only oracles, independent of the library's numerical routes.
#![allow(dead_code)]

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Composite Gauss–Legendre over the panels given by `breaks`.
pub fn gl_panels(f: impl Fn(f64) -> f64, breaks: &[f64], order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    breaks
        .windows(2)
        .map(|p| {
            let (a, b) = (p[0], p[1]);
            let h = 0.5 * (b - a);
            let m = 0.5 * (a + b);
            x.iter().zip(&w).map(|(xi, wi)| wi * f(m + h * xi)).sum::<f64>() * h
        })
        .sum()
}

/// Lanczos log-gamma (g = 7, n = 9), accurate to ~1e-15 for positive arguments.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Two-parameter Mittag-Leffler function by its power series; fine for
/// `|z| ≲ 5`.
pub fn mittag_leffler(alpha: f64, beta: f64, z: f64) -> f64 {
    let mut sum = 0.0;
    for k in 0..400 {
        let g = ln_gamma(alpha * k as f64 + beta);
        let term = z.abs().powi(k).ln() - g;
        let sign = if z < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
        let t = if z == 0.0 && k > 0 { 0.0 } else { sign * term.exp() };
        sum += t;
        if k > 10 && t.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// Closed-form inverse Laplace transform of `λ/((λ + s^α) s^β)`:
/// `λ p^{α+β-1} E_{α,α+β}(-λ p^α)`.
pub fn power_law_density_exact(lam: f64, alpha: f64, beta: f64, p: f64) -> f64 {
    lam * p.powf(alpha + beta - 1.0) * mittag_leffler(alpha, alpha + beta, -lam * p.powf(alpha))
}

/// Two-sided Kolmogorov–Smirnov p-value for a one-sample statistic `d` over
/// `n` observations (asymptotic series with the Stephens correction).
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut sum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = 2.0 * (-1.0f64).powi(k - 1) * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// KS statistic of `samples` against the Exp(1) distribution.
pub fn ks_exp1(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = 1.0 - (-x).exp();
            let lo = cdf - i as f64 / n;
            let hi = (i + 1) as f64 / n - cdf;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

/// Two-sample KS statistic and the effective sample size `n m / (n + m)`.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> (f64, usize) {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    (d, n * m / (n + m))
}
