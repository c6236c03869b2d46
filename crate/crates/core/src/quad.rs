//! Small numerical helpers: composite Simpson quadrature and pairwise sums.

/// Composite Simpson rule over `[a, b]` with `n` (rounded up to even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let v = f(a + i as f64 * h);
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even)
}

/// Recursive pairwise summation; the tree depends only on the slice length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let (lo, hi) = values.split_at(n / 2);
            pairwise_sum(lo) + pairwise_sum(hi)
        }
    }
}

/// `sin(x)/x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        libm::sin(x) / x
    }
}

/// Normalised Dirichlet kernel `sin(N u) / (N sin u)`, continuous at `u = kπ`.
pub fn dirichlet(n: usize, u: f64) -> f64 {
    let nf = n as f64;
    let s = libm::sin(u);
    if s.abs() < 1e-9 {
        // Near u = kπ: limit is cos(N kπ)/cos(kπ) = (±1)^(N-1).
        let k = libm::round(u / core::f64::consts::PI);
        let d = u - k * core::f64::consts::PI;
        let sign = if (k as i64).rem_euclid(2) == 1 && n % 2 == 0 {
            -1.0
        } else {
            1.0
        };
        return sign * (1.0 - (nf * nf - 1.0) * d * d / 6.0);
    }
    libm::sin(nf * u) / (nf * s)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * core::f64::consts::FRAC_1_SQRT_2)
}
