//! Closed-form detection probabilities for the cell model.

/// `P(|A e^{jφ} + CN(0,1)|² > γ)` with `A² = snr_lin`.
///
/// Poisson mixture of Erlang tails: `Σ_j Pois(j; A²) · Σ_{i≤j} e^{-γ} γ^i / i!`.
pub fn rician_tail(snr_lin: f64, gamma: f64) -> f64 {
    if gamma <= 0.0 {
        return 1.0;
    }
    let lambda = snr_lin.max(0.0);
    let mut pois = (-lambda).exp();
    let mut erlang_term = (-gamma).exp();
    let mut erlang_cdf = erlang_term;
    let mut total = pois * erlang_cdf;
    let mut mass = pois;
    let j_min = (lambda + 10.0 * lambda.sqrt() + 20.0) as usize;
    for j in 1.. {
        pois *= lambda / j as f64;
        erlang_term *= gamma / j as f64;
        erlang_cdf += erlang_term;
        total += pois * erlang_cdf.min(1.0);
        mass += pois;
        if j > j_min && (1.0 - mass).abs() < 1e-15 {
            break;
        }
        if j > 100_000 {
            break;
        }
    }
    total.clamp(0.0, 1.0)
}

/// CA-CFAR scale factor `α = n (pfa^{-1/n} − 1)` for `n` exponential reference cells.
pub fn cfar_alpha(n_ref: usize, pfa: f64) -> f64 {
    let n = n_ref as f64;
    n * (pfa.powf(-1.0 / n) - 1.0)
}

/// Detection probability of CA-CFAR against the Rician cell with `n_ref`
/// unit-mean exponential reference cells.
pub fn ca_cfar_pd(snr_lin: f64, n_ref: usize, pfa: f64) -> f64 {
    let n = n_ref as f64;
    let c = cfar_alpha(n_ref, pfa) / n;
    let lambda = snr_lin.max(0.0);
    // term_i = C(n+i−1, i) c^i (1+c)^{−(n+i)}
    let mut term = (1.0 + c).powf(-n);
    let mut inner = term;
    let mut pois = (-lambda).exp();
    let mut total = pois * inner;
    let mut mass = pois;
    let j_min = (lambda + 10.0 * lambda.sqrt() + 20.0) as usize;
    for j in 1.. {
        let i = j as f64;
        term *= (n + i - 1.0) / i * c / (1.0 + c);
        inner += term;
        pois *= lambda / i;
        total += pois * inner.min(1.0);
        mass += pois;
        if j > j_min && (1.0 - mass).abs() < 1e-15 {
            break;
        }
        if j > 100_000 {
            break;
        }
    }
    total.clamp(0.0, 1.0)
}

/// Standard error of a binomial proportion.
pub fn binomial_stderr(p: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}
