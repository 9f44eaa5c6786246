//! Independent numerical oracles shared by the integration suites. These
//! deliberately avoid the library's own numerics: plain quadrature, dense
//! linear solves, and textbook special functions.

#![allow(dead_code)]

/// Lanczos log-gamma, g = 5, 6 coefficients: plenty for test tolerances.
pub fn ln_gamma(x: f64) -> f64 {
    assert!(x > 0.0);
    const C: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let mut ser = 1.000000000190015;
    for (i, c) in C.iter().enumerate() {
        ser += c / (x + 1.0 + i as f64);
    }
    let tmp = x + 5.5 - (x + 0.5) * (x + 5.5).ln();
    -tmp + (2.5066282746310005 * ser / x).ln()
}

/// Regularized upper incomplete gamma Q(a, x), series/continued fraction.
pub fn gammq(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0);
    if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_cf(a, x)
    }
}

fn gamma_series(a: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..500 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-14 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_cf(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-14 {
            break;
        }
    }
    h * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Chi-square upper tail probability with `dof` degrees of freedom.
pub fn chi2_pvalue(stat: f64, dof: usize) -> f64 {
    gammq(dof as f64 / 2.0, stat / 2.0)
}

/// Poisson mass function, stable for moderate means.
pub fn poisson_pmf(mean: f64, k: usize) -> f64 {
    (-mean + k as f64 * mean.ln() - ln_gamma(k as f64 + 1.0)).exp()
}

/// Composite Simpson on a uniform grid; `panels` must be even.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    assert!(panels >= 2 && panels.is_multiple_of(2));
    let h = (b - a) / panels as f64;
    let mut sum = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Transient law of a birth-death chain by uniformization: probabilities at
/// time `t` starting from `start`, truncated at `size` states. `rate_up`
/// and `rate_down` give the jump intensities out of each state.
pub fn birth_death_transient(
    rate_up: &dyn Fn(usize) -> f64,
    rate_down: &dyn Fn(usize) -> f64,
    size: usize,
    start: usize,
    t: f64,
) -> Vec<f64> {
    let mut q_max: f64 = 0.0;
    for n in 0..size {
        q_max = q_max.max(rate_up(n) + rate_down(n));
    }
    let unif = q_max * 1.05 + 1.0;
    // one uniformized step: p' = p P, P = I + Q/unif
    let step = |p: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; size];
        for n in 0..size {
            let up = if n + 1 < size { rate_up(n) } else { 0.0 };
            let down = rate_down(n);
            let stay = 1.0 - (up + down) / unif;
            out[n] += p[n] * stay;
            if n + 1 < size {
                out[n + 1] += p[n] * up / unif;
            }
            if n > 0 {
                out[n - 1] += p[n] * down / unif;
            }
        }
        out
    };
    let mut p = vec![0.0; size];
    p[start] = 1.0;
    let mut result = vec![0.0; size];
    let lam = unif * t;
    // Poisson weights over enough terms for 1e-12 truncation
    let terms = (lam + 12.0 * lam.sqrt() + 30.0) as usize;
    let mut weight = (-lam).exp();
    for k in 0..=terms {
        if k > 0 {
            weight *= lam / k as f64;
            p = step(&p);
        }
        for n in 0..size {
            result[n] += weight * p[n];
        }
    }
    result
}

/// Expected time to reach state 0 from each state of a birth-death chain,
/// by the backward equations `(b_n + d_n) E_n = 1 + b_n E_{n+1} + d_n E_{n-1}`
/// with `E_0 = 0`, truncated by dropping the birth rate in the last state.
/// Thomas elimination on the tridiagonal system.
pub fn expected_hitting_zero(
    rate_up: &dyn Fn(usize) -> f64,
    rate_down: &dyn Fn(usize) -> f64,
    size: usize,
) -> Vec<f64> {
    assert!(size >= 2);
    // unknowns E_1 .. E_{size-1}
    let m = size - 1;
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut lower = vec![0.0; m];
    let mut rhs = vec![1.0; m];
    for i in 0..m {
        let n = i + 1;
        let b = if n == size - 1 { 0.0 } else { rate_up(n) };
        let d = rate_down(n);
        diag[i] = b + d;
        upper[i] = -b;
        lower[i] = -d; // couples to E_{n-1}; E_0 = 0 drops the first one
    }
    for i in 1..m {
        let w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    let mut e = vec![0.0; m];
    e[m - 1] = rhs[m - 1] / diag[m - 1];
    for i in (0..m - 1).rev() {
        e[i] = (rhs[i] - upper[i] * e[i + 1]) / diag[i];
    }
    let mut out = vec![0.0];
    out.extend(e);
    out
}

/// Dense stationary solve of a birth-death generator by global balance:
/// Gaussian elimination on the truncated system with the normalization row.
#[allow(clippy::needless_range_loop)] // elimination walks two rows of one matrix
pub fn birth_death_stationary_dense(
    rate_up: &dyn Fn(usize) -> f64,
    rate_down: &dyn Fn(usize) -> f64,
    size: usize,
) -> Vec<f64> {
    // rows of Q^T pi = 0 (inflow minus outflow per state), with the last
    // equation replaced by the normalization sum pi = 1
    let mut m = vec![vec![0.0f64; size + 1]; size];
    for n in 0..size {
        let up = if n + 1 < size { rate_up(n) } else { 0.0 };
        let down = if n > 0 { rate_down(n) } else { 0.0 };
        m[n][n] -= up + down;
        if n + 1 < size {
            m[n + 1][n] += up;
        }
        if n > 0 {
            m[n - 1][n] += down;
        }
    }
    m[size - 1].fill(1.0);
    // partial-pivot elimination
    for col in 0..size {
        let piv = (col..size)
            .max_by(|&r1, &r2| m[r1][col].abs().partial_cmp(&m[r2][col].abs()).unwrap())
            .unwrap();
        m.swap(col, piv);
        let p = m[col][col];
        assert!(p.abs() > 1e-300, "singular balance system");
        for r in 0..size {
            if r != col && m[r][col] != 0.0 {
                let f = m[r][col] / p;
                for c in col..=size {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    (0..size).map(|i| m[i][size] / m[i][i]).collect()
}
