//! Independent numerical oracles shared by the integration tests.
//!
//! Nothing here calls into the crate's solvers, so every check against these
//! helpers compares two separate code paths.

#![allow(dead_code)]

use crowdbound::DistributionSpec;
use statrs::distribution::{ContinuousCDF, Normal};

/// Mann-Kendall trend test. Returns `(S, two-sided p)` using the normal
/// approximation with the tie-corrected variance.
pub fn mann_kendall(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += (xs[j] - xs[i]).signum() * ((xs[j] != xs[i]) as u8 as f64);
        }
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut k = 0;
    while k < n {
        let mut m = k;
        while m + 1 < n && sorted[m + 1] == sorted[k] {
            m += 1;
        }
        let t = (m - k + 1) as f64;
        tie_term += t * (t - 1.0) * (2.0 * t + 5.0);
        k = m + 1;
    }
    let nf = n as f64;
    let var = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - tie_term) / 18.0;
    let z = if s > 0.0 {
        (s - 1.0) / var.sqrt()
    } else if s < 0.0 {
        (s + 1.0) / var.sqrt()
    } else {
        0.0
    };
    let std = Normal::new(0.0, 1.0).unwrap();
    (s, 2.0 * std.sf(z.abs()))
}

/// One-sample Kolmogorov-Smirnov test against U(0, 1). Returns `(D, p)`
/// with the asymptotic Kolmogorov distribution and Stephens' small-sample
/// correction.
pub fn ks_uniform(samples: &[f64]) -> (f64, f64) {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i as f64 + 1.0) / n - x).max(x - i as f64 / n)
        })
        .fold(0.0, f64::max);
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    (d, kolmogorov_sf(lambda))
}

fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Nelder-Mead minimizer with restarts. Stops when the simplex spread in
/// function value and position both fall below `tol`.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, start: &[f64], step: f64, tol: f64) -> Vec<f64> {
    let mut best = start.to_vec();
    for _ in 0..5 {
        best = nelder_mead_once(&f, &best, step, tol);
    }
    best
}

fn nelder_mead_once(f: &impl Fn(&[f64]) -> f64, start: &[f64], step: f64, tol: f64) -> Vec<f64> {
    let d = start.len();
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..d {
        let mut p = start.to_vec();
        p[i] += step;
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
    for _ in 0..200_000 {
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&k| simplex[k].clone()).collect();
        values = order.iter().map(|&k| values[k]).collect();

        let spread_f = values[d] - values[0];
        let spread_x = simplex[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread_f.abs() < tol && spread_x < tol {
            break;
        }

        let centroid: Vec<f64> = (0..d)
            .map(|i| simplex[..d].iter().map(|p| p[i]).sum::<f64>() / d as f64)
            .collect();
        let toward = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[d])
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let reflected = toward(-1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = toward(-2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[d] = expanded;
                values[d] = fe;
            } else {
                simplex[d] = reflected;
                values[d] = fr;
            }
        } else if fr < values[d - 1] {
            simplex[d] = reflected;
            values[d] = fr;
        } else {
            let contracted = if fr < values[d] {
                toward(-0.5)
            } else {
                toward(0.5)
            };
            let fc = f(&contracted);
            if fc < values[d].min(fr) {
                simplex[d] = contracted;
                values[d] = fc;
            } else {
                let best = simplex[0].clone();
                for k in 1..=d {
                    simplex[k] = simplex[k]
                        .iter()
                        .zip(&best)
                        .map(|(x, b)| b + 0.5 * (x - b))
                        .collect();
                    values[k] = f(&simplex[k]);
                }
            }
        }
    }
    let k = (0..=d)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap();
    simplex[k].clone()
}

/// Negative Bernoulli log-likelihood of a logistic model with the standard
/// logit link.
pub fn logistic_nll(y: &[bool], rows: &[Vec<f64>], beta: &[f64]) -> f64 {
    y.iter()
        .zip(rows)
        .map(|(&yi, row)| {
            let eta: f64 = row.iter().zip(beta).map(|(x, b)| x * b).sum();
            // log(1 + e^eta) - y * eta, computed stably
            let softplus = if eta > 0.0 {
                eta + (-eta).exp().ln_1p()
            } else {
                eta.exp().ln_1p()
            };
            softplus - if yi { eta } else { 0.0 }
        })
        .sum()
}

/// Least squares through the normal equations `X'X b = X'y`, solved by
/// Gaussian elimination with partial pivoting.
pub fn normal_equations(rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = rows[0].len();
    let mut a = vec![vec![0.0; p + 1]; p];
    for (row, &yi) in rows.iter().zip(y) {
        for i in 0..p {
            for j in 0..p {
                a[i][j] += row[i] * row[j];
            }
            a[i][p] += row[i] * yi;
        }
    }
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for r in 0..p {
            if r != col {
                let factor = a[r][col] / a[col][col];
                for c in col..=p {
                    a[r][c] -= factor * a[col][c];
                }
            }
        }
    }
    (0..p).map(|i| a[i][p] / a[i][i]).collect()
}

/// Brute-force maximum of the bound objective on a log-spaced grid of
/// `points` thresholds over `[lo, hi]`, using the plain CDF formula.
pub fn bound_grid_oracle(
    spec: &DistributionSpec,
    n: usize,
    lo: f64,
    hi: f64,
    points: usize,
) -> (f64, f64) {
    let (a, b) = (lo.ln(), hi.ln());
    let mut best = (lo, f64::NEG_INFINITY);
    for k in 0..points {
        let beta = (a + (b - a) * k as f64 / (points - 1) as f64).exp();
        let far = 1.0 - spec.cdf(n as f64 * beta).powi(n as i32 - 1);
        let v = spec.cdf(beta) * far;
        if v > best.1 {
            best = (beta, v);
        }
    }
    best
}

/// `x` with `cdf(x) = p`, by bisection on the distribution's CDF.
pub fn quantile_by_bisection(spec: &DistributionSpec, p: f64) -> f64 {
    let (mut lo, mut hi) = (1e-300_f64, 1.0_f64);
    while spec.cdf(hi) < p {
        hi *= 2.0;
    }
    for _ in 0..2000 {
        let mid = if lo > 0.0 && hi / lo > 4.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if spec.cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Composite Simpson rule over `[a, b]` with `intervals` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let h = (b - a) / intervals as f64;
    let mut s = f(a) + f(b);
    for k in 1..intervals {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * k as f64);
    }
    s * h / 3.0
}
