//! Independent reference implementations shared by the integration tests.

#![allow(dead_code)]

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[row][c] -= f * a[col][c];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Expands a tridiagonal system into a dense matrix.
pub fn dense_tridiag(lower: &[f64], diag: &[f64], upper: &[f64]) -> Vec<Vec<f64>> {
    let n = diag.len();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        a[i][i] = diag[i];
        if i > 0 {
            a[i][i - 1] = lower[i - 1];
        }
        if i + 1 < n {
            a[i][i + 1] = upper[i];
        }
    }
    a
}

/// `ln Γ(x)` for `x > 0` by recurrence up to 10 and the Stirling series.
pub fn ln_gamma(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < 10.0 {
        shift -= x.ln();
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series =
        inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))));
    shift + (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + series
}

pub fn ln_beta(p: f64, q: f64) -> f64 {
    ln_gamma(p) + ln_gamma(q) - ln_gamma(p + q)
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// One linearized Crank–Nicolson step assembled as a dense system from the
/// scheme definition and solved by elimination.
pub fn dense_step(rho: &[f64], h: f64, k: f64, mu: f64, nu: f64) -> Vec<f64> {
    let m = rho.len() - 1;
    let n = m - 1;
    let p: Vec<f64> = rho.iter().map(|r| r.powf(nu - 1.0)).collect();
    let q: Vec<f64> = rho.iter().map(|r| r.powf(nu)).collect();
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for i in 1..m {
        let row = i - 1;
        a[row][row] = -2.0 * (p[i] + h * h / k);
        if i > 1 {
            a[row][row - 1] = p[i - 1];
        }
        if i + 1 < m {
            a[row][row + 1] = p[i + 1];
        }
        b[row] = -(2.0 / nu) * (q[i + 1] - 2.0 * q[i] + q[i - 1]) - 2.0 * h * h * rho[i].powf(mu);
    }
    let w = dense_solve(a, b);
    let mut out = rho.to_vec();
    for i in 1..m {
        out[i] = (rho[i] + w[i - 1]).max(0.0);
    }
    out
}
