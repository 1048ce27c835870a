//! Truncated power series in a shifted variable `(z - c)`.
//!
//! Coefficient vectors are stored in ascending order.

use crate::bell::binomial;
use crate::C64;

pub fn eval(coeffs: &[C64], w: C64) -> C64 {
    coeffs
        .iter()
        .rev()
        .fold(C64::new(0.0, 0.0), |acc, c| acc * w + c)
}

/// Re-expand `Σ a_k (z - from)^k` as `Σ b_j (z - to)^j`.
pub fn recenter(coeffs: &[C64], from: C64, to: C64) -> Vec<C64> {
    let d = to - from;
    if d == C64::new(0.0, 0.0) {
        return coeffs.to_vec();
    }
    let n = coeffs.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    // powers of d
    let mut pw = vec![C64::new(1.0, 0.0); n];
    for k in 1..n {
        pw[k] = pw[k - 1] * d;
    }
    for (k, a) in coeffs.iter().enumerate() {
        for (j, o) in out.iter_mut().enumerate().take(k + 1) {
            *o += a * pw[k - j] * binomial(k, j);
        }
    }
    out
}

/// Product truncated to `len` coefficients.
pub fn mul(a: &[C64], b: &[C64], len: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); len];
    for (i, x) in a.iter().enumerate().take(len) {
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// `exp` of a series truncated to `len` coefficients.
pub fn exp(a: &[C64], len: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); len];
    if len == 0 {
        return out;
    }
    let a0 = a.first().copied().unwrap_or_default();
    out[0] = a0.exp();
    // n e_n = Σ_{k=1}^{n} k a_k e_{n-k}
    for n in 1..len {
        let mut acc = C64::new(0.0, 0.0);
        for k in 1..=n.min(a.len().saturating_sub(1)) {
            acc += a[k] * out[n - k] * k as f64;
        }
        out[n] = acc / n as f64;
    }
    out
}

/// Derivative of the series in its own variable.
pub fn derivative(a: &[C64]) -> Vec<C64> {
    a.iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * k as f64)
        .collect()
}

/// `∂^k` at the expansion point for `k = 0..=kmax`.
pub fn jet_at_center(a: &[C64], kmax: usize) -> Vec<C64> {
    let mut fact = 1.0;
    (0..=kmax)
        .map(|k| {
            if k > 0 {
                fact *= k as f64;
            }
            a.get(k).copied().unwrap_or_default() * fact
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn recenter_preserves_values() {
        let a = vec![c(1.0, 0.5), c(-2.0, 1.0), c(0.3, 0.0), c(0.0, -1.0)];
        let from = c(0.5, -0.25);
        let to = c(-1.0, 2.0);
        let b = recenter(&a, from, to);
        for z in [c(0.0, 0.0), c(1.5, -0.7), c(-2.0, 3.0)] {
            let va = eval(&a, z - from);
            let vb = eval(&b, z - to);
            assert_relative_eq!((va - vb).norm(), 0.0, epsilon = 1e-11);
        }
    }

    #[test]
    fn exp_of_linear_series() {
        // exp(1 + 2w) = e · Σ (2w)^n / n!
        let e = exp(&[c(1.0, 0.0), c(2.0, 0.0)], 8);
        let mut fact = 1.0;
        for (n, v) in e.iter().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            let expected = std::f64::consts::E * 2f64.powi(n as i32) / fact;
            assert_relative_eq!(v.re, expected, max_relative = 1e-13);
            assert_relative_eq!(v.im, 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn exp_is_multiplicative() {
        let a = [c(0.1, 0.2), c(0.4, -0.3), c(0.0, 0.5), c(-0.2, 0.1)];
        let b = [c(-0.3, 0.0), c(0.2, 0.2), c(0.1, -0.1)];
        let sum: Vec<C64> = (0..4)
            .map(|i| a.get(i).copied().unwrap_or_default() + b.get(i).copied().unwrap_or_default())
            .collect();
        let lhs = exp(&sum, 10);
        let rhs = mul(&exp(&a, 10), &exp(&b, 10), 10);
        for (x, y) in lhs.iter().zip(&rhs) {
            assert_relative_eq!((x - y).norm(), 0.0, epsilon = 1e-13);
        }
    }
}
