//! Exponential Bell polynomials.
//!
//! `B_{n,k}(x_1, …, x_{n-k+1})` is evaluated by enumerating the integer
//! partitions of `n` into exactly `k` parts; the multinomial coefficient of
//! every partition is computed exactly in integer arithmetic and cached per
//! `(n, k)`. The complete polynomial is `B_n = Σ_{k=1}^{n} B_{n,k}` with
//! `B_0 = 1`, and `∂^n e^{r} = e^{r} B_n(∂r, …, ∂^n r)` for any derivation.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{Error, Result};
use crate::C64;

/// Largest order for which the integer coefficients fit in `u128`.
pub const MAX_ORDER: usize = 30;

/// Values `(x_1, …, x_n)`, read as `(r′, r″, …, r^{(n)})` at a point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DerivativeJet(Vec<C64>);

impl DerivativeJet {
    pub fn new(values: Vec<C64>) -> Result<Self> {
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::domain("derivative jet has non-finite entries"));
        }
        Ok(DerivativeJet(values))
    }

    pub fn zeros(n: usize) -> Self {
        DerivativeJet(vec![C64::new(0.0, 0.0); n])
    }

    pub fn values(&self) -> &[C64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, t: C64) -> Self {
        DerivativeJet(self.0.iter().map(|x| x * t).collect())
    }

    pub fn negated(&self) -> Self {
        DerivativeJet(self.0.iter().map(|x| -x).collect())
    }

    /// Entrywise sum, truncated to the shorter jet.
    pub fn plus(&self, other: &DerivativeJet) -> Self {
        DerivativeJet(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl From<Vec<C64>> for DerivativeJet {
    fn from(values: Vec<C64>) -> Self {
        DerivativeJet(values)
    }
}

/// One partition of `n`: the coefficient `n! / Π m_i! (i!)^{m_i}` and the
/// nonzero multiplicities `(i, m_i)`.
#[derive(Debug)]
struct PartitionTerm {
    coeff: f64,
    parts: Vec<(usize, u32)>,
}

fn factorial_u128(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Exact binomial coefficient as `f64`.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as f64
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn partition_terms(n: usize, k: usize) -> Arc<Vec<PartitionTerm>> {
    static CACHE: OnceLock<RwLock<HashMap<(usize, usize), Arc<Vec<PartitionTerm>>>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(hit) = cache.read().expect("bell cache poisoned").get(&(n, k)) {
        return hit.clone();
    }
    let terms = Arc::new(enumerate_partitions(n, k));
    cache
        .write()
        .expect("bell cache poisoned")
        .entry((n, k))
        .or_insert(terms)
        .clone()
}

fn enumerate_partitions(n: usize, k: usize) -> Vec<PartitionTerm> {
    let mut out = Vec::new();
    if k == 0 {
        if n == 0 {
            out.push(PartitionTerm {
                coeff: 1.0,
                parts: Vec::new(),
            });
        }
        return out;
    }
    let nfact = factorial_u128(n);
    let mut stack = Vec::new();
    // parts chosen in decreasing size
    fn rec(
        remaining: usize,
        parts_left: usize,
        max_part: usize,
        stack: &mut Vec<(usize, u32)>,
        nfact: u128,
        out: &mut Vec<PartitionTerm>,
    ) {
        if parts_left == 0 {
            if remaining == 0 {
                let denom: u128 = stack
                    .iter()
                    .map(|&(i, m)| factorial_u128(m as usize) * factorial_u128(i).pow(m))
                    .product();
                let mut parts = stack.clone();
                parts.reverse();
                out.push(PartitionTerm {
                    coeff: (nfact / denom) as f64,
                    parts,
                });
            }
            return;
        }
        let top = max_part.min(remaining - (parts_left - 1));
        for size in (1..=top).rev() {
            // use `m` copies of `size`, then only smaller parts
            let max_m = (remaining / size).min(parts_left);
            for m in (1..=max_m).rev() {
                let rem = remaining - m * size;
                let left = parts_left - m;
                if left > rem || (left > 0 && size == 1) {
                    continue;
                }
                stack.push((size, m as u32));
                rec(rem, left, size - 1, stack, nfact, out);
                stack.pop();
            }
        }
    }
    if n >= k {
        rec(n, k, n - k + 1, &mut stack, nfact, &mut out);
    }
    out
}

fn check_order(n: usize) -> Result<()> {
    if n > MAX_ORDER {
        return Err(Error::domain(format!(
            "Bell polynomial order {n} exceeds supported maximum {MAX_ORDER}"
        )));
    }
    Ok(())
}

/// Partial exponential Bell polynomial `B_{n,k}` evaluated at the jet.
pub fn partial_bell(n: usize, k: usize, jet: &DerivativeJet) -> Result<C64> {
    check_order(n)?;
    if k > n {
        return Err(Error::domain(format!("partial Bell B_{{{n},{k}}} needs k <= n")));
    }
    if n == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    if k == 0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let need = n - k + 1;
    if jet.len() < need {
        return Err(Error::domain(format!(
            "B_{{{n},{k}}} needs {need} jet entries, got {}",
            jet.len()
        )));
    }
    let x = jet.values();
    let terms = partition_terms(n, k);
    Ok(terms
        .iter()
        .map(|t| {
            t.parts
                .iter()
                .fold(C64::new(t.coeff, 0.0), |acc, &(i, m)| acc * x[i - 1].powu(m))
        })
        .sum())
}

/// Complete exponential Bell polynomial `B_n`.
pub fn complete_bell(n: usize, jet: &DerivativeJet) -> Result<C64> {
    check_order(n)?;
    if n == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    if jet.len() < n {
        return Err(Error::domain(format!(
            "B_{n} needs {n} jet entries, got {}",
            jet.len()
        )));
    }
    (1..=n).map(|k| partial_bell(n, k, jet)).sum()
}

/// `∂^n e^{r} / e^{r}` from the jet `(∂r, …, ∂^n r)`.
pub fn exp_derivative_factor(n: usize, jet: &DerivativeJet) -> Result<C64> {
    complete_bell(n, jet)
}

/// `[B_0, B_1, …, B_n]` for one jet.
pub fn complete_bell_table(n: usize, jet: &DerivativeJet) -> Result<Vec<C64>> {
    (0..=n).map(|k| complete_bell(k, jet)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Brute force over every multi-index `(m_1, …, m_{n-k+1}) ∈ [0, k]^{n-k+1}`
    /// satisfying `Σ m_i = k` and `Σ i m_i = n`.
    fn brute_partial(n: usize, k: usize, x: &[C64]) -> C64 {
        if n == 0 && k == 0 {
            return c(1.0, 0.0);
        }
        if k == 0 || k > n {
            return c(0.0, 0.0);
        }
        let len = n - k + 1;
        let mut m = vec![0usize; len];
        let mut total = c(0.0, 0.0);
        loop {
            let s: usize = m.iter().sum();
            let w: usize = m.iter().enumerate().map(|(i, mi)| (i + 1) * mi).sum();
            if s == k && w == n {
                let mut term = c(factorial(n), 0.0);
                for (i, &mi) in m.iter().enumerate() {
                    term /= factorial(mi);
                    term *= (x[i] / factorial(i + 1)).powu(mi as u32);
                }
                total += term;
            }
            // odometer
            let mut idx = 0;
            loop {
                if idx == len {
                    return total;
                }
                m[idx] += 1;
                if m[idx] <= k {
                    break;
                }
                m[idx] = 0;
                idx += 1;
            }
        }
    }

    fn random_jet(rng: &mut ChaCha8Rng, n: usize) -> DerivativeJet {
        DerivativeJet::new(
            (0..n)
                .map(|_| c(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn small_values() {
        let empty = DerivativeJet::default();
        assert_eq!(partial_bell(0, 0, &empty).unwrap(), c(1.0, 0.0));
        let x1 = c(0.7, -0.2);
        assert_eq!(partial_bell(1, 1, &DerivativeJet::from(vec![x1])).unwrap(), x1);
        let (a, b) = (c(1.3, 0.4), c(-0.6, 2.0));
        let jet = DerivativeJet::from(vec![a, b]);
        let v = partial_bell(3, 2, &jet).unwrap();
        assert_relative_eq!((v - a * b * 3.0).norm(), 0.0, epsilon = 1e-14);
        assert_relative_eq!(
            (v - brute_partial(3, 2, jet.values())).norm(),
            0.0,
            epsilon = 1e-14
        );
        assert_eq!(partial_bell(4, 0, &jet).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn complete_bell_examples() {
        assert_eq!(complete_bell(0, &DerivativeJet::default()).unwrap(), c(1.0, 0.0));
        let (x1, x2) = (c(0.5, 1.0), c(-2.0, 0.25));
        let jet = DerivativeJet::from(vec![x1, x2]);
        let v = complete_bell(2, &jet).unwrap();
        let oracle = brute_partial(2, 1, jet.values()) + brute_partial(2, 2, jet.values());
        assert_relative_eq!((v - oracle).norm(), 0.0, epsilon = 1e-14);
        assert_relative_eq!((v - (x1 * x1 + x2)).norm(), 0.0, epsilon = 1e-14);
        assert_eq!(complete_bell(4, &DerivativeJet::zeros(4)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn exponential_derivative_examples() {
        let a = c(0.3, -1.1);
        let b = c(2.0, 0.5);
        assert_eq!(exp_derivative_factor(1, &vec![a].into()).unwrap(), a);
        // symbolic: (e^r)'' = (r'' + r'^2) e^r
        let v = exp_derivative_factor(2, &vec![a, b].into()).unwrap();
        assert_relative_eq!((v - (a * a + b)).norm(), 0.0, epsilon = 1e-14);
        let zero = c(0.0, 0.0);
        let v = exp_derivative_factor(3, &vec![a, zero, zero].into()).unwrap();
        assert_relative_eq!((v - a * a * a).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn errors_on_bad_arguments() {
        let jet = DerivativeJet::zeros(3);
        assert!(matches!(partial_bell(2, 3, &jet), Err(Error::Domain(_))));
        assert!(matches!(complete_bell(5, &jet), Err(Error::Domain(_))));
        assert!(matches!(partial_bell(5, 1, &jet), Err(Error::Domain(_))));
        assert!(DerivativeJet::new(vec![c(f64::NAN, 0.0)]).is_err());
        assert!(complete_bell(MAX_ORDER + 1, &DerivativeJet::zeros(40)).is_err());
    }

    #[test]
    fn matches_brute_force_up_to_six() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 0..=6 {
            for k in 0..=n {
                let jet = random_jet(&mut rng, n.max(1));
                let fast = partial_bell(n, k, &jet).unwrap();
                let slow = brute_partial(n, k, jet.values());
                assert!((fast - slow).norm() <= 1e-12 * (1.0 + slow.norm()), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn integer_coefficients_match_stirling_numbers() {
        // B_{n,k}(1, 1, …) = S(n, k)
        let ones = DerivativeJet::from(vec![c(1.0, 0.0); 10]);
        assert_eq!(partial_bell(10, 3, &ones).unwrap().re, 9330.0);
        assert_eq!(partial_bell(7, 4, &ones).unwrap().re, 350.0);
        // B_n(1, …, 1) is the Bell number
        assert_eq!(complete_bell(10, &ones).unwrap().re, 115975.0);
    }

    proptest! {
        #[test]
        fn binomial_type_identity(seed in any::<u64>(), n in 0usize..=8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_jet(&mut rng, n);
            let y = random_jet(&mut rng, n);
            let lhs = complete_bell(n, &x.plus(&y)).unwrap();
            let rhs: C64 = (0..=n)
                .map(|i| complete_bell(n - i, &x).unwrap() * complete_bell(i, &y).unwrap() * binomial(n, i))
                .sum();
            let scale = 1.0 + lhs.norm().max(rhs.norm());
            prop_assert!((lhs - rhs).norm() <= 1e-10 * scale);
        }

        #[test]
        fn partial_bell_is_homogeneous(seed in any::<u64>(), n in 1usize..=8, tr in -2.0f64..2.0, ti in -2.0f64..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = rng.gen_range(0..=n);
            let x = random_jet(&mut rng, n);
            let t = c(tr, ti);
            let lhs = partial_bell(n, k, &x.scaled(t)).unwrap();
            let rhs = partial_bell(n, k, &x).unwrap() * t.powu(k as u32);
            prop_assert!((lhs - rhs).norm() <= 1e-11 * (1.0 + rhs.norm()));
        }
    }
}
