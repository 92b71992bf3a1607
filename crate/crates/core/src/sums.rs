//! Lattice sums of the regular polygon and the coefficients built from them.
//!
//! With `zeta = 2π/n`,
//!
//! ```text
//! s_k = 2^{-alpha} Σ_{j=1}^{n-1} sin²(k j zeta / 2) / sin^{alpha+1}(j zeta / 2)
//! ```
//!
//! and `s̄_k` is the same sum with `alpha - 2` in place of `alpha`. Direct
//! summation is the reference; [`s_via_recurrence`] is the fast path that only
//! uses `s_1` and the `s̄_h`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::linalg::pairwise_sum;
use crate::{Error, Result};

/// `(alpha + 1) / 2`.
pub fn alpha_plus(alpha: f64) -> f64 {
    0.5 * (alpha + 1.0)
}

/// `(alpha - 1) / 2`.
pub fn alpha_minus(alpha: f64) -> f64 {
    0.5 * (alpha - 1.0)
}

/// Reduce `k` modulo `n` and fold onto `[0, n/2]` using `s_k = s_{n-k}`.
fn fold_mode(n: usize, k: i64) -> usize {
    let r = k.rem_euclid(n as i64) as usize;
    r.min(n - r)
}

/// `sin(π m / n)` with the rounding of `π` and of `m / n` compensated.
fn sin_pi_frac(m: usize, n: usize) -> f64 {
    const PI_LO: f64 = 1.224_646_799_147_353_2e-16;
    let m = m.min(n - m) as f64;
    let nf = n as f64;
    let r = m / nf;
    let r_lo = libm::fma(-r, nf, m) / nf;
    let hi = PI * r;
    let lo = libm::fma(PI, r, -hi) + PI_LO * r + PI * r_lo;
    libm::sin(hi) + libm::cos(hi) * lo
}

/// Raw sum for an arbitrary real exponent; no domain checks.
pub(crate) fn lattice_sum(exponent: f64, n: usize, k: i64) -> f64 {
    let k = fold_mode(n, k);
    if k == 0 {
        return 0.0;
    }
    let power = exponent + 1.0;
    let terms: Vec<f64> = (1..n)
        .map(|j| {
            // sin² has period π, so the argument is reduced exactly in integers.
            let num = sin_pi_frac((k * j) % n, n);
            let base = sin_pi_frac(j, n);
            let den = if power == 0.0 { 1.0 } else { libm::pow(base, power) };
            num * num / den
        })
        .collect();
    pairwise_sum(&terms) / libm::pow(2.0, exponent)
}

fn check_domain(alpha: f64, n: usize) -> Result<()> {
    if !(alpha >= 1.0) || !alpha.is_finite() {
        return Err(Error::Domain(alloc::format!("alpha = {alpha} must be >= 1")));
    }
    if n < 2 {
        return Err(Error::Domain(alloc::format!("n = {n} must be >= 2")));
    }
    Ok(())
}

/// Direct evaluation of `s_k`. `k` may be any integer; it is reduced modulo `n`.
pub fn s_sum(alpha: f64, n: usize, k: i64) -> Result<f64> {
    check_domain(alpha, n)?;
    Ok(lattice_sum(alpha, n, k))
}

/// `s̄_k`: the lattice sum with exponent `alpha - 2`.
pub fn s_bar(alpha: f64, n: usize, k: i64) -> Result<f64> {
    check_domain(alpha, n)?;
    Ok(lattice_sum(alpha - 2.0, n, k))
}

/// `s_0, …, s_{k_max}` from `s_{k+1} - s_k = (2k+1) s_1 - Σ_{h≤k} s̄_h`.
///
/// The recurrence is run up to `⌊n/2⌋` and mirrored with `s_k = s_{n-k}` beyond,
/// which keeps the cancellation in `k² s_1 - Σ l s̄_{k-l}` bounded.
pub fn s_via_recurrence(alpha: f64, n: usize, k_max: usize) -> Result<Vec<f64>> {
    check_domain(alpha, n)?;
    if k_max > n {
        return Err(Error::Domain(alloc::format!("k_max = {k_max} exceeds n = {n}")));
    }
    let half = n / 2;
    let s1 = lattice_sum(alpha, n, 1);
    let mut low = Vec::with_capacity(half + 1);
    low.push(0.0);
    let mut bar_acc = 0.0;
    for k in 0..half.min(k_max) {
        if k >= 1 {
            bar_acc += lattice_sum(alpha - 2.0, n, k as i64);
        }
        let next = low[k] + (2 * k + 1) as f64 * s1 - bar_acc;
        low.push(next);
    }
    Ok((0..=k_max)
        .map(|k| {
            let folded = k.min(n - k);
            low[folded]
        })
        .collect())
}

/// Block coefficients of the gravitational/vortex family for mode `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CelestialCoeffs {
    pub alpha_k: f64,
    pub beta_k: f64,
    pub gamma_k: f64,
    pub s1: f64,
    pub sk: f64,
}

/// `alpha_k = (α₋/2)(s_{k+1}+s_{k-1})`, `beta_k = α₊(s_k - s_1)`,
/// `gamma_k = (α₋/2)(s_{k+1}-s_{k-1})`.
pub fn celestial_coeffs(alpha: f64, n: usize, k: usize) -> Result<CelestialCoeffs> {
    check_domain(alpha, n)?;
    if n < 3 || k == 0 || k > n {
        return Err(Error::Domain(alloc::format!(
            "celestial coefficients need n >= 3 and 1 <= k <= n (n = {n}, k = {k})"
        )));
    }
    let k = k as i64;
    let s = |m: i64| lattice_sum(alpha, n, m);
    let (s1, sk, sp, sm) = (s(1), s(k), s(k + 1), s(k - 1));
    let am = alpha_minus(alpha);
    Ok(CelestialCoeffs {
        alpha_k: 0.5 * am * (sp + sm),
        beta_k: alpha_plus(alpha) * (sk - s1),
        gamma_k: 0.5 * am * (sp - sm),
        s1,
        sk,
    })
}

/// Block coefficients of the oscillator ring for mode `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DnlsCoeffs {
    pub alpha_k: f64,
    pub gamma_k: f64,
    pub delta_k: f64,
}

/// `4 cos ζ sin²(kζ/2)`.
pub fn dnls_alpha(n: usize, k: usize) -> f64 {
    let zeta = 2.0 * PI / n as f64;
    let s = libm::sin(PI * (k % n) as f64 / n as f64);
    4.0 * libm::cos(zeta) * s * s
}

/// `2 sin(kζ) sin ζ`.
pub fn dnls_gamma(n: usize, k: usize) -> f64 {
    let zeta = 2.0 * PI / n as f64;
    2.0 * libm::sin(2.0 * PI * (k % n) as f64 / n as f64) * libm::sin(zeta)
}

const DEGENERATE_ALPHA: f64 = 1e-12;

/// `alpha_k`, `gamma_k` and the threshold `delta_k = (alpha_k² - gamma_k²)/(2 alpha_k)`.
///
/// `delta_k` is evaluated in the factored form `2(sin²(kζ/2) - sin²ζ)/cos ζ`, so
/// `delta_2` is exactly zero.
pub fn dnls_coeffs(n: usize, k: usize) -> Result<DnlsCoeffs> {
    if n < 3 {
        return Err(Error::Domain(alloc::format!("dNLS ring needs n >= 3 (n = {n})")));
    }
    let alpha_k = dnls_alpha(n, k);
    let gamma_k = dnls_gamma(n, k);
    if alpha_k.abs() < DEGENERATE_ALPHA {
        return Err(Error::DegenerateMode { k });
    }
    let zeta = 2.0 * PI / n as f64;
    let half = libm::sin(PI * (k % n) as f64 / n as f64);
    let sz = libm::sin(zeta);
    let delta_k = 2.0 * (half * half - sz * sz) / libm::cos(zeta);
    Ok(DnlsCoeffs { alpha_k, gamma_k, delta_k })
}

/// Checks `4 s_k - s̄_k > 0` and `b_k > 0` for `2 <= k <= n/2`.
///
/// Both are used (without proof) to fix the sign of `sigma_k`; a violation is
/// reported as an error rather than silently producing a wrong sign.
pub fn positivity_check(alpha: f64, n: usize) -> Result<()> {
    check_domain(alpha, n)?;
    for k in 2..=n / 2 {
        let sk = lattice_sum(alpha, n, k as i64);
        let sbar = lattice_sum(alpha - 2.0, n, k as i64);
        if !(4.0 * sk - sbar > 0.0) {
            return Err(Error::Positivity(alloc::format!(
                "4 s_k - s̄_k = {} for alpha = {alpha}, n = {n}, k = {k}",
                4.0 * sk - sbar
            )));
        }
        let c = celestial_coeffs(alpha, n, k)?;
        let b = (alpha + 1.0) * (c.s1 + c.alpha_k + c.beta_k);
        if !(b > 0.0) {
            return Err(Error::Positivity(alloc::format!(
                "b_k = {b} for alpha = {alpha}, n = {n}, k = {k}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Independent oracle: the literal definition with unreduced arguments.
    fn oracle(exponent: f64, n: usize, k: i64) -> f64 {
        let zeta = 2.0 * PI / n as f64;
        let mut acc = 0.0;
        for j in 1..n {
            let a = libm::sin(k as f64 * j as f64 * zeta / 2.0);
            let b = libm::sin(j as f64 * zeta / 2.0);
            acc += a * a / libm::pow(b, exponent + 1.0);
        }
        acc / libm::pow(2.0, exponent)
    }

    #[test]
    fn frozen_examples() {
        assert_relative_eq!(s_sum(1.0, 5, 2).unwrap(), 3.0, epsilon = 1e-14);
        assert_eq!(s_sum(2.0, 3, 0).unwrap(), 0.0);
        assert_relative_eq!(s_sum(2.0, 3, 1).unwrap(), 1.0 / libm::sqrt(3.0), epsilon = 1e-15);
        assert_eq!(s_sum(2.0, 7, 7).unwrap(), 0.0);
        assert!(matches!(s_sum(0.5, 4, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn s_bar_examples() {
        // exponent -1: 2 Σ sin²(3jπ/5) = n
        assert_relative_eq!(s_bar(1.0, 5, 3).unwrap(), oracle(-1.0, 5, 3), epsilon = 1e-13);
        assert_relative_eq!(s_bar(1.0, 5, 3).unwrap(), 5.0, epsilon = 1e-13);
        for n in 3..20 {
            for k in 1..n as i64 {
                assert_relative_eq!(s_bar(1.0, n, k).unwrap(), n as f64, epsilon = 1e-12);
            }
        }
        assert_eq!(s_bar(2.5, 9, 0).unwrap(), 0.0);
    }

    #[test]
    fn recurrence_examples() {
        let v = s_via_recurrence(1.0, 7, 3).unwrap();
        for (a, b) in v.iter().zip([0.0, 3.0, 5.0, 6.0]) {
            assert_relative_eq!(*a, b, epsilon = 1e-13);
        }
        let v = s_via_recurrence(2.0, 11, 1).unwrap();
        assert_eq!(v.len(), 2);
        assert_relative_eq!(v[1], s_sum(2.0, 11, 1).unwrap(), epsilon = 0.0);
        let v = s_via_recurrence(2.0, 6, 3).unwrap();
        for (k, val) in v.iter().enumerate() {
            assert_relative_eq!(*val, oracle(2.0, 6, k as i64), max_relative = 1e-13);
        }
        assert!(s_via_recurrence(2.0, 6, 7).is_err());
    }

    #[test]
    fn recurrence_agrees_on_full_grid() {
        for &alpha in &[1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0] {
            for n in 3..=64 {
                let rec = s_via_recurrence(alpha, n, n).unwrap();
                for k in 0..=n {
                    let direct = s_sum(alpha, n, k as i64).unwrap();
                    assert!(
                        (rec[k] - direct).abs() <= 1e-12 * (1.0 + direct.abs()),
                        "alpha {alpha} n {n} k {k}: {} vs {}",
                        rec[k],
                        direct
                    );
                }
            }
        }
    }

    #[test]
    fn direct_sum_matches_oracle() {
        for &alpha in &[1.0, 2.0, 2.5, 4.0] {
            for n in [2usize, 3, 5, 8, 13, 32] {
                for k in -3..(n as i64 + 3) {
                    assert_relative_eq!(
                        s_sum(alpha, n, k).unwrap(),
                        oracle(alpha, n, k),
                        epsilon = 1e-12,
                        max_relative = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn vortex_closed_form() {
        for n in 3..=64usize {
            for k in 0..=n {
                let expected = (k * (n - k)) as f64 / 2.0;
                assert!((s_sum(1.0, n, k as i64).unwrap() - expected).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn second_difference_identity() {
        for &alpha in &[1.0, 2.0, 2.5, 4.0] {
            for n in 3..=64usize {
                let s1 = s_sum(alpha, n, 1).unwrap();
                for k in 1..n as i64 {
                    let (a, b, c) = (
                        s_sum(alpha, n, k + 1).unwrap(),
                        s_sum(alpha, n, k).unwrap(),
                        s_sum(alpha, n, k - 1).unwrap(),
                    );
                    let lhs = a - 2.0 * b + c;
                    let rhs = 2.0 * s1 - s_bar(alpha, n, k).unwrap();
                    let scale = 1.0 + a.abs() + b.abs() + c.abs() + s1.abs();
                    assert!((lhs - rhs).abs() <= 1e-12 * scale, "alpha {alpha} n {n} k {k}");
                }
            }
        }
    }

    #[test]
    fn celestial_coeff_examples() {
        let c = celestial_coeffs(1.0, 8, 3).unwrap();
        assert_eq!((c.alpha_k, c.gamma_k), (0.0, 0.0));
        assert_relative_eq!(c.beta_k, 4.0, epsilon = 1e-12);

        for &alpha in &[1.0, 2.0, 3.0] {
            let n = 7;
            let c = celestial_coeffs(alpha, n, n).unwrap();
            let s1 = s_sum(alpha, n, 1).unwrap();
            assert_relative_eq!(c.beta_k, -alpha_plus(alpha) * s1, max_relative = 1e-14);
            assert_relative_eq!(c.alpha_k, alpha_minus(alpha) * s1, max_relative = 1e-14);
        }

        let c = celestial_coeffs(2.0, 5, 2).unwrap();
        let (s1, s2, s3) = (oracle(2.0, 5, 1), oracle(2.0, 5, 2), oracle(2.0, 5, 3));
        assert_relative_eq!(c.alpha_k, 0.25 * (s3 + s1), max_relative = 1e-13);
        assert_relative_eq!(c.beta_k, 1.5 * (s2 - s1), max_relative = 1e-13);
        assert_relative_eq!(c.gamma_k, 0.25 * (s3 - s1), max_relative = 1e-13);
    }

    #[test]
    fn dnls_examples() {
        assert_eq!(dnls_coeffs(6, 2).unwrap().delta_k, 0.0);
        let c = dnls_coeffs(6, 3).unwrap();
        assert_relative_eq!(c.alpha_k, 2.0, epsilon = 1e-14);
        assert!(c.gamma_k.abs() < 1e-14);
        assert_relative_eq!(c.delta_k, 1.0, epsilon = 1e-14);
        // raw definition as an oracle
        let raw = (c.alpha_k * c.alpha_k - c.gamma_k * c.gamma_k) / (2.0 * c.alpha_k);
        assert_relative_eq!(raw, 1.0, epsilon = 1e-14);

        let d = dnls_coeffs(16, 1).unwrap().delta_k;
        let zeta = 2.0 * PI / 16.0;
        let closed = 2.0
            * (libm::pow(libm::sin(zeta / 2.0), 2.0) - libm::pow(libm::sin(zeta), 2.0))
            / libm::cos(zeta);
        assert_relative_eq!(d, closed, epsilon = 1e-15);
        assert!(d > -0.25 && d < 0.0);
        assert_relative_eq!(d, -0.234_633_135_269_820_5, epsilon = 1e-12);

        assert!(matches!(dnls_coeffs(4, 1), Err(Error::DegenerateMode { k: 1 })));
        assert!(matches!(dnls_coeffs(9, 9), Err(Error::DegenerateMode { .. })));
    }

    #[test]
    fn dnls_threshold_signs() {
        for n in 5..=64usize {
            assert!(dnls_coeffs(n, 2).unwrap().delta_k.abs() <= 1e-14);
            assert!(dnls_coeffs(n, 1).unwrap().delta_k < 0.0);
            let zeta = 2.0 * PI / n as f64;
            for k in 1..=n / 2 {
                let c = dnls_coeffs(n, k).unwrap();
                assert!(c.alpha_k >= 0.0);
                let raw = (c.alpha_k * c.alpha_k - c.gamma_k * c.gamma_k) / (2.0 * c.alpha_k);
                assert!((raw - c.delta_k).abs() <= 1e-12 * (1.0 + raw.abs()));
                let probe = libm::pow(libm::sin(k as f64 * zeta / 2.0), 2.0)
                    - libm::pow(libm::sin(zeta), 2.0);
                if k != 2 {
                    assert_eq!(c.delta_k > 0.0, probe > 0.0, "n {n} k {k}");
                }
                if k >= 3 {
                    assert!(c.delta_k > 0.0);
                }
            }
        }
    }

    #[test]
    fn positivity_holds_on_grid() {
        for &alpha in &[1.0, 1.5, 2.0, 2.5, 3.0, 4.0] {
            for n in 3..=64 {
                positivity_check(alpha, n).unwrap();
            }
        }
    }

    proptest! {
        #[test]
        fn mirror_symmetry(alpha in 1.0f64..4.0, n in 2usize..80, k in -200i64..200) {
            let a = s_sum(alpha, n, k).unwrap();
            prop_assert_eq!(a, s_sum(alpha, n, n as i64 - k).unwrap());
            prop_assert_eq!(a, s_sum(alpha, n, n as i64 + k).unwrap());
            prop_assert!(a >= 0.0);
        }
    }
}
