//! Small numeric helpers shared by the modules.

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;

/// Pairwise (cascade) summation; error grows like `log n` instead of `n`.
pub(crate) fn pairwise_sum(terms: &[f64]) -> f64 {
    const BASE: usize = 8;
    if terms.len() <= BASE {
        return terms.iter().sum();
    }
    let mid = terms.len() / 2;
    pairwise_sum(&terms[..mid]) + pairwise_sum(&terms[mid..])
}

/// `e^{J theta}`, counter-clockwise rotation.
pub(crate) fn rot(theta: f64) -> Matrix2<f64> {
    let (s, c) = (libm::sin(theta), libm::cos(theta));
    Matrix2::new(c, -s, s, c)
}

pub(crate) fn frobenius(m: &DMatrix<f64>) -> f64 {
    libm::sqrt(m.iter().map(|v| v * v).sum::<f64>())
}

pub(crate) fn frobenius_c(m: &DMatrix<Complex64>) -> f64 {
    libm::sqrt(m.iter().map(|v| v.norm_sqr()).sum::<f64>())
}

pub(crate) fn norm(v: &DVector<f64>) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum::<f64>())
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Sign with a dead zone: values with `|x| <= tol` map to zero.
pub(crate) fn sign_tol(x: f64, tol: f64) -> i8 {
    if x.abs() <= tol {
        0
    } else if x > 0.0 {
        1
    } else {
        -1
    }
}

/// Smallest singular value, or zero for an empty matrix.
pub(crate) fn min_singular(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Composite 5-point Gauss–Legendre quadrature of `f` over `[0, b]`.
pub(crate) fn gauss_legendre(f: impl Fn(f64) -> f64, b: f64, panels: usize) -> f64 {
    const NODES: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const WEIGHTS: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_47,
        0.478_628_670_499_366_47,
        0.236_926_885_056_189_08,
        0.236_926_885_056_189_08,
    ];
    let width = b / panels as f64;
    let mut acc = alloc::vec::Vec::with_capacity(panels);
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * width;
        let half = 0.5 * width;
        let s: f64 = NODES
            .iter()
            .zip(WEIGHTS.iter())
            .map(|(x, w)| w * f(mid + half * x))
            .sum();
        acc.push(s * half);
    }
    pairwise_sum(&acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let v: alloc::vec::Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 5050.0);
    }

    #[test]
    fn quadrature_is_exact_for_low_degree() {
        let q = gauss_legendre(|x| 3.0 * x * x + 1.0, 2.0, 3);
        assert!((q - 10.0).abs() < 1e-13);
    }

    #[test]
    fn rotation_composes() {
        let r = rot(0.3) * rot(0.4);
        assert!((r - rot(0.7)).abs().max() < 1e-15);
    }
}
