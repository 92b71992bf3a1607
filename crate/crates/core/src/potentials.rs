//! Potentials, gradients and Hessians of the celestial and dNLS families.
//!
//! Vectors are laid out as `(x_0, y_0, x_1, y_1, ...)` over the point slots of
//! [`Layout`](crate::system::Layout): the central body first (celestial only),
//! then ring bodies `1..=n`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;

use crate::linalg::{pairwise_sum, rot};
use crate::sums::{alpha_minus, alpha_plus, lattice_sum};
use crate::system::{Configuration, DnlsPotential, Family, Layout, SystemSpec};
use crate::{Error, Result};

/// Pairs closer than this are treated as a collision.
pub const COLLISION_DISTANCE: f64 = 1e-9;

/// Default finite-difference step of [`hessian_fd`].
pub const FD_STEP: f64 = 1e-5;

/// The regular polygon `a_j = e^{ijζ}` (plus `a_0 = 0` for celestial rings) and its frequency.
pub fn polygon_config(spec: &SystemSpec) -> (Configuration, f64) {
    let zeta = spec.zeta();
    let ring = (1..=spec.n())
        .map(|j| {
            if j == spec.n() {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::from_polar(1.0, j as f64 * zeta)
            }
        })
        .collect();
    let center = spec.family().has_center().then(|| Complex64::new(0.0, 0.0));
    (Configuration { center, ring }, spec.omega())
}

/// Polygon as a coordinate vector.
pub fn polygon_coords(spec: &SystemSpec) -> DVector<f64> {
    polygon_config(spec).0.to_coords()
}

fn point(x: &[f64], slot: usize) -> Vector2<f64> {
    Vector2::new(x[2 * slot], x[2 * slot + 1])
}

fn check_layout(spec: &SystemSpec, x: &[f64]) {
    assert_eq!(x.len(), spec.layout().dim(), "coordinate vector does not match the system layout");
}

/// Weight of a point slot: `mu` for the central body, 1 otherwise.
fn weight(spec: &SystemSpec, slot: usize) -> f64 {
    if spec.family().has_center() && slot == 0 {
        spec.mu()
    } else {
        1.0
    }
}

fn collision_check(x: &[f64], points: usize) -> Result<()> {
    for i in 0..points {
        for j in i + 1..points {
            let d = (point(x, i) - point(x, j)).norm();
            if d < COLLISION_DISTANCE {
                return Err(Error::SingularInput { i, j, distance: d });
            }
        }
    }
    Ok(())
}

fn phi(alpha: f64, r: f64) -> f64 {
    if alpha == 1.0 {
        -libm::log(r)
    } else {
        libm::pow(r, 1.0 - alpha) / (alpha - 1.0)
    }
}

/// On-site energy `H(x) = ω|x|²/2 + ½∫_0^{|x|²} h(μ² s) ds`.
fn onsite_energy(p: &DnlsPotential, omega: f64, mu: f64, r2: f64) -> f64 {
    let m2 = mu * mu;
    let tail = if m2 * r2 > 0.0 && m2 > 1e-8 {
        p.integral(m2 * r2) / m2
    } else {
        crate::linalg::gauss_legendre(|s| p.h(m2 * s), r2, 16)
    };
    0.5 * omega * r2 + 0.5 * tail
}

pub(crate) fn value_coords(spec: &SystemSpec, x: &[f64]) -> Result<f64> {
    check_layout(spec, x);
    let layout = spec.layout();
    let omega = spec.omega();
    let mu = spec.mu();
    match spec.family() {
        Family::Celestial { alpha } => {
            collision_check(x, layout.points())?;
            let mut terms = Vec::with_capacity(layout.points() * (layout.points() + 1) / 2);
            for i in 0..layout.points() {
                let wi = weight(spec, i);
                terms.push(0.5 * omega * wi * point(x, i).norm_squared());
                for j in i + 1..layout.points() {
                    let d = (point(x, i) - point(x, j)).norm();
                    terms.push(wi * weight(spec, j) * phi(*alpha, d));
                }
            }
            Ok(pairwise_sum(&terms))
        }
        Family::Dnls(p) => {
            let n = layout.n;
            let mut terms = Vec::with_capacity(2 * n);
            for j in 0..n {
                let q = point(x, j);
                let next = point(x, (j + 1) % n);
                terms.push(onsite_energy(p, omega, mu, q.norm_squared()));
                terms.push(-0.5 * (next - q).norm_squared());
            }
            Ok(pairwise_sum(&terms))
        }
    }
}

pub(crate) fn gradient_coords(spec: &SystemSpec, x: &[f64]) -> Result<DVector<f64>> {
    check_layout(spec, x);
    let layout = spec.layout();
    let omega = spec.omega();
    let mut g = DVector::zeros(layout.dim());
    match spec.family() {
        Family::Celestial { alpha } => {
            collision_check(x, layout.points())?;
            for i in 0..layout.points() {
                let xi = point(x, i);
                let mut acc = omega * weight(spec, i) * xi;
                for j in 0..layout.points() {
                    if j == i {
                        continue;
                    }
                    let delta = xi - point(x, j);
                    let d = delta.norm();
                    acc -= weight(spec, i) * weight(spec, j) * delta / libm::pow(d, alpha + 1.0);
                }
                g.fixed_rows_mut::<2>(2 * i).copy_from(&acc);
            }
        }
        Family::Dnls(p) => {
            let n = layout.n;
            let m2 = spec.mu() * spec.mu();
            for j in 0..n {
                let q = point(x, j);
                let lap = point(x, (j + 1) % n) - 2.0 * q + point(x, (j + n - 1) % n);
                let acc = (omega + p.h(m2 * q.norm_squared())) * q + lap;
                g.fixed_rows_mut::<2>(2 * j).copy_from(&acc);
            }
        }
    }
    Ok(g)
}

pub(crate) fn hessian_coords(spec: &SystemSpec, x: &[f64]) -> Result<DMatrix<f64>> {
    check_layout(spec, x);
    let layout = spec.layout();
    let omega = spec.omega();
    let dim = layout.dim();
    let mut h = DMatrix::zeros(dim, dim);
    match spec.family() {
        Family::Celestial { alpha } => {
            collision_check(x, layout.points())?;
            for i in 0..layout.points() {
                let wi = weight(spec, i);
                let mut diag = omega * wi * Matrix2::identity();
                for j in 0..layout.points() {
                    if j == i {
                        continue;
                    }
                    let delta = point(x, i) - point(x, j);
                    let d = delta.norm();
                    let m = wi * weight(spec, j);
                    let block = m
                        * ((alpha + 1.0) * delta * delta.transpose() / libm::pow(d, alpha + 3.0)
                            - Matrix2::identity() / libm::pow(d, alpha + 1.0));
                    diag += block;
                    h.fixed_view_mut::<2, 2>(2 * i, 2 * j).copy_from(&(-block));
                }
                h.fixed_view_mut::<2, 2>(2 * i, 2 * i).copy_from(&diag);
            }
        }
        Family::Dnls(p) => {
            let n = layout.n;
            let m2 = spec.mu() * spec.mu();
            for j in 0..n {
                let q = point(x, j);
                let s = m2 * q.norm_squared();
                let diag = (omega + p.h(s) - 2.0) * Matrix2::identity()
                    + 2.0 * m2 * p.dh(s) * q * q.transpose();
                let mut view = h.fixed_view_mut::<2, 2>(2 * j, 2 * j);
                view += diag;
                for nb in [(j + 1) % n, (j + n - 1) % n] {
                    let mut view = h.fixed_view_mut::<2, 2>(2 * j, 2 * nb);
                    view += Matrix2::identity();
                }
            }
        }
    }
    Ok(h)
}

/// `∂/∂μ` of the gradient, with `ω` following `μ`.
pub(crate) fn dgrad_dmu_coords(spec: &SystemSpec, x: &[f64]) -> Result<DVector<f64>> {
    check_layout(spec, x);
    let layout = spec.layout();
    let mu = spec.mu();
    let mut g = DVector::zeros(layout.dim());
    match spec.family() {
        Family::Celestial { alpha } => {
            collision_check(x, layout.points())?;
            let x0 = point(x, 0);
            let mut c = (2.0 * mu + spec.s1()) * x0;
            for j in 1..layout.points() {
                let delta = x0 - point(x, j);
                let f = delta / libm::pow(delta.norm(), alpha + 1.0);
                c -= f;
                let r = point(x, j) + f;
                g.fixed_rows_mut::<2>(2 * j).copy_from(&r);
            }
            g.fixed_rows_mut::<2>(0).copy_from(&c);
        }
        Family::Dnls(p) => {
            let m2 = mu * mu;
            let domega = -2.0 * mu * p.dh(m2);
            for j in 0..layout.n {
                let q = point(x, j);
                let r2 = q.norm_squared();
                let v = (domega + p.dh(m2 * r2) * 2.0 * mu * r2) * q;
                g.fixed_rows_mut::<2>(2 * j).copy_from(&v);
            }
        }
    }
    Ok(g)
}

/// Potential `V` at `x`.
pub fn potential_value(spec: &SystemSpec, x: &Configuration) -> Result<f64> {
    value_coords(spec, x.to_coords().as_slice())
}

/// `∇V` at `x`, in coordinate order.
pub fn gradient(spec: &SystemSpec, x: &Configuration) -> Result<DVector<f64>> {
    gradient_coords(spec, x.to_coords().as_slice())
}

/// Analytic `D²V` at an arbitrary collision-free `x`.
pub fn hessian_at(spec: &SystemSpec, x: &Configuration) -> Result<DMatrix<f64>> {
    hessian_coords(spec, x.to_coords().as_slice())
}

/// Derivative of `∇V` with respect to the parameter `μ`.
pub fn dgrad_dmu(spec: &SystemSpec, x: &Configuration) -> Result<DVector<f64>> {
    dgrad_dmu_coords(spec, x.to_coords().as_slice())
}

/// Central-difference Hessian of [`potential_value`], symmetrised.
pub fn hessian_fd(spec: &SystemSpec, x: &Configuration, step: f64) -> Result<DMatrix<f64>> {
    if !(1e-7..=1e-3).contains(&step) {
        return Err(Error::Domain(alloc::format!("step {step:e} outside [1e-7, 1e-3]")));
    }
    let base = x.to_coords();
    let dim = base.len();
    let v = |dx: &[(usize, f64)]| -> Result<f64> {
        let mut y = base.clone();
        for &(i, d) in dx {
            y[i] += d;
        }
        value_coords(spec, y.as_slice())
    };
    let v0 = v(&[])?;
    let mut h = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let d = (v(&[(i, step)])? - 2.0 * v0 + v(&[(i, -step)])?) / (step * step);
        h[(i, i)] = d;
        for j in i + 1..dim {
            let pp = v(&[(i, step), (j, step)])?;
            let pm = v(&[(i, step), (j, -step)])?;
            let mp = v(&[(i, -step), (j, step)])?;
            let mm = v(&[(i, -step), (j, -step)])?;
            let e = (pp - pm - mp + mm) / (4.0 * step * step);
            h[(i, j)] = e;
            h[(j, i)] = e;
        }
    }
    Ok(h)
}

/// Richardson-extrapolated [`hessian_fd`] from steps `step` and `step / 2`.
pub fn hessian_fd_richardson(spec: &SystemSpec, x: &Configuration, step: f64) -> Result<DMatrix<f64>> {
    let coarse = hessian_fd(spec, x, step)?;
    let fine = hessian_fd(spec, x, 0.5 * step)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Distinct 2×2 blocks of the Hessian at the polygon.
///
/// `anj[j - 1]` holds `A_{nj}` for `j = 1..n-1`; `a00` and `an0` are present
/// only for celestial rings.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianBlocks {
    pub n: usize,
    pub a00: Option<Matrix2<f64>>,
    pub an0: Option<Matrix2<f64>>,
    pub anj: Vec<Matrix2<f64>>,
    pub ann: Matrix2<f64>,
}

impl HessianBlocks {
    /// `A_{n,j}` with `j` taken modulo `n` (0 gives `A_{nn}`).
    pub fn ring_block(&self, j: i64) -> Matrix2<f64> {
        let j = j.rem_euclid(self.n as i64) as usize;
        if j == 0 {
            self.ann
        } else {
            self.anj[j - 1]
        }
    }

    pub fn layout(&self) -> Layout {
        Layout { n: self.n, has_center: self.a00.is_some() }
    }

    /// Full Hessian from the blocks via `A_{lj} = e^{lJζ} A_{n,j-l} e^{-lJζ}`.
    pub fn assemble(&self) -> DMatrix<f64> {
        let layout = self.layout();
        let n = self.n;
        let zeta = 2.0 * core::f64::consts::PI / n as f64;
        let mut h = DMatrix::zeros(layout.dim(), layout.dim());
        let off = usize::from(layout.has_center);
        for l in 1..=n {
            let r = rot(l as f64 * zeta);
            let rt = r.transpose();
            let sl = off + l - 1;
            for j in 1..=n {
                let sj = off + j - 1;
                let b = r * self.ring_block(j as i64 - l as i64) * rt;
                h.fixed_view_mut::<2, 2>(2 * sl, 2 * sj).copy_from(&b);
            }
            if let Some(an0) = self.an0 {
                let b = r * an0 * rt;
                h.fixed_view_mut::<2, 2>(2 * sl, 0).copy_from(&b);
                h.fixed_view_mut::<2, 2>(0, 2 * sl).copy_from(&b.transpose());
            }
        }
        if let Some(a00) = self.a00 {
            h.fixed_view_mut::<2, 2>(0, 0).copy_from(&a00);
        }
        h
    }
}

/// Hessian blocks at the polygon from their closed forms.
pub fn hessian_analytic(spec: &SystemSpec) -> HessianBlocks {
    let n = spec.n();
    let nf = n as f64;
    let zeta = spec.zeta();
    let mu = spec.mu();
    let reflect = Matrix2::new(1.0, 0.0, 0.0, -1.0);
    let id = Matrix2::<f64>::identity();
    match spec.family() {
        Family::Celestial { alpha } => {
            let (am, ap) = (alpha_minus(*alpha), alpha_plus(*alpha));
            let s1 = lattice_sum(*alpha, n, 1);
            let an0 = -mu * (am * id + ap * reflect);
            let anj: Vec<Matrix2<f64>> = (1..n)
                .map(|j| {
                    if n == 2 {
                        -libm::pow(2.0, -(alpha + 1.0)) * Matrix2::new(*alpha, 0.0, 0.0, -1.0)
                    } else {
                        let d = 2.0 * libm::sin(0.5 * j as f64 * zeta);
                        (-am * id + ap * rot(j as f64 * zeta) * reflect) / libm::pow(d, alpha + 1.0)
                    }
                })
                .collect();
            let a00 = if n == 2 {
                (s1 + mu) * mu * id - 2.0 * an0
            } else {
                mu * (s1 + mu + am * nf) * id
            };
            let ann = (s1 + mu) * id - an0 - anj.iter().sum::<Matrix2<f64>>();
            HessianBlocks { n, a00: Some(a00), an0: Some(an0), anj, ann }
        }
        Family::Dnls(p) => {
            let m2 = mu * mu;
            let anj = (1..n)
                .map(|j| if j == 1 || j == n - 1 { id } else { Matrix2::zeros() })
                .collect();
            let ann = -2.0 * libm::cos(zeta) * id + 2.0 * m2 * p.dh(m2) * Matrix2::new(1.0, 0.0, 0.0, 0.0);
            HessianBlocks { n, a00: None, an0: None, anj, ann }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn families() -> Vec<Family> {
        alloc::vec![
            Family::vortex(),
            Family::body(),
            Family::Celestial { alpha: 2.5 },
            Family::Dnls(DnlsPotential::Cubic),
            Family::Dnls(DnlsPotential::Saturable),
        ]
    }

    fn specs(ns: core::ops::RangeInclusive<usize>, mus: &[f64]) -> Vec<SystemSpec> {
        let mut out = Vec::new();
        for f in families() {
            for n in ns.clone() {
                for &mu in mus {
                    if let Ok(s) = SystemSpec::new(f.clone(), n, mu) {
                        out.push(s);
                    }
                }
            }
        }
        out
    }

    fn perturbed(spec: &SystemSpec, seed: u64, size: f64) -> Configuration {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = polygon_coords(spec);
        for v in x.iter_mut() {
            *v += rng.gen_range(-size..size);
        }
        Configuration::from_coords(spec.layout(), x.as_slice())
    }

    #[test]
    fn polygon_frequency_examples() {
        let (_, w) = polygon_config(&SystemSpec::vortex(3, 1.0).unwrap());
        assert!((w - 2.0).abs() < 1e-14);
        let (_, w) = polygon_config(&SystemSpec::dnls(DnlsPotential::Cubic, 4, 0.0).unwrap());
        assert!((w - 2.0).abs() < 1e-14);
        let (_, w) = polygon_config(&SystemSpec::body(3, 0.5).unwrap());
        let s1 = crate::sums::s_sum(2.0, 3, 1).unwrap();
        assert!((w - 0.5 - s1).abs() < 1e-14);
    }

    #[test]
    fn polygon_is_critical() {
        for spec in specs(2..=32, &[-2.0, -0.5, 0.0, 0.5, 1.0, 5.0]) {
            let (x, _) = polygon_config(&spec);
            let g = gradient(&spec, &x).unwrap();
            let scale = 1.0 + spec.mu().abs() + spec.s1();
            assert!(g.amax() <= 1e-12 * scale, "n={} mu={} |g|={:e}", spec.n(), spec.mu(), g.amax());
        }
    }

    #[test]
    fn vortex_triangle_value_by_hand() {
        // ω/2 (3 unit bodies at radius 1) - ln|a_i - a_j| over pairs; centre terms vanish.
        let spec = SystemSpec::vortex(3, 1.0).unwrap();
        let (x, w) = polygon_config(&spec);
        let side = libm::sqrt(3.0);
        let expected = 0.5 * w * 3.0 - 3.0 * libm::log(side);
        assert!((potential_value(&spec, &x).unwrap() - expected).abs() < 1e-13);
    }

    #[test]
    fn value_is_rotation_and_permutation_invariant() {
        for spec in specs(3..=7, &[0.7]) {
            let x = perturbed(&spec, 11, 0.1);
            let v = potential_value(&spec, &x).unwrap();
            let c = Complex64::from_polar(1.0, 0.37);
            let rotated = Configuration {
                center: x.center.map(|p| p * c),
                ring: x.ring.iter().map(|p| p * c).collect(),
            };
            assert!((potential_value(&spec, &rotated).unwrap() - v).abs() < 1e-12);
            let conj = Configuration {
                center: x.center.map(|p| p.conj()),
                ring: x.ring.iter().map(|p| p.conj()).collect(),
            };
            assert!((potential_value(&spec, &conj).unwrap() - v).abs() < 1e-12);
            let mut shifted = x.clone();
            shifted.ring.rotate_left(1);
            assert!((potential_value(&spec, &shifted).unwrap() - v).abs() < 1e-12);
            if spec.family().has_center() {
                let mut swapped = x.clone();
                swapped.ring.swap(0, 2);
                assert!((potential_value(&spec, &swapped).unwrap() - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_matches_value_differences() {
        for spec in specs(3..=6, &[-0.5, 1.3]) {
            let x = perturbed(&spec, 5, 0.15);
            let g = gradient(&spec, &x).unwrap();
            let base = x.to_coords();
            let h = 1e-6;
            for i in 0..base.len() {
                let mut p = base.clone();
                p[i] += h;
                let mut m = base.clone();
                m[i] -= h;
                let fd = (value_coords(&spec, p.as_slice()).unwrap()
                    - value_coords(&spec, m.as_slice()).unwrap())
                    / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-6, "component {i}: {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn gradient_and_dmu_match_differences() {
        for spec in specs(3..=5, &[-0.5, 0.8]) {
            let x = perturbed(&spec, 9, 0.1);
            let c = x.to_coords();
            let hess = hessian_at(&spec, &x).unwrap();
            let h = 1e-6;
            for i in 0..c.len() {
                let mut p = c.clone();
                p[i] += h;
                let mut m = c.clone();
                m[i] -= h;
                let col = (gradient_coords(&spec, p.as_slice()).unwrap()
                    - gradient_coords(&spec, m.as_slice()).unwrap())
                    / (2.0 * h);
                assert!((col - hess.column(i)).amax() < 1e-6);
            }
            let dmu = dgrad_dmu(&spec, &x).unwrap();
            let fd = (gradient(&spec.with_mu(spec.mu() + h), &x).unwrap()
                - gradient(&spec.with_mu(spec.mu() - h), &x).unwrap())
                / (2.0 * h);
            assert!((fd - dmu).amax() < 1e-6);
        }
    }

    #[test]
    fn gradient_is_equivariant() {
        for spec in specs(3..=8, &[0.4]) {
            let x = perturbed(&spec, 3, 0.1);
            let g = Configuration::from_coords(spec.layout(), gradient(&spec, &x).unwrap().as_slice());
            let c = Complex64::from_polar(1.0, -spec.zeta());
            let act = |y: &Configuration| {
                let mut ring: Vec<Complex64> = y.ring.iter().map(|p| p * c).collect();
                ring.rotate_left(1);
                Configuration { center: y.center.map(|p| p * c), ring }
            };
            let lhs = gradient(&spec, &act(&x)).unwrap();
            let rhs = act(&g).to_coords();
            assert!((lhs - rhs).amax() < 1e-12);
        }
    }

    #[test]
    fn collisions_are_rejected() {
        let spec = SystemSpec::vortex(3, 1.0).unwrap();
        let (mut x, _) = polygon_config(&spec);
        x.ring[1] = x.ring[0] + Complex64::new(1e-10, 0.0);
        assert!(matches!(gradient(&spec, &x), Err(Error::SingularInput { .. })));
        assert!(matches!(potential_value(&spec, &x), Err(Error::SingularInput { .. })));
        assert!(hessian_fd(&spec, &polygon_config(&spec).0, 1e-2).is_err());
    }

    #[test]
    fn vortex_center_block() {
        let spec = SystemSpec::vortex(5, 0.7).unwrap();
        let b = hessian_analytic(&spec);
        let an0 = b.an0.unwrap();
        assert!((an0 - Matrix2::new(-0.7, 0.0, 0.0, 0.7)).amax() < 1e-15);
    }

    #[test]
    fn dnls_far_blocks_vanish() {
        let spec = SystemSpec::dnls(DnlsPotential::Saturable, 9, 1.2).unwrap();
        let b = hessian_analytic(&spec);
        for j in 2..=7 {
            assert_eq!(b.ring_block(j), Matrix2::zeros());
        }
        assert_eq!(b.ring_block(1), Matrix2::identity());
        assert_eq!(b.ring_block(8), Matrix2::identity());
    }

    #[test]
    fn assembled_blocks_match_general_hessian() {
        for spec in specs(2..=32, &[-2.0, -0.5, 0.0, 0.5, 1.0, 5.0]) {
            let (x, _) = polygon_config(&spec);
            let a = hessian_analytic(&spec).assemble();
            let g = hessian_at(&spec, &x).unwrap();
            assert!(frobenius(&(&a - &g)) <= 1e-11 * (1.0 + frobenius(&g)), "n={}", spec.n());
            assert!(frobenius(&(&a - a.transpose())) <= 1e-12 * (1.0 + frobenius(&a)));
        }
    }

    #[test]
    fn row_sum_identity() {
        for spec in specs(3..=32, &[-0.5, 1.0]) {
            if let Family::Celestial { alpha } = spec.family() {
                let b = hessian_analytic(&spec);
                let s1 = crate::sums::s_sum(*alpha, spec.n(), 1).unwrap();
                let mut sum = b.an0.unwrap();
                for j in 1..spec.n() {
                    sum += b.ring_block(j as i64);
                }
                let resid = (b.ann - ((s1 + spec.mu()) * Matrix2::identity() - sum)).amax();
                assert!(resid <= 1e-12 * (1.0 + s1));
            }
        }
    }

    #[test]
    fn analytic_matches_fd_oracle() {
        for spec in specs(2..=8, &[-2.0, 0.5, 1.0]) {
            let (x, _) = polygon_config(&spec);
            let a = hessian_analytic(&spec).assemble();
            let fd = hessian_fd(&spec, &x, 1e-4).unwrap();
            assert!(frobenius(&(&fd - fd.transpose())) <= 1e-8);
            let rel = frobenius(&(&a - &fd)) / frobenius(&a);
            assert!(rel <= 1e-6, "n={} mu={} rel={rel:e}", spec.n(), spec.mu());
        }
    }

    #[test]
    fn body_four_fd_entrywise() {
        let spec = SystemSpec::body(4, 1.0).unwrap();
        let (x, _) = polygon_config(&spec);
        let a = hessian_analytic(&spec).assemble();
        let fd = hessian_fd_richardson(&spec, &x, 1e-3).unwrap();
        assert!((a - fd).amax() <= 1e-6);
    }

    #[test]
    fn dnls_cubic_five_fd() {
        let spec = SystemSpec::dnls(DnlsPotential::Cubic, 5, 1.0).unwrap();
        let (x, _) = polygon_config(&spec);
        let a = hessian_analytic(&spec).assemble();
        let fd = hessian_fd(&spec, &x, 1e-4).unwrap();
        assert!((a - fd).amax() <= 1e-6);
    }

    #[test]
    fn custom_potential_uses_quadrature() {
        #[derive(Debug)]
        struct Quad;
        impl crate::OnSitePotential for Quad {
            fn h(&self, s: f64) -> f64 {
                s + 0.1 * s * s
            }
            fn dh(&self, s: f64) -> f64 {
                1.0 + 0.2 * s
            }
        }
        let spec = SystemSpec::dnls(DnlsPotential::Custom(alloc::sync::Arc::new(Quad)), 5, 0.9).unwrap();
        let x = perturbed(&spec, 2, 0.2);
        let c = x.to_coords();
        let g = gradient(&spec, &x).unwrap();
        let h = 1e-6;
        for i in 0..c.len() {
            let mut p = c.clone();
            p[i] += h;
            let mut m = c.clone();
            m[i] -= h;
            let fd = (value_coords(&spec, p.as_slice()).unwrap() - value_coords(&spec, m.as_slice()).unwrap())
                / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6);
        }
    }
}
