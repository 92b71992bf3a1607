//! System descriptions and planar configurations.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::sums::lattice_sum;
use crate::{Error, Result};

/// On-site nonlinearity `h(s)` of an oscillator ring, with `s = |q|²`.
///
/// Implementations are shared across threads.
pub trait OnSitePotential: Send + Sync + fmt::Debug {
    fn h(&self, s: f64) -> f64;
    fn dh(&self, s: f64) -> f64;
    /// `∫_0^s h(t) dt` when known in closed form.
    fn integral(&self, _s: f64) -> Option<f64> {
        None
    }
}

#[derive(Clone, Debug)]
pub enum DnlsPotential {
    /// `h(s) = s`.
    Cubic,
    /// `h(s) = 1 / (1 + s)`.
    Saturable,
    Custom(Arc<dyn OnSitePotential>),
}

impl DnlsPotential {
    pub fn h(&self, s: f64) -> f64 {
        match self {
            DnlsPotential::Cubic => s,
            DnlsPotential::Saturable => 1.0 / (1.0 + s),
            DnlsPotential::Custom(p) => p.h(s),
        }
    }

    pub fn dh(&self, s: f64) -> f64 {
        match self {
            DnlsPotential::Cubic => 1.0,
            DnlsPotential::Saturable => -1.0 / ((1.0 + s) * (1.0 + s)),
            DnlsPotential::Custom(p) => p.dh(s),
        }
    }

    /// `∫_0^s h`, by quadrature for custom potentials without a closed form.
    pub fn integral(&self, s: f64) -> f64 {
        match self {
            DnlsPotential::Cubic => 0.5 * s * s,
            DnlsPotential::Saturable => libm::log1p(s),
            DnlsPotential::Custom(p) => p
                .integral(s)
                .unwrap_or_else(|| crate::linalg::gauss_legendre(|t| p.h(t), s, 64)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DnlsPotential::Cubic => "cubic",
            DnlsPotential::Saturable => "saturable",
            DnlsPotential::Custom(_) => "custom",
        }
    }
}

#[derive(Clone, Debug)]
pub enum Family {
    /// Central body plus `n` unit bodies, pair potential with `φ'(r) = -r^{-alpha}`.
    Celestial { alpha: f64 },
    Dnls(DnlsPotential),
}

impl Family {
    pub fn vortex() -> Self {
        Family::Celestial { alpha: 1.0 }
    }

    pub fn body() -> Self {
        Family::Celestial { alpha: 2.0 }
    }

    pub fn has_center(&self) -> bool {
        matches!(self, Family::Celestial { .. })
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            Family::Celestial { alpha } => Some(*alpha),
            Family::Dnls(_) => None,
        }
    }
}

/// Coordinate layout: optional central point followed by the ring `1..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n: usize,
    pub has_center: bool,
}

impl Layout {
    pub fn points(&self) -> usize {
        self.n + usize::from(self.has_center)
    }

    /// Real dimension of configuration space.
    pub fn dim(&self) -> usize {
        2 * self.points()
    }

    /// Point slot of ring body `j`, taken modulo `n` (0 means `n`).
    pub fn ring_slot(&self, j: i64) -> usize {
        let n = self.n as i64;
        let jj = (j - 1).rem_euclid(n) as usize;
        jj + usize::from(self.has_center)
    }
}

#[derive(Clone, Debug)]
pub struct SystemSpec {
    family: Family,
    n: usize,
    mu: f64,
}

impl SystemSpec {
    pub fn new(family: Family, n: usize, mu: f64) -> Result<Self> {
        match &family {
            Family::Celestial { alpha } => {
                if !(*alpha >= 1.0) || !alpha.is_finite() {
                    return Err(Error::Domain(alloc::format!("alpha = {alpha} must be >= 1")));
                }
                if n < 2 {
                    return Err(Error::Domain(alloc::format!("celestial ring needs n >= 2, got {n}")));
                }
            }
            Family::Dnls(_) => {
                if n < 3 {
                    return Err(Error::Domain(alloc::format!("dNLS ring needs n >= 3, got {n}")));
                }
            }
        }
        if !mu.is_finite() {
            return Err(Error::Domain("mu must be finite".into()));
        }
        Ok(SystemSpec { family, n, mu })
    }

    pub fn vortex(n: usize, mu: f64) -> Result<Self> {
        Self::new(Family::vortex(), n, mu)
    }

    pub fn body(n: usize, mu: f64) -> Result<Self> {
        Self::new(Family::body(), n, mu)
    }

    pub fn celestial(alpha: f64, n: usize, mu: f64) -> Result<Self> {
        Self::new(Family::Celestial { alpha }, n, mu)
    }

    pub fn dnls(potential: DnlsPotential, n: usize, mu: f64) -> Result<Self> {
        Self::new(Family::Dnls(potential), n, mu)
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        SystemSpec { family: self.family.clone(), n: self.n, mu }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn zeta(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn layout(&self) -> Layout {
        Layout { n: self.n, has_center: self.family.has_center() }
    }

    /// `s_1` of the celestial family; zero for oscillator rings.
    pub fn s1(&self) -> f64 {
        match self.family {
            Family::Celestial { alpha } => lattice_sum(alpha, self.n, 1),
            Family::Dnls(_) => 0.0,
        }
    }

    /// Rotation frequency making the polygon an equilibrium, recomputed on every call.
    pub fn omega(&self) -> f64 {
        match &self.family {
            Family::Celestial { .. } => self.mu + self.s1(),
            Family::Dnls(p) => {
                let s = libm::sin(0.5 * self.zeta());
                4.0 * s * s - p.h(self.mu * self.mu)
            }
        }
    }
}

/// Planar positions: an optional central point and the ring bodies `1..=n`
/// (`ring[j - 1]` is body `j`).
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    pub center: Option<Complex64>,
    pub ring: Vec<Complex64>,
}

impl Configuration {
    pub fn layout(&self) -> Layout {
        Layout { n: self.ring.len(), has_center: self.center.is_some() }
    }

    /// All points in slot order (center first).
    pub fn points(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.center.iter().copied().chain(self.ring.iter().copied())
    }

    /// Body `j` of the ring, indices taken modulo `n`.
    pub fn body(&self, j: i64) -> Complex64 {
        let n = self.ring.len() as i64;
        self.ring[(j - 1).rem_euclid(n) as usize]
    }

    pub fn to_coords(&self) -> DVector<f64> {
        let pts: Vec<Complex64> = self.points().collect();
        DVector::from_fn(2 * pts.len(), |i, _| {
            let p = pts[i / 2];
            if i % 2 == 0 {
                p.re
            } else {
                p.im
            }
        })
    }

    pub fn from_coords(layout: Layout, coords: &[f64]) -> Self {
        assert_eq!(coords.len(), layout.dim(), "coordinate vector has wrong length");
        let mut pts = coords.chunks(2).map(|c| Complex64::new(c[0], c[1]));
        let center = if layout.has_center { pts.next() } else { None };
        Configuration { center, ring: pts.collect() }
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.points().map(|p| p.norm_sqr()).sum::<f64>())
    }

    /// Smallest pairwise distance and the slots realising it.
    pub fn min_distance(&self) -> (f64, usize, usize) {
        let pts: Vec<Complex64> = self.points().collect();
        let mut best = (f64::INFINITY, 0, 0);
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let d = (pts[i] - pts[j]).norm();
                if d < best.0 {
                    best = (d, i, j);
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_validates() {
        assert!(SystemSpec::celestial(0.9, 4, 1.0).is_err());
        assert!(SystemSpec::vortex(1, 1.0).is_err());
        assert!(SystemSpec::dnls(DnlsPotential::Cubic, 2, 1.0).is_err());
        assert!(SystemSpec::vortex(2, -3.0).is_ok());
        assert!(SystemSpec::vortex(5, f64::NAN).is_err());
    }

    #[test]
    fn omega_is_recomputed() {
        let s = SystemSpec::vortex(3, 1.0).unwrap();
        assert!((s.omega() - 2.0).abs() < 1e-14);
        assert!((s.with_mu(4.0).omega() - 5.0).abs() < 1e-14);
        let d = SystemSpec::dnls(DnlsPotential::Cubic, 4, 0.0).unwrap();
        assert!((d.omega() - 2.0).abs() < 1e-14);
        let b = SystemSpec::body(3, 0.5).unwrap();
        assert!((b.omega() - (0.5 + 1.0 / libm::sqrt(3.0))).abs() < 1e-14);
    }

    #[test]
    fn saturable_integral_matches_quadrature() {
        let q = crate::linalg::gauss_legendre(|t| 1.0 / (1.0 + t), 3.0, 64);
        assert!((DnlsPotential::Saturable.integral(3.0) - q).abs() < 1e-12);
    }

    #[test]
    fn ring_slots_wrap() {
        let l = Layout { n: 5, has_center: true };
        assert_eq!(l.ring_slot(1), 1);
        assert_eq!(l.ring_slot(5), 5);
        assert_eq!(l.ring_slot(0), 5);
        assert_eq!(l.ring_slot(-1), 4);
        assert_eq!(l.dim(), 12);
    }
}
