//! Sign indices, degree jumps and bifurcation values.
//!
//! For a divisor `h` of `n` the reduced gradient on `W^{D̃_h}` has Jacobian
//! sign `n_h(μ) = σ_n Π_{j ∈ hℕ ∩ [1, n/2]} σ_j`, and a change of `n_h` across
//! `μ_0` (`η_h(μ_0) = n_h(μ_0 - ρ) - n_h(μ_0 + ρ) = ±2`) forces a branch of
//! `D̃_h`-symmetric equilibria.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::linalg::{gcd, sign_tol};
use crate::potentials::hessian_analytic;
use crate::sums::{alpha_plus, celestial_coeffs, dnls_coeffs, CelestialCoeffs};
use crate::symmetry::formula_block;
use crate::system::{DnlsPotential, Family, SystemSpec};
use crate::{Error, Result};

/// Relative dead zone of the sign indices.
pub const SIGN_TOL: f64 = 1e-12;

/// Upper end of the `μ²` scan for custom on-site potentials.
pub const ROOT_SCAN_MAX: f64 = 1e4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Minus,
    Zero,
    Plus,
}

impl Sign {
    pub fn from_i8(s: i8) -> Self {
        match s.signum() {
            1 => Sign::Plus,
            -1 => Sign::Minus,
            _ => Sign::Zero,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Minus => -1,
            Sign::Zero => 0,
            Sign::Plus => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SignIndex {
    pub k: usize,
    pub sigma: Sign,
}

fn check_mode(n: usize, k: usize) {
    assert!(k == n || (1..=n / 2).contains(&k), "mode {k} outside [1, n/2] ∪ {{n}} for n = {n}");
}

/// Sign of `μ - root` with a dead zone relative to the root.
fn side(mu: f64, root: f64) -> i8 {
    sign_tol(mu - root, SIGN_TOL * root.abs().max(1.0))
}

fn complex(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `a_k` and `b_k` of `det B_k = b_k μ + a_k` for `2 <= k <= n/2`, or of the
/// reduced factor `b_1 (μ - μ_1)` for `k = 1`.
fn celestial_ab(alpha: f64, n: usize, k: usize) -> Result<(f64, f64, CelestialCoeffs)> {
    let c = celestial_coeffs(alpha, n, k)?;
    let nf = n as f64;
    if k == 1 {
        let a = (c.s1 + 2.0 * c.alpha_k) * (2.0 * c.s1 + nf * alpha - nf);
        let b = (alpha + 1.0) * (2.0 * c.s1 + 2.0 * c.alpha_k - nf);
        Ok((a, b, c))
    } else {
        let plus = c.s1 + c.alpha_k + c.beta_k;
        let minus = c.s1 + c.alpha_k - c.beta_k;
        Ok((minus * plus - c.gamma_k * c.gamma_k, (alpha + 1.0) * plus, c))
    }
}

/// The nontrivial celestial root `μ_k = -a_k / b_k` (`n >= 3`), or the `n = 2`
/// value `-(2α + s_1)/(α + 1)` for `k = 1`.
pub fn celestial_mu_k(alpha: f64, n: usize, k: usize) -> Result<f64> {
    if n == 2 {
        if k != 1 {
            return Err(Error::Domain(alloc::format!("n = 2 has a single nontrivial mode, got k = {k}")));
        }
        let s1 = crate::sums::s_sum(alpha, 2, 1)?;
        return Ok(-(2.0 * alpha + s1) / (alpha + 1.0));
    }
    if k == 0 || k > n / 2 {
        return Err(Error::Domain(alloc::format!("mode {k} outside [1, n/2] for n = {n}")));
    }
    let (a, b, _) = celestial_ab(alpha, n, k)?;
    Ok(-a / b)
}

/// `B_k` at parameter `μ` from the lattice-sum closed forms.
pub fn closed_form_block(spec: &SystemSpec, k: usize) -> Result<DMatrix<Complex64>> {
    let n = spec.n();
    let mu = spec.mu();
    match spec.family() {
        Family::Celestial { alpha } => {
            let alpha = *alpha;
            let s1 = spec.s1();
            if n == 2 {
                let r2 = core::f64::consts::SQRT_2;
                return Ok(match k {
                    1 => {
                        let mut b = DMatrix::zeros(4, 4);
                        b[(0, 0)] = complex(mu * (s1 + mu + 2.0 * alpha), 0.0);
                        b[(1, 1)] = complex(mu * (s1 + mu - 2.0), 0.0);
                        b[(2, 2)] = complex(s1 + (alpha + 1.0) * mu, 0.0);
                        b[(3, 3)] = complex(s1, 0.0);
                        b[(0, 2)] = complex(-r2 * alpha * mu, 0.0);
                        b[(2, 0)] = b[(0, 2)];
                        b[(1, 3)] = complex(r2 * mu, 0.0);
                        b[(3, 1)] = b[(1, 3)];
                        b
                    }
                    2 => DMatrix::from_row_slice(
                        2,
                        2,
                        &[complex((alpha + 1.0) * (mu + s1), 0.0), complex(0.0, 0.0), complex(0.0, 0.0), complex(0.0, 0.0)],
                    ),
                    _ => return Err(Error::Domain(alloc::format!("mode {k} outside 1..=2"))),
                });
            }
            if k == n - 1 && k != 1 {
                return Ok(closed_form_block(spec, 1)?.conjugate());
            }
            let c = celestial_coeffs(alpha, n, k)?;
            let ring = {
                let ap = alpha_plus(alpha) * mu;
                let d = s1 + c.alpha_k;
                // α₊μ(I+R) + (s₁+α_k)I − β_k R − γ_k iJ
                DMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        complex(2.0 * ap + d - c.beta_k, 0.0),
                        complex(0.0, c.gamma_k),
                        complex(0.0, -c.gamma_k),
                        complex(d + c.beta_k, 0.0),
                    ],
                )
            };
            if k == 1 {
                let nf = n as f64;
                let am = crate::sums::alpha_minus(alpha);
                let r = libm::sqrt(0.5 * nf) * mu;
                let mut b = DMatrix::zeros(3, 3);
                b[(0, 0)] = complex(mu * (s1 + mu + nf * am), 0.0);
                b[(1, 0)] = complex(-r * alpha, 0.0);
                b[(2, 0)] = complex(0.0, r);
                b[(0, 1)] = b[(1, 0)].conj();
                b[(0, 2)] = b[(2, 0)].conj();
                b.view_mut((1, 1), (2, 2)).copy_from(&ring);
                Ok(b)
            } else {
                Ok(ring)
            }
        }
        Family::Dnls(p) => {
            let dn = crate::sums::dnls_alpha(n, k);
            let gn = crate::sums::dnls_gamma(n, k);
            let c = 2.0 * mu * mu * p.dh(mu * mu);
            Ok(DMatrix::from_row_slice(
                2,
                2,
                &[complex(-dn + c, 0.0), complex(0.0, -gn), complex(0.0, gn), complex(-dn, 0.0)],
            ))
        }
    }
}

/// Restriction `D_k` of `B_k` to the `(κ, κ)`-fixed real coordinates of mode `k`.
pub fn reduced_block(b: &DMatrix<Complex64>, n: usize, k: usize) -> DMatrix<f64> {
    let d = b.nrows();
    if d == 4 {
        // n = 2: central and ring x-coordinates.
        let idx = [0usize, 2];
        return DMatrix::from_fn(2, 2, |i, j| b[(idx[i], idx[j])].re);
    }
    if k == n || 2 * k == n {
        return DMatrix::from_element(1, 1, b[(0, 0)].re);
    }
    let t: Vec<Complex64> = (0..d).map(|i| if i + 1 == d { complex(0.0, 1.0) } else { complex(1.0, 0.0) }).collect();
    DMatrix::from_fn(d, d, |i, j| (t[i].conj() * b[(i, j)] * t[j]).re)
}

/// `σ_k(μ)` from the closed forms.
pub fn sigma(spec: &SystemSpec, k: usize) -> SignIndex {
    let n = spec.n();
    check_mode(n, k);
    let mu = spec.mu();
    let s = match spec.family() {
        Family::Celestial { alpha } => {
            let alpha = *alpha;
            let s1 = spec.s1();
            if k == n {
                side(mu, -s1)
            } else if n == 2 {
                let mu1 = -(2.0 * alpha + s1) / (alpha + 1.0);
                side(mu, 0.0) * side(mu, -s1) * side(mu, mu1)
            } else if k == 1 {
                let (a, b, _) = celestial_ab(alpha, n, 1).expect("valid celestial spec");
                sign_tol(b, 0.0) * side(mu, 0.0) * side(mu, -s1) * side(mu, -a / b)
            } else {
                let (a, b, _) = celestial_ab(alpha, n, k).expect("valid celestial spec");
                sign_tol(b, 0.0) * side(mu, -a / b)
            }
        }
        Family::Dnls(p) => {
            let c = mu * mu * p.dh(mu * mu);
            if k == n {
                sign_tol(c, SIGN_TOL)
            } else {
                let dn = crate::sums::dnls_alpha(n, k);
                if 2 * k == n {
                    sign_tol(2.0 * c - dn, SIGN_TOL * (1.0 + dn.abs()))
                } else {
                    match dnls_coeffs(n, k) {
                        Ok(co) => sign_tol(co.alpha_k, 0.0) * sign_tol(co.delta_k - c, SIGN_TOL * (1.0 + co.delta_k.abs())),
                        Err(_) => {
                            let gn = crate::sums::dnls_gamma(n, k);
                            let det = dn * dn - gn * gn - 2.0 * dn * c;
                            sign_tol(det, SIGN_TOL * (1.0 + gn * gn))
                        }
                    }
                }
            }
        }
    };
    SignIndex { k, sigma: Sign::from_i8(s) }
}

/// `σ_k(μ)` from the determinant of the reduced block built from the Hessian blocks.
pub fn sigma_from_blocks(spec: &SystemSpec, k: usize) -> SignIndex {
    check_mode(spec.n(), k);
    let b = formula_block(&hessian_analytic(spec), k);
    let d = reduced_block(&b, spec.n(), k);
    let scale = d.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let det = d.determinant();
    SignIndex { k, sigma: Sign::from_i8(sign_tol(det, 1e-12 * libm::pow(scale, d.nrows() as f64))) }
}

/// Modes entering `n_h`: `hℕ ∩ [1, n/2]` and `n`.
pub fn relevant_modes(n: usize, h: usize) -> Vec<usize> {
    crate::symmetry::fixed_modes(n, h)
}

fn check_divisor(n: usize, h: usize) -> Result<()> {
    if h == 0 || n % h != 0 {
        Err(Error::InvalidDivisor { h, n })
    } else {
        Ok(())
    }
}

/// `n_h(μ) = σ_n Π σ_j` over the modes of `W^{D̃_h}`.
pub fn n_index(spec: &SystemSpec, h: usize) -> Result<i8> {
    check_divisor(spec.n(), h)?;
    Ok(relevant_modes(spec.n(), h).into_iter().map(|k| sigma(spec, k).sigma.as_i8()).product())
}

/// Positive roots `t` of `t h'(t) = δ`, with a flag for double roots.
fn onsite_roots(p: &DnlsPotential, delta: f64) -> (Vec<(f64, bool)>, Provenance) {
    match p {
        DnlsPotential::Cubic => (if delta > 0.0 { alloc::vec![(delta, true)] } else { Vec::new() }, Provenance::ClosedForm),
        DnlsPotential::Saturable => {
            // δ t² + (2δ + 1) t + δ = 0, product of roots 1.
            let mut out = Vec::new();
            if delta < 0.0 {
                let disc = 4.0 * delta + 1.0;
                if disc.abs() <= 1e-14 {
                    out.push((1.0, false));
                } else if disc > 0.0 {
                    let b = 2.0 * delta + 1.0;
                    let big = -(b + libm::sqrt(disc)) / (2.0 * delta);
                    out.push((1.0 / big, true));
                    out.push((big, true));
                }
            }
            (out, Provenance::ClosedForm)
        }
        DnlsPotential::Custom(q) => {
            let g = |t: f64| t * q.dh(t) - delta;
            const STEPS: usize = 4000;
            let lo = 1e-10f64;
            let ratio = libm::pow(ROOT_SCAN_MAX / lo, 1.0 / STEPS as f64);
            let ts: Vec<f64> = (0..=STEPS).map(|i| lo * libm::pow(ratio, i as f64)).collect();
            let gs: Vec<f64> = ts.iter().map(|&t| g(t)).collect();
            let mut out = Vec::new();
            for i in 0..STEPS {
                if gs[i] == 0.0 {
                    out.push((ts[i], true));
                } else if gs[i] * gs[i + 1] < 0.0 {
                    let (mut a, mut b) = (ts[i], ts[i + 1]);
                    let ga = gs[i];
                    while b - a > 1e-12 * b {
                        let m = 0.5 * (a + b);
                        if g(m) * ga > 0.0 {
                            a = m;
                        } else {
                            b = m;
                        }
                    }
                    out.push((0.5 * (a + b), true));
                } else if i > 0 && gs[i].abs() < gs[i - 1].abs() && gs[i].abs() <= gs[i + 1].abs() && gs[i - 1] * gs[i] > 0.0 {
                    // Touching without crossing: refine the minimum of |g| by ternary search.
                    let (mut a, mut b) = (ts[i - 1], ts[i + 1]);
                    while b - a > 1e-12 * b {
                        let m1 = a + (b - a) / 3.0;
                        let m2 = b - (b - a) / 3.0;
                        if g(m1).abs() < g(m2).abs() {
                            b = m2;
                        } else {
                            a = m1;
                        }
                    }
                    let t = 0.5 * (a + b);
                    if g(t).abs() <= 1e-10 * (1.0 + delta.abs()) {
                        out.push((t, false));
                    }
                }
            }
            (out, Provenance::RootSolve)
        }
    }
}

/// All parameter values where some `σ_j`, `j ∈ hℕ ∩ [1, n/2] ∪ {n}`, vanishes.
pub fn candidates(spec: &SystemSpec, h: usize) -> Result<Vec<f64>> {
    let n = spec.n();
    check_divisor(n, h)?;
    let mut out = Vec::new();
    for k in relevant_modes(n, h) {
        out.extend(mode_roots(spec, k)?.into_iter().map(|r| r.mu));
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs().max(1.0));
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    ClosedForm,
    RootSolve,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::ClosedForm => "closed_form",
            Provenance::RootSolve => "root_solve",
        }
    }
}

#[derive(Clone, Debug)]
struct ModeRoot {
    mu: f64,
    provenance: Provenance,
    simple: bool,
    trivial: bool,
    note: Option<&'static str>,
}

const NOTE_MASSLESS: &str = "central body has zero weight";
const NOTE_TRANSLATION: &str = "translations of the polygon with zero frequency";
const NOTE_HOMOTHETY: &str = "homotheties of the polygon with zero frequency";
const NOTE_DOUBLE: &str = "double root, degenerate crossing";

/// Zeros of `σ_k` (both signs of `μ` for oscillator rings).
fn mode_roots(spec: &SystemSpec, k: usize) -> Result<Vec<ModeRoot>> {
    let n = spec.n();
    let root = |mu, trivial, note| ModeRoot { mu, provenance: Provenance::ClosedForm, simple: true, trivial, note };
    match spec.family() {
        Family::Celestial { alpha } => {
            let s1 = spec.s1();
            if k == n {
                return Ok(alloc::vec![root(-s1, true, Some(NOTE_HOMOTHETY))]);
            }
            let mut out = Vec::new();
            if k == 1 {
                out.push(root(0.0, true, Some(NOTE_MASSLESS)));
                out.push(root(-s1, true, Some(NOTE_TRANSLATION)));
            }
            out.push(root(celestial_mu_k(*alpha, n, k)?, false, None));
            Ok(out)
        }
        Family::Dnls(p) => {
            if k == n {
                return Ok(alloc::vec![root(0.0, true, None)]);
            }
            let delta = match dnls_coeffs(n, k) {
                // A zero threshold is only reached at μ = 0, where σ_k does not change sign.
                Ok(c) if c.delta_k.abs() <= SIGN_TOL => return Ok(Vec::new()),
                Ok(c) => c.delta_k,
                Err(Error::DegenerateMode { .. }) => return Ok(Vec::new()),
                Err(e) => return Err(e),
            };
            let (ts, provenance) = onsite_roots(p, delta);
            let mut out = Vec::new();
            for (t, simple) in ts {
                let mu = libm::sqrt(t);
                let note = if simple { None } else { Some(NOTE_DOUBLE) };
                for m in [mu, -mu] {
                    out.push(ModeRoot { mu: m, provenance, simple, trivial: false, note });
                }
            }
            Ok(out)
        }
    }
}

/// `η_h(μ_0) = n_h(μ_0 - ρ) - n_h(μ_0 + ρ)`.
///
/// The open window `(μ_0 - ρ, μ_0 + ρ)` may hold at most one distinct candidate.
pub fn eta(spec: &SystemSpec, h: usize, mu0: f64, rho: f64) -> Result<i8> {
    if !(rho > 0.0) {
        return Err(Error::Domain(alloc::format!("window radius {rho} must be positive")));
    }
    let inside = candidates(spec, h)?.into_iter().filter(|c| (c - mu0).abs() < rho).count();
    if inside > 1 {
        return Err(Error::AmbiguousWindow { count: inside });
    }
    Ok(n_index(&spec.with_mu(mu0 - rho), h)? - n_index(&spec.with_mu(mu0 + rho), h)?)
}

/// Window radius used for a candidate: small, and below half the gap to its neighbours.
pub fn window_radius(spec: &SystemSpec, h: usize, mu0: f64) -> Result<f64> {
    let gap = candidates(spec, h)?
        .into_iter()
        .filter(|c| (c - mu0).abs() > 1e-9 * mu0.abs().max(1.0))
        .map(|c| (c - mu0).abs())
        .fold(f64::INFINITY, f64::min);
    Ok((1e-3 * mu0.abs().max(1.0)).min(0.45 * gap))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BifurcationPoint {
    pub k: usize,
    pub h: usize,
    pub mu: f64,
    pub eta: i8,
    pub provenance: Provenance,
    pub physical: bool,
    /// No other candidate of the same `n_h` coincides with this one and the root is not double.
    pub simple: bool,
    pub trivial: bool,
    pub note: Option<String>,
}

/// Every zero of `σ_k`, `k ∈ [1, n/2] ∪ {n}`, with its degree jump.
///
/// Celestial rings list the nontrivial `μ_k` together with the trivial
/// crossings at `μ = 0` and `μ = -s_1`; oscillator rings list the positive
/// amplitudes solving `μ² h'(μ²) = δ_k`.
pub fn bif_points(spec: &SystemSpec) -> Result<Vec<BifurcationPoint>> {
    let n = spec.n();
    let mut modes: Vec<usize> = (1..=n / 2).collect();
    if spec.family().has_center() {
        modes.push(n);
    }
    let mut out = Vec::new();
    for k in modes {
        let h = gcd(k, n);
        for r in mode_roots(spec, k)? {
            if !spec.family().has_center() && r.mu <= 0.0 {
                continue;
            }
            let others = relevant_modes(n, h)
                .into_iter()
                .filter(|&j| j != k)
                .map(|j| mode_roots(spec, j))
                .collect::<Result<Vec<_>>>()?;
            let coincident = others
                .iter()
                .flatten()
                .any(|o| (o.mu - r.mu).abs() <= 1e-9 * r.mu.abs().max(1.0));
            let rho = window_radius(spec, h, r.mu)?;
            let eta = eta(spec, h, r.mu, rho)?;
            let physical = match spec.family() {
                Family::Celestial { alpha } => !r.trivial && (*alpha == 1.0 || r.mu >= 0.0),
                Family::Dnls(_) => true,
            };
            let mut note = r.note.map(String::from);
            if coincident {
                const SHARED: &str = "coincides with a root of another mode";
                note = Some(match note {
                    Some(n) => alloc::format!("{n}; {SHARED}"),
                    None => String::from(SHARED),
                });
            }
            out.push(BifurcationPoint {
                k,
                h,
                mu: r.mu,
                eta,
                provenance: r.provenance,
                physical,
                simple: r.simple && !coincident,
                trivial: r.trivial,
                note,
            });
        }
    }
    out.sort_by(|a, b| a.k.cmp(&b.k).then(a.mu.total_cmp(&b.mu)));
    Ok(out)
}

/// `(n, μ_k / s_1)` for the gravitational ring (`α = 2`).
pub fn body_asymptotics_check(k: usize, n_list: &[usize]) -> Result<Vec<(usize, f64)>> {
    n_list
        .iter()
        .map(|&n| {
            let mu = celestial_mu_k(2.0, n, k)?;
            Ok((n, mu / crate::sums::s_sum(2.0, n, 1)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, frobenius_c, min_singular};
    use crate::symmetry::extract_blocks;
    use std::sync::Arc;

    fn families() -> Vec<Family> {
        alloc::vec![
            Family::vortex(),
            Family::body(),
            Family::Celestial { alpha: 2.5 },
            Family::Dnls(DnlsPotential::Cubic),
            Family::Dnls(DnlsPotential::Saturable),
        ]
    }

    fn modes(n: usize) -> Vec<usize> {
        let mut m: Vec<usize> = (1..=n / 2).collect();
        m.push(n);
        m
    }

    #[test]
    fn sigma_examples() {
        let s = SystemSpec::vortex(6, 0.0).unwrap();
        assert_eq!(sigma(&s.with_mu(-s.s1()), 6).sigma, Sign::Zero);
        assert_eq!(sigma(&SystemSpec::vortex(8, 0.0).unwrap(), 2).sigma, Sign::Plus);
        for mu in [0.3, 1.0, -2.0, 7.0] {
            let d = SystemSpec::dnls(DnlsPotential::Saturable, 9, mu).unwrap();
            assert_eq!(sigma(&d, 9).sigma, Sign::Minus);
        }
    }

    #[test]
    fn closed_form_blocks_match_hessian_blocks() {
        for f in families() {
            for n in 2..=32 {
                for mu in [-2.0, -0.5, 0.5, 1.0] {
                    let Ok(spec) = SystemSpec::new(f.clone(), n, mu) else { continue };
                    let hb = hessian_analytic(&spec);
                    let scale = frobenius(&hb.assemble()).max(1.0);
                    let ex = extract_blocks(&hb.assemble(), spec.layout()).unwrap();
                    for (k, b) in &ex.blocks {
                        let c = closed_form_block(&spec, *k).unwrap();
                        assert!(frobenius_c(&(b - &c)) <= 1e-10 * scale, "n={n} k={k} mu={mu}");
                    }
                }
            }
        }
    }

    #[test]
    fn closed_form_sigma_matches_blocks() {
        for f in families() {
            for n in 2..=32 {
                for mu in [-3.1, -1.3, -0.77, -0.2, 0.15, 0.6, 1.7, 4.2, 11.3] {
                    let Ok(spec) = SystemSpec::new(f.clone(), n, mu) else { continue };
                    for k in modes(n) {
                        let near = mode_roots(&spec, k).unwrap().iter().any(|r| (r.mu - mu).abs() < 1e-6);
                        if near {
                            continue;
                        }
                        assert_eq!(sigma(&spec, k), sigma_from_blocks(&spec, k), "n={n} k={k} mu={mu} {f:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn det_b1_factorisation() {
        for alpha in [1.0, 2.0, 2.5] {
            for n in 3..=12 {
                for mu in [-1.7, 0.4, 2.2] {
                    let spec = SystemSpec::celestial(alpha, n, mu).unwrap();
                    let b = closed_form_block(&spec, 1).unwrap();
                    let det = reduced_block(&b, n, 1).determinant();
                    let (a1, b1, _) = celestial_ab(alpha, n, 1).unwrap();
                    let s1 = spec.s1();
                    let expected = 0.5 * mu * (mu + s1) * (b1 * mu + a1);
                    assert!((det - expected).abs() < 1e-9 * (1.0 + expected.abs()));
                }
            }
        }
    }

    #[test]
    fn vortex_table() {
        let spec = SystemSpec::vortex(8, 1.0).unwrap();
        let pts = bif_points(&spec).unwrap();
        let find = |k| pts.iter().find(|p| p.k == k && !p.trivial).unwrap().mu;
        assert!((find(2) + 0.5).abs() < 1e-12);
        assert!((find(3) - 0.25).abs() < 1e-12);
        assert!((find(4) - 0.5).abs() < 1e-12);
        assert!((find(1) - 49.0 / 4.0).abs() < 1e-12);
        for n in 3..=64usize {
            let nf = n as f64;
            assert!((celestial_mu_k(1.0, n, 1).unwrap() - (nf - 1.0) * (nf - 1.0) / 4.0).abs() < 1e-12);
            for k in 2..=n / 2 {
                let kf = k as f64;
                let expected = (-kf * kf + nf * kf - 2.0 * nf + 2.0) / 4.0;
                assert!((celestial_mu_k(1.0, n, k).unwrap() - expected).abs() < 1e-12, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn vortex_modes_increase() {
        for n in 5..=64 {
            let mus: Vec<f64> = (2..=n / 2).map(|k| celestial_mu_k(1.0, n, k).unwrap()).collect();
            assert!(mus.windows(2).all(|w| w[0] < w[1]), "n={n}");
        }
    }

    #[test]
    fn two_body_ring() {
        assert!((celestial_mu_k(1.0, 2, 1).unwrap() + 1.25).abs() < 1e-12);
        assert!((celestial_mu_k(2.0, 2, 1).unwrap() + 17.0 / 12.0).abs() < 1e-12);
        let spec = SystemSpec::vortex(2, -1.25).unwrap();
        let d = reduced_block(&closed_form_block(&spec, 1).unwrap(), 2, 1);
        assert!(d.determinant().abs() < 1e-12);
    }

    #[test]
    fn n_index_flips_across_mu2() {
        let spec = SystemSpec::vortex(4, 0.0).unwrap();
        let lo = n_index(&spec.with_mu(-0.5 - 1e-4), 2).unwrap();
        let hi = n_index(&spec.with_mu(-0.5 + 1e-4), 2).unwrap();
        assert_eq!(lo, -hi);
        assert_eq!(n_index(&spec.with_mu(-spec.s1()), 1).unwrap(), 0);
        assert_eq!(eta(&spec, 2, -0.5, 1e-3).unwrap().abs(), 2);
        assert!(matches!(n_index(&spec, 3), Err(Error::InvalidDivisor { .. })));
    }

    #[test]
    fn eta_at_translations_vanishes() {
        for (alpha, n) in [(1.0, 5), (2.0, 7), (2.5, 4)] {
            let spec = SystemSpec::celestial(alpha, n, 0.0).unwrap();
            let s1 = spec.s1();
            assert_eq!(eta(&spec, 1, -s1, 1e-4).unwrap(), 0);
            assert_eq!(eta(&spec, n, -s1, 1e-4).unwrap().abs(), 2);
            assert_eq!(eta(&spec, 1, 0.3 * s1 + 17.0, 1e-6).unwrap(), 0);
        }
    }

    #[test]
    fn ambiguous_window() {
        let spec = SystemSpec::vortex(8, 0.0).unwrap();
        assert!(matches!(eta(&spec, 1, 0.0, 1.0), Err(Error::AmbiguousWindow { .. })));
    }

    #[test]
    fn simple_points_jump_by_two() {
        for f in families() {
            for n in 2..=24 {
                let Ok(spec) = SystemSpec::new(f.clone(), n, 0.0) else { continue };
                for p in bif_points(&spec).unwrap() {
                    assert_eq!(p.h, gcd(p.k, n));
                    if p.simple {
                        assert_eq!(p.eta.abs(), 2, "{f:?} n={n} {p:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn reduced_blocks_are_singular_at_roots() {
        for f in families() {
            for n in 3..=20 {
                let Ok(spec) = SystemSpec::new(f.clone(), n, 0.0) else { continue };
                for p in bif_points(&spec).unwrap() {
                    let s = spec.with_mu(p.mu);
                    let d = reduced_block(&closed_form_block(&s, p.k).unwrap(), n, p.k);
                    assert!(min_singular(&d) <= 1e-8 * (1.0 + p.mu.abs()), "{f:?} n={n} {p:?}");
                    if p.simple {
                        let det = |m: f64| {
                            let dd = reduced_block(&closed_form_block(&s.with_mu(m), p.k).unwrap(), n, p.k);
                            dd.determinant().signum()
                        };
                        assert_ne!(det(p.mu - 1e-4), det(p.mu + 1e-4));
                    }
                }
            }
        }
    }

    #[test]
    fn dnls_examples() {
        for p in [DnlsPotential::Cubic, DnlsPotential::Saturable] {
            for n in [3, 4] {
                let spec = SystemSpec::dnls(p.clone(), n, 0.0).unwrap();
                assert!(bif_points(&spec).unwrap().is_empty());
            }
        }
        let spec = SystemSpec::dnls(DnlsPotential::Cubic, 6, 0.0).unwrap();
        let m3 = bif_points(&spec).unwrap().into_iter().find(|p| p.k == 3).unwrap();
        assert!((m3.mu - 1.0).abs() < 1e-12);
        assert_eq!(m3.h, 3);
        let spec = SystemSpec::dnls(DnlsPotential::Saturable, 16, 0.0).unwrap();
        let k1: Vec<f64> = bif_points(&spec).unwrap().into_iter().filter(|p| p.k == 1).map(|p| p.mu).collect();
        assert_eq!(k1.len(), 2);
        assert!(k1[0] > 0.0 && k1[0] < 1.0 && k1[1] > 1.0);
        assert!((k1[0] * k1[1] - 1.0).abs() < 1e-12);
        let spec = SystemSpec::dnls(DnlsPotential::Saturable, 15, 0.0).unwrap();
        assert!(bif_points(&spec).unwrap().iter().all(|p| p.k != 1));
    }

    #[test]
    fn custom_potential_matches_cubic() {
        #[derive(Debug)]
        struct Lin;
        impl crate::OnSitePotential for Lin {
            fn h(&self, s: f64) -> f64 {
                s
            }
            fn dh(&self, _: f64) -> f64 {
                1.0
            }
        }
        #[derive(Debug)]
        struct Sat;
        impl crate::OnSitePotential for Sat {
            fn h(&self, s: f64) -> f64 {
                1.0 / (1.0 + s)
            }
            fn dh(&self, s: f64) -> f64 {
                -1.0 / ((1.0 + s) * (1.0 + s))
            }
        }
        for (custom, builtin) in [
            (DnlsPotential::Custom(Arc::new(Lin)), DnlsPotential::Cubic),
            (DnlsPotential::Custom(Arc::new(Sat)), DnlsPotential::Saturable),
        ] {
            for n in [7, 12, 16, 20] {
                let a = bif_points(&SystemSpec::dnls(custom.clone(), n, 0.0).unwrap()).unwrap();
                let b = bif_points(&SystemSpec::dnls(builtin.clone(), n, 0.0).unwrap()).unwrap();
                assert_eq!(a.len(), b.len(), "n={n}");
                for (x, y) in a.iter().zip(b.iter()) {
                    assert_eq!((x.k, x.eta), (y.k, y.eta));
                    assert!((x.mu - y.mu).abs() < 1e-9);
                    assert_eq!(x.provenance, Provenance::RootSolve);
                }
            }
        }
    }

    #[test]
    fn double_root_is_degenerate() {
        #[derive(Debug)]
        struct Tangent;
        impl crate::OnSitePotential for Tangent {
            fn h(&self, s: f64) -> f64 {
                s
            }
            // t h'(t) = (t - 1)² + δ₁ touches δ₁ at t = 1.
            fn dh(&self, s: f64) -> f64 {
                let d = dnls_coeffs(12, 1).unwrap().delta_k;
                ((s - 1.0) * (s - 1.0) + d) / s
            }
        }
        let spec = SystemSpec::dnls(DnlsPotential::Custom(Arc::new(Tangent)), 12, 0.0).unwrap();
        let pts = bif_points(&spec).unwrap();
        let p = pts.iter().find(|p| p.k == 1).expect("double root reported");
        assert!(!p.simple);
        assert_eq!(p.eta, 0);
        assert!((p.mu - 1.0).abs() < 1e-3);
    }

    #[test]
    fn body_positivity_evidence() {
        for n in 3..=6 {
            assert!(celestial_mu_k(2.0, n, 1).unwrap() >= 0.0, "n={n}");
        }
        for n in 10..=64 {
            assert!(celestial_mu_k(2.0, n, 2).unwrap() >= 0.0, "n={n}");
        }
        assert!(celestial_mu_k(2.0, 9, 2).unwrap() < 0.0);
    }

    #[test]
    fn asymptotic_table_k3() {
        let t = body_asymptotics_check(3, &[5000]).unwrap();
        // (2k² - 5)/6 with O(1/ln n) corrections; the ratio is still far from 13.
        assert!(t[0].1 > 1.0 && t[0].1 < 13.0 / 6.0);
    }

    #[test]
    fn b_k_positive() {
        for alpha in [1.0, 2.0, 2.5, 3.0] {
            for n in 4..=64 {
                for k in 2..=n / 2 {
                    assert!(celestial_ab(alpha, n, k).unwrap().1 > 0.0);
                }
            }
        }
    }
}
