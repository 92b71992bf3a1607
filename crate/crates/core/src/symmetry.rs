//! Group actions, the symmetry-adapted basis and fixed-point subspaces.
//!
//! `S_n × O(2)` acts on a configuration by permuting ring bodies, rotating by
//! `e^{-Jθ}` and reflecting by `R = diag(1, -1)`. The isotropy group of the
//! polygon is generated by `(ζ, ζ)`, which sends body `j + 1` to slot `j` and
//! rotates by `-ζ`, and `(κ, κ)`, which sends body `n - j` to slot `j` and
//! conjugates.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;

use crate::linalg::{frobenius, frobenius_c, rot};
use crate::potentials::HessianBlocks;
use crate::system::{Configuration, Layout};
use crate::{Error, Result};

/// Residual above which a matrix or configuration is declared asymmetric.
pub const SYMMETRY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub enum GroupElement {
    /// `(ζ, ζ)^p`.
    ZetaPower(i64),
    /// `(κ, κ)`.
    Kappa,
    /// `ρ(θ) = e^{-Jθ}` on every point.
    Rotation(f64),
    /// `R` on every point.
    Reflection,
    /// Ring permutation `[x]_j = x_{γ(j)}`, with `γ` given 1-based.
    Permutation(Vec<usize>),
    /// Product `g_1 g_2 ⋯`; the last factor acts first.
    Composite(Vec<GroupElement>),
}

fn act(g: &GroupElement, center: Option<Complex64>, ring: &[Complex64]) -> (Option<Complex64>, Vec<Complex64>) {
    let n = ring.len() as i64;
    let body = |j: i64| ring[(j - 1).rem_euclid(n) as usize];
    match g {
        GroupElement::ZetaPower(p) => {
            let c = Complex64::from_polar(1.0, -2.0 * PI * (p.rem_euclid(n) as f64) / n as f64);
            (center.map(|z| z * c), (1..=n).map(|j| c * body(j + p)).collect())
        }
        GroupElement::Kappa => (center.map(|z| z.conj()), (1..=n).map(|j| body(n - j).conj()).collect()),
        GroupElement::Rotation(theta) => {
            let c = Complex64::from_polar(1.0, -theta);
            (center.map(|z| z * c), ring.iter().map(|z| z * c).collect())
        }
        GroupElement::Reflection => (center.map(|z| z.conj()), ring.iter().map(|z| z.conj()).collect()),
        GroupElement::Permutation(gamma) => {
            assert_eq!(gamma.len(), ring.len(), "permutation has wrong length");
            let mut seen = vec![false; ring.len()];
            for &g in gamma {
                assert!((1..=ring.len()).contains(&g) && !seen[g - 1], "not a permutation");
                seen[g - 1] = true;
            }
            (center, gamma.iter().map(|&g| ring[g - 1]).collect())
        }
        GroupElement::Composite(list) => {
            let mut state = (center, ring.to_vec());
            for g in list.iter().rev() {
                state = act(g, state.0, &state.1);
            }
            state
        }
    }
}

/// Action `ρ(g) x`.
pub fn apply_group(g: &GroupElement, x: &Configuration) -> Configuration {
    let (center, ring) = act(g, x.center, &x.ring);
    Configuration { center, ring }
}

/// Real matrix of `ρ(g)` in coordinate order.
pub fn action_matrix(g: &GroupElement, layout: Layout) -> DMatrix<f64> {
    let dim = layout.dim();
    let mut m = DMatrix::zeros(dim, dim);
    let mut e = vec![0.0; dim];
    for c in 0..dim {
        e[c] = 1.0;
        let y = apply_group(g, &Configuration::from_coords(layout, &e)).to_coords();
        m.set_column(c, &y);
        e[c] = 0.0;
    }
    m
}

/// One mode's columns inside `P`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModeSlot {
    pub k: usize,
    pub offset: usize,
    pub dim: usize,
}

/// Complex dimension of the mode space `V_k`.
pub fn mode_dim(layout: Layout, k: usize) -> usize {
    let n = layout.n;
    if !layout.has_center {
        2
    } else if n == 2 && k == 1 {
        4
    } else if n >= 3 && (k == 1 || k == n - 1) {
        3
    } else {
        2
    }
}

/// The isometry `T_k` as a `dim × dim(V_k)` complex matrix.
///
/// Ring body `j` receives `n^{-1/2} e^{ijkζ} e^{jJζ} w`; for the celestial
/// modes `k ∈ {1, n-1}` the first coordinate feeds the central body along
/// `v_1 = (1, i)/√2` or `v_{n-1} = (1, -i)/√2`. For `n = 2` the central body
/// takes a full `ℂ²` in mode 1.
pub fn mode_map(layout: Layout, k: usize) -> DMatrix<Complex64> {
    let n = layout.n;
    assert!((1..=n).contains(&k), "mode index {k} outside 1..={n}");
    let d = mode_dim(layout, k);
    let mut t = DMatrix::zeros(layout.dim(), d);
    let off = usize::from(layout.has_center);
    let wcol = if d == 2 { 0 } else { d - 2 };
    let zeta = 2.0 * PI / n as f64;
    let scale = 1.0 / libm::sqrt(n as f64);
    for j in 1..=n {
        let phase = Complex64::from_polar(scale, ((j * k) % n) as f64 * zeta);
        let r = rot((j % n) as f64 * zeta);
        let slot = off + j - 1;
        for a in 0..2 {
            for b in 0..2 {
                t[(2 * slot + a, wcol + b)] = phase * r[(a, b)];
            }
        }
    }
    match d {
        3 => {
            let sign = if k == 1 { 1.0 } else { -1.0 };
            t[(0, 0)] = Complex64::new(FRAC_1_SQRT_2, 0.0);
            t[(1, 0)] = Complex64::new(0.0, sign * FRAC_1_SQRT_2);
        }
        4 => {
            t[(0, 0)] = Complex64::new(1.0, 0.0);
            t[(1, 1)] = Complex64::new(1.0, 0.0);
        }
        _ => {}
    }
    t
}

/// Mode order used for the columns of `P`: `1, n-1, 2, n-2, …`, then `n/2`, then `n`.
pub fn mode_order(n: usize) -> Vec<usize> {
    let mut ks = Vec::with_capacity(n);
    let mut k = 1;
    while 2 * k < n {
        ks.push(k);
        ks.push(n - k);
        k += 1;
    }
    if n % 2 == 0 && n > 2 {
        ks.push(n / 2);
    }
    if n == 2 {
        ks.push(1);
    }
    ks.push(n);
    ks
}

/// The unitary change of variables `P z = Σ_k T_k(z_k)`.
#[derive(Clone, Debug)]
pub struct SymmetryAdaptedBasis {
    pub layout: Layout,
    pub p: DMatrix<Complex64>,
    pub slots: Vec<ModeSlot>,
}

impl SymmetryAdaptedBasis {
    pub fn slot(&self, k: usize) -> Option<&ModeSlot> {
        self.slots.iter().find(|s| s.k == k)
    }

    /// `‖P*P - I‖_F`.
    pub fn unitarity_defect(&self) -> f64 {
        let m = self.p.adjoint() * &self.p - DMatrix::identity(self.p.ncols(), self.p.ncols());
        frobenius_c(&m)
    }
}

pub fn build_p(layout: Layout) -> SymmetryAdaptedBasis {
    let dim = layout.dim();
    let mut p = DMatrix::zeros(dim, dim);
    let mut slots = Vec::new();
    let mut offset = 0;
    for k in mode_order(layout.n) {
        let t = mode_map(layout, k);
        p.view_mut((0, offset), (dim, t.ncols())).copy_from(&t);
        slots.push(ModeSlot { k, offset, dim: t.ncols() });
        offset += t.ncols();
    }
    debug_assert_eq!(offset, dim);
    SymmetryAdaptedBasis { layout, p, slots }
}

/// Self-adjoint blocks `B_k` in the mode order of [`build_p`].
#[derive(Clone, Debug)]
pub struct BlockSpectrum {
    pub blocks: Vec<(usize, DMatrix<Complex64>)>,
    /// Frobenius mass of `P* A P` outside the diagonal blocks (zero for formula blocks).
    pub off_block: f64,
}

impl BlockSpectrum {
    pub fn block(&self, k: usize) -> Option<&DMatrix<Complex64>> {
        self.blocks.iter().find(|(kk, _)| *kk == k).map(|(_, b)| b)
    }
}

/// Residual of `A` against the generators `(ζ, ζ)` and `(κ, κ)`, relative to `max(1, ‖A‖)`.
pub fn equivariance_residual(a: &DMatrix<f64>, layout: Layout) -> f64 {
    let scale = frobenius(a).max(1.0);
    [GroupElement::ZetaPower(1), GroupElement::Kappa]
        .iter()
        .map(|g| {
            let m = action_matrix(g, layout);
            frobenius(&(a - &m * a * m.transpose())) / scale
        })
        .fold(0.0, f64::max)
}

/// Blocks of a `D̃_n`-equivariant symmetric matrix, by conjugation with `P`.
pub fn extract_blocks(a: &DMatrix<f64>, layout: Layout) -> Result<BlockSpectrum> {
    assert_eq!(a.nrows(), layout.dim(), "matrix does not match the layout");
    let residual = equivariance_residual(a, layout);
    if !(residual <= SYMMETRY_TOL) {
        return Err(Error::NotEquivariant { residual });
    }
    let basis = build_p(layout);
    let ac = a.map(|v| Complex64::new(v, 0.0));
    let m = basis.p.adjoint() * ac * &basis.p;
    let mut off = m.clone();
    let mut blocks = Vec::with_capacity(basis.slots.len());
    for s in &basis.slots {
        blocks.push((s.k, m.view((s.offset, s.offset), (s.dim, s.dim)).into_owned()));
        off.view_mut((s.offset, s.offset), (s.dim, s.dim)).fill(Complex64::new(0.0, 0.0));
    }
    Ok(BlockSpectrum { blocks, off_block: frobenius_c(&off) })
}

fn c2(m: &Matrix2<f64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(2, 2, |i, j| Complex64::new(m[(i, j)], 0.0))
}

/// `Σ_{j=1}^{n} A_{nj} e^{ijkζ} e^{jJζ}`.
fn ring_sum(hb: &HessianBlocks, k: usize) -> DMatrix<Complex64> {
    let n = hb.n;
    let zeta = 2.0 * PI / n as f64;
    let mut s = DMatrix::zeros(2, 2);
    for j in 1..=n {
        let phase = Complex64::from_polar(1.0, ((j * k) % n) as f64 * zeta);
        let m = hb.ring_block(j as i64) * rot((j % n) as f64 * zeta);
        s += c2(&m) * phase;
    }
    s
}

/// `B_k` assembled from the distinct Hessian blocks.
pub fn formula_block(hb: &HessianBlocks, k: usize) -> DMatrix<Complex64> {
    let layout = hb.layout();
    let n = hb.n;
    match mode_dim(layout, k) {
        3 => {
            let a00 = hb.a00.expect("celestial blocks");
            let an0 = hb.an0.expect("celestial blocks");
            let sign = if k == 1 { 1.0 } else { -1.0 };
            let v = [Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(0.0, sign * FRAC_1_SQRT_2)];
            let rn = libm::sqrt(n as f64);
            let col: Vec<Complex64> = (0..2).map(|a| (v[0] * an0[(a, 0)] + v[1] * an0[(a, 1)]) * rn).collect();
            let mut b = DMatrix::zeros(3, 3);
            b[(0, 0)] = Complex64::new(a00[(0, 0)], 0.0);
            for a in 0..2 {
                b[(a + 1, 0)] = col[a];
                b[(0, a + 1)] = col[a].conj();
            }
            b.view_mut((1, 1), (2, 2)).copy_from(&ring_sum(hb, k));
            b
        }
        4 => {
            let a00 = hb.a00.expect("celestial blocks");
            let a20 = hb.an0.expect("celestial blocks");
            let r2 = core::f64::consts::SQRT_2;
            let mut b = DMatrix::zeros(4, 4);
            b.view_mut((0, 0), (2, 2)).copy_from(&c2(&a00));
            b.view_mut((0, 2), (2, 2)).copy_from(&c2(&(r2 * a20.transpose())));
            b.view_mut((2, 0), (2, 2)).copy_from(&c2(&(r2 * a20)));
            b.view_mut((2, 2), (2, 2)).copy_from(&c2(&(hb.ann + hb.ring_block(1))));
            b
        }
        _ => ring_sum(hb, k),
    }
}

/// All formula blocks, in the mode order of [`build_p`].
pub fn formula_blocks(hb: &HessianBlocks) -> BlockSpectrum {
    let blocks = mode_order(hb.n).into_iter().map(|k| (k, formula_block(hb, k))).collect();
    BlockSpectrum { blocks, off_block: 0.0 }
}

/// Modes carried by `W^{D̃_h}`: `k ∈ hℕ ∩ [1, n/2]` and `k = n`.
pub fn fixed_modes(n: usize, h: usize) -> Vec<usize> {
    let mut ks: Vec<usize> = (1..=n / 2).filter(|k| k % h == 0).collect();
    ks.push(n);
    ks
}

/// Orthonormal real basis of `W^{D̃_h}`.
#[derive(Clone, Debug)]
pub struct FixedSubspace {
    pub h: usize,
    pub layout: Layout,
    /// Columns span the subspace inside real configuration space.
    pub basis: DMatrix<f64>,
    /// `(k, real dimension)` per contributing mode, in column order.
    pub block_layout: Vec<(usize, usize)>,
}

impl FixedSubspace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    /// Distance of `x` from the subspace.
    pub fn distance(&self, x: &DVector<f64>) -> f64 {
        crate::linalg::norm(&(x - self.projector() * x))
    }
}

fn check_divisor(n: usize, h: usize) -> Result<()> {
    if h == 0 || n % h != 0 {
        Err(Error::InvalidDivisor { h, n })
    } else {
        Ok(())
    }
}

pub fn fixed_subspace_basis(layout: Layout, h: usize) -> Result<FixedSubspace> {
    let n = layout.n;
    check_divisor(n, h)?;
    let mut cols: Vec<DVector<f64>> = Vec::new();
    let mut block_layout = Vec::new();
    let re = |t: &DMatrix<Complex64>, c: usize, z: Complex64, s: f64| -> DVector<f64> {
        DVector::from_fn(t.nrows(), |i, _| s * (t[(i, c)] * z).re)
    };
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let sqrt2 = core::f64::consts::SQRT_2;
    for k in fixed_modes(n, h) {
        let t = mode_map(layout, k);
        let before = cols.len();
        match t.ncols() {
            4 => {
                // n = 2: central body and ring direction along the real axis.
                cols.push(re(&t, 0, one, 1.0));
                cols.push(re(&t, 2, one, 1.0));
            }
            3 => {
                cols.push(re(&t, 0, one, sqrt2));
                cols.push(re(&t, 1, one, sqrt2));
                cols.push(re(&t, 2, i, sqrt2));
            }
            _ if k == n || 2 * k == n => cols.push(re(&t, 0, one, 1.0)),
            _ => {
                cols.push(re(&t, 0, one, sqrt2));
                cols.push(re(&t, 1, i, sqrt2));
            }
        }
        block_layout.push((k, cols.len() - before));
    }
    Ok(FixedSubspace { h, layout, basis: DMatrix::from_columns(&cols), block_layout })
}

/// Group average `(1/2h) Σ_g ρ(g)` over `D̃_h`, an orthogonal projector onto `W^{D̃_h}`.
pub fn reynolds_projector(layout: Layout, h: usize) -> Result<DMatrix<f64>> {
    check_divisor(layout.n, h)?;
    let step = (layout.n / h) as i64;
    let kappa = action_matrix(&GroupElement::Kappa, layout);
    let mut acc = DMatrix::zeros(layout.dim(), layout.dim());
    for p in 0..h as i64 {
        let g = action_matrix(&GroupElement::ZetaPower(p * step), layout);
        acc += &kappa * &g + g;
    }
    Ok(acc / (2 * h) as f64)
}

/// Largest violation of `x_j = e^{-2πi/h} x_{j+n/h}` and `x_j = conj(x_{n-j})`.
pub fn symmetry_residual(x: &Configuration, h: usize) -> Result<f64> {
    let n = x.ring.len();
    check_divisor(n, h)?;
    let mut worst: f64 = 0.0;
    for g in [GroupElement::ZetaPower((n / h) as i64), GroupElement::Kappa] {
        let y = apply_group(&g, x);
        for (a, b) in y.points().zip(x.points()) {
            worst = worst.max((a - b).norm());
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolygonKind {
    /// `{r e^{iφ} e^{2πik/h}}` with `φ ∈ {0, π/h}`.
    HGon,
    /// `{r e^{±iφ} e^{2πik/h}}` with `φ ∈ (0, π/h)`.
    TwoHGon,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolygonComponent {
    pub kind: PolygonKind,
    pub r: f64,
    pub phi: f64,
    /// Ring bodies (1-based) in the component.
    pub bodies: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub h: usize,
    pub center: Option<Complex64>,
    pub components: Vec<PolygonComponent>,
    pub residual: f64,
}

impl Classification {
    pub fn count(&self, kind: PolygonKind) -> usize {
        self.components.iter().filter(|c| c.kind == kind).count()
    }
}

/// Angle reduced into `(-π/h, π/h]`, then made non-negative.
fn reduced_angle(z: Complex64, h: usize) -> f64 {
    let w = 2.0 * PI / h as f64;
    let mut a = libm::fmod(z.arg(), w);
    if a < 0.0 {
        a += w;
    }
    if a > 0.5 * w {
        a -= w;
    }
    a.abs()
}

/// Decompose a `D̃_h`-symmetric configuration into `h`-gons and `2h`-gons.
pub fn classify_configuration(x: &Configuration, h: usize, tol: f64) -> Result<Classification> {
    let n = x.ring.len();
    let residual = symmetry_residual(x, h)?;
    if residual > tol {
        return Err(Error::NotSymmetric { residual });
    }
    let m = n / h;
    let mut components = Vec::new();
    for j in 0..=m / 2 {
        let rep = x.body(j as i64);
        let mut bodies: Vec<usize> = (0..h).map(|p| (j + p * m + n - 1) % n + 1).collect();
        let kind = if j == 0 || 2 * j == m {
            PolygonKind::HGon
        } else {
            bodies.extend((0..h).map(|p| (m - j + p * m + n - 1) % n + 1));
            PolygonKind::TwoHGon
        };
        bodies.sort_unstable();
        components.push(PolygonComponent { kind, r: rep.norm(), phi: reduced_angle(rep, h), bodies });
    }
    Ok(Classification { h, center: x.center, components, residual })
}
