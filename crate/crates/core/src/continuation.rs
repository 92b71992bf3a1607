//! Branch switching and pseudo-arclength continuation on `W^{D̃_h}`.
//!
//! A point of the fixed subspace is written `x = x_0 + B y`, with `x_0` the
//! polygon and `B` the orthonormal basis of [`FixedSubspace`]. The reduced map
//! is `f_h(y, μ) = Bᵀ ∇V(x_0 + B y)`; `y = 0` solves it for every `μ`.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::bifurcation::{bif_points, eta, window_radius, BifurcationPoint};
use crate::linalg::{min_singular, norm};
use crate::potentials::{dgrad_dmu_coords, gradient_coords, hessian_coords, polygon_coords};
use crate::symmetry::{classify_configuration, fixed_subspace_basis, symmetry_residual, FixedSubspace};
use crate::system::{Configuration, SystemSpec};
use crate::{Error, Result};

/// The reduced gradient `f_h` of one system on one fixed subspace.
#[derive(Clone, Debug)]
pub struct ReducedSystem {
    spec: SystemSpec,
    x0: DVector<f64>,
    space: FixedSubspace,
}

impl ReducedSystem {
    pub fn new(spec: &SystemSpec, h: usize) -> Result<Self> {
        Ok(ReducedSystem {
            spec: spec.clone(),
            x0: polygon_coords(spec),
            space: fixed_subspace_basis(spec.layout(), h)?,
        })
    }

    pub fn h(&self) -> usize {
        self.space.h
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn space(&self) -> &FixedSubspace {
        &self.space
    }

    pub fn spec_at(&self, mu: f64) -> SystemSpec {
        self.spec.with_mu(mu)
    }

    pub fn coords(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.x0 + &self.space.basis * y
    }

    pub fn config(&self, y: &DVector<f64>) -> Configuration {
        Configuration::from_coords(self.spec.layout(), self.coords(y).as_slice())
    }

    /// Full gradient `∇V(x_0 + B y)`.
    pub fn full_gradient(&self, y: &DVector<f64>, mu: f64) -> Result<DVector<f64>> {
        gradient_coords(&self.spec_at(mu), self.coords(y).as_slice())
    }

    pub fn map(&self, y: &DVector<f64>, mu: f64) -> Result<DVector<f64>> {
        Ok(self.space.basis.transpose() * self.full_gradient(y, mu)?)
    }

    /// `∂f_h/∂y = Bᵀ D²V B`.
    pub fn jacobian(&self, y: &DVector<f64>, mu: f64) -> Result<DMatrix<f64>> {
        let h = hessian_coords(&self.spec_at(mu), self.coords(y).as_slice())?;
        Ok(self.space.basis.transpose() * h * &self.space.basis)
    }

    /// `∂f_h/∂μ`.
    pub fn dmu(&self, y: &DVector<f64>, mu: f64) -> Result<DVector<f64>> {
        Ok(self.space.basis.transpose() * dgrad_dmu_coords(&self.spec_at(mu), self.coords(y).as_slice())?)
    }

    /// Central-difference Jacobian of [`ReducedSystem::map`].
    pub fn jacobian_fd(&self, y: &DVector<f64>, mu: f64, step: f64) -> Result<DMatrix<f64>> {
        let d = self.dim();
        let mut j = DMatrix::zeros(d, d);
        for c in 0..d {
            let mut p = y.clone();
            p[c] += step;
            let mut m = y.clone();
            m[c] -= step;
            j.set_column(c, &((self.map(&p, mu)? - self.map(&m, mu)?) / (2.0 * step)));
        }
        Ok(j)
    }
}

/// `f_h(y, μ)`.
pub fn reduced_map(spec: &SystemSpec, h: usize, y: &DVector<f64>, mu: f64) -> Result<DVector<f64>> {
    ReducedSystem::new(spec, h)?.map(y, mu)
}

/// Analytic `∂f_h/∂y`.
pub fn reduced_jacobian(spec: &SystemSpec, h: usize, y: &DVector<f64>, mu: f64) -> Result<DMatrix<f64>> {
    ReducedSystem::new(spec, h)?.jacobian(y, mu)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchPoint {
    pub y: DVector<f64>,
    pub mu: f64,
    pub x: Configuration,
    /// `‖∇V(x)‖`.
    pub residual: f64,
    /// Smallest singular value of `∂f_h/∂y` at the point.
    pub min_singular: f64,
}

impl BranchPoint {
    fn build(sys: &ReducedSystem, y: DVector<f64>, mu: f64) -> Result<Self> {
        let residual = norm(&sys.full_gradient(&y, mu)?);
        let min_singular = min_singular(&sys.jacobian(&y, mu)?);
        Ok(BranchPoint { x: sys.config(&y), y, mu, residual, min_singular })
    }

    pub fn norm(&self) -> f64 {
        norm(&self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Plus,
    Minus,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Plus => 1.0,
            Direction::Minus => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Plus => "plus",
            Direction::Minus => "minus",
        }
    }
}

/// Corrected first point of a bifurcating branch.
#[derive(Clone, Debug)]
pub struct BranchSeed {
    pub origin: BifurcationPoint,
    pub direction: Direction,
    pub point: BranchPoint,
}

const NEWTON_MAX_ITER: usize = 12;

/// Newton's method on a square system; returns the root and the total correction length.
fn newton(
    mut z: DVector<f64>,
    tol: f64,
    mut system: impl FnMut(&DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)>,
    residual: impl Fn(&DVector<f64>) -> f64,
) -> Result<Option<(DVector<f64>, f64)>> {
    let start = z.clone();
    for _ in 0..NEWTON_MAX_ITER {
        let (g, j) = system(&z)?;
        if residual(&g) <= tol {
            let moved = norm(&(&z - &start));
            return Ok(Some((z, moved)));
        }
        let Some(dz) = j.lu().solve(&(-g)) else { return Ok(None) };
        if !dz.iter().all(|v| v.is_finite()) {
            return Ok(None);
        }
        z += dz;
    }
    let (g, _) = system(&z)?;
    if residual(&g) <= tol {
        let moved = norm(&(&z - &start));
        Ok(Some((z, moved)))
    } else {
        Ok(None)
    }
}

fn split(z: &DVector<f64>) -> (DVector<f64>, f64) {
    let d = z.len() - 1;
    (z.rows(0, d).into_owned(), z[d])
}

fn join(y: &DVector<f64>, mu: f64) -> DVector<f64> {
    let mut z = DVector::zeros(y.len() + 1);
    z.rows_mut(0, y.len()).copy_from(y);
    z[y.len()] = mu;
    z
}

/// Solutions of `f_h = 0` on the sphere `‖y‖ = r`, by Newton from `(y, μ)`.
fn sphere_newton(sys: &ReducedSystem, y: DVector<f64>, mu: f64, r: f64, tol: f64) -> Result<Option<(DVector<f64>, f64)>> {
    let d = sys.dim();
    let out = newton(
        join(&y, mu),
        tol,
        |z| {
            let (y, mu) = split(z);
            let mut g = DVector::zeros(d + 1);
            g.rows_mut(0, d).copy_from(&sys.map(&y, mu)?);
            g[d] = 0.5 * (y.norm_squared() - r * r);
            let mut j = DMatrix::zeros(d + 1, d + 1);
            j.view_mut((0, 0), (d, d)).copy_from(&sys.jacobian(&y, mu)?);
            j.view_mut((0, d), (d, 1)).copy_from(&sys.dmu(&y, mu)?);
            j.view_mut((d, 0), (1, d)).copy_from(&y.transpose());
            Ok((g, j))
        },
        |g| norm(&g.rows(0, d).into_owned()).max(g[d].abs() / (r * r).max(1e-300)),
    )?;
    Ok(out.map(|(z, _)| split(&z)))
}

/// Relative size below which a singular value counts as zero at a bifurcation point.
const KERNEL_TOL: f64 = 1e-7;

/// Leave the trivial branch at `origin` along the kernel of `∂f_h/∂y`, at radius `eps`.
pub fn branch_switch(
    spec: &SystemSpec,
    origin: &BifurcationPoint,
    direction: Direction,
    eps: f64,
    newton_tol: f64,
) -> Result<BranchSeed> {
    if origin.eta == 0 {
        return Err(Error::DegenerateBifurcation(alloc::format!(
            "degree jump vanishes at mu = {} (k = {})",
            origin.mu,
            origin.k
        )));
    }
    let sys = ReducedSystem::new(spec, origin.h)?;
    let zero = DVector::zeros(sys.dim());
    if eps == 0.0 {
        let point = BranchPoint::build(&sys, zero, origin.mu)?;
        return Ok(BranchSeed { origin: origin.clone(), direction, point });
    }
    let j = sys.jacobian(&zero, origin.mu)?;
    let svd = j.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let top = svd.singular_values.iter().copied().fold(1.0, f64::max);
    let small: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= KERNEL_TOL * top)
        .collect();
    if small.len() != 1 {
        return Err(Error::DegenerateBifurcation(alloc::format!(
            "kernel of the reduced Jacobian has dimension {} at mu = {}",
            small.len(),
            origin.mu
        )));
    }
    let mut v = v_t.row(small[0]).transpose();
    let lead = v.iter().copied().fold(0.0, |a: f64, b: f64| if b.abs() > a.abs() { b } else { a });
    if lead < 0.0 {
        v = -v;
    }
    let y = v * (direction.sign() * eps);
    let Some((y, mu)) = sphere_newton(&sys, y, origin.mu, eps, newton_tol)? else {
        return Err(Error::NoSwitch(alloc::format!(
            "Newton did not converge on the sphere of radius {eps:e} around mu = {}",
            origin.mu
        )));
    };
    let point = BranchPoint::build(&sys, y, mu)?;
    if point.residual > newton_tol {
        return Err(Error::NoSwitch(alloc::format!("residual {:e} above tolerance", point.residual)));
    }
    Ok(BranchSeed { origin: origin.clone(), direction, point })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationOptions {
    pub ds: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub newton_tol: f64,
    pub max_steps: usize,
    pub mu_bound: f64,
    pub norm_bound: f64,
    pub collision_tol: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            ds: 1e-2,
            ds_min: 1e-6,
            ds_max: 5e-2,
            newton_tol: 1e-10,
            max_steps: 200,
            mu_bound: 1e3,
            norm_bound: 1e2,
            collision_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    /// Two bodies came closer than `collision_tol`; the offending point is not stored.
    Collision { min_distance: f64 },
    MuBound,
    NormBound,
    /// The branch came back to the polygon at `mu_end`, matched to a listed point when possible.
    ReturnedToTrivial { mu_end: f64, matched: Option<BifurcationPoint> },
    StepLimit { reason: String },
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Collision { .. } => "collision",
            Termination::MuBound => "mu_bound",
            Termination::NormBound => "norm_bound",
            Termination::ReturnedToTrivial { .. } => "returned_to_trivial",
            Termination::StepLimit { .. } => "step_limit",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Branch {
    pub h: usize,
    pub origin: BifurcationPoint,
    pub direction: Direction,
    pub points: Vec<BranchPoint>,
    pub termination: Termination,
    pub max_symmetry_verified: bool,
}

impl Branch {
    /// Number of accepted continuation steps (the seed is not a step).
    pub fn steps(&self) -> usize {
        self.points.len().saturating_sub(1)
    }
}

/// Unit tangent with `t_prev · t = 1` before normalisation.
fn tangent(sys: &ReducedSystem, y: &DVector<f64>, mu: f64, prev: &DVector<f64>) -> Result<Option<DVector<f64>>> {
    let d = sys.dim();
    let mut m = DMatrix::zeros(d + 1, d + 1);
    m.view_mut((0, 0), (d, d)).copy_from(&sys.jacobian(y, mu)?);
    m.view_mut((0, d), (d, 1)).copy_from(&sys.dmu(y, mu)?);
    m.view_mut((d, 0), (1, d + 1)).copy_from(&prev.transpose());
    let mut rhs = DVector::zeros(d + 1);
    rhs[d] = 1.0;
    Ok(m.lu().solve(&rhs).map(|t| {
        let l = norm(&t);
        t / l
    }))
}

/// μ where a branch meets the polygon, from sphere solutions at shrinking radii.
fn landing_mu(sys: &ReducedSystem, last: &BranchPoint, tol: f64) -> Result<f64> {
    let mut y = last.y.clone();
    let mut mu = last.mu;
    let mut r = norm(&y);
    for _ in 0..6 {
        r /= 4.0;
        let scaled = &y * (r / norm(&y).max(1e-300));
        match sphere_newton(sys, scaled, mu, r, tol)? {
            Some((yy, mm)) => {
                y = yy;
                mu = mm;
            }
            None => break,
        }
    }
    Ok(mu)
}

/// Pseudo-arclength continuation in `(y, μ)` from a seed.
pub fn continue_branch(spec: &SystemSpec, seed: &BranchSeed, opts: &ContinuationOptions) -> Result<Branch> {
    let h = seed.origin.h;
    let sys = ReducedSystem::new(spec, h)?;
    let start = seed.point.clone();
    let eps = start.norm();
    let mut branch = Branch {
        h,
        origin: seed.origin.clone(),
        direction: seed.direction,
        points: alloc::vec![start.clone()],
        termination: Termination::StepLimit { reason: String::from("not started") },
        max_symmetry_verified: false,
    };
    if eps == 0.0 {
        branch.termination = Termination::ReturnedToTrivial { mu_end: start.mu, matched: None };
        return Ok(branch);
    }
    let d = sys.dim();
    let mut t_prev = join(&(&start.y / eps), 0.0);
    let Some(mut t) = tangent(&sys, &start.y, start.mu, &t_prev)? else {
        branch.termination = Termination::StepLimit { reason: String::from("singular tangent system at the seed") };
        return Ok(branch);
    };
    let mut z = join(&start.y, start.mu);
    let mut ds = opts.ds.clamp(opts.ds_min, opts.ds_max);
    let mut streak = 0usize;
    let mut far = false;
    let mut steps = 0usize;
    loop {
        if steps >= opts.max_steps {
            branch.termination = Termination::StepLimit { reason: alloc::format!("{} steps", opts.max_steps) };
            break;
        }
        let pred = &z + &t * ds;
        let tt = t.clone();
        let corrected = newton(
            pred.clone(),
            opts.newton_tol,
            |w| {
                let (y, mu) = split(w);
                let mut g = DVector::zeros(d + 1);
                g.rows_mut(0, d).copy_from(&sys.map(&y, mu)?);
                g[d] = tt.dot(&(w - &pred));
                let mut j = DMatrix::zeros(d + 1, d + 1);
                j.view_mut((0, 0), (d, d)).copy_from(&sys.jacobian(&y, mu)?);
                j.view_mut((0, d), (d, 1)).copy_from(&sys.dmu(&y, mu)?);
                j.view_mut((d, 0), (1, d + 1)).copy_from(&tt.transpose());
                Ok((g, j))
            },
            |g| norm(&g.rows(0, d).into_owned()).max(g[d].abs()),
        );
        let accepted = match corrected {
            Ok(Some((w, moved))) if moved <= ds => Some(w),
            Ok(_) => None,
            Err(Error::SingularInput { .. }) => None,
            Err(e) => return Err(e),
        };
        let Some(w) = accepted else {
            streak = 0;
            ds *= 0.5;
            if ds < opts.ds_min {
                branch.termination = Termination::StepLimit {
                    reason: alloc::format!("step size fell below {:e}", opts.ds_min),
                };
                break;
            }
            continue;
        };
        let (y, mu) = split(&w);
        let x = sys.config(&y);
        let (dmin, _, _) = x.min_distance();
        if dmin < opts.collision_tol {
            branch.termination = Termination::Collision { min_distance: dmin };
            break;
        }
        let point = BranchPoint::build(&sys, y, mu)?;
        // Near collisions rounding pushes the full gradient off the subspace.
        if point.residual > opts.newton_tol {
            streak = 0;
            ds *= 0.5;
            if ds < opts.ds_min {
                branch.termination = Termination::StepLimit {
                    reason: alloc::format!(
                        "residual {:e} above tolerance at min distance {dmin:e}",
                        point.residual
                    ),
                };
                break;
            }
            continue;
        }
        let ny = point.norm();
        steps += 1;
        branch.points.push(point);
        if ny > 20.0 * eps {
            far = true;
        }
        if mu.abs() > opts.mu_bound {
            branch.termination = Termination::MuBound;
            break;
        }
        if ny > opts.norm_bound {
            branch.termination = Termination::NormBound;
            break;
        }
        if far && ny < 10.0 * eps && (mu - seed.origin.mu).abs() > 10.0 * eps {
            let last = branch.points.last().expect("just pushed");
            let mu_end = landing_mu(&sys, last, opts.newton_tol)?;
            let matched = bif_points(&spec.with_mu(mu_end))?
                .into_iter()
                .filter(|p| p.h == h || h % p.h == 0 || p.h % h == 0)
                .find(|p| (p.mu - mu_end).abs() <= 1e-4);
            branch.termination = Termination::ReturnedToTrivial { mu_end, matched };
            break;
        }
        t_prev = t;
        match tangent(&sys, &branch.points.last().expect("just pushed").y, mu, &t_prev)? {
            Some(nt) => t = nt,
            None => {
                branch.termination = Termination::StepLimit { reason: String::from("singular tangent system") };
                break;
            }
        }
        z = w;
        streak += 1;
        if streak >= 3 {
            ds = (ds * 1.3).min(opts.ds_max);
            streak = 0;
        }
    }
    branch.max_symmetry_verified = verify_branch(&branch, spec)?.maximal;
    Ok(branch)
}

/// Distance threshold for the maximal-symmetry check.
pub const MAXIMALITY_TOL: f64 = 1e-4;

/// Number of leading branch points inspected by the maximal-symmetry check.
pub const MAXIMALITY_POINTS: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct BranchReport {
    pub max_residual: f64,
    pub max_symmetry_deviation: f64,
    /// Every point decomposes into `h`-gons and `2h`-gons with the central body placed correctly.
    pub classification_ok: bool,
    /// Smallest distance of the leading points from a strictly larger fixed subspace.
    pub min_maximality_distance: f64,
    pub maximal: bool,
    /// `η` at the origin plus `η` at the landing point, for branches that return.
    pub eta_sum: Option<i8>,
}

pub fn verify_branch(branch: &Branch, spec: &SystemSpec) -> Result<BranchReport> {
    let n = spec.n();
    let h = branch.h;
    let mut max_residual: f64 = 0.0;
    let mut max_sym: f64 = 0.0;
    let mut classification_ok = true;
    for p in &branch.points {
        max_residual = max_residual.max(p.residual);
        let r = symmetry_residual(&p.x, h)?;
        max_sym = max_sym.max(r);
        match classify_configuration(&p.x, h, 1e-8) {
            Ok(c) => {
                if let Some(center) = c.center {
                    let off = if h == 1 { center.im.abs() } else { center.norm() };
                    classification_ok &= off <= 1e-8;
                }
            }
            Err(_) => classification_ok = false,
        }
    }
    let larger: Vec<FixedSubspace> = (h + 1..=n)
        .filter(|p| n % p == 0 && p % h == 0)
        .map(|p| fixed_subspace_basis(spec.layout(), p))
        .collect::<Result<_>>()?;
    let x0 = polygon_coords(spec);
    let mut min_dist = f64::INFINITY;
    let mut nontrivial = true;
    for p in branch.points.iter().take(MAXIMALITY_POINTS) {
        let x = p.x.to_coords();
        nontrivial &= norm(&(&x - &x0)) > MAXIMALITY_TOL;
        for w in &larger {
            min_dist = min_dist.min(w.distance(&(&x - &x0)));
        }
    }
    let maximal = nontrivial && !branch.points.is_empty() && min_dist > MAXIMALITY_TOL;
    let eta_sum = match &branch.termination {
        Termination::ReturnedToTrivial { mu_end, .. } if branch.points.len() > 1 => {
            let s = spec.with_mu(*mu_end);
            let rho = window_radius(&s, h, *mu_end)?;
            eta(&s, h, *mu_end, rho).ok().map(|e| e + branch.origin.eta)
        }
        _ => None,
    };
    Ok(BranchReport {
        max_residual,
        max_symmetry_deviation: max_sym,
        classification_ok,
        min_maximality_distance: min_dist,
        maximal,
        eta_sum,
    })
}
