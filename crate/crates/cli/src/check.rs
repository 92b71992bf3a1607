//! The `check` subcommand: consistency checks over a grid of ring sizes.

use nalgebra::{DMatrix, DVector};
use releq::bifurcation::{
    bif_points, candidates, celestial_mu_k, closed_form_block, eta, n_index, sigma, sigma_from_blocks,
    window_radius, Sign,
};
use releq::continuation::ReducedSystem;
use releq::potentials::{gradient, hessian_analytic, hessian_at, hessian_fd, polygon_config};
use releq::sums::s_sum;
use releq::symmetry::{extract_blocks, formula_blocks};
use releq::{Complex64, DnlsPotential, Family, SystemSpec};

pub const DEFAULT_GRID: [usize; 11] = [2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 16];

const MU_GRID: [f64; 4] = [-2.0, -0.5, 0.5, 1.0];

/// Largest violation of one check and how many cases it covered.
struct Tally {
    name: &'static str,
    limit: f64,
    cases: usize,
    worst: f64,
    failures: usize,
    first: Option<String>,
}

impl Tally {
    fn new(name: &'static str, limit: f64) -> Self {
        Tally { name, limit, cases: 0, worst: 0.0, failures: 0, first: None }
    }

    fn value(&mut self, v: f64, case: impl FnOnce() -> String) {
        self.cases += 1;
        self.worst = self.worst.max(v);
        if !(v <= self.limit) {
            self.failures += 1;
            self.first.get_or_insert_with(case);
        }
    }

    fn holds(&mut self, ok: bool, case: impl FnOnce() -> String) {
        self.value(if ok { 0.0 } else { f64::INFINITY }, case);
    }
}

fn families(n: usize) -> Vec<(String, SystemSpec)> {
    let mut out = Vec::new();
    for (name, alpha) in [("vortex", 1.0), ("body", 2.0), ("alpha=2.5", 2.5)] {
        out.push((name.to_string(), SystemSpec::celestial(alpha, n, 0.0).expect("valid celestial spec")));
    }
    if n >= 3 {
        for p in [DnlsPotential::Cubic, DnlsPotential::Saturable] {
            out.push((format!("dnls-{}", p.name()), SystemSpec::dnls(p, n, 0.0).expect("valid dNLS spec")));
        }
    }
    out
}

fn frob(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Runs every check, prints a summary table and returns whether all passed.
pub fn run(grid: &[usize], inject_fault: bool) -> bool {
    let mut gradient_t = Tally::new("polygon gradient", 1e-10);
    let mut off_t = Tally::new("off-block mass", 1e-10);
    let mut block_t = Tally::new("formula blocks", 1e-10);
    let mut closed_t = Tally::new("closed-form blocks", 1e-10);
    let mut fd_t = Tally::new("hessian vs fd", 1e-6);
    let mut sigma_t = Tally::new("sigma agreement", 0.0);
    let mut jac_t = Tally::new("jacobian sign", 0.0);
    let mut eta_t = Tally::new("degree jumps", 0.0);
    let mut special_t = Tally::new("closed forms", 1e-12);

    for &n in grid {
        if n < 2 {
            continue;
        }
        for (name, base) in families(n) {
            for mu in MU_GRID {
                let spec = base.with_mu(mu);
                let case = || format!("{name} n={n} mu={mu}");
                let (x0, _) = polygon_config(&spec);
                match gradient(&spec, &x0) {
                    Ok(g) => gradient_t.value(g.norm(), case),
                    Err(e) => gradient_t.holds(false, || format!("{} ({e})", case())),
                }
                let Ok(h) = hessian_at(&spec, &x0) else {
                    off_t.holds(false, case);
                    continue;
                };
                let extracted = match extract_blocks(&h, spec.layout()) {
                    Ok(b) => b,
                    Err(e) => {
                        off_t.holds(false, || format!("{} ({e})", case()));
                        continue;
                    }
                };
                off_t.value(extracted.off_block, case);
                let mut formula = formula_blocks(&hessian_analytic(&spec));
                if inject_fault {
                    if let Some((_, b)) = formula.blocks.first_mut() {
                        b[(0, 0)] += 1e-6;
                    }
                }
                for (k, b) in &extracted.blocks {
                    let f = formula.block(*k).expect("formula block for every mode");
                    block_t.value(frob(&(b - f)), || format!("{} k={k}", case()));
                    if let Ok(c) = closed_form_block(&spec, *k) {
                        closed_t.value(frob(&(b - &c)), || format!("{} k={k}", case()));
                    }
                    if *k != n && 2 * k > n {
                        continue;
                    }
                    let s = sigma(&spec, *k).sigma;
                    if s != Sign::Zero {
                        sigma_t.holds(s == sigma_from_blocks(&spec, *k).sigma, || format!("{} k={k}", case()));
                    }
                }
                if let Ok(fd) = hessian_fd(&spec, &x0, 1e-4) {
                    fd_t.value((&h - &fd).norm() / h.norm().max(1.0), case);
                }
                for hh in (1..=n).filter(|d| n % d == 0) {
                    let Ok(idx) = n_index(&spec, hh) else { continue };
                    let near = candidates(&spec, hh)
                        .map(|c| c.iter().any(|r| (r - mu).abs() < 1e-6))
                        .unwrap_or(true);
                    if idx == 0 || near {
                        continue;
                    }
                    let Ok(sys) = ReducedSystem::new(&spec, hh) else { continue };
                    let Ok(j) = sys.jacobian_fd(&DVector::zeros(sys.dim()), mu, 1e-5) else { continue };
                    let det = j.determinant();
                    jac_t.holds(det.signum() as i8 == idx, || format!("{} h={hh}", case()));
                }
            }
            match bif_points(&base) {
                Ok(points) => {
                    for p in points.iter().filter(|p| p.simple && !p.trivial) {
                        eta_t.holds(p.eta.abs() == 2, || format!("{name} n={n} k={} mu={}", p.k, p.mu));
                    }
                }
                Err(e) => eta_t.holds(false, || format!("{name} n={n} ({e})")),
            }
            if let Family::Celestial { alpha } = base.family() {
                let s1 = base.s1();
                let at = base.with_mu(-s1);
                let zero = window_radius(&at, 1, -s1).and_then(|r| eta(&at, 1, -s1, r));
                eta_t.holds(zero == Ok(0), || format!("{name} n={n} eta_1(-s1) = {zero:?}"));
                if *alpha == 1.0 && n >= 3 {
                    let nf = n as f64;
                    for k in 1..n {
                        let kf = k as f64;
                        let s = s_sum(1.0, n, k as i64).unwrap_or(f64::NAN);
                        special_t.value((s - kf * (nf - kf) / 2.0).abs(), || format!("vortex s_{k} n={n}"));
                    }
                    let mu1 = celestial_mu_k(1.0, n, 1).unwrap_or(f64::NAN);
                    special_t.value((mu1 - (nf - 1.0) * (nf - 1.0) / 4.0).abs(), || format!("vortex mu_1 n={n}"));
                    for k in 2..=n / 2 {
                        let kf = k as f64;
                        let mu = celestial_mu_k(1.0, n, k).unwrap_or(f64::NAN);
                        let want = (-kf * kf + nf * kf - 2.0 * nf + 2.0) / 4.0;
                        special_t.value((mu - want).abs(), || format!("vortex mu_{k} n={n}"));
                    }
                }
                if n == 2 {
                    let want = if *alpha == 1.0 {
                        Some(-5.0 / 4.0)
                    } else if *alpha == 2.0 {
                        Some(-17.0 / 12.0)
                    } else {
                        None
                    };
                    if let Some(want) = want {
                        let mu = celestial_mu_k(*alpha, 2, 1).unwrap_or(f64::NAN);
                        special_t.value((mu - want).abs(), || format!("{name} n=2 mu_1"));
                    }
                }
            }
        }
    }

    let tallies = [gradient_t, off_t, block_t, closed_t, fd_t, sigma_t, jac_t, eta_t, special_t];
    println!("{:<20} {:>7} {:>9} {:>12} {:>10}  status", "check", "cases", "failures", "worst", "limit");
    let mut ok = true;
    for t in &tallies {
        let pass = t.failures == 0 && t.cases > 0;
        ok &= pass;
        println!(
            "{:<20} {:>7} {:>9} {:>12.3e} {:>10.1e}  {}",
            t.name,
            t.cases,
            t.failures,
            t.worst,
            t.limit,
            if pass { "ok" } else { "FAIL" }
        );
        if let Some(first) = &t.first {
            println!("    first failure: {first}");
        }
    }
    ok
}
