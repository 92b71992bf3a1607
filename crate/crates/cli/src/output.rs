//! Serialized forms of results. Field order here is the on-disk order.

use releq::bifurcation::BifurcationPoint;
use releq::continuation::{Branch, BranchReport, Termination};
use releq::symmetry::{Classification, PolygonKind};
use releq::{Complex64, Configuration, Family, SystemSpec};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
pub struct SpecJson {
    pub family: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential: Option<&'static str>,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

impl SpecJson {
    pub fn new(spec: &SystemSpec, with_mu: bool) -> Self {
        let (family, alpha, potential) = match spec.family() {
            Family::Celestial { alpha } if *alpha == 1.0 => ("vortex", Some(*alpha), None),
            Family::Celestial { alpha } if *alpha == 2.0 => ("body", Some(*alpha), None),
            Family::Celestial { alpha } => ("alpha", Some(*alpha), None),
            Family::Dnls(p) => ("dnls", None, Some(p.name())),
        };
        SpecJson { family, alpha, potential, n: spec.n(), mu: with_mu.then(|| spec.mu()) }
    }
}

pub fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

#[derive(Serialize)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn new(m: &nalgebra::DMatrix<Complex64>) -> Self {
        let rows = |f: fn(&Complex64) -> f64| {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect()
        };
        MatrixJson { re: rows(|z| z.re), im: rows(|z| z.im) }
    }
}

#[derive(Serialize)]
pub struct ModeJson {
    pub k: usize,
    pub dim: usize,
    pub block: MatrixJson,
    pub eigenvalues: Vec<f64>,
    pub sigma: i8,
}

#[derive(Serialize)]
pub struct IndexJson {
    pub h: usize,
    pub n_h: i8,
}

#[derive(Serialize)]
pub struct SpectrumJson {
    pub schema_version: u32,
    pub spec: SpecJson,
    pub omega: f64,
    pub off_block: f64,
    pub modes: Vec<ModeJson>,
    pub n_index: Vec<IndexJson>,
}

/// One row of the bifurcation table; also the CSV record layout.
#[derive(Serialize)]
pub struct BifRow {
    pub k: usize,
    pub h: usize,
    pub mu: f64,
    pub eta: i8,
    pub provenance: &'static str,
    pub physical: bool,
    pub note: String,
}

impl From<&BifurcationPoint> for BifRow {
    fn from(p: &BifurcationPoint) -> Self {
        BifRow {
            k: p.k,
            h: p.h,
            mu: p.mu,
            eta: p.eta,
            provenance: p.provenance.as_str(),
            physical: p.physical,
            note: p.note.clone().unwrap_or_default(),
        }
    }
}

#[derive(Serialize)]
pub struct BifPointJson {
    pub k: usize,
    pub h: usize,
    pub mu: f64,
    pub eta: i8,
    pub provenance: &'static str,
    pub physical: bool,
    pub simple: bool,
    pub trivial: bool,
    pub note: Option<String>,
}

impl From<&BifurcationPoint> for BifPointJson {
    fn from(p: &BifurcationPoint) -> Self {
        BifPointJson {
            k: p.k,
            h: p.h,
            mu: p.mu,
            eta: p.eta,
            provenance: p.provenance.as_str(),
            physical: p.physical,
            simple: p.simple,
            trivial: p.trivial,
            note: p.note.clone(),
        }
    }
}

#[derive(Serialize)]
pub struct AsymptoticsJson {
    pub k: usize,
    pub n: usize,
    pub ratio: f64,
}

#[derive(Serialize)]
pub struct BifJson {
    pub schema_version: u32,
    pub spec: SpecJson,
    pub points: Vec<BifPointJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub asymptotics: Option<Vec<AsymptoticsJson>>,
}

#[derive(Serialize)]
pub struct OriginJson {
    pub k: usize,
    pub h: usize,
    pub mu: f64,
    pub eta: i8,
}

#[derive(Serialize)]
pub struct BranchPointJson {
    pub mu: f64,
    pub x: Vec<[f64; 2]>,
    pub residual: f64,
    pub min_singular: f64,
}

#[derive(Serialize)]
pub struct TerminationJson {
    pub reason: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matched: Option<OriginJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl From<&Termination> for TerminationJson {
    fn from(t: &Termination) -> Self {
        let mut out =
            TerminationJson { reason: t.as_str(), mu_end: None, matched: None, min_distance: None, detail: None };
        match t {
            Termination::Collision { min_distance } => out.min_distance = Some(*min_distance),
            Termination::ReturnedToTrivial { mu_end, matched } => {
                out.mu_end = Some(*mu_end);
                out.matched = matched.as_ref().map(|p| OriginJson { k: p.k, h: p.h, mu: p.mu, eta: p.eta });
            }
            Termination::StepLimit { reason } => out.detail = Some(reason.clone()),
            Termination::MuBound | Termination::NormBound => {}
        }
        out
    }
}

#[derive(Serialize)]
pub struct VerificationJson {
    pub max_residual: f64,
    pub max_symmetry_dev: f64,
    pub classification_pass: bool,
    pub min_maximality_distance: f64,
    pub maximality_pass: bool,
    pub eta_sum: Option<i8>,
}

impl From<&BranchReport> for VerificationJson {
    fn from(r: &BranchReport) -> Self {
        VerificationJson {
            max_residual: r.max_residual,
            max_symmetry_dev: r.max_symmetry_deviation,
            classification_pass: r.classification_ok,
            min_maximality_distance: r.min_maximality_distance,
            maximality_pass: r.maximal,
            eta_sum: r.eta_sum,
        }
    }
}

#[derive(Serialize)]
pub struct BranchJson {
    pub schema_version: u32,
    pub spec: SpecJson,
    pub origin: OriginJson,
    pub direction: &'static str,
    pub points: Vec<BranchPointJson>,
    pub termination: TerminationJson,
    pub verification: VerificationJson,
}

impl BranchJson {
    pub fn new(spec: &SystemSpec, b: &Branch, report: &BranchReport) -> Self {
        BranchJson {
            schema_version: SCHEMA_VERSION,
            spec: SpecJson::new(spec, false),
            origin: OriginJson { k: b.origin.k, h: b.origin.h, mu: b.origin.mu, eta: b.origin.eta },
            direction: b.direction.as_str(),
            points: b
                .points
                .iter()
                .map(|p| BranchPointJson {
                    mu: p.mu,
                    x: p.x.points().map(pair).collect(),
                    residual: p.residual,
                    min_singular: p.min_singular,
                })
                .collect(),
            termination: (&b.termination).into(),
            verification: report.into(),
        }
    }
}

#[derive(Serialize)]
pub struct BranchRow {
    pub step: usize,
    pub mu: f64,
    pub norm: f64,
    pub min_distance: f64,
}

#[derive(Serialize)]
pub struct ComponentJson {
    pub kind: &'static str,
    pub r: f64,
    pub phi: f64,
    pub bodies: Vec<usize>,
}

#[derive(Serialize)]
pub struct ClassificationJson {
    pub schema_version: u32,
    pub h: usize,
    pub residual: f64,
    pub center: Option<[f64; 2]>,
    pub h_gons: usize,
    pub two_h_gons: usize,
    pub components: Vec<ComponentJson>,
}

impl From<&Classification> for ClassificationJson {
    fn from(c: &Classification) -> Self {
        ClassificationJson {
            schema_version: SCHEMA_VERSION,
            h: c.h,
            residual: c.residual,
            center: c.center.map(pair),
            h_gons: c.count(PolygonKind::HGon),
            two_h_gons: c.count(PolygonKind::TwoHGon),
            components: c
                .components
                .iter()
                .map(|p| ComponentJson {
                    kind: match p.kind {
                        PolygonKind::HGon => "h-gon",
                        PolygonKind::TwoHGon => "2h-gon",
                    },
                    r: p.r,
                    phi: p.phi,
                    bodies: p.bodies.clone(),
                })
                .collect(),
        }
    }
}

/// Configuration read back from a branch file or a `{center, ring}` object.
pub fn parse_configuration(v: &serde_json::Value, index: Option<usize>) -> Result<Configuration, String> {
    let point = |p: &serde_json::Value| -> Result<Complex64, String> {
        let a = p.as_array().filter(|a| a.len() == 2).ok_or("points must be [re, im] pairs")?;
        let f = |x: &serde_json::Value| x.as_f64().ok_or_else(|| String::from("coordinates must be numbers"));
        Ok(Complex64::new(f(&a[0])?, f(&a[1])?))
    };
    if let Some(points) = v.get("points").and_then(|p| p.as_array()) {
        let family = v.pointer("/spec/family").and_then(|f| f.as_str()).ok_or("branch file lacks spec.family")?;
        let has_center = family != "dnls";
        let i = index.unwrap_or(points.len().saturating_sub(1));
        let p = points.get(i).ok_or_else(|| format!("branch file has no point {i}"))?;
        let xs = p.get("x").and_then(|x| x.as_array()).ok_or("branch point lacks x")?;
        let mut pts = xs.iter().map(point).collect::<Result<Vec<_>, _>>()?;
        let center = if has_center && !pts.is_empty() { Some(pts.remove(0)) } else { None };
        return Ok(Configuration { center, ring: pts });
    }
    let ring = v
        .get("ring")
        .and_then(|r| r.as_array())
        .ok_or("expected a branch file or an object with a ring array")?
        .iter()
        .map(point)
        .collect::<Result<Vec<_>, _>>()?;
    let center = match v.get("center") {
        None | Some(serde_json::Value::Null) => None,
        Some(c) => Some(point(c)?),
    };
    Ok(Configuration { center, ring })
}
