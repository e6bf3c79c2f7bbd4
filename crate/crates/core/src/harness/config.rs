use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::estimators::ZGrid;
use crate::graph::{Digraph, Edge, GraphSpec};
use crate::spectral::{ArcSet, GUARD_BAND};
use crate::walk::{DisorderSpec, FamilyKind};

pub const SCHEMA_VERSION: u32 = 1;

/// Estimators the harness can run, in the order they are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Spectrum,
    Ec,
    Fracmom,
    Specavg,
    Gapprob,
    Decay,
    Dynloc,
    Identities,
    Fmec,
    Smallness,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 10] = [
        EstimatorKind::Spectrum,
        EstimatorKind::Ec,
        EstimatorKind::Fracmom,
        EstimatorKind::Specavg,
        EstimatorKind::Gapprob,
        EstimatorKind::Decay,
        EstimatorKind::Dynloc,
        EstimatorKind::Identities,
        EstimatorKind::Fmec,
        EstimatorKind::Smallness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Spectrum => "spectrum",
            EstimatorKind::Ec => "ec",
            EstimatorKind::Fracmom => "fracmom",
            EstimatorKind::Specavg => "specavg",
            EstimatorKind::Gapprob => "gapprob",
            EstimatorKind::Decay => "decay",
            EstimatorKind::Dynloc => "dynloc",
            EstimatorKind::Identities => "identities",
            EstimatorKind::Fmec => "fmec",
            EstimatorKind::Smallness => "smallness",
        }
    }

    /// Label passed to `split_seed`; fixed so that adding estimators to a
    /// config does not change the streams of the others.
    pub fn seed_label(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `"full"`, `"empty"`, `"upper_half"`, or a list of `[start, end]` angle pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArcsConfig {
    Named(String),
    Arcs(Vec<[f64; 2]>),
}

impl Default for ArcsConfig {
    fn default() -> Self {
        ArcsConfig::Named("full".into())
    }
}

impl ArcsConfig {
    pub fn to_arcs(&self) -> Result<ArcSet, String> {
        match self {
            ArcsConfig::Named(name) => match name.as_str() {
                "full" => Ok(ArcSet::full()),
                "empty" => Ok(ArcSet::empty()),
                "upper_half" => Ok(ArcSet::upper_half()),
                other => Err(format!("unknown arc set {other:?}; expected full, empty, upper_half or a list of pairs")),
            },
            ArcsConfig::Arcs(pairs) => {
                let pairs: Vec<(f64, f64)> = pairs.iter().map(|p| (p[0], p[1])).collect();
                ArcSet::new(&pairs).map_err(|e| e.to_string())
            }
        }
    }
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_family() -> FamilyKind {
    FamilyKind::Identity
}
fn default_disorder() -> DisorderSpec {
    DisorderSpec::Uniform
}

/// Default exponent `s`; below 1/3 so the decay experiment accepts it.
pub const DEFAULT_S: f64 = 0.2;

/// `s / (1 + s) - 1e-3`: strictly below `s` and below `1 - beta / s`.
pub fn default_beta(s: f64) -> f64 {
    s / (1.0 + s) - 1e-3
}

macro_rules! defaults {
    ($($name:ident: $ty:ty = $value:expr;)*) => {
        $(fn $name() -> $ty { $value })*
    };
}

defaults! {
    d_s: f64 = DEFAULT_S;
    d_samples: usize = 1000;
    d_one: usize = 1;
    d_seed: u64 = 1;
    d_nodes: usize = 64;
    d_outer: usize = 100;
    d_radius: usize = 4;
    d_etas: Vec<f64> = vec![0.003, 0.01, 0.03];
    d_gap_z: Vec<[f64; 2]> = vec![[0.99, 0.0], [1.01, 0.0], [0.0, 1.01]];
    d_sigma: f64 = 3.0;
    d_factor: f64 = 1.0;
    d_decay_z: [f64; 2] = [1.01, 0.0];
    d_ladder: Vec<f64> = vec![0.2, 0.1, 0.05];
    d_r2: f64 = 0.9;
    d_horizon: usize = 1000;
    d_id_angles: usize = 4;
    d_residual_tol: f64 = 1e-9;
    d_vanish_tol: f64 = 1e-12;
    d_fmec_radius: usize = 2;
    d_fmec_s: f64 = 0.3;
    d_theta_nodes: usize = 64;
    d_deltas: Vec<f64> = vec![0.9, 0.99, 0.999];
    d_cw_samples: usize = 10;
    d_cw_radii: Vec<f64> = vec![0.5, 0.9, 0.99];
    d_cw_angles: usize = 8;
    d_small_radius: usize = 5;
    d_small_z: [f64; 2] = [0.0, 0.8];
    d_small_s: f64 = 0.5;
    d_small_p: f64 = 3.0;
    d_small_ladder: Vec<f64> = vec![0.001, 0.0005];
    d_small_slack: f64 = 1.5;
    d_ec_beta: f64 = 0.5;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(default)]
    pub realization: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EcConfig {
    /// Directed edges as `[from, to]`; default: the first edge.
    pub e: Option<[usize; 2]>,
    pub f: Option<[usize; 2]>,
    #[serde(default)]
    pub arcs: ArcsConfig,
    #[serde(default = "d_ec_beta")]
    pub beta: f64,
    #[serde(default)]
    pub realization: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FracmomConfig {
    pub e: Option<[usize; 2]>,
    pub f: Option<[usize; 2]>,
    #[serde(default = "d_s")]
    pub s: f64,
    /// Explicit `[re, im]` points; default: the `[zgrid]` points.
    pub z: Option<Vec<[f64; 2]>>,
    #[serde(default = "d_samples")]
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecavgConfig {
    pub e: Option<[usize; 2]>,
    /// Default: the `[zgrid]` points inside the disk.
    pub z: Option<Vec<[f64; 2]>>,
    #[serde(default = "d_nodes")]
    pub nodes: usize,
    #[serde(default = "d_outer")]
    pub n_outer: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapprobConfig {
    #[serde(default)]
    pub root: usize,
    #[serde(default = "d_radius")]
    pub radius: usize,
    #[serde(default = "d_gap_z")]
    pub z: Vec<[f64; 2]>,
    #[serde(default = "d_etas")]
    pub etas: Vec<f64>,
    #[serde(default = "d_samples")]
    pub n_samples: usize,
    /// The check is `estimate <= bound_factor * bound + sigma_slack * std_error`.
    #[serde(default = "d_sigma")]
    pub sigma_slack: f64,
    #[serde(default = "d_factor")]
    pub bound_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    pub e: Option<[usize; 2]>,
    #[serde(default = "d_s")]
    pub s: f64,
    #[serde(default = "d_decay_z")]
    pub z: [f64; 2],
    #[serde(default = "d_ladder")]
    pub strengths: Vec<f64>,
    #[serde(default = "d_seed")]
    pub family_seed: u64,
    #[serde(default = "d_samples")]
    pub n_samples: usize,
    #[serde(default = "d_one")]
    pub fit_min: usize,
    pub fit_max: Option<usize>,
    #[serde(default = "d_r2")]
    pub min_r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynlocConfig {
    pub e: Option<[usize; 2]>,
    #[serde(default)]
    pub arcs: ArcsConfig,
    #[serde(default = "d_horizon")]
    pub horizon: usize,
    #[serde(default = "d_ladder")]
    pub strengths: Vec<f64>,
    #[serde(default = "d_seed")]
    pub family_seed: u64,
    #[serde(default = "d_samples")]
    pub n_samples: usize,
    #[serde(default = "d_one")]
    pub fit_min: usize,
    pub fit_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentitiesConfig {
    #[serde(default)]
    pub root: usize,
    #[serde(default = "d_one")]
    pub radius: usize,
    #[serde(default = "d_one")]
    pub realizations: usize,
    /// Default: the `[zgrid]` radii with `angles` angles each.
    pub z: Option<Vec<[f64; 2]>>,
    #[serde(default = "d_id_angles")]
    pub angles: usize,
    #[serde(default = "d_residual_tol")]
    pub residual_tol: f64,
    #[serde(default = "d_vanish_tol")]
    pub vanish_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FmecConfig {
    #[serde(default)]
    pub root: usize,
    #[serde(default = "d_fmec_radius")]
    pub radius: usize,
    /// Default: the first edge whose source is farthest from the root.
    pub e: Option<[usize; 2]>,
    /// Default: the first outgoing edge of the root.
    pub f: Option<[usize; 2]>,
    #[serde(default)]
    pub arcs: ArcsConfig,
    #[serde(default = "d_fmec_s")]
    pub s: f64,
    /// Default: `s / (1 + s) - 1e-3`.
    pub beta: Option<f64>,
    #[serde(default = "d_theta_nodes")]
    pub theta_nodes: usize,
    #[serde(default = "d_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "d_samples")]
    pub n_samples: usize,
    #[serde(default = "d_cw_samples")]
    pub cw_samples: usize,
    #[serde(default = "d_cw_radii")]
    pub cw_radii: Vec<f64>,
    #[serde(default = "d_cw_angles")]
    pub cw_angles: usize,
    #[serde(default = "d_nodes")]
    pub cw_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmallnessConfig {
    #[serde(default)]
    pub root: usize,
    #[serde(default = "d_small_radius")]
    pub radius: usize,
    /// Default: an edge into the root and another edge of the ball that is not its reverse.
    pub e: Option<[usize; 2]>,
    pub f: Option<[usize; 2]>,
    #[serde(default = "d_small_z")]
    pub z: [f64; 2],
    #[serde(default = "d_small_s")]
    pub s: f64,
    #[serde(default = "d_small_p")]
    pub p: f64,
    #[serde(default = "d_small_ladder")]
    pub strengths: Vec<f64>,
    #[serde(default = "d_seed")]
    pub family_seed: u64,
    #[serde(default = "d_samples")]
    pub n_samples: usize,
    #[serde(default = "d_small_slack")]
    pub slack: f64,
}

macro_rules! empty_default {
    ($($ty:ident),*) => {
        $(impl Default for $ty {
            fn default() -> Self {
                toml::from_str("").expect("all fields have defaults")
            }
        })*
    };
}

empty_default!(
    SpectrumConfig,
    EcConfig,
    FracmomConfig,
    SpecavgConfig,
    GapprobConfig,
    DecayConfig,
    DynlocConfig,
    IdentitiesConfig,
    FmecConfig,
    SmallnessConfig
);

/// A complete experiment description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema: u32,
    pub seed: u64,
    /// Not part of the config hash.
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    pub estimators: Vec<EstimatorKind>,
    pub graph: GraphSpec,
    #[serde(default = "default_family")]
    pub family: FamilyKind,
    #[serde(default = "default_disorder")]
    pub disorder: DisorderSpec,
    #[serde(default)]
    pub zgrid: ZGrid,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub ec: EcConfig,
    #[serde(default)]
    pub fracmom: FracmomConfig,
    #[serde(default)]
    pub specavg: SpecavgConfig,
    #[serde(default)]
    pub gapprob: GapprobConfig,
    #[serde(default)]
    pub decay: DecayConfig,
    #[serde(default)]
    pub dynloc: DynlocConfig,
    #[serde(default)]
    pub identities: IdentitiesConfig,
    #[serde(default)]
    pub fmec: FmecConfig,
    #[serde(default)]
    pub smallness: SmallnessConfig,
}

/// One failed constraint, named by its dotted config key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub key: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

pub fn to_complex(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

/// Resolves a `[from, to]` pair, or `default` when absent.
pub fn resolve_edge(g: &Digraph, pair: Option<[usize; 2]>, default: usize) -> Result<usize, String> {
    match pair {
        None => Ok(default),
        Some([from, to]) => g.edge_index(Edge::new(from, to)).ok_or_else(|| format!("{from} -> {to} is not an edge")),
    }
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, HarnessError> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
    let violations = config.validate();
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(HarnessError::Invalid(violations))
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

struct Checker {
    out: Vec<Violation>,
}

impl Checker {
    fn fail(&mut self, key: &str, message: impl Into<String>) {
        self.out.push(Violation { key: key.into(), message: message.into() });
    }

    fn check(&mut self, ok: bool, key: &str, message: impl Into<String>) {
        if !ok {
            self.fail(key, message);
        }
    }

    fn samples(&mut self, key: &str, n: usize) {
        self.check(n >= 2, key, format!("need at least 2 samples, got {n}"));
    }

    fn fraction(&mut self, key: &str, s: f64) {
        self.check(s > 0.0 && s < 1.0, key, format!("must lie in (0, 1), got {s}"));
    }

    fn edge(&mut self, g: &Digraph, key: &str, pair: Option<[usize; 2]>) {
        if let Err(msg) = resolve_edge(g, pair, 0) {
            self.fail(key, msg);
        }
    }

    fn points(&mut self, key: &str, points: &[[f64; 2]], inside_only: bool) {
        if points.is_empty() {
            self.fail(key, "no points given");
        }
        for p in points {
            let r = to_complex(*p).norm();
            if !r.is_finite() || (r - 1.0).abs() <= GUARD_BAND {
                self.fail(key, format!("point {p:?} lies within the guard band around the unit circle"));
            } else if inside_only && r >= 1.0 {
                self.fail(key, format!("point {p:?} must lie inside the unit disk"));
            }
        }
    }

    fn arcs(&mut self, key: &str, arcs: &ArcsConfig) {
        if let Err(msg) = arcs.to_arcs() {
            self.fail(key, msg);
        }
    }

    fn strengths(&mut self, key: &str, ladder: &[f64]) {
        self.check(!ladder.is_empty(), key, "ladder is empty");
        for &phi in ladder {
            self.check(phi >= 0.0 && phi.is_finite(), key, format!("strength must be finite and >= 0, got {phi}"));
        }
    }

    fn ball(&mut self, g: &Digraph, key: &str, root: usize, radius: usize) {
        if root >= g.vertex_count() {
            self.fail(&format!("{key}.root"), format!("vertex {root} out of range"));
        } else if radius == 0 {
            self.fail(&format!("{key}.radius"), "must be at least 1");
        }
    }
}

impl ExperimentConfig {
    /// Every violated constraint of the selected estimators.
    pub fn validate(&self) -> Vec<Violation> {
        let mut c = Checker { out: Vec::new() };
        c.check(self.schema == SCHEMA_VERSION, "schema", format!("unsupported schema {}, expected {SCHEMA_VERSION}", self.schema));
        c.check(!self.estimators.is_empty(), "estimators", "no estimators selected");
        let unique: BTreeSet<_> = self.estimators.iter().collect();
        c.check(unique.len() == self.estimators.len(), "estimators", "duplicate entries");
        if let FamilyKind::NearIdentity { strength, .. } = self.family {
            c.check(strength >= 0.0, "family.strength", "must be >= 0");
        }
        if let Err(e) = self.disorder.validate() {
            c.fail("disorder", e.to_string());
        }
        if let Err(e) = self.zgrid.validate() {
            c.fail("zgrid", e.to_string());
        }
        let g = match self.graph.build() {
            Ok(g) => g,
            Err(e) => {
                c.fail("graph", e.to_string());
                return c.out;
            }
        };
        for kind in &self.estimators {
            self.validate_estimator(&mut c, &g, *kind);
        }
        c.out
    }

    fn validate_estimator(&self, c: &mut Checker, g: &Digraph, kind: EstimatorKind) {
        match kind {
            EstimatorKind::Spectrum => {}
            EstimatorKind::Ec => {
                let p = &self.ec;
                c.edge(g, "ec.e", p.e);
                c.edge(g, "ec.f", p.f);
                c.arcs("ec.arcs", &p.arcs);
                c.check((0.0..=1.0).contains(&p.beta), "ec.beta", "must lie in [0, 1]");
            }
            EstimatorKind::Fracmom => {
                let p = &self.fracmom;
                c.edge(g, "fracmom.e", p.e);
                c.edge(g, "fracmom.f", p.f);
                c.fraction("fracmom.s", p.s);
                c.samples("fracmom.n_samples", p.n_samples);
                if let Some(z) = &p.z {
                    c.points("fracmom.z", z, false);
                }
            }
            EstimatorKind::Specavg => {
                let p = &self.specavg;
                c.edge(g, "specavg.e", p.e);
                c.samples("specavg.n_outer", p.n_outer);
                c.check(p.nodes >= 64, "specavg.nodes", format!("need at least 64 quadrature nodes, got {}", p.nodes));
                match &p.z {
                    Some(z) => c.points("specavg.z", z, true),
                    None => c.check(!self.zgrid.inner_points().is_empty(), "specavg.z", "zgrid has no points inside the disk"),
                }
            }
            EstimatorKind::Gapprob => {
                let p = &self.gapprob;
                c.ball(g, "gapprob", p.root, p.radius);
                c.samples("gapprob.n_samples", p.n_samples);
                c.check(!p.etas.is_empty(), "gapprob.etas", "no eta values");
                for &eta in &p.etas {
                    c.check(eta > 0.0 && eta.is_finite(), "gapprob.etas", format!("eta must be positive, got {eta}"));
                }
                c.check(!p.z.is_empty(), "gapprob.z", "no points given");
                c.check(self.family == FamilyKind::Identity, "family", "gapprob needs the identity family");
            }
            EstimatorKind::Decay => {
                let p = &self.decay;
                c.edge(g, "decay.e", p.e);
                c.check(p.s > 0.0 && p.s < 1.0 / 3.0, "decay.s", "s must be < 1/3");
                c.points("decay.z", &[p.z], false);
                c.strengths("decay.strengths", &p.strengths);
                c.samples("decay.n_samples", p.n_samples);
                c.check(p.fit_min >= 1, "decay.fit_min", "must be at least 1");
            }
            EstimatorKind::Dynloc => {
                let p = &self.dynloc;
                c.edge(g, "dynloc.e", p.e);
                c.arcs("dynloc.arcs", &p.arcs);
                c.strengths("dynloc.strengths", &p.strengths);
                c.samples("dynloc.n_samples", p.n_samples);
                c.check(p.fit_min >= 1, "dynloc.fit_min", "must be at least 1");
            }
            EstimatorKind::Identities => {
                let p = &self.identities;
                c.ball(g, "identities", p.root, p.radius);
                c.check(p.realizations >= 1, "identities.realizations", "must be at least 1");
                c.check(p.angles >= 1, "identities.angles", "must be at least 1");
                if let Some(z) = &p.z {
                    c.points("identities.z", z, false);
                }
            }
            EstimatorKind::Fmec => {
                let p = &self.fmec;
                c.ball(g, "fmec", p.root, p.radius);
                c.edge(g, "fmec.e", p.e);
                c.edge(g, "fmec.f", p.f);
                c.arcs("fmec.arcs", &p.arcs);
                c.fraction("fmec.s", p.s);
                let beta = p.beta.unwrap_or(default_beta(p.s));
                c.check(beta > 0.0 && beta < p.s, "fmec.beta", format!("beta must lie in (0, s), got {beta}"));
                c.check(beta <= 1.0 - beta / p.s, "fmec.beta", "beta must satisfy beta <= 1 - beta / s");
                c.samples("fmec.n_samples", p.n_samples);
                c.check(p.theta_nodes >= 1, "fmec.theta_nodes", "must be at least 1");
                c.check(!p.deltas.is_empty(), "fmec.deltas", "no delta values");
                for &d in &p.deltas {
                    c.check(d > 0.0 && d < 1.0, "fmec.deltas", format!("delta must lie in (0, 1), got {d}"));
                }
                c.check(
                    p.cw_samples >= 1 && p.cw_samples <= p.n_samples,
                    "fmec.cw_samples",
                    "must lie in 1..=n_samples",
                );
                for &r in &p.cw_radii {
                    c.check(r > 0.0 && r < 1.0 - GUARD_BAND, "fmec.cw_radii", format!("radius {r} must lie inside the disk"));
                }
                c.check(p.cw_nodes >= 64, "fmec.cw_nodes", "need at least 64 quadrature nodes");
            }
            EstimatorKind::Smallness => {
                let p = &self.smallness;
                c.ball(g, "smallness", p.root, p.radius);
                c.edge(g, "smallness.e", p.e);
                c.edge(g, "smallness.f", p.f);
                c.fraction("smallness.s", p.s);
                c.check(p.p > 1.0 / (1.0 - p.s), "smallness.p", "p must exceed 1 / (1 - s)");
                c.points("smallness.z", &[p.z], false);
                c.strengths("smallness.strengths", &p.strengths);
                c.samples("smallness.n_samples", p.n_samples);
            }
        }
    }

    /// SHA-256 over the canonical JSON form of the config, without `out_dir`.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("out_dir");
        }
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }

    /// The same config restricted to one estimator.
    pub fn only(&self, kind: EstimatorKind) -> Self {
        Self { estimators: vec![kind], ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        seed = 7
        estimators = ["gapprob"]
        [graph]
        kind = "cycle"
        k = 16
    "#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config_str(MINIMAL).unwrap();
        assert_eq!(c.schema, 1);
        assert_eq!(c.family, FamilyKind::Identity);
        assert_eq!(c.gapprob.radius, 4);
        assert_eq!(c.gapprob.etas, vec![0.003, 0.01, 0.03]);
        assert_eq!(c.zgrid, ZGrid::default());
    }

    #[test]
    fn unknown_keys_are_named() {
        let text = format!("gamma_rate = 1.0\n{MINIMAL}");
        let err = parse_config_str(&text).unwrap_err().to_string();
        assert!(err.contains("gamma_rate"), "{err}");
        let text = MINIMAL.replace("k = 16", "k = 16\n[decay]\ngamma_rate = 2");
        assert!(parse_config_str(&text).unwrap_err().to_string().contains("gamma_rate"));
    }

    #[test]
    fn decay_rejects_large_s() {
        let text = MINIMAL.replace("[\"gapprob\"]", "[\"decay\"]").replace("k = 16", "k = 16\n[decay]\ns = 0.5");
        match parse_config_str(&text) {
            Err(HarnessError::Invalid(v)) => {
                assert_eq!(v.len(), 1);
                assert_eq!(v[0].key, "decay.s");
                assert_eq!(v[0].message, "s must be < 1/3");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn all_violations_are_collected() {
        let text = MINIMAL.replace("[\"gapprob\"]", "[\"fmec\", \"fracmom\"]").replace(
            "k = 16",
            "k = 16\n[fmec]\ns = 0.3\nbeta = 0.35\n[fracmom]\ns = 1.5\nn_samples = 1\ne = [0, 5]",
        );
        let Err(HarnessError::Invalid(v)) = parse_config_str(&text) else { panic!() };
        let keys: Vec<&str> = v.iter().map(|x| x.key.as_str()).collect();
        for key in ["fmec.beta", "fracmom.s", "fracmom.n_samples", "fracmom.e"] {
            assert!(keys.contains(&key), "{keys:?}");
        }
    }

    #[test]
    fn schema_and_grid_are_checked() {
        let text = format!("schema = 2\n{MINIMAL}\n[zgrid]\nradii = [1.0]\nangles = 4");
        let Err(HarnessError::Invalid(v)) = parse_config_str(&text) else { panic!() };
        let keys: Vec<&str> = v.iter().map(|x| x.key.as_str()).collect();
        assert_eq!(keys, ["schema", "zgrid"]);
    }

    #[test]
    fn hash_ignores_output_directory_only() {
        let a = parse_config_str(MINIMAL).unwrap();
        let mut b = a.clone();
        b.out_dir = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn default_beta_satisfies_constraints() {
        for s in [0.1, 0.2, 0.3, 0.5, 0.9] {
            let b = default_beta(s);
            assert!(b > 0.0 && b < s && b <= 1.0 - b / s);
        }
    }
}
