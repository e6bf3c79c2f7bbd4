use num_complex::Complex64;

use super::config::{default_beta, resolve_edge, to_complex, EstimatorKind, ExperimentConfig};
use super::{HarnessError, OutputDir};
use crate::estimators::{
    calibrate_smallness, check_fmec_bound, check_geometric_resolvent, decay_experiment, dynloc_experiment, gap_probability,
    mc_fractional_moment, mc_spectral_average, resolvent_smallness_check, DecayFit, DecayParams, DynlocParams, FmecParams,
    McEstimate, SmallnessParams, ZGrid,
};
use crate::graph::{BallSpec, Digraph};
use crate::seeding::split_seed;
use crate::spectral::{edge_measure, eigendecompose, DEFAULT_CLUSTER_EPS};
use crate::walk::{
    build_unitary, make_family, sample_disorder, write_edge_list, write_matrix_text, FamilyKind, ScatteringFamily,
};

fn edge(g: &Digraph, pair: Option<[usize; 2]>, default: usize) -> Result<usize, HarnessError> {
    resolve_edge(g, pair, default).map_err(|msg| HarnessError::Io(format!("edge lookup: {msg}")))
}

fn points(explicit: &Option<Vec<[f64; 2]>>, fallback: impl FnOnce() -> Vec<Complex64>) -> Vec<Complex64> {
    match explicit {
        Some(p) => p.iter().copied().map(to_complex).collect(),
        None => fallback(),
    }
}

fn est_cols(e: &McEstimate) -> [String; 4] {
    [e.mean.to_string(), e.std_error.to_string(), e.n_samples.to_string(), e.seed.to_string()]
}

fn fit_cols(fit: &Option<DecayFit>) -> Vec<String> {
    match fit {
        Some(f) => vec![
            f.prefactor.to_string(),
            f.rate.to_string(),
            f.rate_std_error.to_string(),
            f.r_squared.to_string(),
            f.min_distance.to_string(),
            f.max_distance.to_string(),
            f.n_points.to_string(),
        ],
        None => vec![String::new(); 7],
    }
}

const FIT_HEADER: [&str; 7] = ["prefactor", "rate", "rate_std_error", "r_squared", "min_distance", "max_distance", "n_points"];

fn estimate_header(key: &[&'static str]) -> Vec<&'static str> {
    let mut h = key.to_vec();
    h.extend(["mean", "std_error", "n_samples", "seed"]);
    h
}

pub(super) fn dump_operator(config: &ExperimentConfig, g: &Digraph, out: &mut OutputDir) -> Result<(), HarnessError> {
    let seed = split_seed(config.seed, EstimatorKind::Spectrum.seed_label());
    let fam = make_family(g, &config.family)?;
    let dis = sample_disorder(g, &config.disorder, seed, config.spectrum.realization)?;
    let u = build_unitary(g, &fam, &dis)?;
    let mut edges = Vec::new();
    write_edge_list(g, &mut edges).map_err(|e| HarnessError::Io(e.to_string()))?;
    out.write_text("edges.txt", &edges)?;
    let mut matrix = Vec::new();
    write_matrix_text(&u, &mut matrix).map_err(|e| HarnessError::Io(e.to_string()))?;
    out.write_text("operator.txt", &matrix)?;
    Ok(())
}

pub(super) fn run_estimator(
    kind: EstimatorKind,
    config: &ExperimentConfig,
    g: &Digraph,
    out: &mut OutputDir,
    failures: &mut Vec<String>,
) -> Result<(), HarnessError> {
    let seed = split_seed(config.seed, kind.seed_label());
    let mu = &config.disorder;
    let family = || make_family(g, &config.family);
    let name = kind.name();
    match kind {
        EstimatorKind::Spectrum => {
            let dis = sample_disorder(g, mu, seed, config.spectrum.realization)?;
            let u = build_unitary(g, &family()?, &dis)?;
            let eig = eigendecompose(u.matrix(), DEFAULT_CLUSTER_EPS)?;
            let rows: Vec<Vec<String>> = eig
                .clusters()
                .iter()
                .enumerate()
                .map(|(i, c)| vec![i.to_string(), c.value.re.to_string(), c.value.im.to_string(), c.members.len().to_string()])
                .collect();
            out.write_csv("spectrum.csv", &["index", "lambda_re", "lambda_im", "multiplicity"], &rows)?;
            out.record(name, "clusters", eig.clusters().len() as f64, None, None);
            out.record(name, "reconstruction_residual", eig.reconstruction_residual(u.matrix()), None, None);
        }
        EstimatorKind::Ec => {
            let p = &config.ec;
            let (e, f) = (edge(g, p.e, 0)?, edge(g, p.f, 0)?);
            let arcs = p.arcs.to_arcs().map_err(HarnessError::Parse)?;
            let dis = sample_disorder(g, mu, seed, p.realization)?;
            let u = build_unitary(g, &family()?, &dis)?;
            let eig = eigendecompose(u.matrix(), DEFAULT_CLUSTER_EPS)?;
            let measure = edge_measure(&eig, e, f)?;
            let rows: Vec<Vec<String>> = measure
                .atoms
                .iter()
                .map(|a| vec![a.value.re.to_string(), a.value.im.to_string(), a.weight.norm().to_string(), a.diag.to_string()])
                .collect();
            out.write_csv("ec_measure.csv", &["lambda_re", "lambda_im", "weight_abs", "diag_weight"], &rows)?;
            out.record(name, "ec", measure.ec(&arcs), None, None);
            out.record(name, format!("interpolated_ec(beta={})", p.beta), measure.interpolated_ec(&arcs, p.beta)?, None, None);
        }
        EstimatorKind::Fracmom => {
            let p = &config.fracmom;
            let (e, f) = (edge(g, p.e, 0)?, edge(g, p.f, 0)?);
            let zs = points(&p.z, || config.zgrid.points());
            let rep = mc_fractional_moment(g, &family()?, mu, e, f, p.s, &zs, p.n_samples, seed)?;
            let rows: Vec<Vec<String>> = rep
                .points
                .iter()
                .map(|pt| {
                    let mut r = vec![pt.z.re.to_string(), pt.z.im.to_string()];
                    r.extend(est_cols(&pt.estimate));
                    r
                })
                .collect();
            out.write_csv("fracmom.csv", &estimate_header(&["z_re", "z_im"]), &rows)?;
            out.record(name, "grid_sup (lower bound of true sup)", rep.grid_sup, None, Some(p.n_samples));
        }
        EstimatorKind::Specavg => {
            let p = &config.specavg;
            let e = edge(g, p.e, 0)?;
            let zs = points(&p.z, || config.zgrid.inner_points());
            let pts = mc_spectral_average(g, &family()?, mu, e, &zs, p.nodes, p.n_outer, seed)?;
            let rows: Vec<Vec<String>> = pts
                .iter()
                .map(|pt| {
                    let mut r = vec![pt.z.re.to_string(), pt.z.im.to_string()];
                    r.extend(est_cols(&pt.estimate));
                    r
                })
                .collect();
            out.write_csv("specavg.csv", &estimate_header(&["z_re", "z_im"]), &rows)?;
            let sup = pts.iter().map(|pt| pt.estimate.mean).fold(0.0, f64::max);
            out.record(name, "grid_sup (lower bound of true sup)", sup, None, Some(p.n_outer));
        }
        EstimatorKind::Gapprob => {
            let p = &config.gapprob;
            let zs: Vec<Complex64> = p.z.iter().copied().map(to_complex).collect();
            let ball = BallSpec::new(p.root, p.radius);
            let pts = gap_probability(g, mu, ball, &zs, &p.etas, p.n_samples, seed)?;
            let mut rows = Vec::with_capacity(pts.len());
            for pt in &pts {
                let limit = p.bound_factor * pt.bound + p.sigma_slack * pt.estimate.std_error;
                let pass = pt.estimate.mean <= limit;
                if !pass {
                    failures.push(format!(
                        "gapprob z=({}, {}) eta={}: estimate {} exceeds {} (bound {} x {} + {} std_error)",
                        pt.z.re, pt.z.im, pt.eta, pt.estimate.mean, limit, pt.bound, p.bound_factor, p.sigma_slack
                    ));
                }
                let mut r = vec![pt.z.re.to_string(), pt.z.im.to_string(), pt.eta.to_string()];
                r.extend(est_cols(&pt.estimate));
                r.extend([pt.bound.to_string(), pass.to_string()]);
                rows.push(r);
            }
            let mut header = estimate_header(&["z_re", "z_im", "eta"]);
            header.extend(["bound", "pass"]);
            out.write_csv("gapprob.csv", &header, &rows)?;
            let worst = pts.iter().map(|pt| pt.estimate.mean / pt.bound).fold(0.0, f64::max);
            out.record(name, "max_estimate_over_bound", worst, None, Some(p.n_samples));
        }
        EstimatorKind::Decay => {
            let p = &config.decay;
            let params = DecayParams {
                e: edge(g, p.e, 0)?,
                s: p.s,
                z: to_complex(p.z),
                strengths: p.strengths.clone(),
                family_seed: p.family_seed,
                n_samples: p.n_samples,
                seed,
                fit_min: p.fit_min,
                fit_max: p.fit_max,
            };
            let rep = decay_experiment(g, mu, &params)?;
            let mut summary = Vec::new();
            for curve in &rep.curves {
                let rows: Vec<Vec<String>> = curve
                    .rows
                    .iter()
                    .map(|r| {
                        let mut v = vec![r.distance.to_string(), r.n_edges.to_string()];
                        v.extend(est_cols(&r.estimate));
                        v
                    })
                    .collect();
                out.write_csv(&format!("decay_phi_{}.csv", curve.strength), &estimate_header(&["distance", "n_edges"]), &rows)?;
                let mut s = vec![curve.strength.to_string()];
                s.extend(fit_cols(&curve.fit));
                summary.push(s);
                check_fit("decay", curve.strength, &curve.fit, &curve.fit_error, Some(p.min_r_squared), failures);
                if let Some(fit) = curve.fit {
                    out.record(name, format!("rate(phi={})", curve.strength), fit.rate, Some(fit.rate_std_error), Some(p.n_samples));
                }
            }
            let mut header = vec!["strength"];
            header.extend(FIT_HEADER);
            out.write_csv("decay_summary.csv", &header, &summary)?;
            if !rep.monotone {
                failures.push("decay: fitted rate increases with the scattering strength beyond one combined std_error".into());
            }
        }
        EstimatorKind::Dynloc => {
            let p = &config.dynloc;
            let params = DynlocParams {
                e: edge(g, p.e, 0)?,
                arcs: p.arcs.to_arcs().map_err(HarnessError::Parse)?,
                horizon: p.horizon,
                strengths: p.strengths.clone(),
                family_seed: p.family_seed,
                n_samples: p.n_samples,
                seed,
                fit_min: p.fit_min,
                fit_max: p.fit_max,
            };
            let rep = dynloc_experiment(g, mu, &params)?;
            let mut summary = Vec::new();
            for curve in &rep.curves {
                let rows: Vec<Vec<String>> = curve
                    .rows
                    .iter()
                    .map(|r| {
                        let mut v = vec![r.distance.to_string(), r.n_edges.to_string()];
                        v.extend(est_cols(&r.probe));
                        v.extend([r.correlator.mean.to_string(), r.correlator.std_error.to_string()]);
                        v
                    })
                    .collect();
                let mut header = estimate_header(&["distance", "n_edges"]);
                header.extend(["ec_mean", "ec_std_error"]);
                out.write_csv(&format!("dynloc_phi_{}.csv", curve.strength), &header, &rows)?;
                let mut s = vec![curve.strength.to_string()];
                s.extend(fit_cols(&curve.fit));
                s.push(curve.max_excess.to_string());
                summary.push(s);
                check_fit("dynloc", curve.strength, &curve.fit, &curve.fit_error, None, failures);
                if !curve.bounded {
                    failures.push(format!(
                        "dynloc phi={}: probe exceeds the correlator by {:e}",
                        curve.strength, curve.max_excess
                    ));
                }
                out.record(name, format!("max_probe_excess(phi={})", curve.strength), curve.max_excess, None, Some(p.n_samples));
            }
            let mut header = vec!["strength"];
            header.extend(FIT_HEADER);
            header.push("max_probe_excess");
            out.write_csv("dynloc_summary.csv", &header, &summary)?;
        }
        EstimatorKind::Identities => {
            let p = &config.identities;
            let fam = family()?;
            let zs = points(&p.z, || ZGrid { radii: config.zgrid.radii.clone(), angles: p.angles }.points());
            let ball = BallSpec::new(p.root, p.radius);
            let mut rows = Vec::new();
            let (mut worst_res, mut worst_zero) = (0.0f64, 0.0f64);
            for i in 0..p.realizations {
                let dis = sample_disorder(g, mu, seed, i as u64)?;
                for &z in &zs {
                    let rep = check_geometric_resolvent(g, &fam, &dis, z, ball)?;
                    worst_res = worst_res.max(rep.relative_residual);
                    worst_zero = worst_zero.max(rep.cross_block_max).max(rep.screened_max);
                    if rep.relative_residual >= p.residual_tol {
                        failures.push(format!(
                            "identities realization={i} z=({}, {}): relative residual {:e}",
                            z.re, z.im, rep.relative_residual
                        ));
                    }
                    if rep.cross_block_max >= p.vanish_tol || rep.screened_max >= p.vanish_tol {
                        failures.push(format!(
                            "identities realization={i} z=({}, {}): vanishing entries {:e}, {:e}",
                            z.re, z.im, rep.cross_block_max, rep.screened_max
                        ));
                    }
                    rows.push(vec![
                        i.to_string(),
                        z.re.to_string(),
                        z.im.to_string(),
                        rep.residual.to_string(),
                        rep.relative_residual.to_string(),
                        rep.cross_block_max.to_string(),
                        rep.screened_max.to_string(),
                    ]);
                }
            }
            out.write_csv(
                "identities.csv",
                &["realization", "z_re", "z_im", "residual", "relative_residual", "cross_block_max", "screened_max"],
                &rows,
            )?;
            out.record(name, "max_relative_residual", worst_res, None, Some(p.realizations));
            out.record(name, "max_vanishing_entry", worst_zero, None, Some(p.realizations));
        }
        EstimatorKind::Fmec => {
            let p = &config.fmec;
            let region = g.edge_ball(p.root, p.radius)?;
            let f = edge(g, p.f, g.outgoing(p.root).start)?;
            let e = match p.e {
                Some(_) => edge(g, p.e, 0)?,
                None => default_outside_edge(g, &region, p.root)?,
            };
            let params = FmecParams {
                region,
                e,
                f,
                arcs: p.arcs.to_arcs().map_err(HarnessError::Parse)?,
                s: p.s,
                beta: p.beta.unwrap_or(default_beta(p.s)),
                theta_nodes: p.theta_nodes,
                deltas: p.deltas.clone(),
                n_samples: p.n_samples,
                cw_samples: p.cw_samples,
                cw_points: ZGrid { radii: p.cw_radii.clone(), angles: p.cw_angles }.points(),
                cw_nodes: p.cw_nodes,
                seed,
            };
            let rep = check_fmec_bound(g, &family()?, mu, &params)?;
            let mut row = est_cols(&rep.lhs).to_vec();
            row.extend([
                rep.rhs.to_string(),
                rep.rhs_std_error.to_string(),
                rep.cw_proxy.to_string(),
                params.s.to_string(),
                params.beta.to_string(),
                rep.violation.to_string(),
            ]);
            out.write_csv(
                "fmec.csv",
                &["lhs_mean", "lhs_std_error", "n_samples", "seed", "rhs", "rhs_std_error", "cw_proxy", "s", "beta", "violation"],
                &[row],
            )?;
            let terms: Vec<Vec<String>> = rep
                .terms
                .iter()
                .map(|t| {
                    let edge = g.edge(t.edge);
                    vec![
                        edge.from.to_string(),
                        edge.to.to_string(),
                        t.weight.to_string(),
                        t.moment.mean.to_string(),
                        t.moment.std_error.to_string(),
                        t.delta.to_string(),
                    ]
                })
                .collect();
            out.write_csv("fmec_terms.csv", &["from", "to", "boundary_weight", "moment_mean", "moment_std_error", "delta"], &terms)?;
            out.record(name, "lhs", rep.lhs.mean, Some(rep.lhs.std_error), Some(rep.lhs.n_samples));
            out.record(name, "rhs", rep.rhs, Some(rep.rhs_std_error), Some(rep.lhs.n_samples));
            if rep.violation {
                failures.push(format!(
                    "fmec: lhs {} exceeds rhs {} beyond 3 combined std_error",
                    rep.lhs.mean, rep.rhs
                ));
            }
        }
        EstimatorKind::Smallness => {
            let p = &config.smallness;
            let inside = g.edge_ball(p.root, p.radius)?;
            let nb = g.neighbors(p.root)[0];
            let e = edge(g, p.e, g.edge_index(crate::graph::Edge::new(nb, p.root)).expect("neighbor edge"))?;
            let f_default = inside
                .indices()
                .into_iter()
                .find(|&i| i != e && i != g.reverse_index(e))
                .ok_or_else(|| HarnessError::Io("ball has no second edge pair".into()))?;
            let f = edge(g, p.f, f_default)?;
            let params = SmallnessParams {
                ball: BallSpec::new(p.root, p.radius),
                z: to_complex(p.z),
                s: p.s,
                p: p.p,
                e,
                f,
                n_samples: p.n_samples,
                seed,
            };
            let mut pts = Vec::new();
            for &strength in &p.strengths {
                let fam: ScatteringFamily = make_family(g, &FamilyKind::NearIdentity { strength, seed: p.family_seed })?;
                pts.push(resolvent_smallness_check(g, &fam, mu, &params)?);
            }
            let scaling = calibrate_smallness(&pts, p.slack)?;
            let rows: Vec<Vec<String>> = p
                .strengths
                .iter()
                .zip(&pts)
                .zip(&scaling.ratios)
                .map(|((phi, pt), ratio)| {
                    let mut r = vec![phi.to_string(), pt.distance_to_identity.to_string(), pt.threshold.to_string()];
                    r.extend(est_cols(&pt.estimate));
                    r.extend([pt.base.to_string(), ratio.to_string()]);
                    r
                })
                .collect();
            let mut header = vec!["strength", "distance_to_identity", "threshold", "mean", "std_error", "n_samples", "seed"];
            header.extend(["base", "ratio_to_calibrated"]);
            out.write_csv("smallness.csv", &header, &rows)?;
            out.record(name, "calibrated_constant", scaling.constant, None, Some(p.n_samples));
            if !scaling.pass {
                failures.push(format!("smallness: ratio to the calibrated scale exceeds slack {}", p.slack));
            }
        }
    }
    Ok(())
}

fn check_fit(
    name: &str,
    strength: f64,
    fit: &Option<DecayFit>,
    error: &Option<String>,
    min_r_squared: Option<f64>,
    failures: &mut Vec<String>,
) {
    match fit {
        None => failures.push(format!("{name} phi={strength}: no fit ({})", error.as_deref().unwrap_or("unknown"))),
        Some(f) => {
            if !(f.rate > 0.0) {
                failures.push(format!("{name} phi={strength}: fitted rate {} is not positive", f.rate));
            }
            if let Some(min) = min_r_squared {
                if f.r_squared < min {
                    failures.push(format!("{name} phi={strength}: R^2 {} below {min}", f.r_squared));
                }
            }
        }
    }
}

/// First edge outside the region whose source is farthest from `root` and
/// does not touch the region.
fn default_outside_edge(g: &Digraph, region: &crate::graph::ConsistentSubset, root: usize) -> Result<usize, HarnessError> {
    let touched = region.incident_vertices(g);
    let dist = g.distances_from(root)?;
    (0..g.edge_count())
        .filter(|&i| !region.contains(i) && !touched.contains(&g.edge(i).from))
        .max_by_key(|&i| (dist[g.edge(i).from], std::cmp::Reverse(i)))
        .ok_or_else(|| HarnessError::Io("no edge outside the region with a free source vertex".into()))
}
