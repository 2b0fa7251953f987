use std::path::Path;

use rayon::prelude::*;
use sinrlab::analysis::{
    bound_success_probability, likely_rate_95, meta_distribution_beta, meta_distribution_with, stability_curve,
    success_probability_closed_form, success_probability_exact, success_probability_simplified,
    throughput_density, AnalysisError, MetaOptions, Regime,
};
use sinrlab::sim::{empirical_meta, run_realizations, unstable_fraction, PooledStats, SimConfig};
use sinrlab::{MetaCurve, RawParams, Region, SystemParams};

use crate::config::{ExperimentConfig, Kind, Point};
use crate::output::{write_columns, Row};
use crate::CliError;

/// Rows for one sweep point plus any solver failures met on the way.
pub struct PointResult {
    pub rows: Vec<Row>,
    pub failures: Vec<String>,
    pub files: Vec<String>,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    out: &'a Path,
    failures: Vec<String>,
    files: Vec<String>,
}

impl Ctx<'_> {
    fn fail(&mut self, row: &mut Row, what: &str, e: impl std::fmt::Display) {
        row.converged = false;
        self.failures.push(format!("{what} at {}: {e}", describe(&row_point(row))));
    }
}

fn row_point(row: &Row) -> [Option<f64>; 4] {
    ["theta_db", "xi", "lambda", "r"].map(|k| row.get(k))
}

fn describe(p: &[Option<f64>; 4]) -> String {
    let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x}"));
    format!("theta_db={} xi={} lambda={} r={}", f(p[0]), f(p[1]), f(p[2]), f(p[3]))
}

fn param_row(raw: &RawParams) -> Row {
    let mut row = Row::new();
    row.push("theta_db", raw.theta_db);
    row.push("xi", raw.xi);
    row.push("lambda", raw.lambda);
    row.push("r", raw.r);
    row
}

fn solve_cells(ctx: &mut Ctx, row: &mut Row, p: &SystemParams) {
    match success_probability_exact(p) {
        Ok(s) => {
            row.push("exact_p_s", s.p_s);
            row.push("exact_iterations", s.report.iterations as f64);
        }
        Err(e) => {
            row.push("exact_p_s", None);
            row.push("exact_iterations", None);
            ctx.fail(row, "exact fixed point", e);
        }
    }
    match success_probability_simplified(p) {
        Ok(s) => row.push("lb_p_s", s.p_s),
        Err(e) => {
            row.push("lb_p_s", None);
            ctx.fail(row, "simplified fixed point", e);
        }
    }
    match success_probability_closed_form(p) {
        Ok(v) => row.push("cf_p_s", v),
        Err(AnalysisError::NoLightTrafficSolution { .. }) => row.push("cf_p_s", None),
        Err(e) => {
            row.push("cf_p_s", None);
            ctx.fail(row, "closed form", e);
        }
    }
    row.push("dom_p_s", bound_success_probability(p, Regime::Dominant));
    row.push("fav_p_s", bound_success_probability(p, Regime::Favorable));
}

fn sim_config(cfg: &ExperimentConfig) -> SimConfig {
    SimConfig { slots: cfg.sim.slots, warmup: cfg.sim.warmup, seed: cfg.sim.seed, mode: cfg.sim.mode }
}

fn region(cfg: &ExperimentConfig) -> Result<Region, CliError> {
    Region::new(cfg.sim.side, true).map_err(|e| CliError::Config(e.to_string()))
}

fn simulate(cfg: &ExperimentConfig, p: &SystemParams) -> Result<Vec<sinrlab::sim::SimStats>, CliError> {
    let runs = run_realizations(p, &region(cfg)?, &sim_config(cfg), cfg.sim.realizations)
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(runs.into_iter().map(|(_, s)| s).collect())
}

fn sim_cells(ctx: &mut Ctx, row: &mut Row, p: &SystemParams) -> Result<(), CliError> {
    let stats = simulate(ctx.cfg, p)?;
    let pooled = PooledStats::from_runs(&stats);
    let links: usize = stats.iter().map(|s| s.len()).sum();
    let unstable: f64 = stats.iter().map(|s| unstable_fraction(s, p) * s.len() as f64).sum();
    let activity: f64 = stats.iter().flat_map(|s| s.activity()).sum();
    row.push("sim_p_s", pooled.link_mean());
    row.push("sim_p_s_se", pooled.link_mean_se());
    row.push("sim_pooled_p_s", pooled.pooled_rate());
    row.push("sim_links", links as f64);
    row.push("sim_activity", activity / links as f64);
    row.push("sim_unstable_fraction", unstable / links as f64);
    Ok(())
}

fn gap(row: &Row, a: &str, b: &str) -> Option<f64> {
    Some((row.get(a)? - row.get(b)?).abs())
}

fn meta_point(ctx: &mut Ctx, row: &mut Row, p: &SystemParams, index: usize) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let opts = MetaOptions {
        grid_size: cfg.meta.grid,
        tol: cfg.meta.tol,
        max_iter: cfg.meta.max_iter,
        normalization: cfg.meta.normalization,
        ..MetaOptions::default()
    };
    let (curve, initial, iterations) = match meta_distribution_with(p, &opts) {
        Ok(s) => (Some(s.curve), Some(s.initial), Some(s.iterations as f64)),
        Err(AnalysisError::MetaNotConverged { iterations, current, .. }) => {
            ctx.fail(row, "meta distribution", format!("no convergence after {iterations} iterations"));
            (Some(*current), None, Some(iterations as f64))
        }
        Err(e) => {
            ctx.fail(row, "meta distribution", e);
            (None, None, None)
        }
    };
    row.push("exact_mean", curve.as_ref().map(MetaCurve::mean));
    row.push("exact_variance", curve.as_ref().map(MetaCurve::variance));
    row.push("exact_likely95", curve.as_ref().map(likely_rate_95));
    row.push("exact_f090", curve.as_ref().map(|c| c.eval(0.9)));
    row.push("exact_iterations", iterations);

    let beta = if cfg.meta.beta {
        match meta_distribution_beta(p, 1e-6, 100) {
            Ok(b) if b.converged => Some(b.fit),
            Ok(b) => {
                ctx.fail(row, "beta fit", format!("no convergence after {} iterations", b.iterations));
                Some(b.fit)
            }
            Err(e) => {
                ctx.fail(row, "beta fit", e);
                None
            }
        }
    } else {
        None
    };
    row.push("beta_a", beta.map(|b| b.a).filter(|v| v.is_finite()));
    row.push("beta_b", beta.map(|b| b.beta).filter(|v| v.is_finite()));
    row.push(
        "beta_ks",
        beta.zip(curve.as_ref()).map(|(b, c)| c.distance_to(|u| b.cdf(u))),
    );

    let grid = MetaCurve::uniform_grid(cfg.meta.grid);
    let empirical = if cfg.meta.simulate {
        let stats = simulate(cfg, p)?;
        match empirical_meta(&stats, &grid) {
            Ok(e) => Some(e),
            Err(e) => {
                ctx.fail(row, "empirical meta distribution", e);
                None
            }
        }
    } else {
        None
    };
    row.push(
        "sim_ks",
        empirical.as_ref().zip(curve.as_ref()).map(|(e, c)| e.curve.kolmogorov_distance(c)),
    );
    row.push("sim_links_used", empirical.as_ref().map(|e| e.used as f64));
    row.push("sim_links_excluded", empirical.as_ref().map(|e| e.excluded as f64));

    let column = |f: &dyn Fn(f64) -> Option<f64>| grid.iter().map(|&u| f(u)).collect::<Vec<_>>();
    let name = format!("curves/meta_{index:03}.csv");
    write_columns(
        &ctx.out.join(&name),
        &["u", "exact_F", "initial_F", "beta_F", "sim_F"],
        &[
            column(&|u| Some(u)),
            column(&|u| curve.as_ref().map(|c| c.eval(u))),
            column(&|u| initial.as_ref().map(|c| c.eval(u))),
            column(&|u| beta.map(|b| b.cdf(u))),
            column(&|u| empirical.as_ref().map(|e| e.curve.eval(u))),
        ],
    )?;
    ctx.files.push(name);
    Ok(())
}

fn run_point(cfg: &ExperimentConfig, kind: Kind, out: &Path, index: usize, point: &Point) -> Result<PointResult, CliError> {
    let mut ctx = Ctx { cfg, out, failures: Vec::new(), files: Vec::new() };
    let p = &point.params;
    let mut row = param_row(&point.raw);
    let rows = match kind {
        Kind::Solve => {
            solve_cells(&mut ctx, &mut row, p);
            vec![row]
        }
        Kind::Simulate => {
            sim_cells(&mut ctx, &mut row, p)?;
            vec![row]
        }
        Kind::Compare => {
            solve_cells(&mut ctx, &mut row, p);
            sim_cells(&mut ctx, &mut row, p)?;
            let (ge, gl) = (gap(&row, "sim_p_s", "exact_p_s"), gap(&row, "sim_p_s", "lb_p_s"));
            row.push("gap_exact", ge);
            row.push("gap_lb", gl);
            vec![row]
        }
        Kind::Sweep => {
            solve_cells(&mut ctx, &mut row, p);
            let (e, l) = (row.get("exact_p_s"), row.get("lb_p_s"));
            row.push("exact_throughput", e.map(|v| throughput_density(p, v)));
            row.push("lb_throughput", l.map(|v| throughput_density(p, v)));
            let beta = if cfg.meta.beta {
                match meta_distribution_beta(p, 1e-6, 100) {
                    Ok(b) => {
                        if !b.converged {
                            ctx.fail(&mut row, "beta fit", "no convergence");
                        }
                        Some(b.fit)
                    }
                    Err(e) => {
                        ctx.fail(&mut row, "beta fit", e);
                        None
                    }
                }
            } else {
                None
            };
            row.push("beta_variance", beta.map(|b| b.variance()));
            row.push("beta_likely95", beta.map(|b| 1.0 - b.cdf(0.95)));
            vec![row]
        }
        Kind::Meta => {
            meta_point(&mut ctx, &mut row, p, index)?;
            vec![row]
        }
        Kind::Stability => match stability_curve(p, &cfg.stability.epsilons) {
            Ok(results) => results
                .into_iter()
                .map(|s| {
                    let mut r = row.clone();
                    r.push("epsilon", s.epsilon);
                    r.push("xi_sufficient", s.xi_sufficient);
                    r.push("xi_necessary", s.xi_necessary);
                    r
                })
                .collect(),
            Err(e) => {
                ctx.fail(&mut row, "stability", e);
                cfg.stability
                    .epsilons
                    .iter()
                    .map(|&eps| {
                        let mut r = row.clone();
                        r.push("epsilon", eps);
                        r.push("xi_sufficient", None);
                        r.push("xi_necessary", None);
                        r
                    })
                    .collect()
            }
        },
    };
    Ok(PointResult { rows, failures: ctx.failures, files: ctx.files })
}

/// Evaluate every sweep point on the current rayon pool, keeping sweep order.
pub fn run(cfg: &ExperimentConfig, kind: Kind, out: &Path) -> Result<Vec<PointResult>, CliError> {
    let points = cfg.points()?;
    points
        .par_iter()
        .enumerate()
        .map(|(i, pt)| run_point(cfg, kind, out, i, pt))
        .collect()
}
