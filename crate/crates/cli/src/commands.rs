use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use opticroute_core::costmodels::Normalization;
use opticroute_core::eikonal::{extract_wavefronts, solve_with, trace_descent_ray, SolveOptions};
use opticroute_core::io;
use opticroute_core::microsim::{compare_prepared, prepare_trajectories, sample_network, Comparison, Trajectories};
use opticroute_core::rng::derive_seed;
use opticroute_core::{
    build_cost_field, costmodels, CostModel, CostVariant, Error as CoreError, HopCostKind, Point2, ScalarField2D,
    SourceSet, Trajectory,
};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ModelConfig};
use crate::svg::{Plot, Stroke};
use crate::CliError;

/// Collects the files a command writes.
struct Output {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Output {
    fn create(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let dir = cfg.output_dir();
        fs::create_dir_all(&dir).map_err(|e| CliError::Config(format!("output_dir {}: {e}", dir.display())))?;
        Ok(Output {
            dir,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::artifact(name)(CoreError::Io(e)))?;
        self.written.push(path);
        Ok(())
    }

    fn write_field(&mut self, name: &str, field: &ScalarField2D) -> Result<(), CliError> {
        let path = self.dir.join(name);
        io::write_field(&path, field).map_err(CliError::artifact(name))?;
        self.written.push(io::sidecar_path(&path));
        self.written.push(path);
        Ok(())
    }
}

/// File-name-safe version of a label.
fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn solve_options(cfg: &ExperimentConfig) -> Result<SolveOptions, CliError> {
    Ok(SolveOptions {
        point_seed_radius: cfg.point_seed_radius()?,
    })
}

/// Build the model, simulating an energy table over the density range when
/// needed, and return it with its cost field.
fn cost_for(model: &ModelConfig, density: &ScalarField2D) -> Result<(CostModel, ScalarField2D), CliError> {
    let label = format!("cost field ({})", model.label());
    let built = model.build()?;
    let prepared = built
        .prepared(density.min() / 2.0, density.max() * 2.0)
        .map_err(CliError::artifact(label.clone()))?;
    let cost = build_cost_field(density, &prepared).map_err(CliError::artifact(label))?;
    Ok((prepared, cost))
}

fn write_energy_table(out: &mut Output, name: &str, model: &CostModel) -> Result<(), CliError> {
    if let Some(table) = model.energy_table() {
        out.write(name, &io::table_csv(table))?;
    }
    Ok(())
}

pub fn cost_field(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let density = cfg.density_field()?;
    let model = cfg.primary_model()?;
    let (prepared, cost) = cost_for(&model, &density)?;
    let mut out = Output::create(cfg)?;
    out.write_field("cost_field.csv", &cost)?;
    write_energy_table(&mut out, "energy_table.csv", &prepared)?;
    let mut plot = Plot::for_field(&format!("cost field: {}", model.label()), &cost);
    plot.heatmap(&cost, true);
    out.write("cost_field.svg", &plot.finish())?;
    Ok(out.written)
}

fn default_levels(s: &ScalarField2D) -> Vec<f64> {
    let top = s.max();
    (1..=8).map(|k| top * k as f64 / 9.0).collect()
}

fn draw_source(plot: &mut Plot, source: &SourceSet) {
    match source {
        SourceSet::Point(p) => plot.marker(*p, "source"),
        SourceSet::Disk { center, radius } => plot.circle(*center, *radius, 3),
        SourceSet::Polygon(v) => {
            let mut ring = v.clone();
            ring.extend(v.first().copied());
            plot.polyline(&ring, 3, 1.5, Stroke::Solid);
        }
    }
}

pub fn eikonal(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let density = cfg.density_field()?;
    let model = cfg.primary_model()?;
    let (_, cost) = cost_for(&model, &density)?;
    let source = cfg.source()?;
    let sol = solve_with(&cost, &source, &solve_options(cfg)?).map_err(CliError::artifact("eikonal field"))?;
    let levels = match &cfg.eikonal.levels {
        Some(l) => l.clone(),
        None => default_levels(sol.field()),
    };
    let fronts = extract_wavefronts(&sol, &levels).map_err(CliError::artifact("wavefronts"))?;

    let mut starts = cfg.eikonal.ray_starts.clone();
    if let Some(fan) = cfg.eikonal.ray_fan {
        starts.extend(fan.points());
    }
    let step = 0.5 * cost.h();
    let rays = starts
        .par_iter()
        .map(|&p| trace_descent_ray(&sol, p, step).map_err(CliError::artifact(format!("ray from {p}"))))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<Trajectory>, CliError>>()?;

    let mut out = Output::create(cfg)?;
    out.write_field("eikonal.csv", sol.field())?;
    let pieces: Vec<(f64, &[Point2])> = fronts
        .iter()
        .flatten()
        .map(|c| (c.level, c.points.as_slice()))
        .collect();
    out.write("wavefronts.csv", &io::polylines_csv(pieces.iter().map(|p| p.1)))?;
    let mut index = String::from("ray_id,level\n");
    for (id, (level, _)) in pieces.iter().enumerate() {
        let _ = writeln!(index, "{id},{level}");
    }
    out.write("wavefront_levels.csv", &index)?;
    out.write("rays.csv", &io::polylines_csv(rays.iter().map(|r| r.points())))?;

    let mut plot = Plot::for_field(&format!("wavefronts and rays: {}", model.label()), &cost);
    plot.heatmap(&density, true);
    for (_, piece) in &pieces {
        plot.polyline(piece, 0, 1.2, Stroke::Solid);
    }
    for ray in &rays {
        plot.polyline(ray.points(), 1, 1.8, Stroke::Solid);
    }
    draw_source(&mut plot, &source);
    plot.legend("wavefronts S = k", 0, Stroke::Solid);
    plot.legend("rays", 1, Stroke::Solid);
    out.write("eikonal.svg", &plot.finish())?;
    Ok(out.written)
}

pub fn route(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let density = cfg.density_field()?;
    let models = cfg.models()?;
    let ends = cfg.endpoints()?;
    let opts = solve_options(cfg)?;
    let results = models
        .par_iter()
        .map(|m| {
            let (prepared, cost) = cost_for(m, &density)?;
            let traj = prepare_trajectories(&cost, ends.a, ends.b, &opts)
                .map_err(CliError::artifact(format!("route {}", m.label())))?;
            Ok((prepared, cost, traj))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut out = Output::create(cfg)?;
    let mut summary = String::from(
        "label,model,optical_length,straight_optical_length,straight_over_optics,arc_length,max_abs_x,mean_abs_x\n",
    );
    let mut plot = Plot::for_field("optimal routes", &density);
    plot.heatmap(&density, true);
    for (k, (m, (prepared, cost, traj))) in models.iter().zip(&results).enumerate() {
        let label = m.label();
        let name = format!("route_{}.csv", slug(&label));
        let csv = io::trajectory_csv(&traj.optics, Some(cost)).map_err(CliError::artifact(name.clone()))?;
        out.write(&name, &csv)?;
        write_energy_table(&mut out, &format!("energy_table_{}.csv", slug(&label)), prepared)?;
        let o = &traj.optics;
        let _ = writeln!(
            summary,
            "{label},{},{},{},{},{},{},{}",
            prepared.name(),
            o.optical_length,
            traj.straight.optical_length,
            traj.straight.optical_length / o.optical_length,
            o.arc_length,
            o.max_abs_x(),
            o.mean_abs_x()
        );
        plot.polyline(o.points(), k, 2.2, Stroke::Solid);
        plot.legend(&label, k, Stroke::Solid);
    }
    out.write("route_summary.csv", &summary)?;
    let (first_cost, first) = (&results[0].1, &results[0].2);
    let straight = io::trajectory_csv(&first.straight, Some(first_cost)).map_err(CliError::artifact("straight.csv"))?;
    out.write("straight.csv", &straight)?;
    plot.polyline(first.straight.points(), 7, 1.5, Stroke::Dashed);
    plot.legend("straight line", 7, Stroke::Dashed);
    plot.marker(ends.a, "A");
    plot.marker(ends.b, "B");
    out.write("route.svg", &plot.finish())?;
    Ok(out.written)
}

const SUMMARY_HEADER: &str = "seed,nodes,straight_optical_length,optics_optical_length,tbf_straight_cost,tbf_optics_cost,oracle_cost,tbf_straight_hops,tbf_optics_hops,oracle_hops,complete,ordered,tbf_optics_over_straight,oracle_over_tbf_optics";

fn compare_plot(traj: &Trajectories, cmp: &Comparison, net: &opticroute_core::microsim::NetworkRealization) -> String {
    let mut plot = Plot::for_field(&format!("routes on seed {}", cmp.report.seed), net.density());
    plot.scatter(net.nodes(), 0.9, "#9a9a9a");
    let layers: [(&str, Vec<Point2>, Stroke); 5] = [
        ("a: straight line", traj.straight.points().to_vec(), Stroke::Dashed),
        ("b: optics trajectory", traj.optics.points().to_vec(), Stroke::Dashed),
        ("c: TBF on straight line", cmp.tbf_straight.points(net), Stroke::Solid),
        ("d: TBF on optics trajectory", cmp.tbf_optics.points(net), Stroke::Solid),
        ("e: optimal route", cmp.oracle.points(net), Stroke::Solid),
    ];
    for (k, (label, points, stroke)) in layers.iter().enumerate() {
        plot.polyline(points, k, 1.8, *stroke);
        plot.legend(label, k, *stroke);
    }
    plot.marker(traj.a, "A");
    plot.marker(traj.b, "B");
    plot.finish()
}

pub fn compare(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let density = cfg.density_field()?;
    let model = cfg.primary_model()?;
    let kind = cfg.hop_cost()?;
    let ends = cfg.endpoints()?;
    let seeds = cfg.seeds()?.to_vec();
    if let Some(m) = cfg.max_edge {
        if m.is_nan() || m <= 0.0 {
            return Err(CliError::Config(format!("max_edge: must be > 0, got {m}")));
        }
    }
    let (_, cost) = cost_for(&model, &density)?;
    let traj = prepare_trajectories(&cost, ends.a, ends.b, &solve_options(cfg)?)
        .map_err(CliError::artifact("trajectories"))?;

    let runs = seeds
        .par_iter()
        .map(|&seed| {
            let net = sample_network(Arc::clone(&density), seed)
                .map_err(CliError::artifact(format!("network seed {seed}")))?;
            let cmp = compare_prepared(&net, &traj, &kind, cfg.max_edge)
                .map_err(CliError::artifact(format!("comparison seed {seed}")))?;
            Ok((net, cmp))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut out = Output::create(cfg)?;
    out.write(
        "straight.csv",
        &io::trajectory_csv(&traj.straight, Some(&cost)).map_err(CliError::artifact("straight.csv"))?,
    )?;
    out.write(
        "optics.csv",
        &io::trajectory_csv(&traj.optics, Some(&cost)).map_err(CliError::artifact("optics.csv"))?,
    )?;
    let mut summary = format!("{SUMMARY_HEADER}\n");
    for (net, cmp) in &runs {
        let r = &cmp.report;
        let seed = r.seed;
        out.write(
            &format!("report_seed{seed}.json"),
            &io::to_json(r).map_err(CliError::artifact("report"))?,
        )?;
        out.write(&format!("network_seed{seed}.csv"), &io::network_csv(net))?;
        out.write(
            &format!("tbf_straight_seed{seed}.csv"),
            &io::route_csv(&cmp.tbf_straight, net),
        )?;
        out.write(
            &format!("tbf_optics_seed{seed}.csv"),
            &io::route_csv(&cmp.tbf_optics, net),
        )?;
        out.write(&format!("oracle_seed{seed}.csv"), &io::route_csv(&cmp.oracle, net))?;
        let _ = writeln!(
            summary,
            "{seed},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.nodes,
            r.straight_optical_length,
            r.optics_optical_length,
            r.tbf_straight_cost,
            r.tbf_optics_cost,
            r.oracle_cost,
            r.tbf_straight_hops,
            r.tbf_optics_hops,
            r.oracle_hops,
            r.complete(),
            r.ordered(),
            r.tbf_optics_cost / r.tbf_straight_cost,
            r.oracle_cost / r.tbf_optics_cost
        );
    }
    out.write("compare_summary.csv", &summary)?;
    let (net, cmp) = &runs[0];
    out.write("compare.svg", &compare_plot(&traj, cmp, net))?;
    Ok(out.written)
}

/// Density at which the cost curves are normalized to one.
const CURVE_ANCHOR: f64 = 0.05;

pub fn hopstats(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let models = cfg.models()?;
    let seed = cfg.seeds()?[0];
    let lambdas = cfg.hopstats.lambdas.values();
    if lambdas.is_empty() || lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(CliError::Config(
            "hopstats.lambdas: need at least one positive density".into(),
        ));
    }
    let n_trials = cfg.hopstats.n_trials;
    let lo = lambdas.iter().copied().fold(CURVE_ANCHOR, f64::min);
    let hi = lambdas.iter().copied().fold(CURVE_ANCHOR, f64::max);

    let mut out = Output::create(cfg)?;
    let mut stats_csv = String::from(
        "model,lambda,n_trials,mean_progress,se_progress,mean_cost,se_cost,mean_ratio,se_ratio,cost_per_meter,se_cost_per_meter\n",
    );
    let mut curves: Vec<(String, Vec<f64>)> = Vec::new();
    for (m_idx, m) in models.iter().enumerate() {
        let label = m.label();
        let model = m
            .build()?
            .with_normalization(Normalization::ThroughPoint {
                lambda: CURVE_ANCHOR,
                cost: 1.0,
            })
            .map_err(|e| CliError::config("cost_model", e))?
            .prepared(lo / 2.0, hi * 2.0)
            .map_err(CliError::artifact(format!("energy table ({label})")))?;
        write_energy_table(&mut out, &format!("energy_table_{}.csv", slug(&label)), &model)?;
        let curve = lambdas
            .iter()
            .map(|&l| model.evaluate(l))
            .collect::<Result<Vec<f64>, _>>()
            .map_err(CliError::artifact(format!("cost curve ({label})")))?;
        curves.push((label.clone(), curve));

        let kind = match m.variant {
            CostVariant::Bandwidth => HopCostKind::Quadratic,
            CostVariant::Energy { a, b, c } => HopCostKind::Energy { a, b, c },
            _ => continue,
        };
        let model_seed = derive_seed(seed, m_idx as u64);
        for (k, &lambda) in lambdas.iter().enumerate() {
            let s = costmodels::hop_stats_mc(lambda, &kind, n_trials, derive_seed(model_seed, k as u64))
                .map_err(CliError::artifact(format!("hop statistics ({label}, lambda {lambda})")))?;
            let _ = writeln!(
                stats_csv,
                "{label},{lambda},{},{},{},{},{},{},{},{},{}",
                s.n_trials,
                s.mean_progress,
                s.se_progress,
                s.mean_cost,
                s.se_cost,
                s.mean_ratio,
                s.se_ratio,
                s.cost_per_meter,
                s.se_cost_per_meter
            );
        }
    }
    out.write("hopstats.csv", &stats_csv)?;

    let mut curve_csv = String::from("lambda");
    for (label, _) in &curves {
        let _ = write!(curve_csv, ",{label}");
    }
    curve_csv.push('\n');
    for (k, lambda) in lambdas.iter().enumerate() {
        let _ = write!(curve_csv, "{lambda}");
        for (_, c) in &curves {
            let _ = write!(curve_csv, ",{}", c[k]);
        }
        curve_csv.push('\n');
    }
    out.write("cost_curves.csv", &curve_csv)?;

    let (x0, x1) = (lo.log10(), hi.log10());
    let y1 = curves.iter().flat_map(|(_, c)| c.iter().copied()).fold(1.0, f64::max);
    let mut plot = Plot::new(
        "normalized cost vs log10 density",
        x0,
        x1.max(x0 + 1e-9),
        0.0,
        y1 * 1.05,
        560.0,
    );
    for (k, (label, c)) in curves.iter().enumerate() {
        let pts: Vec<Point2> = lambdas.iter().zip(c).map(|(l, v)| Point2::new(l.log10(), *v)).collect();
        plot.polyline(&pts, k, 2.0, Stroke::Solid);
        plot.legend(label, k, Stroke::Solid);
    }
    out.write("cost_curves.svg", &plot.finish())?;
    Ok(out.written)
}
