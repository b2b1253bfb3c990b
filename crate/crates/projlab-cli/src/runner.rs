//! Executes a parsed experiment configuration and assembles its report and
//! CSV table.

use std::time::Instant;

use projlab::diagnostics::{
    asymptotic_ratio, decade_checkpoints, gamma_partial_sums, AsymptoticModel, GammaSumSeries,
};
use projlab::dynamics::{self, ControlPolicy};
use projlab::experiments::{
    conified_run, flat_recurrence_run, positive_polyhedral_run, ConifiedRunSpec, FlatRunSpec,
    L2CounterexampleSpec, PolyhedralRunSpec, POLYHEDRAL_GAMMAS,
};
use projlab::geometry::orthonormalize;
use projlab::{FlatFamily, HalfspaceSystem, Point, SetSpec, Tolerances};

use crate::config::{
    config_err, CliError, CustomPolicy, CustomSet, ExperimentConfig, ExperimentParams,
};
use crate::report::{gamma_column, CsvTable, RunReport};

/// Runs up to this many steps emit one CSV row per step; longer runs emit
/// one row per checkpoint.
const PER_STEP_ROW_LIMIT: usize = 10_000;

fn numeric(e: projlab::Error) -> CliError {
    CliError::Numeric(e.to_string())
}

pub fn execute(config: &ExperimentConfig, tol: &Tolerances) -> Result<(RunReport, CsvTable), CliError> {
    let start = Instant::now();
    let (mut report, table) = match &config.experiment {
        ExperimentParams::FlatR2 { beta, r, u0, n_steps } => {
            run_flat(config, *beta, *r, *u0, *n_steps, tol)?
        }
        ExperimentParams::L2Counterexample { tiers, n_pairs } => {
            run_l2(config, *tiers, *n_pairs, tol)?
        }
        ExperimentParams::ConifiedR3 { beta, r, a0, b0, n_pairs } => {
            run_conified(config, *beta, *r, *a0, *b0, *n_pairs, tol)?
        }
        ExperimentParams::PositivePolyhedral {
            seed,
            dim,
            n_cones,
            rows_per_cone,
            lambda_min,
            n_steps,
        } => run_polyhedral(
            config,
            seed.expect("validated"),
            *dim,
            *n_cones,
            *rows_per_cone,
            *lambda_min,
            *n_steps,
            tol,
        )?,
        ExperimentParams::Custom { x0, n_steps, sets, policy } => {
            run_custom(config, x0, *n_steps, sets, policy, tol)?
        }
    };
    report.duration_seconds = start.elapsed().as_secs_f64();
    Ok((report, table))
}

fn base_report(config: &ExperimentConfig, seed: Option<u64>) -> RunReport {
    RunReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        kind: config.experiment.kind_name().to_string(),
        config: config.clone(),
        seed,
        duration_seconds: 0.0,
        final_point: Vec::new(),
        final_distances: Vec::new(),
        gammas: Vec::new(),
        checkpoints: Vec::new(),
        gamma_sums: Vec::new(),
        ratios: None,
        max_residual: None,
    }
}

fn effective_gammas(config: &ExperimentConfig, default: &[f64]) -> Vec<f64> {
    config.gammas.clone().unwrap_or_else(|| default.to_vec())
}

fn effective_checkpoints(config: &ExperimentConfig, len: usize) -> Result<Vec<usize>, CliError> {
    match &config.checkpoints {
        Some(cps) => {
            if cps.last().is_some_and(|&last| last > len) {
                return Err(config_err(format!(
                    "checkpoint {} exceeds run length {len}",
                    cps.last().expect("nonempty")
                )));
            }
            Ok(cps.clone())
        }
        None => Ok(decade_checkpoints(len)),
    }
}

fn sums_at(series: &GammaSumSeries, checkpoint: usize) -> Vec<f64> {
    series
        .gammas()
        .iter()
        .map(|&g| series.sum_at(g, checkpoint).expect("checkpoint recorded"))
        .collect()
}

fn distances(sets: &[SetSpec], x: &Point, tol: &Tolerances) -> Result<Vec<f64>, CliError> {
    sets.iter()
        .map(|s| s.distance(x, tol).map_err(numeric))
        .collect()
}

fn series_columns(prefix: &[&str], gammas: &[f64], suffix: &[&str]) -> Vec<String> {
    let mut columns: Vec<String> = prefix.iter().map(|s| s.to_string()).collect();
    columns.extend(gammas.iter().map(|&g| gamma_column(g)));
    columns.extend(suffix.iter().map(|s| s.to_string()));
    columns
}

fn run_flat(
    config: &ExperimentConfig,
    beta: f64,
    r: u32,
    u0: f64,
    n_steps: usize,
    tol: &Tolerances,
) -> Result<(RunReport, CsvTable), CliError> {
    if n_steps == 0 {
        return empty_run(config, &["n", "u", "step_norm"], &["ratio"], &[0.5, 1.0, 2.0]);
    }
    let fam = FlatFamily::new(beta, r).map_err(|e| config_err(e.to_string()))?;
    let spec = FlatRunSpec::new(fam.clone(), u0, n_steps).map_err(|e| config_err(e.to_string()))?;
    let run = flat_recurrence_run(&spec, tol).map_err(numeric)?;
    let model = AsymptoticModel::for_flat_family(&fam);

    let gammas = effective_gammas(config, &[0.5, 1.0, 2.0]);
    let pair_cps = effective_checkpoints(config, n_steps)?;
    let row_indices: Vec<usize> = if n_steps <= PER_STEP_ROW_LIMIT {
        (1..=n_steps).collect()
    } else {
        pair_cps.clone()
    };
    // sums over the interleaved norms, sampled at the row pairs
    let step_indices: Vec<usize> = row_indices.iter().map(|n| 2 * n).collect();
    let row_sums = gamma_partial_sums(&run.step_norms, &gammas, &step_indices).map_err(numeric)?;
    let report_sums = gamma_partial_sums(
        &run.step_norms,
        &gammas,
        &pair_cps.iter().map(|n| 2 * n).collect::<Vec<_>>(),
    )
    .map_err(numeric)?;

    let mut rows = Vec::with_capacity(row_indices.len());
    for &n in &row_indices {
        let mut row = vec![
            Some(n as f64),
            Some(run.u[n]),
            Some(run.step_norms[2 * n - 1]),
        ];
        row.extend(sums_at(&row_sums, 2 * n).into_iter().map(Some));
        let ratio = if n >= 3 {
            Some(run.u[n] / (model.alpha / (n as f64).ln()).powf(1.0 / model.p))
        } else {
            None
        };
        row.push(ratio);
        rows.push(row);
    }
    let table = CsvTable {
        columns: series_columns(&["n", "u", "step_norm"], &gammas, &["ratio"]),
        rows,
    };

    let sets = vec![
        SetSpec::Epigraph1D(fam),
        SetSpec::Subspace(orthonormalize(&[Point::unit(2, 0)], tol).map_err(numeric)?),
    ];
    let final_point = Point::new(vec![*run.u.last().expect("nonempty"), 0.0]).map_err(numeric)?;

    let mut report = base_report(config, None);
    report.final_distances = distances(&sets, &final_point, tol)?;
    report.final_point = final_point.to_vec();
    report.gammas = gammas;
    report.checkpoints = pair_cps.clone();
    report.gamma_sums = report_sums
        .gammas()
        .iter()
        .map(|&g| {
            pair_cps
                .iter()
                .map(|&n| report_sums.sum_at(g, 2 * n).expect("recorded"))
                .collect()
        })
        .collect();
    let ratio_cps: Vec<usize> = pair_cps.iter().copied().filter(|&n| n >= 3).collect();
    if !ratio_cps.is_empty() {
        report.ratios = Some(asymptotic_ratio(&run.u, &model, &ratio_cps).map_err(numeric)?);
    }
    report.max_residual = Some(run.max_residual);
    Ok((report, table))
}

fn run_l2(
    config: &ExperimentConfig,
    tiers: usize,
    n_pairs: usize,
    tol: &Tolerances,
) -> Result<(RunReport, CsvTable), CliError> {
    let spec = L2CounterexampleSpec::new(tiers).map_err(|e| config_err(e.to_string()))?;
    let gammas = effective_gammas(config, &[0.5, 1.0, 2.0]);
    let pair_cps = effective_checkpoints(config, n_pairs)?;

    // even-step norms from the closed form
    let mut norms = Vec::with_capacity(n_pairs);
    let mut norm_sqs = Vec::with_capacity(n_pairs);
    let mut bounds = Vec::with_capacity(n_pairs);
    for n in 1..=n_pairs {
        let sn = spec.step_norm_sq(n).map_err(numeric)?;
        norms.push(sn.norm_sq.sqrt());
        norm_sqs.push(sn.norm_sq);
        bounds.push(sn.lower_bound);
    }
    let row_indices: Vec<usize> = if n_pairs <= PER_STEP_ROW_LIMIT {
        (1..=n_pairs).collect()
    } else {
        pair_cps.clone()
    };
    let sums = gamma_partial_sums(&norms, &gammas, &row_indices).map_err(numeric)?;
    let report_sums = gamma_partial_sums(&norms, &gammas, &pair_cps).map_err(numeric)?;

    let mut rows = Vec::with_capacity(row_indices.len());
    for &n in &row_indices {
        let mut row = vec![Some(n as f64), Some(norm_sqs[n - 1]), bounds[n - 1]];
        row.extend(sums_at(&sums, n).into_iter().map(Some));
        rows.push(row);
    }
    let table = CsvTable {
        columns: series_columns(&["n", "norm_sq", "lower_bound"], &gammas, &[]),
        rows,
    };

    // simulate when desk-scale, to report the closed-form deviation
    let max_residual = if tiers <= L2CounterexampleSpec::SIMULATION_TIER_CAP
        && n_pairs <= PER_STEP_ROW_LIMIT
    {
        let traj = spec.simulated(n_pairs, tol).map_err(numeric)?;
        let points = traj.full_points().expect("short run");
        let mut dev = 0.0f64;
        for n in 1..=n_pairs {
            let (odd, even) = spec.closed_form(n).map_err(numeric)?;
            dev = dev.max(points[2 * n - 1].dist(&odd));
            dev = dev.max(points[2 * n].dist(&even));
        }
        Some(dev)
    } else {
        None
    };

    let sets = vec![
        SetSpec::Subspace(spec.rotated_subspace(tol).map_err(numeric)?),
        SetSpec::Subspace(spec.odd_coordinate_subspace(tol).map_err(numeric)?),
    ];
    let (_, final_even) = spec.closed_form(n_pairs).map_err(numeric)?;

    let mut report = base_report(config, None);
    report.final_distances = distances(&sets, &final_even, tol)?;
    report.final_point = final_even.to_vec();
    report.gammas = gammas;
    report.checkpoints = pair_cps.clone();
    report.gamma_sums = report_sums
        .gammas()
        .iter()
        .map(|&g| {
            pair_cps
                .iter()
                .map(|&n| report_sums.sum_at(g, n).expect("recorded"))
                .collect()
        })
        .collect();
    report.max_residual = max_residual;
    Ok((report, table))
}

fn run_conified(
    config: &ExperimentConfig,
    beta: f64,
    r: u32,
    a0: f64,
    b0: f64,
    n_pairs: usize,
    tol: &Tolerances,
) -> Result<(RunReport, CsvTable), CliError> {
    if n_pairs == 0 {
        return empty_run(
            config,
            &["n", "a", "b", "step_norm"],
            &["ratio"],
            &[0.5, 1.0, 2.0],
        );
    }
    let fam = FlatFamily::new(beta, r).map_err(|e| config_err(e.to_string()))?;
    let spec = ConifiedRunSpec::new(fam.clone(), a0, b0, n_pairs)
        .map_err(|e| config_err(e.to_string()))?;
    let run = conified_run(&spec, tol).map_err(numeric)?;
    let model = AsymptoticModel::for_flat_family(&fam);

    let gammas = effective_gammas(config, &[0.5, 1.0, 2.0]);
    let pair_cps = effective_checkpoints(config, n_pairs)?;
    let row_indices: Vec<usize> = if n_pairs <= PER_STEP_ROW_LIMIT {
        (1..=n_pairs).collect()
    } else {
        pair_cps.clone()
    };
    let step_indices: Vec<usize> = row_indices.iter().map(|n| 2 * n).collect();
    let row_sums = gamma_partial_sums(&run.step_norms, &gammas, &step_indices).map_err(numeric)?;

    let mut rows = Vec::with_capacity(row_indices.len());
    for &n in &row_indices {
        let mut row = vec![
            Some(n as f64),
            Some(run.a[n]),
            Some(run.b[n]),
            Some(run.step_norms[2 * n - 1]),
        ];
        row.extend(sums_at(&row_sums, 2 * n).into_iter().map(Some));
        let ratio = if n >= 3 {
            Some(run.b[n] / (model.alpha / (n as f64).ln()).powf(1.0 / model.p))
        } else {
            None
        };
        row.push(ratio);
        rows.push(row);
    }
    let table = CsvTable {
        columns: series_columns(&["n", "a", "b", "step_norm"], &gammas, &["ratio"]),
        rows,
    };

    let plane_basis = projlab::OrthoBasis::new(vec![Point::unit(3, 0), Point::unit(3, 2)], 3, tol)
        .map_err(numeric)?;
    let sets = vec![
        SetSpec::HomogenizedCone(fam),
        SetSpec::Subspace(plane_basis),
    ];
    let final_point = run.trajectory.final_point().clone();

    let mut report = base_report(config, None);
    report.final_distances = distances(&sets, &final_point, tol)?;
    report.final_point = final_point.to_vec();
    report.gammas = gammas.clone();
    report.checkpoints = pair_cps.clone();
    let report_sums = gamma_partial_sums(
        &run.step_norms,
        &gammas,
        &pair_cps.iter().map(|n| 2 * n).collect::<Vec<_>>(),
    )
    .map_err(numeric)?;
    report.gamma_sums = report_sums
        .gammas()
        .iter()
        .map(|&g| {
            pair_cps
                .iter()
                .map(|&n| report_sums.sum_at(g, 2 * n).expect("recorded"))
                .collect()
        })
        .collect();
    let ratio_cps: Vec<usize> = pair_cps.iter().copied().filter(|&n| n >= 3).collect();
    if !ratio_cps.is_empty() {
        report.ratios = Some(asymptotic_ratio(&run.b, &model, &ratio_cps).map_err(numeric)?);
    }
    report.max_residual = Some(run.max_ratio_residual);
    Ok((report, table))
}

#[allow(clippy::too_many_arguments)]
fn run_polyhedral(
    config: &ExperimentConfig,
    seed: u64,
    dim: usize,
    n_cones: usize,
    rows_per_cone: usize,
    lambda_min: f64,
    n_steps: usize,
    tol: &Tolerances,
) -> Result<(RunReport, CsvTable), CliError> {
    let spec = PolyhedralRunSpec {
        seed,
        dim,
        n_cones,
        rows_per_cone,
        lambda_min,
        n_steps,
    };
    let run = positive_polyhedral_run(&spec, tol).map_err(numeric)?;
    let gammas = effective_gammas(config, &POLYHEDRAL_GAMMAS);
    let cps = effective_checkpoints(config, n_steps)?;
    let norms = run.trajectory.step_norms();
    let row_indices: Vec<usize> = if n_steps <= PER_STEP_ROW_LIMIT {
        (1..=n_steps).collect()
    } else {
        cps.clone()
    };
    let row_sums = gamma_partial_sums(norms, &gammas, &row_indices).map_err(numeric)?;
    let report_sums = gamma_partial_sums(norms, &gammas, &cps).map_err(numeric)?;

    let mut rows = Vec::with_capacity(row_indices.len());
    for &n in &row_indices {
        let mut row = vec![Some(n as f64), Some(norms[n - 1])];
        row.extend(sums_at(&row_sums, n).into_iter().map(Some));
        rows.push(row);
    }
    let table = CsvTable {
        columns: series_columns(&["n", "step_norm"], &gammas, &[]),
        rows,
    };

    let sets: Vec<SetSpec> = run
        .cones
        .iter()
        .cloned()
        .map(SetSpec::PolyhedralH)
        .collect();
    let final_point = run.trajectory.final_point().clone();

    let mut report = base_report(config, Some(seed));
    report.final_distances = distances(&sets, &final_point, tol)?;
    report.final_point = final_point.to_vec();
    report.gammas = gammas;
    report.checkpoints = cps.clone();
    report.gamma_sums = report_sums
        .gammas()
        .iter()
        .map(|&g| cps.iter().map(|&n| report_sums.sum_at(g, n).expect("recorded")).collect())
        .collect();
    Ok((report, table))
}

fn build_custom_set(set: &CustomSet, dim: usize, tol: &Tolerances) -> Result<SetSpec, CliError> {
    let to_points = |vs: &[Vec<f64>]| -> Result<Vec<Point>, CliError> {
        vs.iter()
            .map(|c| {
                if c.len() != dim {
                    return Err(config_err(format!(
                        "set vector dimension {} does not match x0 dimension {dim}",
                        c.len()
                    )));
                }
                Point::new(c.clone()).map_err(|e| config_err(e.to_string()))
            })
            .collect()
    };
    match set {
        CustomSet::Subspace { vectors } => {
            if vectors.is_empty() {
                return Err(config_err("subspace needs at least one spanning vector"));
            }
            let basis =
                orthonormalize(&to_points(vectors)?, tol).map_err(|e| config_err(e.to_string()))?;
            Ok(SetSpec::Subspace(basis))
        }
        CustomSet::Cone { normals } => {
            let sys = HalfspaceSystem::cone(to_points(normals)?, dim, tol)
                .map_err(|e| config_err(e.to_string()))?;
            Ok(SetSpec::PolyhedralH(sys))
        }
        CustomSet::Halfspaces {
            normals,
            offsets,
            feasible_point,
        } => {
            if normals.len() != offsets.len() {
                return Err(config_err("normals and offsets must have equal length"));
            }
            let rows: Vec<(Point, f64)> = to_points(normals)?
                .into_iter()
                .zip(offsets.iter().copied())
                .collect();
            let witness = Point::new(feasible_point.clone())
                .map_err(|e| config_err(e.to_string()))?;
            let sys = HalfspaceSystem::new(rows, dim, &witness, tol)
                .map_err(|e| config_err(e.to_string()))?;
            Ok(SetSpec::PolyhedralH(sys))
        }
    }
}

fn run_custom(
    config: &ExperimentConfig,
    x0: &[f64],
    n_steps: usize,
    custom_sets: &[CustomSet],
    policy: &CustomPolicy,
    tol: &Tolerances,
) -> Result<(RunReport, CsvTable), CliError> {
    let dim = x0.len();
    let sets: Vec<SetSpec> = custom_sets
        .iter()
        .map(|s| build_custom_set(s, dim, tol))
        .collect::<Result<_, _>>()?;
    let (control, seed) = match policy {
        CustomPolicy::Cyclic { order } => (ControlPolicy::Cyclic { order: order.clone() }, None),
        CustomPolicy::Random { seed, lambda_min } => {
            let seed = seed.expect("validated");
            (
                ControlPolicy::Random {
                    seed,
                    lambda_min: *lambda_min,
                },
                Some(seed),
            )
        }
    };
    let x0 = Point::new(x0.to_vec()).map_err(|e| config_err(e.to_string()))?;
    if n_steps == 0 {
        let mut report = base_report(config, seed);
        report.final_distances = distances(&sets, &x0, tol)?;
        report.final_point = x0.to_vec();
        report.gammas = effective_gammas(config, &[0.5, 1.0, 2.0]);
        let table = CsvTable {
            columns: series_columns(&["n", "step_norm"], &report.gammas, &[]),
            rows: Vec::new(),
        };
        return Ok((report, table));
    }
    let traj = dynamics::run(&sets, &control, &x0, n_steps, tol).map_err(numeric)?;

    let gammas = effective_gammas(config, &[0.5, 1.0, 2.0]);
    let cps = effective_checkpoints(config, n_steps)?;
    let norms = traj.step_norms();
    let row_indices: Vec<usize> = if n_steps <= PER_STEP_ROW_LIMIT {
        (1..=n_steps).collect()
    } else {
        cps.clone()
    };
    let row_sums = gamma_partial_sums(norms, &gammas, &row_indices).map_err(numeric)?;
    let report_sums = gamma_partial_sums(norms, &gammas, &cps).map_err(numeric)?;

    let mut rows = Vec::with_capacity(row_indices.len());
    for &n in &row_indices {
        let mut row = vec![Some(n as f64), Some(norms[n - 1])];
        row.extend(sums_at(&row_sums, n).into_iter().map(Some));
        rows.push(row);
    }
    let table = CsvTable {
        columns: series_columns(&["n", "step_norm"], &gammas, &[]),
        rows,
    };

    let final_point = traj.final_point().clone();
    let mut report = base_report(config, seed);
    report.final_distances = distances(&sets, &final_point, tol)?;
    report.final_point = final_point.to_vec();
    report.gammas = gammas;
    report.checkpoints = cps.clone();
    report.gamma_sums = report_sums
        .gammas()
        .iter()
        .map(|&g| cps.iter().map(|&n| report_sums.sum_at(g, n).expect("recorded")).collect())
        .collect();
    Ok((report, table))
}

/// Zero-step runs: an empty table and a report echoing the start.
fn empty_run(
    config: &ExperimentConfig,
    prefix: &[&str],
    suffix: &[&str],
    default_gammas: &[f64],
) -> Result<(RunReport, CsvTable), CliError> {
    let gammas = effective_gammas(config, default_gammas);
    let table = CsvTable {
        columns: series_columns(prefix, &gammas, suffix),
        rows: Vec::new(),
    };
    let mut report = base_report(config, None);
    report.gammas = gammas;
    Ok((report, table))
}
