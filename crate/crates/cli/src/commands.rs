use std::f64::consts::{FRAC_PI_2, TAU};

use chiral_router::noise::{NoiseModel, OUSpec, VonMisesSpec};
use chiral_router::routing::{average_fidelity, worst_case_fidelity, AveragingMeasure};
use chiral_router::search::{
    optimize, scan, AxisRange, Objective, ParamKind, RefineOptions, ScanGrid,
};
use chiral_router::{
    build_full_hamiltonian, build_reduced_hamiltonian, reduction_deviation, FullGraphLayout,
    RouterParams, SuperpositionGrid, SuperpositionParams, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{pick, ExperimentConfig, FormatArg, MeasureArg, ObjectiveArg};
use crate::output::{compact, complex_matrix, csv, json_rows, pretty};
use crate::{
    AxisArgs, CliError, Command, KindArg, ModelArg, Report, RouterArgs, SuperpositionGridArgs,
};

/// Published configurations: `(n, t, φ, objective is the average, value)`.
pub const TABLE1: [(u64, f64, f64, bool, f64); 5] = [
    (20, 18.550, 4.712, true, 0.993),
    (20, 18.523, 4.708, false, 0.984),
    (70, 18.397, 4.758, true, 0.987),
    (70, 18.484, 4.765, false, 0.976),
    (1_000_000, 40.068, 4.716, false, 0.995),
];

const REDUCTION_TOL: f64 = 1e-9;

pub fn dispatch(cmd: &Command, cfg: &ExperimentConfig) -> Result<Report, CliError> {
    match cmd {
        Command::Hamiltonian {
            router,
            full,
            reduced,
            input_internal,
            output_internal,
        } => {
            let full = if *full {
                true
            } else if *reduced {
                false
            } else {
                cfg.full.unwrap_or(false)
            };
            hamiltonian(router, full, *input_internal, *output_internal, cfg)
        }
        Command::Scan {
            kind,
            router,
            axes,
            objective,
            grid,
            format,
        } => scan_cmd(*kind, router, axes, *objective, grid, *format, cfg),
        Command::Table1 { row, grid } => table1(row.as_deref(), grid, cfg),
        Command::Noise {
            model,
            router,
            alpha,
            chi,
            k,
            quadrature_points,
            theta,
            sigma,
            mu,
            dt,
            trajectories,
            seed,
            t_max,
            t_steps,
            format,
        } => {
            let sp = SuperpositionParams::new(
                pick(*alpha, cfg.alpha, 0.7),
                pick(*chi, cfg.chi, 3.0 * FRAC_PI_2),
            )?;
            let params = router_params(router, cfg, 20, 4.712)?;
            let model = match model {
                ModelArg::Vonmises => NoiseModel::VonMisesStatic(VonMisesSpec::with_points(
                    pick(*k, cfg.k, 12.5),
                    pick(
                        *quadrature_points,
                        cfg.quadrature_points,
                        VonMisesSpec::DEFAULT_POINTS,
                    ),
                )?),
                ModelArg::Ou => {
                    let mut spec =
                        OUSpec::new(pick(*theta, cfg.theta, 1.0), pick(*sigma, cfg.sigma, 0.4))?
                            .with_dt(pick(*dt, cfg.dt, OUSpec::DEFAULT_DT))?
                            .with_trajectories(pick(
                                *trajectories,
                                cfg.trajectories,
                                OUSpec::DEFAULT_TRAJECTORIES,
                            ))?
                            .with_seed(pick(*seed, cfg.seed, 0));
                    if let Some(mu) = mu.or(cfg.mu) {
                        spec = spec.with_mu(mu)?;
                    }
                    NoiseModel::OrnsteinUhlenbeck(spec)
                }
            };
            let t_max = pick(*t_max, cfg.t_max, 10.0);
            let t_steps = pick(*t_steps, cfg.t_steps, 201);
            noise(
                &params,
                &sp,
                &model,
                t_max,
                t_steps,
                pick(*format, cfg.format, FormatArg::Csv),
            )
        }
        Command::VerifyReduction {
            n_max,
            samples,
            seed,
            inject_corruption,
        } => verify_reduction(
            pick(*n_max, cfg.n_max, 8),
            pick(*samples, cfg.samples, 50),
            pick(*seed, cfg.seed, 0),
            inject_corruption.unwrap_or(0.0),
        ),
        Command::Optimize {
            kind,
            router,
            objective,
            grid,
            t_start,
            param_start,
            axes,
            min_step,
        } => optimize_cmd(
            *kind,
            router,
            *objective,
            grid,
            *t_start,
            *param_start,
            axes,
            *min_step,
            cfg,
        ),
    }
}

fn router_params(
    r: &RouterArgs,
    cfg: &ExperimentConfig,
    n: u64,
    phi: f64,
) -> Result<RouterParams, CliError> {
    Ok(RouterParams::new(
        pick(r.n, cfg.n, n),
        pick(r.beta, cfg.beta, 1.0),
        pick(r.phi, cfg.phi, phi),
    )?)
}

fn superposition_grid(
    g: &SuperpositionGridArgs,
    cfg: &ExperimentConfig,
) -> Result<SuperpositionGrid, CliError> {
    let measure = match pick(g.measure, cfg.measure, MeasureArg::Uniform) {
        MeasureArg::Uniform => AveragingMeasure::Uniform,
        MeasureArg::Haar => AveragingMeasure::Haar,
    };
    Ok(SuperpositionGrid::with_measure(
        pick(g.alpha_points, cfg.alpha_points, 41),
        pick(g.chi_points, cfg.chi_points, 64),
        measure,
    )?)
}

fn objective(o: ObjectiveArg) -> Objective {
    match o {
        ObjectiveArg::Localized => Objective::Localized,
        ObjectiveArg::Average => Objective::Average,
        ObjectiveArg::WorstCase => Objective::WorstCase,
    }
}

fn param_kind(k: KindArg) -> ParamKind {
    match k {
        KindArg::Phase => ParamKind::Phase,
        KindArg::Weight => ParamKind::Weight,
    }
}

fn hamiltonian(
    router: &RouterArgs,
    full: bool,
    input_internal: Option<usize>,
    output_internal: Option<usize>,
    cfg: &ExperimentConfig,
) -> Result<Report, CliError> {
    let params = router_params(router, cfg, 20, 0.0)?;
    let (kind, matrix) = if full {
        let layout = FullGraphLayout::new(
            params.n_outputs(),
            pick(input_internal, cfg.input_internal, 0),
            pick(output_internal, cfg.output_internal, 1),
        )?;
        (
            "full",
            build_full_hamiltonian(&params, &layout)?.into_matrix(),
        )
    } else {
        ("reduced", build_reduced_hamiltonian(&params).into_matrix())
    };
    let doc = json!({
        "kind": kind,
        "n": params.n_outputs(),
        "beta": params.beta(),
        "phi": params.phi(),
        "dim": matrix.nrows(),
        "matrix": complex_matrix(&matrix),
    });
    Ok(Report::ok(compact(&doc)))
}

fn scan_cmd(
    kind: KindArg,
    router: &RouterArgs,
    axes: &AxisArgs,
    obj: Option<ObjectiveArg>,
    grid: &SuperpositionGridArgs,
    format: Option<FormatArg>,
    cfg: &ExperimentConfig,
) -> Result<Report, CliError> {
    let (params, param_axis) = match kind {
        KindArg::Phase => (
            router_params(router, cfg, 40, 0.0)?,
            AxisRange::new(
                pick(axes.param_min, cfg.param_min, 0.0),
                pick(axes.param_max, cfg.param_max, TAU),
                pick(axes.param_steps, cfg.param_steps, 256),
                false,
            )?,
        ),
        KindArg::Weight => (
            router_params(router, cfg, 50, 0.0)?,
            AxisRange::new(
                pick(axes.param_min, cfg.param_min, 0.0),
                pick(axes.param_max, cfg.param_max, 40.0),
                pick(axes.param_steps, cfg.param_steps, 401),
                true,
            )?,
        ),
    };
    let t_axis = AxisRange::new(
        pick(axes.t_min, cfg.t_min, 0.0),
        pick(axes.t_max, cfg.t_max, 50.0),
        pick(axes.t_steps, cfg.t_steps, 501),
        true,
    )?;
    let sp_grid = superposition_grid(grid, cfg)?;
    let surface = scan(
        &params,
        &ScanGrid::new(t_axis, param_axis, param_kind(kind)),
        objective(pick(obj, cfg.objective, ObjectiveArg::Localized)),
        Some(&sp_grid),
    )?;
    let header = ["t", "param", "fidelity", "p_wrong"];
    let rows = surface
        .rows()
        .map(|(t, p, v, w)| vec![Some(t), Some(p), Some(v), w]);
    Ok(Report::ok(match pick(format, cfg.format, FormatArg::Csv) {
        FormatArg::Csv => csv(&header, rows),
        FormatArg::Json => json_rows(&header, rows),
    }))
}

/// Parse `1`..`5` or `all` into zero-based row indices.
pub fn parse_rows(row: &str) -> Result<Vec<usize>, CliError> {
    if row.eq_ignore_ascii_case("all") {
        return Ok((0..TABLE1.len()).collect());
    }
    match row.trim().parse::<usize>() {
        Ok(r) if (1..=TABLE1.len()).contains(&r) => Ok(vec![r - 1]),
        _ => Err(CliError::Usage(format!(
            "invalid row {row:?}; valid rows: 1, 2, 3, 4, 5, all"
        ))),
    }
}

fn table1(
    row: Option<&str>,
    grid: &SuperpositionGridArgs,
    cfg: &ExperimentConfig,
) -> Result<Report, CliError> {
    let rows = parse_rows(row.or(cfg.row.as_deref()).unwrap_or("all"))?;
    let sp_grid = superposition_grid(grid, cfg)?;
    let mut entries = Vec::new();
    for i in rows {
        let (n, t, phi, avg, published) = TABLE1[i];
        let params = RouterParams::new(n, 1.0, phi)?;
        let (computed, at) = if avg {
            (average_fidelity(&params, t, &sp_grid)?, None)
        } else {
            let w = worst_case_fidelity(&params, t, &sp_grid)?;
            (w.value, Some(w.at))
        };
        entries.push(json!({
            "row": i + 1,
            "n": n,
            "t": t,
            "phi": phi,
            "objective": if avg { "average" } else { "worst-case" },
            "computed": computed,
            "published": published,
            "abs_diff": (computed - published).abs(),
            "worst_state": at.map(|sp| json!({"alpha": sp.alpha(), "chi": sp.chi()})),
        }));
    }
    Ok(Report::ok(pretty(&json!({ "rows": entries }))))
}

fn noise(
    params: &RouterParams,
    sp: &SuperpositionParams,
    model: &NoiseModel,
    t_max: f64,
    t_steps: usize,
    format: FormatArg,
) -> Result<Report, CliError> {
    let times = AxisRange::new(0.0, t_max, t_steps, true)
        .map_err(|e| CliError::Usage(format!("time axis: {e}")))?
        .values();
    let curve = model.fidelity_curve(params, &times, sp)?;
    if !curve.converged {
        eprintln!("warning: quadrature did not settle below 1e-6; values may be inaccurate");
    }
    let header = ["t", "fidelity", "stderr"];
    let rows = curve.times.iter().enumerate().map(|(i, &t)| {
        vec![
            Some(t),
            Some(curve.fidelity[i]),
            curve.stderr.as_ref().map(|s| s[i]),
        ]
    });
    Ok(Report::ok(match format {
        FormatArg::Csv => csv(&header, rows),
        FormatArg::Json => json_rows(&header, rows),
    }))
}

fn verify_reduction(
    n_max: u64,
    samples: usize,
    seed: u64,
    corruption: f64,
) -> Result<Report, CliError> {
    if n_max < 2 {
        return Err(CliError::Usage(format!(
            "--n-max must be at least 2, got {n_max}"
        )));
    }
    if samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_n = Vec::new();
    let mut worst: f64 = 0.0;
    for n in 2..=n_max {
        let layout = FullGraphLayout::default_for(n)?;
        let mut max_dev: f64 = 0.0;
        for _ in 0..samples {
            let beta = rng.random_range(-2.0..=2.0);
            let phi = rng.random_range(0.0..TAU);
            let t = rng.random_range(0.0..=30.0);
            let params = RouterParams::new(n, beta, phi)?;
            let mut full = build_full_hamiltonian(&params, &layout)?;
            if corruption != 0.0 {
                let (port, site) = (
                    layout.external(layout.input_internal()),
                    layout.input_internal(),
                );
                full.set_pair(port, site, C64::new(1.0 + corruption, 0.0));
            }
            max_dev = max_dev.max(reduction_deviation(&full, &params, &layout, t)?);
        }
        worst = worst.max(max_dev);
        per_n.push(json!({ "n": n, "max_deviation": max_dev }));
    }
    let passed = worst <= REDUCTION_TOL;
    let doc = json!({
        "n_max": n_max,
        "samples_per_n": samples,
        "seed": seed,
        "tolerance": REDUCTION_TOL,
        "max_deviation": worst,
        "per_n": per_n,
        "pass": passed,
    });
    Ok(Report {
        text: pretty(&doc),
        passed,
    })
}

#[allow(clippy::too_many_arguments)]
fn optimize_cmd(
    kind: KindArg,
    router: &RouterArgs,
    obj: Option<ObjectiveArg>,
    grid: &SuperpositionGridArgs,
    t_start: Option<f64>,
    param_start: Option<f64>,
    axes: &AxisArgs,
    min_step: Option<f64>,
    cfg: &ExperimentConfig,
) -> Result<Report, CliError> {
    let params = router_params(router, cfg, 20, 4.712)?;
    let (start_param, param_bounds) = match kind {
        KindArg::Phase => (params.phi(), (0.0, TAU)),
        KindArg::Weight => (params.beta(), (0.0, 40.0)),
    };
    let start = [
        pick(t_start, cfg.t_start, 18.55),
        pick(param_start, cfg.param_start, start_param),
    ];
    let bounds = [
        (
            pick(axes.t_min, cfg.t_min, 0.0),
            pick(axes.t_max, cfg.t_max, 50.0),
        ),
        (
            pick(axes.param_min, cfg.param_min, param_bounds.0),
            pick(axes.param_max, cfg.param_max, param_bounds.1),
        ),
    ];
    let opts = RefineOptions {
        min_step: pick(min_step, cfg.min_step, RefineOptions::default().min_step),
        ..RefineOptions::default()
    };
    let objective_arg = pick(obj, cfg.objective, ObjectiveArg::Average);
    let sp_grid = superposition_grid(grid, cfg)?;
    let r = optimize(
        &params,
        param_kind(kind),
        objective(objective_arg),
        &sp_grid,
        start,
        bounds,
        &opts,
    )?;
    let doc = json!({
        "kind": match kind { KindArg::Phase => "phase", KindArg::Weight => "weight" },
        "n": params.n_outputs(),
        "t": r.point[0],
        "param": r.point[1],
        "value": r.value,
        "start_value": r.start_value,
        "evaluations": r.evaluations,
        "converged": r.converged,
    });
    Ok(Report::ok(pretty(&doc)))
}
