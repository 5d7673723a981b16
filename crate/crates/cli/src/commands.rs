//! Subcommand implementations.

use serde::Serialize;
use tomo_core::{
    back_transform_diagonals, build_elements, build_transfer_function_weighted,
    counts_from_records, em_reconstruct, matrix::matrix_to_repr, read_records, scan_to_csv,
    simulate_counts_for_elements, variance_table, write_records, DimensionPolicy,
    ReconstructionConfig, TrialBudget, WignerScanConfig,
};

use crate::config::{
    FisherConfig, ReconstructConfig, SimulateConfig, TransferConfig, WignerConfig,
};
use crate::{CliError, RunContext, VERSION};

fn write_json<T: Serialize>(ctx: &RunContext, name: &str, value: &T) -> Result<(), CliError> {
    let path = ctx.out_path(name);
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Output(format!("serialize {name}: {e}")))?;
    std::fs::write(&path, text + "\n")
        .map_err(|e| CliError::Output(format!("write {}: {e}", path.display())))
}

#[derive(Serialize)]
struct TransferReport {
    eigenvalues: Vec<f64>,
    ratios: Vec<f64>,
    kept: usize,
    threshold: f64,
    n_tr: usize,
    n_work: usize,
    version: &'static str,
    config_sha256: String,
}

pub fn cmd_transfer(ctx: &RunContext) -> Result<(), CliError> {
    let cfg: TransferConfig = ctx.parse()?;
    let settings = cfg.plan.build(&ctx.base_dir)?;
    let policy = cfg.policy.build(&settings)?;
    let tf = build_transfer_function_weighted(&settings, &policy, cfg.threshold, cfg.weighting)
        .map_err(CliError::Numerical)?;
    let report = TransferReport {
        eigenvalues: tf.eigenvalues().to_vec(),
        ratios: tf.eigenvalue_ratios(),
        kept: tf.kept_count(),
        threshold: cfg.threshold,
        n_tr: policy.n_tr(),
        n_work: policy.n_work(),
        version: VERSION,
        config_sha256: ctx.config_sha256.clone(),
    };
    write_json(ctx, &cfg.output, &report)
}

#[derive(Serialize)]
struct RecordsMeta {
    version: &'static str,
    config_sha256: String,
    total_trials: u64,
    settings: usize,
    seed: u64,
}

pub fn cmd_simulate(ctx: &RunContext) -> Result<(), CliError> {
    let cfg: SimulateConfig = ctx.parse()?;
    let settings = cfg.plan.build(&ctx.base_dir)?;
    let policy = cfg.policy.build(&settings)?;
    let rho = cfg.state.build(policy.n_tr(), &ctx.base_dir)?;
    let elements = build_elements(&settings, &policy).map_err(CliError::Numerical)?;
    let records =
        simulate_counts_for_elements(&rho, &elements, cfg.seed).map_err(CliError::Numerical)?;
    let path = ctx.out_path(&cfg.output);
    let mut buf = Vec::new();
    write_records(&mut buf, &records).map_err(CliError::Numerical)?;
    std::fs::write(&path, buf)
        .map_err(|e| CliError::Output(format!("write {}: {e}", path.display())))?;
    // Records files are bare JSON lines per the schema; hash and version go
    // to a sidecar.
    let meta = RecordsMeta {
        version: VERSION,
        config_sha256: ctx.config_sha256.clone(),
        total_trials: settings.iter().map(|s| s.trials).sum(),
        settings: settings.len(),
        seed: cfg.seed,
    };
    write_json(ctx, &format!("{}.meta.json", cfg.output), &meta)
}

#[derive(Serialize)]
struct ReconstructReport {
    rho: tomo_core::matrix::MatrixRepr,
    loglik: Vec<f64>,
    iterations: usize,
    residual: f64,
    converged: bool,
    kept: usize,
    g_eigenvalues: Vec<f64>,
    n_mes: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    variance: Option<tomo_core::VarianceTable>,
    version: &'static str,
    config_sha256: String,
}

pub fn cmd_reconstruct(ctx: &RunContext) -> Result<(), CliError> {
    let cfg: ReconstructConfig = ctx.parse()?;
    let settings = cfg.plan.build(&ctx.base_dir)?;
    let policy = cfg.policy.build(&settings)?;
    let elements = build_elements(&settings, &policy).map_err(CliError::Numerical)?;

    let counts: Vec<f64> = match &cfg.records {
        Some(path) => {
            let full = ctx.base_dir.join(path);
            let file = std::fs::File::open(&full).map_err(|e| {
                CliError::Config(format!("cannot open records {}: {e}", full.display()))
            })?;
            let records = read_records(file).map_err(CliError::Numerical)?;
            if records.len() != elements.len() {
                return Err(CliError::Config(format!(
                    "records ({}) do not match the plan ({} settings)",
                    records.len(),
                    elements.len()
                )));
            }
            counts_from_records(&records)
        }
        None => {
            let state = cfg.state.as_ref().ok_or_else(|| {
                CliError::Config("reconstruct needs either records or a state to simulate".into())
            })?;
            let rho = state.build(policy.n_tr(), &ctx.base_dir)?;
            let records = simulate_counts_for_elements(&rho, &elements, cfg.seed)
                .map_err(CliError::Numerical)?;
            counts_from_records(&records)
        }
    };

    let tf = build_transfer_function_weighted(
        &settings,
        &policy,
        cfg.threshold,
        tomo_core::Weighting::Uniform,
    )
    .map_err(CliError::Numerical)?;

    let mut em_cfg = ReconstructionConfig {
        rel_threshold: cfg.threshold,
        ..Default::default()
    };
    if let Some(m) = cfg.max_iterations {
        em_cfg.max_iterations = m;
    }
    if let Some(t) = cfg.tolerance {
        em_cfg.likelihood_tolerance = t;
    }
    if let Some(e) = cfg.dilution_epsilon {
        em_cfg.dilution_epsilon = e;
    }

    let result =
        em_reconstruct(&counts, &elements, &tf, &em_cfg).map_err(CliError::Numerical)?;
    let n_mes = settings.iter().map(|s| s.trials).sum();
    let variance = if cfg.fisher {
        Some(variance_table(&result.rho, &elements, n_mes).map_err(CliError::Numerical)?)
    } else {
        None
    };
    let report = ReconstructReport {
        rho: matrix_to_repr(result.rho.matrix()),
        loglik: result.loglik_trace,
        iterations: result.iterations_used,
        residual: result.extremal_residual,
        converged: result.converged,
        kept: tf.kept_count(),
        g_eigenvalues: tf.eigenvalues().to_vec(),
        n_mes,
        variance,
        version: VERSION,
        config_sha256: ctx.config_sha256.clone(),
    };
    write_json(ctx, &cfg.output, &report)
}

#[derive(Serialize)]
struct DiagonalsReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    diagonals: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<f64>,
    n_tr: usize,
    kernel_convention: &'static str,
    version: &'static str,
    config_sha256: String,
}

pub fn cmd_wigner(ctx: &RunContext) -> Result<(), CliError> {
    let cfg: WignerConfig = ctx.parse()?;
    let budget = match (cfg.trials_per_point, cfg.trials_per_efficiency) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "give only one of trials_per_point / trials_per_efficiency".into(),
            ))
        }
        (Some(t), None) => TrialBudget::PerPoint(t),
        (None, Some(t)) => TrialBudget::PerEfficiency(t),
        (None, None) => TrialBudget::PerPoint(10_000),
    };
    let scan = WignerScanConfig {
        grid: cfg.grid.clone().into(),
        efficiencies: cfg.efficiencies.values()?,
        budget,
        iterations: cfg.iterations,
        n_tr: cfg.n_tr,
        seed: cfg.seed,
        noiseless: cfg.noiseless,
    };
    let rho = cfg.state.build(cfg.n_tr, &ctx.base_dir)?;
    let rows = tomo_core::scan_grid(&rho, &scan).map_err(CliError::Numerical)?;

    let csv_path = ctx.out_path(&cfg.output_csv);
    let mut csv = format!(
        "# version={VERSION}\n# config_sha256={}\n",
        ctx.config_sha256
    );
    csv.push_str(&scan_to_csv(&rows));
    std::fs::write(&csv_path, csv)
        .map_err(|e| CliError::Output(format!("write {}: {e}", csv_path.display())))?;

    let (diagonals, trace) = if cfg.back_transform {
        let points: Vec<tomo_core::WignerPoint> =
            rows.iter().map(|r| r.point.clone()).collect();
        let policy = DimensionPolicy::padded(cfg.n_tr, scan.grid.max_abs_gamma())
            .map_err(CliError::Numerical)?;
        let diag = back_transform_diagonals(&points, &scan.grid, &policy)
            .map_err(CliError::Numerical)?;
        let trace = diag.iter().sum();
        (Some(diag), Some(trace))
    } else {
        (None, None)
    };
    let report = DiagonalsReport {
        diagonals,
        trace,
        n_tr: cfg.n_tr,
        kernel_convention:
            "rho = 2 * sum_grid W(gamma) D(gamma) (-1)^n D(gamma)^dag * cell_area (midpoint rule)",
        version: VERSION,
        config_sha256: ctx.config_sha256.clone(),
    };
    write_json(ctx, &cfg.output_diagonals, &report)
}

#[derive(Serialize)]
struct FisherReport {
    #[serde(flatten)]
    table: tomo_core::VarianceTable,
    version: &'static str,
    config_sha256: String,
}

pub fn cmd_fisher(ctx: &RunContext) -> Result<(), CliError> {
    let cfg: FisherConfig = ctx.parse()?;
    let settings = cfg.plan.build(&ctx.base_dir)?;
    let policy = cfg.policy.build(&settings)?;
    let rho = cfg.state.build(policy.n_tr(), &ctx.base_dir)?;
    let elements = build_elements(&settings, &policy).map_err(CliError::Numerical)?;
    let n_mes = cfg
        .n_mes
        .unwrap_or_else(|| settings.iter().map(|s| s.trials).sum());
    if n_mes == 0 {
        return Err(CliError::Config(
            "n_mes is zero; give n_mes or a plan with trials".into(),
        ));
    }
    let table = variance_table(&rho, &elements, n_mes).map_err(CliError::Numerical)?;
    let report = FisherReport {
        table,
        version: VERSION,
        config_sha256: ctx.config_sha256.clone(),
    };
    write_json(ctx, &cfg.output, &report)
}
