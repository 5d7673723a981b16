//! JSON run configurations for the subcommands.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use tomo_core::{DensityMatrix, DimensionPolicy, Setting};

use crate::CliError;

/// State constructors accepted wherever a true state is needed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Fock {
        n: usize,
    },
    Coherent {
        re: f64,
        im: f64,
    },
    Superposition {
        components: Vec<StateComponent>,
    },
    /// Density matrix stored as `{"dim": N, "re": [[..]], "im": [[..]]}`.
    File {
        path: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateComponent {
    pub n: usize,
    pub re: f64,
    pub im: f64,
}

impl StateSpec {
    pub fn build(&self, dim: usize, base: &std::path::Path) -> Result<DensityMatrix, CliError> {
        match self {
            StateSpec::Fock { n } => DensityMatrix::fock(*n, dim).map_err(CliError::Numerical),
            StateSpec::Coherent { re, im } => {
                DensityMatrix::coherent(Complex64::new(*re, *im), dim).map_err(CliError::Numerical)
            }
            StateSpec::Superposition { components } => {
                let comps: Vec<(usize, Complex64)> = components
                    .iter()
                    .map(|c| (c.n, Complex64::new(c.re, c.im)))
                    .collect();
                DensityMatrix::superposition(&comps, dim).map_err(CliError::Numerical)
            }
            StateSpec::File { path } => {
                let full = base.join(path);
                let text = std::fs::read_to_string(&full).map_err(|e| {
                    CliError::Config(format!("cannot read state file {}: {e}", full.display()))
                })?;
                let repr: tomo_core::matrix::MatrixRepr = serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("state file: {e}")))?;
                let mat = tomo_core::matrix::matrix_from_repr(&repr)
                    .map_err(CliError::Numerical)?;
                if mat.nrows() != dim {
                    return Err(CliError::Config(format!(
                        "state file dimension {} does not match n_tr {dim}",
                        mat.nrows()
                    )));
                }
                DensityMatrix::new(mat).map_err(CliError::Numerical)
            }
        }
    }
}

/// Flat plan entry, the schema of plan files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanEntry {
    pub nu: f64,
    pub gamma_re: f64,
    pub gamma_im: f64,
    pub trials: u64,
}

impl PlanEntry {
    fn to_setting(&self) -> Result<Setting, CliError> {
        Setting::new(
            self.nu,
            Complex64::new(self.gamma_re, self.gamma_im),
            self.trials,
        )
        .map_err(CliError::Numerical)
    }
}

/// Where the measurement plan comes from: a plan file, inline settings, or a
/// generated scan (gamma points crossed with an efficiency ladder).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings: Option<Vec<PlanEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    /// `[re, im]` pairs.
    pub gamma_points: Vec<[f64; 2]>,
    pub efficiency_count: usize,
    pub efficiency_min: f64,
    pub efficiency_max: f64,
    /// Total over the whole plan, split equally (remainder to the first
    /// settings in plan order).
    pub total_trials: u64,
}

impl PlanSpec {
    pub fn build(&self, base: &std::path::Path) -> Result<Vec<Setting>, CliError> {
        let sources =
            self.file.is_some() as u8 + self.settings.is_some() as u8 + self.scan.is_some() as u8;
        if sources != 1 {
            return Err(CliError::Config(
                "plan must specify exactly one of: file, settings, scan".into(),
            ));
        }
        if let Some(path) = &self.file {
            let full = base.join(path);
            let text = std::fs::read_to_string(&full).map_err(|e| {
                CliError::Config(format!("cannot read plan file {}: {e}", full.display()))
            })?;
            let entries: Vec<PlanEntry> = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("plan file: {e}")))?;
            return entries.iter().map(|e| e.to_setting()).collect();
        }
        if let Some(entries) = &self.settings {
            return entries.iter().map(|e| e.to_setting()).collect();
        }
        let scan = self.scan.as_ref().expect("checked above");
        if scan.efficiency_count < 1 || scan.gamma_points.is_empty() {
            return Err(CliError::Config(
                "scan needs at least one gamma point and one efficiency".into(),
            ));
        }
        let n = scan.gamma_points.len() * scan.efficiency_count;
        let base_trials = scan.total_trials / n as u64;
        let remainder = (scan.total_trials % n as u64) as usize;
        let mut settings = Vec::with_capacity(n);
        for point in &scan.gamma_points {
            for i in 0..scan.efficiency_count {
                let frac = if scan.efficiency_count == 1 {
                    0.0
                } else {
                    i as f64 / (scan.efficiency_count - 1) as f64
                };
                let nu =
                    scan.efficiency_min + (scan.efficiency_max - scan.efficiency_min) * frac;
                let trials = base_trials + u64::from(settings.len() < remainder);
                settings.push(
                    Setting::new(nu, Complex64::new(point[0], point[1]), trials)
                        .map_err(CliError::Numerical)?,
                );
            }
        }
        Ok(settings)
    }
}

/// Truncation plus optional explicit working dimension; `auto` pads for the
/// plan's largest displacement.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub n_tr: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_work: Option<usize>,
}

impl PolicySpec {
    pub fn build(&self, settings: &[Setting]) -> Result<DimensionPolicy, CliError> {
        match self.n_work {
            Some(n_work) => DimensionPolicy::new(self.n_tr, n_work).map_err(CliError::Numerical),
            None => {
                let max_gamma = settings
                    .iter()
                    .map(|s| s.gamma.norm())
                    .fold(0.0f64, f64::max);
                DimensionPolicy::padded(self.n_tr, max_gamma).map_err(CliError::Numerical)
            }
        }
    }
}

fn default_threshold() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferConfig {
    pub plan: PlanSpec,
    #[serde(flatten)]
    pub policy: PolicySpec,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub weighting: tomo_core::Weighting,
    pub output: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub state: StateSpec,
    pub plan: PlanSpec,
    #[serde(flatten)]
    pub policy: PolicySpec,
    #[serde(default)]
    pub seed: u64,
    pub output: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructConfig {
    /// True state; used to simulate when no records file is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSpec>,
    /// Pre-simulated records (JSON lines), aligned with the plan order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub records: Option<String>,
    pub plan: PlanSpec,
    #[serde(flatten)]
    pub policy: PolicySpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dilution_epsilon: Option<f64>,
    /// Attach the Fisher variance table to the result.
    #[serde(default = "default_true")]
    pub fisher: bool,
    pub output: String,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfficiencyLadder {
    pub count: usize,
    pub min: f64,
    pub max: f64,
}

impl EfficiencyLadder {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if self.count < 2 {
            return Err(CliError::Config("efficiency ladder needs count >= 2".into()));
        }
        Ok((0..self.count)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64)
            .collect())
    }
}

fn default_eff_ladder() -> EfficiencyLadder {
    EfficiencyLadder {
        count: 30,
        min: 0.1,
        max: 0.9,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerConfig {
    pub state: StateSpec,
    #[serde(default)]
    pub grid: GridSpecConfig,
    #[serde(default = "default_eff_ladder")]
    pub efficiencies: EfficiencyLadder,
    /// Exactly one of these selects the trial budget (both absent means the
    /// standard 10^4 total per point).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials_per_point: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials_per_efficiency: Option<u64>,
    #[serde(default = "default_wigner_iterations")]
    pub iterations: usize,
    pub n_tr: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noiseless: bool,
    pub output_csv: String,
    pub output_diagonals: String,
    /// Skip the density-matrix back-transform (diagonals file still written,
    /// holding only metadata).
    #[serde(default = "default_true")]
    pub back_transform: bool,
}

fn default_wigner_iterations() -> usize {
    1000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpecConfig {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub re_count: usize,
    pub im_count: usize,
}

impl Default for GridSpecConfig {
    fn default() -> Self {
        let g = tomo_core::GridSpec::default();
        Self {
            re_min: g.re_min,
            re_max: g.re_max,
            im_min: g.im_min,
            im_max: g.im_max,
            re_count: g.re_count,
            im_count: g.im_count,
        }
    }
}

impl From<GridSpecConfig> for tomo_core::GridSpec {
    fn from(c: GridSpecConfig) -> Self {
        tomo_core::GridSpec {
            re_min: c.re_min,
            re_max: c.re_max,
            im_min: c.im_min,
            im_max: c.im_max,
            re_count: c.re_count,
            im_count: c.im_count,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FisherConfig {
    pub state: StateSpec,
    pub plan: PlanSpec,
    #[serde(flatten)]
    pub policy: PolicySpec,
    /// Total measurement count; defaults to the plan's total trials.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_mes: Option<u64>,
    pub output: String,
}
