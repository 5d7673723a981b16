//! Synthetic no-count statistics with reproducible per-setting random
//! streams.

use std::io::{BufRead, BufReader, Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, DimensionPolicy};
use crate::povm::{build_elements, probability, PovmElement, Setting};

/// Observed no-count tally for one setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    #[serde(rename = "j")]
    pub setting_index: usize,
    pub trials: u64,
    pub no_count: u64,
}

/// A full measurement plan with its dimension policy and seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub settings: Vec<Setting>,
    pub policy: DimensionPolicy,
    pub seed: u64,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.settings.is_empty() {
            return Err(Error::EmptyPlan);
        }
        for s in &self.settings {
            s.validate()?;
        }
        if self.settings.iter().map(|s| s.trials).sum::<u64>() == 0 {
            return Err(Error::InvalidSetting {
                reason: "plan has zero total trials".into(),
            });
        }
        Ok(())
    }

    pub fn total_trials(&self) -> u64 {
        self.settings.iter().map(|s| s.trials).sum()
    }
}

/// Draw `no_count ~ Binomial(trials, p)` from a dedicated stream so that the
/// outcome for one setting never depends on the rest of the plan.
fn sample_binomial(seed: u64, stream: u64, trials: u64, p: f64) -> Result<u64> {
    if trials == 0 || p == 0.0 {
        return Ok(0);
    }
    if p == 1.0 {
        return Ok(trials);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let dist = Binomial::new(trials, p).map_err(|e| Error::InvalidConfig {
        reason: format!("binomial sampling: {e}"),
    })?;
    Ok(dist.sample(&mut rng))
}

/// Simulate the no-count records of a plan against a true state.
pub fn simulate_counts(
    rho_true: &DensityMatrix,
    plan: &ExperimentPlan,
) -> Result<Vec<MeasurementRecord>> {
    plan.validate()?;
    let elements = build_elements(&plan.settings, &plan.policy)?;
    simulate_counts_for_elements(rho_true, &elements, plan.seed)
}

/// Same as [`simulate_counts`] with the POVM elements already built; the
/// element order defines the setting index and the random stream.
pub fn simulate_counts_for_elements(
    rho_true: &DensityMatrix,
    elements: &[PovmElement],
    seed: u64,
) -> Result<Vec<MeasurementRecord>> {
    if elements.is_empty() {
        return Err(Error::EmptyPlan);
    }
    let mut records = Vec::with_capacity(elements.len());
    for (j, element) in elements.iter().enumerate() {
        let p = probability(rho_true, element)?;
        let trials = element.setting().trials;
        let no_count = sample_binomial(seed, j as u64, trials, p)?;
        records.push(MeasurementRecord {
            setting_index: j,
            trials,
            no_count,
        });
    }
    Ok(records)
}

/// Exact-proportion data `N_j = trials_j * p_j` for noiseless runs.
pub fn exact_counts(rho_true: &DensityMatrix, elements: &[PovmElement]) -> Result<Vec<f64>> {
    elements
        .iter()
        .map(|e| Ok(e.setting().trials as f64 * probability(rho_true, e)?))
        .collect()
}

/// Real-valued counts from integer records, in record order.
pub fn counts_from_records(records: &[MeasurementRecord]) -> Vec<f64> {
    records.iter().map(|r| r.no_count as f64).collect()
}

/// Write records as JSON lines: `{"j": i, "trials": n, "no_count": N}`.
pub fn write_records<W: Write>(mut out: W, records: &[MeasurementRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<MeasurementRecord>> {
    let mut records = Vec::new();
    for line in BufReader::new(input).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: MeasurementRecord = serde_json::from_str(&line)?;
        if r.no_count > r.trials {
            return Err(Error::InvalidCounts {
                reason: format!(
                    "record {}: no_count {} exceeds trials {}",
                    r.setting_index, r.no_count, r.trials
                ),
            });
        }
        records.push(r);
    }
    Ok(records)
}
