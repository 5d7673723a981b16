//! No-count POVM elements for displaced on/off detection and the tomographic
//! transfer function `G = sum_j A_j`.
//!
//! An element is the truncation of `D(gamma) diag((1-nu)^n) D(gamma)^dag` to
//! the reconstruction space. With a padded working dimension the block is an
//! accurate compression of the physical operator; with `n_work = n_tr` it is
//! the hard-truncated operator whose collapsing spectrum the transfer
//! function diagnoses.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{displacement_operator, DensityMatrix, DimensionPolicy};
use crate::matrix::{
    frobenius_norm, hermitian_eig, hermitize, inv_sqrt_projected, CMatrix, HermitianEigensystem,
};

/// One measurement configuration: effective efficiency, displacement and the
/// planned repetition count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    pub nu: f64,
    #[serde(with = "complex_parts")]
    pub gamma: Complex64,
    pub trials: u64,
}

mod complex_parts {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Parts {
        re: f64,
        im: f64,
    }

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        Parts { re: z.re, im: z.im }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let p = Parts::deserialize(d)?;
        Ok(Complex64::new(p.re, p.im))
    }
}

impl Setting {
    pub fn new(nu: f64, gamma: Complex64, trials: u64) -> Result<Self> {
        if !(nu > 0.0 && nu <= 1.0) || !nu.is_finite() {
            return Err(Error::InvalidSetting {
                reason: format!("efficiency nu = {nu} outside (0, 1]"),
            });
        }
        if !(gamma.re.is_finite() && gamma.im.is_finite()) {
            return Err(Error::InvalidSetting {
                reason: "gamma must be finite".into(),
            });
        }
        Ok(Self { nu, gamma, trials })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.nu, self.gamma, self.trials).map(|_| ())
    }
}

/// No-count POVM element `A_{nu,gamma}` on the reconstruction space.
#[derive(Debug, Clone)]
pub struct PovmElement {
    setting: Setting,
    matrix: CMatrix,
}

impl PovmElement {
    pub fn setting(&self) -> &Setting {
        &self.setting
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

const ELEMENT_SPECTRUM_TOL: f64 = 1e-8;

/// Build `A_{nu,gamma}` as the top-left `n_tr` block of
/// `D(gamma) diag((1-nu)^n) D(gamma)^dag` assembled in the working dimension.
pub fn build_povm_element(setting: &Setting, policy: &DimensionPolicy) -> Result<PovmElement> {
    setting.validate()?;
    let d = displacement_operator(setting.gamma, policy)?;
    let n_tr = policy.n_tr();
    let n_work = policy.n_work();
    let q = 1.0 - setting.nu;
    let mut weights = vec![0.0f64; n_work];
    let mut w = 1.0f64;
    for (n, slot) in weights.iter_mut().enumerate() {
        if n > 0 {
            w *= q;
        }
        *slot = w;
    }

    // Block of D diag(w) D^dag: only rows < n_tr are needed.
    let mut block = CMatrix::zeros(n_tr, n_tr);
    for i in 0..n_tr {
        for j in 0..=i {
            let mut acc = Complex64::default();
            for n in 0..n_work {
                acc += d[(i, n)] * weights[n] * d[(j, n)].conj();
            }
            block[(i, j)] = acc;
            block[(j, i)] = acc.conj();
        }
    }
    let block = hermitize(&block);

    let eig = hermitian_eig(&block)?;
    let max = eig.eigenvalues[0];
    let min = *eig.eigenvalues.last().expect("n_tr >= 1");
    if max > 1.0 + ELEMENT_SPECTRUM_TOL || min < -ELEMENT_SPECTRUM_TOL {
        return Err(Error::InsufficientPadding {
            n_tr,
            n_work,
            abs_gamma: setting.gamma.norm(),
        });
    }
    Ok(PovmElement {
        setting: *setting,
        matrix: block,
    })
}

/// Build all elements of a plan; per-setting construction runs in parallel
/// and the output order matches the plan order.
pub fn build_elements(settings: &[Setting], policy: &DimensionPolicy) -> Result<Vec<PovmElement>> {
    settings
        .par_iter()
        .map(|s| build_povm_element(s, policy))
        .collect()
}

const PROBABILITY_TOL: f64 = 1e-9;

/// `p = Re Tr[A rho]`, clamped into [0, 1] only for sub-tolerance excursions.
pub fn probability(rho: &DensityMatrix, element: &PovmElement) -> Result<f64> {
    if rho.dim() != element.dim() {
        return Err(Error::DimensionMismatch {
            expected: element.dim(),
            found: rho.dim(),
        });
    }
    let a = element.matrix();
    let r = rho.matrix();
    let mut p = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let prod = a[(i, j)] * r[(j, i)];
            p += prod.re;
        }
    }
    if !(-PROBABILITY_TOL..=1.0 + PROBABILITY_TOL).contains(&p) {
        return Err(Error::NonPhysicalProbability { value: p });
    }
    Ok(p.clamp(0.0, 1.0))
}

/// How settings are combined into the transfer function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Plain sum over elements, one per setting (the default).
    #[default]
    Uniform,
    /// Weighted by planned trials, normalized so equal trials reduce to the
    /// plain sum.
    ByTrials,
}

/// Transfer function `G`, its spectrum and the retained whitened subspace.
#[derive(Debug, Clone)]
pub struct TransferFunction {
    g: CMatrix,
    spectrum: HermitianEigensystem,
    basis_map: CMatrix,
    kept_count: usize,
    rel_threshold: f64,
}

impl TransferFunction {
    pub fn g(&self) -> &CMatrix {
        &self.g
    }

    pub fn spectrum(&self) -> &HermitianEigensystem {
        &self.spectrum
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectrum.eigenvalues
    }

    /// Columns `v_i / sqrt(lambda_i)` of the kept eigenpairs; `B^dag G B = I`.
    pub fn basis_map(&self) -> &CMatrix {
        &self.basis_map
    }

    pub fn kept_count(&self) -> usize {
        self.kept_count
    }

    pub fn rel_threshold(&self) -> f64 {
        self.rel_threshold
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// Ratio of each eigenvalue to the largest.
    pub fn eigenvalue_ratios(&self) -> Vec<f64> {
        let max = self.spectrum.eigenvalues[0];
        self.spectrum.eigenvalues.iter().map(|l| l / max).collect()
    }
}

pub fn build_transfer_function(
    settings: &[Setting],
    policy: &DimensionPolicy,
    rel_threshold: f64,
) -> Result<TransferFunction> {
    build_transfer_function_weighted(settings, policy, rel_threshold, Weighting::Uniform)
}

pub fn build_transfer_function_weighted(
    settings: &[Setting],
    policy: &DimensionPolicy,
    rel_threshold: f64,
    weighting: Weighting,
) -> Result<TransferFunction> {
    if settings.is_empty() {
        return Err(Error::EmptyPlan);
    }
    let elements = build_elements(settings, policy)?;
    transfer_function_for_elements(&elements, rel_threshold, weighting)
}

/// Transfer function from already-built elements (plan order fixed).
pub fn transfer_function_for_elements(
    elements: &[PovmElement],
    rel_threshold: f64,
    weighting: Weighting,
) -> Result<TransferFunction> {
    if elements.is_empty() {
        return Err(Error::EmptyPlan);
    }
    let dim = elements[0].dim();
    let weights: Vec<f64> = match weighting {
        Weighting::Uniform => vec![1.0; elements.len()],
        Weighting::ByTrials => {
            let total: f64 = elements.iter().map(|e| e.setting.trials as f64).sum();
            if total <= 0.0 {
                return Err(Error::InvalidSetting {
                    reason: "trial-weighted transfer function needs positive total trials".into(),
                });
            }
            let scale = elements.len() as f64 / total;
            elements
                .iter()
                .map(|e| e.setting.trials as f64 * scale)
                .collect()
        }
    };
    let mut g = CMatrix::zeros(dim, dim);
    for (element, w) in elements.iter().zip(&weights) {
        if element.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: element.dim(),
            });
        }
        g += element.matrix() * Complex64::new(*w, 0.0);
    }
    let g = hermitize(&g);
    let spectrum = hermitian_eig(&g)?;
    let (basis_map, kept_count) = inv_sqrt_projected(&g, rel_threshold)?;
    Ok(TransferFunction {
        g,
        spectrum,
        basis_map,
        kept_count,
        rel_threshold,
    })
}

/// Verify `tf.g` matches the plain sum of `elements` to 1e-12 relative.
pub(crate) fn check_consistent(tf: &TransferFunction, elements: &[PovmElement]) -> Result<()> {
    if elements.is_empty() {
        return Err(Error::EmptyPlan);
    }
    let dim = tf.dim();
    let mut sum = CMatrix::zeros(dim, dim);
    for e in elements {
        if e.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: e.dim(),
            });
        }
        sum += e.matrix();
    }
    let defect = frobenius_norm(&(&sum - tf.g()));
    if defect > 1e-12 * frobenius_norm(tf.g()).max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidConfig {
            reason: "transfer function was not built from these elements".into(),
        });
    }
    Ok(())
}
