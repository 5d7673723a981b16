//! Pointwise Wigner-function reconstruction from efficiency-scanned no-count
//! data, the exact Wigner oracle, and the parity-kernel back-transform that
//! exposes unphysical (negative-diagonal) results.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{displacement_operator, DensityMatrix, DimensionPolicy};

pub const TWO_OVER_PI: f64 = std::f64::consts::FRAC_2_PI;

/// No-count frequency observed at one detector efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencySample {
    pub nu: f64,
    /// `N_nu / trials_nu`.
    pub frequency: f64,
}

/// Pointwise reconstruction output: displaced number distribution estimate
/// `R_n` and the Wigner value `w = (2/pi) sum (-1)^n R_n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WignerPoint {
    #[serde(with = "gamma_parts")]
    pub gamma: Complex64,
    pub r_values: Vec<f64>,
    pub w: f64,
}

mod gamma_parts {
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

impl WignerPoint {
    /// Unmodeled tail mass `1 - sum R_n`; small negative values indicate the
    /// fit inflated the modeled components to absorb tail contributions.
    pub fn deficit(&self) -> f64 {
        1.0 - self.r_values.iter().sum::<f64>()
    }
}

/// Solve the positive linear model `p_nu = sum_n (1-nu)^n R_n` for `R_n >= 0`
/// by the multiplicative EM update, starting from the uniform initialization
/// `R_n = 1/(2 n_tr)`, and assemble the Wigner value at `gamma`.
pub fn reconstruct_point(
    gamma: Complex64,
    samples: &[EfficiencySample],
    n_tr: usize,
    iterations: usize,
) -> Result<WignerPoint> {
    if n_tr == 0 || iterations == 0 {
        return Err(Error::InvalidConfig {
            reason: "n_tr and iterations must be at least 1".into(),
        });
    }
    let mut distinct: Vec<f64> = samples.iter().map(|s| s.nu).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::TooFewEfficiencies {
            count: distinct.len(),
        });
    }
    for s in samples {
        if !(s.nu > 0.0 && s.nu <= 1.0) {
            return Err(Error::InvalidSetting {
                reason: format!("efficiency {} outside (0, 1]", s.nu),
            });
        }
        if !(s.frequency >= 0.0 && s.frequency <= 1.0 + 1e-9) {
            return Err(Error::InvalidCounts {
                reason: format!("frequency {} outside [0, 1]", s.frequency),
            });
        }
    }
    if samples.iter().all(|s| s.frequency == 0.0) {
        return Err(Error::AllZeroData);
    }

    let v = samples.len();
    // c[nu][n] = (1 - nu)^n.
    let mut coeff = vec![0.0f64; v * n_tr];
    let mut col_sum = vec![0.0f64; n_tr];
    for (i, s) in samples.iter().enumerate() {
        let q = 1.0 - s.nu;
        let mut c = 1.0f64;
        for n in 0..n_tr {
            if n > 0 {
                c *= q;
            }
            coeff[i * n_tr + n] = c;
            col_sum[n] += c;
        }
    }

    let mut r = vec![1.0 / (2.0 * n_tr as f64); n_tr];
    let mut model = vec![0.0f64; v];
    let mut boost = vec![0.0f64; n_tr];
    for _ in 0..iterations {
        for (i, m) in model.iter_mut().enumerate() {
            let row = &coeff[i * n_tr..(i + 1) * n_tr];
            *m = row.iter().zip(&r).map(|(c, rn)| c * rn).sum();
        }
        boost.iter_mut().for_each(|b| *b = 0.0);
        for (i, s) in samples.iter().enumerate() {
            if s.frequency == 0.0 {
                continue;
            }
            let ratio = s.frequency / model[i];
            let row = &coeff[i * n_tr..(i + 1) * n_tr];
            for n in 0..n_tr {
                boost[n] += row[n] * ratio;
            }
        }
        for n in 0..n_tr {
            r[n] *= boost[n] / col_sum[n];
        }
    }

    let w = wigner_from_r(&r);
    Ok(WignerPoint {
        gamma,
        r_values: r,
        w,
    })
}

fn wigner_from_r(r: &[f64]) -> f64 {
    let mut acc = 0.0;
    let mut sign = 1.0;
    for rn in r {
        acc += sign * rn;
        sign = -sign;
    }
    TWO_OVER_PI * acc
}

/// Diagonal of the displaced state, `d_n = <n| D(gamma)^dag rho D(gamma) |n>`
/// for `n` up to the working dimension.
pub fn displaced_number_distribution(
    rho: &DensityMatrix,
    gamma: Complex64,
    policy: &DimensionPolicy,
) -> Result<Vec<f64>> {
    if rho.dim() > policy.n_work() {
        return Err(Error::DimensionPolicy {
            reason: format!(
                "state dimension {} exceeds working dimension {}",
                rho.dim(),
                policy.n_work()
            ),
        });
    }
    let d = displacement_operator(gamma, policy)?;
    let n_work = policy.n_work();
    let dim = rho.dim();
    let r = rho.matrix();
    let mut out = vec![0.0f64; n_work];
    // d_n = sum_{m,m'} conj(D[m,n]) rho[m,m'] D[m',n], rho supported on dim.
    for (n, slot) in out.iter_mut().enumerate() {
        let mut acc = Complex64::default();
        for m in 0..dim {
            let mut inner = Complex64::default();
            for mp in 0..dim {
                inner += r[(m, mp)] * d[(mp, n)];
            }
            acc += d[(m, n)].conj() * inner;
        }
        *slot = acc.re;
    }
    Ok(out)
}

/// Exact Wigner value `(2/pi) sum_n (-1)^n d_n` with the parity sum taken
/// over the full working dimension.
pub fn wigner_true(rho: &DensityMatrix, gamma: Complex64, policy: &DimensionPolicy) -> Result<f64> {
    let d = displaced_number_distribution(rho, gamma, policy)?;
    Ok(wigner_from_r(&d))
}

/// Rectangular phase-space grid; points are cell midpoints so sums against
/// the cell area implement the midpoint quadrature rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub re_count: usize,
    pub im_count: usize,
}

impl Default for GridSpec {
    /// 50 x 50 grid over [-0.7, 2.1]^2, the layout of the coherent-state
    /// scan experiment.
    fn default() -> Self {
        Self {
            re_min: -0.7,
            re_max: 2.1,
            im_min: -0.7,
            im_max: 2.1,
            re_count: 50,
            im_count: 50,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.re_count >= 1
            && self.im_count >= 1
            && self.re_max > self.re_min
            && self.im_max > self.im_min
            && [self.re_min, self.re_max, self.im_min, self.im_max]
                .iter()
                .all(|x| x.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig {
                reason: "grid ranges must be finite and increasing with counts >= 1".into(),
            })
        }
    }

    pub fn len(&self) -> usize {
        self.re_count * self.im_count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        let hr = (self.re_max - self.re_min) / self.re_count as f64;
        let hi = (self.im_max - self.im_min) / self.im_count as f64;
        hr * hi
    }

    /// Cell midpoints, imaginary part slowest (row index `iy * re_count + ix`).
    pub fn points(&self) -> Vec<Complex64> {
        let hr = (self.re_max - self.re_min) / self.re_count as f64;
        let hi = (self.im_max - self.im_min) / self.im_count as f64;
        let mut pts = Vec::with_capacity(self.len());
        for iy in 0..self.im_count {
            let im = self.im_min + (iy as f64 + 0.5) * hi;
            for ix in 0..self.re_count {
                let re = self.re_min + (ix as f64 + 0.5) * hr;
                pts.push(Complex64::new(re, im));
            }
        }
        pts
    }

    pub fn max_abs_gamma(&self) -> f64 {
        self.points()
            .iter()
            .map(|g| g.norm())
            .fold(0.0f64, f64::max)
    }
}

/// Invert Wigner data back to density-matrix diagonals through the
/// parity-kernel quadrature `rho = int d^2 gamma W(gamma) 2 D PI D^dag`.
///
/// Diagonals are returned unclamped; negative entries are the signal this
/// baseline is meant to expose. Fails if the back-transformed trace deviates
/// from 1 by more than 0.05, which indicates inadequate grid coverage.
pub fn back_transform_diagonals(
    points: &[WignerPoint],
    grid: &GridSpec,
    policy: &DimensionPolicy,
) -> Result<Vec<f64>> {
    grid.validate()?;
    if points.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: points.len(),
        });
    }
    let n_tr = policy.n_tr();
    let area = grid.cell_area();
    let contributions: Vec<Vec<f64>> = points
        .par_iter()
        .map(|pt| -> Result<Vec<f64>> {
            let kernel = parity_kernel_diagonal(pt.gamma, policy)?;
            Ok(kernel
                .iter()
                .map(|k| 2.0 * area * pt.w * k)
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut diag = vec![0.0f64; n_tr];
    for c in &contributions {
        for (d, x) in diag.iter_mut().zip(c) {
            *d += x;
        }
    }
    let trace: f64 = diag.iter().sum();
    if (trace - 1.0).abs() > 0.05 {
        return Err(Error::GridTooCoarse { trace });
    }
    Ok(diag)
}

/// `K_m(gamma) = <m| D(gamma) (-1)^n D(gamma)^dag |m>` for `m < n_tr`.
fn parity_kernel_diagonal(gamma: Complex64, policy: &DimensionPolicy) -> Result<Vec<f64>> {
    let d = displacement_operator(gamma, policy)?;
    let n_tr = policy.n_tr();
    let n_work = policy.n_work();
    let mut out = vec![0.0f64; n_tr];
    for (m, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        let mut sign = 1.0;
        for n in 0..n_work {
            acc += sign * d[(m, n)].norm_sqr();
            sign = -sign;
        }
        *slot = acc;
    }
    Ok(out)
}

/// How the per-point measurement budget is spread over the efficiency scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialBudget {
    /// Total per grid point, split equally over the efficiencies (remainder
    /// goes to the first few).
    PerPoint(u64),
    /// Repetitions per (point, efficiency) pair.
    PerEfficiency(u64),
}

impl TrialBudget {
    fn per_efficiency(&self, n_eff: usize) -> Vec<u64> {
        match *self {
            TrialBudget::PerPoint(total) => {
                let base = total / n_eff as u64;
                let rem = (total % n_eff as u64) as usize;
                (0..n_eff)
                    .map(|i| base + u64::from(i < rem))
                    .collect()
            }
            TrialBudget::PerEfficiency(per) => vec![per; n_eff],
        }
    }
}

/// Configuration of a full grid scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WignerScanConfig {
    pub grid: GridSpec,
    pub efficiencies: Vec<f64>,
    pub budget: TrialBudget,
    pub iterations: usize,
    pub n_tr: usize,
    pub seed: u64,
    /// Use exact probabilities instead of sampled frequencies.
    pub noiseless: bool,
}

impl WignerScanConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.efficiencies.len() < 2 {
            return Err(Error::TooFewEfficiencies {
                count: self.efficiencies.len(),
            });
        }
        if self.n_tr == 0 || self.iterations == 0 {
            return Err(Error::InvalidConfig {
                reason: "n_tr and iterations must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// Standard scan: 30 efficiencies in [0.1, 0.9], 10^4 measurements per
    /// point, 10^3 EM iterations, n_tr = 12, over the default grid.
    pub fn standard(seed: u64) -> Self {
        let efficiencies = (0..30)
            .map(|i| 0.1 + 0.8 * i as f64 / 29.0)
            .collect();
        Self {
            grid: GridSpec::default(),
            efficiencies,
            budget: TrialBudget::PerPoint(10_000),
            iterations: 1_000,
            n_tr: 12,
            seed,
            noiseless: false,
        }
    }
}

/// One scanned grid point: the reconstruction and the exact Wigner value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WignerScanRow {
    pub point: WignerPoint,
    pub w_true: f64,
}

/// Scan the grid: per point, simulate the efficiency scan against the true
/// state (stream-split per point and efficiency), run the pointwise EM, and
/// evaluate the exact Wigner value. Points are processed in parallel with
/// output ordering fixed by the grid index.
pub fn scan_grid(rho_true: &DensityMatrix, cfg: &WignerScanConfig) -> Result<Vec<WignerScanRow>> {
    cfg.validate()?;
    let points = cfg.grid.points();
    let policy = DimensionPolicy::padded(cfg.n_tr.max(rho_true.dim()), cfg.grid.max_abs_gamma())?;
    let trials = cfg.budget.per_efficiency(cfg.efficiencies.len());
    let n_eff = cfg.efficiencies.len() as u64;

    points
        .par_iter()
        .enumerate()
        .map(|(idx, &gamma)| -> Result<WignerScanRow> {
            let dist = displaced_number_distribution(rho_true, gamma, &policy)?;
            let w_true = wigner_from_r(&dist);
            let samples: Vec<EfficiencySample> = cfg
                .efficiencies
                .iter()
                .enumerate()
                .map(|(e, &nu)| -> Result<EfficiencySample> {
                    let q = 1.0 - nu;
                    let mut c = 1.0f64;
                    let mut p = 0.0f64;
                    for (n, dn) in dist.iter().enumerate() {
                        if n > 0 {
                            c *= q;
                        }
                        p += c * dn;
                    }
                    let p = p.clamp(0.0, 1.0);
                    let frequency = if cfg.noiseless {
                        p
                    } else {
                        let n = trials[e];
                        if n == 0 {
                            return Err(Error::InvalidConfig {
                                reason: "trial budget leaves an efficiency with zero trials"
                                    .into(),
                            });
                        }
                        let stream = idx as u64 * n_eff + e as u64;
                        let drawn = if p == 0.0 {
                            0
                        } else if p == 1.0 {
                            n
                        } else {
                            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                            rng.set_stream(stream);
                            Binomial::new(n, p)
                                .map_err(|e| Error::InvalidConfig {
                                    reason: format!("binomial sampling: {e}"),
                                })?
                                .sample(&mut rng)
                        };
                        drawn as f64 / n as f64
                    };
                    Ok(EfficiencySample { nu, frequency })
                })
                .collect::<Result<_>>()?;
            let point = reconstruct_point(gamma, &samples, cfg.n_tr, cfg.iterations)?;
            Ok(WignerScanRow { point, w_true })
        })
        .collect()
}

/// CSV for a scan: `gamma_re,gamma_im,w_reconstructed,w_true,deficit`.
pub fn scan_to_csv(rows: &[WignerScanRow]) -> String {
    let mut out = String::from("gamma_re,gamma_im,w_reconstructed,w_true,deficit\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.point.gamma.re,
            row.point.gamma.im,
            row.point.w,
            row.w_true,
            row.point.deficit()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    // (-1)^m e^{-2|g|^2} L_m(4|g|^2): independent closed form for the
    // displaced-parity diagonal.
    fn wigner_parity_kernel_reference(m: usize, gamma: Complex64) -> f64 {
        let x = 4.0 * gamma.norm_sqr();
        let mut prev = 1.0f64;
        let mut cur = 1.0 - x;
        if m == 0 {
            return (-x / 2.0).exp();
        }
        for k in 1..m {
            let next = ((2.0 * k as f64 + 1.0 - x) * cur - k as f64 * prev) / (k as f64 + 1.0);
            prev = cur;
            cur = next;
        }
        let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * (-x / 2.0).exp() * cur
    }

    fn efficiencies(n: usize) -> Vec<f64> {
        (0..n).map(|i| 0.1 + 0.8 * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn vacuum_data_recovers_two_over_pi() {
        let samples: Vec<EfficiencySample> = efficiencies(30)
            .into_iter()
            .map(|nu| EfficiencySample { nu, frequency: 1.0 })
            .collect();
        let pt = reconstruct_point(Complex64::default(), &samples, 12, 20_000).unwrap();
        assert_abs_diff_eq!(pt.w, TWO_OVER_PI, epsilon = 1e-3);
        assert!(pt.r_values.iter().all(|&r| r >= 0.0));
    }

    #[test]
    fn single_photon_data_recovers_negative_extremum() {
        let samples: Vec<EfficiencySample> = efficiencies(30)
            .into_iter()
            .map(|nu| EfficiencySample {
                nu,
                frequency: 1.0 - nu,
            })
            .collect();
        let pt = reconstruct_point(Complex64::default(), &samples, 12, 400_000).unwrap();
        assert_abs_diff_eq!(pt.w, -TWO_OVER_PI, epsilon = 1e-3);
    }

    #[test]
    fn too_few_efficiencies_rejected() {
        let samples = vec![EfficiencySample { nu: 0.5, frequency: 0.8 }];
        assert!(matches!(
            reconstruct_point(Complex64::default(), &samples, 4, 10),
            Err(Error::TooFewEfficiencies { .. })
        ));
    }

    #[test]
    fn all_zero_data_rejected() {
        let samples: Vec<EfficiencySample> = efficiencies(5)
            .into_iter()
            .map(|nu| EfficiencySample { nu, frequency: 0.0 })
            .collect();
        assert!(matches!(
            reconstruct_point(Complex64::default(), &samples, 4, 10),
            Err(Error::AllZeroData)
        ));
    }

    #[test]
    fn wigner_true_vacuum_at_origin() {
        let rho = DensityMatrix::fock(0, 4).unwrap();
        let policy = DimensionPolicy::padded(4, 0.0).unwrap();
        let w = wigner_true(&rho, Complex64::default(), &policy).unwrap();
        assert_abs_diff_eq!(w, TWO_OVER_PI, epsilon = 1e-12);
    }

    #[test]
    fn wigner_true_even_superposition_at_origin() {
        let rho = DensityMatrix::superposition(
            &[
                (0, Complex64::new(1.0, 0.0)),
                (2, Complex64::from_polar(1.0, 0.5)),
            ],
            5,
        )
        .unwrap();
        let policy = DimensionPolicy::padded(5, 0.0).unwrap();
        let w = wigner_true(&rho, Complex64::default(), &policy).unwrap();
        assert_abs_diff_eq!(w, TWO_OVER_PI, epsilon = 1e-12);
    }

    #[test]
    fn wigner_true_matches_coherent_closed_form() {
        let alpha = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        let rho = DensityMatrix::coherent(alpha, 25).unwrap();
        for gamma in [
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.5),
            Complex64::new(-0.5, 1.2),
        ] {
            let policy = DimensionPolicy::padded(25, gamma.norm()).unwrap();
            let w = wigner_true(&rho, gamma, &policy).unwrap();
            let exact = TWO_OVER_PI * (-2.0 * (gamma - alpha).norm_sqr()).exp();
            assert_abs_diff_eq!(w, exact, epsilon = 1e-9);
        }
    }

    #[test]
    fn wigner_true_stable_under_extra_padding() {
        let rho = DensityMatrix::superposition(
            &[
                (0, Complex64::new(0.5, 0.1)),
                (1, Complex64::new(-0.3, 0.4)),
                (3, Complex64::new(0.2, 0.6)),
            ],
            6,
        )
        .unwrap();
        let gamma = Complex64::new(0.9, -1.1);
        let a = DimensionPolicy::padded(6, gamma.norm()).unwrap();
        let b = DimensionPolicy::new(6, a.n_work() + 40).unwrap();
        let wa = wigner_true(&rho, gamma, &a).unwrap();
        let wb = wigner_true(&rho, gamma, &b).unwrap();
        assert_abs_diff_eq!(wa, wb, epsilon = 1e-8);
    }

    #[test]
    fn parity_kernel_matches_laguerre_reference() {
        let policy = DimensionPolicy::padded(6, 2.0).unwrap();
        for gamma in [Complex64::new(0.3, -0.4), Complex64::new(1.5, 0.9)] {
            let kernel = parity_kernel_diagonal(gamma, &policy).unwrap();
            for (m, k) in kernel.iter().enumerate() {
                let reference = wigner_parity_kernel_reference(m, gamma);
                assert_abs_diff_eq!(*k, reference, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn grid_points_are_cell_midpoints_in_fixed_order() {
        let grid = GridSpec {
            re_min: 0.0,
            re_max: 1.0,
            im_min: 0.0,
            im_max: 2.0,
            re_count: 2,
            im_count: 2,
        };
        let pts = grid.points();
        assert_eq!(
            pts,
            vec![
                Complex64::new(0.25, 0.5),
                Complex64::new(0.75, 0.5),
                Complex64::new(0.25, 1.5),
                Complex64::new(0.75, 1.5),
            ]
        );
        assert_abs_diff_eq!(grid.cell_area(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn back_transform_recovers_vacuum_diagonals() {
        let grid = GridSpec {
            re_min: -3.0,
            re_max: 3.0,
            im_min: -3.0,
            im_max: 3.0,
            re_count: 60,
            im_count: 60,
        };
        let policy = DimensionPolicy::padded(8, grid.max_abs_gamma()).unwrap();
        let points: Vec<WignerPoint> = grid
            .points()
            .into_iter()
            .map(|gamma| {
                let w = TWO_OVER_PI * (-2.0 * gamma.norm_sqr()).exp();
                WignerPoint {
                    gamma,
                    r_values: vec![],
                    w,
                }
            })
            .collect();
        let diag = back_transform_diagonals(&points, &grid, &policy).unwrap();
        assert!((diag[0] - 1.0).abs() <= 1e-2, "diag0 {}", diag[0]);
        for d in &diag[1..] {
            assert!(d.abs() <= 1e-2);
        }
    }

    #[test]
    fn back_transform_flags_coarse_grid() {
        let grid = GridSpec {
            re_min: -0.5,
            re_max: 0.5,
            im_min: -0.5,
            im_max: 0.5,
            re_count: 8,
            im_count: 8,
        };
        let policy = DimensionPolicy::padded(6, grid.max_abs_gamma()).unwrap();
        let points: Vec<WignerPoint> = grid
            .points()
            .into_iter()
            .map(|gamma| WignerPoint {
                gamma,
                r_values: vec![],
                w: TWO_OVER_PI * (-2.0 * gamma.norm_sqr()).exp(),
            })
            .collect();
        assert!(matches!(
            back_transform_diagonals(&points, &grid, &policy),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn scan_is_deterministic_for_fixed_seed() {
        let rho = DensityMatrix::coherent(Complex64::new(0.4, 0.4), 8).unwrap();
        let cfg = WignerScanConfig {
            grid: GridSpec {
                re_min: -0.2,
                re_max: 1.0,
                im_min: -0.2,
                im_max: 1.0,
                re_count: 3,
                im_count: 3,
            },
            efficiencies: efficiencies(10),
            budget: TrialBudget::PerPoint(900),
            iterations: 200,
            n_tr: 8,
            seed: 11,
            noiseless: false,
        };
        let a = scan_grid(&rho, &cfg).unwrap();
        let b = scan_grid(&rho, &cfg).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.point.w, y.point.w);
            assert_eq!(x.point.r_values, y.point.r_values);
        }
    }

    #[test]
    fn per_point_budget_splits_evenly_with_remainder() {
        let split = TrialBudget::PerPoint(10).per_efficiency(3);
        assert_eq!(split, vec![4, 3, 3]);
        let per = TrialBudget::PerEfficiency(7).per_efficiency(3);
        assert_eq!(per, vec![7, 7, 7]);
    }
}
