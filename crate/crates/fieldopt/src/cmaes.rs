//! Covariance matrix adaptation evolution strategy with weighted
//! recombination, cumulative step-size control, and a mixed rank-1 /
//! rank-mu covariance update.
//!
//! The strategy operates in coordinates normalized to `[0, 1]` per
//! dimension, so the initial step size is an exact fraction of every bound
//! range; samples are denormalized for evaluation.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::trace::{Evaluator, RunResult};

/// Out-of-bounds samples are redrawn this many times before clamping.
const RESAMPLE_ATTEMPTS: usize = 10;

/// Eigenvalues of the covariance are floored at this fraction of its trace.
const EIGEN_FLOOR_FRACTION: f64 = 1e-14;

/// Strategy parameters. [`CmaesConfig::for_dimension`] fills in the
/// standard dimension-dependent values:
/// `lambda = 4 + floor(3 ln n)`, `mu = floor(lambda / 2)`,
/// `c_c = 4 / (n + 4)`, `c_sigma = (mu_eff + 2) / (n + mu_eff + 3)`,
/// `d_sigma = 1 + 2 max(0, sqrt((mu_eff - 1) / (n + 1)) - 1) + c_sigma`,
/// `mu_cov = mu_eff`, and the mixed rank-1 / rank-mu learning rate
/// `c_cov = (1/mu_cov) * 2/(n + sqrt 2)^2
///          + (1 - 1/mu_cov) * min(1, (2 mu_eff - 1)/((n + 2)^2 + mu_eff))`,
/// with log-rank recombination weights.
#[derive(Debug, Clone)]
pub struct CmaesConfig {
    pub lambda: usize,
    pub mu: usize,
    pub c_c: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub mu_cov: f64,
    pub c_cov: f64,
    pub mu_eff: f64,
    /// Normalized recombination weights (sum 1, length `mu`).
    pub weights: Vec<f64>,
    /// Initial step size as a fraction of each coordinate range.
    pub initial_sigma: f64,
    pub seed: u64,
}

impl CmaesConfig {
    pub fn for_dimension(n: usize, seed: u64) -> Self {
        let nf = n as f64;
        let lambda = 4 + (3.0 * nf.ln()).floor() as usize;
        let mu = lambda / 2;
        let mut weights: Vec<f64> = (1..=mu)
            .map(|i| ((mu as f64) + 0.5).ln() - (i as f64).ln())
            .collect();
        let sum: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= sum;
        }
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let c_c = 4.0 / (nf + 4.0);
        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 3.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let mu_cov = mu_eff;
        let c_cov = (1.0 / mu_cov) * 2.0 / ((nf + std::f64::consts::SQRT_2).powi(2))
            + (1.0 - 1.0 / mu_cov)
                * (1.0f64).min((2.0 * mu_eff - 1.0) / ((nf + 2.0).powi(2) + mu_eff));
        Self {
            lambda,
            mu,
            c_c,
            c_sigma,
            d_sigma,
            mu_cov,
            c_cov,
            mu_eff,
            weights,
            initial_sigma: 0.3,
            seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda < 2 {
            return Err(Error::ConfigInconsistent("lambda must be >= 2".into()));
        }
        if self.mu < 1 || self.mu > self.lambda {
            return Err(Error::ConfigInconsistent(
                "mu must satisfy 1 <= mu <= lambda".into(),
            ));
        }
        if self.weights.len() != self.mu {
            return Err(Error::ConfigInconsistent(
                "weights length must equal mu".into(),
            ));
        }
        for &rate in &[self.c_c, self.c_sigma, self.c_cov] {
            if !(rate > 0.0 && rate <= 1.0) {
                return Err(Error::ConfigInconsistent(format!(
                    "rate {rate} outside (0, 1]"
                )));
            }
        }
        if self.d_sigma < 1.0 {
            return Err(Error::ConfigInconsistent("d_sigma must be >= 1".into()));
        }
        if !(self.initial_sigma > 0.0) {
            return Err(Error::ConfigInconsistent(
                "initial_sigma must be positive".into(),
            ));
        }
        let wsum: f64 = self.weights.iter().sum();
        if (wsum - 1.0).abs() > 1e-9 {
            return Err(Error::ConfigInconsistent("weights must sum to 1".into()));
        }
        let derived = 1.0 / self.weights.iter().map(|w| w * w).sum::<f64>();
        if (derived - self.mu_eff).abs() > 1e-9 * self.mu_eff.max(1.0) {
            return Err(Error::ConfigInconsistent(format!(
                "mu_eff = {} conflicts with weights (derived {derived})",
                self.mu_eff
            )));
        }
        Ok(())
    }
}

struct EigenBasis {
    vectors: DMatrix<f64>,
    /// Square roots of the (floored) eigenvalues.
    scales: DVector<f64>,
}

/// Floors eigenvalues at [`EIGEN_FLOOR_FRACTION`] of the trace and returns
/// the repaired covariance with its eigenbasis.
fn decompose_and_repair(cov: &DMatrix<f64>) -> (DMatrix<f64>, EigenBasis) {
    let n = cov.nrows();
    let sym = (cov + cov.transpose()) * 0.5;
    let eig = sym.clone().symmetric_eigen();
    let trace: f64 = sym.diagonal().iter().sum::<f64>().max(f64::MIN_POSITIVE);
    let floor = EIGEN_FLOOR_FRACTION * trace;
    let mut values = eig.eigenvalues.clone();
    for v in values.iter_mut() {
        if *v < floor {
            *v = floor;
        }
    }
    let repaired = &eig.eigenvectors * DMatrix::from_diagonal(&values) * eig.eigenvectors.transpose();
    let scales = DVector::from_iterator(n, values.iter().map(|v| v.sqrt()));
    (
        repaired,
        EigenBasis {
            vectors: eig.eigenvectors,
            scales,
        },
    )
}

/// Runs CMA-ES from `start` (used as the initial distribution mean).
///
/// Out-of-bounds samples are redrawn up to ten times and then clamped.
/// Ranking, recombination, and all updates reduce in a fixed order, so a
/// fixed seed reproduces the trace bit for bit.
pub fn run_cmaes(problem: &Problem, config: &CmaesConfig, start: &[f64]) -> Result<RunResult> {
    config.validate()?;
    if problem.budget() == 0 {
        return Err(Error::Config("budget must be >= 1".into()));
    }
    if start.len() != problem.dimension() {
        return Err(Error::DimensionMismatch {
            expected: problem.dimension(),
            got: start.len(),
        });
    }
    let n = problem.dimension();
    let nf = n as f64;
    let bounds = problem.bounds();
    let lower = bounds.lower().to_vec();
    let ranges: Vec<f64> = (0..n).map(|i| bounds.range(i)).collect();
    let denorm = |y: &DVector<f64>| -> Vec<f64> {
        (0..n).map(|i| lower[i] + y[i] * ranges[i]).collect()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut ev = Evaluator::new(problem);

    let clamped_start = problem.clamp(start);
    let mut mean = DVector::from_iterator(
        n,
        (0..n).map(|i| (clamped_start[i] - lower[i]) / ranges[i]),
    );
    let mut sigma = config.initial_sigma;
    let mut cov = DMatrix::<f64>::identity(n, n);
    let (repaired, mut basis) = decompose_and_repair(&cov);
    cov = repaired;
    let mut p_sigma = DVector::<f64>::zeros(n);
    let mut p_c = DVector::<f64>::zeros(n);
    let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

    let mut generation = 0usize;
    'outer: loop {
        // Sample lambda candidates in the normalized space.
        let mut samples: Vec<DVector<f64>> = Vec::with_capacity(config.lambda);
        for _ in 0..config.lambda {
            let mut kept: Option<DVector<f64>> = None;
            let mut last = DVector::<f64>::zeros(n);
            for _ in 0..=RESAMPLE_ATTEMPTS {
                let z = DVector::from_iterator(
                    n,
                    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)),
                );
                let step = &basis.vectors * z.component_mul(&basis.scales);
                let y = &mean + step * sigma;
                if y.iter().all(|v| (0.0..=1.0).contains(v)) {
                    kept = Some(y);
                    break;
                }
                last = y;
            }
            samples.push(kept.unwrap_or_else(|| last.map(|v| v.clamp(0.0, 1.0))));
        }

        // Evaluate in sample order.
        let mut values = Vec::with_capacity(config.lambda);
        for y in &samples {
            match ev.evaluate(&denorm(y)) {
                Ok(f) => values.push(f),
                Err(Error::BudgetExhausted) => break 'outer,
                Err(e) => return Err(e),
            }
        }

        // Rank and recombine.
        let mut order: Vec<usize> = (0..config.lambda).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let mut new_mean = DVector::<f64>::zeros(n);
        for (w, &idx) in config.weights.iter().zip(&order) {
            new_mean += &samples[idx] * *w;
        }

        let y_w = (&new_mean - &mean) / sigma;

        // Step-size path uses C^(-1/2) y_w.
        let whitened = &basis.vectors
            * DVector::from_iterator(n, (0..n).map(|i| {
                let col = basis.vectors.column(i);
                col.dot(&y_w) / basis.scales[i]
            }));
        p_sigma = &p_sigma * (1.0 - config.c_sigma)
            + whitened * (config.c_sigma * (2.0 - config.c_sigma) * config.mu_eff).sqrt();
        let ps_norm = p_sigma.norm();
        sigma *= ((config.c_sigma / config.d_sigma) * (ps_norm / chi_n - 1.0)).exp();
        sigma = sigma.clamp(1e-16, 1e4);

        let denom = (1.0 - (1.0 - config.c_sigma).powi(2 * (generation as i32 + 1))).sqrt();
        let h_sigma = ps_norm / denom < (1.4 + 2.0 / (nf + 1.0)) * chi_n;

        let h = if h_sigma { 1.0 } else { 0.0 };
        p_c = &p_c * (1.0 - config.c_c)
            + &y_w * (h * (config.c_c * (2.0 - config.c_c) * config.mu_eff).sqrt());

        // Covariance: rank-1 plus rank-mu, with the stall correction when
        // the step-size path is long.
        let delta = (1.0 - h) * config.c_c * (2.0 - config.c_c);
        let rank1 = &p_c * p_c.transpose() + &cov * delta;
        let mut rank_mu = DMatrix::<f64>::zeros(n, n);
        for (w, &idx) in config.weights.iter().zip(&order) {
            let y_i = (&samples[idx] - &mean) / sigma;
            rank_mu += &y_i * y_i.transpose() * *w;
        }
        cov = &cov * (1.0 - config.c_cov)
            + rank1 * (config.c_cov / config.mu_cov)
            + rank_mu * (config.c_cov * (1.0 - 1.0 / config.mu_cov));

        let (repaired, new_basis) = decompose_and_repair(&cov);
        cov = repaired;
        basis = new_basis;
        mean = new_mean;
        generation += 1;
    }
    Ok(ev.into_result(Some(config.seed)))
}
