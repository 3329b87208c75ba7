//! The Bayesian core: binomial likelihood, Beta prior, conjugate and
//! grid-based posterior updating, sequential chaining, and decision rules.
//!
//! Recognition evidence arrives as batches of Bernoulli trials (k
//! successes in n attempts). With a Beta(a, b) prior on the success
//! probability the posterior is Beta(a + k, b + n - k), and chaining
//! batches by feeding each posterior back in as the next prior realises
//! prior mutation: the belief about the object sharpens as evidence
//! accumulates. A run is accepted when at least 80% of its frames confirm
//! the hypothesis.

mod grid;
mod special;

pub use grid::{fuse_on_grid, FusionOperator, FusionPrior, GridDensity, MIN_FUSION_GRID};
pub use special::{beta_quantile, ln_beta, ln_choose, ln_gamma, regularized_incomplete_beta};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fraction of confirming frames needed to accept a run.
pub const ACCEPT_FRACTION: f64 = 0.8;

/// Probability tolerance used when locating credible interval endpoints.
pub const CI_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("Beta parameters must be positive and finite, got ({alpha}, {beta})")]
    InvalidBetaParams { alpha: f64, beta: f64 },
    #[error("observation needs k <= n, got n={n}, k={k}")]
    InvalidObservation { n: u64, k: u64 },
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("Beta({alpha}, {beta}) density is infinite at q = {q}")]
    EndpointSingularity { alpha: f64, beta: f64, q: f64 },
    #[error("grid of {0} points is too small")]
    GridTooSmall(usize),
    #[error("grid has {got} points, expected {expected}")]
    GridMismatch { expected: usize, got: usize },
    #[error("density values must be finite and non-negative")]
    InvalidDensity,
    #[error("fused density has no mass to normalize")]
    DegenerateFusion,
    #[error("sequential run needs at least one batch")]
    NoBatches,
    #[error("invalid threshold {0}: must be in [0, 1]")]
    InvalidThreshold(f64),
    #[error("invalid convergence tolerance {0}: must be positive")]
    InvalidConvergenceTolerance(f64),
}

/// A success probability in [0, 1] — the quantity the inference is about.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessProbability(f64);

impl SuccessProbability {
    pub fn new(q: f64) -> Result<Self, InferenceError> {
        if !(0.0..=1.0).contains(&q) || q.is_nan() {
            return Err(InferenceError::InvalidProbability(q));
        }
        Ok(Self(q))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Parameters of a Beta distribution; `alpha`/`beta` act as pseudo-counts
/// of prior successes and failures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    alpha: f64,
    beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, InferenceError> {
        if alpha <= 0.0 || beta <= 0.0 || !alpha.is_finite() || !beta.is_finite() {
            return Err(InferenceError::InvalidBetaParams { alpha, beta });
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    pub fn variance(&self) -> f64 {
        let s = self.alpha + self.beta;
        self.alpha * self.beta / (s * s * (s + 1.0))
    }
}

/// One batch of recognition trials: k successes out of n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinomialObservation {
    n: u64,
    k: u64,
}

impl BinomialObservation {
    pub fn new(n: u64, k: u64) -> Result<Self, InferenceError> {
        if k > n {
            return Err(InferenceError::InvalidObservation { n, k });
        }
        Ok(Self { n, k })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> u64 {
        self.k
    }
}

/// Binomial probability mass C(n,k) q^k (1-q)^(n-k), evaluated in log
/// space; the conventions 0^0 = 1 hold at q = 0 and q = 1.
pub fn binomial_pmf(obs: &BinomialObservation, q: &SuccessProbability) -> f64 {
    let (n, k) = (obs.n, obs.k);
    let q = q.value();
    if q == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if q == 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let ln_p = ln_choose(n, k) + k as f64 * q.ln() + (n - k) as f64 * (1.0 - q).ln();
    ln_p.exp().min(1.0)
}

/// Beta density q^(a-1) (1-q)^(b-1) / B(a, b), in log space.
///
/// Evaluating at an endpoint where the density diverges (q = 0 with
/// alpha < 1, or q = 1 with beta < 1) is an error.
pub fn beta_pdf(params: &BetaParams, q: &SuccessProbability) -> Result<f64, InferenceError> {
    let q = q.value();
    if (q == 0.0 && params.alpha < 1.0) || (q == 1.0 && params.beta < 1.0) {
        return Err(InferenceError::EndpointSingularity {
            alpha: params.alpha,
            beta: params.beta,
            q,
        });
    }
    Ok(beta_pdf_lenient(params, q))
}

/// Beta density without the endpoint-singularity check; returns
/// `f64::INFINITY` where the density diverges. Used by grid sampling and
/// curve export, which clamp or skip infinities explicitly.
pub(crate) fn beta_pdf_lenient(params: &BetaParams, q: f64) -> f64 {
    let (a, b) = (params.alpha, params.beta);
    // x^0 = 1 even at x = 0; handle the endpoint terms outside the logs
    let term_a = if q == 0.0 {
        if a > 1.0 {
            return 0.0;
        }
        if a < 1.0 {
            return f64::INFINITY;
        }
        0.0
    } else {
        (a - 1.0) * q.ln()
    };
    let term_b = if q == 1.0 {
        if b > 1.0 {
            return 0.0;
        }
        if b < 1.0 {
            return f64::INFINITY;
        }
        0.0
    } else {
        (b - 1.0) * (1.0 - q).ln()
    };
    (term_a + term_b - ln_beta(a, b)).exp()
}

/// Exact conjugate update: Beta(a, b) + (n, k) -> Beta(a + k, b + n - k).
pub fn posterior_update(prior: &BetaParams, obs: &BinomialObservation) -> BetaParams {
    BetaParams {
        alpha: prior.alpha + obs.k as f64,
        beta: prior.beta + (obs.n - obs.k) as f64,
    }
}

/// Beta-Binomial marginal likelihood C(n,k) B(a+k, b+n-k) / B(a, b):
/// the normalizing constant of the posterior.
pub fn marginal_likelihood(prior: &BetaParams, obs: &BinomialObservation) -> f64 {
    let (a, b) = (prior.alpha, prior.beta);
    let (n, k) = (obs.n, obs.k);
    let ln_m = ln_choose(n, k) + ln_beta(a + k as f64, b + (n - k) as f64) - ln_beta(a, b);
    ln_m.exp().min(1.0)
}

/// Mean, variance and central 95% credible interval of a Beta density.
/// Interval endpoints are located by bisection on the regularized
/// incomplete beta to within [`CI_TOL`] in probability.
pub fn posterior_summary(params: &BetaParams) -> (f64, f64, (f64, f64)) {
    let lo = beta_quantile(params.alpha, params.beta, 0.025, CI_TOL);
    let hi = beta_quantile(params.alpha, params.beta, 0.975, CI_TOL);
    (params.mean(), params.variance(), (lo, hi))
}

/// One prior-to-posterior step in a sequential run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorFrame {
    /// 1-based frame number.
    pub index: usize,
    pub prior: BetaParams,
    pub observation: BinomialObservation,
    pub posterior: BetaParams,
    pub mean: f64,
    pub variance: f64,
    pub credible_interval_95: (f64, f64),
    /// Whether the posterior mean reached the confirmation threshold.
    pub confirmed: bool,
}

/// Outcome of a full sequential run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accepted,
    Reformulate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognitionReport {
    pub frames: Vec<PosteriorFrame>,
    /// Fraction of frames whose posterior mean confirmed the hypothesis.
    pub confirm_fraction: f64,
    pub decision: Decision,
    /// First frame (1-based) whose posterior mean moved less than the
    /// convergence tolerance relative to the previous frame, if any.
    pub converged_at: Option<usize>,
}

/// Chains conjugate updates over `batches`, taking each posterior as the
/// next prior.
///
/// A frame confirms when its posterior mean reaches `confirm_threshold`.
/// The run converges at the first frame whose mean moved less than
/// `epsilon_conv` from the previous frame's. The run is accepted when at
/// least [`ACCEPT_FRACTION`] of the frames confirm.
pub fn sequential_run(
    initial_prior: &BetaParams,
    batches: &[BinomialObservation],
    confirm_threshold: f64,
    epsilon_conv: f64,
) -> Result<RecognitionReport, InferenceError> {
    if batches.is_empty() {
        return Err(InferenceError::NoBatches);
    }
    if !(0.0..=1.0).contains(&confirm_threshold) || confirm_threshold.is_nan() {
        return Err(InferenceError::InvalidThreshold(confirm_threshold));
    }
    if epsilon_conv <= 0.0 || epsilon_conv.is_nan() {
        return Err(InferenceError::InvalidConvergenceTolerance(epsilon_conv));
    }

    let mut frames = Vec::with_capacity(batches.len());
    let mut prior = *initial_prior;
    let mut previous_mean: Option<f64> = None;
    let mut converged_at = None;

    for (i, obs) in batches.iter().enumerate() {
        let posterior = posterior_update(&prior, obs);
        let (mean, variance, ci) = posterior_summary(&posterior);
        if converged_at.is_none() {
            if let Some(prev) = previous_mean {
                if (mean - prev).abs() < epsilon_conv {
                    converged_at = Some(i + 1);
                }
            }
        }
        frames.push(PosteriorFrame {
            index: i + 1,
            prior,
            observation: *obs,
            posterior,
            mean,
            variance,
            credible_interval_95: ci,
            confirmed: mean >= confirm_threshold,
        });
        previous_mean = Some(mean);
        prior = posterior;
    }

    let confirmed = frames.iter().filter(|f| f.confirmed).count();
    let confirm_fraction = confirmed as f64 / frames.len() as f64;
    let decision = if confirm_fraction >= ACCEPT_FRACTION {
        Decision::Accepted
    } else {
        Decision::Reformulate
    };
    Ok(RecognitionReport {
        frames,
        confirm_fraction,
        decision,
        converged_at,
    })
}

/// Number of samples in exported posterior curves.
pub const EXPORT_GRID: usize = 201;

/// Writes one frame's prior, scaled likelihood and posterior curves as CSV
/// with columns `q, prior_pdf, scaled_likelihood, posterior_pdf` over a
/// 201-point grid.
///
/// The likelihood is scaled by (n + 1), which normalizes a binomial pmf
/// to a unit integral over q, so all three curves share one axis. Where a
/// density diverges at an endpoint the value is written as `inf`.
pub fn write_frame_csv(
    frame: &PosteriorFrame,
    mut out: impl std::io::Write,
) -> std::io::Result<()> {
    writeln!(out, "q,prior_pdf,scaled_likelihood,posterior_pdf")?;
    let scale = frame.observation.n as f64 + 1.0;
    for i in 0..EXPORT_GRID {
        let q = i as f64 / (EXPORT_GRID - 1) as f64;
        let prior = beta_pdf_lenient(&frame.prior, q);
        let posterior = beta_pdf_lenient(&frame.posterior, q);
        let like = scale
            * binomial_pmf(
                &frame.observation,
                &SuccessProbability::new(q).expect("grid q in [0,1]"),
            );
        writeln!(out, "{q},{prior},{like},{posterior}")?;
    }
    Ok(())
}
