//! Densities on a uniform grid over [0, 1] and pointwise fusion operators.
//!
//! The grid is the numeric carrier for posterior computation under
//! non-product combination rules, where conjugacy is unavailable. Curves
//! are combined pointwise after rescaling each operand to peak 1 (max,
//! min and algebraic sum expect [0, 1] operands), then renormalized to a
//! unit trapezoid integral.

use serde::{Deserialize, Serialize};

use super::{
    beta_pdf_lenient, binomial_pmf, BetaParams, BinomialObservation, InferenceError,
    SuccessProbability,
};

/// Smallest grid accepted by [`fuse_on_grid`].
pub const MIN_FUSION_GRID: usize = 101;

/// Non-negative samples of a density over the uniform grid
/// `q_i = i / (grid_points - 1)` on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    values: Vec<f64>,
    normalized: bool,
}

impl GridDensity {
    /// Wraps raw non-negative samples (at least 3 points, all finite).
    pub fn new(values: Vec<f64>) -> Result<Self, InferenceError> {
        if values.len() < 3 {
            return Err(InferenceError::GridTooSmall(values.len()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(InferenceError::InvalidDensity);
        }
        Ok(Self {
            values,
            normalized: false,
        })
    }

    /// Samples a Beta density onto a grid. Endpoint singularities
    /// (alpha < 1 or beta < 1) are truncated to 0 so the grid stays
    /// finite; the mass they carry is recovered by renormalization.
    pub fn from_beta(params: &BetaParams, grid_points: usize) -> Result<Self, InferenceError> {
        if grid_points < 3 {
            return Err(InferenceError::GridTooSmall(grid_points));
        }
        let values = (0..grid_points)
            .map(|i| {
                let q = i as f64 / (grid_points - 1) as f64;
                let v = beta_pdf_lenient(params, q);
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            })
            .collect();
        Ok(Self {
            values,
            normalized: false,
        })
    }

    pub fn grid_points(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Grid coordinate of sample `i`.
    pub fn q_at(&self, i: usize) -> f64 {
        i as f64 / (self.values.len() - 1) as f64
    }

    /// Composite trapezoid integral over [0, 1].
    pub fn trapezoid_integral(&self) -> f64 {
        let n = self.values.len();
        let h = 1.0 / (n - 1) as f64;
        let interior: f64 = self.values[1..n - 1].iter().sum();
        (0.5 * (self.values[0] + self.values[n - 1]) + interior) * h
    }

    /// Rescales to a unit trapezoid integral. A zero (or non-finite)
    /// integral means the fusion produced no usable mass.
    pub fn normalize(mut self) -> Result<Self, InferenceError> {
        let integral = self.trapezoid_integral();
        if integral <= 0.0 || !integral.is_finite() {
            return Err(InferenceError::DegenerateFusion);
        }
        for v in &mut self.values {
            *v /= integral;
        }
        self.normalized = true;
        Ok(self)
    }

    /// Mean of the density by trapezoid quadrature of q*f(q).
    pub fn mean(&self) -> f64 {
        let n = self.values.len();
        let h = 1.0 / (n - 1) as f64;
        let weighted: Vec<f64> = (0..n).map(|i| self.q_at(i) * self.values[i]).collect();
        let interior: f64 = weighted[1..n - 1].iter().sum();
        ((0.5 * (weighted[0] + weighted[n - 1]) + interior) * h) / self.trapezoid_integral()
    }
}

/// Combination rule between the prior curve and the likelihood curve.
/// `Product` recovers exact Bayes; the others are soft alternatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionOperator {
    Product,
    Max,
    Min,
    AlgebraicSum,
}

impl FusionOperator {
    /// Pointwise combination of two operands in [0, 1].
    pub fn apply(self, x: f64, y: f64) -> f64 {
        match self {
            FusionOperator::Product => x * y,
            FusionOperator::Max => x.max(y),
            FusionOperator::Min => x.min(y),
            FusionOperator::AlgebraicSum => x + y - x * y,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FusionOperator::Product => "product",
            FusionOperator::Max => "max",
            FusionOperator::Min => "min",
            FusionOperator::AlgebraicSum => "algebraic_sum",
        }
    }
}

impl std::str::FromStr for FusionOperator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "product" => Ok(FusionOperator::Product),
            "max" => Ok(FusionOperator::Max),
            "min" => Ok(FusionOperator::Min),
            "algebraic_sum" | "algebraic-sum" => Ok(FusionOperator::AlgebraicSum),
            other => Err(format!(
                "unknown operator {other:?} (expected product, max, min or algebraic_sum)"
            )),
        }
    }
}

/// Prior input for [`fuse_on_grid`]: closed-form Beta parameters or an
/// already-gridded density (e.g. the output of a previous fusion).
#[derive(Debug, Clone)]
pub enum FusionPrior {
    Beta(BetaParams),
    Grid(GridDensity),
}

/// Combines prior and binomial likelihood pointwise on a `grid_points`
/// grid and renormalizes the result to a unit trapezoid integral.
///
/// Both curves are first rescaled to peak 1 so that max, min and
/// algebraic sum act on commensurate [0, 1] operands; for the product
/// operator the rescaling constants cancel under renormalization and the
/// result equals the conjugate posterior sampled on the grid.
pub fn fuse_on_grid(
    prior: &FusionPrior,
    obs: &BinomialObservation,
    operator: FusionOperator,
    grid_points: usize,
) -> Result<GridDensity, InferenceError> {
    if grid_points < MIN_FUSION_GRID {
        return Err(InferenceError::GridTooSmall(grid_points));
    }
    let prior_curve = match prior {
        FusionPrior::Beta(params) => GridDensity::from_beta(params, grid_points)?,
        FusionPrior::Grid(density) => {
            if density.grid_points() != grid_points {
                return Err(InferenceError::GridMismatch {
                    expected: grid_points,
                    got: density.grid_points(),
                });
            }
            density.clone()
        }
    };

    let likelihood: Vec<f64> = (0..grid_points)
        .map(|i| {
            let q = i as f64 / (grid_points - 1) as f64;
            binomial_pmf(obs, &SuccessProbability::new(q).expect("grid q in [0,1]"))
        })
        .collect();

    let rescale = |curve: &[f64]| -> Result<Vec<f64>, InferenceError> {
        let peak = curve.iter().cloned().fold(0.0f64, f64::max);
        if peak <= 0.0 {
            return Err(InferenceError::DegenerateFusion);
        }
        Ok(curve.iter().map(|v| v / peak).collect())
    };
    let p = rescale(prior_curve.values())?;
    let l = rescale(&likelihood)?;

    let fused: Vec<f64> = p
        .iter()
        .zip(&l)
        .map(|(&x, &y)| operator.apply(x, y))
        .collect();
    GridDensity::new(fused)?.normalize()
}
