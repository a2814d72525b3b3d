//! Overall loss, expected throughput, threshold bounds and policy optimization.

mod bounds;
mod derivative;
mod evaluate;
mod jacobi;

pub use bounds::{beta_upper, beta_upper_erf, erf_inv, BetaBounds};
pub use derivative::{beta_lower, beta_lower_with_grid, loss_derivative, loss_value, LossContext, LossDerivatives};
pub use evaluate::{evaluate, EvalOptions, Evaluator};
pub use jacobi::{jacobi_best_response, BestResponse, JacobiConfig, Objective, TraceRow};

use crate::error::{Error, Result};

/// Per-node thresholds, indexed like the scenario's node list.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyVector {
    pub betas: Vec<f64>,
}

impl PolicyVector {
    pub fn new(betas: Vec<f64>) -> Result<Self> {
        if let Some(b) = betas.iter().find(|b| !(**b >= 0.0)) {
            return Err(Error::domain("PolicyVector", format!("beta = {b} must be >= 0")));
        }
        Ok(Self { betas })
    }

    pub fn with(&self, node: usize, beta: f64) -> Self {
        let mut betas = self.betas.clone();
        betas[node] = beta;
        Self { betas }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub p_delay: f64,
    pub p_overflow: f64,
    pub p_error: f64,
    pub p_loss: f64,
    /// Packets per second.
    pub throughput: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThroughputMode {
    /// `λ(1 - P_loss)` with the sequential composition of the three drops.
    #[default]
    Exact,
    /// `λ(1 - P_dly - P_ov - P_err)`, dropping the cross products.
    Approximate,
}

/// Overflow first, then delay among admitted packets, then error among sent ones.
pub fn compose_loss(p_ov: f64, p_dly: f64, p_err: f64) -> f64 {
    let v = p_ov + (1.0 - p_ov) * p_dly + (1.0 - p_ov) * (1.0 - p_dly) * p_err;
    v.clamp(0.0, 1.0)
}

pub fn expected_throughput(lambda: f64, p_ov: f64, p_dly: f64, p_err: f64, mode: ThroughputMode) -> f64 {
    match mode {
        ThroughputMode::Exact => lambda * (1.0 - compose_loss(p_ov, p_dly, p_err)),
        ThroughputMode::Approximate => lambda * (1.0 - p_dly - p_ov - p_err).max(0.0),
    }
}
