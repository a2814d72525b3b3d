//! Simultaneous best-response iteration over per-node threshold grids.

use super::evaluate::Evaluator;
use super::PolicyVector;
use crate::error::{Error, Result};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Objective {
    /// Each node maximizes its own expected throughput.
    #[default]
    Own,
    /// Each node maximizes the network's total expected throughput.
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiConfig {
    /// Candidates per node: `upper · k / grid_size` for `k = 0 .. grid_size - 1`.
    pub grid_size: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub objective: Objective,
}

impl Default for JacobiConfig {
    fn default() -> Self {
        Self {
            grid_size: 64,
            tol: 1e-9,
            max_iters: 50,
            objective: Objective::Own,
        }
    }
}

/// One node's move in one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub node: usize,
    pub id: String,
    pub previous_beta: f64,
    pub beta: f64,
    /// Objective at `previous_beta` against the previous profile.
    pub previous_value: f64,
    /// Objective at `beta` against the previous profile.
    pub response_value: f64,
    /// Node's own throughput once every node has moved.
    pub throughput: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub policy: PolicyVector,
    pub throughputs: Vec<f64>,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
    pub iterations: usize,
}

struct Move {
    beta: f64,
    value: f64,
    previous_value: f64,
}

pub fn jacobi_best_response(eval: &Evaluator, initial: &PolicyVector, cfg: &JacobiConfig) -> Result<BestResponse> {
    let scenario = eval.scenario();
    let n = scenario.nodes.len();
    if initial.betas.len() != n {
        return Err(Error::domain(
            "jacobi_best_response",
            format!("initial policy has {} entries for {n} nodes", initial.betas.len()),
        ));
    }
    if cfg.grid_size == 0 || cfg.max_iters == 0 || !(cfg.tol > 0.0) {
        return Err(Error::domain("jacobi_best_response", "grid_size, max_iters and tol must be positive"));
    }
    let uppers = (0..n).map(|i| eval.beta_upper(i)).collect::<Result<Vec<_>>>()?;
    let grids: Vec<Vec<f64>> = uppers
        .iter()
        .map(|u| (0..cfg.grid_size).map(|k| u * k as f64 / cfg.grid_size as f64).collect())
        .collect();

    let mut policy = initial.clone();
    let mut trace = Vec::new();
    let mut throughputs = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        let contributions = eval.contributions(&policy)?;
        let moves = (0..n)
            .into_par_iter()
            .map(|node| best_move(eval, &policy, &contributions, node, &grids[node], cfg.objective))
            .collect::<Result<Vec<_>>>()?;
        let next = PolicyVector {
            betas: moves.iter().map(|m| m.beta).collect(),
        };
        let change = next
            .betas
            .iter()
            .zip(&policy.betas)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        throughputs = eval.evaluate_all(&next)?.iter().map(|b| b.throughput).collect();
        for (node, m) in moves.iter().enumerate() {
            trace.push(TraceRow {
                iteration: iterations,
                node,
                id: scenario.nodes[node].id.clone(),
                previous_beta: policy.betas[node],
                beta: m.beta,
                previous_value: m.previous_value,
                response_value: m.value,
                throughput: throughputs[node],
            });
        }
        log::debug!("jacobi iteration {iterations}: max change {change:e}");
        policy = next;
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(BestResponse {
        policy,
        throughputs,
        trace,
        converged,
        iterations,
    })
}

fn best_move(
    eval: &Evaluator,
    policy: &PolicyVector,
    contributions: &[(f64, f64)],
    node: usize,
    grid: &[f64],
    objective: Objective,
) -> Result<Move> {
    let current = policy.betas[node];
    let mut candidates: Vec<f64> = grid.to_vec();
    candidates.push(current);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let own_law = eval.law_excluding(contributions, node)?;
    let value = |beta: f64| -> Result<Option<f64>> {
        let result = match objective {
            Objective::Own => eval.breakdown(node, beta, &own_law).map(|b| b.throughput),
            Objective::Sum => {
                let mut shares = contributions.to_vec();
                shares[node] = eval.contribution(node, beta)?;
                let mut total = 0.0;
                let mut outcome = Ok(0.0);
                for j in 0..shares.len() {
                    let b = if j == node { beta } else { policy.betas[j] };
                    match eval
                        .law_excluding(&shares, j)
                        .and_then(|law| eval.breakdown(j, b, &law))
                    {
                        Ok(r) => total += r.throughput,
                        Err(e) => {
                            outcome = Err(e);
                            break;
                        }
                    }
                }
                outcome.map(|_| total)
            }
        };
        match result {
            Ok(v) => Ok(Some(v)),
            Err(e) if e.is_infeasible() => Ok(None),
            Err(e) => Err(e),
        }
    };

    let mut best: Option<(f64, f64)> = None;
    let mut previous_value = f64::NEG_INFINITY;
    for &beta in &candidates {
        let Some(v) = value(beta)? else { continue };
        if beta == current {
            previous_value = v;
        }
        // strict improvement only, so ties keep the smaller threshold
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((beta, v));
        }
    }
    let (beta, value) = best.ok_or_else(|| {
        Error::Numerical(format!(
            "node `{}` has no feasible threshold on its grid",
            eval.scenario().nodes[node].id
        ))
    })?;
    Ok(Move {
        beta,
        value,
        previous_value,
    })
}
