use super::bounds::beta_upper;
use super::derivative::LossContext;
use super::{compose_loss, expected_throughput, LossBreakdown, PolicyVector, ThroughputMode};
use crate::channel::{transmit_prob, LinkChannel};
use crate::error::{Error, Result};
use crate::interference::{
    law_from_moments, p_error_with_law, ErrorNormalization, InterferenceLaw, InterfererLink, MainLink, SinrParams,
};
use crate::queueing::{p_delay, p_overflow, p_overflow_at_boundary, service_rate};
use crate::scenario::Scenario;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalOptions {
    pub normalization: ErrorNormalization,
    pub mode: ThroughputMode,
}

/// A validated scenario with its links resolved, ready to score policies.
///
/// Every node transmits to the same destination, so a node's contribution to
/// the interference seen by any other node depends only on its own link and
/// threshold. Those contributions are computed once per policy.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    scenario: &'a Scenario,
    links: Vec<LinkChannel>,
    options: EvalOptions,
}

impl<'a> Evaluator<'a> {
    pub fn new(scenario: &'a Scenario, options: EvalOptions) -> Result<Self> {
        scenario.validate()?;
        let links = (0..scenario.nodes.len())
            .map(|i| scenario.link(i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            scenario,
            links,
            options,
        })
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    pub fn links(&self) -> &[LinkChannel] {
        &self.links
    }

    pub fn options(&self) -> EvalOptions {
        self.options
    }

    pub fn sinr_params(&self) -> SinrParams {
        SinrParams {
            noise_power: self.scenario.noise_power(),
            gamma_th: self.scenario.gamma_th,
            num_channels: self.scenario.num_channels,
            normalization: self.options.normalization,
        }
    }

    pub fn interferer_link(&self, node: usize, beta: f64) -> InterfererLink {
        InterfererLink::new(self.scenario.nodes[node].transmit_power, &self.links[node], beta)
    }

    fn check_policy(&self, policy: &PolicyVector) -> Result<()> {
        if policy.betas.len() != self.links.len() {
            return Err(Error::domain(
                "evaluate",
                format!("policy has {} entries for {} nodes", policy.betas.len(), self.links.len()),
            ));
        }
        Ok(())
    }

    /// Each node's `(mean, variance)` share of the interference at the destination.
    pub fn contributions(&self, policy: &PolicyVector) -> Result<Vec<(f64, f64)>> {
        self.check_policy(policy)?;
        (0..self.links.len())
            .into_par_iter()
            .map(|m| self.contribution(m, policy.betas[m]))
            .collect()
    }

    pub fn contribution(&self, node: usize, beta: f64) -> Result<(f64, f64)> {
        self.interferer_link(node, beta)
            .moments(self.scenario.num_channels)
            .map_err(|e| e.at_node(&self.scenario.nodes[node].id))
    }

    /// Interference law seen by `node` when every other node contributes.
    pub fn law_excluding(&self, contributions: &[(f64, f64)], node: usize) -> Result<InterferenceLaw> {
        let (mut mean, mut var) = (0.0, 0.0);
        for (m, (cm, cv)) in contributions.iter().enumerate() {
            if m != node {
                mean += cm;
                var += cv;
            }
        }
        law_from_moments(mean, var)
    }

    pub fn main_link(&self, node: usize, beta: f64) -> MainLink {
        MainLink {
            channel: self.links[node],
            transmit_power: self.scenario.nodes[node].transmit_power,
            beta,
        }
    }

    /// Loss breakdown of `node` at threshold `beta` under a fixed interference law.
    pub fn breakdown(&self, node: usize, beta: f64, law: &InterferenceLaw) -> Result<LossBreakdown> {
        self.breakdown_inner(node, beta, law)
            .map_err(|e| e.at_node(&self.scenario.nodes[node].id))
    }

    fn breakdown_inner(&self, node: usize, beta: f64, law: &InterferenceLaw) -> Result<LossBreakdown> {
        let q = &self.scenario.nodes[node].queue;
        let phi = transmit_prob(&self.links[node].fading, beta, self.scenario.num_channels)?;
        let p_dly = p_delay(phi, q)?;
        let mu = service_rate(phi)?;
        let p_ov = match p_overflow(mu, q) {
            Ok(v) => v,
            // within the boundary slack of p_delay: take the ρ → 1 limit
            Err(Error::Stability { .. }) => p_overflow_at_boundary(q),
            Err(e) => return Err(e),
        };
        let p_err = p_error_with_law(&self.main_link(node, beta), law, &self.sinr_params())?;
        Ok(LossBreakdown {
            p_delay: p_dly,
            p_overflow: p_ov,
            p_error: p_err,
            p_loss: compose_loss(p_ov, p_dly, p_err),
            throughput: expected_throughput(q.arrival_rate, p_ov, p_dly, p_err, self.options.mode),
        })
    }

    pub fn evaluate_node(&self, policy: &PolicyVector, node: usize) -> Result<LossBreakdown> {
        self.check_policy(policy)?;
        let mut contributions = Vec::with_capacity(self.links.len());
        for (m, beta) in policy.betas.iter().enumerate() {
            contributions.push(if m == node { (0.0, 0.0) } else { self.contribution(m, *beta)? });
        }
        let law = self.law_excluding(&contributions, node)?;
        self.breakdown(node, policy.betas[node], &law)
    }

    pub fn evaluate_all(&self, policy: &PolicyVector) -> Result<Vec<LossBreakdown>> {
        let contributions = self.contributions(policy)?;
        (0..self.links.len())
            .into_par_iter()
            .map(|n| {
                let law = self.law_excluding(&contributions, n)?;
                self.breakdown(n, policy.betas[n], &law)
            })
            .collect()
    }

    pub fn beta_upper(&self, node: usize) -> Result<f64> {
        beta_upper(
            &self.links[node].fading,
            &self.scenario.nodes[node].queue,
            self.scenario.num_channels,
        )
        .map_err(|e| e.at_node(&self.scenario.nodes[node].id))
    }

    /// Inputs for [`loss_derivative`](super::loss_derivative) of `node`.
    pub fn loss_context(&self, node: usize, law: InterferenceLaw) -> LossContext {
        LossContext {
            queue: self.scenario.nodes[node].queue,
            num_channels: self.scenario.num_channels,
            sinr_scale: self.main_link(node, 0.0).sinr_scale(self.scenario.gamma_th),
            noise_power: self.scenario.noise_power(),
            law,
            normalization: self.options.normalization,
        }
    }
}

/// Source-node breakdown with default options.
pub fn evaluate(scenario: &Scenario, policy: &PolicyVector) -> Result<LossBreakdown> {
    let eval = Evaluator::new(scenario, EvalOptions::default())?;
    eval.evaluate_node(policy, scenario.source_index())
}
