//! Parameter sweeps over a scenario and the built-in figure presets.
//!
//! A sweep is the Cartesian product of its axes. Rows come out sweep-major:
//! the first axis varies slowest. Each point scores the source node; points
//! beyond a node's stability bound get `NaN` metrics.
//!
//! Sweep documents are TOML:
//!
//! ```toml
//! metrics = ["throughput"]
//!
//! [fixed]
//! gamma_th = 4.0
//!
//! [[axes]]
//! variable = "beta_n"
//! values = { start = 0.0, stop = 5.7, step = 0.1 }
//!
//! [[axes]]
//! variable = "interferer_power_range"
//! values = [[0.1, 0.5], [0.5, 1.0]]
//! ```
//!
//! A preset bundles such a document with a `[scenario]` table.

use crate::error::{Error, Result};
use crate::report::{Cell, ResultTable};
use crate::scenario::{load_scenario_table, Role, Scenario};
use crate::throughput::{EvalOptions, Evaluator, LossBreakdown, PolicyVector};
use rayon::prelude::*;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    /// Threshold of the source node.
    BetaN,
    /// Threshold shared by every interferer.
    BetaM,
    /// Keep the first `k` interferers.
    InterfererCount,
    GammaTh,
    /// Slot length in seconds, applied to every node.
    SlotDuration,
    /// `[low, high]` watts for every interferer.
    InterfererPowerRange,
}

impl Variable {
    pub const ALL: [Variable; 6] = [
        Variable::BetaN,
        Variable::BetaM,
        Variable::InterfererCount,
        Variable::GammaTh,
        Variable::SlotDuration,
        Variable::InterfererPowerRange,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variable::BetaN => "beta_n",
            Variable::BetaM => "beta_m",
            Variable::InterfererCount => "interferer_count",
            Variable::GammaTh => "gamma_th",
            Variable::SlotDuration => "slot_duration",
            Variable::InterfererPowerRange => "interferer_power_range",
        }
    }

    /// Output columns this variable occupies.
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Variable::BetaN => &["beta_n"],
            Variable::BetaM => &["beta_m"],
            Variable::InterfererCount => &["interferers"],
            Variable::GammaTh => &["gamma_th"],
            Variable::SlotDuration => &["slot_duration"],
            Variable::InterfererPowerRange => &["power_low", "power_high"],
        }
    }

    fn takes_range(self) -> bool {
        self == Variable::InterfererPowerRange
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variable::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| {
            let names: Vec<_> = Variable::ALL.iter().map(|v| v.name()).collect();
            Error::Sweep(format!("unknown axis `{s}`, expected one of {}", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum AxisValue {
    Scalar(f64),
    Range(f64, f64),
}

impl AxisValue {
    fn key(self) -> (f64, f64) {
        match self {
            AxisValue::Scalar(v) => (v, 0.0),
            AxisValue::Range(a, b) => (a, b),
        }
    }

    fn cells(self) -> Vec<Cell> {
        match self {
            AxisValue::Scalar(v) => vec![Cell::Num(v)],
            AxisValue::Range(a, b) => vec![Cell::Num(a), Cell::Num(b)],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub variable: Variable,
    pub values: Vec<AxisValue>,
}

impl Axis {
    /// Checks the values are non-empty, strictly ordered and of the right kind.
    pub fn new(variable: Variable, values: Vec<AxisValue>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Sweep(format!("axis `{variable}` has no values")));
        }
        for v in &values {
            check_value(variable, *v)?;
        }
        let cmp: Vec<_> = values
            .windows(2)
            .map(|w| w[0].key().partial_cmp(&w[1].key()))
            .collect();
        let up = cmp.iter().all(|c| *c == Some(std::cmp::Ordering::Less));
        let down = cmp.iter().all(|c| *c == Some(std::cmp::Ordering::Greater));
        if !(up || down) {
            return Err(Error::Sweep(format!("axis `{variable}` values must be strictly ordered")));
        }
        Ok(Self { variable, values })
    }
}

fn check_value(variable: Variable, v: AxisValue) -> Result<()> {
    let bad = |why: &str| Err(Error::Sweep(format!("axis `{variable}`: {why}, got {v:?}")));
    match (variable.takes_range(), v) {
        (true, AxisValue::Scalar(_)) => bad("expects [low, high] pairs"),
        (false, AxisValue::Range(..)) => bad("expects single numbers"),
        (_, AxisValue::Range(a, b)) if !(a > 0.0 && a <= b && b.is_finite()) => bad("needs 0 < low <= high"),
        (_, AxisValue::Scalar(x)) if !x.is_finite() => bad("values must be finite"),
        (_, AxisValue::Scalar(x)) if variable == Variable::InterfererCount && (x < 0.0 || x.fract() != 0.0) => {
            bad("counts must be non-negative integers")
        }
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    PDelay,
    POverflow,
    PError,
    PLoss,
    Throughput,
    /// `P_ov + (1 - P_ov) P_dly`: dropped before reaching the channel.
    QueueDrop,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::PDelay,
        Metric::POverflow,
        Metric::PError,
        Metric::PLoss,
        Metric::Throughput,
        Metric::QueueDrop,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::PDelay => "p_delay",
            Metric::POverflow => "p_overflow",
            Metric::PError => "p_error",
            Metric::PLoss => "p_loss",
            Metric::Throughput => "throughput",
            Metric::QueueDrop => "queue_drop",
        }
    }

    pub fn value(self, b: &LossBreakdown) -> f64 {
        match self {
            Metric::PDelay => b.p_delay,
            Metric::POverflow => b.p_overflow,
            Metric::PError => b.p_error,
            Metric::PLoss => b.p_loss,
            Metric::Throughput => b.throughput,
            Metric::QueueDrop => b.p_overflow + (1.0 - b.p_overflow) * b.p_delay,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axes: Vec<Axis>,
    /// Settings applied at every point before the axes.
    pub fixed: Vec<(Variable, AxisValue)>,
    pub metrics: Vec<Metric>,
    pub options: EvalOptions,
}

impl SweepSpec {
    pub fn new(axes: Vec<Axis>) -> Self {
        Self {
            axes,
            fixed: Vec::new(),
            metrics: Metric::ALL.to_vec(),
            options: EvalOptions::default(),
        }
    }

    pub fn columns(&self) -> Vec<String> {
        self.axes
            .iter()
            .flat_map(|a| a.variable.columns().iter().map(|c| c.to_string()))
            .chain(self.metrics.iter().map(|m| m.name().to_string()))
            .collect()
    }

    /// Sweep points in output order.
    pub fn points(&self) -> Vec<Vec<AxisValue>> {
        let mut points = vec![Vec::new()];
        for axis in &self.axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(*v);
                        q
                    })
                })
                .collect();
        }
        points
    }

    fn validate(&self) -> Result<()> {
        if self.metrics.is_empty() {
            return Err(Error::Sweep("no metrics requested".into()));
        }
        let mut seen = Vec::new();
        for axis in &self.axes {
            if seen.contains(&axis.variable) {
                return Err(Error::Sweep(format!("axis `{}` appears twice", axis.variable)));
            }
            seen.push(axis.variable);
        }
        for (v, x) in &self.fixed {
            check_value(*v, *x)?;
        }
        Ok(())
    }
}

/// `scenario` with every setting applied.
pub fn apply_settings(scenario: &Scenario, settings: &[(Variable, AxisValue)]) -> Result<Scenario> {
    let mut s = scenario.clone();
    // truncate first so later settings see the final node set
    let mut ordered = settings.to_vec();
    ordered.sort_by_key(|(v, _)| *v != Variable::InterfererCount);
    for (variable, value) in ordered {
        check_value(variable, value)?;
        s = match (variable, value) {
            (Variable::InterfererCount, AxisValue::Scalar(k)) => s.with_interferer_count(k as usize)?,
            (Variable::InterfererPowerRange, AxisValue::Range(lo, hi)) => s.with_interferer_power_range(lo, hi)?,
            (Variable::BetaN, AxisValue::Scalar(b)) => {
                let i = s.source_index();
                s.nodes[i].beta = b;
                s
            }
            (Variable::BetaM, AxisValue::Scalar(b)) => {
                for n in s.nodes.iter_mut().filter(|n| n.role == Role::Interferer) {
                    n.beta = b;
                }
                s
            }
            (Variable::GammaTh, AxisValue::Scalar(g)) => {
                s.gamma_th = g;
                s
            }
            (Variable::SlotDuration, AxisValue::Scalar(t)) => {
                for n in &mut s.nodes {
                    n.queue.slot_duration = t;
                }
                s
            }
            _ => unreachable!("value kinds are checked above"),
        };
    }
    Ok(s)
}

/// Scores the source node of `scenario` at every sweep point.
pub fn run_sweep(scenario: &Scenario, spec: &SweepSpec) -> Result<ResultTable> {
    spec.validate()?;
    let points = spec.points();
    let rows = points
        .par_iter()
        .map(|point| {
            let mut settings = spec.fixed.clone();
            settings.extend(spec.axes.iter().map(|a| a.variable).zip(point.iter().copied()));
            let s = apply_settings(scenario, &settings)?;
            let metrics = match score(&s, spec.options) {
                Ok(b) => spec.metrics.iter().map(|m| m.value(&b)).collect(),
                Err(e) if e.is_infeasible() => {
                    log::warn!("sweep point {point:?} is infeasible: {e}");
                    vec![f64::NAN; spec.metrics.len()]
                }
                Err(e) => return Err(e),
            };
            let mut row: Vec<Cell> = point.iter().flat_map(|v| v.cells()).collect();
            row.extend(metrics.into_iter().map(Cell::Num));
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = ResultTable::new(spec.columns());
    for row in rows {
        table.push(row);
    }
    Ok(table)
}

fn score(s: &Scenario, options: EvalOptions) -> Result<LossBreakdown> {
    let eval = Evaluator::new(s, options)?;
    eval.evaluate_node(&PolicyVector::new(s.betas())?, s.source_index())
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ValuesDoc {
    List(Vec<AxisValue>),
    Steps { start: f64, stop: f64, step: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AxisDoc {
    variable: Variable,
    values: ValuesDoc,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepDoc {
    metrics: Option<Vec<Metric>>,
    #[serde(default)]
    fixed: BTreeMap<Variable, AxisValue>,
    axes: Vec<AxisDoc>,
    scenario: Option<toml::Table>,
}

/// `start, start + step, ..., stop`, snapped to a 1e-9 grid so decimal steps land on decimals.
pub fn steps(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && stop >= start && start.is_finite() && stop.is_finite()) {
        return Err(Error::Sweep(format!("bad range start={start} stop={stop} step={step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if n > 1_000_000 {
        return Err(Error::Sweep(format!("range has {n} points")));
    }
    Ok((0..n)
        .map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

fn parse_sweep(doc: SweepDoc) -> Result<(SweepSpec, Option<toml::Table>)> {
    let axes = doc
        .axes
        .into_iter()
        .map(|a| {
            let values = match a.values {
                ValuesDoc::List(v) => v,
                ValuesDoc::Steps { start, stop, step } => {
                    steps(start, stop, step)?.into_iter().map(AxisValue::Scalar).collect()
                }
            };
            Axis::new(a.variable, values)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut spec = SweepSpec::new(axes);
    spec.fixed = doc.fixed.into_iter().collect();
    if let Some(m) = doc.metrics {
        spec.metrics = m;
    }
    spec.validate()?;
    Ok((spec, doc.scenario))
}

/// Parses a sweep document; an embedded `[scenario]` table is ignored.
pub fn load_sweep(document: &str) -> Result<SweepSpec> {
    let doc: SweepDoc = toml::from_str(document)?;
    Ok(parse_sweep(doc)?.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub scenario: Scenario,
    pub sweep: SweepSpec,
}

pub const PRESET_NAMES: [&str; 4] = ["fig2", "fig3", "fig4", "fig5"];

fn preset_source(name: &str) -> Option<&'static str> {
    match name {
        "fig2" => Some(include_str!("presets/fig2.toml")),
        "fig3" => Some(include_str!("presets/fig3.toml")),
        "fig4" => Some(include_str!("presets/fig4.toml")),
        "fig5" => Some(include_str!("presets/fig5.toml")),
        _ => None,
    }
}

/// Raw TOML of a preset, for users who want to copy and edit it.
pub fn preset_document(name: &str) -> Result<&'static str> {
    preset_source(name).ok_or_else(|| {
        Error::Sweep(format!("unknown preset `{name}`, expected one of {}", PRESET_NAMES.join(", ")))
    })
}

pub fn preset(name: &str) -> Result<Preset> {
    let text = preset_document(name)?;
    let doc: SweepDoc = toml::from_str(text)?;
    let (sweep, scenario) = parse_sweep(doc)?;
    let scenario = scenario.ok_or_else(|| Error::Sweep(format!("preset `{name}` has no scenario")))?;
    let name = PRESET_NAMES.into_iter().find(|n| *n == name).expect("known preset");
    Ok(Preset {
        name,
        scenario: load_scenario_table(scenario)?,
        sweep,
    })
}
