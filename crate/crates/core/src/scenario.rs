//! Scenario documents: one TOML file describes one experiment.
//!
//! ```toml
//! schema_version = 1
//! num_channels = 15          # |F|
//! gamma_th = 8.0             # SINR decode threshold
//! slot_duration = 0.002      # seconds
//! area = [40.0, 40.0]        # metres
//! uav_altitude = 50.0        # destination defaults to the area centre at this height
//! placement_seed = 7         # required when any field is "sampled"
//!
//! [environment]              # optional, every key has a default
//! k_pi2 = 15.0
//!
//! [noise]
//! temperature = 290.0
//!
//! [[nodes]]
//! id = "src"
//! role = "source"
//! position = { x = 2.0, y = 3.0 }
//! transmit_power = 0.5
//! beta = 5.1
//!
//! [[nodes]]
//! role = "interferer"
//! count = 9                  # replicate this entry
//! position = "sampled"       # uniform over the area, on the ground
//! transmit_power = "sampled" # uniform over power_range (default [0.5, 1.0])
//! fading = "rician"          # "auto" (default), "rician" or "rayleigh"
//! beta = 5.1
//! ```
//!
//! Per-node queue fields are `arrival_rate` (packets/s), `delay_threshold`
//! (seconds) and `buffer_capacity` (buffer size over mean packet length).
//! Each may be a number or `"sampled"`: arrival rates are drawn from
//! {60, 80, 100, 120}, delay thresholds uniformly from 30–60 ms and buffer
//! capacities from {50, 75, 100, 125, 150}. Draws happen in document order
//! from a ChaCha8 stream seeded with `placement_seed`.

use crate::channel::{EnvironmentParams, FadingKind, LinkChannel, Position};
use crate::error::{Error, Result};
use crate::interference::{NoiseModel, BOLTZMANN};
use crate::queueing::QueueParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

const ARRIVAL_RATES: [f64; 4] = [60.0, 80.0, 100.0, 120.0];
const BUFFER_CAPACITIES: [f64; 5] = [50.0, 75.0, 100.0, 125.0, 150.0];
const DELAY_THRESHOLD_RANGE: (f64, f64) = (0.030, 0.060);
const POWER_RANGE: [f64; 2] = [0.5, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Source,
    Interferer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub role: Role,
    pub position: Position,
    pub transmit_power: f64,
    pub queue: QueueParams,
    pub fading_override: Option<FadingKind>,
    pub beta: f64,
    /// Uniform draw behind a sampled transmit power, kept so the power
    /// range can be changed without moving the node within it.
    pub power_quantile: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub environment: EnvironmentParams,
    pub noise: NoiseModel,
    pub num_channels: u32,
    pub gamma_th: f64,
    pub nodes: Vec<Node>,
    pub destination: Position,
    pub placement_seed: Option<u64>,
    pub area: [f64; 2],
    pub uav_altitude: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.environment.validate()?;
        self.noise.validate()?;
        if self.num_channels == 0 {
            return Err(Error::invalid("num_channels", "must be at least 1"));
        }
        positive("gamma_th", self.gamma_th)?;
        positive("area[0]", self.area[0])?;
        positive("area[1]", self.area[1])?;
        positive("uav_altitude", self.uav_altitude)?;
        finite_position("destination", &self.destination)?;
        let sources = self.nodes.iter().filter(|n| n.role == Role::Source).count();
        if sources != 1 {
            return Err(Error::invalid("nodes", format!("need exactly one source, found {sources}")));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            let field = |name: &str| format!("nodes[{i}] ({}).{name}", node.id);
            if node.id.trim().is_empty() {
                return Err(Error::invalid(format!("nodes[{i}].id"), "must not be empty"));
            }
            if self.nodes[..i].iter().any(|other| other.id == node.id) {
                return Err(Error::invalid(field("id"), "is not unique"));
            }
            finite_position(&field("position"), &node.position)?;
            if node.position.z < 0.0 {
                return Err(Error::invalid(field("position.z"), "must not be below ground"));
            }
            positive(&field("transmit_power"), node.transmit_power)?;
            node.queue
                .validate()
                .map_err(|e| rename_field(e, &field("")))?;
            if !(node.beta >= 0.0 && node.beta.is_finite()) {
                return Err(Error::invalid(field("beta"), format!("must be finite and >= 0, got {}", node.beta)));
            }
            let d = node.position.distance(&self.destination);
            if !(d >= self.environment.d0) {
                return Err(Error::invalid(
                    field("position"),
                    format!(
                        "is {d:.3} m from the destination, inside the reference distance d0 = {} m",
                        self.environment.d0
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn source_index(&self) -> usize {
        self.nodes
            .iter()
            .position(|n| n.role == Role::Source)
            .expect("validated scenario has a source")
    }

    pub fn source(&self) -> &Node {
        &self.nodes[self.source_index()]
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn interferer_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.role == Role::Interferer).count()
    }

    /// Channel from node `i` to the destination.
    pub fn link(&self, i: usize) -> Result<LinkChannel> {
        let node = &self.nodes[i];
        LinkChannel::between(&node.position, &self.destination, &self.environment, node.fading_override)
            .map_err(|e| e.at_node(&node.id))
    }

    /// Thresholds as declared on the nodes, in node order.
    pub fn betas(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.beta).collect()
    }

    /// Copy keeping the source and only the first `count` interferers.
    pub fn with_interferer_count(&self, count: usize) -> Result<Scenario> {
        let available = self.interferer_count();
        if count > available {
            return Err(Error::Sweep(format!(
                "interferer count {count} exceeds the {available} interferers in the scenario"
            )));
        }
        let mut kept = 0;
        let mut out = self.clone();
        out.nodes.retain(|n| match n.role {
            Role::Source => true,
            Role::Interferer => {
                kept += 1;
                kept <= count
            }
        });
        Ok(out)
    }

    /// Copy with every interferer's power moved into `[low, high]`.
    ///
    /// Sampled powers keep their quantile; fixed powers take the midpoint.
    pub fn with_interferer_power_range(&self, low: f64, high: f64) -> Result<Scenario> {
        if !(low > 0.0 && low <= high && high.is_finite()) {
            return Err(Error::Sweep(format!("power range needs 0 < low <= high, got [{low}, {high}]")));
        }
        let mut out = self.clone();
        for n in out.nodes.iter_mut().filter(|n| n.role == Role::Interferer) {
            n.transmit_power = low + n.power_quantile.unwrap_or(0.5) * (high - low);
        }
        Ok(out)
    }

    pub fn noise_power(&self) -> f64 {
        self.noise.power()
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::invalid(field, format!("must be positive and finite, got {v}")));
    }
    Ok(())
}

fn finite_position(field: &str, p: &Position) -> Result<()> {
    if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
        return Err(Error::invalid(field, format!("has non-finite coordinates {p:?}")));
    }
    Ok(())
}

fn rename_field(e: Error, prefix: &str) -> Error {
    match e {
        Error::Validation { field, reason } => Error::Validation {
            field: format!("{prefix}{field}"),
            reason,
        },
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Keyword {
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
enum Field<T> {
    Value(T),
    Keyword(Keyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum FadingChoice {
    Auto,
    Rician,
    Rayleigh,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseDoc {
    #[serde(default = "default_boltzmann")]
    boltzmann: f64,
    #[serde(default = "default_temperature")]
    temperature: f64,
    #[serde(default = "default_bandwidth")]
    bandwidth: f64,
}

fn default_boltzmann() -> f64 {
    BOLTZMANN
}
fn default_temperature() -> f64 {
    290.0
}
fn default_bandwidth() -> f64 {
    1e6
}

impl Default for NoiseDoc {
    fn default() -> Self {
        Self {
            boltzmann: default_boltzmann(),
            temperature: default_temperature(),
            bandwidth: default_bandwidth(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: Option<String>,
    role: Role,
    count: Option<u32>,
    position: Option<Field<Position>>,
    transmit_power: Option<Field<f64>>,
    power_range: Option<[f64; 2]>,
    arrival_rate: Option<Field<f64>>,
    delay_threshold: Option<Field<f64>>,
    buffer_capacity: Option<Field<f64>>,
    fading: Option<FadingChoice>,
    beta: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    schema_version: Option<u32>,
    num_channels: Option<u32>,
    gamma_th: Option<f64>,
    slot_duration: Option<f64>,
    placement_seed: Option<u64>,
    area: Option<[f64; 2]>,
    uav_altitude: Option<f64>,
    destination: Option<Position>,
    #[serde(default)]
    environment: EnvironmentParams,
    #[serde(default)]
    noise: NoiseDoc,
    #[serde(default)]
    nodes: Vec<NodeDoc>,
}

impl NodeDoc {
    fn uses_sampling(&self) -> bool {
        let sampled = |f: &Option<Field<f64>>| matches!(f, Some(Field::Keyword(_)));
        matches!(self.position, Some(Field::Keyword(_)))
            || sampled(&self.transmit_power)
            || sampled(&self.arrival_rate)
            || sampled(&self.delay_threshold)
            || sampled(&self.buffer_capacity)
    }
}

/// Parse and validate a scenario document.
pub fn load_scenario(document: &str) -> Result<Scenario> {
    let doc: Document = toml::from_str(document)?;
    resolve(doc)
}

/// Same as [`load_scenario`] for a document that is already parsed.
pub fn load_scenario_table(table: toml::Table) -> Result<Scenario> {
    resolve(table.try_into()?)
}

pub fn load_scenario_file(path: impl AsRef<Path>) -> Result<Scenario> {
    let text = std::fs::read_to_string(path.as_ref())?;
    load_scenario(&text)
}

fn resolve(doc: Document) -> Result<Scenario> {
    let version = doc.schema_version.unwrap_or(SCHEMA_VERSION);
    if version != SCHEMA_VERSION {
        return Err(Error::invalid(
            "schema_version",
            format!("unsupported version {version}, expected {SCHEMA_VERSION}"),
        ));
    }
    let area = doc.area.unwrap_or([40.0, 40.0]);
    let uav_altitude = doc.uav_altitude.unwrap_or(50.0);
    let slot_duration = doc.slot_duration.unwrap_or(0.002);
    positive("slot_duration", slot_duration)?;
    positive("area[0]", area[0])?;
    positive("area[1]", area[1])?;
    let destination = doc
        .destination
        .unwrap_or(Position::new(area[0] / 2.0, area[1] / 2.0, uav_altitude));

    let needs_seed = doc.nodes.iter().any(NodeDoc::uses_sampling);
    if needs_seed && doc.placement_seed.is_none() {
        return Err(Error::invalid("placement_seed", "is required when any node field is \"sampled\""));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(doc.placement_seed.unwrap_or(0));

    let mut nodes = Vec::new();
    let mut interferers = 0usize;
    for (i, spec) in doc.nodes.iter().enumerate() {
        let count = spec.count.unwrap_or(1);
        if count == 0 {
            return Err(Error::invalid(format!("nodes[{i}].count"), "must be at least 1"));
        }
        if spec.role == Role::Source && count != 1 {
            return Err(Error::invalid(format!("nodes[{i}].count"), "must be 1 for the source"));
        }
        let range = spec.power_range.unwrap_or(POWER_RANGE);
        if !(range[0] > 0.0 && range[0] <= range[1] && range[1].is_finite()) {
            return Err(Error::invalid(
                format!("nodes[{i}].power_range"),
                format!("needs 0 < low <= high, got {range:?}"),
            ));
        }
        for k in 1..=count {
            let id = match (&spec.id, spec.role) {
                (Some(id), _) if count == 1 => id.clone(),
                (Some(id), _) => format!("{id}-{k}"),
                (None, Role::Source) => "source".to_string(),
                (None, Role::Interferer) => format!("i{}", interferers + 1),
            };
            if spec.role == Role::Interferer {
                interferers += 1;
            }
            let position = match spec.position {
                None => Position::new(area[0] / 2.0, area[1] / 2.0, 0.0),
                Some(Field::Value(p)) => p,
                Some(Field::Keyword(_)) => {
                    let x = rng.random_range(0.0..area[0]);
                    let y = rng.random_range(0.0..area[1]);
                    Position::new(x, y, 0.0)
                }
            };
            let power_quantile = match spec.transmit_power {
                Some(Field::Keyword(_)) => Some(rng.random::<f64>()),
                _ => None,
            };
            let transmit_power = match (spec.transmit_power, power_quantile) {
                (_, Some(u)) => range[0] + u * (range[1] - range[0]),
                (Some(Field::Value(p)), _) => p,
                _ => 0.5,
            };
            let arrival_rate = draw(&spec.arrival_rate, 80.0, &mut rng, |r| {
                ARRIVAL_RATES[r.random_range(0..ARRIVAL_RATES.len())]
            });
            let delay_threshold = draw(&spec.delay_threshold, 0.040, &mut rng, |r| {
                r.random_range(DELAY_THRESHOLD_RANGE.0..DELAY_THRESHOLD_RANGE.1)
            });
            let buffer_capacity = draw(&spec.buffer_capacity, 100.0, &mut rng, |r| {
                BUFFER_CAPACITIES[r.random_range(0..BUFFER_CAPACITIES.len())]
            });
            nodes.push(Node {
                id,
                role: spec.role,
                position,
                transmit_power,
                queue: QueueParams {
                    arrival_rate,
                    slot_duration,
                    delay_threshold,
                    buffer_capacity,
                },
                fading_override: match spec.fading {
                    None | Some(FadingChoice::Auto) => None,
                    Some(FadingChoice::Rician) => Some(FadingKind::Rician),
                    Some(FadingChoice::Rayleigh) => Some(FadingKind::Rayleigh),
                },
                beta: spec.beta.unwrap_or(0.0),
                power_quantile,
            });
        }
    }

    let scenario = Scenario {
        environment: doc.environment,
        noise: NoiseModel {
            boltzmann: doc.noise.boltzmann,
            temperature: doc.noise.temperature,
            bandwidth: doc.noise.bandwidth,
        },
        num_channels: doc.num_channels.unwrap_or(15),
        gamma_th: doc.gamma_th.unwrap_or(8.0),
        nodes,
        destination,
        placement_seed: doc.placement_seed,
        area,
        uav_altitude,
    };
    scenario.validate()?;
    Ok(scenario)
}

fn draw(field: &Option<Field<f64>>, default: f64, rng: &mut ChaCha8Rng, sample: impl FnOnce(&mut ChaCha8Rng) -> f64) -> f64 {
    match field {
        None => default,
        Some(Field::Value(v)) => *v,
        Some(Field::Keyword(_)) => sample(rng),
    }
}
