//! Gas-network data model, its JSON document format, validation, and
//! seeded scenario sampling.
//!
//! A network is immutable after [`load_network`] and safe to share
//! read-only across workers. Pipelines are bidirectional; compressors are
//! directed (flow only from `from_node` to `to_node`).

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A network node with pressure bounds and a base load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: u32,
    /// Lower pressure bound, >= 0.
    pub pi_min: f64,
    /// Upper pressure bound, > pi_min.
    pub pi_max: f64,
    /// Base nodal gas load, >= 0.
    pub base_load: f64,
}

/// A pipeline between two nodes obeying the Weymouth relation
/// `F |F| = C^2 (pi_m^2 - pi_n^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub id: u32,
    pub from_node: u32,
    pub to_node: u32,
    /// The constant `C` whose square appears in the Weymouth relation.
    pub weymouth_coefficient: f64,
    /// Flow magnitude bound, > 0.
    pub f_max: f64,
    /// Linepack per unit of average endpoint pressure, >= 0.
    pub linepack_coefficient: f64,
}

/// A directed compressor boosting pressure by a ratio up to `r_max`
/// while consuming a `gamma` fraction of the transported flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressorSpec {
    pub id: u32,
    pub from_node: u32,
    pub to_node: u32,
    /// Consumption ratio in [0, 1).
    pub gamma: f64,
    /// Maximum compression ratio, >= 1.
    pub r_max: f64,
    /// Maximum transported flow, > 0.
    pub fc_max: f64,
}

/// A gas source attached to a node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub id: u32,
    pub node: u32,
    /// Unit production cost, >= 0.
    pub unit_cost: f64,
    pub g_min: f64,
    pub g_max: f64,
}

/// Declarative unit labels; all computation is unit-agnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitLabels {
    pub pressure: String,
    pub flow: String,
}

impl Default for UnitLabels {
    fn default() -> Self {
        UnitLabels {
            pressure: "Psig".to_string(),
            flow: "kcf".to_string(),
        }
    }
}

/// Immutable network topology plus physical parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasNetwork {
    pub nodes: Vec<NodeSpec>,
    pub pipelines: Vec<PipelineSpec>,
    #[serde(default)]
    pub compressors: Vec<CompressorSpec>,
    pub sources: Vec<SourceSpec>,
    #[serde(default)]
    pub units: UnitLabels,
}

impl GasNetwork {
    pub fn node_index(&self, id: u32) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn node(&self, id: u32) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Validates every structural invariant, naming the offending element.
    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() {
            return Err(Error::Validation("network has no sources".into()));
        }
        let mut ids = HashSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id) {
                return Err(Error::Validation(format!("duplicate node id {}", n.id)));
            }
            if !(n.pi_min >= 0.0) {
                return Err(Error::Validation(format!(
                    "node {}: pi_min must be >= 0 (got {})",
                    n.id, n.pi_min
                )));
            }
            if !(n.pi_min < n.pi_max) {
                return Err(Error::Validation(format!(
                    "node {}: require pi_min < pi_max (got [{}, {}])",
                    n.id, n.pi_min, n.pi_max
                )));
            }
            if !(n.base_load >= 0.0) {
                return Err(Error::Validation(format!(
                    "node {}: base_load must be >= 0",
                    n.id
                )));
            }
        }
        let mut pipe_ids = HashSet::new();
        for p in &self.pipelines {
            if !pipe_ids.insert(p.id) {
                return Err(Error::Validation(format!("duplicate pipeline id {}", p.id)));
            }
            for end in [p.from_node, p.to_node] {
                if self.node_index(end).is_none() {
                    return Err(Error::Validation(format!(
                        "pipeline {}: references missing node {}",
                        p.id, end
                    )));
                }
            }
            if p.from_node == p.to_node {
                return Err(Error::Validation(format!(
                    "pipeline {}: endpoints must differ",
                    p.id
                )));
            }
            if !(p.weymouth_coefficient > 0.0) {
                return Err(Error::Validation(format!(
                    "pipeline {}: weymouth_coefficient must be > 0",
                    p.id
                )));
            }
            if !(p.f_max > 0.0) {
                return Err(Error::Validation(format!(
                    "pipeline {}: f_max must be > 0",
                    p.id
                )));
            }
            if !(p.linepack_coefficient >= 0.0) {
                return Err(Error::Validation(format!(
                    "pipeline {}: linepack_coefficient must be >= 0",
                    p.id
                )));
            }
        }
        for c in &self.compressors {
            for end in [c.from_node, c.to_node] {
                if self.node_index(end).is_none() {
                    return Err(Error::Validation(format!(
                        "compressor {}: references missing node {}",
                        c.id, end
                    )));
                }
            }
            if c.from_node == c.to_node {
                return Err(Error::Validation(format!(
                    "compressor {}: endpoints must differ",
                    c.id
                )));
            }
            if !(0.0 <= c.gamma && c.gamma < 1.0) {
                return Err(Error::Validation(format!(
                    "compressor {}: gamma must lie in [0, 1)",
                    c.id
                )));
            }
            if !(c.r_max >= 1.0) {
                return Err(Error::Validation(format!(
                    "compressor {}: r_max must be >= 1",
                    c.id
                )));
            }
            if !(c.fc_max > 0.0) {
                return Err(Error::Validation(format!(
                    "compressor {}: fc_max must be > 0",
                    c.id
                )));
            }
        }
        for s in &self.sources {
            if self.node_index(s.node).is_none() {
                return Err(Error::Validation(format!(
                    "source {}: references missing node {}",
                    s.id, s.node
                )));
            }
            if !(s.unit_cost >= 0.0) {
                return Err(Error::Validation(format!(
                    "source {}: unit_cost must be >= 0",
                    s.id
                )));
            }
            if !(0.0 <= s.g_min && s.g_min <= s.g_max) {
                return Err(Error::Validation(format!(
                    "source {}: require 0 <= g_min <= g_max",
                    s.id
                )));
            }
        }
        self.check_connected()
    }

    /// The undirected graph of pipelines and compressors must be connected.
    fn check_connected(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Validation("network has no nodes".into()));
        }
        let n = self.nodes.len();
        let mut adj = vec![Vec::new(); n];
        let edge = |a: u32, b: u32, adj: &mut Vec<Vec<usize>>| {
            let (i, j) = (self.node_index(a).unwrap(), self.node_index(b).unwrap());
            adj[i].push(j);
            adj[j].push(i);
        };
        for p in &self.pipelines {
            edge(p.from_node, p.to_node, &mut adj);
        }
        for c in &self.compressors {
            edge(c.from_node, c.to_node, &mut adj);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if let Some(i) = seen.iter().position(|&s| !s) {
            return Err(Error::Validation(format!(
                "network is not connected: node {} is unreachable",
                self.nodes[i].id
            )));
        }
        Ok(())
    }
}

/// Parses and validates a network document (JSON, see `data/t1.network.json`).
pub fn load_network(source_text: &str) -> Result<GasNetwork> {
    let net: GasNetwork =
        serde_json::from_str(source_text).map_err(|e| Error::Parse(e.to_string()))?;
    net.validate()?;
    Ok(net)
}

/// Serializes a network back to its document format.
pub fn serialize_network(network: &GasNetwork) -> String {
    let mut s = serde_json::to_string_pretty(network).expect("network serializes");
    s.push('\n');
    s
}

/// Per-node (and per-slot) load multipliers defining one optimization
/// instance. Steady state is `horizon == 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: usize,
    pub horizon: usize,
    /// (node id, time slot) -> multiplier. Slots are 0-based internally.
    pub lambda: BTreeMap<(u32, usize), f64>,
    /// pipeline id -> initial stored gas (quasi-dynamic only).
    #[serde(default)]
    pub initial_linepack: BTreeMap<u32, f64>,
}

impl Scenario {
    /// Multiplier at (node, slot); defaults to 1 for nodes without an entry.
    pub fn lambda(&self, node_id: u32, t: usize) -> f64 {
        self.lambda.get(&(node_id, t)).copied().unwrap_or(1.0)
    }

    /// A unit scenario (lambda = 1 everywhere) over the given horizon.
    pub fn unit(network: &GasNetwork, horizon: usize) -> Scenario {
        let mut lambda = BTreeMap::new();
        for n in &network.nodes {
            for t in 0..horizon {
                lambda.insert((n.id, t), 1.0);
            }
        }
        Scenario {
            id: 0,
            horizon,
            lambda,
            initial_linepack: BTreeMap::new(),
        }
    }

    /// Input feature vector: lambda per node (network order), per slot,
    /// slot-major. This is the layout the pressure predictor consumes.
    pub fn feature_vector(&self, network: &GasNetwork) -> Vec<f64> {
        let mut v = Vec::with_capacity(network.nodes.len() * self.horizon);
        for t in 0..self.horizon {
            for n in &network.nodes {
                v.push(self.lambda(n.id, t));
            }
        }
        v
    }
}

/// Draws `count` scenarios with every multiplier independent and uniform
/// in `[1 - fluctuation, 1 + fluctuation]`. Identical seeds reproduce
/// identical output bitwise.
pub fn sample_scenarios(
    network: &GasNetwork,
    count: usize,
    fluctuation: f64,
    horizon: usize,
    seed: u64,
) -> Result<Vec<Scenario>> {
    if !(0.0..1.0).contains(&fluctuation) {
        return Err(Error::Config(format!(
            "fluctuation must lie in [0, 1) (got {fluctuation})"
        )));
    }
    if count == 0 {
        return Err(Error::Config("scenario count must be >= 1".into()));
    }
    if horizon == 0 {
        return Err(Error::Config("horizon must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for id in 0..count {
        let mut lambda = BTreeMap::new();
        for t in 0..horizon {
            for n in &network.nodes {
                let l = if fluctuation == 0.0 {
                    1.0
                } else {
                    rng.gen_range(1.0 - fluctuation..=1.0 + fluctuation)
                };
                lambda.insert((n.id, t), l);
            }
        }
        out.push(Scenario {
            id,
            horizon,
            lambda,
            initial_linepack: BTreeMap::new(),
        });
    }
    Ok(out)
}

/// Writes scenarios as CSV with header `scenario_id,node_id,time_slot,lambda`.
/// Time slots are 1-based in the file.
pub fn write_scenarios_csv(scenarios: &[Scenario]) -> String {
    let mut s = String::from("scenario_id,node_id,time_slot,lambda\n");
    for sc in scenarios {
        for (&(node, t), &l) in &sc.lambda {
            s.push_str(&format!("{},{},{},{}\n", sc.id, node, t + 1, l));
        }
    }
    s
}

/// Parses the scenario CSV format written by [`write_scenarios_csv`].
pub fn read_scenarios_csv(text: &str) -> Result<Vec<Scenario>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "scenario_id,node_id,time_slot,lambda" => {}
        other => {
            return Err(Error::Parse(format!(
                "bad scenario CSV header: {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let mut by_id: BTreeMap<usize, BTreeMap<(u32, usize), f64>> = BTreeMap::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(Error::Parse(format!(
                "scenario CSV line {}: expected 4 columns",
                lineno + 2
            )));
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("scenario CSV line {}: bad {what}", lineno + 2)))
        };
        let id = parse(cols[0], "scenario_id")? as usize;
        let node = parse(cols[1], "node_id")? as u32;
        let t = parse(cols[2], "time_slot")? as usize;
        if t == 0 {
            return Err(Error::Parse(format!(
                "scenario CSV line {}: time_slot is 1-based",
                lineno + 2
            )));
        }
        let l = parse(cols[3], "lambda")?;
        if !(l > 0.0) {
            return Err(Error::Validation(format!(
                "scenario {id}: lambda must be > 0 at node {node}, slot {t}"
            )));
        }
        by_id.entry(id).or_default().insert((node, t - 1), l);
    }
    let mut out = Vec::new();
    for (id, lambda) in by_id {
        let horizon = lambda.keys().map(|&(_, t)| t + 1).max().unwrap_or(1);
        out.push(Scenario {
            id,
            horizon,
            lambda,
            initial_linepack: BTreeMap::new(),
        });
    }
    Ok(out)
}
