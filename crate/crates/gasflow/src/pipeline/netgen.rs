//! Synthetic test networks.
//!
//! The tiny networks T1 and T2 are fixed fixtures for the grid oracle.
//! The larger "seven-node-like" and "twenty-node-like" networks are
//! generated from a designed feasible operating point: pick nodal
//! pressures and loads, route every load to a source through a rooted
//! tree (plus fixed-flow loop pipelines), then back out each pipeline's
//! Weymouth coefficient from its designed flow and pressure drop. The
//! base case is therefore feasible by construction, with generous slack
//! in every bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::network::{
    CompressorSpec, GasNetwork, NodeSpec, PipelineSpec, SourceSpec, UnitLabels,
};

/// Two nodes, one pipeline, one source. Grid-oracle optimum at load 3 is
/// objective 3 (balance forces G = load on the single path).
pub fn network_t1() -> GasNetwork {
    GasNetwork {
        nodes: vec![
            NodeSpec { id: 1, pi_min: 1.0, pi_max: 10.0, base_load: 0.0 },
            NodeSpec { id: 2, pi_min: 1.0, pi_max: 10.0, base_load: 3.0 },
        ],
        pipelines: vec![PipelineSpec {
            id: 1,
            from_node: 1,
            to_node: 2,
            weymouth_coefficient: 1.0,
            f_max: 10.0,
            linepack_coefficient: 1.0,
        }],
        compressors: vec![],
        sources: vec![SourceSpec {
            id: 1,
            node: 1,
            unit_cost: 1.0,
            g_min: 0.0,
            g_max: 10.0,
        }],
        units: UnitLabels::default(),
    }
}

/// T1 plus a compressor feeding a 2.0 load: source -> pipeline ->
/// compressor (gamma 0.01, R 2) -> load. Oracle optimum is
/// G = F_C + W = 2.0 + 0.02 = 2.02.
pub fn network_t2() -> GasNetwork {
    GasNetwork {
        nodes: vec![
            NodeSpec { id: 1, pi_min: 1.0, pi_max: 10.0, base_load: 0.0 },
            NodeSpec { id: 2, pi_min: 1.0, pi_max: 10.0, base_load: 0.0 },
            NodeSpec { id: 3, pi_min: 1.0, pi_max: 10.0, base_load: 2.0 },
        ],
        pipelines: vec![PipelineSpec {
            id: 1,
            from_node: 1,
            to_node: 2,
            weymouth_coefficient: 1.0,
            f_max: 10.0,
            linepack_coefficient: 1.0,
        }],
        compressors: vec![CompressorSpec {
            id: 1,
            from_node: 2,
            to_node: 3,
            gamma: 0.01,
            r_max: 2.0,
            fc_max: 10.0,
        }],
        sources: vec![SourceSpec {
            id: 1,
            node: 1,
            unit_cost: 1.0,
            g_min: 0.0,
            g_max: 10.0,
        }],
        units: UnitLabels::default(),
    }
}

struct DesignNode {
    id: u32,
    pressure: f64,
    load: f64,
}

enum DesignEdge {
    /// Tree pipeline from parent to child.
    Pipe { id: u32, from: u32, to: u32 },
    /// Tree compressor from parent to child.
    Comp { id: u32, from: u32, to: u32, gamma: f64 },
}

/// Loop pipeline with a designed fixed flow from `from` to `to`.
struct LoopEdge {
    id: u32,
    from: u32,
    to: u32,
    flow: f64,
}

struct Design {
    nodes: Vec<DesignNode>,
    tree: Vec<DesignEdge>,
    loops: Vec<LoopEdge>,
    /// (source id, node id, unit cost); every tree root needs one.
    sources: Vec<(u32, u32, f64)>,
}

const PRESSURE_LO: f64 = 0.55;
const PRESSURE_HI: f64 = 1.35;
const FLOW_MARGIN: f64 = 2.5;
const SOURCE_MARGIN: f64 = 3.0;

impl Design {
    /// Routes loads up the tree, then derives every physical parameter
    /// from the operating point.
    fn realize(&self) -> GasNetwork {
        let idx = |id: u32| self.nodes.iter().position(|n| n.id == id).unwrap();
        let pressure = |id: u32| self.nodes[idx(id)].pressure;
        let n = self.nodes.len();

        let mut eff_demand: Vec<f64> = self.nodes.iter().map(|d| d.load).collect();
        for l in &self.loops {
            eff_demand[idx(l.from)] += l.flow;
            eff_demand[idx(l.to)] -= l.flow;
        }

        // Requirement of each subtree, leaves first.
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (ei, e) in self.tree.iter().enumerate() {
            let from = match e {
                DesignEdge::Pipe { from, .. } | DesignEdge::Comp { from, .. } => *from,
            };
            children[idx(from)].push(ei);
        }
        let mut edge_flow = vec![0.0; self.tree.len()];
        fn subtree_req(
            node: usize,
            design: &Design,
            children: &[Vec<usize>],
            eff_demand: &[f64],
            edge_flow: &mut [f64],
            idx: &dyn Fn(u32) -> usize,
        ) -> f64 {
            let mut req = eff_demand[node];
            for &ei in &children[node] {
                let (to, gamma) = match &design.tree[ei] {
                    DesignEdge::Pipe { to, .. } => (*to, 0.0),
                    DesignEdge::Comp { to, gamma, .. } => (*to, *gamma),
                };
                let need = subtree_req(idx(to), design, children, eff_demand, edge_flow, idx);
                edge_flow[ei] = need;
                req += need * (1.0 + gamma);
            }
            req
        }
        let roots: Vec<usize> = (0..n)
            .filter(|&i| {
                !self.tree.iter().any(|e| match e {
                    DesignEdge::Pipe { to, .. } | DesignEdge::Comp { to, .. } => {
                        idx(*to) == i
                    }
                })
            })
            .collect();
        let mut root_output = vec![0.0; n];
        for &r in &roots {
            root_output[r] = subtree_req(r, self, &children, &eff_demand, &mut edge_flow, &|id| {
                idx(id)
            });
        }

        let mut pipelines = Vec::new();
        let mut compressors = Vec::new();
        let pipe = |id: u32, from: u32, to: u32, flow: f64| {
            let (pm, pn) = (pressure(from), pressure(to));
            assert!(pm > pn && flow > 0.0, "design: pipeline {id} not oriented along flow");
            let c = flow / (pm * pm - pn * pn).sqrt();
            PipelineSpec {
                id,
                from_node: from,
                to_node: to,
                weymouth_coefficient: c,
                f_max: FLOW_MARGIN * flow,
                linepack_coefficient: 0.5,
            }
        };
        for (ei, e) in self.tree.iter().enumerate() {
            match e {
                DesignEdge::Pipe { id, from, to } => {
                    pipelines.push(pipe(*id, *from, *to, edge_flow[ei]));
                }
                DesignEdge::Comp { id, from, to, gamma } => {
                    let ratio = pressure(*to) / pressure(*from);
                    assert!(ratio >= 1.0, "design: compressor {id} must boost pressure");
                    compressors.push(CompressorSpec {
                        id: *id,
                        from_node: *from,
                        to_node: *to,
                        gamma: *gamma,
                        r_max: (ratio * 1.25).max(1.5),
                        fc_max: FLOW_MARGIN * edge_flow[ei],
                    });
                }
            }
        }
        for l in &self.loops {
            pipelines.push(pipe(l.id, l.from, l.to, l.flow));
        }
        pipelines.sort_by_key(|p| p.id);

        let nodes = self
            .nodes
            .iter()
            .map(|d| NodeSpec {
                id: d.id,
                pi_min: PRESSURE_LO * d.pressure,
                pi_max: PRESSURE_HI * d.pressure,
                base_load: d.load,
            })
            .collect();
        let sources = self
            .sources
            .iter()
            .map(|&(id, node, cost)| {
                let out = root_output[idx(node)];
                assert!(out > 0.0, "design: source {id} carries no flow");
                SourceSpec {
                    id,
                    node,
                    unit_cost: cost,
                    g_min: 0.0,
                    g_max: SOURCE_MARGIN * out,
                }
            })
            .collect();
        let net = GasNetwork {
            nodes,
            pipelines,
            compressors,
            sources,
            units: UnitLabels::default(),
        };
        net.validate().expect("designed network validates");
        net
    }
}

fn jitter(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(0.95..=1.05)
}

/// Seven nodes, six pipelines (one loop), one compressor, two sources.
/// The seed jitters the designed loads by up to 5%.
pub fn seven_node_like(seed: u64) -> GasNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e7e);
    let mut load = |base: f64| base * jitter(&mut rng);
    let l4 = load(400.0);
    let design = Design {
        nodes: vec![
            DesignNode { id: 1, pressure: 60.0, load: 0.0 },
            DesignNode { id: 2, pressure: 55.0, load: load(200.0) },
            DesignNode { id: 3, pressure: 51.0, load: load(300.0) },
            DesignNode { id: 4, pressure: 48.0, load: l4 },
            DesignNode { id: 5, pressure: 58.0, load: 0.0 },
            DesignNode { id: 6, pressure: 56.0, load: load(150.0) },
            DesignNode { id: 7, pressure: 52.0, load: load(250.0) },
        ],
        tree: vec![
            DesignEdge::Pipe { id: 1, from: 1, to: 2 },
            DesignEdge::Pipe { id: 2, from: 2, to: 3 },
            DesignEdge::Pipe { id: 3, from: 3, to: 4 },
            DesignEdge::Comp { id: 1, from: 3, to: 6, gamma: 0.02 },
            DesignEdge::Pipe { id: 6, from: 6, to: 7 },
        ],
        loops: vec![
            // Parallel paths into node 4.
            LoopEdge { id: 4, from: 2, to: 4, flow: 0.25 * l4 },
            LoopEdge { id: 5, from: 5, to: 4, flow: 0.375 * l4 },
        ],
        sources: vec![(1, 1, 1.0), (2, 5, 1.3)],
    };
    design.realize()
}

/// Twenty nodes, eighteen pipelines (three loops), two compressors,
/// three sources. The seed jitters the designed loads by up to 5%.
pub fn twenty_node_like(seed: u64) -> GasNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x2020);
    let mut load = |base: f64| base * jitter(&mut rng);
    let design = Design {
        nodes: vec![
            DesignNode { id: 1, pressure: 80.0, load: 0.0 },
            DesignNode { id: 2, pressure: 74.0, load: load(80.0) },
            DesignNode { id: 3, pressure: 69.0, load: load(90.0) },
            DesignNode { id: 4, pressure: 65.0, load: load(70.0) },
            DesignNode { id: 5, pressure: 62.0, load: load(60.0) },
            DesignNode { id: 6, pressure: 59.0, load: load(100.0) },
            DesignNode { id: 7, pressure: 64.0, load: load(50.0) },
            DesignNode { id: 8, pressure: 60.0, load: load(60.0) },
            DesignNode { id: 9, pressure: 61.0, load: load(40.0) },
            DesignNode { id: 10, pressure: 57.0, load: load(80.0) },
            DesignNode { id: 11, pressure: 70.0, load: load(30.0) },
            DesignNode { id: 12, pressure: 65.0, load: load(70.0) },
            DesignNode { id: 13, pressure: 78.0, load: 0.0 },
            DesignNode { id: 14, pressure: 72.0, load: load(60.0) },
            DesignNode { id: 15, pressure: 67.0, load: load(50.0) },
            DesignNode { id: 16, pressure: 63.0, load: load(90.0) },
            DesignNode { id: 17, pressure: 59.0, load: load(80.0) },
            DesignNode { id: 18, pressure: 66.0, load: 0.0 },
            DesignNode { id: 19, pressure: 79.0, load: load(40.0) },
            DesignNode { id: 20, pressure: 73.0, load: load(60.0) },
        ],
        tree: vec![
            DesignEdge::Pipe { id: 1, from: 1, to: 2 },
            DesignEdge::Pipe { id: 2, from: 2, to: 3 },
            DesignEdge::Pipe { id: 3, from: 3, to: 4 },
            DesignEdge::Pipe { id: 4, from: 4, to: 5 },
            DesignEdge::Pipe { id: 5, from: 5, to: 6 },
            DesignEdge::Pipe { id: 6, from: 3, to: 7 },
            DesignEdge::Pipe { id: 7, from: 7, to: 8 },
            DesignEdge::Pipe { id: 8, from: 4, to: 9 },
            DesignEdge::Pipe { id: 9, from: 9, to: 10 },
            DesignEdge::Comp { id: 1, from: 5, to: 11, gamma: 0.02 },
            DesignEdge::Pipe { id: 10, from: 11, to: 12 },
            DesignEdge::Pipe { id: 11, from: 13, to: 14 },
            DesignEdge::Pipe { id: 12, from: 14, to: 15 },
            DesignEdge::Pipe { id: 13, from: 15, to: 16 },
            DesignEdge::Pipe { id: 14, from: 16, to: 17 },
            DesignEdge::Comp { id: 2, from: 14, to: 19, gamma: 0.02 },
            DesignEdge::Pipe { id: 15, from: 19, to: 20 },
        ],
        loops: vec![
            LoopEdge { id: 16, from: 6, to: 10, flow: 30.0 },
            LoopEdge { id: 17, from: 18, to: 16, flow: 120.0 },
            // Bridge between the two supply regions.
            LoopEdge { id: 18, from: 12, to: 17, flow: 40.0 },
        ],
        sources: vec![(1, 1, 1.0), (2, 13, 1.15), (3, 18, 1.3)],
    };
    design.realize()
}
