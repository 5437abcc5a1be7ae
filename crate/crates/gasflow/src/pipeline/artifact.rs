//! Versioned text persistence for trained pressure predictors.
//!
//! One model per time slot, all reading the same feature vector.
//! Floats are written with Rust's shortest round-trip formatting, so a
//! save/load cycle reproduces the weights bit for bit.

use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

use crate::ann::{Mlp, Normalizer, Predictor, TrainedModel};
use crate::error::{Error, Result};

const MAGIC: &str = "gasflow-model v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub horizon: usize,
    pub node_count: usize,
    /// `models[t]` predicts the nodal pressures of slot `t`.
    pub models: Vec<TrainedModel>,
}

impl ModelArtifact {
    /// Slot-major nodal pressures for one feature vector.
    pub fn predict_pressures(&self, features: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.horizon * self.node_count);
        for model in &self.models {
            if features.len() != model.mlp.input_dim() {
                return Err(Error::Dimension(format!(
                    "feature vector has {} entries, model expects {}",
                    features.len(),
                    model.mlp.input_dim()
                )));
            }
            let y = model.predict(features);
            if y.len() != self.node_count {
                return Err(Error::Dimension(format!(
                    "model emits {} pressures, network has {} nodes",
                    y.len(),
                    self.node_count
                )));
            }
            out.extend(y);
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let floats = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        out.push_str(&format!("horizon {}\n", self.horizon));
        out.push_str(&format!("nodes {}\n", self.node_count));
        for (t, m) in self.models.iter().enumerate() {
            out.push_str(&format!("slot {t}\n"));
            let sizes: Vec<String> = m.mlp.layer_sizes.iter().map(|s| s.to_string()).collect();
            out.push_str(&format!("layers {}\n", sizes.join(" ")));
            out.push_str(&format!("input_mean {}\n", floats(&m.input_norm.mean)));
            out.push_str(&format!("input_std {}\n", floats(&m.input_norm.std)));
            out.push_str(&format!("target_mean {}\n", floats(&m.target_norm.mean)));
            out.push_str(&format!("target_std {}\n", floats(&m.target_norm.std)));
            for (l, w) in m.mlp.weights.iter().enumerate() {
                out.push_str(&format!("weights {l}\n"));
                let n_in = m.mlp.layer_sizes[l];
                for row in w.chunks(n_in) {
                    out.push_str(&floats(row));
                    out.push('\n');
                }
                out.push_str(&format!("biases {l}\n"));
                out.push_str(&floats(&m.mlp.biases[l]));
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<ModelArtifact> {
        fn bad(msg: &str) -> Error {
            Error::Parse(format!("model file: {msg}"))
        }
        fn next(lines: &mut std::str::Lines<'_>, tag: &str) -> Result<String> {
            let line = lines
                .next()
                .ok_or_else(|| bad(&format!("missing {tag} line")))?;
            line.strip_prefix(tag)
                .and_then(|r| r.strip_prefix(' ').or(if r.is_empty() { Some("") } else { None }))
                .map(str::to_string)
                .ok_or_else(|| bad(&format!("expected {tag:?} line, found {line:?}")))
        }
        fn parse_usizes(s: &str) -> Result<Vec<usize>> {
            s.split_whitespace()
                .map(|w| w.parse::<usize>().map_err(|e| bad(&e.to_string())))
                .collect()
        }
        fn parse_floats(s: &str) -> Result<Vec<f64>> {
            s.split_whitespace()
                .map(|w| w.parse::<f64>().map_err(|e| bad(&e.to_string())))
                .collect()
        }

        let mut lines = text.lines();
        let magic = lines.next().ok_or_else(|| bad("empty file"))?;
        if magic != MAGIC {
            return Err(bad(&format!(
                "unsupported header {magic:?}, expected {MAGIC:?}"
            )));
        }
        let horizon: usize = next(&mut lines, "horizon")?
            .parse()
            .map_err(|e| bad(&format!("horizon: {e}")))?;
        let node_count: usize = next(&mut lines, "nodes")?
            .parse()
            .map_err(|e| bad(&format!("nodes: {e}")))?;
        let mut models = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let slot: usize = next(&mut lines, "slot")?
                .parse()
                .map_err(|e| bad(&format!("slot: {e}")))?;
            if slot != t {
                return Err(bad(&format!("slot {slot} out of order, expected {t}")));
            }
            let layer_sizes = parse_usizes(&next(&mut lines, "layers")?)?;
            if layer_sizes.len() < 2 {
                return Err(bad("layers line needs at least two sizes"));
            }
            let input_norm = Normalizer {
                mean: parse_floats(&next(&mut lines, "input_mean")?)?,
                std: parse_floats(&next(&mut lines, "input_std")?)?,
            };
            let target_norm = Normalizer {
                mean: parse_floats(&next(&mut lines, "target_mean")?)?,
                std: parse_floats(&next(&mut lines, "target_std")?)?,
            };
            let mut weights = Vec::new();
            let mut biases = Vec::new();
            for l in 0..layer_sizes.len() - 1 {
                let tag = next(&mut lines, "weights")?;
                if tag.parse::<usize>().ok() != Some(l) {
                    return Err(bad(&format!("weights block {tag} out of order")));
                }
                let (n_in, n_out) = (layer_sizes[l], layer_sizes[l + 1]);
                let mut w = Vec::with_capacity(n_in * n_out);
                for _ in 0..n_out {
                    let row = parse_floats(
                        lines.next().ok_or_else(|| bad("truncated weight block"))?,
                    )?;
                    if row.len() != n_in {
                        return Err(bad(&format!(
                            "weight row has {} entries, expected {n_in}",
                            row.len()
                        )));
                    }
                    w.extend(row);
                }
                weights.push(w);
                let tag = next(&mut lines, "biases")?;
                if tag.parse::<usize>().ok() != Some(l) {
                    return Err(bad(&format!("biases block {tag} out of order")));
                }
                let b = parse_floats(
                    lines.next().ok_or_else(|| bad("truncated bias block"))?,
                )?;
                if b.len() != n_out {
                    return Err(bad(&format!(
                        "bias row has {} entries, expected {n_out}",
                        b.len()
                    )));
                }
                biases.push(b);
            }
            let mlp = Mlp {
                layer_sizes,
                weights,
                biases,
            };
            if mlp.output_dim() != node_count {
                return Err(bad(&format!(
                    "slot {t} emits {} outputs, header says {node_count} nodes",
                    mlp.output_dim()
                )));
            }
            models.push(TrainedModel {
                mlp,
                input_norm,
                target_norm,
            });
        }
        if lines.next().is_some() {
            return Err(bad("trailing content after last slot"));
        }
        Ok(ModelArtifact {
            horizon,
            node_count,
            models,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ModelArtifact> {
        ModelArtifact::from_text(&fs::read_to_string(path)?)
    }
}
