//! Versioned JSON model files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EnsembleModel, ModelKind, OrderedEncoding, TrainMeta};
use crate::error::{Error, Result};
use crate::ingest::LabelMap;
use crate::json;
use crate::tree::{Children, Node, SplitSpec, Tree};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum NodeKind {
    Split,
    Leaf,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlatNode {
    node_id: usize,
    kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    feature: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    left: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    right: Option<usize>,
    value: Vec<f64>,
    cover: f64,
    impurity: f64,
    gain: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlatTree {
    weight: f64,
    n_inputs: usize,
    nodes: Vec<FlatNode>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    kind: ModelKind,
    n_classes: usize,
    n_features: usize,
    feature_names: Vec<String>,
    class_names: LabelMap,
    train_meta: TrainMeta,
    learning_rate: f64,
    base_score: Vec<f64>,
    ordered_encoding: Option<OrderedEncoding>,
    trees: Vec<FlatTree>,
}

fn flatten(t: &Tree, weight: f64) -> FlatTree {
    FlatTree {
        weight,
        n_inputs: t.n_features,
        nodes: t
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| FlatNode {
                node_id: id,
                kind: if n.is_leaf() {
                    NodeKind::Leaf
                } else {
                    NodeKind::Split
                },
                feature: n.children.map(|c| c.split.feature),
                threshold: n.children.map(|c| c.split.threshold),
                left: n.children.map(|c| c.left),
                right: n.children.map(|c| c.right),
                value: n.value.clone(),
                cover: n.cover,
                impurity: n.impurity,
                gain: n.gain,
            })
            .collect(),
    }
}

fn unflatten(f: FlatTree, value_len: usize) -> Result<Tree> {
    let n = f.nodes.len();
    if n == 0 {
        return Err(Error::DecodeError("tree without nodes".into()));
    }
    let bad = |msg: String| Error::DecodeError(msg);
    let mut nodes = Vec::with_capacity(n);
    for (i, fnode) in f.nodes.into_iter().enumerate() {
        if fnode.node_id != i {
            return Err(bad(format!("node id {} at position {i}", fnode.node_id)));
        }
        if fnode.value.len() != value_len {
            return Err(bad(format!("node {i} value has length {}", fnode.value.len())));
        }
        let children = match fnode.kind {
            NodeKind::Leaf => None,
            NodeKind::Split => {
                let (Some(feature), Some(threshold), Some(left), Some(right)) =
                    (fnode.feature, fnode.threshold, fnode.left, fnode.right)
                else {
                    return Err(bad(format!("split node {i} lacks feature/threshold/children")));
                };
                // Children always follow their parent, which rules out cycles.
                if feature >= f.n_inputs || left <= i || right <= i || left >= n || right >= n {
                    return Err(bad(format!("split node {i} has invalid references")));
                }
                if !threshold.is_finite() {
                    return Err(bad(format!("split node {i} has non-finite threshold")));
                }
                Some(Children {
                    split: SplitSpec { feature, threshold },
                    left,
                    right,
                })
            }
        };
        nodes.push(Node {
            children,
            value: fnode.value,
            cover: fnode.cover,
            impurity: fnode.impurity,
            gain: fnode.gain,
        });
    }
    Ok(Tree {
        nodes,
        n_features: f.n_inputs,
    })
}

pub fn to_bytes(m: &EnsembleModel) -> Result<Vec<u8>> {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        kind: m.kind,
        n_classes: m.n_classes,
        n_features: m.n_features(),
        feature_names: m.feature_names.clone(),
        class_names: m.class_names.clone(),
        train_meta: m.train_meta.clone(),
        learning_rate: m.learning_rate,
        base_score: m.base_score.clone(),
        ordered_encoding: m.ordered_encoding.clone(),
        trees: m
            .trees
            .iter()
            .zip(&m.tree_weights)
            .map(|(t, w)| flatten(t, *w))
            .collect(),
    };
    json::to_vec(&file, false)
}

pub fn from_bytes(bytes: &[u8]) -> Result<EnsembleModel> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| Error::DecodeError(e.to_string()))?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::DecodeError("missing format_version".into()))?;
    if version > MODEL_FORMAT_VERSION as u64 {
        return Err(Error::UnsupportedModelVersion {
            found: version.min(u32::MAX as u64) as u32,
            supported: MODEL_FORMAT_VERSION,
        });
    }
    let file: ModelFile = serde_json::from_value(value).map_err(|e| Error::DecodeError(e.to_string()))?;
    let k = file.n_classes;
    if file.class_names.len() != k || file.feature_names.len() != file.n_features {
        return Err(Error::DecodeError("header counts disagree with name lists".into()));
    }
    if file.trees.is_empty() {
        return Err(Error::DecodeError("model has no trees".into()));
    }
    let boosting = file.kind.is_boosting();
    if boosting && (!file.trees.len().is_multiple_of(k) || file.base_score.len() != k) {
        return Err(Error::DecodeError("boosting model is not K trees per round".into()));
    }
    let inputs = file
        .ordered_encoding
        .as_ref()
        .map_or(file.n_features, |e| e.sources.len());
    let value_len = if boosting { 1 } else { k };
    let mut trees = Vec::with_capacity(file.trees.len());
    let mut weights = Vec::with_capacity(file.trees.len());
    for ft in file.trees {
        if ft.n_inputs != inputs {
            return Err(Error::DecodeError("tree input width disagrees with the model".into()));
        }
        if !ft.weight.is_finite() {
            return Err(Error::DecodeError("non-finite tree weight".into()));
        }
        weights.push(ft.weight);
        trees.push(unflatten(ft, value_len)?);
    }
    Ok(EnsembleModel {
        kind: file.kind,
        n_classes: k,
        feature_names: file.feature_names,
        class_names: file.class_names,
        trees,
        tree_weights: weights,
        learning_rate: file.learning_rate,
        base_score: file.base_score,
        ordered_encoding: file.ordered_encoding,
        train_meta: file.train_meta,
    })
}

pub fn save(m: &EnsembleModel, path: &Path) -> Result<()> {
    json::write_atomic(path, &to_bytes(m)?)
}

pub fn load(path: &Path) -> Result<EnsembleModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}
