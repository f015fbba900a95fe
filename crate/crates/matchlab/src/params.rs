//! Named trainable parameters with Adam state and JSON checkpointing.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MatchError, Result};
use crate::tape::{GradMap, Mat, Tape, Tensor};

/// Adam hyperparameters. The L2 term is added to the raw gradient before the
/// moment updates (coupled weight decay).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            weight_decay: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
struct Slot {
    value: Mat,
    moment1: Mat,
    moment2: Mat,
}

/// All trainable weights, addressed by stable path names such as `"msg.w"`.
///
/// Insertion order is preserved so that seeded initialization is reproducible;
/// lookups go through a side index.
#[derive(Debug, Clone, Default)]
pub struct ParameterStore {
    names: Vec<String>,
    slots: Vec<Slot>,
    index: HashMap<String, usize>,
    step: u64,
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn insert(&mut self, name: &str, value: Mat) -> Result<()> {
        if self.index.contains_key(name) {
            return Err(MatchError::Usage(format!("duplicate parameter name {name:?}")));
        }
        let dim = value.dim();
        self.index.insert(name.to_string(), self.names.len());
        self.names.push(name.to_string());
        self.slots.push(Slot {
            value,
            moment1: Mat::zeros(dim),
            moment2: Mat::zeros(dim),
        });
        Ok(())
    }

    /// Insert a weight matrix drawn uniformly from the Glorot range.
    pub fn insert_glorot(
        &mut self,
        name: &str,
        rows: usize,
        cols: usize,
        rng: &mut impl Rng,
    ) -> Result<()> {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        let value = Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..=bound));
        self.insert(name, value)
    }

    /// Insert an all-zero bias row vector.
    pub fn insert_zeros(&mut self, name: &str, rows: usize, cols: usize) -> Result<()> {
        self.insert(name, Mat::zeros((rows, cols)))
    }

    pub fn get(&self, name: &str) -> Result<&Mat> {
        self.index
            .get(name)
            .map(|&i| &self.slots[i].value)
            .ok_or_else(|| MatchError::Usage(format!("unknown parameter {name:?}")))
    }

    pub fn set(&mut self, name: &str, value: Mat) -> Result<()> {
        let i = *self
            .index
            .get(name)
            .ok_or_else(|| MatchError::Usage(format!("unknown parameter {name:?}")))?;
        if self.slots[i].value.dim() != value.dim() {
            return Err(MatchError::Usage(format!(
                "shape mismatch for parameter {name:?}: stored {:?}, new {:?}",
                self.slots[i].value.dim(),
                value.dim()
            )));
        }
        self.slots[i].value = value;
        Ok(())
    }

    /// Record this parameter as a named leaf on a tape.
    pub fn leaf(&self, tape: &mut Tape, name: &str) -> Result<Tensor> {
        tape.leaf(name, self.get(name)?.clone())
    }

    /// One Adam update from a gradient map. Every key must name a stored
    /// parameter; parameters absent from the map are left untouched.
    pub fn adam_step(&mut self, grads: &GradMap, cfg: &AdamConfig) -> Result<()> {
        for name in grads.keys() {
            if !self.index.contains_key(name) {
                return Err(MatchError::Usage(format!(
                    "gradient for unknown parameter {name:?}"
                )));
            }
        }
        self.step += 1;
        let t = self.step as f64;
        let bias1 = 1.0 - self.cfg_pow(cfg.beta1, t);
        let bias2 = 1.0 - self.cfg_pow(cfg.beta2, t);
        for (name, grad) in grads {
            let i = self.index[name];
            let slot = &mut self.slots[i];
            if slot.value.dim() != grad.dim() {
                return Err(MatchError::Usage(format!(
                    "gradient shape {:?} does not match parameter {name:?} shape {:?}",
                    grad.dim(),
                    slot.value.dim()
                )));
            }
            let g = grad + &(&slot.value * cfg.weight_decay);
            slot.moment1 = &slot.moment1 * cfg.beta1 + &(&g * (1.0 - cfg.beta1));
            slot.moment2 = &slot.moment2 * cfg.beta2 + &(&g * &g * (1.0 - cfg.beta2));
            let m_hat = &slot.moment1 / bias1;
            let v_hat = &slot.moment2 / bias2;
            let update = m_hat / (v_hat.mapv(f64::sqrt) + cfg.eps);
            slot.value = &slot.value - &(update * cfg.lr);
        }
        Ok(())
    }

    fn cfg_pow(&self, beta: f64, t: f64) -> f64 {
        beta.powf(t)
    }

    /// Zero-valued gradient map covering every parameter.
    pub fn zero_grads(&self) -> GradMap {
        self.names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), Mat::zeros(self.slots[i].value.dim())))
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = CheckpointFile::from(self);
        let text = serde_json::to_string_pretty(&file)?;
        std::fs::write(path, text).map_err(|e| MatchError::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MatchError::io(path.display().to_string(), e))?;
        let file: CheckpointFile = serde_json::from_str(&text)?;
        file.try_into()
    }

    pub fn to_json(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(CheckpointFile::from(self))?)
    }

    pub fn from_json(value: serde_json::Value) -> Result<Self> {
        let file: CheckpointFile = serde_json::from_value(value)?;
        file.try_into()
    }
}

/// On-disk form: parameter name -> shape + row-major values, with Adam state
/// alongside.
#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    parameters: BTreeMap<String, TensorData>,
    adam: AdamState,
}

#[derive(Serialize, Deserialize)]
struct TensorData {
    shape: (usize, usize),
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct AdamState {
    step: u64,
    moment1: BTreeMap<String, TensorData>,
    moment2: BTreeMap<String, TensorData>,
}

fn to_data(m: &Mat) -> TensorData {
    TensorData {
        shape: m.dim(),
        values: m.iter().cloned().collect(),
    }
}

fn from_data(d: &TensorData) -> Result<Mat> {
    Mat::from_shape_vec(d.shape, d.values.clone())
        .map_err(|e| MatchError::Usage(format!("bad tensor data in checkpoint: {e}")))
}

impl From<&ParameterStore> for CheckpointFile {
    fn from(store: &ParameterStore) -> Self {
        let mut parameters = BTreeMap::new();
        let mut moment1 = BTreeMap::new();
        let mut moment2 = BTreeMap::new();
        for (i, name) in store.names.iter().enumerate() {
            parameters.insert(name.clone(), to_data(&store.slots[i].value));
            moment1.insert(name.clone(), to_data(&store.slots[i].moment1));
            moment2.insert(name.clone(), to_data(&store.slots[i].moment2));
        }
        CheckpointFile {
            parameters,
            adam: AdamState {
                step: store.step,
                moment1,
                moment2,
            },
        }
    }
}

impl TryFrom<CheckpointFile> for ParameterStore {
    type Error = MatchError;

    fn try_from(file: CheckpointFile) -> Result<Self> {
        let mut store = ParameterStore::new();
        for (name, data) in &file.parameters {
            store.insert(name, from_data(data)?)?;
        }
        store.step = file.adam.step;
        for (name, data) in &file.adam.moment1 {
            if let Some(&i) = store.index.get(name.as_str()) {
                store.slots[i].moment1 = from_data(data)?;
            }
        }
        for (name, data) in &file.adam.moment2 {
            if let Some(&i) = store.index.get(name.as_str()) {
                store.slots[i].moment2 = from_data(data)?;
            }
        }
        Ok(store)
    }
}
