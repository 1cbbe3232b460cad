//! Named parameter storage, tape binding, and the Adam optimizer.
//!
//! Parameters live outside any tape as plain tensors keyed by name (sorted
//! map, so iteration order is deterministic). For each sample's forward
//! pass a [`Binding`] lazily copies the needed parameters onto the tape as
//! `requires_grad` leaves; after `backward` the per-parameter gradients are
//! read back out and summed across the batch in name order, which keeps
//! training bit-reproducible regardless of thread count.

use crate::error::{CosaError, Result};
use crate::rng;
use crate::scalar::Scalar;
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;
use std::collections::{BTreeMap, HashMap};

#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore<S> {
    map: BTreeMap<String, Tensor<S>>,
}

impl<S: Scalar> Default for ParamStore<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> ParamStore<S> {
    pub fn new() -> Self {
        ParamStore { map: BTreeMap::new() }
    }

    pub fn insert(&mut self, name: &str, t: Tensor<S>) {
        self.map.insert(name.to_string(), t);
    }

    pub fn get(&self, name: &str) -> Result<&Tensor<S>> {
        self.map.get(name).ok_or_else(|| CosaError::Invalid {
            op: "ParamStore::get",
            detail: format!("unknown parameter `{}`", name),
        })
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor<S>> {
        self.map.get_mut(name).ok_or_else(|| CosaError::Invalid {
            op: "ParamStore::get_mut",
            detail: format!("unknown parameter `{}`", name),
        })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.map.contains_key(name)
    }

    pub fn remove(&mut self, name: &str) -> Option<Tensor<S>> {
        self.map.remove(name)
    }

    /// Name-sorted iteration.
    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor<S>)> {
        self.map.iter()
    }

    pub fn names(&self) -> Vec<String> {
        self.map.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn total_elements(&self) -> usize {
        self.map.values().map(|t| t.numel()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.map.values().all(|t| t.is_finite())
    }
}

/// Lazy parameter-to-tape binding for one forward pass.
pub struct Binding {
    vars: HashMap<String, Var>,
}

impl Default for Binding {
    fn default() -> Self {
        Self::new()
    }
}

impl Binding {
    pub fn new() -> Self {
        Binding { vars: HashMap::new() }
    }

    /// Var for a parameter, inserting it as a gradient leaf on first use.
    pub fn var<S: Scalar>(
        &mut self,
        tape: &mut Tape<S>,
        store: &ParamStore<S>,
        name: &str,
    ) -> Result<Var> {
        if let Some(&v) = self.vars.get(name) {
            return Ok(v);
        }
        let v = tape.leaf(store.get(name)?.clone(), true);
        self.vars.insert(name.to_string(), v);
        Ok(v)
    }

    /// Gradients of all bound parameters, in name order. Parameters that
    /// were bound but untouched by the loss yield zero vectors.
    pub fn grads<S: Scalar>(&self, tape: &Tape<S>) -> BTreeMap<String, Vec<S>> {
        let mut out = BTreeMap::new();
        for (name, &var) in &self.vars {
            let g = match tape.grad(var) {
                Some(g) => g.to_vec(),
                None => vec![S::zero(); tape.value(var).numel()],
            };
            out.insert(name.clone(), g);
        }
        out
    }
}

/// Sum per-sample gradient maps in a fixed order (callers pass samples in
/// batch order; parameters are name-sorted), accumulating in f64.
pub fn sum_grads<S: Scalar>(batch: &[BTreeMap<String, Vec<S>>]) -> BTreeMap<String, Vec<f64>> {
    let mut total: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for per_sample in batch {
        for (name, g) in per_sample {
            let slot = total.entry(name.clone()).or_insert_with(|| vec![0.0; g.len()]);
            for (t, &x) in slot.iter_mut().zip(g) {
                *t += x.as_f64();
            }
        }
    }
    total
}

/// Adam with bias correction. Moment state is kept in the model's scalar
/// type so checkpoints round-trip exactly.
#[derive(Debug, Clone)]
pub struct Adam<S> {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Number of updates applied so far (bias correction uses `t + 1`).
    pub t: u64,
    m: BTreeMap<String, Vec<S>>,
    v: BTreeMap<String, Vec<S>>,
}

impl<S: Scalar> Adam<S> {
    pub fn new() -> Self {
        Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: BTreeMap::new(), v: BTreeMap::new() }
    }

    /// Apply one update. `grads` maps parameter name to the summed batch
    /// gradient (the caller handles any averaging); only named parameters
    /// are touched, so freezing is just filtering the map.
    pub fn step(
        &mut self,
        store: &mut ParamStore<S>,
        grads: &BTreeMap<String, Vec<f64>>,
        lr: f64,
    ) -> Result<()> {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (name, g) in grads {
            let p = store.get_mut(name)?;
            if p.numel() != g.len() {
                return Err(CosaError::Shape {
                    op: "Adam::step",
                    detail: format!("grad len {} vs param {} for `{}`", g.len(), p.numel(), name),
                });
            }
            let m = self.m.entry(name.clone()).or_insert_with(|| vec![S::zero(); g.len()]);
            let v = self.v.entry(name.clone()).or_insert_with(|| vec![S::zero(); g.len()]);
            for i in 0..g.len() {
                let gi = g[i];
                let mi = self.beta1 * m[i].as_f64() + (1.0 - self.beta1) * gi;
                let vi = self.beta2 * v[i].as_f64() + (1.0 - self.beta2) * gi * gi;
                m[i] = S::from_f64(mi);
                v[i] = S::from_f64(vi);
                let update = lr * (mi / bc1) / ((vi / bc2).sqrt() + self.eps);
                let pd = p.data_mut();
                pd[i] = S::from_f64(pd[i].as_f64() - update);
            }
        }
        Ok(())
    }

    pub fn moment_names(&self) -> Vec<String> {
        self.m.keys().cloned().collect()
    }

    pub fn moments(&self, name: &str) -> Option<(&[S], &[S])> {
        match (self.m.get(name), self.v.get(name)) {
            (Some(m), Some(v)) => Some((m, v)),
            _ => None,
        }
    }

    pub fn set_moments(&mut self, name: &str, m: Vec<S>, v: Vec<S>) {
        self.m.insert(name.to_string(), m);
        self.v.insert(name.to_string(), v);
    }
}

impl<S: Scalar> Default for Adam<S> {
    fn default() -> Self {
        Self::new()
    }
}

// ---- initializers -----------------------------------------------------------

/// He-uniform init for layers followed by a rectifier.
pub fn init_he<S: Scalar>(seed: u64, tag: &str, counter: u64, fan_in: usize, shape: &[usize]) -> Tensor<S> {
    let limit = (6.0 / fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    Tensor::new(shape.to_vec(), rng::uniform_vec(&mut rng::stream(seed, tag, counter), n, -limit, limit))
        .expect("shape")
}

/// Glorot-uniform init for linear layers.
pub fn init_glorot<S: Scalar>(
    seed: u64,
    tag: &str,
    counter: u64,
    fan_in: usize,
    fan_out: usize,
    shape: &[usize],
) -> Tensor<S> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n: usize = shape.iter().product();
    Tensor::new(shape.to_vec(), rng::uniform_vec(&mut rng::stream(seed, tag, counter), n, -limit, limit))
        .expect("shape")
}
