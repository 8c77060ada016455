use std::collections::{BTreeMap, HashMap};

use rand::Rng;

use super::{AutodiffError, Shape, Tensor};

/// Handle to a parameter inside a [`ParameterStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// How a freshly declared parameter is filled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    Zeros,
    /// Uniform in `±sqrt(6 / (fan_in + fan_out))` using the matrix dimensions.
    Glorot,
    Uniform(f64),
}

impl Init {
    pub fn sample<R: Rng + ?Sized>(self, shape: Shape, rng: &mut R) -> Tensor {
        match self {
            Init::Zeros => Tensor::zeros(shape),
            Init::Glorot => {
                let (fan_out, fan_in) = match shape {
                    Shape::Matrix(r, c) => (r, c),
                    Shape::Vector(n) => (n, 1),
                };
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                uniform(shape, bound, rng)
            }
            Init::Uniform(bound) => uniform(shape, bound, rng),
        }
    }
}

fn uniform<R: Rng + ?Sized>(shape: Shape, bound: f64, rng: &mut R) -> Tensor {
    let data = (0..shape.len()).map(|_| rng.gen_range(-bound..=bound)).collect();
    Tensor::new(shape, data)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
struct Parameter {
    name: String,
    value: Tensor,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
}

/// Named trainable tensors together with their Adam state.
#[derive(Clone, Debug, Default)]
pub struct ParameterStore {
    params: Vec<Parameter>,
    by_name: HashMap<String, ParamId>,
    step: u64,
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> Result<ParamId, AutodiffError> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(AutodiffError::DuplicateParameter(name));
        }
        if !value.is_finite() {
            return Err(AutodiffError::NonFinite(name));
        }
        let id = ParamId(self.params.len());
        let len = value.shape().len();
        self.by_name.insert(name.clone(), id);
        self.params.push(Parameter {
            name,
            value,
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
        });
        Ok(id)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied()
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    /// Direct write access. Adam moments are left untouched.
    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id.0].value
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[id.0].name
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Tensor)> {
        self.params
            .iter()
            .enumerate()
            .map(|(i, p)| (ParamId(i), p.name.as_str(), &p.value))
    }

    /// Number of Adam updates applied so far.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self, id: ParamId) -> &[f64] {
        &self.params[id.0].first_moment
    }

    pub fn second_moment(&self, id: ParamId) -> &[f64] {
        &self.params[id.0].second_moment
    }

    /// One bias-corrected Adam update. Parameters without a gradient entry
    /// are treated as having a zero gradient. Nothing is modified when any
    /// gradient is non-finite or has the wrong length.
    pub fn adam_step(&mut self, grads: &Gradients, config: &AdamConfig) -> Result<(), AutodiffError> {
        for (id, grad) in grads.iter() {
            let param = self.params.get(id.0).ok_or(AutodiffError::UnknownParameter(id.0))?;
            if grad.len() != param.value.shape().len() {
                return Err(AutodiffError::ShapeMismatch {
                    op: "adam_step",
                    left: param.value.shape(),
                    right: Shape::Vector(grad.len()),
                });
            }
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(AutodiffError::NonFinite(param.name.clone()));
            }
        }

        self.step += 1;
        let t = self.step as i32;
        let bias1 = 1.0 - config.beta1.powi(t);
        let bias2 = 1.0 - config.beta2.powi(t);
        for (i, param) in self.params.iter_mut().enumerate() {
            let grad = grads.get(ParamId(i));
            let values = param.value.data_mut();
            for k in 0..values.len() {
                let g = grad.map_or(0.0, |g| g[k]);
                let m = config.beta1 * param.first_moment[k] + (1.0 - config.beta1) * g;
                let v = config.beta2 * param.second_moment[k] + (1.0 - config.beta2) * g * g;
                param.first_moment[k] = m;
                param.second_moment[k] = v;
                let m_hat = m / bias1;
                let v_hat = v / bias2;
                values[k] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
            }
        }
        Ok(())
    }
}

/// Gradient accumulators keyed by parameter. Missing entries are zero.
#[derive(Clone, Debug, Default)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, id: ParamId) -> Option<&[f64]> {
        self.grads.get(id.0).and_then(|g| g.as_deref())
    }

    pub(crate) fn entry(&mut self, id: ParamId, len: usize) -> &mut [f64] {
        if self.grads.len() <= id.0 {
            self.grads.resize(id.0 + 1, None);
        }
        self.grads[id.0].get_or_insert_with(|| vec![0.0; len])
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &[f64])> {
        self.grads
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.as_deref().map(|g| (ParamId(i), g)))
    }

    pub fn is_empty(&self) -> bool {
        self.grads.iter().all(Option::is_none)
    }

    pub fn clear(&mut self) {
        self.grads.clear();
    }

    /// Adds `other` into `self`.
    pub fn accumulate(&mut self, other: &Gradients) {
        for (id, g) in other.iter() {
            let dst = self.entry(id, g.len());
            for (d, s) in dst.iter_mut().zip(g) {
                *d += s;
            }
        }
    }

    /// Dense view by parameter name; unreachable parameters get zeros.
    pub fn to_map(&self, store: &ParameterStore) -> BTreeMap<String, Tensor> {
        store
            .iter()
            .map(|(id, name, value)| {
                let tensor = match self.get(id) {
                    Some(g) => Tensor::new(value.shape(), g.to_vec()),
                    None => Tensor::zeros(value.shape()),
                };
                (name.to_string(), tensor)
            })
            .collect()
    }
}
