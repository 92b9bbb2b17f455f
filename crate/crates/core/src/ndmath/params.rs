use std::collections::BTreeMap;

use rand::Rng;
use sha2::{Digest, Sha256};

use super::graph::Gradients;
use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Param<T: Real = f32> {
    pub value: Tensor<T>,
    pub grad: Option<Tensor<T>>,
}

/// Named trainable tensors, iterated in sorted name order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore<T: Real = f32> {
    entries: BTreeMap<String, Param<T>>,
}

impl<T: Real> ParamStore<T> {
    pub fn new() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor<T>) -> Result<()> {
        let name = name.into();
        if self.entries.contains_key(&name) {
            return Err(Error::Invariant(format!("duplicate parameter `{name}`")));
        }
        self.entries.insert(name, Param { value, grad: None });
        Ok(())
    }

    /// Insert a tensor drawn uniformly from `[-scale, scale]`.
    pub fn insert_uniform(
        &mut self,
        name: impl Into<String>,
        shape: [usize; 2],
        scale: f64,
        rng: &mut impl Rng,
    ) -> Result<()> {
        let t = if scale > 0.0 {
            Tensor::from_fn(shape, |_, _| T::lit(rng.gen_range(-scale..scale)))
        } else {
            Tensor::zeros(shape)
        };
        self.insert(name, t)
    }

    pub fn insert_zeros(&mut self, name: impl Into<String>, shape: [usize; 2]) -> Result<()> {
        self.insert(name, Tensor::zeros(shape))
    }

    pub(crate) fn entry(&self, name: &str) -> Option<(&str, &Tensor<T>)> {
        self.entries
            .get_key_value(name)
            .map(|(k, p)| (k.as_str(), &p.value))
    }

    pub fn get(&self, name: &str) -> Result<&Tensor<T>> {
        self.entries
            .get(name)
            .map(|p| &p.value)
            .ok_or_else(|| Error::UnknownParam(name.to_owned()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor<T>> {
        self.entries
            .get_mut(name)
            .map(|p| &mut p.value)
            .ok_or_else(|| Error::UnknownParam(name.to_owned()))
    }

    pub fn grad(&self, name: &str) -> Option<&Tensor<T>> {
        self.entries.get(name).and_then(|p| p.grad.as_ref())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param<T>)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Param<T>)> {
        self.entries.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar entries across all parameters.
    pub fn num_scalars(&self) -> usize {
        self.entries.values().map(|p| p.value.len()).sum()
    }

    /// Set every gradient to zeros of the parameter's shape.
    pub fn zero_grad(&mut self) {
        for p in self.entries.values_mut() {
            match &mut p.grad {
                Some(g) => g.data_mut().iter_mut().for_each(|x| *x = T::zero()),
                None => p.grad = Some(Tensor::zeros(p.value.shape())),
            }
        }
    }

    /// Add `scale * grads` into the stored gradients.
    pub fn accumulate(&mut self, grads: &Gradients<T>, scale: T) -> Result<()> {
        for (name, g) in grads {
            let p = self
                .entries
                .get_mut(name)
                .ok_or_else(|| Error::UnknownParam(name.clone()))?;
            if g.shape() != p.value.shape() {
                return Err(Error::Shape {
                    op: "accumulate",
                    lhs: p.value.shape(),
                    rhs: g.shape(),
                });
            }
            let dst = p.grad.get_or_insert_with(|| Tensor::zeros(g.shape()));
            for (d, &v) in dst.data_mut().iter_mut().zip(g.data()) {
                *d += v * scale;
            }
        }
        Ok(())
    }

    pub fn grad_norm(&self) -> T {
        self.entries
            .values()
            .filter_map(|p| p.grad.as_ref())
            .flat_map(|g| g.data().iter())
            .map(|&x| x * x)
            .sum::<T>()
            .sqrt()
    }

    /// Rescale all gradients so their global L2 norm is at most `max_norm`.
    /// Returns the norm before clipping.
    pub fn clip_grad_norm(&mut self, max_norm: T) -> T {
        let norm = self.grad_norm();
        if norm > max_norm && norm > T::zero() {
            let factor = max_norm / norm;
            for p in self.entries.values_mut() {
                if let Some(g) = &mut p.grad {
                    g.data_mut().iter_mut().for_each(|x| *x *= factor);
                }
            }
        }
        norm
    }

    /// Copy of the values in another precision, without gradients.
    pub fn cast<U: Real>(&self) -> ParamStore<U> {
        ParamStore {
            entries: self
                .entries
                .iter()
                .map(|(k, p)| {
                    (
                        k.clone(),
                        Param {
                            value: p.value.cast(),
                            grad: None,
                        },
                    )
                })
                .collect(),
        }
    }

    /// SHA-256 over names, shapes and values, used to check frozen models.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (name, p) in &self.entries {
            h.update(name.as_bytes());
            h.update([0u8]);
            for d in p.value.shape() {
                h.update((d as u64).to_le_bytes());
            }
            for x in p.value.data() {
                h.update(x.to_f64().unwrap_or(f64::NAN).to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}
