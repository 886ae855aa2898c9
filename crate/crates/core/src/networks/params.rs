use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::diffcore::{NdArray, Real};

use super::Architecture;

/// Standard deviation of the initial weight distribution.
pub const INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub value: Arc<NdArray<T>>,
}

/// The three parameter sets, selected by name prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamGroup {
    Encoder,
    Generator,
    Discriminator,
}

impl ParamGroup {
    pub fn prefix(&self) -> &'static str {
        match self {
            ParamGroup::Encoder => "enc.",
            ParamGroup::Generator => "gen.",
            ParamGroup::Discriminator => "dis.",
        }
    }

    pub fn of(name: &str) -> Option<Self> {
        [Self::Encoder, Self::Generator, Self::Discriminator]
            .into_iter()
            .find(|g| name.starts_with(g.prefix()))
    }
}

/// Ordered named parameter arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore<T> {
    params: Vec<Param<T>>,
}

impl<T: Real> ParamStore<T> {
    pub fn from_params(params: Vec<Param<T>>) -> Self {
        Self { params }
    }

    /// Weights from `N(0, INIT_STD^2)`, biases zero.
    pub fn init<R: Rng + ?Sized>(arch: &Architecture, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, INIT_STD).expect("valid normal");
        let params = arch
            .parameter_shapes()
            .into_iter()
            .map(|(name, dims)| {
                let value = if name.ends_with(".b") {
                    NdArray::zeros(&dims)
                } else {
                    NdArray::from_fn(&dims, |_| T::from_f64_lossy(normal.sample(rng)))
                };
                Param {
                    name,
                    value: Arc::new(value),
                }
            })
            .collect();
        Self { params }
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param<T>> {
        self.params.iter()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&NdArray<T>> {
        self.params.iter().find(|p| p.name == name).map(|p| &*p.value)
    }

    pub fn param(&self, index: usize) -> &Param<T> {
        &self.params[index]
    }

    pub fn set(&mut self, index: usize, value: NdArray<T>) {
        assert_eq!(
            self.params[index].value.dims(),
            value.dims(),
            "parameter {} shape change",
            self.params[index].name
        );
        self.params[index].value = Arc::new(value);
    }

    /// Mutable access for in-place updates (copy-on-write when shared).
    pub fn value_mut(&mut self, index: usize) -> &mut NdArray<T> {
        Arc::make_mut(&mut self.params[index].value)
    }

    pub fn scalar_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn shapes(&self) -> Vec<(String, Vec<usize>)> {
        self.params
            .iter()
            .map(|p| (p.name.clone(), p.value.dims().to_vec()))
            .collect()
    }

    pub fn cast<U: Real>(&self) -> ParamStore<U> {
        ParamStore {
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    value: Arc::new(p.value.cast()),
                })
                .collect(),
        }
    }
}
