//! Small named-tensor types shared by the quantizer, scheduler, and trainer.

use std::collections::BTreeSet;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TensorError {
    #[error("tensor {name}: shape {shape:?} implies {expected} elements, got {got}")]
    ShapeMismatch {
        name: String,
        shape: Vec<usize>,
        expected: usize,
        got: usize,
    },
    #[error("duplicate tensor name {0:?}")]
    DuplicateName(String),
    #[error("no tensor named {0:?}")]
    NoSuchTensor(String),
}

/// A named dense tensor of `f64` values in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl Tensor {
    pub fn new(
        name: impl Into<String>,
        shape: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, TensorError> {
        let name = name.into();
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(TensorError::ShapeMismatch {
                name,
                shape,
                expected,
                got: values.len(),
            });
        }
        Ok(Self {
            name,
            shape,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// An ordered collection of uniquely named tensors.  Order is meaningful:
/// schedules and grouping both walk tensors in insertion (layer) order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TensorSet {
    tensors: Vec<Tensor>,
}

impl TensorSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_tensors(tensors: Vec<Tensor>) -> Result<Self, TensorError> {
        let mut seen = BTreeSet::new();
        for t in &tensors {
            if !seen.insert(t.name.clone()) {
                return Err(TensorError::DuplicateName(t.name.clone()));
            }
        }
        Ok(Self { tensors })
    }

    pub fn push(&mut self, tensor: Tensor) -> Result<(), TensorError> {
        if self.get(&tensor.name).is_some() {
            return Err(TensorError::DuplicateName(tensor.name));
        }
        self.tensors.push(tensor);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.tensors.iter().map(|t| t.name.clone()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.iter_mut().find(|t| t.name == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tensor> {
        self.tensors.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.tensors.iter_mut()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_must_match_data() {
        assert!(Tensor::new("w", vec![2, 3], vec![0.0; 6]).is_ok());
        assert!(matches!(
            Tensor::new("w", vec![2, 3], vec![0.0; 5]),
            Err(TensorError::ShapeMismatch { expected: 6, .. })
        ));
    }

    #[test]
    fn names_are_unique() {
        let a = Tensor::new("a", vec![1], vec![0.0]).unwrap();
        let b = Tensor::new("a", vec![1], vec![1.0]).unwrap();
        assert!(matches!(
            TensorSet::from_tensors(vec![a, b]),
            Err(TensorError::DuplicateName(_))
        ));
    }

    #[test]
    fn order_is_preserved() {
        let mut set = TensorSet::new();
        for name in ["w2", "w0", "w1"] {
            set.push(Tensor::new(name, vec![1], vec![0.0]).unwrap()).unwrap();
        }
        assert_eq!(set.names(), vec!["w2", "w0", "w1"]);
    }
}
