use crate::error::Result;

/// Kronecker product of objects living on disjoint mode sets.
pub trait TensorProduct: Sized {
    /// Fails when the two registries share a mode label.
    fn tensor(&self, other: &Self) -> Result<Self>;
}

pub fn tensor_product<T: TensorProduct>(a: &T, b: &T) -> Result<T> {
    a.tensor(b)
}
