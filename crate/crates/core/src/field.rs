//! Scalar fields with a.e. gradients, the common currency of the metric code.

use crate::Scalar;

/// A function `R^d -> R` with an (almost-everywhere) gradient.
pub trait ScalarField<T: Scalar> {
    fn dim(&self) -> usize;

    fn value(&self, x: &[T]) -> T;

    fn gradient(&self, x: &[T]) -> Vec<T>;
}

/// Adapter turning a pair of closures into a [`ScalarField`].
pub struct FnField<F, G> {
    pub dim: usize,
    pub value: F,
    pub gradient: G,
}

impl<T, F, G> ScalarField<T> for FnField<F, G>
where
    T: Scalar,
    F: Fn(&[T]) -> T,
    G: Fn(&[T]) -> Vec<T>,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[T]) -> T {
        (self.value)(x)
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        (self.gradient)(x)
    }
}
