//! Evaluation traits shared by sub-solutions, super-solutions and grid fields.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;

/// A real function on `R^{N-1}`.
pub trait ScalarField {
    fn value(&self, x: &[f64]) -> Result<f64>;
}

/// Value, gradient and Hessian at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

/// A field with analytic first and second derivatives.
pub trait SmoothField: ScalarField {
    fn jet(&self, x: &[f64]) -> Result<Jet>;
}

/// Wraps a plain closure as a [`ScalarField`].
pub struct FnField<F>(pub F);

impl<F: Fn(&[f64]) -> f64> ScalarField for FnField<F> {
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok((self.0)(x))
    }
}

impl<T: ScalarField + ?Sized> ScalarField for &T {
    fn value(&self, x: &[f64]) -> Result<f64> {
        (**self).value(x)
    }
}

impl<T: ScalarField + ?Sized> ScalarField for Box<T> {
    fn value(&self, x: &[f64]) -> Result<f64> {
        (**self).value(x)
    }
}
