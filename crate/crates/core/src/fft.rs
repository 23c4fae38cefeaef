//! Thin wrapper around `rustfft` for real-input forward transforms.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

/// A forward DFT of fixed length with reusable buffers.
///
/// Computes `X_j = Σ_t x_t e^{-2πi jt/N}` for real `x`.
pub(crate) struct RealDft<T: Real> {
    fft: Arc<dyn Fft<T>>,
    buffer: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Real> RealDft<T> {
    pub(crate) fn new(len: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(len);
        let scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
        Self {
            fft,
            buffer: vec![Complex::new(T::zero(), T::zero()); len],
            scratch,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.buffer.len()
    }

    /// Transforms `x ⊙ w` (elementwise product) and returns the spectrum.
    pub(crate) fn transform_weighted(&mut self, x: &[T], w: &[T]) -> &[Complex<T>] {
        debug_assert_eq!(x.len(), self.len());
        debug_assert_eq!(w.len(), self.len());
        for ((b, &xv), &wv) in self.buffer.iter_mut().zip(x).zip(w) {
            *b = Complex::new(xv * wv, T::zero());
        }
        self.fft
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        &self.buffer
    }

    pub(crate) fn transform(&mut self, x: &[T]) -> &[Complex<T>] {
        debug_assert_eq!(x.len(), self.len());
        for (b, &xv) in self.buffer.iter_mut().zip(x) {
            *b = Complex::new(xv, T::zero());
        }
        self.fft
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        &self.buffer
    }
}

/// Compensated (Neumaier) summation.
pub(crate) fn neumaier_sum<T: Real>(values: impl IntoIterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp = comp + ((sum - t) + v);
        } else {
            comp = comp + ((v - t) + sum);
        }
        sum = t;
    }
    sum + comp
}
