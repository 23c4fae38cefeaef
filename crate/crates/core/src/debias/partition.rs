//! Symmetric rectangular bases tiling a band of non-negative frequencies.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Contiguous cells `[c_k − δ_k/2, c_k + δ_k/2]`, each carrying the basis
/// `scale · symrect(ω; c_k, δ_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisPartition<T: Real> {
    centres: Vec<T>,
    widths: Vec<T>,
    scale: T,
}

impl<T: Real> BasisPartition<T> {
    /// Partition from cell edges `ω_0 < ω_1 < … < ω_K`.
    pub fn from_edges(edges: &[T]) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::invalid("a partition needs at least two edges"));
        }
        if edges[0] < T::zero() {
            return Err(Error::invalid("partition edges must be non-negative"));
        }
        if let Some(w) = edges.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(format!(
                "partition edges must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        let two = T::lit(2.0);
        Ok(Self {
            centres: edges.windows(2).map(|w| (w[0] + w[1]) / two).collect(),
            widths: edges.windows(2).map(|w| w[1] - w[0]).collect(),
            scale: T::one(),
        })
    }

    /// Partition from user-supplied centres and widths.
    ///
    /// Cells must be positive-width, sorted, non-negative
    /// (`c_k ≥ δ_k/2`) and contiguous.
    pub fn from_cells(centres: Vec<T>, widths: Vec<T>) -> Result<Self> {
        if centres.is_empty() || centres.len() != widths.len() {
            return Err(Error::invalid(format!(
                "need matching non-empty centre and width lists (got {} and {})",
                centres.len(),
                widths.len()
            )));
        }
        let two = T::lit(2.0);
        for (k, (&c, &d)) in centres.iter().zip(&widths).enumerate() {
            if !(d > T::zero() && d.is_finite() && c.is_finite()) {
                return Err(Error::invalid(format!(
                    "basis {}: width must be positive",
                    k + 1
                )));
            }
            if c - d / two < -d * T::lit(1e-9) {
                return Err(Error::invalid(format!(
                    "basis {}: centre {c} is below half its width {d}",
                    k + 1
                )));
            }
        }
        for k in 1..centres.len() {
            let prev_hi = centres[k - 1] + widths[k - 1] / two;
            let lo = centres[k] - widths[k] / two;
            let tol = T::lit(1e-9) * prev_hi.abs().max(widths[k]);
            if (prev_hi - lo).abs() > tol {
                return Err(Error::invalid(format!(
                    "basis {}: cell starts at {lo} but the previous one ends at {prev_hi}",
                    k + 1
                )));
            }
        }
        Ok(Self {
            centres,
            widths,
            scale: T::one(),
        })
    }

    /// Multiplies every basis function by `scale`.
    pub fn with_scale(mut self, scale: T) -> Result<Self> {
        if !(scale > T::zero() && scale.is_finite()) {
            return Err(Error::invalid("basis scale must be positive"));
        }
        self.scale = scale;
        Ok(self)
    }

    pub fn centres(&self) -> &[T] {
        &self.centres
    }

    pub fn widths(&self) -> &[T] {
        &self.widths
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    /// Number of bases `K`.
    pub fn len(&self) -> usize {
        self.centres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centres.is_empty()
    }

    pub fn lower_edge(&self) -> T {
        self.centres[0] - self.widths[0] / T::lit(2.0)
    }

    pub fn upper_edge(&self) -> T {
        let k = self.len() - 1;
        self.centres[k] + self.widths[k] / T::lit(2.0)
    }

    /// Value of basis `k` (zero-based) at `omega`: `scale` inside either
    /// mirrored cell, half of it on a cell edge, zero elsewhere.
    pub fn basis_value(&self, k: usize, omega: T) -> T {
        let c = self.centres[k];
        let d = self.widths[k];
        let rect = |u: T| {
            let half = d / T::lit(2.0);
            let tol = T::epsilon() * T::lit(8.0) * (omega.abs() + c.abs() + d);
            let dist = u.abs() - half;
            if dist.abs() <= tol {
                T::lit(0.5)
            } else if dist < T::zero() {
                T::one()
            } else {
                T::zero()
            }
        };
        self.scale * (rect(omega - c) + rect(omega + c))
    }

    /// Inverse transform of basis `k`,
    /// `ρ_k(τ) = (1/2π) ∫ B_k(ω) e^{iωτΔ} dω = scale·(δ/π) sinc(δτΔ/2π) cos(cτΔ)`
    /// for `τ = 0..lags`.
    pub fn basis_autocorr(&self, k: usize, lags: usize, delta: T) -> Vec<T> {
        let c = self.centres[k];
        let d = self.widths[k];
        let amp = self.scale * d / T::PI();
        (0..lags)
            .map(|tau| {
                let t = T::from_usize_lossy(tau) * delta;
                let x = d * t / T::lit(2.0);
                let sinc = if x == T::zero() {
                    T::one()
                } else {
                    x.sin() / x
                };
                amp * sinc * (c * t).cos()
            })
            .collect()
    }
}

/// Largest number of evenly spaced bases, `⌈(L−1)/2⌉`.
pub fn max_bases(segment_len: usize) -> usize {
    segment_len / 2
}

/// Recommended default, `⌈(L−1)/4⌉`.
pub fn default_bases(segment_len: usize) -> usize {
    (segment_len.saturating_sub(1)).div_ceil(4).max(1)
}

/// `K` equal cells of width `π/(ΔK)` over `[0, π/Δ]`.
pub fn even_partition<T: Real>(
    bases: usize,
    segment_len: usize,
    delta: T,
) -> Result<BasisPartition<T>> {
    let max = max_bases(segment_len);
    if bases == 0 || bases > max {
        return Err(Error::invalid(format!(
            "number of bases must lie in 1..={max} (⌈(L−1)/2⌉ for L = {segment_len}), got {bases}"
        )));
    }
    if !(delta > T::zero() && delta.is_finite()) {
        return Err(Error::invalid(
            "sampling interval must be finite and positive",
        ));
    }
    let width = T::PI() / (delta * T::from_usize_lossy(bases));
    let half = width / T::lit(2.0);
    Ok(BasisPartition {
        centres: (1..=bases)
            .map(|k| T::from_usize_lossy(k) * width - half)
            .collect(),
        widths: vec![width; bases],
        scale: T::one(),
    })
}

/// `K` cells with geometrically spaced edges from `omega_min` to
/// `omega_max`. Frequencies below `omega_min` are left uncovered.
pub fn log_partition<T: Real>(
    bases: usize,
    omega_min: T,
    omega_max: T,
) -> Result<BasisPartition<T>> {
    if bases == 0 {
        return Err(Error::invalid("number of bases must be >= 1"));
    }
    if !(omega_min > T::zero() && omega_max > omega_min && omega_max.is_finite()) {
        return Err(Error::invalid(format!(
            "log partition band must satisfy 0 < min < max, got ({omega_min}, {omega_max})"
        )));
    }
    let log_lo = omega_min.ln();
    let step = (omega_max.ln() - log_lo) / T::from_usize_lossy(bases);
    let mut edges: Vec<T> = (0..=bases)
        .map(|k| (log_lo + step * T::from_usize_lossy(k)).exp())
        .collect();
    edges[0] = omega_min;
    edges[bases] = omega_max;
    BasisPartition::from_edges(&edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn even_partition_geometry() {
        let p = even_partition::<f64>(2, 8, 1.0).unwrap();
        assert_abs_diff_eq!(p.widths()[0], PI / 2.0);
        assert_abs_diff_eq!(p.centres()[0], PI / 4.0);
        assert_abs_diff_eq!(p.centres()[1], 3.0 * PI / 4.0);

        let p = even_partition::<f64>(max_bases(9), 9, 1.0).unwrap();
        assert_eq!(p.len(), 4);
        assert_abs_diff_eq!(p.widths()[0], PI / 4.0);
        assert_abs_diff_eq!(p.upper_edge(), PI, epsilon = 1e-15);
    }

    #[test]
    fn base_counts() {
        assert_eq!(default_bases(512), 128);
        assert_eq!(default_bases(1024), 256);
        assert_eq!(default_bases(256), 64);
        assert_eq!(max_bases(512), 256);
        assert_eq!(max_bases(9), 4);
        assert_eq!(max_bases(8), 4);
    }

    #[test]
    fn even_partition_rejects_too_many() {
        assert!(even_partition::<f64>(5, 9, 1.0).is_err());
        assert!(even_partition::<f64>(0, 9, 1.0).is_err());
    }

    #[test]
    fn log_partition_is_geometric() {
        let p = log_partition::<f64>(2, PI / 8.0, PI / 2.0).unwrap();
        let mid = p.centres()[0] + p.widths()[0] / 2.0;
        assert_abs_diff_eq!(mid, (PI / 8.0 * PI / 2.0).sqrt(), epsilon = 1e-15);

        let p = log_partition::<f64>(10, 0.01 * PI, PI).unwrap();
        let edges: Vec<f64> = std::iter::once(p.lower_edge())
            .chain(p.centres().iter().zip(p.widths()).map(|(c, w)| c + w / 2.0))
            .collect();
        let r0 = edges[1] / edges[0];
        for w in edges.windows(2) {
            assert!((w[1] / w[0] - r0).abs() < 1e-12);
        }
        assert!(log_partition::<f64>(3, 0.0, 1.0).is_err());
        assert!(log_partition::<f64>(3, 1.0, 0.5).is_err());
    }

    #[test]
    fn symrect_values() {
        let p = even_partition::<f64>(4, 16, 1.0).unwrap();
        let (c, d) = (p.centres()[2], p.widths()[2]);
        assert_eq!(p.basis_value(2, c), 1.0);
        assert_eq!(p.basis_value(2, c + d / 2.0), 0.5);
        assert_eq!(p.basis_value(2, c - d / 2.0), 0.5);
        assert_eq!(p.basis_value(2, -c), 1.0);
        assert_eq!(p.basis_value(2, c + d), 0.0);
        // First cell touches zero from both sides.
        assert_eq!(p.basis_value(0, 0.0), 1.0);
    }

    #[test]
    fn cells_must_be_contiguous() {
        assert!(BasisPartition::from_cells(vec![0.5, 1.5], vec![1.0, 1.0]).is_ok());
        assert!(BasisPartition::from_cells(vec![0.5, 1.6], vec![1.0, 1.0]).is_err());
        assert!(BasisPartition::from_cells(vec![0.2], vec![1.0]).is_err());
        assert!(BasisPartition::from_cells(vec![0.5], vec![0.0]).is_err());
        assert!(BasisPartition::<f64>::from_cells(vec![], vec![]).is_err());
    }

    #[test]
    fn autocorr_at_zero_lag() {
        let p = even_partition::<f64>(8, 64, 0.5).unwrap();
        for k in 0..8 {
            assert_abs_diff_eq!(p.basis_autocorr(k, 1, 0.5)[0], p.widths()[k] / PI);
        }
    }

    #[test]
    fn autocorr_zero_at_sinc_zeros() {
        // First basis with δτΔ = 2π·j.
        let p = even_partition::<f64>(4, 16, 1.0).unwrap();
        let rho = p.basis_autocorr(0, 17, 1.0);
        // δ = π/4, so δτ = 2π at τ = 8 and 16.
        assert_abs_diff_eq!(rho[8], 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(rho[16], 0.0, epsilon = 1e-16);
    }

    /// Composite Simpson over `[a, b]` using the nodes of a uniform grid of
    /// `pts` points per period `2π/Δ`; `a` and `b` must be grid nodes.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, pts: usize, delta: f64) -> f64 {
        let h = 2.0 * PI / (delta * pts as f64);
        let n = ((b - a) / h).round() as usize;
        assert!(n % 2 == 0 && ((b - a) / h - n as f64).abs() < 1e-6);
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn autocorr_matches_quadrature() {
        let delta = 1.0;
        let p = even_partition::<f64>(16, 64, delta).unwrap();
        let pts = 1usize << 16;
        for k in [0usize, 5, 15] {
            let rho = p.basis_autocorr(k, 64, delta);
            let (c, d) = (p.centres()[k], p.widths()[k]);
            for tau in [0usize, 1, 7, 33, 63] {
                let f = |w: f64| (w * tau as f64 * delta).cos();
                let q = (simpson(f, c - d / 2.0, c + d / 2.0, pts, delta)
                    + simpson(f, -c - d / 2.0, -c + d / 2.0, pts, delta))
                    / (2.0 * PI);
                assert!(
                    (q - rho[tau]).abs() < 1e-8,
                    "k={k} tau={tau}: {q} vs {}",
                    rho[tau]
                );
            }
        }
    }
}
