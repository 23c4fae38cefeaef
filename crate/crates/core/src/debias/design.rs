//! Blurred bases: each basis pushed through the segment spectral window.

use crate::error::{Error, Result};
use crate::fft::RealDft;
use crate::scalar::Real;
use crate::signal::{fourier_grid, taper_autocorr, FrequencyGrid, Sided, Taper, TaperKind};

use super::partition::BasisPartition;

/// Expected tapered periodogram on every DFT bin of length `L = acv.len()`:
///
/// `E[I(ω_j)] = 2Δ Re{Σ_{τ=0}^{L−1} κ(τ) γ(τ) e^{−iω_jτΔ}} − Δ γ(0)`,
/// with `ω_j = 2πj/(LΔ)`.
pub fn blur_autocovariance<T: Real>(acv: &[T], kappa: &[T], delta: T) -> Result<Vec<T>> {
    if acv.len() != kappa.len() {
        return Err(Error::invalid(format!(
            "autocovariance has {} lags but taper autocorrelation has {}",
            acv.len(),
            kappa.len()
        )));
    }
    if acv.len() < 2 {
        return Err(Error::invalid("need at least two lags"));
    }
    let mut dft = RealDft::new(acv.len());
    Ok(blur_with(&mut dft, acv, kappa, delta))
}

fn blur_with<T: Real>(dft: &mut RealDft<T>, acv: &[T], kappa: &[T], delta: T) -> Vec<T> {
    let two = T::lit(2.0);
    let g0 = acv[0];
    dft.transform_weighted(acv, kappa)
        .iter()
        .map(|c| delta * (two * c.re - g0))
        .collect()
}

/// Blurred basis `B̌_k` on a Fourier grid of length `rho.len()`, with
/// rounding-level negatives clamped to zero.
pub fn expected_basis<T: Real>(
    rho: &[T],
    kappa: &[T],
    grid: &FrequencyGrid<T>,
    delta: T,
) -> Result<Vec<T>> {
    let bins = match (grid.fourier_len(), grid.bins()) {
        (Some(len), Some(bins)) if len == rho.len() => bins,
        _ => {
            return Err(Error::invalid(format!(
                "blurred bases are evaluated on the Fourier grid of length {}",
                rho.len()
            )))
        }
    };
    let all = blur_autocovariance(rho, kappa, delta)?;
    Ok(bins.iter().map(|&b| all[b].max(T::zero())).collect())
}

/// Row-major matrix of blurred bases: one row per fit frequency, one
/// column per basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisMatrix<T: Real> {
    rows: FrequencyGrid<T>,
    cols: usize,
    data: Vec<T>,
    taper: TaperKind,
    segment_len: usize,
    partition: BasisPartition<T>,
}

impl<T: Real> BasisMatrix<T> {
    pub fn partition(&self) -> &BasisPartition<T> {
        &self.partition
    }

    /// Fit frequencies.
    pub fn rows(&self) -> &FrequencyGrid<T> {
        &self.rows
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<T> {
        (0..self.nrows()).map(|r| self.get(r, col)).collect()
    }

    pub fn taper(&self) -> TaperKind {
        self.taper
    }

    pub fn segment_len(&self) -> usize {
        self.segment_len
    }
}

/// Builds the design matrix for `part` on the one-sided Fourier grid of
/// length `L`, excluding zero and Nyquist and any frequency outside the
/// band the partition covers.
pub fn build_design<T: Real>(
    part: &BasisPartition<T>,
    taper: &Taper<T>,
    segment_len: usize,
    delta: T,
) -> Result<BasisMatrix<T>> {
    if taper.len() != segment_len {
        return Err(Error::invalid(format!(
            "taper length {} does not match segment length {segment_len}",
            taper.len()
        )));
    }
    let nyquist = T::PI() / delta;
    let tol = nyquist * T::lit(1e-9);
    if part.upper_edge() > nyquist + tol {
        return Err(Error::invalid(format!(
            "partition reaches {} beyond the Nyquist frequency {nyquist}",
            part.upper_edge()
        )));
    }
    let (lo, hi) = (part.lower_edge() - tol, part.upper_edge() + tol);
    let rows = fourier_grid(segment_len, delta, Sided::OneSided)?
        .retain(|w| w < nyquist - tol && w >= lo && w <= hi);
    if rows.is_empty() {
        return Err(Error::invalid(
            "no Fourier frequencies fall inside the partition band",
        ));
    }
    let bins = rows.bins().expect("Fourier grid").to_vec();

    let kappa = taper_autocorr(taper);
    let cols = part.len();
    let mut data = vec![T::zero(); bins.len() * cols];
    let mut dft = RealDft::new(segment_len);
    for k in 0..cols {
        let rho = part.basis_autocorr(k, segment_len, delta);
        let blurred = blur_with(&mut dft, &rho, &kappa, delta);
        for (r, &b) in bins.iter().enumerate() {
            data[r * cols + k] = blurred[b].max(T::zero());
        }
    }
    Ok(BasisMatrix {
        rows,
        cols,
        data,
        taper: taper.kind(),
        segment_len,
        partition: part.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::debias::partition::{even_partition, log_partition};
    use crate::signal::{make_taper, spectral_window_at};
    use std::f64::consts::PI;

    #[test]
    fn white_noise_stays_flat() {
        for kind in TaperKind::ALL {
            let taper = make_taper::<f64>(kind, 32).unwrap();
            let kappa = taper_autocorr(&taper);
            let mut acv = vec![0.0; 32];
            acv[0] = 2.5;
            let grid = fourier_grid(32, 0.5, Sided::TwoSided).unwrap();
            let col = expected_basis(&acv, &kappa, &grid, 0.5).unwrap();
            for v in col {
                assert!((v - 1.25).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn expected_basis_rejects_length_mismatch() {
        let taper = make_taper::<f64>(TaperKind::Boxcar, 16).unwrap();
        let kappa = taper_autocorr(&taper);
        let grid = fourier_grid(16, 1.0, Sided::OneSided).unwrap();
        assert!(expected_basis(&[1.0; 8], &kappa, &grid, 1.0).is_err());
        assert!(blur_autocovariance(&[1.0; 8], &kappa, 1.0).is_err());
    }

    #[test]
    fn design_shape_and_sign() {
        for len in [16usize, 17] {
            let taper = make_taper::<f64>(TaperKind::Hamming, len).unwrap();
            let part = even_partition(4, len, 1.0).unwrap();
            let d = build_design(&part, &taper, len, 1.0).unwrap();
            assert_eq!(d.nrows(), (len - 1) / 2);
            assert_eq!(d.ncols(), 4);
            assert!((0..d.nrows()).all(|r| d.row(r).iter().all(|&v| v >= 0.0)));
        }
    }

    #[test]
    fn full_band_basis_blurs_to_flat() {
        let taper = make_taper::<f64>(TaperKind::Boxcar, 64).unwrap();
        let part = even_partition(1, 64, 1.0).unwrap();
        let d = build_design(&part, &taper, 64, 1.0).unwrap();
        let col = d.column(0);
        for v in &col {
            assert!((v - 1.0).abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn out_of_band_rows_are_dropped() {
        let taper = make_taper::<f64>(TaperKind::Boxcar, 64).unwrap();
        let part = log_partition(3, 0.5, 2.0).unwrap();
        let d = build_design(&part, &taper, 64, 1.0).unwrap();
        assert!(d.rows().omegas().iter().all(|&w| (0.5..=2.0).contains(&w)));
        let too_wide = log_partition(3, 0.5, 4.0).unwrap();
        assert!(build_design(&too_wide, &taper, 64, 1.0).is_err());
    }

    #[test]
    fn column_mass_is_preserved() {
        // (1/2π)∫ B̌_k over the band equals (1/2π)∫ B_k = δ_k/π. The blurred
        // basis is a trigonometric polynomial of degree < L, so the
        // L-point rectangle rule over a period integrates it exactly.
        let len = 64;
        let delta = 1.0;
        for kind in TaperKind::ALL {
            let taper = make_taper::<f64>(kind, len).unwrap();
            let kappa = taper_autocorr(&taper);
            let part = even_partition(16, len, delta).unwrap();
            let grid = fourier_grid(len, delta, Sided::TwoSided).unwrap();
            for k in 0..16 {
                let rho = part.basis_autocorr(k, len, delta);
                let col = expected_basis(&rho, &kappa, &grid, delta).unwrap();
                let mass = col.iter().sum::<f64>() * (2.0 * PI / len as f64) / (2.0 * PI);
                let want = part.widths()[k] / PI;
                assert!(
                    (mass - want).abs() < 1e-3 * want,
                    "{kind} k={k}: {mass} vs {want}"
                );
            }
        }
    }

    #[test]
    fn blurred_basis_matches_direct_convolution() {
        // Convolution (1/2π)∫ B(λ) H(ω−λ) dλ by Simpson's rule on each cell.
        let len = 32;
        let delta = 1.0;
        let taper = make_taper::<f64>(TaperKind::Hamming, len).unwrap();
        let kappa = taper_autocorr(&taper);
        let part = even_partition(4, len, delta).unwrap();
        let grid = fourier_grid(len, delta, Sided::OneSided).unwrap();
        let n = 4096;
        for k in 0..4 {
            let col =
                expected_basis(&part.basis_autocorr(k, len, delta), &kappa, &grid, delta).unwrap();
            let (c, d) = (part.centres()[k], part.widths()[k]);
            for (&w, &v) in grid.omegas().iter().zip(&col) {
                let mut total = 0.0;
                for (a, b) in [(c - d / 2.0, c + d / 2.0), (-c - d / 2.0, -c + d / 2.0)] {
                    let h = (b - a) / n as f64;
                    let f = |x: f64| spectral_window_at(&taper, w - x, delta);
                    let mut s = f(a) + f(b);
                    for i in 1..n {
                        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
                    }
                    total += s * h / 3.0;
                }
                let direct = total / (2.0 * PI);
                assert!(
                    (direct - v).abs() < 1e-8 * direct.max(1e-3),
                    "k={k} w={w}: {direct} vs {v}"
                );
            }
        }
    }
}
