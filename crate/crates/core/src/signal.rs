//! Time series, data tapers, frequency grids and Welch segmentation plans.
//!
//! Frequencies are angular (rad per unit time) throughout. The spectral
//! window of a taper `h` is `H(ω) = Δ |Σ_t h_t e^{-iωtΔ}|²`, normalised so
//! that `(1/2π) ∫ H(ω) dω = 1` over `[-π/Δ, π/Δ]` for unit-energy tapers.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fft::{neumaier_sum, RealDft};
use crate::scalar::Real;

/// Uniformly sampled real record.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T: Real> {
    samples: Vec<T>,
    delta: T,
}

impl<T: Real> TimeSeries<T> {
    pub fn new(samples: Vec<T>, delta: T) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::invalid(format!(
                "time series needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if !(delta.is_finite() && delta > T::zero()) {
            return Err(Error::invalid(format!(
                "sampling interval must be finite and positive, got {delta}"
            )));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Self { samples, delta })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Nyquist frequency `π/Δ`.
    pub fn nyquist(&self) -> T {
        T::PI() / self.delta
    }

    /// Copy of the series with its sample mean removed.
    pub fn demeaned(&self) -> Self {
        let mean = neumaier_sum(self.samples.iter().copied()) / T::from_usize_lossy(self.len());
        Self {
            samples: self.samples.iter().map(|&x| x - mean).collect(),
            delta: self.delta,
        }
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaperKind {
    Boxcar,
    Hamming,
    Hann,
}

impl TaperKind {
    pub const ALL: [TaperKind; 3] = [TaperKind::Boxcar, TaperKind::Hamming, TaperKind::Hann];

    pub fn name(self) -> &'static str {
        match self {
            TaperKind::Boxcar => "boxcar",
            TaperKind::Hamming => "hamming",
            TaperKind::Hann => "hann",
        }
    }
}

impl fmt::Display for TaperKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaperKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "boxcar" | "rectangular" | "rect" => Ok(TaperKind::Boxcar),
            "hamming" => Ok(TaperKind::Hamming),
            "hann" | "hanning" => Ok(TaperKind::Hann),
            other => Err(Error::invalid(format!(
                "unknown taper '{other}' (expected boxcar, hamming or hann)"
            ))),
        }
    }
}

/// Unit-energy data taper of length `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Taper<T: Real> {
    coeffs: Vec<T>,
    kind: TaperKind,
}

impl<T: Real> Taper<T> {
    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn kind(&self) -> TaperKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// Builds a taper of the given kind, normalised to `Σ h_t² = 1`.
///
/// Hamming is `0.54 − 0.46 cos(2πt/(L−1))` and Hann is
/// `0.5 (1 − cos(2πt/(L−1)))` before normalisation.
pub fn make_taper<T: Real>(kind: TaperKind, len: usize) -> Result<Taper<T>> {
    if len < 2 {
        return Err(Error::invalid(format!(
            "taper length must be >= 2, got {len}"
        )));
    }
    if kind == TaperKind::Hann && len < 3 {
        return Err(Error::invalid(
            "a Hann taper of length 2 is identically zero",
        ));
    }
    let coeffs = match kind {
        TaperKind::Boxcar => vec![T::one() / T::from_usize_lossy(len).sqrt(); len],
        TaperKind::Hamming | TaperKind::Hann => {
            let (a0, a1) = match kind {
                TaperKind::Hamming => (0.54, 0.46),
                _ => (0.5, 0.5),
            };
            let denom = (len - 1) as f64;
            let raw: Vec<f64> = (0..len)
                .map(|t| a0 - a1 * (2.0 * std::f64::consts::PI * t as f64 / denom).cos())
                .collect();
            let norm = raw.iter().map(|h| h * h).sum::<f64>().sqrt();
            raw.into_iter().map(|h| T::lit(h / norm)).collect()
        }
    };
    Ok(Taper { coeffs, kind })
}

/// Taper autocorrelation `κ(τ) = Σ_{t=0}^{L−τ−1} h_t h_{t+τ}` for `τ = 0..L−1`.
pub fn taper_autocorr<T: Real>(taper: &Taper<T>) -> Vec<T> {
    let h = taper.coeffs();
    let len = h.len();
    if len <= 2048 {
        (0..len)
            .map(|tau| neumaier_sum((0..len - tau).map(|t| h[t] * h[t + tau])))
            .collect()
    } else {
        // |DFT(h, 2L)|² is the DFT of the full autocorrelation sequence.
        let n = 2 * len;
        let mut padded = h.to_vec();
        padded.resize(n, T::zero());
        let mut dft = RealDft::new(n);
        let power: Vec<T> = dft
            .transform(&padded)
            .iter()
            .map(|c| c.norm_sqr())
            .collect();
        // Power is real and even, so a forward transform equals n × inverse.
        let scale = T::one() / T::from_usize_lossy(n);
        dft.transform(&power)[..len]
            .iter()
            .map(|c| c.re * scale)
            .collect()
    }
}

/// Spectral window of `taper` at a single frequency.
pub fn spectral_window_at<T: Real>(taper: &Taper<T>, omega: T, delta: T) -> T {
    let (mut re, mut im) = (T::zero(), T::zero());
    for (t, &h) in taper.coeffs().iter().enumerate() {
        let phase = omega * T::from_usize_lossy(t) * delta;
        re = re + h * phase.cos();
        im = im - h * phase.sin();
    }
    delta * (re * re + im * im)
}

/// Spectral window `H(ω) = Δ |Σ_t h_t e^{-iωtΔ}|²` over a frequency grid.
pub fn spectral_window<T: Real>(
    taper: &Taper<T>,
    grid: &FrequencyGrid<T>,
    delta: T,
) -> Result<Vec<T>> {
    check_in_band(grid.omegas(), delta)?;
    Ok(grid
        .omegas()
        .iter()
        .map(|&w| spectral_window_at(taper, w, delta))
        .collect())
}

/// Fejér kernel `(Δ/n) sin²(nωΔ/2) / sin²(ωΔ/2)`, the spectral window of
/// the boxcar taper. At the removable singularity the limit `Δn` is used.
pub fn fejer_kernel<T: Real>(n: usize, omega: T, delta: T) -> T {
    let nf = T::from_usize_lossy(n);
    let half = omega * delta / T::lit(2.0);
    let den = half.sin();
    if den.abs() < T::epsilon().sqrt() * T::lit(1e-4) {
        return delta * nf;
    }
    let num = (nf * half).sin();
    delta / nf * (num * num) / (den * den)
}

fn check_in_band<T: Real>(omegas: &[T], delta: T) -> Result<()> {
    let nyq = T::PI() / delta;
    let tol = nyq * T::epsilon() * T::lit(16.0);
    if let Some(w) = omegas.iter().find(|w| w.abs() > nyq + tol) {
        return Err(Error::invalid(format!(
            "frequency {w} outside [-π/Δ, π/Δ] = ±{nyq}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sided {
    OneSided,
    TwoSided,
}

/// Strictly increasing set of angular frequencies.
///
/// Grids built by [`fourier_grid`] remember their DFT bin indices so that
/// estimators can take the fast path.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid<T: Real> {
    omegas: Vec<T>,
    sided: Sided,
    delta: T,
    fourier: Option<FourierBins>,
}

#[derive(Debug, Clone, PartialEq)]
struct FourierBins {
    len: usize,
    bins: Vec<usize>,
}

impl<T: Real> FrequencyGrid<T> {
    /// Arbitrary grid. Frequencies must be strictly increasing and within
    /// the band of `delta`.
    pub fn from_omegas(omegas: Vec<T>, sided: Sided, delta: T) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::invalid("empty frequency grid"));
        }
        if omegas.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("frequency grid must be strictly increasing"));
        }
        check_in_band(&omegas, delta)?;
        if sided == Sided::OneSided && omegas[0] < T::zero() {
            return Err(Error::invalid(
                "one-sided grid contains negative frequencies",
            ));
        }
        Ok(Self {
            omegas,
            sided,
            delta,
            fourier: None,
        })
    }

    pub fn omegas(&self) -> &[T] {
        &self.omegas
    }

    pub fn sided(&self) -> Sided {
        self.sided
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// DFT length this grid was built for, if it is a Fourier grid.
    pub fn fourier_len(&self) -> Option<usize> {
        self.fourier.as_ref().map(|f| f.len)
    }

    /// DFT bin index of each frequency, if this is a Fourier grid.
    pub fn bins(&self) -> Option<&[usize]> {
        self.fourier.as_ref().map(|f| f.bins.as_slice())
    }

    /// Keeps only the points for which `keep` returns true.
    pub fn retain(&self, mut keep: impl FnMut(T) -> bool) -> Self {
        let mut omegas = Vec::new();
        let mut bins = Vec::new();
        for (i, &w) in self.omegas.iter().enumerate() {
            if keep(w) {
                omegas.push(w);
                if let Some(f) = &self.fourier {
                    bins.push(f.bins[i]);
                }
            }
        }
        Self {
            omegas,
            sided: self.sided,
            delta: self.delta,
            fourier: self
                .fourier
                .as_ref()
                .map(|f| FourierBins { len: f.len, bins }),
        }
    }
}

/// Fourier frequencies `2π(ΔL)^{-1} m`.
///
/// Two-sided: `m = −⌊L/2⌋ … ⌈L/2⌉−1`. One-sided: `m = 1 … ⌊L/2⌋`, which
/// excludes zero and includes Nyquist only for even `L`.
pub fn fourier_grid<T: Real>(len: usize, delta: T, sided: Sided) -> Result<FrequencyGrid<T>> {
    if len < 2 {
        return Err(Error::invalid(format!(
            "grid length must be >= 2, got {len}"
        )));
    }
    if !(delta.is_finite() && delta > T::zero()) {
        return Err(Error::invalid(
            "sampling interval must be finite and positive",
        ));
    }
    let ml = len as i64;
    let range: Vec<i64> = match sided {
        Sided::TwoSided => (-(ml / 2)..(ml + 1) / 2).collect(),
        Sided::OneSided => (1..=ml / 2).collect(),
    };
    let step = T::lit(2.0) * T::PI() / (delta * T::from_usize_lossy(len));
    let omegas = range
        .iter()
        .map(|&m| {
            // Exactly π/Δ at Nyquist.
            if 2 * m.abs() == ml {
                T::PI() / delta * T::lit(m.signum() as f64)
            } else {
                step * T::lit(m as f64)
            }
        })
        .collect();
    let bins = range.iter().map(|&m| m.rem_euclid(ml) as usize).collect();
    Ok(FrequencyGrid {
        omegas,
        sided,
        delta,
        fourier: Some(FourierBins { len, bins }),
    })
}

/// Welch segmentation: `M` segments of length `L` starting at `mS`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentPlan {
    n: usize,
    segment_len: usize,
    segments: usize,
    overlap: f64,
    shift: usize,
}

impl SegmentPlan {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Segment length `L`.
    pub fn segment_len(&self) -> usize {
        self.segment_len
    }

    /// Number of segments `M`.
    pub fn segments(&self) -> usize {
        self.segments
    }

    /// Realised overlap `(L − S)/L`.
    pub fn overlap(&self) -> f64 {
        self.overlap
    }

    /// Shift `S` between segment starts.
    pub fn shift(&self) -> usize {
        self.shift
    }

    /// Samples actually used, `(M−1)S + L`; the rest are dropped.
    pub fn used(&self) -> usize {
        (self.segments - 1) * self.shift + self.segment_len
    }

    pub fn segment_ranges(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        (0..self.segments).map(move |m| m * self.shift..m * self.shift + self.segment_len)
    }

    /// Plan with exactly `segments` segments, using the smallest record
    /// length that realises it.
    pub fn with_segments(segment_len: usize, segments: usize, overlap: f64) -> Result<Self> {
        if segments == 0 {
            return Err(Error::invalid("number of segments must be >= 1"));
        }
        let shift = shift_for(segment_len, overlap)?;
        let n = (segments - 1) * shift + segment_len;
        segment_plan(n, segment_len, overlap)
    }
}

fn shift_for(segment_len: usize, overlap: f64) -> Result<usize> {
    if segment_len < 2 {
        return Err(Error::invalid(format!(
            "segment length must be >= 2, got {segment_len}"
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::invalid(format!(
            "overlap must lie in [0, 1), got {overlap}"
        )));
    }
    Ok(((segment_len as f64 * (1.0 - overlap)).round() as usize).max(1))
}

/// Segmentation for a record of `n` samples with segment length `L` and
/// nominal overlap `p`.
///
/// `S = max(1, round(L(1−p)))`, `M = ⌊(n−L)/S⌋ + 1`; trailing samples past
/// `(M−1)S + L` are not used.
pub fn segment_plan(n: usize, segment_len: usize, overlap: f64) -> Result<SegmentPlan> {
    let shift = shift_for(segment_len, overlap)?;
    if segment_len > n {
        return Err(Error::invalid(format!(
            "segment length {segment_len} exceeds series length {n}"
        )));
    }
    let segments = (n - segment_len) / shift + 1;
    Ok(SegmentPlan {
        n,
        segment_len,
        segments,
        overlap: (segment_len - shift) as f64 / segment_len as f64,
        shift,
    })
}
