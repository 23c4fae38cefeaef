//! Weighted and non-negative least squares for the blurred-basis fit.
//!
//! The fit minimises `Σ_ω Ī(ω)^{-2} (Ī(ω) − Σ_k a_k B̌_k(ω))²`. Rows are
//! scaled by `1/Ī`, so the weighted target is a vector of ones (up to the
//! weight floor), and columns are equilibrated to unit norm before solving.

use crate::error::{Error, Result};
use crate::estimators::SpectralEstimate;
use crate::scalar::Real;

use super::design::BasisMatrix;
use super::partition::BasisPartition;

/// Welch values below `WEIGHT_FLOOR · max Ī` are raised to it before
/// forming weights.
pub const WEIGHT_FLOOR: f64 = 1e-12;

/// Normal-matrix condition estimates above this are flagged.
pub const CONDITION_WARNING: f64 = 1e12;

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Dense<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                m.data[c * rows + r] = f(r, c);
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[c * self.rows + r]
    }

    pub fn column(&self, c: usize) -> &[T] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    fn column_mut(&mut self, c: usize) -> &mut [T] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// `A x` for a coefficient vector over all columns.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows];
        for (c, &xc) in x.iter().enumerate() {
            if xc != T::zero() {
                for (o, &a) in out.iter_mut().zip(self.column(c)) {
                    *o = *o + a * xc;
                }
            }
        }
        out
    }

    /// `Aᵀ v`.
    pub fn tr_mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.cols)
            .map(|c| {
                self.column(c)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |s, (&a, &b)| s + a * b)
            })
            .collect()
    }
}

/// Least-squares solution on a subset of columns.
#[derive(Debug, Clone)]
pub(crate) struct Subsolve<T: Real> {
    pub x: Vec<T>,
    pub rdiag_min: T,
    pub rdiag_max: T,
}

/// Householder QR least squares restricted to `cols`. Returns `None` when
/// the selected columns are numerically dependent.
pub(crate) fn lstsq_on<T: Real>(a: &Dense<T>, cols: &[usize], b: &[T]) -> Option<Subsolve<T>> {
    let m = a.nrows();
    let p = cols.len();
    if p == 0 {
        return Some(Subsolve {
            x: vec![],
            rdiag_min: T::one(),
            rdiag_max: T::one(),
        });
    }
    if p > m {
        return None;
    }
    let mut w = Dense::zeros(m, p);
    for (j, &c) in cols.iter().enumerate() {
        w.column_mut(j).copy_from_slice(a.column(c));
    }
    let mut rhs = b.to_vec();
    let mut rdiag = vec![T::zero(); p];
    let two = T::lit(2.0);
    let mut v = vec![T::zero(); m];
    for j in 0..p {
        let col = w.column(j);
        let norm = col[j..].iter().fold(T::zero(), |s, &x| s + x * x).sqrt();
        if norm == T::zero() {
            return None;
        }
        let alpha = if col[j] > T::zero() { -norm } else { norm };
        let len = m - j;
        v[..len].copy_from_slice(&col[j..]);
        v[0] = v[0] - alpha;
        let vnorm2 = v[..len].iter().fold(T::zero(), |s, &x| s + x * x);
        if vnorm2 > T::zero() {
            for c in j + 1..p {
                let target = &mut w.column_mut(c)[j..];
                let dot = v[..len]
                    .iter()
                    .zip(target.iter())
                    .fold(T::zero(), |s, (&x, &y)| s + x * y);
                let f = two * dot / vnorm2;
                for (t, &vi) in target.iter_mut().zip(&v[..len]) {
                    *t = *t - f * vi;
                }
            }
            let target = &mut rhs[j..];
            let dot = v[..len]
                .iter()
                .zip(target.iter())
                .fold(T::zero(), |s, (&x, &y)| s + x * y);
            let f = two * dot / vnorm2;
            for (t, &vi) in target.iter_mut().zip(&v[..len]) {
                *t = *t - f * vi;
            }
        }
        rdiag[j] = alpha;
    }
    let rmax = rdiag.iter().fold(T::zero(), |s, r| s.max(r.abs()));
    let rmin = rdiag.iter().fold(T::infinity(), |s, r| s.min(r.abs()));
    let tol = T::epsilon() * T::from_usize_lossy(m.max(p)) * T::lit(10.0);
    if !(rmin > tol * rmax) {
        return None;
    }
    let mut x = vec![T::zero(); p];
    for j in (0..p).rev() {
        let mut s = rhs[j];
        for (c, &xc) in x.iter().enumerate().skip(j + 1) {
            s = s - w.get(j, c) * xc;
        }
        x[j] = s / rdiag[j];
    }
    Some(Subsolve {
        x,
        rdiag_min: rmin,
        rdiag_max: rmax,
    })
}

/// Cross products `AᵀA` and `Aᵀb`.
struct Gram<T: Real> {
    k: usize,
    g: Vec<T>,
    atb: Vec<T>,
}

impl<T: Real> Gram<T> {
    fn new(a: &Dense<T>, b: &[T]) -> Self {
        let k = a.ncols();
        let mut g = vec![T::zero(); k * k];
        for i in 0..k {
            for j in 0..=i {
                let v = a
                    .column(i)
                    .iter()
                    .zip(a.column(j))
                    .fold(T::zero(), |s, (&x, &y)| s + x * y);
                g[i * k + j] = v;
                g[j * k + i] = v;
            }
        }
        Self {
            k,
            g,
            atb: a.tr_mul_vec(b),
        }
    }

    fn at(&self, i: usize, j: usize) -> T {
        self.g[i * self.k + j]
    }

    /// `Aᵀ(b − Ax)`.
    fn dual(&self, x: &[T]) -> Vec<T> {
        let k = self.k;
        (0..k)
            .map(|i| {
                let gx = self.g[i * k..(i + 1) * k]
                    .iter()
                    .zip(x)
                    .fold(T::zero(), |s, (&g, &v)| s + g * v);
                self.atb[i] - gx
            })
            .collect()
    }
}

/// A new column whose Cholesky pivot falls below this fraction of its
/// squared norm is treated as dependent on the passive set.
const PIVOT_TOL: f64 = 1e-13;

/// Cholesky factor of `AᵀA` restricted to an ordered column set, updated
/// one column at a time.
struct PassiveFactor<T: Real> {
    cols: Vec<usize>,
    /// Row `i` of the lower-triangular factor, `i + 1` entries.
    rows: Vec<Vec<T>>,
}

impl<T: Real> PassiveFactor<T> {
    fn new() -> Self {
        Self {
            cols: Vec::new(),
            rows: Vec::new(),
        }
    }

    /// Appends column `j`; returns false and leaves the factor unchanged
    /// when `j` is numerically dependent on the current set.
    fn push(&mut self, gram: &Gram<T>, j: usize) -> bool {
        let p = self.cols.len();
        let mut row = vec![T::zero(); p + 1];
        for i in 0..p {
            let mut s = gram.at(self.cols[i], j);
            for q in 0..i {
                s = s - self.rows[i][q] * row[q];
            }
            row[i] = s / self.rows[i][i];
        }
        let gjj = gram.at(j, j);
        let d2 = row[..p].iter().fold(gjj, |s, &v| s - v * v);
        if !(d2 > gjj * T::lit(PIVOT_TOL)) {
            return false;
        }
        row[p] = d2.sqrt();
        self.rows.push(row);
        self.cols.push(j);
        true
    }

    fn pop(&mut self) {
        self.cols.pop();
        self.rows.pop();
    }

    /// Deletes the column at position `pos`, restoring triangular form
    /// with Givens rotations.
    fn remove(&mut self, pos: usize) {
        self.cols.remove(pos);
        self.rows.remove(pos);
        for c in pos..self.rows.len() {
            let (a, b) = (self.rows[c][c], self.rows[c][c + 1]);
            let r = a.hypot(b);
            if r > T::zero() {
                let (cs, sn) = (a / r, b / r);
                for i in c..self.rows.len() {
                    let (x, y) = (self.rows[i][c], self.rows[i][c + 1]);
                    self.rows[i][c] = cs * x + sn * y;
                    self.rows[i][c + 1] = cs * y - sn * x;
                }
            }
            self.rows[c].pop();
        }
    }

    /// Solution of the normal equations on the current set, scattered to
    /// a full-length vector.
    fn solve(&self, gram: &Gram<T>) -> Vec<T> {
        let p = self.cols.len();
        let mut y: Vec<T> = self.cols.iter().map(|&j| gram.atb[j]).collect();
        for i in 0..p {
            for q in 0..i {
                y[i] = y[i] - self.rows[i][q] * y[q];
            }
            y[i] = y[i] / self.rows[i][i];
        }
        for i in (0..p).rev() {
            for q in i + 1..p {
                y[i] = y[i] - self.rows[q][i] * y[q];
            }
            y[i] = y[i] / self.rows[i][i];
        }
        scatter(gram.k, &self.cols, &y)
    }
}

/// Lawson–Hanson active-set solution of `min ‖Ax − b‖` subject to `x ≥ 0`.
///
/// `warm` seeds the passive set with its strictly positive entries. Inner
/// solves use an updated Cholesky factor of `AᵀA`; the final passive-set
/// solution is recomputed by QR.
pub fn nnls<T: Real>(a: &Dense<T>, b: &[T], warm: Option<&[T]>) -> Result<Vec<T>> {
    let k = a.ncols();
    let gram = Gram::new(a, b);
    let mut factor = PassiveFactor::new();
    let mut x = vec![T::zero(); k];
    let mut pending: Option<Vec<T>> = None;
    if let Some(w) = warm {
        for (j, &v) in w.iter().enumerate() {
            if v > T::zero() && factor.push(&gram, j) {
                x[j] = v;
            }
        }
        if !factor.cols.is_empty() {
            pending = Some(factor.solve(&gram));
        }
    }
    let bnorm = b.iter().fold(T::zero(), |s, &v| s + v * v).sqrt();
    let dual_tol = T::epsilon()
        * T::from_usize_lossy(a.nrows().max(k))
        * T::lit(10.0)
        * bnorm.max(T::min_positive_value());
    let max_iter = 10 * k + 50;
    let mut iter = 0;

    loop {
        // Move towards the passive-set solution, dropping variables that
        // would turn negative.
        while let Some(z) = pending.take() {
            iter += 1;
            if iter > max_iter {
                return Err(Error::Numeric(format!(
                    "NNLS did not converge in {max_iter} iterations"
                )));
            }
            if factor.cols.iter().all(|&j| z[j] > T::zero()) {
                x = z;
                break;
            }
            let mut alpha = T::one();
            for &j in &factor.cols {
                if z[j] <= T::zero() {
                    let denom = x[j] - z[j];
                    let t = if denom > T::zero() {
                        x[j] / denom
                    } else {
                        T::zero()
                    };
                    alpha = alpha.min(t);
                }
            }
            for &j in &factor.cols {
                x[j] = x[j] + alpha * (z[j] - x[j]);
            }
            let tiny = T::epsilon() * T::lit(16.0);
            let mut pos = 0;
            while pos < factor.cols.len() {
                let j = factor.cols[pos];
                if x[j] <= tiny * z[j].abs().max(x[j].abs()) || x[j] <= T::zero() {
                    x[j] = T::zero();
                    factor.remove(pos);
                } else {
                    pos += 1;
                }
            }
            pending = Some(factor.solve(&gram));
        }

        // KKT check on the active set.
        let dual = gram.dual(&x);
        let mut passive = vec![false; k];
        factor.cols.iter().for_each(|&j| passive[j] = true);
        let mut candidates: Vec<usize> = (0..k)
            .filter(|&j| !passive[j] && dual[j] > dual_tol)
            .collect();
        candidates.sort_by(|&i, &j| {
            dual[j]
                .partial_cmp(&dual[i])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut accepted = false;
        for j in candidates {
            if !factor.push(&gram, j) {
                continue;
            }
            let z = factor.solve(&gram);
            if z[j] > T::zero() {
                pending = Some(z);
                accepted = true;
                break;
            }
            factor.pop();
        }
        if !accepted {
            break;
        }
    }

    let mut set = factor.cols.clone();
    set.sort_unstable();
    if let Some(sol) = lstsq_on(a, &set, b) {
        if sol.x.iter().all(|&v| v > T::zero()) {
            return Ok(scatter(k, &set, &sol.x));
        }
    }
    Ok(x)
}

fn scatter<T: Real>(k: usize, set: &[usize], values: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); k];
    for (&j, &v) in set.iter().zip(values) {
        out[j] = v;
    }
    out
}

fn smallest_singular_values<T: Real>(a: &Dense<T>) -> (f64, f64) {
    let m = nalgebra::DMatrix::from_fn(a.nrows(), a.ncols(), |r, c| a.get(r, c).to_f64_lossy());
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    // A wide matrix has ncols − nrows implicit zero singular values.
    let min = if a.ncols() > a.nrows() {
        0.0
    } else {
        sv.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    (min, max)
}

/// Coefficients of the blurred-basis fit.
#[derive(Debug, Clone, PartialEq)]
pub struct DebiasFit<T: Real> {
    coeffs: Vec<T>,
    partition: BasisPartition<T>,
    nonneg: bool,
    residual: T,
    condition: f64,
}

impl<T: Real> DebiasFit<T> {
    /// Basis coefficients `â_k`.
    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn partition(&self) -> &BasisPartition<T> {
        &self.partition
    }

    pub fn nonneg(&self) -> bool {
        self.nonneg
    }

    /// Weighted sum of squared residuals.
    pub fn residual(&self) -> T {
        self.residual
    }

    /// Condition estimate of the column-equilibrated weighted normal
    /// matrix; infinite when the design is rank deficient.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn is_ill_conditioned(&self) -> bool {
        !(self.condition <= CONDITION_WARNING)
    }

    /// Debiased estimate `â_k B_k(ω_k)` at each basis centre.
    pub fn estimates(&self) -> Vec<T> {
        let p = &self.partition;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &a)| a * p.basis_value(k, p.centres()[k]))
            .collect()
    }
}

/// Weighted (optionally non-negative) least-squares fit of the blurred
/// bases to a Welch estimate.
pub fn wls_fit<T: Real>(
    welch_est: &SpectralEstimate<T>,
    design: &BasisMatrix<T>,
    nonneg: bool,
) -> Result<DebiasFit<T>> {
    let target = aligned_values(welch_est, design)?;
    let rows = target.len();
    let cols = design.ncols();
    let peak = target.iter().fold(T::zero(), |s, &v| s.max(v));
    if peak == T::zero() {
        return Ok(DebiasFit {
            coeffs: vec![T::zero(); cols],
            partition: design.partition().clone(),
            nonneg,
            residual: T::zero(),
            condition: f64::NAN,
        });
    }
    let floor = peak * T::lit(WEIGHT_FLOOR);
    let denom: Vec<T> = target.iter().map(|&v| v.max(floor)).collect();
    let b: Vec<T> = target.iter().zip(&denom).map(|(&v, &d)| v / d).collect();
    let mut a = Dense::from_fn(rows, cols, |r, c| design.get(r, c) / denom[r]);
    let mut scale = vec![T::one(); cols];
    for (c, s) in scale.iter_mut().enumerate() {
        let norm = a
            .column(c)
            .iter()
            .fold(T::zero(), |acc, &v| acc + v * v)
            .sqrt();
        if norm > T::zero() {
            *s = norm;
            for v in a.column_mut(c) {
                *v = *v / norm;
            }
        }
    }

    let all: Vec<usize> = (0..cols).collect();
    let full = lstsq_on(&a, &all, &b);
    let condition = match &full {
        Some(sol) => {
            let r = (sol.rdiag_max / sol.rdiag_min).to_f64_lossy();
            r * r
        }
        None => f64::INFINITY,
    };
    let y = match (nonneg, full) {
        (false, Some(sol)) => sol.x,
        (false, None) => {
            let (smin, smax) = smallest_singular_values(&a);
            return Err(Error::IllConditioned {
                smallest_singular_value: smin,
                condition: if smin > 0.0 {
                    (smax / smin).powi(2)
                } else {
                    f64::INFINITY
                },
            });
        }
        (true, Some(sol)) if sol.x.iter().all(|&v| v >= T::zero()) => sol.x,
        (true, Some(sol)) => nnls(&a, &b, Some(&sol.x))?,
        (true, None) => nnls(&a, &b, None)?,
    };
    let fitted = a.mul_vec(&y);
    let residual = b
        .iter()
        .zip(&fitted)
        .fold(T::zero(), |s, (&bi, &fi)| s + (bi - fi) * (bi - fi));
    Ok(DebiasFit {
        coeffs: y.iter().zip(&scale).map(|(&v, &s)| v / s).collect(),
        partition: design.partition().clone(),
        nonneg,
        residual,
        condition,
    })
}

fn aligned_values<T: Real>(est: &SpectralEstimate<T>, design: &BasisMatrix<T>) -> Result<Vec<T>> {
    let (len, bins) = match (est.grid().fourier_len(), est.grid().bins()) {
        (Some(len), Some(bins)) => (len, bins),
        _ => return Err(Error::invalid("Welch estimate must live on a Fourier grid")),
    };
    if len != design.segment_len() {
        return Err(Error::invalid(format!(
            "Welch estimate has segment length {len}, design has {}",
            design.segment_len()
        )));
    }
    let mut by_bin = vec![None; len];
    for (&b, &v) in bins.iter().zip(est.values()) {
        by_bin[b] = Some(v);
    }
    design
        .rows()
        .bins()
        .expect("design rows are Fourier frequencies")
        .iter()
        .map(|&b| match by_bin[b] {
            Some(v) if v.is_finite() && v >= T::zero() => Ok(v),
            Some(v) => Err(Error::invalid(format!(
                "Welch value {v} at bin {b} is not a finite non-negative number"
            ))),
            None => Err(Error::invalid(format!(
                "Welch estimate lacks fit frequency bin {b}"
            ))),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dense(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Dense<f64> {
        let vals: Vec<f64> = (0..rows * cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        Dense::from_fn(rows, cols, |r, c| vals[c * rows + r])
    }

    #[test]
    fn qr_solves_square_system() {
        let a = Dense::from_fn(3, 3, |r, c| {
            [[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]][r][c]
        });
        let x_true = [1.0f64, -2.0, 0.5];
        let b = a.mul_vec(&x_true);
        let sol = lstsq_on(&a, &[0, 1, 2], &b).unwrap();
        for (x, t) in sol.x.iter().zip(x_true) {
            assert!((x - t).abs() < 1e-14);
        }
    }

    #[test]
    fn qr_detects_dependence() {
        let a = Dense::from_fn(4, 3, |r, c| {
            if c == 2 {
                (r as f64) * 2.0
            } else {
                (r + c) as f64
            }
        });
        // Column 2 = 2 × column 0.
        assert!(lstsq_on(&a, &[0, 2], &[1.0; 4]).is_none());
        assert!(lstsq_on(&a, &[0, 1], &[1.0; 4]).is_some());
        assert!(lstsq_on(&a, &[0, 1, 2], &[1.0; 4]).is_none());
    }

    #[test]
    fn nnls_feasible_unconstrained_is_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_dense(10, 3, &mut rng);
        let b = a.mul_vec(&[0.5, 1.0, 2.0]);
        let x = nnls(&a, &b, None).unwrap();
        for (v, t) in x.iter().zip([0.5, 1.0, 2.0]) {
            assert!((v - t).abs() < 1e-12);
        }
    }

    #[test]
    fn nnls_clamps_negative_direction() {
        // min (x - (-1))² + (y - 2)² with x, y >= 0 gives (0, 2).
        let a = Dense::from_fn(2, 2, |r, c| if r == c { 1.0 } else { 0.0 });
        let x = nnls(&a, &[-1.0, 2.0], None).unwrap();
        assert_eq!(x, vec![0.0, 2.0]);
        let x = nnls(&a, &[-1.0, 2.0], Some(&[-1.0, 2.0])).unwrap();
        assert_eq!(x, vec![0.0, 2.0]);
    }

    #[test]
    fn nnls_handles_wide_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_dense(4, 7, &mut rng);
        let b: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = nnls(&a, &b, None).unwrap();
        assert!(x.iter().all(|&v| v >= 0.0));
        let resid: Vec<f64> = b.iter().zip(a.mul_vec(&x)).map(|(b, f)| b - f).collect();
        let dual = a.tr_mul_vec(&resid);
        for (j, &d) in dual.iter().enumerate() {
            if x[j] > 0.0 {
                assert!(d.abs() < 1e-10);
            } else {
                assert!(d < 1e-10);
            }
        }
    }
}
