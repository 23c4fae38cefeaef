//! Modified Bessel function of the second kind for real order.
//!
//! The order is split as `ν = μ + N` with `|μ| ≤ 1/2`. `K_μ` and `K_{μ+1}`
//! come from Temme's series for `x < 2` and Steed's continued fraction
//! for `x ≥ 2`; forward recurrence then reaches `K_ν`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const MAX_ITER: usize = 10_000;
const EPS: f64 = 1e-16;

/// Chebyshev series for `Γ₁(μ) = (1/Γ(1−μ) − 1/Γ(1+μ))/(2μ)` and
/// `Γ₂(μ) = (1/Γ(1−μ) + 1/Γ(1+μ))/2` in the variable `8μ² − 1`.
const C1: [f64; 7] = [
    -1.142022680371168e0,
    6.5165112670737e-3,
    3.087090173086e-4,
    -3.4706269649e-6,
    6.9437664e-9,
    3.67795e-11,
    -1.356e-13,
];
const C2: [f64; 8] = [
    1.843740587300905e0,
    -7.68528408447867e-2,
    1.2719271366546e-3,
    -4.9717367042e-6,
    -3.31261198e-8,
    2.423096e-10,
    -1.702e-13,
    -1.49e-15,
];

fn chebyshev(coeffs: &[f64], y: f64) -> f64 {
    let y2 = 2.0 * y;
    let (mut d, mut dd) = (0.0, 0.0);
    for &c in coeffs[1..].iter().rev() {
        let sv = d;
        d = y2 * d - dd + c;
        dd = sv;
    }
    y * d - dd + 0.5 * coeffs[0]
}

/// `(Γ₁, Γ₂, 1/Γ(1+μ), 1/Γ(1−μ))` for `|μ| ≤ 1/2`.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let y = 8.0 * mu * mu - 1.0;
    let g1 = chebyshev(&C1, y);
    let g2 = chebyshev(&C2, y);
    (g1, g2, g2 - mu * g1, g2 + mu * g1)
}

/// `(K_μ(x), K_{μ+1}(x))` for `|μ| ≤ 1/2`, `0 < x < 2`.
fn temme_series(mu: f64, x: f64) -> Result<(f64, f64)> {
    let half = 0.5 * x;
    let pimu = PI * mu;
    let fact = if pimu.abs() < EPS {
        1.0
    } else {
        pimu / pimu.sin()
    };
    let d = -half.ln();
    let e = mu * d;
    let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
    let (g1, g2, gampl, gammi) = temme_gammas(mu);
    let mut ff = fact * (g1 * e.cosh() + g2 * fact2 * d);
    let mut sum = ff;
    let ee = e.exp();
    let mut p = 0.5 * ee / gampl;
    let mut q = 0.5 / (ee * gammi);
    let mut c = 1.0;
    let dsq = half * half;
    let mut sum1 = p;
    let mu2 = mu * mu;
    for i in 1..=MAX_ITER {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - mu2);
        c *= dsq / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * ff;
        sum += del;
        sum1 += c * (p - fi * ff);
        if del.abs() < sum.abs() * EPS {
            return Ok((sum, sum1 * 2.0 / x));
        }
    }
    Err(Error::Numeric(format!(
        "Bessel K series did not converge at x = {x}"
    )))
}

/// `(K_μ(x), K_{μ+1}(x))` for `|μ| ≤ 1/2`, `x ≥ 2`.
fn steed_fraction(mu: f64, x: f64) -> Result<(f64, f64)> {
    let mu2 = mu * mu;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu2;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    let mut converged = false;
    for i in 2..=MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "Bessel K continued fraction did not converge at x = {x}"
        )));
    }
    h *= a1;
    let k = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    Ok((k, k * (mu + x + 0.5 - h) / x))
}

/// `K_ν(x)` for real `ν ≥ 0` and `x > 0`.
pub fn bessel_k(nu: f64, x: f64) -> Result<f64> {
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(Error::invalid(format!(
            "Bessel order must be finite and >= 0, got {nu}"
        )));
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::invalid(format!(
            "Bessel argument must be finite and > 0, got {x}"
        )));
    }
    let steps = (nu + 0.5).floor() as usize;
    let mu = nu - steps as f64;
    let (mut k, mut k1) = if x < 2.0 {
        temme_series(mu, x)?
    } else {
        steed_fraction(mu, x)?
    };
    for i in 1..=steps {
        let next = 2.0 * (mu + i as f64) / x * k1 + k;
        k = k1;
        k1 = next;
    }
    if k.is_finite() {
        Ok(k)
    } else {
        Err(Error::Numeric(format!("K_{nu}({x}) overflowed")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn by_quadrature(nu: f64, x: f64) -> f64 {
        // K_ν(x) = ∫_0^∞ exp(−x cosh t) cosh(νt) dt, Simpson on [0, T].
        let upper = (2.0 * (60.0 / x).max(1.0)).ln() + 2.0;
        let n = 20_000;
        let h = upper / n as f64;
        let f = |t: f64| (-x * t.cosh()).exp() * (nu * t).cosh();
        let mut s = f(0.0) + f(upper);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn half_integer_orders_are_elementary() {
        for &x in &[0.01, 0.3, 1.0, 1.99, 2.0, 5.0, 30.0] {
            let k12 = (PI / (2.0 * x)).sqrt() * (-x).exp();
            let k32 = k12 * (1.0 + 1.0 / x);
            let k52 = k12 * (1.0 + 3.0 / x + 3.0 / (x * x));
            for (nu, want) in [(0.5, k12), (1.5, k32), (2.5, k52)] {
                let got = bessel_k(nu, x).unwrap();
                assert!(
                    (got - want).abs() < 1e-13 * want,
                    "K_{nu}({x}) = {got}, want {want}"
                );
            }
        }
    }

    #[test]
    fn temme_gammas_match_gamma_function() {
        for &mu in &[-0.5, -0.3, 0.1, 1.0 / 3.0, 0.5] {
            let (g1, g2, gampl, gammi) = temme_gammas(mu);
            let ip = 1.0 / libm::tgamma(1.0 + mu);
            let im = 1.0 / libm::tgamma(1.0 - mu);
            assert!((gampl - ip).abs() < 1e-14);
            assert!((gammi - im).abs() < 1e-14);
            assert!((g2 - 0.5 * (im + ip)).abs() < 1e-14);
            assert!((g1 - (im - ip) / (2.0 * mu)).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_integral_representation() {
        for &nu in &[0.0, 0.2, 1.0 / 3.0, 4.0 / 3.0, 2.7] {
            for &x in &[0.05, 0.5, 1.5, 2.5, 8.0] {
                let got = bessel_k(nu, x).unwrap();
                let want = by_quadrature(nu, x);
                assert!(
                    (got - want).abs() < 1e-10 * want,
                    "K_{nu}({x}) = {got}, want {want}"
                );
            }
        }
    }

    #[test]
    fn continuous_across_method_switch() {
        let below = bessel_k(4.0 / 3.0, 2.0 - 1e-12).unwrap();
        let above = bessel_k(4.0 / 3.0, 2.0).unwrap();
        assert!((below - above).abs() < 1e-11 * above);
    }

    #[test]
    fn small_argument_limit() {
        // x^ν K_ν(x) → Γ(ν) 2^{ν−1} as x → 0.
        let nu = 4.0 / 3.0;
        let x: f64 = 1e-6;
        let lhs = x.powf(nu) * bessel_k(nu, x).unwrap();
        let rhs = libm::tgamma(nu) * 2f64.powf(nu - 1.0);
        assert!((lhs - rhs).abs() < 1e-8 * rhs);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(bessel_k(1.0, 0.0).is_err());
        assert!(bessel_k(-1.0, 1.0).is_err());
        assert!(bessel_k(1.0, f64::NAN).is_err());
    }
}
