//! Fourier-space operators on the uniform periodic grid `α_j = -π + 2πj/n`.
//!
//! Every operator acts through a multiplier on the discrete Fourier coefficients.
//! The Nyquist mode has no well-defined derivative and is dropped by `deriv`,
//! `hilbert` and `lambda_op`, which keeps `hilbert(deriv(f)) == lambda_op(f)` exact.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Real samples of a periodic function on the uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

/// Fourier coefficients `c_k` of `f(α) = Σ c_k e^{ikα}`, stored in transform order
/// (index `j` holds wavenumber `j` for `j <= n/2`, `j - n` above).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    coefficients: Vec<C64>,
}

pub fn check_size(n: usize) -> Result<()> {
    if n >= 16 && n.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::GridSize(n))
    }
}

/// Grid node `α_j`.
pub fn node(n: usize, j: usize) -> f64 {
    -PI + 2.0 * PI * j as f64 / n as f64
}

pub fn nodes(n: usize) -> Vec<f64> {
    (0..n).map(|j| node(n, j)).collect()
}

/// Signed wavenumber held at transform index `j`.
pub fn wavenumber(n: usize, j: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_size(values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(GridFunction { values })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..n).map(|j| f(node(n, j))).collect())
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n])
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.n() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum::of_real(&self.values)
    }

    /// Evaluate the trigonometric interpolant at an arbitrary parameter.
    pub fn interpolate(&self, alpha: f64) -> f64 {
        self.spectrum().evaluate(alpha).re
    }
}

impl Spectrum {
    pub fn of_real(values: &[f64]) -> Self {
        let mut buf: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
        Self::of_complex_in_place(&mut buf);
        Spectrum { coefficients: buf }
    }

    pub fn of_complex(values: &[C64]) -> Self {
        let mut buf = values.to_vec();
        Self::of_complex_in_place(&mut buf);
        Spectrum { coefficients: buf }
    }

    fn of_complex_in_place(buf: &mut [C64]) {
        let n = buf.len();
        fft(buf, false);
        let scale = 1.0 / n as f64;
        // α_0 = -π contributes the phase (-1)^k.
        for (j, c) in buf.iter_mut().enumerate() {
            let sign = if wavenumber(n, j) % 2 == 0 { 1.0 } else { -1.0 };
            *c *= scale * sign;
        }
    }

    pub fn from_coefficients(coefficients: Vec<C64>) -> Result<Self> {
        check_size(coefficients.len())?;
        Ok(Spectrum { coefficients })
    }

    pub fn n(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [C64] {
        &mut self.coefficients
    }

    /// Coefficient for wavenumber `k`, `-n/2 < k <= n/2`.
    pub fn coefficient(&self, k: i64) -> C64 {
        let n = self.n() as i64;
        assert!(k > -n / 2 && k <= n / 2, "wavenumber {k} out of range");
        self.coefficients[k.rem_euclid(n) as usize]
    }

    pub fn to_complex_values(&self) -> Vec<C64> {
        let n = self.n();
        let mut buf = self.coefficients.clone();
        for (j, c) in buf.iter_mut().enumerate() {
            if wavenumber(n, j) % 2 != 0 {
                *c = -*c;
            }
        }
        fft(&mut buf, true);
        buf
    }

    pub fn to_real_values(&self) -> Vec<f64> {
        self.to_complex_values().into_iter().map(|c| c.re).collect()
    }

    /// Evaluate the band-limited interpolant; the Nyquist term is taken as a cosine.
    pub fn evaluate(&self, alpha: f64) -> C64 {
        let n = self.n();
        let mut acc = self.coefficients[0];
        let e1 = C64::new(alpha.cos(), alpha.sin());
        let mut ek = e1;
        for k in 1..n / 2 {
            acc += self.coefficients[k] * ek + self.coefficients[n - k] * ek.conj();
            ek *= e1;
        }
        let half = (n / 2) as f64;
        acc + self.coefficients[n / 2] * (half * alpha).cos()
    }

    /// Value, first and second derivative of the interpolant at `alpha`. The Nyquist
    /// term enters the value only, matching the grid derivative.
    pub fn evaluate_with_derivatives(&self, alpha: f64) -> [C64; 3] {
        let n = self.n();
        let mut v = self.coefficients[0];
        let mut d1 = C64::new(0.0, 0.0);
        let mut d2 = C64::new(0.0, 0.0);
        let e1 = C64::new(alpha.cos(), alpha.sin());
        let mut ek = e1;
        for k in 1..n / 2 {
            let kf = k as f64;
            let p = self.coefficients[k] * ek;
            let m = self.coefficients[n - k] * ek.conj();
            v += p + m;
            d1 += (p - m) * C64::new(0.0, kf);
            d2 -= (p + m) * (kf * kf);
            ek *= e1;
        }
        let half = (n / 2) as f64;
        [v + self.coefficients[n / 2] * (half * alpha).cos(), d1, d2]
    }

    fn max_modulus(&self) -> f64 {
        self.coefficients.iter().fold(0.0, |m, c| m.max(c.norm()))
    }
}

/// In-place radix-2 transform; `inverse` flips the exponent sign and does not rescale.
pub fn fft(buf: &mut [C64], inverse: bool) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    if n < 2 {
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let twiddles: Vec<C64> = (0..n / 2)
        .map(|k| {
            let theta = sign * 2.0 * PI * k as f64 / n as f64;
            C64::new(theta.cos(), theta.sin())
        })
        .collect();
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let a = buf[start + k];
                let b = buf[start + k + half] * twiddles[k * step];
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

/// Apply a Fourier multiplier (given as a function of the signed wavenumber) to complex samples.
pub fn apply_multiplier(values: &[C64], multiplier: impl Fn(i64) -> C64) -> Vec<C64> {
    let n = values.len();
    let mut buf = values.to_vec();
    fft(&mut buf, false);
    let scale = 1.0 / n as f64;
    for (j, c) in buf.iter_mut().enumerate() {
        *c *= multiplier(wavenumber(n, j)) * scale;
    }
    fft(&mut buf, true);
    buf
}

fn apply_real(f: &GridFunction, multiplier: impl Fn(i64) -> C64) -> GridFunction {
    let vals: Vec<C64> = f.values.iter().map(|&v| C64::new(v, 0.0)).collect();
    let out = apply_multiplier(&vals, multiplier);
    GridFunction {
        values: out.into_iter().map(|c| c.re).collect(),
    }
}

fn resolved(n: usize, k: i64) -> bool {
    k.unsigned_abs() < (n / 2) as u64
}

pub fn deriv_multiplier(n: usize) -> impl Fn(i64) -> C64 {
    move |k| {
        if resolved(n, k) {
            C64::new(0.0, k as f64)
        } else {
            C64::new(0.0, 0.0)
        }
    }
}

pub fn hilbert_multiplier(n: usize) -> impl Fn(i64) -> C64 {
    move |k| {
        if resolved(n, k) {
            C64::new(0.0, -(k.signum() as f64))
        } else {
            C64::new(0.0, 0.0)
        }
    }
}

pub fn deriv(f: &GridFunction) -> GridFunction {
    apply_real(f, deriv_multiplier(f.n()))
}

pub fn hilbert(f: &GridFunction) -> GridFunction {
    apply_real(f, hilbert_multiplier(f.n()))
}

pub fn lambda_op(f: &GridFunction) -> GridFunction {
    let n = f.n();
    apply_real(f, move |k| {
        if resolved(n, k) {
            C64::new(k.unsigned_abs() as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Spectral derivative of complex samples (both components of a curve at once).
pub fn deriv_complex(values: &[C64]) -> Vec<C64> {
    apply_multiplier(values, deriv_multiplier(values.len()))
}

/// Hilbert transform applied to real and imaginary parts separately.
pub fn hilbert_complex(values: &[C64]) -> Vec<C64> {
    apply_multiplier(values, hilbert_multiplier(values.len()))
}

/// Periodic antiderivative of `f - mean(f)`, normalized to zero mean.
pub fn antiderivative(f: &GridFunction) -> GridFunction {
    let n = f.n();
    apply_real(f, move |k| {
        if k == 0 || !resolved(n, k) {
            C64::new(0.0, 0.0)
        } else {
            C64::new(0.0, -1.0 / k as f64)
        }
    })
}

/// `sqrt(‖f‖² + ‖∂^order f‖²)` with L² norms over one period; order 0 gives `‖f‖`.
pub fn sobolev_norm(f: &GridFunction, order: u32) -> f64 {
    let spec = f.spectrum();
    let n = f.n();
    let mut l2 = 0.0;
    let mut dm = 0.0;
    for (j, c) in spec.coefficients.iter().enumerate() {
        let k = wavenumber(n, j);
        let p = c.norm_sqr();
        l2 += p;
        if order > 0 && resolved(n, k) {
            dm += (k.unsigned_abs() as f64).powi(2 * order as i32) * p;
        }
    }
    (2.0 * PI * (l2 + dm)).sqrt()
}

/// Relative hard-threshold filter returning the filtered spectrum.
pub fn filter_spectrum(spec: &Spectrum, threshold: f64) -> Spectrum {
    let cut = threshold * spec.max_modulus();
    let mut out = spec.clone();
    for c in out.coefficients.iter_mut() {
        if c.norm() < cut {
            *c = C64::new(0.0, 0.0);
        }
    }
    out
}

/// Zero every Fourier coefficient whose modulus is below `threshold × max modulus`.
pub fn filter(f: &GridFunction, threshold: f64) -> GridFunction {
    if threshold <= 0.0 {
        return f.clone();
    }
    let spec = f.spectrum();
    let filtered = filter_spectrum(&spec, threshold);
    if filtered == spec {
        return f.clone();
    }
    GridFunction {
        values: filtered.to_real_values(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(n: usize, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::from_fn(n, f).unwrap()
    }

    fn max_diff(a: &GridFunction, b: &GridFunction) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn rejects_bad_sizes() {
        assert_eq!(GridFunction::new(vec![0.0; 100]), Err(Error::GridSize(100)));
        assert_eq!(GridFunction::new(vec![0.0; 8]), Err(Error::GridSize(8)));
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert_eq!(GridFunction::new(v), Err(Error::NonFinite(3)));
    }

    #[test]
    fn transform_round_trip() {
        let f = gf(64, |a| (a.sin()).exp() + 0.3 * (5.0 * a).cos());
        let back = f.spectrum().to_real_values();
        for (x, y) in f.values().iter().zip(&back) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn coefficients_follow_the_alpha_convention() {
        let f = gf(32, |a| a.cos() + 2.0 * (3.0 * a).sin());
        let s = f.spectrum();
        assert!((s.coefficient(1) - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((s.coefficient(3) - C64::new(0.0, -1.0)).norm() < 1e-15);
        assert!((f.interpolate(0.123) - (0.123f64.cos() + 2.0 * 0.369f64.sin())).abs() < 1e-13);
    }

    #[test]
    fn derivative_examples() {
        let d = deriv(&gf(64, |a| (3.0 * a).sin()));
        assert!(max_diff(&d, &gf(64, |a| 3.0 * (3.0 * a).cos())) < 1e-12);
        assert!(deriv(&gf(64, |_| 1.0)).max_abs() < 1e-15);
        let d = deriv(&gf(64, |a| a.sin().exp()));
        assert!(max_diff(&d, &gf(64, |a| a.cos() * a.sin().exp())) < 1e-10);
    }

    #[test]
    fn hilbert_and_lambda_examples() {
        let h = hilbert(&gf(64, |a| (3.0 * a).cos()));
        assert!(max_diff(&h, &gf(64, |a| (3.0 * a).sin())) < 1e-12);
        assert!(hilbert(&gf(64, |_| 1.0)).max_abs() < 1e-15);
        let l = lambda_op(&gf(64, |a| a.cos()));
        assert!(max_diff(&l, &gf(64, |a| a.cos())) < 1e-12);
        assert!(lambda_op(&gf(64, |_| 1.0)).max_abs() < 1e-15);
    }

    #[test]
    fn antiderivative_inverts_deriv() {
        let f = gf(64, |a| (2.0 * a).cos() + 0.5 * a.sin() + 3.0);
        let g = antiderivative(&f);
        let back = deriv(&g);
        assert!(max_diff(&back, &gf(64, |a| (2.0 * a).cos() + 0.5 * a.sin())) < 1e-13);
        assert!(g.mean().abs() < 1e-15);
    }

    #[test]
    fn sobolev_examples() {
        assert_eq!(sobolev_norm(&gf(32, |_| 0.0), 3), 0.0);
        assert!((sobolev_norm(&gf(32, |a| a.cos()), 0) - PI.sqrt()).abs() < 1e-13);
        let want = (65.0 * PI).sqrt();
        assert!((sobolev_norm(&gf(32, |a| (2.0 * a).cos()), 3) - want).abs() < 1e-12);
    }

    #[test]
    fn filter_examples() {
        let f = gf(64, |a| a.cos() + 1e-15 * (20.0 * a).cos());
        assert_eq!(filter(&f, 0.0), f);
        let spec = filter_spectrum(&f.spectrum(), 1e-13);
        assert_eq!(spec.coefficient(20), C64::new(0.0, 0.0));
        assert_eq!(spec.coefficient(-20), C64::new(0.0, 0.0));
        let g = filter(&f, 1e-13);
        assert!(max_diff(&g, &gf(64, |a| a.cos())) < 1e-15);
    }

    #[test]
    fn nyquist_mode_is_dropped_by_derivatives() {
        let f = gf(16, |a| (8.0 * a).cos());
        assert!(deriv(&f).max_abs() < 1e-14);
        assert!(hilbert(&f).max_abs() < 1e-14);
        assert!(lambda_op(&f).max_abs() < 1e-14);
        assert!((sobolev_norm(&f, 0) - (2.0 * PI).sqrt()).abs() < 1e-12);
    }
}
