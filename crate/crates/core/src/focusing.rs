//! Focused-Gaussian conversion factors (circular and elliptical), their optimizers,
//! and absolute SFG/SHG efficiency predictions.
//!
//! Both `h` functions use the difference/mean coordinates `u = s − s'`,
//! `v = (s + s')/2` over the crystal normalized to `[−1, 1]`. The circular inner
//! `v` integral has a closed form; the elliptical one is done by quadrature.

use crate::dispersion::{Material, Polarization};
use crate::error::{Error, Result};
use crate::numeric::{grid_then_golden, integrate, QuadTol};
use crate::phasematch::{sum_wavelength, SpectralLine, C};
use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;

/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocusConfig {
    pub b: f64,
    pub zeta_x: f64,
    pub zeta_y: f64,
    pub sigma: f64,
}

impl FocusConfig {
    pub fn circular(xi: f64, b: f64, sigma: f64) -> Self {
        Self { b, zeta_x: xi, zeta_y: xi, sigma }
    }

    fn validate(&self) -> Result<()> {
        for (name, z) in [("zeta_x", self.zeta_x), ("zeta_y", self.zeta_y)] {
            if !(1e-3..=1e2).contains(&z) {
                return Err(Error::InvalidParam(format!("{name} = {z} outside [1e-3, 1e2]")));
            }
        }
        if !(self.sigma.abs() <= 1e2) || !(self.b >= 0.0) {
            return Err(Error::InvalidParam(format!("sigma = {}, B = {}", self.sigma, self.b)));
        }
        Ok(())
    }
}

/// Which members of a [`FocusConfig`] were optimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Optimized {
    pub zeta: bool,
    pub sigma: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocusResult {
    pub h: f64,
    pub config: FocusConfig,
    pub optimized: Optimized,
    /// γ (W⁻¹) for SHG or ηℓ (W⁻¹) for SFG, when computed.
    pub conversion_coefficient: Option<f64>,
}

const OUTER_TOL: QuadTol = QuadTol { rel: 1e-10, abs: 1e-15, max_intervals: 20_000 };
const INNER_TOL: QuadTol = QuadTol { rel: 1e-11, abs: 1e-16, max_intervals: 4_000 };

/// Outer integration limit in `u`; the walk-off Gaussian is below e⁻⁴⁰ beyond it.
fn u_max(b: f64, zeta_x: f64) -> f64 {
    if b == 0.0 {
        2.0
    } else {
        (40f64.sqrt() / (b * zeta_x.sqrt())).min(2.0)
    }
}

fn outer(zeta_x: f64, zeta_y: f64, b: f64, sigma: f64, mut inner: impl FnMut(f64) -> Result<Complex64>) -> Result<f64> {
    let geo = (zeta_x * zeta_y).sqrt();
    let mut failure = None;
    let v = integrate(
        |u| {
            let w = Complex64::new(-b * b * zeta_x * u * u, sigma * geo * u).exp();
            match inner(u) {
                Ok(i) => w * i,
                Err(e) => {
                    failure.get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            }
        },
        0.0,
        u_max(b, zeta_x),
        OUTER_TOL,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(0.5 * geo * v.re)
}

/// Circular inner integral ∫ dv / (a² + ξ²v²) over |v| ≤ 1 − u/2, a = 1 + iξu/2.
fn circular_inner(xi: f64, u: f64) -> Complex64 {
    let c = 1.0 - 0.5 * u;
    if c <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let a = Complex64::new(1.0, 0.5 * xi * u);
    (Complex64::new(xi * c, 0.0) / a).atan() * 2.0 / (a * xi)
}

/// Circular focusing factor h(σ, B, ξ).
pub fn bk_h(config: FocusConfig) -> Result<f64> {
    config.validate()?;
    if (config.zeta_x - config.zeta_y).abs() > 1e-12 * config.zeta_x {
        return Err(Error::InvalidParam("bk_h needs zeta_x = zeta_y".into()));
    }
    let xi = config.zeta_x;
    outer(xi, xi, config.b, config.sigma, |u| Ok(circular_inner(xi, u)))
}

/// Elliptical focusing factor with caching of the σ- and B-independent inner integral.
pub struct EllipticalKernel {
    zeta_x: f64,
    zeta_y: f64,
    cache: HashMap<u64, Complex64>,
}

impl EllipticalKernel {
    pub fn new(zeta_x: f64, zeta_y: f64) -> Self {
        Self { zeta_x, zeta_y, cache: HashMap::new() }
    }

    fn inner(&mut self, u: f64) -> Result<Complex64> {
        if let Some(v) = self.cache.get(&u.to_bits()) {
            return Ok(*v);
        }
        let c = 1.0 - 0.5 * u;
        let value = if c <= 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            let (zx, zy) = (self.zeta_x, self.zeta_y);
            let ax2 = Complex64::new(1.0, 0.5 * zx * u).powi(2);
            let ay2 = Complex64::new(1.0, 0.5 * zy * u).powi(2);
            let g = |v: f64| ((ax2 + zx * zx * v * v).sqrt() * (ay2 + zy * zy * v * v).sqrt()).inv();
            integrate(g, 0.0, c, INNER_TOL)? * 2.0
        };
        self.cache.insert(u.to_bits(), value);
        Ok(value)
    }

    pub fn h(&mut self, b: f64, sigma: f64) -> Result<f64> {
        let (zx, zy) = (self.zeta_x, self.zeta_y);
        outer(zx, zy, b, sigma, |u| self.inner(u))
    }

    /// Maximizes over σ; returns (σ*, h*).
    pub fn optimize_sigma(&mut self, b: f64) -> Result<(f64, f64)> {
        grid_then_golden(|s| self.h(b, s), -0.5, 2.5, 15, 1e-7)
    }
}

/// Elliptical focusing factor; walk-off lies along x.
pub fn elliptical_h(config: FocusConfig) -> Result<f64> {
    config.validate()?;
    EllipticalKernel::new(config.zeta_x, config.zeta_y).h(config.b, config.sigma)
}

/// h maximized over σ for a circular beam; returns (σ*, h*).
pub fn bk_optimize_sigma(xi: f64, b: f64) -> Result<(f64, f64)> {
    FocusConfig::circular(xi, b, 0.0).validate()?;
    grid_then_golden(|s| bk_h(FocusConfig::circular(xi, b, s)), -0.5, 2.5, 15, 1e-7)
}

/// Elliptical h maximized over σ at fixed (ζx, ζy).
pub fn elliptical_optimize_sigma(zeta_x: f64, zeta_y: f64, b: f64) -> Result<FocusResult> {
    FocusConfig { b, zeta_x, zeta_y, sigma: 0.0 }.validate()?;
    let (sigma, h) = EllipticalKernel::new(zeta_x, zeta_y).optimize_sigma(b)?;
    Ok(FocusResult {
        h,
        config: FocusConfig { b, zeta_x, zeta_y, sigma },
        optimized: Optimized { zeta: false, sigma: true },
        conversion_coefficient: None,
    })
}

const LN_ZETA_RANGE: (f64, f64) = (-3.0, 3.0);

/// Joint maximization of the circular h over (ξ, σ).
pub fn bk_optimize(b: f64) -> Result<FocusResult> {
    if !(b >= 0.0) {
        return Err(Error::InvalidParam(format!("B = {b}")));
    }
    let mut best_sigma = 0.0;
    let (lx, h) = grid_then_golden(
        |lx| bk_optimize_sigma(lx.exp(), b).map(|(_, h)| h),
        LN_ZETA_RANGE.0,
        LN_ZETA_RANGE.1,
        24,
        1e-7,
    )?;
    let xi = lx.exp();
    let (s, h2) = bk_optimize_sigma(xi, b)?;
    if h2 >= h {
        best_sigma = s;
    }
    Ok(FocusResult {
        h: h.max(h2),
        config: FocusConfig::circular(xi, b, best_sigma),
        optimized: Optimized { zeta: true, sigma: true },
        conversion_coefficient: None,
    })
}

/// Maximization of the elliptical h over (ζx, ζy, σ) by nested golden-section search.
pub fn elliptical_optimize(b: f64) -> Result<FocusResult> {
    if !(b >= 0.0) {
        return Err(Error::InvalidParam(format!("B = {b}")));
    }
    let best_y = |lx: f64| -> Result<(f64, f64)> {
        grid_then_golden(
            |ly| elliptical_optimize_sigma(lx.exp(), ly.exp(), b).map(|r| r.h),
            LN_ZETA_RANGE.0,
            LN_ZETA_RANGE.1,
            12,
            1e-5,
        )
    };
    let (lx, _) = grid_then_golden(|lx| best_y(lx).map(|r| r.1), LN_ZETA_RANGE.0, LN_ZETA_RANGE.1, 12, 1e-5)?;
    let (ly, _) = best_y(lx)?;
    let mut r = elliptical_optimize_sigma(lx.exp(), ly.exp(), b)?;
    r.optimized.zeta = true;
    Ok(r)
}

/// Focusing parameter ℓ/b for a waist `w` in a medium of index `n`.
pub fn focusing_parameter(length: f64, wavelength: f64, waist: f64, n: f64) -> f64 {
    length * wavelength / (2.0 * PI * waist * waist * n)
}

/// Effective nonlinear coefficient used by a prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearConstants {
    /// pm/V.
    pub d_eff: f64,
    pub label: String,
}

impl NonlinearConstants {
    /// First-order QPM: d_Q = (2/π)·d₃₃.
    pub fn ppln_first_order(d33: f64) -> Self {
        let d_eff = 2.0 / PI * d33;
        Self { d_eff, label: format!("d_Q = (2/pi) d33 = {d_eff:.4} pm/V (d33 = {d33:.4} pm/V)") }
    }

    /// Type-I BBO at the magnitude-maximizing azimuth: d₂₂·cos θ.
    pub fn bbo_type1(d22: f64, theta: f64) -> Self {
        let d_eff = d22 * theta.cos();
        Self { d_eff, label: format!("d_eff = d22 cos(theta) = {d_eff:.4} pm/V (d22 = {d22:.4} pm/V)") }
    }
}

/// LiNbO₃ d₃₃ transferred from its reference SHG measurement to an SFG triple by Miller's rule.
pub fn linbo3_d33_miller(
    material: &Material,
    d33_ref: f64,
    ref_fundamental: SpectralLine,
    ref_temperature: f64,
    pump: SpectralLine,
    signal: SpectralLine,
    temperature: f64,
) -> Result<f64> {
    let chi = |l: SpectralLine, t: f64| -> Result<f64> {
        Ok(material.principal_index(Polarization::Extraordinary, l.wavelength(), t)?.powi(2) - 1.0)
    };
    let out = sum_wavelength(pump, signal);
    let ref_sh = sum_wavelength(ref_fundamental, ref_fundamental);
    let target = chi(pump, temperature)? * chi(signal, temperature)? * chi(out, temperature)?;
    let reference = chi(ref_fundamental, ref_temperature)?.powi(2) * chi(ref_sh, ref_temperature)?;
    Ok(d33_ref * target / reference)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SfgPrediction {
    /// η in %·W⁻¹·cm⁻¹ (numerically equal to W⁻¹·m⁻¹).
    pub eta: f64,
    pub p3: f64,
    pub xi_pump: f64,
    pub xi_signal: f64,
    pub xi_mean: f64,
    pub h: f64,
    pub sigma: f64,
    pub d_eff: f64,
    pub depletion_warning: bool,
}

/// Undepleted focused SFG with per-beam waists inside the crystal.
#[allow(clippy::too_many_arguments)]
pub fn sfg_predict(
    material: &Material,
    pump: SpectralLine,
    p_pump: f64,
    signal: SpectralLine,
    p_signal: f64,
    length: f64,
    temperature: f64,
    waists: (f64, f64),
    constants: &NonlinearConstants,
) -> Result<SfgPrediction> {
    if !(waists.0 > 0.0 && waists.1 > 0.0 && length > 0.0) {
        return Err(Error::InvalidParam("waists and length must be positive".into()));
    }
    let out = sum_wavelength(pump, signal);
    let n = |l: SpectralLine| material.principal_index(Polarization::Extraordinary, l.wavelength(), temperature);
    let (n1, n2, n3) = (n(pump)?, n(signal)?, n(out)?);
    let xi_pump = focusing_parameter(length, pump.wavelength(), waists.0, n1);
    let xi_signal = focusing_parameter(length, signal.wavelength(), waists.1, n2);
    let xi_mean = (xi_pump * xi_signal).sqrt();
    let (sigma, h) = bk_optimize_sigma(xi_mean, 0.0)?;
    let k1 = n1 * pump.k0();
    let k2 = n2 * signal.k0();
    let w3 = 2.0 * PI * out.frequency();
    let d = constants.d_eff * 1e-12;
    let eta = 4.0 * w3 * w3 * d * d / (PI * n1 * n2 * n3 * EPSILON_0 * C.powi(3)) * (k1 * k2 / (k1 + k2)) * h;
    let p3 = eta * length * p_pump * p_signal;
    Ok(SfgPrediction {
        eta,
        p3,
        xi_pump,
        xi_signal,
        xi_mean,
        h,
        sigma,
        d_eff: constants.d_eff,
        depletion_warning: p3 > 0.3 * (p_pump + p_signal),
    })
}

/// Single-pass SHG coefficient γ (P_SH = γP²) for in-crystal waists (w_x, w_y).
pub fn shg_gamma_predict(
    material: &Material,
    fund: SpectralLine,
    length: f64,
    b: f64,
    waists: (f64, f64),
    constants: &NonlinearConstants,
) -> Result<FocusResult> {
    let n1 = material.principal_index(Polarization::Ordinary, fund.wavelength(), 20.0)?;
    // At phase matching the SH index equals the fundamental index.
    let n2 = n1;
    let zeta_x = focusing_parameter(length, fund.wavelength(), waists.0, n1);
    let zeta_y = focusing_parameter(length, fund.wavelength(), waists.1, n1);
    let mut r = elliptical_optimize_sigma(zeta_x, zeta_y, b)?;
    let w = 2.0 * PI * fund.frequency();
    let d = constants.d_eff * 1e-12;
    let k1 = n1 * fund.k0();
    let gamma = 2.0 * w * w * d * d * k1 * length * r.h / (PI * n1 * n1 * n2 * EPSILON_0 * C.powi(3));
    r.conversion_coefficient = Some(gamma);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn plane_wave_limit() {
        let (_, h) = bk_optimize_sigma(0.01, 0.0).unwrap();
        assert!((h / 0.01 - 1.0).abs() < 0.01);
    }

    #[test]
    fn circular_reduction_at_optimum() {
        let (s, h) = bk_optimize_sigma(2.84, 0.0).unwrap();
        let e = elliptical_h(FocusConfig::circular(2.84, 0.0, s)).unwrap();
        assert!(((e - h) / h).abs() < 1e-6);
    }

    #[test]
    fn swap_symmetry_without_walkoff() {
        let a = elliptical_h(FocusConfig { b: 0.0, zeta_x: 0.7, zeta_y: 3.1, sigma: 0.6 }).unwrap();
        let b = elliptical_h(FocusConfig { b: 0.0, zeta_x: 3.1, zeta_y: 0.7, sigma: 0.6 }).unwrap();
        assert!(((a - b) / a).abs() < 1e-6);
    }

    #[test]
    fn walkoff_reduces_h() {
        let (_, h0) = bk_optimize_sigma(2.84, 0.0).unwrap();
        let (_, h1) = bk_optimize_sigma(1.39, 16.4).unwrap();
        assert!(h1 < h0);
    }

    #[test]
    fn quadrature_tolerance_is_converged() {
        let cfg = FocusConfig { b: 4.0, zeta_x: 1.3, zeta_y: 2.2, sigma: 0.7 };
        let coarse = {
            let mut k = EllipticalKernel::new(cfg.zeta_x, cfg.zeta_y);
            k.h(cfg.b, cfg.sigma).unwrap()
        };
        // Independent brute-force midpoint rule on the original (s, s') square.
        let n = 1500;
        let (zx, zy) = (cfg.zeta_x, cfg.zeta_y);
        let mut acc = Complex64::new(0.0, 0.0);
        let ds = 2.0 / n as f64;
        for i in 0..n {
            let s = -1.0 + (i as f64 + 0.5) * ds;
            for j in 0..n {
                let t = -1.0 + (j as f64 + 0.5) * ds;
                let u = s - t;
                let g = ((Complex64::new(1.0, zx * s) * Complex64::new(1.0, -zx * t)).sqrt()
                    * (Complex64::new(1.0, zy * s) * Complex64::new(1.0, -zy * t)).sqrt())
                .inv();
                acc += g * Complex64::new(-cfg.b * cfg.b * zx * u * u, cfg.sigma * (zx * zy).sqrt() * u).exp();
            }
        }
        let brute = 0.25 * (zx * zy).sqrt() * acc.re * ds * ds;
        assert!(((coarse - brute) / brute).abs() < 1e-4, "{coarse} vs {brute}");
    }

    #[test]
    fn halving_waists_scales_gamma_by_h_ratio() {
        let m = Material::bbo(&crate::constants::Constants::bundled());
        let f = SpectralLine::from_nm(626.342).unwrap();
        let k = NonlinearConstants::bbo_type1(2.2, 38.4f64.to_radians());
        let a = shg_gamma_predict(&m, f, 0.01, 16.4, (36.7e-6, 23.6e-6), &k).unwrap();
        let b = shg_gamma_predict(&m, f, 0.01, 16.4, (18.35e-6, 11.8e-6), &k).unwrap();
        // Two-point oracle: direct evaluations of the elliptical h at the implied ζ.
        let n = m.principal_index(Polarization::Ordinary, f.wavelength(), 20.0).unwrap();
        let z = |w: f64| focusing_parameter(0.01, f.wavelength(), w, n);
        let ha = elliptical_optimize_sigma(z(36.7e-6), z(23.6e-6), 16.4).unwrap().h;
        let hb = elliptical_optimize_sigma(z(18.35e-6), z(11.8e-6), 16.4).unwrap().h;
        let ratio = b.conversion_coefficient.unwrap() / a.conversion_coefficient.unwrap();
        assert!((ratio - hb / ha).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn elliptical_reduces_to_circular(xi in 0.05f64..20.0, b in 0.0f64..20.0, sigma in -1.0f64..2.0) {
            let c = bk_h(FocusConfig::circular(xi, b, sigma)).unwrap();
            let e = elliptical_h(FocusConfig::circular(xi, b, sigma)).unwrap();
            prop_assert!((e - c).abs() <= 1e-6 * c.abs().max(1e-6));
        }
    }
}
