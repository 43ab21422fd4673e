//! Spectral arithmetic, birefringent (type-I) and quasi phase matching, walk-off.

use crate::dispersion::{extraordinary_index_at_angle, refractive_index, Material, MaterialId, Polarization, RaySpec};
use crate::error::{Error, Result};
use crate::numeric::{bisect, scan_bracket};
use std::f64::consts::{FRAC_PI_2, PI};

/// Speed of light in vacuum, m/s.
pub const C: f64 = 299_792_458.0;

/// A vacuum wavelength with its frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralLine {
    wavelength: f64,
    frequency: f64,
}

impl SpectralLine {
    pub fn from_wavelength(meters: f64) -> Result<Self> {
        if !(meters > 0.0 && meters.is_finite()) {
            return Err(Error::InvalidParam(format!("wavelength {meters} m")));
        }
        Ok(Self { wavelength: meters, frequency: C / meters })
    }

    pub fn from_nm(nm: f64) -> Result<Self> {
        Self::from_wavelength(nm * 1e-9)
    }

    pub fn from_frequency(hz: f64) -> Result<Self> {
        if !(hz > 0.0 && hz.is_finite()) {
            return Err(Error::InvalidParam(format!("frequency {hz} Hz")));
        }
        Ok(Self { wavelength: C / hz, frequency: hz })
    }

    /// Vacuum wavelength, m.
    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn nm(&self) -> f64 {
        self.wavelength * 1e9
    }

    /// Frequency, Hz.
    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn thz(&self) -> f64 {
        self.frequency * 1e-12
    }

    /// Vacuum wavenumber 2π/λ, rad/m.
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.wavelength
    }
}

pub fn sum_wavelength(pump: SpectralLine, signal: SpectralLine) -> SpectralLine {
    let inv = 1.0 / pump.wavelength + 1.0 / signal.wavelength;
    SpectralLine { wavelength: 1.0 / inv, frequency: pump.frequency + signal.frequency }
}

pub fn second_harmonic(fund: SpectralLine) -> SpectralLine {
    SpectralLine { wavelength: fund.wavelength / 2.0, frequency: fund.frequency * 2.0 }
}

/// ν_uv − ν_ref in GHz.
pub fn uv_detuning(uv: SpectralLine, reference: SpectralLine) -> f64 {
    (uv.frequency - reference.frequency) * 1e-9
}

/// Visible wavelength whose second harmonic sits 80 GHz above the Be⁺ D1 line.
pub const D1_ANCHOR_NM: f64 = 626.342;
/// Detuning of the anchor's harmonic from D1, GHz.
pub const D1_ANCHOR_DETUNING_GHZ: f64 = 80.0;

/// The Be⁺ 2s ²S₁/₂ → 2p ²P₁/₂ line, anchored to the 626.342 nm operating point.
pub fn be_d1_reference() -> SpectralLine {
    let nu = 2.0 * C / (D1_ANCHOR_NM * 1e-9) - D1_ANCHOR_DETUNING_GHZ * 1e9;
    SpectralLine { wavelength: C / nu, frequency: nu }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cut {
    Angle { theta: f64, phi: f64, brewster_faces: bool },
    Poled { period: f64, channel_width: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrystalSpec {
    pub material: Material,
    /// Length, m.
    pub length: f64,
    pub cut: Cut,
    /// Operating temperature, °C.
    pub temperature: f64,
}

impl CrystalSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0) {
            return Err(Error::InvalidParam("crystal length must be positive".into()));
        }
        match self.cut {
            Cut::Angle { theta, .. } if !(0.0..=FRAC_PI_2).contains(&theta) => {
                Err(Error::InvalidParam("cut angle outside [0, pi/2]".into()))
            }
            Cut::Poled { period, .. } if !(period > 0.0) => {
                Err(Error::InvalidParam("poling period must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

const BBO_TEMPERATURE: f64 = 20.0;

/// Type-I (ooe) phase-matching angle for SHG of `fundamental`.
pub fn type1_phasematch_angle(material: &Material, fundamental: SpectralLine) -> Result<f64> {
    if material.id != MaterialId::Bbo {
        return Err(Error::InvalidParam("angle phase matching needs a birefringent cut material".into()));
    }
    let sh = second_harmonic(fundamental);
    let t = BBO_TEMPERATURE;
    let n_fund = material.principal_index(Polarization::Ordinary, fundamental.wavelength, t)?;
    let no_sh = material.principal_index(Polarization::Ordinary, sh.wavelength, t)?;
    let ne_sh = material.principal_index(Polarization::Extraordinary, sh.wavelength, t)?;
    if ne_sh > n_fund || no_sh < n_fund {
        return Err(Error::NoPhaseMatch { nm: fundamental.nm() });
    }
    let mismatch = |th: f64| extraordinary_index_at_angle(no_sh, ne_sh, th) - n_fund;
    let (lo, hi) = scan_bracket(mismatch, 0.0, FRAC_PI_2, 200).ok_or(Error::NoPhaseMatch { nm: fundamental.nm() })?;
    bisect(mismatch, lo, hi, 1e-15)
}

pub fn brewster_angle(n: f64) -> f64 {
    n.atan()
}

/// Poynting walk-off of the extraordinary SH wave at angle `theta`.
pub fn walkoff_angle(material: &Material, theta: f64, sh: SpectralLine) -> Result<f64> {
    let t = BBO_TEMPERATURE;
    let n_o = material.principal_index(Polarization::Ordinary, sh.wavelength, t)?;
    let n_e = material.principal_index(Polarization::Extraordinary, sh.wavelength, t)?;
    let n = extraordinary_index_at_angle(n_o, n_e, theta);
    let tan_rho = 0.5 * n * n * (1.0 / (n_e * n_e) - 1.0 / (n_o * n_o)).abs() * (2.0 * theta).sin();
    Ok(tan_rho.atan())
}

/// B = ½ρ√(k₁ℓ).
pub fn walkoff_parameter_b(rho: f64, k1: f64, length: f64) -> f64 {
    0.5 * rho * (k1 * length).sqrt()
}

fn ne_linbo3(material: &Material, line: SpectralLine, temperature: f64) -> Result<f64> {
    refractive_index(material, RaySpec::extraordinary(FRAC_PI_2), line.wavelength, temperature)
}

/// Bulk mismatch k₃ − k₁ − k₂ for extraordinary waves, rad/m.
pub fn bulk_mismatch(material: &Material, pump: SpectralLine, signal: SpectralLine, temperature: f64) -> Result<f64> {
    let out = sum_wavelength(pump, signal);
    let n1 = ne_linbo3(material, pump, temperature)?;
    let n2 = ne_linbo3(material, signal, temperature)?;
    let n3 = ne_linbo3(material, out, temperature)?;
    Ok(n3 * out.k0() - n1 * pump.k0() - n2 * signal.k0())
}

/// First-order QPM mismatch Δk = k₃ − k₁ − k₂ − 2π/Λ, rad/m.
pub fn qpm_mismatch(
    material: &Material,
    pump: SpectralLine,
    signal: SpectralLine,
    temperature: f64,
    period: f64,
) -> Result<f64> {
    Ok(bulk_mismatch(material, pump, signal, temperature)? - 2.0 * PI / period)
}

/// Poling period that phase matches at `temperature`.
pub fn qpm_period(material: &Material, pump: SpectralLine, signal: SpectralLine, temperature: f64) -> Result<f64> {
    Ok(2.0 * PI / bulk_mismatch(material, pump, signal, temperature)?)
}

fn temperature_band(material: &Material) -> (f64, f64) {
    material.band_celsius.unwrap_or((20.0, 250.0))
}

pub fn qpm_phasematch_temperature(
    material: &Material,
    pump: SpectralLine,
    signal: SpectralLine,
    period: f64,
) -> Result<f64> {
    let (lo, hi) = temperature_band(material);
    let steps = (hi - lo).round().max(1.0) as usize;
    let dk = |t: f64| qpm_mismatch(material, pump, signal, t, period).unwrap_or(f64::NAN);
    let (a, b) = scan_bracket(dk, lo, hi, steps).ok_or(Error::NoRoot { lo, hi })?;
    let t = bisect(dk, a, b, 1e-12)?;
    let residual = dk(t).abs();
    if residual > 1e-3 {
        return Err(Error::NoConvergence { residual });
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpmTuningCurve {
    /// (temperature °C, normalized efficiency).
    pub samples: Vec<(f64, f64)>,
    pub fwhm: f64,
    pub peak_temperature: f64,
}

pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Temperature tuning curve sinc²(Δk ℓ/2) around the phase-match temperature.
pub fn temperature_acceptance(
    material: &Material,
    pump: SpectralLine,
    signal: SpectralLine,
    period: f64,
    length: f64,
    n_samples: usize,
) -> Result<QpmTuningCurve> {
    let t0 = qpm_phasematch_temperature(material, pump, signal, period)?;
    let (tlo, thi) = temperature_band(material);
    let eff = |t: f64| -> f64 {
        match qpm_mismatch(material, pump, signal, t, period) {
            Ok(dk) => sinc(0.5 * dk * length).powi(2),
            Err(_) => 0.0,
        }
    };
    let edge = |dir: f64| -> Result<f64> {
        let mut d = 1e-3;
        while eff(t0 + dir * d) >= 0.5 {
            d *= 2.0;
            if t0 + dir * d < tlo || t0 + dir * d > thi {
                return Err(Error::NoRoot { lo: tlo, hi: thi });
            }
        }
        let x = bisect(|x| eff(t0 + dir * x) - 0.5, 0.0, d, 1e-12)?;
        Ok(t0 + dir * x)
    };
    let upper = edge(1.0)?;
    let lower = edge(-1.0)?;
    let fwhm = upper - lower;
    let n = n_samples.max(2);
    let span = 2.0 * fwhm;
    let samples = (0..n)
        .map(|i| {
            let t = t0 - span + 2.0 * span * i as f64 / (n - 1) as f64;
            (t, eff(t))
        })
        .collect();
    Ok(QpmTuningCurve { samples, fwhm, peak_temperature: t0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::Constants;
    use proptest::prelude::*;

    fn bbo() -> Material {
        Material::bbo(&Constants::bundled())
    }

    fn ln() -> Material {
        Material::congruent_linbo3(&Constants::bundled())
    }

    fn lines() -> (SpectralLine, SpectralLine) {
        (SpectralLine::from_nm(1051.140).unwrap(), SpectralLine::from_nm(1549.850).unwrap())
    }

    #[test]
    fn sum_frequency_of_operating_lines() {
        let (p, s) = lines();
        assert!((sum_wavelength(p, s).nm() - 626.342).abs() < 1e-3);
        assert_eq!(sum_wavelength(p, s), sum_wavelength(s, p));
        let x = SpectralLine::from_nm(1252.684).unwrap();
        assert!((sum_wavelength(x, x).nm() - 626.342).abs() < 1e-12);
    }

    #[test]
    fn harmonic_halves() {
        let l = SpectralLine::from_nm(626.119).unwrap();
        assert!((second_harmonic(l).nm() - 313.0595).abs() < 1e-12);
    }

    #[test]
    fn d1_anchor_detuning() {
        let uv = second_harmonic(SpectralLine::from_nm(626.342).unwrap());
        let d = uv_detuning(uv, be_d1_reference());
        assert!((d - 80.0).abs() < 1e-6);
        assert_eq!(uv_detuning(uv, uv), 0.0);
        assert_eq!(uv_detuning(be_d1_reference(), uv), -d);
    }

    #[test]
    fn phasematch_angle_residual_and_cutoff() {
        let m = bbo();
        let f = SpectralLine::from_nm(626.342).unwrap();
        let th = type1_phasematch_angle(&m, f).unwrap();
        let sh = second_harmonic(f);
        let n = refractive_index(&m, RaySpec::extraordinary(th), sh.wavelength(), 20.0).unwrap();
        let no = refractive_index(&m, RaySpec::ordinary(), f.wavelength(), 20.0).unwrap();
        assert!((n - no).abs() < 1e-9);
        assert!(matches!(
            type1_phasematch_angle(&m, SpectralLine::from_nm(400.0).unwrap()),
            Err(Error::NoPhaseMatch { .. })
        ));
        assert!(type1_phasematch_angle(&m, SpectralLine::from_nm(411.0).unwrap()).is_ok());
    }

    #[test]
    fn phasematch_angle_decreases_toward_red() {
        // Oracle: sign change of the index mismatch on a 10⁵-point θ grid.
        let m = bbo();
        let grid_root = |nm: f64| {
            let f = SpectralLine::from_nm(nm).unwrap();
            let sh = second_harmonic(f);
            let no = m.principal_index(Polarization::Ordinary, f.wavelength(), 20.0).unwrap();
            let n = 100_000;
            (0..n)
                .map(|i| FRAC_PI_2 * i as f64 / n as f64)
                .find(|&t| refractive_index(&m, RaySpec::extraordinary(t), sh.wavelength(), 20.0).unwrap() < no)
                .unwrap()
        };
        let a = grid_root(700.0);
        let b = grid_root(626.342);
        assert!(a < b);
        let sa = type1_phasematch_angle(&m, SpectralLine::from_nm(700.0).unwrap()).unwrap();
        assert!((sa - a).abs() < 2e-5);
    }

    #[test]
    fn walkoff_endpoints_and_shape() {
        let m = bbo();
        let sh = SpectralLine::from_nm(313.171).unwrap();
        assert_eq!(walkoff_angle(&m, 0.0, sh).unwrap(), 0.0);
        assert!(walkoff_angle(&m, FRAC_PI_2, sh).unwrap().abs() < 1e-15);
        let r = |deg: f64| walkoff_angle(&m, deg.to_radians(), sh).unwrap();
        assert!(r(45.0) > r(38.4) && r(38.4) > r(10.0));
    }

    #[test]
    fn b_scaling() {
        assert_eq!(walkoff_parameter_b(0.0, 1e7, 0.01), 0.0);
        let b1 = walkoff_parameter_b(0.08, 1.6e7, 0.01);
        let b2 = walkoff_parameter_b(0.08, 1.6e7, 0.02);
        assert!((b2 / b1 - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn bulk_mismatch_matches_hand_evaluation() {
        let (p, s) = lines();
        let dk = qpm_mismatch(&ln(), p, s, 196.5, f64::INFINITY).unwrap();
        assert!((dk - 576_480.716_682_604).abs() < 1e-4);
    }

    #[test]
    fn qpm_temperature_roots() {
        let (p, s) = lines();
        let t = qpm_phasematch_temperature(&ln(), p, s, 10.90e-6).unwrap();
        assert!((t - 196.5).abs() < 15.0);
        assert!(qpm_mismatch(&ln(), p, s, t, 10.90e-6).unwrap().abs() < 1e-3);
        assert!(matches!(qpm_phasematch_temperature(&ln(), p, s, 5e-6), Err(Error::NoRoot { .. })));
    }

    #[test]
    fn qpm_period_shift_direction() {
        // Oracle: grid scan of Δk over T for each period; the root moves the way
        // the sign of ∂Δk/∂Λ and ∂Δk/∂T predicts.
        let (p, s) = lines();
        let m = ln();
        let grid_root = |period: f64| {
            let mut prev = qpm_mismatch(&m, p, s, 20.0, period).unwrap();
            for i in 1..=23_000 {
                let t = 20.0 + i as f64 * 0.01;
                let v = qpm_mismatch(&m, p, s, t, period).unwrap();
                if v.signum() != prev.signum() {
                    return t;
                }
                prev = v;
            }
            panic!("no root");
        };
        let t0 = grid_root(10.90e-6);
        let t1 = grid_root(10.95e-6);
        let ddk_dperiod = 2.0 * PI / (10.90e-6f64).powi(2);
        let ddk_dt =
            qpm_mismatch(&m, p, s, t0 + 0.5, 10.90e-6).unwrap() - qpm_mismatch(&m, p, s, t0 - 0.5, 10.90e-6).unwrap();
        let predicted = -(ddk_dperiod / ddk_dt).signum();
        assert_eq!((t1 - t0).signum(), predicted);
        let solved = qpm_phasematch_temperature(&m, p, s, 10.95e-6).unwrap();
        assert!((solved - t1).abs() < 0.02);
    }

    #[test]
    fn acceptance_curve_properties() {
        let (p, s) = lines();
        let m = ln();
        let c = temperature_acceptance(&m, p, s, 10.90e-6, 0.04, 101).unwrap();
        assert!(c.fwhm > 0.25 && c.fwhm < 1.0);
        let peak = qpm_mismatch(&m, p, s, c.peak_temperature, 10.90e-6).unwrap();
        assert!((sinc(0.5 * peak * 0.04).powi(2) - 1.0).abs() < 1e-12);
        let half = temperature_acceptance(&m, p, s, 10.90e-6, 0.02, 101).unwrap();
        assert!((half.fwhm / c.fwhm - 2.0).abs() < 0.02);
        let dense = temperature_acceptance(&m, p, s, 10.90e-6, 0.04, 202).unwrap();
        assert!((dense.fwhm / c.fwhm - 1.0).abs() < 0.01);
    }

    proptest! {
        #[test]
        fn energy_conservation(a in 500.0f64..2000.0, b in 500.0f64..2000.0) {
            let p = SpectralLine::from_nm(a).unwrap();
            let s = SpectralLine::from_nm(b).unwrap();
            let o = sum_wavelength(p, s);
            let back = C / o.wavelength() - s.frequency();
            prop_assert!(((back - p.frequency()) / p.frequency()).abs() < 1e-12);
            prop_assert!(((o.frequency() - C / o.wavelength()) / o.frequency()).abs() < 1e-12);
        }

        #[test]
        fn detuning_antisymmetric(a in 300.0f64..320.0, b in 300.0f64..320.0) {
            let x = SpectralLine::from_nm(a).unwrap();
            let y = SpectralLine::from_nm(b).unwrap();
            prop_assert_eq!(uv_detuning(x, y), -uv_detuning(y, x));
        }
    }
}
