//! Refractive-index models for BBO and congruent LiNbO₃.
//!
//! Wavelengths are vacuum wavelengths in metres; Sellmeier forms take µm internally.

use crate::constants::Constants;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaterialId {
    Bbo,
    CongruentLiNbO3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThermoModel {
    None,
    TemperatureDependentSellmeier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarization {
    Ordinary,
    Extraordinary,
}

/// Polarization and propagation angle from the optic axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySpec {
    pub polarization: Polarization,
    pub theta: f64,
}

impl RaySpec {
    pub fn ordinary() -> Self {
        Self { polarization: Polarization::Ordinary, theta: 0.0 }
    }

    pub fn extraordinary(theta: f64) -> Self {
        Self { polarization: Polarization::Extraordinary, theta }
    }
}

/// A material with its Sellmeier coefficient lists.
///
/// BBO lists are `[a, b, c, d]` for `n² = a + b/(λ² − c) − dλ²`.
/// The LiNbO₃ extraordinary list is `[a1..a6, b1..b4, t_ref, t_offset]`; no ordinary list.
#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub id: MaterialId,
    pub sellmeier_ordinary: Vec<f64>,
    pub sellmeier_extraordinary: Vec<f64>,
    pub thermo_model: ThermoModel,
    pub band_nm: (f64, f64),
    pub band_celsius: Option<(f64, f64)>,
}

impl Material {
    pub fn bbo(c: &Constants) -> Self {
        let o = &c.bbo.ordinary;
        let e = &c.bbo.extraordinary;
        Self {
            id: MaterialId::Bbo,
            sellmeier_ordinary: vec![o.a, o.b, o.c, o.d],
            sellmeier_extraordinary: vec![e.a, e.b, e.c, e.d],
            thermo_model: ThermoModel::None,
            band_nm: (c.bbo.band.min_nm, c.bbo.band.max_nm),
            band_celsius: None,
        }
    }

    pub fn congruent_linbo3(c: &Constants) -> Self {
        let s = &c.linbo3.extraordinary;
        let band = &c.linbo3.band;
        Self {
            id: MaterialId::CongruentLiNbO3,
            sellmeier_ordinary: Vec::new(),
            sellmeier_extraordinary: vec![
                s.a1,
                s.a2,
                s.a3,
                s.a4,
                s.a5,
                s.a6,
                s.b1,
                s.b2,
                s.b3,
                s.b4,
                s.t_ref_c,
                s.t_offset_c,
            ],
            thermo_model: ThermoModel::TemperatureDependentSellmeier,
            band_nm: (band.min_nm, band.max_nm),
            band_celsius: band.min_c.zip(band.max_c),
        }
    }

    fn check_band(&self, wavelength: f64, temperature: f64) -> Result<()> {
        let nm = wavelength * 1e9;
        // Half a picometre of slack absorbs round-off at the band edges.
        let slack = 5e-4;
        if !(nm >= self.band_nm.0 - slack && nm <= self.band_nm.1 + slack) {
            return Err(Error::WavelengthOutOfBand { nm, min: self.band_nm.0, max: self.band_nm.1 });
        }
        if let Some((lo, hi)) = self.band_celsius {
            if !(temperature >= lo && temperature <= hi) {
                return Err(Error::TemperatureOutOfBand { celsius: temperature, min: lo, max: hi });
            }
        }
        Ok(())
    }

    /// Principal index for one polarization (no angle dependence).
    pub fn principal_index(&self, pol: Polarization, wavelength: f64, temperature: f64) -> Result<f64> {
        self.check_band(wavelength, temperature)?;
        let um = wavelength * 1e6;
        let l2 = um * um;
        let n2 = match (self.thermo_model, pol) {
            (ThermoModel::None, Polarization::Ordinary) => simple(&self.sellmeier_ordinary, l2),
            (ThermoModel::None, Polarization::Extraordinary) => simple(&self.sellmeier_extraordinary, l2),
            (ThermoModel::TemperatureDependentSellmeier, Polarization::Extraordinary) => {
                thermal(&self.sellmeier_extraordinary, l2, temperature)
            }
            (ThermoModel::TemperatureDependentSellmeier, Polarization::Ordinary) => {
                return Err(Error::InvalidParam("no ordinary-index model for this material".into()))
            }
        };
        let n = n2.sqrt();
        if !(n > 1.0 && n < 3.0) {
            return Err(Error::InvalidParam(format!("Sellmeier evaluation gave n = {n}")));
        }
        Ok(n)
    }
}

fn simple(c: &[f64], l2: f64) -> f64 {
    c[0] + c[1] / (l2 - c[2]) - c[3] * l2
}

fn thermal(c: &[f64], l2: f64, t: f64) -> f64 {
    let f = (t - c[10]) * (t + c[11]);
    let pole = c[2] + c[8] * f;
    c[0] + c[6] * f + (c[1] + c[7] * f) / (l2 - pole * pole) + (c[3] + c[9] * f) / (l2 - c[4] * c[4]) - c[5] * l2
}

/// Index of the extraordinary wave at angle `theta` from the optic axis.
pub fn extraordinary_index_at_angle(n_o: f64, n_e: f64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    (c * c / (n_o * n_o) + s * s / (n_e * n_e)).sqrt().recip()
}

pub fn refractive_index(material: &Material, ray: RaySpec, wavelength: f64, temperature: f64) -> Result<f64> {
    if !(0.0..=FRAC_PI_2 + 1e-15).contains(&ray.theta) {
        return Err(Error::InvalidParam(format!("theta {} outside [0, pi/2]", ray.theta)));
    }
    match ray.polarization {
        Polarization::Ordinary => material.principal_index(Polarization::Ordinary, wavelength, temperature),
        Polarization::Extraordinary => {
            let n_e = material.principal_index(Polarization::Extraordinary, wavelength, temperature)?;
            if material.sellmeier_ordinary.is_empty() {
                if (ray.theta - FRAC_PI_2).abs() > 1e-12 {
                    return Err(Error::InvalidParam("only theta = pi/2 is modeled for this material".into()));
                }
                return Ok(n_e);
            }
            let n_o = material.principal_index(Polarization::Ordinary, wavelength, temperature)?;
            Ok(extraordinary_index_at_angle(n_o, n_e, ray.theta))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bbo() -> Material {
        Material::bbo(&Constants::bundled())
    }

    fn ln() -> Material {
        Material::congruent_linbo3(&Constants::bundled())
    }

    #[test]
    fn bbo_brewster_closure() {
        let n = refractive_index(&bbo(), RaySpec::ordinary(), 626.342e-9, 20.0).unwrap();
        assert!((n.atan().to_degrees() - 59.1).abs() < 0.1);
    }

    #[test]
    fn extraordinary_at_zero_equals_ordinary() {
        for nm in [313.171, 626.342, 1064.0] {
            let no = refractive_index(&bbo(), RaySpec::ordinary(), nm * 1e-9, 20.0).unwrap();
            let ne0 = refractive_index(&bbo(), RaySpec::extraordinary(0.0), nm * 1e-9, 20.0).unwrap();
            assert!((no - ne0).abs() < 1e-15);
        }
    }

    #[test]
    fn linbo3_hand_tabulated_value() {
        // Coefficients substituted by hand in 30-digit arithmetic.
        let n = refractive_index(&ln(), RaySpec::extraordinary(FRAC_PI_2), 1051.140e-9, 196.5).unwrap();
        assert!((n - 2.165_362_683_462_848).abs() < 1e-12);
    }

    #[test]
    fn out_of_band_is_error() {
        assert!(matches!(
            refractive_index(&ln(), RaySpec::extraordinary(FRAC_PI_2), 500e-9, 100.0),
            Err(Error::WavelengthOutOfBand { .. })
        ));
        assert!(matches!(
            refractive_index(&ln(), RaySpec::extraordinary(FRAC_PI_2), 1051e-9, 300.0),
            Err(Error::TemperatureOutOfBand { .. })
        ));
        assert!(matches!(
            refractive_index(&bbo(), RaySpec::ordinary(), 2000e-9, 20.0),
            Err(Error::WavelengthOutOfBand { .. })
        ));
    }

    #[test]
    fn angle_endpoints() {
        assert_eq!(extraordinary_index_at_angle(1.7, 1.6, 0.0), 1.7);
        assert!((extraordinary_index_at_angle(1.7, 1.6, FRAC_PI_2) - 1.6).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn index_in_physical_range(nm in 313.0f64..1600.0) {
            for ray in [RaySpec::ordinary(), RaySpec::extraordinary(0.7)] {
                let n = refractive_index(&bbo(), ray, nm * 1e-9, 20.0).unwrap();
                prop_assert!(n > 1.0 && n < 3.0);
            }
        }

        #[test]
        fn linbo3_in_physical_range(nm in 626.0f64..1600.0, t in 20.0f64..250.0) {
            let n = refractive_index(&ln(), RaySpec::extraordinary(FRAC_PI_2), nm * 1e-9, t).unwrap();
            prop_assert!(n > 1.0 && n < 3.0);
        }

        #[test]
        fn ellipse_strictly_decreasing(t1 in 0.0f64..1.5, dt in 1e-4f64..0.07) {
            let a = extraordinary_index_at_angle(1.72, 1.59, t1);
            let b = extraordinary_index_at_angle(1.72, 1.59, t1 + dt);
            prop_assert!(b < a);
        }

        #[test]
        fn continuous_in_wavelength(nm in 314.0f64..1599.0) {
            let m = bbo();
            let a = refractive_index(&m, RaySpec::ordinary(), nm * 1e-9, 20.0).unwrap();
            let b = refractive_index(&m, RaySpec::ordinary(), (nm + 1e-6) * 1e-9, 20.0).unwrap();
            prop_assert!((a - b).abs() < 1e-8);
        }
    }
}
