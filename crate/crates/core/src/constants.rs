//! Bundled material constants and their parsed form.

use crate::error::{Error, Result};
use serde::Deserialize;

/// Text of the bundled constants file.
pub const BUNDLED_MATERIALS: &str = include_str!("../data/materials.toml");

#[derive(Debug, Clone, Deserialize, PartialEq)]
pub struct SimpleSellmeier {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
pub struct Band {
    pub min_nm: f64,
    pub max_nm: f64,
    #[serde(default)]
    pub min_c: Option<f64>,
    #[serde(default)]
    pub max_c: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
pub struct BboTable {
    pub ordinary: SimpleSellmeier,
    pub extraordinary: SimpleSellmeier,
    pub band: Band,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
pub struct ThermalSellmeier {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub a6: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
    pub t_ref_c: f64,
    pub t_offset_c: f64,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
pub struct LinbO3Table {
    pub extraordinary: ThermalSellmeier,
    pub band: Band,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
pub struct NonlinearTable {
    pub bbo_d22_pm_per_v: f64,
    pub linbo3_d33_pm_per_v: f64,
    pub linbo3_d33_fundamental_nm: f64,
    pub linbo3_d33_temperature_c: f64,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
pub struct Constants {
    pub bbo: BboTable,
    pub linbo3: LinbO3Table,
    pub nonlinear: NonlinearTable,
}

impl Constants {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Constants(e.to_string()))
    }

    /// The constants shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_toml_str(BUNDLED_MATERIALS).expect("bundled constants parse")
    }
}

impl Default for Constants {
    fn default() -> Self {
        Self::bundled()
    }
}
