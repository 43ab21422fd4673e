use thiserror::Error;

/// Transverse plane of an astigmatic beam or resonator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Plane {
    /// In the plane of incidence at the folding mirrors (x).
    Tangential,
    /// Normal to the plane of incidence (y).
    Sagittal,
}

impl std::fmt::Display for Plane {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Plane::Tangential => f.write_str("tangential"),
            Plane::Sagittal => f.write_str("sagittal"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("wavelength {nm} nm outside validity band [{min}, {max}] nm")]
    WavelengthOutOfBand { nm: f64, min: f64, max: f64 },
    #[error("temperature {celsius} C outside validity band [{min}, {max}] C")]
    TemperatureOutOfBand { celsius: f64, min: f64, max: f64 },
    #[error("no phase-matching angle exists for fundamental {nm} nm")]
    NoPhaseMatch { nm: f64 },
    #[error("no root of the mismatch in [{lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },
    #[error("quadrature did not reach tolerance (estimated error {estimate:e})")]
    QuadratureFailure { estimate: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("non-physical beam parameter (Im q <= 0) in the {0} plane")]
    NonPhysical(Plane),
    #[error("{plane} plane unstable: |A+D|/2 = {half_trace}")]
    Unstable { plane: Plane, half_trace: f64 },
    #[error("target unreachable: {0}")]
    Unreachable(String),
    #[error("no feasible point: {0}")]
    Infeasible(String),
    #[error("solver did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("inconsistent observations: {0}")]
    Inconsistent(String),
    #[error("total internal reflection at incidence {incidence_rad} rad")]
    TotalInternalReflection { incidence_rad: f64 },
    #[error("unachievable servo design: {0}")]
    Unachievable(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("constants file: {0}")]
    Constants(String),
}

pub type Result<T> = std::result::Result<T, Error>;
