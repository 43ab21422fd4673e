use crate::error::{Error, Result};
use crate::numeric::{bisect, integrate_real, QuadTol};

/// Round-trip loss parameters of the enhancement cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildupModel {
    /// Input coupler transmission.
    pub t1: f64,
    /// Passive round-trip loss excluding the input coupler.
    pub l_passive: f64,
    /// Single-pass conversion coefficient, 1/W.
    pub gamma: f64,
    /// Power reflectance of the crystal exit face for the second harmonic.
    pub r_brewster: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildupSolution {
    pub p_in: f64,
    pub p_circ: f64,
    /// Second harmonic generated inside the crystal.
    pub p_sh: f64,
    /// Second harmonic transmitted through the exit face.
    pub p_sh_main: f64,
    pub conversion_main: f64,
    pub conversion_total: f64,
    /// T1 − (L + γ P_circ); zero at impedance match.
    pub impedance_residual: f64,
    pub fixed_point_residual: f64,
}

impl BuildupModel {
    fn validate(&self) -> Result<()> {
        let frac = |x: f64| (0.0..1.0).contains(&x);
        if !(self.t1 > 0.0 && self.t1 < 1.0 && frac(self.l_passive) && self.gamma >= 0.0 && frac(self.r_brewster)) {
            return Err(Error::InvalidParam(format!("buildup model out of range: {self:?}")));
        }
        Ok(())
    }

    fn map(&self, p_in: f64, pc: f64) -> f64 {
        let nl = (1.0 - self.gamma * pc).max(0.0);
        let r = ((1.0 - self.t1) * (1.0 - self.l_passive) * nl).sqrt();
        self.t1 * p_in / ((1.0 - r) * (1.0 - r))
    }

    /// Steady-state circulating power for input power `p_in` (W).
    pub fn solve(&self, p_in: f64) -> Result<BuildupSolution> {
        self.validate()?;
        if !(p_in >= 0.0 && p_in.is_finite()) {
            return Err(Error::InvalidParam(format!("input power {p_in}")));
        }
        let tol = 1e-9 * p_in.max(f64::MIN_POSITIVE);
        let mut pc = self.t1 * p_in;
        let mut converged = false;
        for _ in 0..100_000 {
            let next = 0.5 * pc + 0.5 * self.map(p_in, pc);
            if (next - self.map(p_in, next)).abs() < tol {
                pc = next;
                converged = true;
                break;
            }
            pc = next;
        }
        if !converged {
            let hi = if self.gamma > 0.0 { 1.0 / self.gamma } else { self.map(p_in, 0.0) * 2.0 };
            pc = bisect(|x| x - self.map(p_in, x), 0.0, hi, 0.0)?;
        }
        let residual = (pc - self.map(p_in, pc)).abs();
        if residual >= tol.max(1e-12 * pc) {
            return Err(Error::NoConvergence { residual });
        }
        let p_sh = self.gamma * pc * pc;
        let p_sh_main = (1.0 - self.r_brewster) * p_sh;
        let ratio = |x: f64| if p_in > 0.0 { x / p_in } else { 0.0 };
        Ok(BuildupSolution {
            p_in,
            p_circ: pc,
            p_sh,
            p_sh_main,
            conversion_main: ratio(p_sh_main),
            conversion_total: ratio(p_sh),
            impedance_residual: self.t1 - (self.l_passive + self.gamma * pc),
            fixed_point_residual: residual,
        })
    }

    /// d ln P_sh_main / d ln P_in by central difference.
    pub fn log_slope(&self, p_in: f64) -> Result<f64> {
        let h = 1e-4;
        let up = self.solve(p_in * (1.0 + h))?.p_sh_main;
        let dn = self.solve(p_in * (1.0 - h))?.p_sh_main;
        Ok((up / dn).ln() / ((1.0 + h) / (1.0 - h)).ln())
    }
}

pub fn buildup_solve(p_in: f64, t1: f64, l_passive: f64, gamma: f64, r_brewster: f64) -> Result<BuildupSolution> {
    BuildupModel { t1, l_passive, gamma, r_brewster }.solve(p_in)
}

/// Input-coupler transmission that impedance-matches the cavity at `p_design`.
pub fn impedance_match_t1(l_passive: f64, gamma: f64, p_design: f64) -> Result<f64> {
    let residual = |t1: f64| {
        BuildupModel { t1, l_passive, gamma, r_brewster: 0.0 }
            .solve(p_design)
            .map(|s| s.impedance_residual)
            .unwrap_or(f64::NAN)
    };
    bisect(residual, l_passive.max(1e-12), 0.999, 1e-15)
}

/// Measured operating point used to fit the loss and conversion parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildupObservations {
    pub t1: f64,
    /// Main-beam conversion efficiency averaged over the linear region.
    pub conversion_main: f64,
    pub r_brewster: f64,
    /// Input power at which `t1` is the impedance match, W.
    pub p_design: f64,
    /// Input-power range of the linear regime, W.
    pub linear_region: (f64, f64),
}

/// Fits (L, γ) so that T1 is impedance-matched at the design power and the mean total
/// conversion over the linear region equals `conversion_main / (1 − R_b)`.
pub fn calibrate_buildup(obs: BuildupObservations) -> Result<BuildupModel> {
    let (lo, hi) = obs.linear_region;
    if !(obs.t1 > 0.0
        && obs.t1 < 1.0
        && obs.p_design > 0.0
        && lo > 0.0
        && hi >= lo
        && (0.0..1.0).contains(&obs.r_brewster))
    {
        return Err(Error::InvalidParam(format!("calibration inputs out of range: {obs:?}")));
    }
    let target = obs.conversion_main / (1.0 - obs.r_brewster);
    if !(obs.conversion_main > 0.0 && target < 1.0) {
        return Err(Error::Inconsistent(format!(
            "main conversion {} with Brewster loss {} implies total conversion {target}",
            obs.conversion_main, obs.r_brewster
        )));
    }
    let model_for = |gamma: f64| -> Result<BuildupModel> {
        let mismatch = |l: f64| {
            BuildupModel { t1: obs.t1, l_passive: l, gamma, r_brewster: obs.r_brewster }
                .solve(obs.p_design)
                .map(|s| s.impedance_residual)
                .unwrap_or(f64::NAN)
        };
        let l = bisect(mismatch, 0.0, obs.t1, 1e-16)?;
        Ok(BuildupModel { t1: obs.t1, l_passive: l, gamma, r_brewster: obs.r_brewster })
    };
    let mean_conversion = |gamma: f64| -> f64 {
        let Ok(m) = model_for(gamma) else { return f64::NAN };
        let eta = |p: f64| m.solve(p).map(|s| s.conversion_total).unwrap_or(f64::NAN);
        if hi - lo < 1e-12 * hi {
            return eta(lo);
        }
        integrate_real(eta, lo, hi, QuadTol { rel: 1e-11, abs: 0.0, max_intervals: 200 })
            .map(|v| v / (hi - lo))
            .unwrap_or(f64::NAN)
    };
    // Largest γ compatible with a non-negative passive loss.
    let lossless = |g: f64| {
        BuildupModel { t1: obs.t1, l_passive: 0.0, gamma: g, r_brewster: obs.r_brewster }
            .solve(obs.p_design)
            .map(|s| s.impedance_residual)
            .unwrap_or(f64::NAN)
    };
    let gamma_hi = bisect(lossless, 0.0, 4.0 * obs.t1 * obs.t1 / obs.p_design, 0.0)?;
    let gamma =
        bisect(|g| mean_conversion(g) - target, 1e-12, gamma_hi * (1.0 - 1e-9), 1e-15 * gamma_hi).map_err(|_| {
            Error::Inconsistent(format!("no conversion coefficient reproduces total conversion {target:.4}"))
        })?;
    model_for(gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FresnelPolarization {
    S,
    P,
}

/// Fresnel power reflectance leaving a medium of index `n1` into `n2`.
pub fn fresnel_reflectance(n1: f64, n2: f64, incidence: f64, pol: FresnelPolarization) -> Result<f64> {
    let s = n1 * incidence.sin() / n2;
    if s >= 1.0 {
        return Err(Error::TotalInternalReflection { incidence_rad: incidence });
    }
    let (ci, ct) = (incidence.cos(), (1.0 - s * s).sqrt());
    let r = match pol {
        FresnelPolarization::S => (n1 * ci - n2 * ct) / (n1 * ci + n2 * ct),
        FresnelPolarization::P => (n2 * ci - n1 * ct) / (n2 * ci + n1 * ct),
    };
    Ok(r * r)
}

/// Exit-face reflectance for the s-polarized second harmonic, index `n_sh`, at the
/// internal angle of a face cut at Brewster's angle for a fundamental of index `n_fund`.
pub fn brewster_sh_reflectance(n_sh: f64, n_fund: f64) -> Result<f64> {
    fresnel_reflectance(n_sh, 1.0, (1.0 / n_fund).atan(), FresnelPolarization::S)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn passive_cavity_matches_closed_form() {
        let s = buildup_solve(1.0, 0.016, 0.01, 0.0, 0.0).unwrap();
        let r = (0.984f64 * 0.99).sqrt();
        assert!((s.p_circ - 0.016 / (1.0 - r).powi(2)).abs() < 1e-9);
        assert_eq!(s.p_sh, 0.0);
    }

    #[test]
    fn fresnel_limits() {
        let n = 1.6684;
        assert!(fresnel_reflectance(n, 1.0, (1.0 / n).atan(), FresnelPolarization::P).unwrap() < 1e-6);
        for pol in [FresnelPolarization::S, FresnelPolarization::P] {
            let r = fresnel_reflectance(1.0, n, 0.0, pol).unwrap();
            assert!((r - ((n - 1.0) / (n + 1.0)).powi(2)).abs() < 1e-14);
        }
        assert!(matches!(
            fresnel_reflectance(n, 1.0, 0.7, FresnelPolarization::S),
            Err(Error::TotalInternalReflection { .. })
        ));
    }

    #[test]
    fn impedance_match_three_point_probe() {
        let (l, g, p) = (0.008, 2e-4, 1.0);
        let t = impedance_match_t1(l, g, p).unwrap();
        let refl = |t1: f64| {
            // Reflected fraction of the input at the coupler.
            let s = buildup_solve(p, t1, l, g, 0.0).unwrap();
            let (r1, rho) = ((1.0 - t1).sqrt(), ((1.0 - l) * (1.0 - g * s.p_circ)).sqrt());
            ((r1 - rho) / (1.0 - r1 * rho)).powi(2)
        };
        assert!(refl(t) < refl(t * 0.99) && refl(t) < refl(t * 1.01));
        assert!(buildup_solve(p, t, l, g, 0.0).unwrap().impedance_residual.abs() < 1e-12);
    }

    #[test]
    fn calibration_closes() {
        let obs = BuildupObservations {
            t1: 0.016,
            conversion_main: 0.42,
            r_brewster: 0.165,
            p_design: 1.0,
            linear_region: (1.0, 1.8),
        };
        let m = calibrate_buildup(obs).unwrap();
        assert!(m.solve(1.0).unwrap().impedance_residual.abs() < 1e-12);
        assert!(m.l_passive > 0.0 && m.gamma > 0.0);
        let too_much = BuildupObservations { conversion_main: 0.9, ..obs };
        assert!(matches!(calibrate_buildup(too_much), Err(Error::Inconsistent(_))));
    }

    proptest! {
        #[test]
        fn fixed_point_residual(p in 0.01f64..5.0, t1 in 0.005f64..0.05, l in 0.001f64..0.03, g in 0.0f64..1e-3) {
            let s = buildup_solve(p, t1, l, g, 0.16).unwrap();
            let m = BuildupModel { t1, l_passive: l, gamma: g, r_brewster: 0.16 };
            prop_assert!((s.p_circ - m.map(p, s.p_circ)).abs() < 1e-9 * p);
        }

        #[test]
        fn monotone_in_input_power(p in 0.05f64..4.0, t1 in 0.005f64..0.05, l in 0.001f64..0.03, g in 1e-6f64..1e-3) {
            let a = buildup_solve(p, t1, l, g, 0.16).unwrap();
            let b = buildup_solve(p * 1.05, t1, l, g, 0.16).unwrap();
            prop_assert!(b.p_circ > a.p_circ && b.p_sh > a.p_sh);
        }
    }
}
