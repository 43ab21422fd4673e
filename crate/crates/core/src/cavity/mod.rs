//! Bow-tie enhancement cavity with a Brewster-cut crystal: eigenmodes, stability,
//! geometry optimization, power buildup and the output beam.

mod buildup;
mod output;

pub use buildup::*;
pub use output::*;

use crate::beamline::{
    make_element, propagate, waist_report, AstigmaticBeam, ElementKind, Mat2, RayElement, WaistReport,
};
use crate::constants::Constants;
use crate::dispersion::{Material, Polarization};
use crate::error::{Error, Plane, Result};
use crate::focusing::{elliptical_optimize_sigma, focusing_parameter, FocusResult};
use crate::numeric::{bisect, golden_max};
use crate::phasematch::{
    second_harmonic, type1_phasematch_angle, walkoff_angle, walkoff_parameter_b, CrystalSpec, Cut, SpectralLine,
};
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct BowtieLayout {
    /// Spherical mirror to crystal face, each side, m.
    pub d_mc: f64,
    /// Long path between the spherical mirrors via the plane mirrors, m.
    pub l_long: f64,
    /// Full off-axis angle at each spherical mirror, rad.
    pub alpha_full: f64,
    pub r_mirror: f64,
    pub crystal: CrystalSpec,
    pub wavelength: SpectralLine,
    /// Crystal index for the fundamental.
    pub n_crystal: f64,
    /// Walk-off parameter of the crystal at its cut angle.
    pub walkoff_b: f64,
}

impl BowtieLayout {
    /// Layout around a Brewster-cut BBO crystal cut for type-I SHG of `wavelength`.
    pub fn bbo(
        constants: &Constants,
        d_mc: f64,
        l_long: f64,
        alpha_full: f64,
        r_mirror: f64,
        crystal_length: f64,
        wavelength: SpectralLine,
    ) -> Result<Self> {
        let material = Material::bbo(constants);
        let theta = type1_phasematch_angle(&material, wavelength)?;
        let crystal = CrystalSpec {
            material,
            length: crystal_length,
            cut: Cut::Angle { theta, phi: 0.0, brewster_faces: true },
            temperature: 20.0,
        };
        Self::new(d_mc, l_long, alpha_full, r_mirror, crystal, wavelength)
    }

    pub fn new(
        d_mc: f64,
        l_long: f64,
        alpha_full: f64,
        r_mirror: f64,
        crystal: CrystalSpec,
        wavelength: SpectralLine,
    ) -> Result<Self> {
        crystal.validate()?;
        if !(d_mc > 0.0 && l_long > 0.0 && r_mirror > 0.0) {
            return Err(Error::InvalidParam("layout lengths must be positive".into()));
        }
        if !(0.0..std::f64::consts::PI).contains(&alpha_full) {
            return Err(Error::InvalidParam("off-axis angle outside [0, 180) degrees".into()));
        }
        let n =
            crystal.material.principal_index(Polarization::Ordinary, wavelength.wavelength(), crystal.temperature)?;
        let walkoff_b = match crystal.cut {
            Cut::Angle { theta, .. } => {
                let rho = walkoff_angle(&crystal.material, theta, second_harmonic(wavelength))?;
                walkoff_parameter_b(rho, n * wavelength.k0(), crystal.length)
            }
            Cut::Poled { .. } => 0.0,
        };
        Ok(Self { d_mc, l_long, alpha_full, r_mirror, crystal, wavelength, n_crystal: n, walkoff_b })
    }

    pub fn with_geometry(&self, d_mc: f64, alpha_full: f64) -> Self {
        Self { d_mc, alpha_full, ..self.clone() }
    }

    /// Round-trip optical path length, m.
    pub fn round_trip_length(&self) -> f64 {
        self.l_long + 2.0 * self.d_mc + self.crystal.length * self.n_crystal
    }

    fn half_crystal(&self) -> Result<RayElement> {
        make_element(ElementKind::FreeSpace { length: 0.5 * self.crystal.length, index: self.n_crystal })
    }

    /// Crystal centre to the first spherical mirror, inclusive.
    pub fn center_to_mirror(&self) -> Result<Vec<RayElement>> {
        let n = self.n_crystal;
        Ok(vec![
            self.half_crystal()?,
            make_element(ElementKind::TiltedInterface { radius: None, n1: n, n2: 1.0, incidence: (1.0 / n).atan() })?,
            make_element(ElementKind::FreeSpace { length: self.d_mc, index: 1.0 })?,
            make_element(ElementKind::OffAxisMirror { radius: self.r_mirror, alpha_full: self.alpha_full })?,
        ])
    }

    /// Full round trip starting and ending at the crystal centre.
    pub fn round_trip_elements(&self) -> Result<Vec<RayElement>> {
        let n = self.n_crystal;
        let mut path = self.center_to_mirror()?;
        path.extend([
            make_element(ElementKind::FreeSpace { length: self.l_long, index: 1.0 })?,
            make_element(ElementKind::OffAxisMirror { radius: self.r_mirror, alpha_full: self.alpha_full })?,
            make_element(ElementKind::FreeSpace { length: self.d_mc, index: 1.0 })?,
            make_element(ElementKind::TiltedInterface { radius: None, n1: 1.0, n2: n, incidence: n.atan() })?,
            self.half_crystal()?,
        ]);
        Ok(path)
    }
}

pub fn round_trip_matrix(layout: &BowtieLayout, plane: Plane) -> Result<Mat2> {
    let path = layout.round_trip_elements()?;
    Ok(path.iter().fold(Mat2::IDENTITY, |m, e| e.matrix(plane).then_after(m)))
}

/// Half-traces (A+D)/2 for (tangential, sagittal).
pub fn half_traces(layout: &BowtieLayout) -> Result<(f64, f64)> {
    Ok((
        round_trip_matrix(layout, Plane::Tangential)?.half_trace(),
        round_trip_matrix(layout, Plane::Sagittal)?.half_trace(),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenmodeSolution {
    /// Reduced beam parameters at the crystal centre.
    pub q_x: Complex64,
    pub q_y: Complex64,
    pub crystal_waists: WaistReport,
    pub secondary_waists: WaistReport,
    pub stability_x: f64,
    pub stability_y: f64,
    pub zeta_x: f64,
    pub zeta_y: f64,
    pub b: f64,
}

/// Self-consistent q of a round-trip matrix, if the plane is stable.
pub fn eigen_q(m: &Mat2, plane: Plane) -> Result<Complex64> {
    let half = m.half_trace();
    if half.abs() >= 1.0 || m.b == 0.0 {
        return Err(Error::Unstable { plane, half_trace: half.abs() });
    }
    let inv = Complex64::new((m.d - m.a) / (2.0 * m.b), -(1.0 - half * half).sqrt() / m.b.abs());
    Ok(inv.inv())
}

pub fn solve_eigenmode(layout: &BowtieLayout) -> Result<EigenmodeSolution> {
    let mx = round_trip_matrix(layout, Plane::Tangential)?;
    let my = round_trip_matrix(layout, Plane::Sagittal)?;
    let q_x = eigen_q(&mx, Plane::Tangential)?;
    let q_y = eigen_q(&my, Plane::Sagittal)?;
    let lam = layout.wavelength.wavelength();
    let n = layout.n_crystal;
    let center = AstigmaticBeam { q_x, q_y, wavelength: lam, ambient_index: n, power: 1.0 };
    let crystal_waists = waist_report(&center, 0.0);
    let mut to_mid = layout.center_to_mirror()?;
    to_mid.push(make_element(ElementKind::FreeSpace { length: 0.5 * layout.l_long, index: 1.0 })?);
    let mid = propagate(&center, &to_mid)?;
    let secondary_waists = waist_report(&mid, 0.0);
    let len = layout.crystal.length;
    Ok(EigenmodeSolution {
        q_x,
        q_y,
        zeta_x: focusing_parameter(len, lam, crystal_waists.w0_x, n),
        zeta_y: focusing_parameter(len, lam, crystal_waists.w0_y, n),
        crystal_waists,
        secondary_waists,
        stability_x: mx.half_trace().abs(),
        stability_y: my.half_trace().abs(),
        b: layout.walkoff_b,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanParameter {
    DMc,
    LLong,
    AlphaFull,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub value: f64,
    /// Signed half-traces (A+D)/2.
    pub m_x: f64,
    pub m_y: f64,
}

impl ScanRow {
    pub fn stable_x(&self) -> bool {
        self.m_x.abs() < 1.0
    }

    pub fn stable_y(&self) -> bool {
        self.m_y.abs() < 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityScan {
    pub parameter: ScanParameter,
    pub rows: Vec<ScanRow>,
    /// Intervals where both planes are stable, with bisected edges.
    pub overlap_windows: Vec<(f64, f64)>,
}

fn with_parameter(layout: &BowtieLayout, p: ScanParameter, v: f64) -> BowtieLayout {
    let mut l = layout.clone();
    match p {
        ScanParameter::DMc => l.d_mc = v,
        ScanParameter::LLong => l.l_long = v,
        ScanParameter::AlphaFull => l.alpha_full = v,
    }
    l
}

pub fn stability_scan(
    layout: &BowtieLayout,
    parameter: ScanParameter,
    lo: f64,
    hi: f64,
    n: usize,
) -> Result<StabilityScan> {
    if !(hi > lo) || n < 2 {
        return Err(Error::InvalidParam("scan range must be increasing with at least two points".into()));
    }
    let row = |v: f64| -> Result<ScanRow> {
        let (m_x, m_y) = half_traces(&with_parameter(layout, parameter, v))?;
        Ok(ScanRow { value: v, m_x, m_y })
    };
    let rows = (0..n).map(|i| row(lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect::<Result<Vec<_>>>()?;
    let margin = |v: f64| row(v).map(|r| r.m_x.abs().max(r.m_y.abs()) - 1.0).unwrap_or(f64::NAN);
    let both = |r: &ScanRow| r.stable_x() && r.stable_y();
    let mut windows = Vec::new();
    let mut start: Option<f64> = if both(&rows[0]) { Some(rows[0].value) } else { None };
    for w in rows.windows(2) {
        match (both(&w[0]), both(&w[1])) {
            (false, true) => start = Some(bisect(margin, w[0].value, w[1].value, 1e-15)?),
            (true, false) => {
                let end = bisect(margin, w[0].value, w[1].value, 1e-15)?;
                windows.push((start.take().unwrap_or(lo), end));
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        windows.push((s, hi));
    }
    Ok(StabilityScan { parameter, rows, overlap_windows: windows })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    /// Largest |(A+D)/2| allowed in either plane (0 is the stability centre).
    pub overlap_tolerance: f64,
    pub max_secondary_ellipticity: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self { overlap_tolerance: 0.02, max_secondary_ellipticity: 1.01 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutOptimum {
    pub layout: BowtieLayout,
    pub eigenmode: EigenmodeSolution,
    pub focus: FocusResult,
    /// (d_mc, alpha_full) where both half-traces vanish.
    pub stability_center: (f64, f64),
}

/// Newton solve of (m_x, m_y) = target over (d_mc, alpha_full).
fn solve_half_traces(layout: &BowtieLayout, target: (f64, f64), start: (f64, f64)) -> Result<(f64, f64)> {
    let f = |d: f64, a: f64| half_traces(&layout.with_geometry(d, a)).map(|(x, y)| (x - target.0, y - target.1));
    let (mut d, mut a) = start;
    for _ in 0..60 {
        let (fx, fy) = f(d, a)?;
        if fx.abs().max(fy.abs()) < 1e-13 {
            return Ok((d, a));
        }
        let (hd, ha) = (1e-7 * layout.r_mirror, 1e-7);
        let (p, q) = (f(d + hd, a)?, f(d - hd, a)?);
        let (r, s) = (f(d, a + ha)?, f(d, a - ha)?);
        let j = [
            [(p.0 - q.0) / (2.0 * hd), (r.0 - s.0) / (2.0 * ha)],
            [(p.1 - q.1) / (2.0 * hd), (r.1 - s.1) / (2.0 * ha)],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dd = (j[1][1] * fx - j[0][1] * fy) / det;
        let da = (-j[1][0] * fx + j[0][0] * fy) / det;
        d -= dd;
        a -= da;
        if !(d > 0.0 && (0.0..std::f64::consts::PI).contains(&a)) {
            break;
        }
    }
    let (fx, fy) = f(d, a).unwrap_or((f64::NAN, f64::NAN));
    if fx.abs().max(fy.abs()) < 1e-10 {
        Ok((d, a))
    } else {
        Err(Error::Infeasible("no geometry reaches the requested stability point".into()))
    }
}

/// (d_mc, alpha_full) where both planes sit at the centre of their stability range.
pub fn stability_center(layout: &BowtieLayout) -> Result<(f64, f64)> {
    let r = layout.r_mirror;
    let mut best = (f64::INFINITY, (0.0, 0.0));
    for i in 0..=100 {
        let a = (5.0 + 0.5 * i as f64).to_radians();
        for j in 0..=400 {
            let d = r * (0.3 + 0.4 * j as f64 / 400.0);
            let (mx, my) = half_traces(&layout.with_geometry(d, a))?;
            let score = mx.abs().max(my.abs());
            if score < best.0 {
                best = (score, (d, a));
            }
        }
    }
    solve_half_traces(layout, (0.0, 0.0), best.1)
}

/// Maximizes the elliptical conversion factor over (d_mc, alpha_full) inside the
/// maximal-overlap region |m_x|, |m_y| ≤ tolerance with a near-circular secondary waist.
pub fn optimize_layout(template: &BowtieLayout, options: OptimizeOptions) -> Result<LayoutOptimum> {
    let center = stability_center(template)?;
    let tol = options.overlap_tolerance;
    let evaluate = |u: f64, v: f64| -> Result<(f64, BowtieLayout, EigenmodeSolution, FocusResult)> {
        let (d, a) = solve_half_traces(template, (u, v), center)?;
        let layout = template.with_geometry(d, a);
        let eig = solve_eigenmode(&layout)?;
        let focus = elliptical_optimize_sigma(eig.zeta_x, eig.zeta_y, eig.b)?;
        let excess = (eig.secondary_waists.ellipticity - options.max_secondary_ellipticity).max(0.0);
        Ok((focus.h - 1e3 * excess, layout, eig, focus))
    };
    let score = |u: f64, v: f64| evaluate(u, v).map(|r| r.0).or(Ok(f64::NEG_INFINITY));
    let (mut u, mut v) = (0.0, 0.0);
    let mut current = score(u, v)?;
    for _ in 0..20 {
        let (nu, _) = golden_max(|x| score(x, v), -tol, tol, 1e-6 * tol.max(1e-3))?;
        u = nu;
        let (nv, s) = golden_max(|y| score(u, y), -tol, tol, 1e-6 * tol.max(1e-3))?;
        v = nv;
        if (s - current).abs() < 1e-10 {
            break;
        }
        current = s;
    }
    let (_, layout, eigenmode, mut focus) = evaluate(u, v)?;
    if eigenmode.secondary_waists.ellipticity > options.max_secondary_ellipticity {
        return Err(Error::Infeasible(format!(
            "secondary ellipticity {:.4} exceeds {:.4}",
            eigenmode.secondary_waists.ellipticity, options.max_secondary_ellipticity
        )));
    }
    focus.optimized.zeta = true;
    Ok(LayoutOptimum { layout, eigenmode, focus, stability_center: center })
}
