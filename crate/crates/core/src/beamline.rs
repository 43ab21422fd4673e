//! Astigmatic Gaussian beams and ray-transfer elements in reduced coordinates.
//!
//! A reduced beam parameter is `q̂ = q/n`; reduced slopes are `n·x'`. Every element
//! matrix is then unimodular, and a flat normal-incidence interface is the identity.

use crate::error::{Error, Plane, Result};
use crate::numeric::{bisect, nelder_mead_max2};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Real 2×2 ray-transfer matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn propagation(length: f64) -> Self {
        Self::new(1.0, length, 0.0, 1.0)
    }

    pub fn lens(f: f64) -> Self {
        Self::new(1.0, 0.0, -1.0 / f, 1.0)
    }

    /// `self · rhs`, i.e. `rhs` acts first.
    pub fn then_after(self, rhs: Mat2) -> Mat2 {
        Mat2::new(
            self.a * rhs.a + self.b * rhs.c,
            self.a * rhs.b + self.b * rhs.d,
            self.c * rhs.a + self.d * rhs.c,
            self.c * rhs.b + self.d * rhs.d,
        )
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn inverse(&self) -> Mat2 {
        let det = self.det();
        Mat2::new(self.d / det, -self.b / det, -self.c / det, self.a / det)
    }

    pub fn half_trace(&self) -> f64 {
        0.5 * (self.a + self.d)
    }

    pub fn apply(&self, q: Complex64) -> Complex64 {
        (q * self.a + self.b) / (q * self.c + self.d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementKind {
    FreeSpace {
        length: f64,
        index: f64,
    },
    ThinLens {
        focal_length: f64,
    },
    CylindricalLens {
        focal_length: f64,
        axis: Axis,
    },
    /// Spherical mirror used at half the full off-axis angle. `radius > 0` focuses.
    OffAxisMirror {
        radius: f64,
        alpha_full: f64,
    },
    /// Brewster-cut crystal with both faces, as its equivalent free-space lengths.
    BrewsterCrystal {
        length: f64,
        index: f64,
    },
    FlatInterface {
        n1: f64,
        n2: f64,
    },
    /// Spherical refracting surface; `radius > 0` when the centre lies downstream.
    CurvedInterface {
        radius: f64,
        n1: f64,
        n2: f64,
    },
    /// Refracting surface met at `incidence` in the x (tangential) plane.
    TiltedInterface {
        radius: Option<f64>,
        n1: f64,
        n2: f64,
        incidence: f64,
    },
    /// The element run backwards.
    Inverse(Box<ElementKind>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayElement {
    pub kind: ElementKind,
    pub m_x: Mat2,
    pub m_y: Mat2,
    pub transmittance: f64,
    /// Index of the medium after the element, when it changes.
    pub exit_index: Option<f64>,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParam(format!("{name} must be positive, got {v}")))
    }
}

fn nonzero(name: &str, v: f64) -> Result<()> {
    if v != 0.0 && !v.is_nan() {
        Ok(())
    } else {
        Err(Error::InvalidParam(format!("{name} must be nonzero")))
    }
}

pub fn make_element(kind: ElementKind) -> Result<RayElement> {
    let same = |m: Mat2| (m, m);
    let mut exit_index = None;
    let (m_x, m_y) = match kind {
        ElementKind::FreeSpace { length, index } => {
            positive("index", index)?;
            if !(length >= 0.0) {
                return Err(Error::InvalidParam("free-space length must be non-negative".into()));
            }
            same(Mat2::propagation(length / index))
        }
        ElementKind::ThinLens { focal_length } => {
            nonzero("focal length", focal_length)?;
            same(Mat2::lens(focal_length))
        }
        ElementKind::CylindricalLens { focal_length, axis } => {
            nonzero("focal length", focal_length)?;
            match axis {
                Axis::X => (Mat2::lens(focal_length), Mat2::IDENTITY),
                Axis::Y => (Mat2::IDENTITY, Mat2::lens(focal_length)),
            }
        }
        ElementKind::OffAxisMirror { radius, alpha_full } => {
            nonzero("mirror radius", radius)?;
            let c = (0.5 * alpha_full).cos();
            if !(c > 0.0) {
                return Err(Error::InvalidParam("off-axis angle must be below 180 degrees".into()));
            }
            (Mat2::lens(0.5 * radius * c), Mat2::lens(0.5 * radius / c))
        }
        ElementKind::BrewsterCrystal { length, index } => {
            positive("crystal length", length)?;
            if !(index > 1.0) {
                return Err(Error::InvalidParam("crystal index must exceed 1".into()));
            }
            (Mat2::propagation(length / index.powi(3)), Mat2::propagation(length / index))
        }
        ElementKind::FlatInterface { n1, n2 } => {
            positive("n1", n1)?;
            positive("n2", n2)?;
            exit_index = Some(n2);
            same(Mat2::IDENTITY)
        }
        ElementKind::CurvedInterface { radius, n1, n2 } => {
            positive("n1", n1)?;
            positive("n2", n2)?;
            nonzero("surface radius", radius)?;
            exit_index = Some(n2);
            same(Mat2::new(1.0, 0.0, -(n2 - n1) / radius, 1.0))
        }
        ElementKind::TiltedInterface { radius, n1, n2, incidence } => {
            positive("n1", n1)?;
            positive("n2", n2)?;
            let s2 = n1 / n2 * incidence.sin();
            if s2.abs() >= 1.0 {
                return Err(Error::InvalidParam("total internal reflection at tilted interface".into()));
            }
            let (c1, c2) = (incidence.cos(), s2.asin().cos());
            let power = match radius {
                Some(r) => {
                    nonzero("surface radius", r)?;
                    (n2 * c2 - n1 * c1) / r
                }
                None => 0.0,
            };
            exit_index = Some(n2);
            (Mat2::new(c2 / c1, 0.0, -power / (c1 * c2), c1 / c2), Mat2::new(1.0, 0.0, -power, 1.0))
        }
        ElementKind::Inverse(_) => {
            return Err(Error::InvalidParam("build inverses with RayElement::inverse".into()));
        }
    };
    Ok(RayElement { kind, m_x, m_y, transmittance: 1.0, exit_index })
}

impl RayElement {
    pub fn with_transmittance(mut self, t: f64) -> Self {
        self.transmittance = t;
        self
    }

    pub fn matrix(&self, plane: Plane) -> Mat2 {
        match plane {
            Plane::Tangential => self.m_x,
            Plane::Sagittal => self.m_y,
        }
    }

    /// The element traversed in reverse: inverse matrices, reciprocal transmittance.
    pub fn inverse(&self, entry_index: Option<f64>) -> RayElement {
        RayElement {
            kind: ElementKind::Inverse(Box::new(self.kind.clone())),
            m_x: self.m_x.inverse(),
            m_y: self.m_y.inverse(),
            transmittance: 1.0 / self.transmittance,
            exit_index: entry_index,
        }
    }
}

/// Composite matrices (x, y) of an ordered element list.
pub fn compose(elements: &[RayElement]) -> (Mat2, Mat2) {
    elements.iter().fold((Mat2::IDENTITY, Mat2::IDENTITY), |(mx, my), e| (e.m_x.then_after(mx), e.m_y.then_after(my)))
}

/// Gaussian beam with independent tangential (x) and sagittal (y) parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AstigmaticBeam {
    /// Reduced parameters q/n, m.
    pub q_x: Complex64,
    pub q_y: Complex64,
    /// Vacuum wavelength, m.
    pub wavelength: f64,
    pub ambient_index: f64,
    pub power: f64,
}

impl AstigmaticBeam {
    /// Beam at its waist in both planes.
    pub fn at_waist(w_x: f64, w_y: f64, wavelength: f64, ambient_index: f64, power: f64) -> Result<Self> {
        positive("waist", w_x)?;
        positive("waist", w_y)?;
        positive("wavelength", wavelength)?;
        let q = |w: f64| Complex64::new(0.0, PI * w * w / wavelength);
        Ok(Self { q_x: q(w_x), q_y: q(w_y), wavelength, ambient_index, power })
    }

    pub fn circular(w: f64, wavelength: f64, ambient_index: f64, power: f64) -> Result<Self> {
        Self::at_waist(w, w, wavelength, ambient_index, power)
    }

    pub fn q(&self, plane: Plane) -> Complex64 {
        match plane {
            Plane::Tangential => self.q_x,
            Plane::Sagittal => self.q_y,
        }
    }

    /// 1/e² intensity radius at the current plane.
    pub fn spot_size(&self, plane: Plane) -> f64 {
        spot_size(self.q(plane), self.wavelength)
    }

    /// Far-field half-angle divergence outside the medium, rad.
    pub fn divergence(&self, plane: Plane) -> f64 {
        self.wavelength / (PI * waist_size(self.q(plane), self.wavelength))
    }
}

pub fn spot_size(q: Complex64, wavelength: f64) -> f64 {
    (-wavelength / (PI * q.inv().im)).sqrt()
}

pub fn waist_size(q: Complex64, wavelength: f64) -> f64 {
    (wavelength * q.im / PI).sqrt()
}

pub fn propagate(beam: &AstigmaticBeam, elements: &[RayElement]) -> Result<AstigmaticBeam> {
    let mut b = *beam;
    for e in elements {
        b.q_x = e.m_x.apply(b.q_x);
        b.q_y = e.m_y.apply(b.q_y);
        if !(b.q_x.im > 0.0) {
            return Err(Error::NonPhysical(Plane::Tangential));
        }
        if !(b.q_y.im > 0.0) {
            return Err(Error::NonPhysical(Plane::Sagittal));
        }
        b.power *= e.transmittance;
        if let Some(n) = e.exit_index {
            b.ambient_index = n;
        }
    }
    Ok(b)
}

/// Reverses an element list given the ambient index before its first element.
pub fn invert_path(elements: &[RayElement], entry_index: f64) -> Vec<RayElement> {
    let mut indices = Vec::with_capacity(elements.len());
    let mut n = entry_index;
    for e in elements {
        indices.push(n);
        if let Some(x) = e.exit_index {
            n = x;
        }
    }
    elements.iter().zip(indices).rev().map(|(e, n_before)| e.inverse(e.exit_index.map(|_| n_before))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaistReport {
    pub w0_x: f64,
    pub w0_y: f64,
    /// Physical waist positions relative to the reference plane, m (positive downstream).
    pub z_x: f64,
    pub z_y: f64,
    pub ellipticity: f64,
}

impl WaistReport {
    pub fn new(w0_x: f64, w0_y: f64, z_x: f64, z_y: f64) -> Self {
        Self { w0_x, w0_y, z_x, z_y, ellipticity: w0_x.max(w0_y) / w0_x.min(w0_y) }
    }
}

/// Waists of `beam`, located relative to `reference_plane` (the beam sits at that coordinate).
pub fn waist_report(beam: &AstigmaticBeam, reference_plane: f64) -> WaistReport {
    let n = beam.ambient_index;
    WaistReport::new(
        waist_size(beam.q_x, beam.wavelength),
        waist_size(beam.q_y, beam.wavelength),
        reference_plane - beam.q_x.re * n,
        reference_plane - beam.q_y.re * n,
    )
}

/// Waist formed inside a medium after a flat normal-incidence face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceWaist {
    pub report: WaistReport,
    /// Depth of the waist behind the face, m.
    pub depth_x: f64,
    pub depth_y: f64,
    /// A quoted in-medium waist to compare against, when supplied.
    pub quoted_w0: Option<f64>,
}

/// Propagates `beam` by `distance` to a face into index `n` and reports the internal waist.
pub fn interface_waist_shift(
    beam: &AstigmaticBeam,
    distance: f64,
    n: f64,
    quoted_w0: Option<f64>,
) -> Result<InterfaceWaist> {
    let path = [
        make_element(ElementKind::FreeSpace { length: distance, index: beam.ambient_index })?,
        make_element(ElementKind::FlatInterface { n1: beam.ambient_index, n2: n })?,
    ];
    let inside = propagate(beam, &path)?;
    let report = waist_report(&inside, 0.0);
    Ok(InterfaceWaist { depth_x: report.z_x, depth_y: report.z_y, report, quoted_w0 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelescopeSolution {
    /// Lens spacing, m.
    pub separation: f64,
    /// Second lens to output waist, m; `None` when the telescope is afocal.
    pub distance_to_target: Option<f64>,
    pub waist: f64,
}

fn telescope_path(s: f64, f1: f64, f2: f64) -> Result<Vec<RayElement>> {
    Ok(vec![
        make_element(ElementKind::ThinLens { focal_length: f1 })?,
        make_element(ElementKind::FreeSpace { length: s, index: 1.0 })?,
        make_element(ElementKind::ThinLens { focal_length: f2 })?,
    ])
}

/// Spacing of a two-lens telescope that delivers `target_waist` (x plane) and where it lands.
pub fn telescope_solve(input: &AstigmaticBeam, target_waist: f64, f1: f64, f2: f64) -> Result<TelescopeSolution> {
    positive("target waist", target_waist)?;
    nonzero("f1", f1)?;
    nonzero("f2", f2)?;
    let afocal = f1 + f2;
    if afocal < 0.0 {
        return Err(Error::Unreachable("lens pair has no afocal spacing".into()));
    }
    let lam = input.wavelength;
    let w_in = waist_size(input.q_x, lam);
    let w_afocal = (f2 / f1).abs() * w_in;
    if ((target_waist - w_afocal) / w_afocal).abs() < 1e-9 {
        return Ok(TelescopeSolution { separation: afocal, distance_to_target: None, waist: w_afocal });
    }
    let out = |s: f64| -> Result<(f64, f64)> {
        let b = propagate(input, &telescope_path(s, f1, f2)?)?;
        Ok((waist_size(b.q_x, lam), -b.q_x.re))
    };
    let s_hi = afocal + 20.0 * (f1.abs() + f2.abs());
    let w_hi = out(s_hi)?.0;
    if !(target_waist < w_afocal && target_waist > w_hi) {
        return Err(Error::Unreachable(format!(
            "waist {target_waist:e} m outside the reachable range ({w_hi:e}, {w_afocal:e}) m"
        )));
    }
    let s = bisect(|s| out(s).map(|o| o.0 - target_waist).unwrap_or(f64::NAN), afocal, s_hi, 1e-12)?;
    let (w, z) = out(s)?;
    if z <= 0.0 {
        return Err(Error::Unreachable("waist forms before the second lens".into()));
    }
    Ok(TelescopeSolution { separation: s, distance_to_target: Some(z), waist: w })
}

/// Distance from the last lens to a flat face such that a free-space waist `standoff`
/// after the lens lands `depth` inside a medium of index `n`.
pub fn face_distance_for_internal_waist(standoff: f64, depth: f64, n: f64) -> f64 {
    standoff - depth / n
}

/// Power coupling of two beams at the same plane (product of per-plane overlaps).
pub fn mode_overlap(a: &AstigmaticBeam, b: &AstigmaticBeam) -> f64 {
    let one = |q1: Complex64, q2: Complex64| 2.0 * (q1.im * q2.im).sqrt() / (q1 - q2.conj()).norm();
    one(a.q_x, b.q_x) * one(a.q_y, b.q_y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeMatchSolution {
    /// (focal length, position from the input plane), m.
    pub lenses: Vec<(f64, f64)>,
    pub overlap: f64,
}

const MODE_MATCH_TARGET: f64 = 0.99;

/// Two spherical lenses from `stock` placed between the input plane and a target waist
/// located `target.z_x` downstream of it.
pub fn mode_match_solve(input: &AstigmaticBeam, target: &WaistReport, stock: &[f64]) -> Result<ModeMatchSolution> {
    let distance = 0.5 * (target.z_x + target.z_y);
    positive("target distance", distance)?;
    let lam = input.wavelength;
    let target_beam = AstigmaticBeam::at_waist(target.w0_x, target.w0_y, lam, 1.0, input.power)?;
    let overlap_at = |lenses: &[(f64, f64)]| -> f64 {
        let mut path = Vec::new();
        let mut z = 0.0;
        for &(f, p) in lenses {
            path.push(make_element(ElementKind::FreeSpace { length: p - z, index: 1.0 }).ok());
            path.push(make_element(ElementKind::ThinLens { focal_length: f }).ok());
            z = p;
        }
        path.push(make_element(ElementKind::FreeSpace { length: distance - z, index: 1.0 }).ok());
        let Some(path) = path.into_iter().collect::<Option<Vec<_>>>() else { return 0.0 };
        propagate(input, &path).map(|b| mode_overlap(&b, &target_beam)).unwrap_or(0.0)
    };
    let direct = overlap_at(&[]);
    if direct >= MODE_MATCH_TARGET {
        return Ok(ModeMatchSolution { lenses: Vec::new(), overlap: direct });
    }
    let n = 60;
    let mut best = ModeMatchSolution { lenses: Vec::new(), overlap: direct };
    for &fa in stock {
        for &fb in stock {
            let eval = |p1: f64, p2: f64| {
                if !(0.0..distance).contains(&p1) || !(p1..=distance).contains(&p2) {
                    0.0
                } else {
                    overlap_at(&[(fa, p1), (fb, p2)])
                }
            };
            let mut cand = (0.0, 0.0, 0.0);
            for i in 0..n {
                let p1 = distance * i as f64 / n as f64;
                for j in (i + 1)..=n {
                    let p2 = distance * j as f64 / n as f64;
                    let v = eval(p1, p2);
                    if v > cand.2 {
                        cand = (p1, p2, v);
                    }
                }
            }
            let step = distance / n as f64;
            let ([p1, p2], v) = nelder_mead_max2(|p| eval(p[0], p[1]), [cand.0, cand.1], [0.5 * step, 0.5 * step], 400);
            if v > best.overlap {
                best = ModeMatchSolution { lenses: vec![(fa, p1), (fb, p2)], overlap: v };
            }
        }
    }
    if best.overlap >= MODE_MATCH_TARGET {
        Ok(best)
    } else {
        Err(Error::Unreachable(format!("best overlap {:.4} with the stock list", best.overlap)))
    }
}
