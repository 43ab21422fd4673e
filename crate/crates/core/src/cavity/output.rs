use super::{BowtieLayout, EigenmodeSolution};
use crate::beamline::{make_element, propagate, AstigmaticBeam, Axis, ElementKind, RayElement};
use crate::error::{Error, Plane, Result};
use crate::numeric::{bisect, scan_bracket};

/// Output-coupling mirror substrate. Radii follow the light-travel sign convention
/// (negative when the centre of curvature lies upstream).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorSubstrate {
    pub index: f64,
    pub thickness: f64,
    pub r_front: f64,
    pub r_back: f64,
}

impl Default for MirrorSubstrate {
    fn default() -> Self {
        Self { index: 1.46, thickness: 6.25e-3, r_front: -0.05, r_back: -0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylindricalCorrection {
    /// Infinite when the beam is already stigmatic.
    pub focal_length: f64,
    /// Lens position measured from the mirror's front (coated) surface, m.
    pub distance_from_m1: f64,
    pub axis: Axis,
    /// Spot size at the lens, m.
    pub spot_size: f64,
}

/// Second-harmonic beam in air just behind the output mirror.
///
/// The harmonic is taken to share the fundamental's reduced beam parameter at the
/// crystal centre (waists smaller by √2 at half the wavelength).
pub fn sh_output_beam(
    layout: &BowtieLayout,
    eigenmode: &EigenmodeSolution,
    substrate: MirrorSubstrate,
) -> Result<AstigmaticBeam> {
    let n = layout.n_crystal;
    let incidence = 0.5 * layout.alpha_full;
    let inside = (incidence.sin() / substrate.index).asin();
    let path: Vec<RayElement> = vec![
        make_element(ElementKind::FreeSpace { length: 0.5 * layout.crystal.length, index: n })?,
        make_element(ElementKind::TiltedInterface { radius: None, n1: n, n2: 1.0, incidence: (1.0 / n).atan() })?,
        make_element(ElementKind::FreeSpace { length: layout.d_mc, index: 1.0 })?,
        make_element(ElementKind::TiltedInterface {
            radius: Some(substrate.r_front),
            n1: 1.0,
            n2: substrate.index,
            incidence,
        })?,
        make_element(ElementKind::FreeSpace { length: substrate.thickness / inside.cos(), index: substrate.index })?,
        make_element(ElementKind::TiltedInterface {
            radius: Some(substrate.r_back),
            n1: substrate.index,
            n2: 1.0,
            incidence: inside,
        })?,
    ];
    let start = AstigmaticBeam {
        q_x: eigenmode.q_x,
        q_y: eigenmode.q_y,
        wavelength: 0.5 * layout.wavelength.wavelength(),
        ambient_index: n,
        power: 1.0,
    };
    propagate(&start, &path)
}

/// Single cylindrical lens that makes `beam` stigmatic, placed where the two spot
/// sizes first coincide within `z_max` downstream. Distances are from the current plane.
pub fn stigmatic_correction(beam: &AstigmaticBeam, z_max: f64) -> Result<(f64, f64)> {
    if (beam.q_x - beam.q_y).norm() <= 1e-9 * beam.q_y.norm() {
        return Ok((f64::INFINITY, 0.0));
    }
    let at = |z: f64| -> Result<AstigmaticBeam> {
        propagate(beam, &[make_element(ElementKind::FreeSpace { length: z, index: 1.0 })?])
    };
    let gap = |z: f64| at(z).map(|b| b.spot_size(Plane::Tangential) - b.spot_size(Plane::Sagittal)).unwrap_or(f64::NAN);
    let (a, b) = scan_bracket(gap, 0.0, z_max, 4000).ok_or_else(|| {
        Error::Unreachable(format!(
            "spot sizes do not cross within {z_max} m; no single cylindrical lens restores a round beam"
        ))
    })?;
    let z = bisect(gap, a, b, 1e-13)?;
    let there = at(z)?;
    let power = there.q_x.inv().re - there.q_y.inv().re;
    Ok((if power == 0.0 { f64::INFINITY } else { 1.0 / power }, z))
}

pub fn output_correction(
    layout: &BowtieLayout,
    eigenmode: &EigenmodeSolution,
    substrate: MirrorSubstrate,
) -> Result<CylindricalCorrection> {
    let beam = sh_output_beam(layout, eigenmode, substrate)?;
    let (f, z) = stigmatic_correction(&beam, 2.0)?;
    let at = propagate(&beam, &[make_element(ElementKind::FreeSpace { length: z, index: 1.0 })?])?;
    Ok(CylindricalCorrection {
        focal_length: f,
        distance_from_m1: z + substrate.thickness,
        axis: Axis::X,
        spot_size: at.spot_size(Plane::Tangential),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamline::{AstigmaticBeam, Mat2};
    use num_complex::Complex64;

    fn offset_waists(w: f64, dz: f64) -> AstigmaticBeam {
        let mut b = AstigmaticBeam::circular(w, 313e-9, 1.0, 1.0).unwrap();
        b.q_y += Complex64::new(dz, 0.0);
        b
    }

    #[test]
    fn stigmatic_input_needs_no_lens() {
        let b = AstigmaticBeam::circular(100e-6, 313e-9, 1.0, 1.0).unwrap();
        assert_eq!(stigmatic_correction(&b, 1.0).unwrap().0, f64::INFINITY);
    }

    #[test]
    fn correction_leaves_equal_q() {
        let b = offset_waists(50e-6, -0.01);
        let (f, z) = stigmatic_correction(&b, 1.0).unwrap();
        let out = propagate(
            &b,
            &[
                make_element(ElementKind::FreeSpace { length: z, index: 1.0 }).unwrap(),
                make_element(ElementKind::CylindricalLens { focal_length: f, axis: Axis::X }).unwrap(),
            ],
        )
        .unwrap();
        assert!((out.q_x - out.q_y).norm() < 1e-9 * out.q_x.norm());
    }

    #[test]
    fn doubling_mismatch_strengthens_lens() {
        // Two-point oracle: propagate each plane by hand to the crossing plane.
        let oracle = |dz: f64| {
            let z = -0.5 * dz;
            let zr = std::f64::consts::PI * 50e-6f64.powi(2) / 313e-9;
            let qx = Mat2::propagation(z).apply(Complex64::new(0.0, zr));
            let qy = Mat2::propagation(z).apply(Complex64::new(dz, zr));
            1.0 / (qx.inv().re - qy.inv().re)
        };
        let mut last = 0.0;
        for dz in [-0.002, -0.004, -0.008] {
            let (f, z) = stigmatic_correction(&offset_waists(50e-6, dz), 1.0).unwrap();
            assert!((z - 0.5 * dz.abs()).abs() < 1e-9);
            assert!(((f - oracle(dz)) / f).abs() < 1e-6);
            assert!(1.0 / f.abs() > last);
            last = 1.0 / f.abs();
        }
    }

    #[test]
    fn no_crossing_is_unreachable() {
        let b = offset_waists(50e-6, 0.5);
        assert!(matches!(stigmatic_correction(&b, 1.0), Err(Error::Unreachable(_))));
    }
}
