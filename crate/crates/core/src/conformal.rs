//! The map `P(w) = (tan(w/2))^{1/2}` from the periodic physical strip to the tilde plane.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;

use crate::contour::SampledCurve;
use crate::error::{Error, Result};
use crate::spectral::{GridFunction, C64};

/// Distance below which a point counts as sitting on a singular point or a pole.
pub const SINGULAR_TOLERANCE: f64 = 1e-8;

const TAU: f64 = 2.0 * PI;

/// Reduce an angle into `[0, 2π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x % TAU;
    if r < 0.0 {
        r + TAU
    } else {
        r
    }
}

/// Square-root branch: the cut is the ray from 0 in direction `cut_direction` in the
/// `tan(w/2)` plane, chosen to pass through the image of `cut_anchor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchSpec {
    cut_anchor: C64,
    cut_direction: f64,
}

impl BranchSpec {
    /// Cut along the negative real axis of `tan(w/2)`.
    pub fn principal() -> Self {
        BranchSpec {
            cut_anchor: C64::new(-PI / 2.0, 0.0),
            cut_direction: PI,
        }
    }

    /// Cut through the image of the physical point `anchor` (typically the splash point).
    pub fn through(anchor: C64) -> Result<Self> {
        if !(anchor.re.is_finite() && anchor.im.is_finite()) {
            return Err(Error::InvalidParameter("cut anchor must be finite"));
        }
        let t = half_tan(anchor)?;
        if t.norm() < SINGULAR_TOLERANCE {
            return Err(Error::InvalidParameter("cut anchor maps to the branch point"));
        }
        Ok(BranchSpec {
            cut_anchor: anchor,
            cut_direction: wrap_angle(t.arg()),
        })
    }

    /// Cut in an explicit direction; the recorded anchor is the physical point whose
    /// image sits on the ray at modulus 1/2.
    pub fn with_direction(cut_direction: f64) -> Result<Self> {
        if !cut_direction.is_finite() {
            return Err(Error::InvalidParameter("cut direction must be finite"));
        }
        let dir = wrap_angle(cut_direction);
        let on_ray = C64::from_polar(0.5, dir);
        let anchor = on_ray.atan() * 2.0;
        Ok(BranchSpec {
            cut_anchor: anchor,
            cut_direction: dir,
        })
    }

    pub fn cut_anchor(&self) -> C64 {
        self.cut_anchor
    }

    pub fn cut_direction(&self) -> f64 {
        self.cut_direction
    }

    /// Square root of `t` whose argument lies in `(θ - 2π, θ]` for `θ = cut_direction`.
    pub fn sqrt(&self, t: C64) -> C64 {
        let mut phi = t.arg();
        let theta = self.cut_direction;
        while phi > theta {
            phi -= TAU;
        }
        while phi <= theta - TAU {
            phi += TAU;
        }
        C64::from_polar(t.norm().sqrt(), 0.5 * phi)
    }

    /// Angular distance of `t` from the cut ray, in `[0, π]`.
    pub fn angle_to_cut(&self, t: C64) -> f64 {
        let d = wrap_angle(t.arg() - self.cut_direction);
        d.min(TAU - d)
    }
}

impl Default for BranchSpec {
    fn default() -> Self {
        Self::principal()
    }
}

/// The five singular points of `P⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularPointSet {
    pub points: [C64; 5],
}

pub fn singular_points() -> SingularPointSet {
    let s = FRAC_1_SQRT_2;
    SingularPointSet {
        points: [
            C64::new(0.0, 0.0),
            C64::new(s, s),
            C64::new(-s, s),
            C64::new(-s, -s),
            C64::new(s, -s),
        ],
    }
}

fn half_tan(w: C64) -> Result<C64> {
    let half = w * 0.5;
    if half.cos().norm() < SINGULAR_TOLERANCE {
        return Err(Error::Pole { re: w.re, im: w.im });
    }
    let t = half.tan();
    if !(t.re.is_finite() && t.im.is_finite()) {
        return Err(Error::Pole { re: w.re, im: w.im });
    }
    Ok(t)
}

#[allow(non_snake_case)]
pub fn map_P(w: C64, branch: &BranchSpec) -> Result<C64> {
    Ok(branch.sqrt(half_tan(w)?))
}

fn check_poles(zeta: C64) -> Result<()> {
    let q = singular_points();
    for (index, p) in q.points.iter().enumerate().skip(1) {
        let distance = (zeta - p).norm();
        if distance < SINGULAR_TOLERANCE {
            return Err(Error::SingularPoint { index, distance });
        }
    }
    Ok(())
}

fn check_all(zeta: C64) -> Result<()> {
    if zeta.norm() < SINGULAR_TOLERANCE {
        return Err(Error::SingularPoint {
            index: 0,
            distance: zeta.norm(),
        });
    }
    check_poles(zeta)
}

/// `2·arctan(ζ²)` with the principal arctan. Defined at `q⁰`; rejects `q¹…q⁴`.
#[allow(non_snake_case)]
pub fn map_P_inv(zeta: C64) -> Result<C64> {
    check_poles(zeta)?;
    Ok((zeta * zeta).atan() * 2.0)
}

#[allow(non_snake_case)]
pub fn dP_dw(w: C64, branch: &BranchSpec) -> Result<C64> {
    let t = half_tan(w)?;
    if t.norm() < SINGULAR_TOLERANCE {
        return Err(Error::SingularPoint {
            index: 0,
            distance: t.norm(),
        });
    }
    Ok((C64::new(1.0, 0.0) + t * t) / (branch.sqrt(t) * 4.0))
}

/// Holomorphic derivative of `P⁻¹`: `4ζ/(1 + ζ⁴)`.
#[allow(non_snake_case)]
pub fn dP_inv(zeta: C64) -> Result<C64> {
    check_poles(zeta)?;
    let z2 = zeta * zeta;
    Ok(zeta * 4.0 / (C64::new(1.0, 0.0) + z2 * z2))
}

/// Gradient of the first component of `P⁻¹` in the real coordinates of `ζ`.
#[allow(non_snake_case)]
pub fn grad_P1_inv(zeta: C64) -> Result<[f64; 2]> {
    let g = dP_inv(zeta)?;
    Ok([g.re, -g.im])
}

/// Gradient of the second component of `P⁻¹` in the real coordinates of `ζ`.
#[allow(non_snake_case)]
pub fn grad_P2_inv(zeta: C64) -> Result<[f64; 2]> {
    let g = dP_inv(zeta)?;
    Ok([g.im, g.re])
}

/// `Q² = |dP/dw(P⁻¹(ζ))|²` at a single tilde point.
pub fn q_factor_at(zeta: C64, branch: &BranchSpec) -> Result<f64> {
    check_all(zeta)?;
    let w = map_P_inv(zeta)?;
    Ok(dP_dw(w, branch)?.norm_sqr())
}

/// Samples of `Q²` along a tilde curve.
pub fn q_factor(curve: &SampledCurve, branch: &BranchSpec) -> Result<GridFunction> {
    GridFunction::new(
        curve
            .points()
            .into_iter()
            .map(|zeta| q_factor_at(zeta, branch))
            .collect::<Result<Vec<f64>>>()?,
    )
}
