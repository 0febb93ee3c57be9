//! Asymptotic interconversion rates `rho^n -> sigma^m (x) phi^(n-m)` under
//! entropy preservation and energy conservation.
//!
//! The three diagram points must be collinear with `x_rho` between
//! `x_sigma` and `x_phi`, so the best `phi` is where the half-line from
//! `x_sigma` through `x_rho` leaves the diagram: either on the `S = 0`
//! segment (a pure state) or on the thermal curve.

use crate::diagram::DiagramPoint;
use crate::energetics;
use crate::gibbs::{Beta, GibbsFamily};
use crate::operators::DensityMatrix;
use crate::roots::{self, Tolerance};
use crate::{Error, Result};

/// Points closer than this (max over coordinates) count as coincident.
pub const COINCIDENT_TOL: f64 = 1e-12;
/// A state within this entropy of the boundary along the ray is already on
/// it.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiKind {
    Pure,
    Thermal(Beta),
    /// `x_rho` is already on the boundary in the direction away from
    /// `x_sigma`; nothing of `sigma` can be produced.
    SourceDegenerate,
    /// `x_rho = x_sigma`.
    Coincident,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSolution {
    pub r: f64,
    pub phi_point: DiagramPoint,
    pub phi_kind: PhiKind,
    pub collinearity_residual: f64,
}

fn point(rho: &DensityMatrix, fam: &GibbsFamily) -> Result<DiagramPoint> {
    Ok(DiagramPoint {
        energy: energetics::energy(rho, fam)?,
        entropy: rho.entropy(),
    })
}

/// Boundary entropy above energy `e` (clamped into the spectral range).
fn ceiling(fam: &GibbsFamily, e: f64) -> Result<f64> {
    let e = e.clamp(fam.e_min(), fam.e_max());
    Ok(fam.boundary_entropy(fam.spontaneous_beta(e)?))
}

fn residual(r: f64, rho: DiagramPoint, sigma: DiagramPoint, phi: DiagramPoint) -> f64 {
    let de = rho.energy - (r * sigma.energy + (1.0 - r) * phi.energy);
    let ds = rho.entropy - (r * sigma.entropy + (1.0 - r) * phi.entropy);
    de.abs().max(ds.abs())
}

/// Rate for points in the diagram of `fam`.
pub fn conversion_rate_points(rho: DiagramPoint, sigma: DiagramPoint, fam: &GibbsFamily) -> Result<RateSolution> {
    let de = rho.energy - sigma.energy;
    let ds = rho.entropy - sigma.entropy;
    if de.abs().max(ds.abs()) <= COINCIDENT_TOL {
        return Ok(RateSolution {
            r: 1.0,
            phi_point: rho,
            phi_kind: PhiKind::Coincident,
            collinearity_residual: 0.0,
        });
    }
    let at = |t: f64| DiagramPoint {
        energy: sigma.energy + t * de,
        entropy: sigma.entropy + t * ds,
    };
    // last t >= 1 allowed by the linear constraints S >= 0, E_min <= E <= E_max
    let mut t_max = f64::INFINITY;
    let mut pure_limit = false;
    if ds < 0.0 {
        t_max = -sigma.entropy / ds;
        pure_limit = true;
    }
    let e_limit = if de > 0.0 {
        (fam.e_max() - sigma.energy) / de
    } else if de < 0.0 {
        (fam.e_min() - sigma.energy) / de
    } else {
        f64::INFINITY
    };
    if e_limit < t_max {
        t_max = e_limit;
        pure_limit = false;
    }
    let gap = |t: f64| -> Result<f64> {
        let p = at(t);
        Ok(ceiling(fam, p.energy)? - p.entropy)
    };
    if !t_max.is_finite() {
        // straight up at fixed energy: meets the curve directly
        t_max = (ceiling(fam, rho.energy)? - sigma.entropy) / ds;
    }
    let t_max = t_max.max(1.0);

    let (t_star, pure) = if gap(1.0)? <= BOUNDARY_TOL || t_max <= 1.0 {
        (1.0, rho.entropy <= BOUNDARY_TOL)
    } else if gap(t_max)? >= -BOUNDARY_TOL {
        // the linear limit comes first; corner ties go to the pure branch
        (t_max, pure_limit)
    } else {
        let mut failure = None;
        let t = roots::brent(
            |t| match gap(t) {
                Ok(g) => g,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            1.0,
            t_max,
            Tolerance::default(),
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        (t, false)
    };

    if t_star <= 1.0 {
        let kind = PhiKind::SourceDegenerate;
        return Ok(RateSolution {
            r: 0.0,
            phi_point: rho,
            phi_kind: kind,
            collinearity_residual: 0.0,
        });
    }
    let mut phi = at(t_star);
    let kind = if pure {
        phi.entropy = 0.0;
        PhiKind::Pure
    } else {
        PhiKind::Thermal(fam.spontaneous_beta(phi.energy.clamp(fam.e_min(), fam.e_max()))?)
    };
    let r = (1.0 - 1.0 / t_star).clamp(0.0, 1.0);
    Ok(RateSolution {
        r,
        phi_point: phi,
        phi_kind: kind,
        collinearity_residual: residual(r, rho, sigma, phi),
    })
}

pub fn conversion_rate(rho: &DensityMatrix, sigma: &DensityMatrix, fam: &GibbsFamily) -> Result<RateSolution> {
    if sigma.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    conversion_rate_points(point(rho, fam)?, point(sigma, fam)?, fam)
}

/// `S(rho) / S(sigma)`: the rate when only entropy is constrained.
pub fn rate_entropy_only(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let (sr, ss) = (rho.entropy(), sigma.entropy());
    if ss <= 0.0 {
        if sr <= 0.0 {
            return Ok(1.0);
        }
        return Err(Error::Unsupported("target state is pure but source is mixed".into()));
    }
    Ok((sr / ss).max(0.0))
}
