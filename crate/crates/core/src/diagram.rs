//! Energy-entropy diagram: the thermal boundary `(E(beta), S(beta))`, its
//! tangent lines, and the geometric reading of bound energy, free energy
//! and athermality as horizontal and vertical distances to the boundary.
//!
//! [`project_state`] locates boundary points by plain bisection along the
//! curve, so its readings cross-check the root solvers in [`crate::gibbs`].

use std::io::Write;
use std::path::Path;

use crate::energetics;
use crate::gibbs::{Beta, GibbsFamily};
use crate::operators::DensityMatrix;
use crate::Result;

pub const DEFAULT_POINTS: usize = 513;

/// Coordinates `(E, S)` of a state or boundary point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagramPoint {
    pub energy: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone)]
pub struct BoundarySample<'a> {
    pub betas: Vec<Beta>,
    pub points: Vec<DiagramPoint>,
    pub family: &'a GibbsFamily,
}

fn beta_scale(fam: &GibbsFamily) -> f64 {
    let w = fam.width();
    if w > 0.0 {
        2.0 / w
    } else {
        1.0
    }
}

fn warp(beta: Beta, scale: f64) -> f64 {
    match beta {
        Beta::PosInf => 1.0,
        Beta::NegInf => -1.0,
        Beta::Finite(b) => (b / scale).tanh(),
    }
}

fn unwarp(u: f64, scale: f64) -> Beta {
    if u >= 1.0 {
        Beta::PosInf
    } else if u <= -1.0 {
        Beta::NegInf
    } else {
        Beta::Finite(scale * u.atanh())
    }
}

/// Samples the boundary on a grid uniform in `tanh(beta / s)`, with `s`
/// twice the inverse spectral width, which crowds points near `beta = 0`.
/// Sentinel end points give the spectral extremes.
pub fn sample_boundary<'a>(
    fam: &'a GibbsFamily,
    beta_min: Beta,
    beta_max: Beta,
    n_points: usize,
) -> Result<BoundarySample<'a>> {
    if n_points < 3 || beta_min.value() >= beta_max.value() {
        return Err(crate::Error::Precondition(
            "boundary sampling needs beta_min < beta_max and at least 3 points".into(),
        ));
    }
    let scale = beta_scale(fam);
    let (u0, u1) = (warp(beta_min, scale), warp(beta_max, scale));
    let mut betas = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let beta = if i == 0 {
            beta_min
        } else if i == n_points - 1 {
            beta_max
        } else {
            unwarp(u0 + (u1 - u0) * i as f64 / (n_points - 1) as f64, scale)
        };
        betas.push(beta);
    }
    let points = betas
        .iter()
        .map(|&b| {
            let p = fam.thermal_point(b);
            DiagramPoint {
                energy: p.energy,
                entropy: p.entropy,
            }
        })
        .collect();
    Ok(BoundarySample {
        betas,
        points,
        family: fam,
    })
}

impl BoundarySample<'_> {
    /// Largest amount by which an interior point falls below the chord of
    /// its two neighbours (energy-ordered). Zero or negative for a concave
    /// curve.
    pub fn concavity_violation(&self) -> f64 {
        let mut pts = self.points.clone();
        pts.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        pts.dedup_by(|a, b| (a.energy - b.energy).abs() <= 1e-15 * a.energy.abs().max(1.0));
        let mut worst = f64::NEG_INFINITY;
        for w in pts.windows(3) {
            let t = (w[1].energy - w[0].energy) / (w[2].energy - w[0].energy);
            let chord = w[0].entropy + t * (w[2].entropy - w[0].entropy);
            worst = worst.max(chord - w[1].entropy);
        }
        worst
    }

    pub fn is_concave(&self, tol: f64) -> bool {
        self.concavity_violation() <= tol
    }
}

/// Geometric readings of a state against the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub point: DiagramPoint,
    /// Horizontal distance to the `beta >= 0` branch at equal entropy.
    pub free_energy: f64,
    pub bound_energy: f64,
    /// Vertical distance to the boundary at equal energy.
    pub athermality: f64,
    /// Slope of the boundary at the horizontal foot point.
    pub tangent_beta: Beta,
    /// Slope of the boundary at the vertical foot point.
    pub vertical_beta: Beta,
}

// beta = s t / (1 - t^2) maps (-1, 1) onto the real line and keeps
// resolution for large |beta|
fn rational(t: f64, scale: f64) -> Beta {
    if t >= 1.0 {
        Beta::PosInf
    } else if t <= -1.0 {
        Beta::NegInf
    } else {
        Beta::Finite(scale * t / ((1.0 - t) * (1.0 + t)))
    }
}

/// Bisection on `t` in `[lo, hi]` for a decreasing function of beta;
/// returns the `t` where `f` crosses `target`.
fn bisect_decreasing(mut f: impl FnMut(Beta) -> f64, target: f64, mut lo: f64, mut hi: f64, scale: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(rational(mid, scale)) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn project_state(rho: &DensityMatrix, fam: &GibbsFamily) -> Result<Projection> {
    let e = energetics::energy(rho, fam)?;
    let s = rho.entropy();
    let scale = beta_scale(fam);
    let point = DiagramPoint { energy: e, entropy: s };

    let (bound_energy, tangent_beta) = if s >= fam.max_entropy() {
        (fam.boundary_energy(Beta::Finite(0.0)), Beta::Finite(0.0))
    } else if s <= fam.ground_entropy() {
        (fam.e_min(), Beta::PosInf)
    } else {
        let t = bisect_decreasing(|b| fam.boundary_entropy(b), s, 0.0, 1.0, scale);
        let beta = rational(t, scale);
        (fam.boundary_energy(beta), beta)
    };

    let vertical_beta = if fam.width() == 0.0 {
        Beta::Finite(0.0)
    } else if e <= fam.e_min() {
        Beta::PosInf
    } else if e >= fam.e_max() {
        Beta::NegInf
    } else {
        rational(bisect_decreasing(|b| fam.boundary_energy(b), e, -1.0, 1.0, scale), scale)
    };

    Ok(Projection {
        point,
        free_energy: e - bound_energy,
        bound_energy,
        athermality: fam.boundary_entropy(vertical_beta) - s,
        tangent_beta,
        vertical_beta,
    })
}

/// The line `S = S_beta + beta (E - E_beta)` touching the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentLine {
    pub slope: f64,
    pub intercept: f64,
    pub touch: DiagramPoint,
}

impl TangentLine {
    pub fn entropy_at(&self, energy: f64) -> f64 {
        self.intercept + self.slope * energy
    }

    /// Height of the line above a point: the `beta`-athermality when the
    /// point belongs to a state.
    pub fn gap(&self, p: DiagramPoint) -> f64 {
        self.entropy_at(p.energy) - p.entropy
    }
}

pub fn tangent_line(fam: &GibbsFamily, beta: f64) -> Result<TangentLine> {
    if !beta.is_finite() {
        return Err(crate::Error::Unsupported("tangent line needs a finite beta".into()));
    }
    let p = fam.thermal_point(Beta::Finite(beta));
    Ok(TangentLine {
        slope: beta,
        intercept: p.entropy - beta * p.energy,
        touch: DiagramPoint {
            energy: p.energy,
            entropy: p.entropy,
        },
    })
}

/// Formats with 12 significant digits in the style of C's `%.12g`.
pub fn fmt12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..12).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mantissa), sign, exp.abs())
    } else {
        trim(&format!("{:.*}", (11 - exp) as usize, x))
    }
}

pub fn fmt_beta(b: Beta) -> String {
    match b {
        Beta::Finite(x) => fmt12(x),
        other => other.to_string(),
    }
}

/// The diagram as CSV text: the boundary block, then one row per labelled
/// state (omitted when there are none).
pub fn diagram_csv(sample: &BoundarySample, states: &[(&str, &DensityMatrix)]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .flexible(true)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["beta", "E", "S"])?;
    for (b, p) in sample.betas.iter().zip(&sample.points) {
        w.write_record([fmt_beta(*b), fmt12(p.energy), fmt12(p.entropy)])?;
    }
    if !states.is_empty() {
        w.write_record([
            "label",
            "E",
            "S",
            "F",
            "B",
            "A",
            "beta_intrinsic",
            "beta_spontaneous",
        ])?;
        for (label, rho) in states {
            let r = energetics::report(rho, sample.family)?;
            w.write_record([
                label.to_string(),
                fmt12(r.energy),
                fmt12(r.entropy),
                fmt12(r.free_energy),
                fmt12(r.bound_energy),
                fmt12(r.athermality),
                fmt_beta(r.intrinsic_beta),
                fmt_beta(r.spontaneous_beta),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("ASCII output"))
}

pub fn export_diagram(
    sample: &BoundarySample,
    states: &[(&str, &DensityMatrix)],
    path: &Path,
) -> Result<()> {
    let text = diagram_csv(sample, states)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
