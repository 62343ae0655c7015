//! Borel sets with exact membership predicates.
//!
//! A [`RegionSet`] is a sign field plus a tri-state membership function; the
//! canonical library (half-space, ball, slabs, cone sector, sparse dust) covers
//! every set the verifiers need. Sets are predicates, not meshes, so quadrature
//! accuracy depends only on the integrator.

use crate::point::{self, Point};
use crate::special::unit_ball_volume;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tri-state membership.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Inside,
    Outside,
    Boundary,
}

#[derive(Debug, Error)]
pub enum SetError {
    #[error("unknown canonical set name `{0}`")]
    UnknownName(String),
    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("dimension mismatch: set has dim {set}, point has dim {point}")]
    DimMismatch { set: usize, point: usize },
    #[error("sparse dust construction exhausted {tries} tries with {placed} grains placed")]
    DustExhausted { tries: usize, placed: usize },
}

/// Relative half-width of the band around the zero set that reports
/// [`Region::Boundary`]. Scaled by the local length scale, this keeps
/// floating-point constructed boundary points on the boundary while random
/// samples essentially never land there.
const BOUNDARY_TOL_REL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Grain {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Shape {
    Empty,
    /// Inside where `x . normal < offset`.
    HalfSpace { normal: Vec<f64>, offset: f64 },
    Ball { center: Vec<f64>, radius: f64 },
    /// Inside where `lo < x[axis] < hi`.
    Slab { axis: usize, lo: f64, hi: f64 },
    /// Inside where `x[0] mod 2*delta` lies in `(0, delta)`.
    PeriodicSlab { delta: f64 },
    /// Inside where the angle between `x` and `axis` is below `half_angle`.
    ConeSector { axis: Vec<f64>, half_angle: f64 },
    /// Finite union of disjoint closed balls.
    Dust {
        grains: Vec<Grain>,
        scale: f64,
        target: f64,
    },
    /// Finite union of axis-aligned open boxes (test-set generator; not part
    /// of the canonical scene vocabulary).
    BoxUnion { boxes: Vec<(Vec<f64>, Vec<f64>)> },
}

/// Declared symmetries, checked by sampling in tests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SymmetryTag {
    /// Reflection across the hyperplane `x . normal = offset` exchanges the
    /// set with its complement.
    SwapReflection { normal: Vec<f64>, offset: f64 },
    /// Every hyperplane `x[axis] = k * delta`, integer `k`, is a swap
    /// reflection.
    PeriodicSwapReflection { axis: usize, delta: f64 },
    /// `x -> t x`, `t > 0`, preserves membership.
    ScaleInvariant,
}

/// Far-field behaviour seen from a base point, used to close unbounded
/// integrals exactly where the geometry allows it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FarField {
    /// Everything beyond the given radius from the base point is Outside.
    AllOutside(f64),
    /// Everything beyond the given radius from the base point is Inside.
    AllInside(f64),
    /// Reflection through the base point exchanges the set with its
    /// complement, so annuli centred there integrate the signed indicator
    /// to zero exactly.
    SwapZero,
    Unknown,
}

#[derive(Clone, Debug)]
pub struct RegionSet {
    dim: usize,
    shape: Shape,
    complemented: bool,
}

impl RegionSet {
    fn from_shape(dim: usize, shape: Shape) -> Self {
        RegionSet {
            dim,
            shape,
            complemented: false,
        }
    }

    pub fn empty(dim: usize) -> Self {
        Self::from_shape(dim, Shape::Empty)
    }

    pub fn half_space(normal: Vec<f64>, offset: f64) -> Result<Self, SetError> {
        let n = point::norm(&normal);
        if !(n > 0.0) || !n.is_finite() {
            return Err(SetError::InvalidParam {
                name: "normal",
                reason: "must be a nonzero finite vector".into(),
            });
        }
        let dim = normal.len();
        let unit: Vec<f64> = normal.iter().map(|v| v / n).collect();
        Ok(Self::from_shape(
            dim,
            Shape::HalfSpace {
                normal: unit,
                offset: offset / n,
            },
        ))
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self, SetError> {
        if !(radius > 0.0) {
            return Err(SetError::InvalidParam {
                name: "radius",
                reason: format!("must be positive, got {radius}"),
            });
        }
        let dim = center.len();
        Ok(Self::from_shape(dim, Shape::Ball { center, radius }))
    }

    pub fn ball_complement(center: Vec<f64>, radius: f64) -> Result<Self, SetError> {
        Ok(Self::ball(center, radius)?.complement())
    }

    pub fn slab(dim: usize, axis: usize, lo: f64, hi: f64) -> Result<Self, SetError> {
        if axis >= dim {
            return Err(SetError::InvalidParam {
                name: "axis",
                reason: format!("axis {axis} out of range for dim {dim}"),
            });
        }
        if !(hi > lo) {
            return Err(SetError::InvalidParam {
                name: "lo/hi",
                reason: format!("need lo < hi, got {lo} >= {hi}"),
            });
        }
        Ok(Self::from_shape(dim, Shape::Slab { axis, lo, hi }))
    }

    pub fn periodic_slab(dim: usize, delta: f64) -> Result<Self, SetError> {
        if !(delta > 0.0) {
            return Err(SetError::InvalidParam {
                name: "delta",
                reason: format!("must be positive, got {delta}"),
            });
        }
        Ok(Self::from_shape(dim, Shape::PeriodicSlab { delta }))
    }

    pub fn cone_sector(axis: Vec<f64>, half_angle: f64) -> Result<Self, SetError> {
        let n = point::norm(&axis);
        if !(n > 0.0) {
            return Err(SetError::InvalidParam {
                name: "axis",
                reason: "must be a nonzero vector".into(),
            });
        }
        if !(half_angle > 0.0 && half_angle < std::f64::consts::PI) {
            return Err(SetError::InvalidParam {
                name: "half_angle",
                reason: format!("must lie in (0, pi), got {half_angle}"),
            });
        }
        let dim = axis.len();
        let unit: Vec<f64> = axis.iter().map(|v| v / n).collect();
        Ok(Self::from_shape(
            dim,
            Shape::ConeSector {
                axis: unit,
                half_angle,
            },
        ))
    }

    pub fn box_union(dim: usize, boxes: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self, SetError> {
        for (lo, hi) in &boxes {
            if lo.len() != dim || hi.len() != dim {
                return Err(SetError::DimMismatch {
                    set: dim,
                    point: lo.len(),
                });
            }
            if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                return Err(SetError::InvalidParam {
                    name: "boxes",
                    reason: "each box needs lo < hi componentwise".into(),
                });
            }
        }
        Ok(Self::from_shape(dim, Shape::BoxUnion { boxes }))
    }

    pub fn dust_from_grains(dim: usize, grains: Vec<Grain>, scale: f64, target: f64) -> Self {
        Self::from_shape(
            dim,
            Shape::Dust {
                grains,
                scale,
                target,
            },
        )
    }

    pub fn complement(&self) -> Self {
        let mut c = self.clone();
        c.complemented = !c.complemented;
        c
    }

    pub fn is_complemented(&self) -> bool {
        self.complemented
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Exact rescaling `E -> t E`, descriptor-level.
    pub fn scaled(&self, t: f64) -> Self {
        assert!(t > 0.0, "scale factor must be positive");
        let shape = match &self.shape {
            Shape::Empty => Shape::Empty,
            Shape::HalfSpace { normal, offset } => Shape::HalfSpace {
                normal: normal.clone(),
                offset: offset * t,
            },
            Shape::Ball { center, radius } => Shape::Ball {
                center: center.iter().map(|c| c * t).collect(),
                radius: radius * t,
            },
            Shape::Slab { axis, lo, hi } => Shape::Slab {
                axis: *axis,
                lo: lo * t,
                hi: hi * t,
            },
            Shape::PeriodicSlab { delta } => Shape::PeriodicSlab { delta: delta * t },
            Shape::ConeSector { axis, half_angle } => Shape::ConeSector {
                axis: axis.clone(),
                half_angle: *half_angle,
            },
            Shape::Dust {
                grains,
                scale,
                target,
            } => Shape::Dust {
                grains: grains
                    .iter()
                    .map(|g| Grain {
                        center: g.center.iter().map(|c| c * t).collect(),
                        radius: g.radius * t,
                    })
                    .collect(),
                scale: scale * t,
                target: *target,
            },
            Shape::BoxUnion { boxes } => Shape::BoxUnion {
                boxes: boxes
                    .iter()
                    .map(|(lo, hi)| {
                        (
                            lo.iter().map(|v| v * t).collect(),
                            hi.iter().map(|v| v * t).collect(),
                        )
                    })
                    .collect(),
            },
        };
        RegionSet {
            dim: self.dim,
            shape,
            complemented: self.complemented,
        }
    }

    /// Characteristic geometric length, used for boundary tolerances and
    /// gradient steps.
    pub fn feature_scale(&self) -> f64 {
        match &self.shape {
            Shape::Empty | Shape::HalfSpace { .. } | Shape::ConeSector { .. } => 1.0,
            Shape::Ball { radius, .. } => *radius,
            Shape::Slab { lo, hi, .. } => hi - lo,
            Shape::PeriodicSlab { delta } => *delta,
            Shape::Dust { grains, scale, .. } => grains
                .iter()
                .map(|g| g.radius)
                .fold(*scale, f64::min)
                .max(f64::MIN_POSITIVE),
            Shape::BoxUnion { boxes } => boxes
                .iter()
                .flat_map(|(lo, hi)| lo.iter().zip(hi).map(|(a, b)| b - a))
                .fold(1.0, f64::min),
        }
    }

    fn local_scale(&self, x: &[f64]) -> f64 {
        let f = self.feature_scale();
        match self.shape {
            Shape::ConeSector { .. } => f.max(point::norm(x)),
            _ => f,
        }
    }

    /// Raw sign field of the underlying shape (before complementation):
    /// negative inside, positive outside, zero on the boundary where
    /// representable.
    fn base_sign(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Empty => 1.0,
            Shape::HalfSpace { normal, offset } => point::dot(x, normal) - offset,
            Shape::Ball { center, radius } => point::dist(x, center) - radius,
            Shape::Slab { axis, lo, hi } => {
                let u = x[*axis];
                (lo - u).max(u - hi)
            }
            Shape::PeriodicSlab { delta } => {
                let u = x[0].rem_euclid(2.0 * delta);
                // distance to the lattice {0, delta, 2 delta}, negative in (0, delta)
                if u <= *delta {
                    -u.min(delta - u)
                } else {
                    (u - delta).min(2.0 * delta - u)
                }
            }
            Shape::ConeSector { axis, half_angle } => {
                let r = point::norm(x);
                // |x| cos(theta) - x . a : zero on the cone, negative strictly
                // inside; scales linearly near the boundary
                r * half_angle.cos() - point::dot(x, axis)
            }
            Shape::Dust { grains, .. } => grains
                .iter()
                .map(|g| point::dist(x, &g.center) - g.radius)
                .fold(f64::INFINITY, f64::min),
            Shape::BoxUnion { boxes } => boxes
                .iter()
                .map(|(lo, hi)| {
                    (0..x.len())
                        .map(|i| (lo[i] - x[i]).max(x[i] - hi[i]))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Sign field: negative inside, positive outside, zero on the boundary.
    pub fn sign_field(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let s = self.base_sign(x);
        if self.complemented {
            -s
        } else {
            s
        }
    }

    pub fn membership(&self, x: &[f64]) -> Region {
        let s = self.sign_field(x);
        let tol = BOUNDARY_TOL_REL * self.local_scale(x);
        if s.abs() <= tol {
            Region::Boundary
        } else if s < 0.0 {
            Region::Inside
        } else {
            Region::Outside
        }
    }

    /// Signed indicator: -1 inside, +1 outside, 0 on the boundary.
    pub fn tilde_chi(&self, x: &[f64]) -> i8 {
        match self.membership(x) {
            Region::Inside => -1,
            Region::Outside => 1,
            Region::Boundary => 0,
        }
    }

    pub fn tilde_chi_f(&self, x: &[f64]) -> f64 {
        f64::from(self.tilde_chi(x))
    }

    pub fn symmetry_tags(&self) -> Vec<SymmetryTag> {
        match &self.shape {
            Shape::HalfSpace { normal, offset } => {
                let mut tags = vec![SymmetryTag::SwapReflection {
                    normal: normal.clone(),
                    offset: *offset,
                }];
                if *offset == 0.0 {
                    tags.push(SymmetryTag::ScaleInvariant);
                }
                tags
            }
            Shape::PeriodicSlab { delta } => vec![SymmetryTag::PeriodicSwapReflection {
                axis: 0,
                delta: *delta,
            }],
            Shape::ConeSector { .. } => vec![SymmetryTag::ScaleInvariant],
            Shape::Empty => vec![SymmetryTag::ScaleInvariant],
            _ => vec![],
        }
    }

    /// Far-field classification seen from `x`, used to close the integral
    /// beyond the outer quadrature radius.
    pub fn far_field_from(&self, x: &[f64]) -> FarField {
        let bounded = |r: f64| {
            if self.complemented {
                FarField::AllInside(r)
            } else {
                FarField::AllOutside(r)
            }
        };
        match &self.shape {
            Shape::Empty => bounded(0.0),
            Shape::Ball { center, radius } => bounded(point::dist(x, center) + radius),
            Shape::Dust { grains, .. } => {
                let r = grains
                    .iter()
                    .map(|g| point::dist(x, &g.center) + g.radius)
                    .fold(0.0, f64::max);
                bounded(r)
            }
            Shape::BoxUnion { boxes } => {
                let r = boxes
                    .iter()
                    .map(|(lo, hi)| {
                        (0..self.dim)
                            .map(|i| (lo[i] - x[i]).abs().max((hi[i] - x[i]).abs()).powi(2))
                            .sum::<f64>()
                            .sqrt()
                    })
                    .fold(0.0, f64::max);
                bounded(r)
            }
            Shape::Slab { axis, lo, hi } if self.dim == 1 => {
                let _ = axis;
                bounded((lo - x[0]).abs().max((hi - x[0]).abs()))
            }
            Shape::HalfSpace { normal, offset } => {
                let tol = BOUNDARY_TOL_REL * self.local_scale(x);
                if (point::dot(x, normal) - offset).abs() <= tol {
                    FarField::SwapZero
                } else {
                    FarField::Unknown
                }
            }
            Shape::PeriodicSlab { delta } => {
                let tol = BOUNDARY_TOL_REL * delta;
                let u = x[0].rem_euclid(*delta);
                if u.min(delta - u) <= tol {
                    FarField::SwapZero
                } else {
                    FarField::Unknown
                }
            }
            _ => FarField::Unknown,
        }
    }

    /// Exact `|E ∩ B_r(center)|` where the descriptor admits one.
    pub fn ball_overlap_volume(&self, center: &[f64], r: f64) -> Option<f64> {
        let base = match &self.shape {
            Shape::Empty => Some(0.0),
            Shape::Ball {
                center: c,
                radius: rr,
            } => Some(ball_ball_overlap(self.dim, r, *rr, point::dist(center, c))),
            Shape::Dust { grains, .. } => Some(
                grains
                    .iter()
                    .map(|g| ball_ball_overlap(self.dim, r, g.radius, point::dist(center, &g.center)))
                    .sum(),
            ),
            Shape::HalfSpace { normal, offset } => {
                let t = point::dot(center, normal) - offset;
                Some(ball_beyond_coordinate(self.dim, r, t))
            }
            Shape::Slab { axis, lo, hi } => {
                Some(slab_section_overlap(self.dim, center[*axis], r, &[(*lo, *hi)]))
            }
            Shape::PeriodicSlab { delta } => {
                let c0 = center[0];
                let k_lo = ((c0 - r) / (2.0 * delta)).floor() as i64 - 1;
                let k_hi = ((c0 + r) / (2.0 * delta)).ceil() as i64 + 1;
                let intervals: Vec<(f64, f64)> = (k_lo..=k_hi)
                    .map(|k| (2.0 * k as f64 * delta, (2.0 * k as f64 + 1.0) * delta))
                    .collect();
                Some(slab_section_overlap(self.dim, c0, r, &intervals))
            }
            Shape::ConeSector { .. } | Shape::BoxUnion { .. } => None,
        }?;
        if self.complemented {
            Some(unit_ball_volume(self.dim) * r.powi(self.dim as i32) - base)
        } else {
            Some(base)
        }
    }

    /// Total measure for bounded descriptors.
    pub fn total_volume(&self) -> Option<f64> {
        if self.complemented {
            return None;
        }
        match &self.shape {
            Shape::Empty => Some(0.0),
            Shape::Ball { radius, .. } => {
                Some(unit_ball_volume(self.dim) * radius.powi(self.dim as i32))
            }
            Shape::Dust { grains, .. } => Some(
                grains
                    .iter()
                    .map(|g| unit_ball_volume(self.dim) * g.radius.powi(self.dim as i32))
                    .sum(),
            ),
            Shape::BoxUnion { boxes } => {
                // boxes may overlap; only valid for disjoint unions, which is
                // what the generators produce
                Some(
                    boxes
                        .iter()
                        .map(|(lo, hi)| lo.iter().zip(hi).map(|(a, b)| b - a).product::<f64>())
                        .sum(),
                )
            }
            _ => None,
        }
    }

    /// Short canonical descriptor for reports.
    pub fn descriptor(&self) -> String {
        let base = match &self.shape {
            Shape::Empty => "empty".to_string(),
            Shape::HalfSpace { normal, offset } => {
                format!("halfSpace(n={normal:?} c={offset})")
            }
            Shape::Ball { center, radius } => format!("ball(c={center:?} r={radius})"),
            Shape::Slab { axis, lo, hi } => format!("slab(axis={axis} {lo}..{hi})"),
            Shape::PeriodicSlab { delta } => format!("periodicSlab(delta={delta})"),
            Shape::ConeSector { axis, half_angle } => {
                format!("coneSector(axis={axis:?} angle={half_angle})")
            }
            Shape::Dust { grains, scale, target } => {
                format!("sparseDust(n={} scale={scale} target={target})", grains.len())
            }
            Shape::BoxUnion { boxes } => format!("boxUnion(n={})", boxes.len()),
        };
        if self.complemented {
            format!("complement[{base}]")
        } else {
            base
        }
    }

    /// Sample points on the boundary, optionally restricted to a window ball.
    /// Points are constructed on the zero set shape-by-shape.
    pub fn sample_boundary(
        &self,
        n: usize,
        seed: u64,
        window: Option<(&[f64], f64)>,
    ) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5e7b_0a44_91c3_77d1);
        let d = self.dim;
        let (wc, wr) = match window {
            Some((c, r)) => (c.to_vec(), r),
            None => (vec![0.0; d], 4.0 * self.feature_scale().max(1.0)),
        };
        let mut out = Vec::with_capacity(n);
        let mut tries = 0usize;
        let max_tries = 1000 * n.max(1);
        while out.len() < n && tries < max_tries {
            tries += 1;
            let cand: Option<Vec<f64>> = match &self.shape {
                Shape::Empty => None,
                Shape::HalfSpace { normal, offset } => {
                    // random point in the window projected onto the plane
                    let mut y = random_in_ball(&mut rng, &wc, wr);
                    let t = *offset - point::dot(&y, normal);
                    for i in 0..d {
                        y[i] += t * normal[i];
                    }
                    Some(y)
                }
                Shape::Ball { center, radius } => {
                    let u = random_unit(&mut rng, d);
                    Some((0..d).map(|i| center[i] + radius * u[i]).collect())
                }
                Shape::Slab { axis, lo, hi } => {
                    let mut y = random_in_ball(&mut rng, &wc, wr);
                    y[*axis] = if rng.gen::<bool>() { *lo } else { *hi };
                    Some(y)
                }
                Shape::PeriodicSlab { delta } => {
                    let mut y = random_in_ball(&mut rng, &wc, wr);
                    let k = (y[0] / delta).round();
                    y[0] = k * delta;
                    Some(y)
                }
                Shape::ConeSector { axis, half_angle } => {
                    // direction at exactly the half-angle from the axis
                    let w = random_orthogonal_unit(&mut rng, axis);
                    let r = wr * rng.gen::<f64>().max(1e-3);
                    let (sa, ca) = half_angle.sin_cos();
                    Some(
                        (0..d)
                            .map(|i| r * (ca * axis[i] + sa * w[i]))
                            .collect(),
                    )
                }
                Shape::Dust { grains, .. } => {
                    if grains.is_empty() {
                        None
                    } else {
                        let g = &grains[rng.gen_range(0..grains.len())];
                        let u = random_unit(&mut rng, d);
                        Some((0..d).map(|i| g.center[i] + g.radius * u[i]).collect())
                    }
                }
                Shape::BoxUnion { boxes } => {
                    if boxes.is_empty() {
                        None
                    } else {
                        let (lo, hi) = &boxes[rng.gen_range(0..boxes.len())];
                        let face_dim = rng.gen_range(0..d);
                        let mut y: Vec<f64> = (0..d)
                            .map(|i| rng.gen_range(lo[i]..hi[i]))
                            .collect();
                        y[face_dim] = if rng.gen::<bool>() { lo[face_dim] } else { hi[face_dim] };
                        Some(y)
                    }
                }
            };
            let Some(y) = cand else { break };
            if window.is_some() && point::dist(&y, &wc) > wr {
                continue;
            }
            if self.membership(&y) == Region::Boundary {
                out.push(Point(y));
            }
        }
        out
    }
}

/// Volume of `B_{r1}(0) ∩ B_{r2}(c)` with `|c| = dist`, dimensions 1-3.
pub fn ball_ball_overlap(d: usize, r1: f64, r2: f64, dist: f64) -> f64 {
    if dist >= r1 + r2 {
        return 0.0;
    }
    let rmin = r1.min(r2);
    if dist <= (r1 - r2).abs() {
        return unit_ball_volume(d) * rmin.powi(d as i32);
    }
    match d {
        1 => (r1 + r2 - dist).max(0.0).min(2.0 * rmin),
        2 => {
            let d2 = dist * dist;
            let a1 = ((d2 + r1 * r1 - r2 * r2) / (2.0 * dist * r1)).clamp(-1.0, 1.0);
            let a2 = ((d2 + r2 * r2 - r1 * r1) / (2.0 * dist * r2)).clamp(-1.0, 1.0);
            let tri = (-dist + r1 + r2) * (dist + r1 - r2) * (dist - r1 + r2) * (dist + r1 + r2);
            r1 * r1 * a1.acos() + r2 * r2 * a2.acos() - 0.5 * tri.max(0.0).sqrt()
        }
        3 => {
            let num = (r1 + r2 - dist).powi(2)
                * (dist * dist + 2.0 * dist * (r1 + r2) - 3.0 * (r1 - r2).powi(2));
            std::f64::consts::PI * num / (12.0 * dist)
        }
        _ => panic!("ball_ball_overlap supports d <= 3, got {d}"),
    }
}

/// Volume of the part of a ball of radius `r` whose (signed) first coordinate
/// relative to the cut plane exceeds `t`; `t` is the signed distance of the
/// ball centre to the plane, positive on the kept side's opposite.
fn ball_beyond_coordinate(d: usize, r: f64, t: f64) -> f64 {
    if t <= -r {
        return unit_ball_volume(d) * r.powi(d as i32);
    }
    if t >= r {
        return 0.0;
    }
    match d {
        1 => r - t,
        2 => r * r * (t / r).acos() - t * (r * r - t * t).sqrt(),
        3 => std::f64::consts::PI * (r - t).powi(2) * (2.0 * r + t) / 3.0,
        _ => panic!("ball cap volume supports d <= 3, got {d}"),
    }
}

/// Antiderivative of the ball cross-section profile `c_{d-1} (r^2-u^2)^{(d-1)/2}`.
fn section_antiderivative(d: usize, r: f64, u: f64) -> f64 {
    let u = u.clamp(-r, r);
    match d {
        1 => u,
        2 => u * (r * r - u * u).max(0.0).sqrt() + r * r * (u / r).asin(),
        3 => std::f64::consts::PI * (r * r * u - u * u * u / 3.0),
        _ => panic!("slab section overlap supports d <= 3, got {d}"),
    }
}

/// `|B_r(c) ∩ {x[axis] in union of intervals}|` via exact 1-D integration of
/// cross-sections; `c_axis` is the centre's coordinate along the axis.
pub fn slab_section_overlap(d: usize, c_axis: f64, r: f64, intervals: &[(f64, f64)]) -> f64 {
    let mut total = 0.0;
    for &(a, b) in intervals {
        let lo = (a - c_axis).max(-r);
        let hi = (b - c_axis).min(r);
        if hi > lo {
            total += section_antiderivative(d, r, hi) - section_antiderivative(d, r, lo);
        }
    }
    total
}

pub fn random_unit(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| standard_normal(rng)).collect();
        let n = point::norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

pub fn random_in_ball(rng: &mut impl Rng, center: &[f64], r: f64) -> Vec<f64> {
    let d = center.len();
    let dir = random_unit(rng, d);
    let radius = r * rng.gen::<f64>().powf(1.0 / d as f64);
    (0..d).map(|i| center[i] + radius * dir[i]).collect()
}

fn random_orthogonal_unit(rng: &mut impl Rng, axis: &[f64]) -> Vec<f64> {
    let d = axis.len();
    if d == 1 {
        return vec![0.0];
    }
    loop {
        let mut v = random_unit(rng, d);
        let proj = point::dot(&v, axis);
        for i in 0..d {
            v[i] -= proj * axis[i];
        }
        let n = point::norm(&v);
        if n > 1e-6 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Marsaglia polar method; avoids a distribution dependency.
fn standard_normal(rng: &mut impl Rng) -> f64 {
    loop {
        let u = 2.0 * rng.gen::<f64>() - 1.0;
        let v = 2.0 * rng.gen::<f64>() - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            return u * (-2.0 * s.ln() / s).sqrt();
        }
    }
}

// ---------------------------------------------------------------------------
// sparse dust
// ---------------------------------------------------------------------------

pub struct SparseDustParams {
    pub dim: usize,
    /// Upper bound for the volume fraction of the set in every dyadic ball of
    /// radius >= `scale` centred at grain centres.
    pub target: f64,
    /// Minimum feature scale; grains are much smaller than this.
    pub scale: f64,
    pub seed: u64,
    pub domain_radius: f64,
    pub max_grains: usize,
}

impl SparseDustParams {
    pub fn new(dim: usize, target: f64, scale: f64, seed: u64) -> Self {
        SparseDustParams {
            dim,
            target,
            scale,
            seed,
            domain_radius: 2.0,
            max_grains: 128,
        }
    }
}

/// Greedy construction: place small balls at random centres, skipping any
/// placement that would push the dyadic density bound over the target.
/// Deterministic given the seed.
pub fn sparse_dust(p: &SparseDustParams) -> Result<RegionSet, SetError> {
    if !(p.target > 0.0 && p.target < 1.0) {
        return Err(SetError::InvalidParam {
            name: "target",
            reason: format!("must lie in (0,1), got {}", p.target),
        });
    }
    if !(p.scale > 0.0) {
        return Err(SetError::InvalidParam {
            name: "scale",
            reason: format!("must be positive, got {}", p.scale),
        });
    }
    let d = p.dim;
    let grain_r = p.scale * p.target.powf(1.0 / d as f64) / 8.0;
    let vol_grain = unit_ball_volume(d) * grain_r.powi(d as i32);
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut grains: Vec<Grain> = Vec::new();

    // dyadic probe radii from the feature scale up past the domain
    let mut radii = Vec::new();
    let mut r = p.scale;
    while r <= 4.0 * p.domain_radius {
        radii.push(r);
        r *= 2.0;
    }

    let budget_ok = |grains: &[Grain], cand: &Grain| -> bool {
        let mut probes: Vec<&Grain> = grains.iter().collect();
        probes.push(cand);
        for probe in &probes {
            for &r in &radii {
                // conservative: count whole grains reaching B_r around points
                // of the probe grain's sphere
                let reach = r + 2.0 * grain_r;
                let mass: f64 = probes
                    .iter()
                    .filter(|g| point::dist(&g.center, &probe.center) <= reach)
                    .count() as f64
                    * vol_grain;
                if mass > p.target * unit_ball_volume(d) * r.powi(d as i32) {
                    return false;
                }
            }
        }
        true
    };

    let max_tries = 200 * p.max_grains.max(1);
    let mut tries = 0;
    while grains.len() < p.max_grains && tries < max_tries {
        tries += 1;
        let center = random_in_ball(&mut rng, &vec![0.0; d], p.domain_radius - grain_r);
        let min_gap = 6.0 * grain_r;
        if grains
            .iter()
            .any(|g| point::dist(&g.center, &center) < 2.0 * grain_r + min_gap)
        {
            continue;
        }
        let cand = Grain {
            center,
            radius: grain_r,
        };
        if budget_ok(&grains, &cand) {
            grains.push(cand);
        }
    }
    if grains.is_empty() {
        return Err(SetError::DustExhausted {
            tries,
            placed: 0,
        });
    }
    Ok(RegionSet::dust_from_grains(d, grains, p.scale, p.target))
}

/// Random union of disjoint small balls with a hard total-measure budget,
/// used as the generic "small set" in the density-estimate verifiers.
pub fn random_dust_with_budget(
    dim: usize,
    total_measure: f64,
    n_grains: usize,
    domain_radius: f64,
    seed: u64,
) -> RegionSet {
    let d = dim;
    let per = total_measure / n_grains.max(1) as f64;
    let grain_r = (per / unit_ball_volume(d)).powf(1.0 / d as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9d1c_3a6f);
    let mut grains = Vec::new();
    let mut tries = 0;
    while grains.len() < n_grains && tries < 10_000 {
        tries += 1;
        let center = random_in_ball(&mut rng, &vec![0.0; d], (domain_radius - grain_r).max(0.0));
        if grains
            .iter()
            .any(|g: &Grain| point::dist(&g.center, &center) < 2.0 * grain_r * 1.5)
        {
            continue;
        }
        grains.push(Grain {
            center,
            radius: grain_r,
        });
    }
    RegionSet::dust_from_grains(d, grains, grain_r, 1.0)
}

/// Random union of disjoint axis-aligned boxes inside a ball.
pub fn random_box_union(
    dim: usize,
    n_boxes: usize,
    domain_radius: f64,
    max_side: f64,
    seed: u64,
) -> RegionSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x517c_c1b7_2722_0a95);
    let mut boxes: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut tries = 0;
    while boxes.len() < n_boxes && tries < 10_000 {
        tries += 1;
        let center = random_in_ball(&mut rng, &vec![0.0; dim], domain_radius * 0.9);
        let half: Vec<f64> = (0..dim)
            .map(|_| 0.5 * max_side * rng.gen_range(0.2..1.0))
            .collect();
        let lo: Vec<f64> = (0..dim).map(|i| center[i] - half[i]).collect();
        let hi: Vec<f64> = (0..dim).map(|i| center[i] + half[i]).collect();
        let disjoint = boxes.iter().all(|(blo, bhi): &(Vec<f64>, Vec<f64>)| {
            (0..dim).any(|i| hi[i] <= blo[i] || bhi[i] <= lo[i])
        });
        if disjoint {
            boxes.push((lo, hi));
        }
    }
    RegionSet::box_union(dim, boxes).expect("generated boxes are valid")
}

// ---------------------------------------------------------------------------
// touching balls
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TouchingBall {
    pub center: Point,
    pub radius: f64,
    pub contact: Point,
}

impl TouchingBall {
    /// `|contact - center| = radius` up to tolerance.
    pub fn contact_on_sphere(&self) -> bool {
        let d = point::dist(self.contact.as_slice(), self.center.as_slice());
        (d - self.radius).abs() <= 1e-9 * self.radius.max(1.0)
    }
}

/// Default sample count for the exterior-ball disjointness verification.
pub const EXTERIOR_BALL_SAMPLES: usize = 10_000;

/// Rejection-sampling disjointness check: no sampled interior point of the
/// ball may lie in `E` (or on its boundary).
pub fn ball_is_exterior(
    set: &RegionSet,
    center: &[f64],
    radius: f64,
    samples: usize,
    seed: u64,
) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xba11_c4ec_u64);
    for _ in 0..samples {
        let y = random_in_ball(&mut rng, center, radius);
        if set.membership(&y) != Region::Outside {
            return false;
        }
    }
    true
}

/// Search for an exterior touching ball at a boundary point `x`: candidates
/// go along the outward sign-field gradient, radius found by bisection over
/// the largest verified radius `<= max_radius`.
pub fn find_exterior_ball(
    set: &RegionSet,
    x: &[f64],
    max_radius: f64,
    seed: u64,
) -> Option<TouchingBall> {
    debug_assert_eq!(set.membership(x), Region::Boundary);
    let d = set.dim();
    let h = 1e-6 * set.local_scale(x);
    let mut grad = vec![0.0; d];
    let mut lo_pt = vec![0.0; d];
    let mut hi_pt = vec![0.0; d];
    for i in 0..d {
        lo_pt.copy_from_slice(x);
        hi_pt.copy_from_slice(x);
        lo_pt[i] -= h;
        hi_pt[i] += h;
        grad[i] = (set.sign_field(&hi_pt) - set.sign_field(&lo_pt)) / (2.0 * h);
    }
    let gnorm = point::norm(&grad);
    if !(gnorm > 1e-8) || !gnorm.is_finite() {
        // degenerate boundary: no candidate direction
        return None;
    }
    let dir: Vec<f64> = grad.iter().map(|g| g / gnorm).collect();

    let verify = |r: f64| -> bool {
        let center: Vec<f64> = (0..d).map(|i| x[i] + r * dir[i]).collect();
        ball_is_exterior(set, &center, r, EXTERIOR_BALL_SAMPLES, seed)
    };

    // balls along the same outward ray are nested, so bisection is valid
    let radius = if verify(max_radius) {
        max_radius
    } else {
        let tiny = 1e-4 * max_radius;
        if !verify(tiny) {
            return None;
        }
        let mut lo = tiny;
        let mut hi = max_radius;
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            if verify(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let center: Vec<f64> = (0..d).map(|i| x[i] + radius * dir[i]).collect();
    Some(TouchingBall {
        center: Point(center),
        radius,
        contact: Point(x.to_vec()),
    })
}
