//! Shell quadrature for singular and far-field integrals: stratified Monte
//! Carlo over annuli with radial importance sampling matched to the kernel
//! envelope, analytic tail bounds for everything beyond the outer radius, and
//! Monte Carlo volume fractions.
//!
//! All estimates are deterministic given the config seed: every shell owns a
//! substream derived from `(seed, shell radii)`, and merges are ordered sums.

use crate::kernels::KernelSpec;
use crate::point::Point;
use crate::sets::{random_in_ball, random_unit, Region, RegionSet};
use crate::special::{unit_ball_volume, unit_sphere_area};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("non-finite integrand sample at {point}")]
    NonFiniteSample { point: Point },
    #[error("invalid quad config: {0}")]
    BadConfig(String),
    #[error("invalid shell radii: inner {inner} must be < outer {outer} and nonnegative")]
    BadShell { inner: f64, outer: f64 },
}

/// Quadrature configuration. The epsilon schedule is geometric:
/// `eps_k = eps0 * 2^{-k}` for `k = 0..=k_max`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuadConfig {
    pub eps0: f64,
    pub k_max: usize,
    pub outer_radius: f64,
    pub samples_per_shell: usize,
    pub seed: u64,
    pub tol_abs: f64,
    pub tol_rel: f64,
    /// Exponent for the radial importance density `p(r) ~ r^{-1-s}`; set it
    /// to the kernel order so the density matches the integrand envelope.
    #[serde(default = "default_importance_s")]
    pub importance_s: f64,
    /// Sample count for volume-fraction estimates.
    #[serde(default = "default_volume_samples")]
    pub volume_samples: usize,
}

fn default_importance_s() -> f64 {
    0.5
}

fn default_volume_samples() -> usize {
    65_536
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            eps0: 0.5,
            k_max: 12,
            outer_radius: 64.0,
            samples_per_shell: 4096,
            seed: 0,
            tol_abs: 1e-3,
            tol_rel: 1e-2,
            importance_s: default_importance_s(),
            volume_samples: default_volume_samples(),
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<(), QuadError> {
        if !(self.eps0 > 0.0 && self.eps0 < self.outer_radius) {
            return Err(QuadError::BadConfig(format!(
                "need 0 < eps0 < outer_radius, got {} vs {}",
                self.eps0, self.outer_radius
            )));
        }
        if self.samples_per_shell < 100 {
            return Err(QuadError::BadConfig(format!(
                "samples_per_shell must be >= 100, got {}",
                self.samples_per_shell
            )));
        }
        if self.k_max < 4 {
            return Err(QuadError::BadConfig(format!(
                "k_max must be >= 4, got {}",
                self.k_max
            )));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.seed = seed;
        c
    }

    pub fn with_kernel(&self, k: &KernelSpec) -> Self {
        let mut c = self.clone();
        c.importance_s = k.s();
        c
    }

    /// Rescale all radii by `t` (used by exact-scaling checks).
    pub fn scaled(&self, t: f64) -> Self {
        let mut c = self.clone();
        c.eps0 *= t;
        c.outer_radius *= t;
        c
    }

    pub fn eps(&self, k: usize) -> f64 {
        self.eps0 * 2f64.powi(-(k as i32))
    }
}

/// One annulus integral with its standard error.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ShellIntegral {
    pub inner: f64,
    pub outer: f64,
    pub value: f64,
    pub stat_error: f64,
}

/// splitmix64 mix for substream derivation.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut z = 0x9e37_79b9_7f4a_7c15u64;
    for &p in parts {
        z ^= p.wrapping_add(0x9e37_79b9_7f4a_7c15).rotate_left(31);
        z = z.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z ^= z >> 27;
        z = z.wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

/// Inverse CDF of the radial density `p(r) ~ r^{-1-s}` on `[a, b]`.
fn radius_from_uniform(u: f64, a: f64, b: f64, s: f64) -> (f64, f64) {
    // returns (r, p(r))
    let fa = a.powf(-s);
    let fb = b.powf(-s);
    let r = (fa - u * (fa - fb)).powf(-1.0 / s);
    let norm = s / (fa - fb);
    (r, norm * r.powf(-1.0 - s))
}

/// Inverse CDF of the volume-uniform density `p(r) ~ r^{d-1}` on `[0, b]`.
fn radius_from_uniform_volume(u: f64, b: f64, d: usize) -> (f64, f64) {
    let r = b * u.powf(1.0 / d as f64);
    let p = d as f64 * r.powf(d as f64 - 1.0) / b.powf(d as f64);
    (r, p)
}

/// Stratified Monte Carlo integral of `f` over the annulus
/// `B_outer(x) \ B_inner(x)`, with radial importance density matched to
/// `r^{-1-s}` (volume-uniform when `inner == 0`). Deterministic given the
/// config seed.
pub fn shell_integrate<F>(
    f: F,
    x: &[f64],
    inner: f64,
    outer: f64,
    cfg: &QuadConfig,
) -> Result<ShellIntegral, QuadError>
where
    F: Fn(&[f64]) -> f64,
{
    if !(inner >= 0.0 && inner < outer) {
        return Err(QuadError::BadShell { inner, outer });
    }
    let d = x.len();
    let area = unit_sphere_area(d);
    let s = cfg.importance_s;
    let stream = mix_seed(&[cfg.seed, inner.to_bits(), outer.to_bits(), d as u64]);
    let mut rng = ChaCha8Rng::seed_from_u64(stream);

    let strata = 16usize;
    let per = (cfg.samples_per_shell / strata).max(8);
    let mut y = vec![0.0; d];
    let mut stratum_means = Vec::with_capacity(strata);
    let mut stratum_vars = Vec::with_capacity(strata);
    for j in 0..strata {
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..per {
            let u = (j as f64 + rng.gen::<f64>()) / strata as f64;
            let (r, p) = if inner == 0.0 {
                radius_from_uniform_volume(u, outer, d)
            } else {
                radius_from_uniform(u, inner, outer, s)
            };
            let w = random_unit(&mut rng, d);
            for i in 0..d {
                y[i] = x[i] + r * w[i];
            }
            let fv = f(&y);
            if !fv.is_finite() {
                return Err(QuadError::NonFiniteSample {
                    point: Point(y.clone()),
                });
            }
            let g = fv * area * r.powf(d as f64 - 1.0) / p;
            sum += g;
            sumsq += g * g;
        }
        let mean = sum / per as f64;
        let var = (sumsq / per as f64 - mean * mean).max(0.0) / per as f64;
        stratum_means.push(mean);
        stratum_vars.push(var);
    }
    let value = stratum_means.iter().sum::<f64>() / strata as f64;
    let var = stratum_vars.iter().sum::<f64>() / (strata * strata) as f64;
    Ok(ShellIntegral {
        inner,
        outer,
        value,
        stat_error: var.sqrt(),
    })
}

/// Upper bound for `| int_{|y-x| > R} chi~_E(y) K(x-y) dy |` for any set `E`:
/// `Lambda * d * |B_1| * R^{-s} / s`.
pub fn tail_bound(kernel: &KernelSpec, truncation: f64) -> f64 {
    assert!(truncation > 0.0, "truncation radius must be positive");
    kernel.big_lambda() * unit_sphere_area(kernel.dim()) * truncation.powf(-kernel.s())
        / kernel.s()
}

/// Monte Carlo volume fraction of `E` in `B_r(center)`, with the boundary-
/// valued mass reported separately.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct VolumeFraction {
    pub inside: f64,
    pub boundary: f64,
    pub std_error: f64,
    pub samples: usize,
}

pub fn volume_fraction(
    set: &RegionSet,
    center: &[f64],
    r: f64,
    cfg: &QuadConfig,
) -> VolumeFraction {
    assert!(r > 0.0, "radius must be positive");
    let stream = mix_seed(&[
        cfg.seed,
        0x766f_6c66,
        r.to_bits(),
        center.iter().fold(0, |acc, c| mix_seed(&[acc, c.to_bits()])),
    ]);
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    let n = cfg.volume_samples;
    let mut inside = 0usize;
    let mut boundary = 0usize;
    for _ in 0..n {
        let y = random_in_ball(&mut rng, center, r);
        match set.membership(&y) {
            Region::Inside => inside += 1,
            Region::Boundary => boundary += 1,
            Region::Outside => {}
        }
    }
    let p = inside as f64 / n as f64;
    VolumeFraction {
        inside: p,
        boundary: boundary as f64 / n as f64,
        std_error: (p * (1.0 - p) / n as f64).sqrt(),
        samples: n,
    }
}

/// Exact-when-possible volume fraction: analytic overlap for descriptors that
/// support it, Monte Carlo otherwise.
pub fn volume_fraction_fast(
    set: &RegionSet,
    center: &[f64],
    r: f64,
    cfg: &QuadConfig,
) -> (f64, f64) {
    match set.ball_overlap_volume(center, r) {
        Some(v) => (v / (unit_ball_volume(set.dim()) * r.powi(set.dim() as i32)), 0.0),
        None => {
            let vf = volume_fraction(set, center, r, cfg);
            (vf.inside, vf.std_error)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::RegionSet;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn annulus_area() {
        // f == 1 over the annulus 1 < |y| < 2 in d=2: area 3 pi
        let cfg = QuadConfig {
            samples_per_shell: 65_536,
            ..QuadConfig::default()
        };
        let got = shell_integrate(|_| 1.0, &[0.0, 0.0], 1.0, 2.0, &cfg).unwrap();
        assert!(
            (got.value - 3.0 * PI).abs() <= 3.0 * got.stat_error + 1e-6,
            "value {} vs {} (3 sigma = {})",
            got.value,
            3.0 * PI,
            3.0 * got.stat_error
        );
    }

    #[test]
    fn zero_integrand_is_exact_zero() {
        let cfg = QuadConfig::default();
        let got = shell_integrate(|_| 0.0, &[0.0], 1.0, 2.0, &cfg).unwrap();
        assert_eq!(got.value, 0.0);
        assert_eq!(got.stat_error, 0.0);
    }

    #[test]
    fn kernel_tail_via_shells_plus_analytic() {
        // d=1, s=0.5: int_{|y|>1} |y|^{-1.5} dy = 4, split as shells on
        // [1, 64] plus the exact tail beyond
        let k = KernelSpec::fractional(1, 0.5).unwrap();
        let cfg = QuadConfig {
            samples_per_shell: 32_768,
            importance_s: 0.5,
            ..QuadConfig::default()
        };
        let mut total = 0.0;
        let mut err2 = 0.0;
        let mut a: f64 = 1.0;
        while a < 64.0 {
            let b = (2.0 * a).min(64.0);
            let sh = shell_integrate(|y| k.evaluate(y), &[0.0], a, b, &cfg).unwrap();
            total += sh.value;
            err2 += sh.stat_error * sh.stat_error;
            a = b;
        }
        total += k.tail_integral(64.0);
        // the importance density matches the integrand exactly in d=1; the
        // estimate is exact up to floating-point noise in the weights
        assert_relative_eq!(total, 4.0, max_relative = 1e-9);
        assert!(err2.sqrt() < 1e-6, "variance should be at rounding level");
    }

    #[test]
    fn non_finite_sample_reports_location() {
        let cfg = QuadConfig::default();
        let err = shell_integrate(|_| f64::NAN, &[0.0, 0.0], 1.0, 2.0, &cfg).unwrap_err();
        assert!(matches!(err, QuadError::NonFiniteSample { .. }));
    }

    #[test]
    fn tail_bound_values() {
        let k = KernelSpec::fractional(1, 0.5).unwrap();
        assert_relative_eq!(tail_bound(&k, 1.0), 4.0, max_relative = 1e-12);
        let k2 = KernelSpec::anisotropic_cosine(2, 0.5, vec![1.0, 0.0], vec![2.0]).unwrap();
        // Lambda = 2, d|B_1| = 2 pi, R = 4: 2 * 2pi * 0.5 / 0.5 = 4 pi
        assert_relative_eq!(tail_bound(&k2, 4.0), 4.0 * PI, max_relative = 1e-9);
        // monotone to zero along a doubling sequence
        let mut prev = tail_bound(&k, 1.0);
        for i in 1..12 {
            let t = tail_bound(&k, 2f64.powi(i));
            assert!(t < prev);
            prev = t;
        }
        assert!(prev < 0.1);
    }

    #[test]
    fn shell_additivity_on_smooth_integrand() {
        let cfg = QuadConfig {
            samples_per_shell: 32_768,
            ..QuadConfig::default()
        };
        let f = |y: &[f64]| (1.0 + y[0]).sin() * (-0.1 * y[1]).exp();
        let x = [0.3, -0.2];
        let ab = shell_integrate(&f, &x, 0.5, 1.0, &cfg).unwrap();
        let bc = shell_integrate(&f, &x, 1.0, 2.0, &cfg).unwrap();
        let ac = shell_integrate(&f, &x, 0.5, 2.0, &cfg).unwrap();
        let diff = (ab.value + bc.value - ac.value).abs();
        let sigma = (ab.stat_error.powi(2) + bc.stat_error.powi(2) + ac.stat_error.powi(2))
            .sqrt();
        assert!(diff <= 3.0 * sigma, "diff {diff} vs 3 sigma {}", 3.0 * sigma);
    }

    #[test]
    fn deterministic_replay_is_bit_identical() {
        let cfg = QuadConfig {
            seed: 12345,
            ..QuadConfig::default()
        };
        let f = |y: &[f64]| 1.0 / (1.0 + y[0] * y[0]);
        let a = shell_integrate(&f, &[0.0, 0.0], 0.5, 2.0, &cfg).unwrap();
        let b = shell_integrate(&f, &[0.0, 0.0], 0.5, 2.0, &cfg).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.stat_error.to_bits(), b.stat_error.to_bits());
        let set = RegionSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let v1 = volume_fraction(&set, &[0.2, 0.1], 1.5, &cfg);
        let v2 = volume_fraction(&set, &[0.2, 0.1], 1.5, &cfg);
        assert_eq!(v1.inside.to_bits(), v2.inside.to_bits());
    }

    #[test]
    fn volume_fraction_half_space_and_ball() {
        let cfg = QuadConfig::default();
        let hs = RegionSet::half_space(vec![1.0, 0.0], 0.0).unwrap();
        let vf = volume_fraction(&hs, &[0.0, 0.0], 2.0, &cfg);
        assert!((vf.inside - 0.5).abs() <= 3.0 * vf.std_error);
        let b = RegionSet::ball(vec![0.3, 0.3], 1.0).unwrap();
        let vb = volume_fraction(&b, &[0.3, 0.3], 1.0, &cfg);
        assert_eq!(vb.inside, 1.0);
        assert_eq!(vb.boundary, 0.0);
    }

    #[test]
    fn volume_fraction_periodic_slab_matches_overlap_oracle() {
        // centre on a boundary plane, r = 1: the exact 1-D slab-overlap
        // integration gives exactly one half
        let ps = RegionSet::periodic_slab(2, 0.1).unwrap();
        let cfg = QuadConfig::default();
        let vf = volume_fraction(&ps, &[0.0, 0.0], 1.0, &cfg);
        let oracle = ps.ball_overlap_volume(&[0.0, 0.0], 1.0).unwrap() / PI;
        assert_relative_eq!(oracle, 0.5, max_relative = 1e-12);
        assert!((vf.inside - oracle).abs() <= 3.0 * vf.std_error);
    }

    #[test]
    fn fractions_partition_to_one() {
        let ps = RegionSet::periodic_slab(2, 0.3).unwrap();
        let cfg = QuadConfig::default();
        let cfg2 = cfg.with_seed(777);
        let a = volume_fraction(&ps, &[0.1, 0.0], 2.0, &cfg);
        let b = volume_fraction(&ps.complement(), &[0.1, 0.0], 2.0, &cfg2);
        let sigma = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        let total = a.inside + b.inside + a.boundary;
        assert!((total - 1.0).abs() <= 3.0 * sigma + 1e-9);
    }
}
