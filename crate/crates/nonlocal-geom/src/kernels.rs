//! Interaction kernels: symmetric, homogeneous of degree `-(d+s)`, with a
//! two-sided fractional envelope `lambda |y|^{-d-s} <= K(y) <= Lambda |y|^{-d-s}`.
//!
//! Every kernel here is an angular profile times the fractional kernel. The
//! profile is bounded, even, and strictly positive; the envelope constants are
//! its range.

use crate::point::{self};
use crate::sets::random_unit;
use crate::special::unit_sphere_area;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("s must lie in (0,1), got {0}")]
    SOutOfRange(f64),
    #[error("profile must be strictly positive; sampled minimum {0}")]
    ProfileNotPositive(f64),
    #[error("profile has an odd component: |p(w) - p(-w)| = {0} at a sampled direction")]
    OddComponent(f64),
}

#[derive(Clone)]
enum Profile {
    /// Identically one.
    Unit,
    /// `c0 + sum_k c_k cos(2 k phi)` with `phi` the angle from `axis`;
    /// even on the sphere by construction.
    Cosine { axis: Vec<f64>, coeffs: Vec<f64> },
    /// Arbitrary even 0-homogeneous profile, validated by sampling.
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

/// A kernel `K(y) = profile(y/|y|) |y|^{-d-s}` satisfying the symmetry and
/// envelope conditions.
#[derive(Clone)]
pub struct KernelSpec {
    dim: usize,
    s: f64,
    lambda: f64,
    big_lambda: f64,
    kind: &'static str,
    profile: Profile,
    sphere_mean: f64,
}

impl std::fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "KernelSpec({} d={} s={} lambda={} Lambda={})",
            self.kind, self.dim, self.s, self.lambda, self.big_lambda
        )
    }
}

fn check_s(s: f64) -> Result<(), KernelError> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(KernelError::SOutOfRange(s))
    }
}

impl KernelSpec {
    /// The fractional kernel `|y|^{-d-s}`; envelope constants are both 1.
    pub fn fractional(dim: usize, s: f64) -> Result<Self, KernelError> {
        check_s(s)?;
        Ok(KernelSpec {
            dim,
            s,
            lambda: 1.0,
            big_lambda: 1.0,
            kind: "fractional",
            profile: Profile::Unit,
            sphere_mean: 1.0,
        })
    }

    /// Anisotropic kernel with an even cosine-series profile in the angle from
    /// `axis`: `profile(phi) = coeffs[0] + sum_{k>=1} coeffs[k] cos(2k phi)`.
    pub fn anisotropic_cosine(
        dim: usize,
        s: f64,
        axis: Vec<f64>,
        coeffs: Vec<f64>,
    ) -> Result<Self, KernelError> {
        check_s(s)?;
        let n = point::norm(&axis);
        let axis: Vec<f64> = axis.iter().map(|v| v / n).collect();
        let (lo, hi) = cosine_range(&coeffs);
        if !(lo > 0.0) {
            return Err(KernelError::ProfileNotPositive(lo));
        }
        let mean = cosine_sphere_mean(dim, &coeffs);
        Ok(KernelSpec {
            dim,
            s,
            lambda: lo,
            big_lambda: hi,
            kind: "anisotropic",
            profile: Profile::Cosine { axis, coeffs },
            sphere_mean: mean,
        })
    }

    /// Kernel from an arbitrary bounded even profile on the sphere. The
    /// profile is validated by sampling: an odd component or a non-positive
    /// value is rejected, and the envelope constants are the sampled range.
    pub fn from_profile<F>(dim: usize, s: f64, profile: F) -> Result<Self, KernelError>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        check_s(s)?;
        let mut rng = ChaCha8Rng::seed_from_u64(0x6b72_6e6c);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut mean = 0.0;
        let samples = 20_000;
        for _ in 0..samples {
            let w = random_unit(&mut rng, dim);
            let neg: Vec<f64> = w.iter().map(|v| -v).collect();
            let p = profile(&w);
            let q = profile(&neg);
            let odd = (p - q).abs();
            if odd > 1e-9 * p.abs().max(q.abs()).max(1e-30) {
                return Err(KernelError::OddComponent(odd));
            }
            lo = lo.min(p);
            hi = hi.max(p);
            mean += p;
        }
        mean /= samples as f64;
        if !(lo > 0.0) {
            return Err(KernelError::ProfileNotPositive(lo));
        }
        Ok(KernelSpec {
            dim,
            s,
            lambda: lo,
            big_lambda: hi,
            kind: "perturbed",
            profile: Profile::Custom(Arc::new(profile)),
            sphere_mean: mean,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn big_lambda(&self) -> f64 {
        self.big_lambda
    }

    pub fn kind(&self) -> &'static str {
        self.kind
    }

    pub fn cosine_profile(&self) -> Option<(&[f64], &[f64])> {
        match &self.profile {
            Profile::Cosine { axis, coeffs } => Some((axis, coeffs)),
            _ => None,
        }
    }

    fn profile_at(&self, y: &[f64], r: f64) -> f64 {
        match &self.profile {
            Profile::Unit => 1.0,
            Profile::Cosine { axis, coeffs } => {
                let c = (point::dot(y, axis) / r).clamp(-1.0, 1.0);
                cosine_eval(coeffs, c)
            }
            Profile::Custom(f) => f(y),
        }
    }

    /// `K(y)`; unbounded as `y -> 0`, returns +inf at exactly zero.
    pub fn evaluate(&self, y: &[f64]) -> f64 {
        let r = point::norm(y);
        if r == 0.0 {
            return f64::INFINITY;
        }
        self.profile_at(y, r) * r.powf(-(self.dim as f64) - self.s)
    }

    /// Exact `int_{|y| > r} K(y) dy` (the profile average over the sphere
    /// times the fractional tail).
    pub fn tail_integral(&self, r: f64) -> f64 {
        self.sphere_mean * unit_sphere_area(self.dim) * r.powf(-self.s) / self.s
    }
}

/// Evaluate `c0 + sum c_k cos(2k phi)` given `cos(phi)`, via the Chebyshev
/// recurrence in `cos(2 phi)`.
fn cosine_eval(coeffs: &[f64], cos_phi: f64) -> f64 {
    if coeffs.is_empty() {
        return 0.0;
    }
    let c2 = 2.0 * cos_phi * cos_phi - 1.0; // cos(2 phi)
    let mut acc = coeffs[0];
    let mut t_prev = 1.0; // T_0(c2)
    let mut t_cur = c2; // T_1(c2)
    for &ck in &coeffs[1..] {
        acc += ck * t_cur;
        let t_next = 2.0 * c2 * t_cur - t_prev;
        t_prev = t_cur;
        t_cur = t_next;
    }
    acc
}

/// Range of the cosine profile over the sphere, by dense scan in the angle.
fn cosine_range(coeffs: &[f64]) -> (f64, f64) {
    let n = 20_001;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let phi = std::f64::consts::PI * i as f64 / (n - 1) as f64;
        let v = cosine_eval(coeffs, phi.cos());
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Sphere average of the cosine profile: Simpson quadrature against the
/// `sin^{d-2}` angular weight.
fn cosine_sphere_mean(dim: usize, coeffs: &[f64]) -> f64 {
    if dim == 1 {
        // two directions, both at phi in {0, pi}; even series gives the sum
        return cosine_eval(coeffs, 1.0);
    }
    let n = 4096; // even
    let h = std::f64::consts::PI / n as f64;
    let w = |phi: f64| phi.sin().powi(dim as i32 - 2);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..=n {
        let phi = i as f64 * h;
        let c = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        num += c * cosine_eval(coeffs, phi.cos()) * w(phi);
        den += c * w(phi);
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn fractional_values() {
        let k1 = KernelSpec::fractional(1, 0.5).unwrap();
        assert_relative_eq!(k1.evaluate(&[2.0]), 2f64.powf(-1.5), max_relative = 1e-14);
        let k2 = KernelSpec::fractional(2, 0.5).unwrap();
        assert_relative_eq!(k2.evaluate(&[1.0, 0.0]), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn fractional_rejects_bad_s() {
        assert!(KernelSpec::fractional(1, 0.0).is_err());
        assert!(KernelSpec::fractional(1, 1.0).is_err());
        assert!(KernelSpec::fractional(1, -0.3).is_err());
    }

    #[test]
    fn symmetry_on_random_samples() {
        let k = KernelSpec::anisotropic_cosine(2, 0.5, vec![1.0, 0.0], vec![1.5, 0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let y: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
            if point::norm(&y) < 1e-6 {
                continue;
            }
            let neg: Vec<f64> = y.iter().map(|v| -v).collect();
            assert_relative_eq!(k.evaluate(&y), k.evaluate(&neg), max_relative = 1e-12);
        }
    }

    #[test]
    fn unit_profile_reduces_to_fractional() {
        let frac = KernelSpec::fractional(2, 0.5).unwrap();
        let aniso = KernelSpec::anisotropic_cosine(2, 0.5, vec![1.0, 0.0], vec![1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let y: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            if point::norm(&y) < 1e-9 {
                continue;
            }
            assert_relative_eq!(frac.evaluate(&y), aniso.evaluate(&y), max_relative = 1e-12);
        }
        assert_relative_eq!(aniso.lambda(), 1.0, max_relative = 1e-9);
        assert_relative_eq!(aniso.big_lambda(), 1.0, max_relative = 1e-9);
    }

    #[test]
    fn cosine_profile_value_on_axis() {
        // profile(phi) = 1.5 + 0.5 cos(2 phi); at y = (1,0): phi = 0 -> 2.0
        let k = KernelSpec::anisotropic_cosine(2, 0.5, vec![1.0, 0.0], vec![1.5, 0.5]).unwrap();
        assert_relative_eq!(k.evaluate(&[1.0, 0.0]), 2.0, max_relative = 1e-12);
        assert_relative_eq!(k.lambda(), 1.0, max_relative = 1e-9);
        assert_relative_eq!(k.big_lambda(), 2.0, max_relative = 1e-9);
    }

    #[test]
    fn envelope_holds_on_log_uniform_samples() {
        let k = KernelSpec::anisotropic_cosine(2, 0.5, vec![0.0, 1.0], vec![1.5, 0.5]).unwrap();
        let (lam, big) = (k.lambda(), k.big_lambda());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let logr = rng.gen_range(-6.0..6.0);
            let r = 10f64.powf(logr);
            let u = random_unit(&mut rng, 2);
            let y: Vec<f64> = u.iter().map(|v| v * r).collect();
            let env = r.powf(-2.0 - 0.5);
            let v = k.evaluate(&y);
            assert!(v >= lam * env * (1.0 - 1e-10), "below envelope at r={r}");
            assert!(v <= big * env * (1.0 + 1e-10), "above envelope at r={r}");
        }
    }

    #[test]
    fn fractional_scaling_exact() {
        let k = KernelSpec::fractional(2, 0.25).unwrap();
        let y = [0.3, -0.7];
        for &r in &[0.5, 2.0, 16.0] {
            let ry: Vec<f64> = y.iter().map(|v| v * r).collect();
            assert_relative_eq!(
                k.evaluate(&ry),
                r.powf(-2.25) * k.evaluate(&y),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn odd_profile_rejected() {
        let err = KernelSpec::from_profile(2, 0.5, |w: &[f64]| 1.0 + 0.3 * w[0]);
        assert!(matches!(err, Err(KernelError::OddComponent(_))));
    }

    #[test]
    fn non_positive_profile_rejected() {
        let err = KernelSpec::anisotropic_cosine(2, 0.5, vec![1.0, 0.0], vec![0.5, 0.6]);
        assert!(matches!(err, Err(KernelError::ProfileNotPositive(_))));
    }

    #[test]
    fn tail_integral_matches_fractional_formula() {
        // d=1, s=0.5, R=1: 2 * 1 / 0.5 = 4
        let k = KernelSpec::fractional(1, 0.5).unwrap();
        assert_relative_eq!(k.tail_integral(1.0), 4.0, max_relative = 1e-12);
        // anisotropic in d=2: sphere mean is the constant coefficient
        let a = KernelSpec::anisotropic_cosine(2, 0.5, vec![1.0, 0.0], vec![1.5, 0.5]).unwrap();
        let expect = 1.5 * crate::special::unit_sphere_area(2) * 2.0; // R=1, /s=2
        assert_relative_eq!(a.tail_integral(1.0), expect, max_relative = 1e-9);
    }
}
