//! Nonlocal perimeters `Per_K(E; Omega)` over ball localizers, and a
//! classical-perimeter estimator.
//!
//! Pairs are sampled as `(x, x + r w)` with the radius importance-sampled to
//! the kernel envelope; flat pair sampling almost never straddles the boundary
//! of a thin set. Far cross pairs are closed exactly for bounded sets and
//! tail-bounded otherwise.

use crate::kernels::KernelSpec;
use crate::point::{self};
use crate::quad::{mix_seed, volume_fraction, QuadConfig, QuadError};
use crate::sets::{random_in_ball, random_unit, Region, RegionSet};
use crate::special::{unit_ball_volume, unit_sphere_area};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Ball localizer; the only window the estimates use.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Omega {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Omega {
    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        assert!(radius > 0.0);
        Omega { center, radius }
    }

    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.center.len()) * self.radius.powi(self.center.len() as i32)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        point::dist(x, &self.center) < self.radius
    }
}

/// Relative inner cutoff for pair distances; the omitted near-diagonal mass
/// scales like `r_min^{1-s}` and is folded into the reported truncation term.
const PAIR_R_MIN_REL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerimeterEstimate {
    pub value: f64,
    pub stat_error: f64,
    /// Contribution from pairs with both points in the window.
    pub within: f64,
    /// Pairs (x in window, y outside).
    pub cross_out: f64,
    pub cross_out_error: f64,
    /// Pairs (x outside, y in window), estimated independently.
    pub cross_in: f64,
    pub cross_in_error: f64,
    /// Exact far closure (bounded sets) included in `value`.
    pub far_field: f64,
    /// Analytic bound on unresolved far pairs (zero when closed exactly).
    pub tail: f64,
    /// Geometric estimate of the omitted near-diagonal mass.
    pub truncation: f64,
    /// Set when the error target was not met within the sample budget.
    pub low_precision: bool,
}

struct PairShellResult {
    within: f64,
    cross: f64,
    var: f64,
    var_cross: f64,
}

/// One dyadic pair-distance shell `[a, b]`: sample the anchor uniformly in
/// the window and the partner at importance-sampled distance. When
/// `anchor_inside_partner_out` is set, only pairs whose partner leaves the
/// window count (and they are booked as the reversed cross term).
fn pair_shell(
    set: &RegionSet,
    omega: &Omega,
    kernel: &KernelSpec,
    a: f64,
    b: f64,
    cfg: &QuadConfig,
    reversed_cross: bool,
) -> Result<PairShellResult, QuadError> {
    let d = set.dim();
    let area = unit_sphere_area(d);
    let s = kernel.s();
    let stream = mix_seed(&[
        cfg.seed,
        if reversed_cross { 0x7061_4952 } else { 0x7061_4951 },
        a.to_bits(),
        b.to_bits(),
    ]);
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    let n = cfg.samples_per_shell;
    let fa = a.powf(-s);
    let fb = b.powf(-s);
    let norm = s / (fa - fb);
    let mut y = vec![0.0; d];
    let mut sum_within = 0.0;
    let mut sum_cross = 0.0;
    let mut sumsq = 0.0;
    let mut sumsq_cross = 0.0;
    for _ in 0..n {
        let x = random_in_ball(&mut rng, &omega.center, omega.radius);
        let u = rng.gen::<f64>();
        let r = (fa - u * (fa - fb)).powf(-1.0 / s);
        let p = norm * r.powf(-1.0 - s);
        let w = random_unit(&mut rng, d);
        for i in 0..d {
            y[i] = x[i] + r * w[i];
        }
        let cx = set.tilde_chi_f(&x);
        let cy = set.tilde_chi_f(&y);
        let diff = (cx - cy).abs();
        let mut g_within = 0.0;
        let mut g_cross = 0.0;
        if diff != 0.0 {
            let weight = 0.25
                * omega.volume()
                * diff
                * kernel.evaluate(&sub(&x, &y))
                * area
                * r.powf(d as f64 - 1.0)
                / p;
            if !weight.is_finite() {
                return Err(QuadError::NonFiniteSample {
                    point: crate::point::Point(y.clone()),
                });
            }
            let partner_in = omega.contains(&y);
            if reversed_cross {
                if !partner_in {
                    g_cross = weight;
                }
            } else if partner_in {
                g_within = weight;
            } else {
                g_cross = weight;
            }
        }
        let g = g_within + g_cross;
        sum_within += g_within;
        sum_cross += g_cross;
        sumsq += g * g;
        sumsq_cross += g_cross * g_cross;
    }
    let nf = n as f64;
    let mean = (sum_within + sum_cross) / nf;
    let var = (sumsq / nf - mean * mean).max(0.0) / nf;
    let mean_cross = sum_cross / nf;
    let var_cross = (sumsq_cross / nf - mean_cross * mean_cross).max(0.0) / nf;
    Ok(PairShellResult {
        within: sum_within / nf,
        cross: sum_cross / nf,
        var,
        var_cross,
    })
}

fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

fn dyadic_edges(lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mut edges = Vec::new();
    let mut a = lo;
    while a < hi {
        let b = (2.0 * a).min(hi);
        edges.push((a, b));
        a = b;
    }
    edges
}

/// Nonlocal perimeter `Per_K(E; Omega)` by pair-shell Monte Carlo.
///
/// When `E` is contained in a ball the far cross pairs are closed exactly via
/// the kernel tail; otherwise they are bounded analytically and reported in
/// `tail`. When `E` is contained in the window, the result equals the full
/// perimeter `Per_K(E)` exactly.
pub fn perimeter_k(
    set: &RegionSet,
    omega: &Omega,
    kernel: &KernelSpec,
    cfg: &QuadConfig,
) -> Result<PerimeterEstimate, QuadError> {
    let s = kernel.s();
    let r_min = PAIR_R_MIN_REL * omega.radius;
    let r_max = cfg.outer_radius.max(4.0 * omega.radius);
    let edges = dyadic_edges(r_min, r_max);

    let forward: Result<Vec<PairShellResult>, QuadError> = edges
        .par_iter()
        .map(|&(a, b)| pair_shell(set, omega, kernel, a, b, cfg, false))
        .collect();
    let forward = forward?;
    let backward: Result<Vec<PairShellResult>, QuadError> = edges
        .par_iter()
        .map(|&(a, b)| pair_shell(set, omega, kernel, a, b, cfg, true))
        .collect();
    let backward = backward?;

    let within: f64 = forward.iter().map(|r| r.within).sum();
    let cross_out: f64 = forward.iter().map(|r| r.cross).sum();
    let cross_in: f64 = backward.iter().map(|r| r.cross).sum();
    let var_fwd: f64 = forward.iter().map(|r| r.var).sum();
    let var_bwd: f64 = backward.iter().map(|r| r.var).sum();
    let var_cross_out: f64 = forward.iter().map(|r| r.var_cross).sum();

    // far closure: beyond r_max every partner of a window point is outside a
    // bounded E, so the straddle indicator is exactly the inside indicator
    let far_behavior = set.far_field_from(&omega.center);
    let (far_field, tail, far_err) = match far_behavior {
        crate::sets::FarField::AllOutside(rb) if rb + omega.radius <= r_max => {
            let inside = match set.ball_overlap_volume(&omega.center, omega.radius) {
                Some(v) => (v, 0.0),
                None => {
                    let vf = volume_fraction(set, &omega.center, omega.radius, cfg);
                    (vf.inside * omega.volume(), vf.std_error * omega.volume())
                }
            };
            (
                inside.0 * kernel.tail_integral(r_max),
                0.0,
                inside.1 * kernel.tail_integral(r_max),
            )
        }
        _ => (
            0.0,
            omega.volume() * kernel.big_lambda() * unit_sphere_area(set.dim())
                * r_max.powf(-s)
                / s,
            0.0,
        ),
    };

    // geometric near-diagonal residual from the innermost nonzero shell
    let inner_val = forward
        .iter()
        .zip(&edges)
        .find(|(r, _)| r.within + r.cross > 0.0)
        .map(|(r, _)| r.within + r.cross)
        .unwrap_or(0.0);
    let truncation = inner_val / (2f64.powf(1.0 - s) - 1.0).max(1e-9);

    let value = within + cross_out + cross_in + far_field;
    let stat_error = (var_fwd + var_bwd + far_err * far_err).sqrt();
    let low_precision = stat_error > cfg.tol_rel * value.abs().max(cfg.tol_abs);
    Ok(PerimeterEstimate {
        value,
        stat_error,
        within,
        cross_out,
        cross_out_error: var_cross_out.sqrt(),
        cross_in,
        cross_in_error: var_bwd.sqrt(),
        far_field,
        tail,
        truncation,
        low_precision,
    })
}

/// Measured ratio `Per_s(tE) / Per_s(E)` with independent sampling streams;
/// for the fractional kernel the exact exponent is `d - s`.
pub struct ScalingCheck {
    pub ratio: f64,
    pub expected: f64,
    pub sigma: f64,
}

pub fn perimeter_scaling_check(
    set: &RegionSet,
    omega: &Omega,
    scale: f64,
    kernel: &KernelSpec,
    cfg: &QuadConfig,
) -> Result<ScalingCheck, QuadError> {
    let base = perimeter_k(set, omega, kernel, cfg)?;
    let scaled_omega = Omega::new(
        omega.center.iter().map(|c| c * scale).collect(),
        omega.radius * scale,
    );
    // shell substreams derive from the shell radii, so a nontrivial scale
    // factor draws fresh samples while scale 1 replays bit-identically
    let scaled = perimeter_k(&set.scaled(scale), &scaled_omega, kernel, &cfg.scaled(scale))?;
    let ratio = scaled.value / base.value;
    // first-order error propagation for the quotient
    let sigma = ratio
        * ((scaled.stat_error / scaled.value).powi(2) + (base.stat_error / base.value).powi(2))
            .sqrt();
    Ok(ScalingCheck {
        ratio,
        expected: scale.powf(set.dim() as f64 - kernel.s()),
        sigma,
    })
}

/// Classical perimeter inside a window via directional membership bracketing:
/// a sampled segment `[x, x + h w]` whose endpoints disagree brackets a
/// boundary crossing. For small `h` the crossing fraction is
/// `h * c_d * Per(E; Omega) / |Omega|` with `c_d = 2 |B_1^{d-1}| / (d |B_1^d|)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MinkowskiEstimate {
    pub value: f64,
    pub stat_error: f64,
    /// Set when `h` is large relative to the set's feature scale.
    pub unreliable: bool,
}

pub fn classical_perimeter_minkowski(
    set: &RegionSet,
    omega: &Omega,
    h: f64,
    cfg: &QuadConfig,
) -> MinkowskiEstimate {
    assert!(h > 0.0);
    let d = set.dim();
    let c_d = 2.0 * unit_ball_volume(d - 1) / unit_sphere_area(d);
    let n = cfg.volume_samples * 8;
    let stream = mix_seed(&[cfg.seed, 0x6d69_6e6b, h.to_bits()]);
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    let mut flips = 0usize;
    let mut y = vec![0.0; d];
    for _ in 0..n {
        let x = random_in_ball(&mut rng, &omega.center, omega.radius);
        let w = random_unit(&mut rng, d);
        for i in 0..d {
            y[i] = x[i] + h * w[i];
        }
        let mx = set.membership(&x);
        let my = set.membership(&y);
        if mx != my && mx != Region::Boundary && my != Region::Boundary {
            flips += 1;
        }
    }
    let p = flips as f64 / n as f64;
    let value = p * omega.volume() / (h * c_d);
    let sigma_p = (p * (1.0 - p) / n as f64).sqrt();
    MinkowskiEstimate {
        value,
        stat_error: sigma_p * omega.volume() / (h * c_d),
        unreliable: h > 0.5 * set.feature_scale(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SIGMA_GATE;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn cfg() -> QuadConfig {
        QuadConfig {
            samples_per_shell: 16_384,
            seed: 2024,
            ..QuadConfig::default()
        }
    }

    #[test]
    fn empty_set_has_zero_perimeter() {
        let e = RegionSet::empty(2);
        let k = KernelSpec::fractional(2, 0.5).unwrap();
        let omega = Omega::new(vec![0.0, 0.0], 1.0);
        let est = perimeter_k(&e, &omega, &k, &cfg()).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.stat_error, 0.0);
    }

    /// Brute-force oracle for the full s-perimeter of (0,1) in d=1: a graded
    /// tensor midpoint rule on [-10,10]^2 (cells geometrically refined toward
    /// the integrand's crossing points) plus analytic tails.
    fn interval_perimeter_bruteforce(s: f64) -> f64 {
        // graded 1-D mesh: coarse backbone plus geometric refinement at 0, 1
        let mut knots: Vec<f64> = Vec::new();
        let n_coarse = 40;
        for i in 0..=n_coarse {
            knots.push(-10.0 + 20.0 * i as f64 / n_coarse as f64);
        }
        for p in [0.0_f64, 1.0] {
            let mut step = 2.0;
            while step > 1e-13 {
                knots.push(p - step);
                knots.push(p + step);
                step /= 1.05;
            }
            knots.push(p);
        }
        knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        knots.dedup();
        let chi = |t: f64| -> f64 {
            if t > 0.0 && t < 1.0 {
                -1.0
            } else {
                1.0
            }
        };
        let mut total = 0.0;
        let cells: Vec<(f64, f64)> = knots.windows(2).map(|w| (w[0], w[1])).collect();
        for &(ax, bx) in &cells {
            let mx = 0.5 * (ax + bx);
            let wx = bx - ax;
            let cx = chi(mx);
            for &(ay, by) in &cells {
                let my = 0.5 * (ay + by);
                if (chi(my) - cx).abs() == 0.0 {
                    continue;
                }
                total += 0.25 * 2.0 * (mx - my).abs().powf(-1.0 - s) * wx * (by - ay);
            }
        }
        // analytic tails for partners beyond +-10 (both orders of each pair):
        // int_0^1 int_{10}^inf (y-x)^{-1-s} dy dx = int_0^1 (10-x)^{-s}/s dx
        let t1 = ((10.0f64).powf(1.0 - s) - 9.0f64.powf(1.0 - s)) / (s * (1.0 - s));
        // int_0^1 int_{-inf}^{-10} (x-y)^{-1-s} dy dx = int_0^1 (x+10)^{-s}/s dx
        let t2 = (11.0f64.powf(1.0 - s) - 10.0f64.powf(1.0 - s)) / (s * (1.0 - s));
        // two orderings of each far pair, each weighted 1/4 * 2
        total + (t1 + t2)
    }

    #[test]
    fn interval_full_perimeter_matches_bruteforce_oracle() {
        let s = 0.5;
        let oracle = interval_perimeter_bruteforce(s);
        // the oracle itself must agree with the closed form 2/(s(1-s)) = 8
        assert_relative_eq!(oracle, 8.0, max_relative = 2e-3);

        let e = RegionSet::slab(1, 0, 0.0, 1.0).unwrap();
        let k = KernelSpec::fractional(1, s).unwrap();
        // window containing E: the localized perimeter equals the full one
        let omega = Omega::new(vec![0.5], 10.0);
        let c = QuadConfig {
            samples_per_shell: 65_536,
            seed: 5,
            ..QuadConfig::default()
        };
        let est = perimeter_k(&e, &omega, &k, &c).unwrap();
        assert_relative_eq!(est.value, oracle, max_relative = 0.02);
    }

    #[test]
    fn complement_symmetry() {
        let e = RegionSet::ball(vec![0.2, 0.1], 0.8).unwrap();
        let k = KernelSpec::fractional(2, 0.5).unwrap();
        let omega = Omega::new(vec![0.0, 0.0], 1.5);
        let a = perimeter_k(&e, &omega, &k, &cfg()).unwrap();
        let b = perimeter_k(&e.complement(), &omega, &k, &cfg().with_seed(77)).unwrap();
        let sigma = (a.stat_error.powi(2) + b.stat_error.powi(2)).sqrt();
        // complements swap which side is "inside": the bounded far closure
        // only applies to the bounded one, so compare within tails as well
        assert!(
            (a.value - b.value).abs() <= SIGMA_GATE * sigma + a.tail + b.tail,
            "{} vs {} (sigma {sigma}, tails {} {})",
            a.value,
            b.value,
            a.tail,
            b.tail
        );
    }

    #[test]
    fn cross_terms_agree() {
        let e = RegionSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let k = KernelSpec::fractional(2, 0.5).unwrap();
        let omega = Omega::new(vec![0.3, 0.0], 0.9);
        let est = perimeter_k(&e, &omega, &k, &cfg()).unwrap();
        let sigma = (est.cross_out_error.powi(2) + est.cross_in_error.powi(2)).sqrt();
        assert!(
            (est.cross_out - est.cross_in).abs() <= SIGMA_GATE * sigma,
            "cross terms {} vs {} (sigma {sigma})",
            est.cross_out,
            est.cross_in
        );
        assert!(est.value >= 0.0);
    }

    #[test]
    fn localization_monotone_in_radius() {
        let e = RegionSet::half_space(vec![1.0, 0.0], 0.0).unwrap();
        let k = KernelSpec::fractional(2, 0.5).unwrap();
        let mut prev = 0.0;
        let mut prev_err = 0.0;
        for &r in &[0.5, 1.0, 2.0] {
            let est = perimeter_k(&e, &Omega::new(vec![0.0, 0.0], r), &k, &cfg()).unwrap();
            assert!(
                est.value >= prev - SIGMA_GATE * (est.stat_error + prev_err),
                "window r={r}: {} not above {prev}",
                est.value
            );
            prev = est.value;
            prev_err = est.stat_error;
        }
    }

    #[test]
    fn scaling_r_equals_one_is_exact() {
        let e = RegionSet::ball(vec![0.0], 1.0).unwrap();
        let k = KernelSpec::fractional(1, 0.5).unwrap();
        let omega = Omega::new(vec![0.0], 2.0);
        // same seed, scale 1: bit-identical runs give ratio exactly 1
        let chk = perimeter_scaling_check(&e, &omega, 1.0, &k, &cfg()).unwrap();
        assert!((chk.ratio - 1.0).abs() < 1e-12 || chk.ratio == 1.0);
    }

    #[test]
    fn scaling_matches_exponent() {
        let e = RegionSet::slab(1, 0, 0.0, 1.0).unwrap();
        let k = KernelSpec::fractional(1, 0.5).unwrap();
        let omega = Omega::new(vec![0.5], 4.0);
        let chk = perimeter_scaling_check(&e, &omega, 2.0, &k, &cfg()).unwrap();
        // d - s = 0.5: ratio should be 2^0.5
        assert_relative_eq!(chk.expected, 2f64.sqrt(), max_relative = 1e-12);
        assert!(
            (chk.ratio - chk.expected).abs() <= SIGMA_GATE * chk.sigma + 0.02 * chk.expected,
            "ratio {} vs {} (sigma {})",
            chk.ratio,
            chk.expected,
            chk.sigma
        );
    }

    #[test]
    fn minkowski_half_space_chord() {
        let e = RegionSet::half_space(vec![1.0, 0.0], 0.0).unwrap();
        let omega = Omega::new(vec![0.0, 0.0], 1.0);
        let est = classical_perimeter_minkowski(&e, &omega, 0.02, &cfg());
        // chord-length oracle: the diameter, length 2
        assert_relative_eq!(est.value, 2.0, max_relative = 0.05);
        assert!(!est.unreliable);
    }

    #[test]
    fn minkowski_circle_circumference() {
        let e = RegionSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let omega = Omega::new(vec![0.0, 0.0], 2.0);
        let est = classical_perimeter_minkowski(&e, &omega, 0.02, &cfg());
        assert_relative_eq!(est.value, 2.0 * PI, max_relative = 0.05);
    }

    #[test]
    fn minkowski_flags_large_h() {
        let e = RegionSet::periodic_slab(2, 0.1).unwrap();
        let omega = Omega::new(vec![0.0, 0.0], 1.0);
        let est = classical_perimeter_minkowski(&e, &omega, 0.2, &cfg());
        assert!(est.unreliable);
    }

    #[test]
    fn minkowski_periodic_slab_doubles_when_delta_halves() {
        let omega = Omega::new(vec![0.0, 0.0], 1.0);
        let mut prev: Option<f64> = None;
        for &delta in &[0.1, 0.05] {
            let e = RegionSet::periodic_slab(2, delta).unwrap();
            let est = classical_perimeter_minkowski(&e, &omega, delta / 8.0, &cfg());
            if let Some(p) = prev {
                let ratio = est.value / p;
                assert!(
                    (ratio - 2.0).abs() <= 0.3,
                    "perimeter growth ratio {ratio} not near 2"
                );
            }
            prev = Some(est.value);
        }
    }

    #[test]
    fn relative_isoperimetric_sanity() {
        // Per(E; B_rho) >= c * min(|E cap B|, |B \ E|)^{(d-1)/d} with a fitted
        // positive constant on canonical sets; no literal constant is claimed
        let omega = Omega::new(vec![0.0, 0.0], 1.0);
        let c = cfg();
        let cases: Vec<(RegionSet, f64)> = vec![
            (RegionSet::half_space(vec![1.0, 0.0], 0.0).unwrap(), 0.5 * PI),
            (RegionSet::ball(vec![0.0, 0.0], 0.6).unwrap(), PI * 0.36),
            (RegionSet::periodic_slab(2, 0.25).unwrap(), 0.5 * PI),
        ];
        let mut min_ratio = f64::INFINITY;
        for (set, vol_inside) in &cases {
            let per = classical_perimeter_minkowski(set, &omega, 0.01, &c);
            let m = vol_inside.min(PI - vol_inside).powf(0.5);
            min_ratio = min_ratio.min(per.value / m);
        }
        assert!(
            min_ratio > 0.5,
            "fitted isoperimetric ratio {min_ratio} collapsed"
        );
    }
}
