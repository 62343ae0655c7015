//! Density profiles, the sparse-point set, and executable verifiers for the
//! density estimates: curvature thresholds under sparseness, dyadic annulus
//! lower bounds, truncated blow-up fits, viscosity scans, and the fractional
//! surface-density chain.
//!
//! Every threshold these verifiers compare against comes from a
//! [`ConstantLedger`]; none is hard-coded here.

use crate::constants::ConstantLedger;
use crate::curvature::{
    curvature_lower_bound_truncated, curvature_via_touching_ball, CurvatureError, Verdict,
};
use crate::kernels::KernelSpec;
use crate::perimeter::{classical_perimeter_minkowski, perimeter_k, Omega};
use crate::point::{self, Point};
use crate::quad::{mix_seed, shell_integrate, volume_fraction, volume_fraction_fast, QuadConfig};
use crate::sets::{find_exterior_ball, random_in_ball, Region, RegionSet, Shape, TouchingBall};
use crate::special::{unit_ball_volume, unit_sphere_area};
use crate::SIGMA_GATE;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DensityError {
    #[error("volume-matching bisection failed: {0}")]
    Bisection(String),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error(transparent)]
    Quad(#[from] crate::quad::QuadError),
}

/// Outcome of a gated verifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckVerdict {
    Pass,
    Fail,
    /// The precondition could not be verified; not a failure.
    NotApplicable,
    Inconclusive,
}

// ---------------------------------------------------------------------------
// density profiles
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityReport {
    pub center: Point,
    pub radii: Vec<f64>,
    /// `(fraction, std_error)` per radius.
    pub fractions: Vec<(f64, f64)>,
    pub boundary_fractions: Vec<(f64, f64)>,
    pub target: Option<f64>,
    pub verdicts: Vec<CheckVerdict>,
}

impl DensityReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| *v == CheckVerdict::Pass)
    }
}

/// Volume fractions `|E ∩ B_r(center)| / |B_r|` over a radius sweep, with
/// pass/fail against a target density when one is given.
pub fn density_profile(
    set: &RegionSet,
    center: &[f64],
    radii: &[f64],
    target: Option<f64>,
    cfg: &QuadConfig,
) -> DensityReport {
    assert!(radii.windows(2).all(|w| w[0] < w[1]), "radii must increase");
    let results: Vec<_> = radii
        .par_iter()
        .map(|&r| volume_fraction(set, center, r, cfg))
        .collect();
    let fractions: Vec<(f64, f64)> = results.iter().map(|v| (v.inside, v.std_error)).collect();
    let boundary_fractions: Vec<(f64, f64)> = results
        .iter()
        .map(|v| {
            let p = v.boundary;
            (p, (p * (1.0 - p) / v.samples as f64).sqrt())
        })
        .collect();
    let verdicts = fractions
        .iter()
        .map(|&(f, e)| match target {
            Some(t) => {
                if f >= t - SIGMA_GATE * e {
                    CheckVerdict::Pass
                } else {
                    CheckVerdict::Fail
                }
            }
            None => CheckVerdict::Pass,
        })
        .collect();
    DensityReport {
        center: Point(center.to_vec()),
        radii: radii.to_vec(),
        fractions,
        boundary_fractions,
        target,
        verdicts,
    }
}

// ---------------------------------------------------------------------------
// sparse-point measure (brute-force grid)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SparseSetReport {
    pub alpha: f64,
    pub r_window: f64,
    pub grid_step: f64,
    /// Grid measure of the points around which the set stays below `alpha`
    /// at every tested dyadic scale.
    pub measure_dalpha: f64,
    pub half_ball_measure: f64,
    /// One-sided grid counting error budget.
    pub grid_error: f64,
    pub points_tested: usize,
    pub points_counted: usize,
}

/// Brute force over a grid in `B_{R/4}`: count points whose volume fraction
/// stays `<= alpha` at every dyadic radius `R/2 * 2^{-i}`. Exact ball-overlap
/// evaluation where the descriptor admits one, Monte Carlo otherwise.
pub fn sparse_point_measure(
    set: &RegionSet,
    r_window: f64,
    alpha: f64,
    grid_step: f64,
    radii_per_point: usize,
    cfg: &QuadConfig,
) -> SparseSetReport {
    assert!(
        grid_step <= r_window / 64.0,
        "grid step {grid_step} too coarse for window {r_window}"
    );
    let d = set.dim();
    let quarter = r_window / 4.0;
    let n_axis = (2.0 * quarter / grid_step).ceil() as usize;
    let radii: Vec<f64> = (0..radii_per_point)
        .map(|i| r_window / 2.0 * 2f64.powi(-(i as i32)))
        .collect();

    let total_cells = n_axis.pow(d as u32);
    let counted: usize = (0..total_cells)
        .into_par_iter()
        .filter(|&flat| {
            let mut x = vec![0.0; d];
            let mut f = flat;
            for i in 0..d {
                let idx = f % n_axis;
                f /= n_axis;
                x[i] = -quarter + (idx as f64 + 0.5) * grid_step;
            }
            if point::norm(&x) > quarter {
                return false;
            }
            radii.iter().all(|&r| {
                let (frac, err) = volume_fraction_fast(set, &x, r, cfg);
                frac - SIGMA_GATE * err <= alpha
            })
        })
        .count();
    let points_tested = total_cells;
    let measure = counted as f64 * grid_step.powi(d as i32);
    let surface_budget = unit_sphere_area(d) * quarter.powf(d as f64 - 1.0)
        * match set.shape() {
            Shape::Dust { grains, .. } => 1.0 + grains.len() as f64 * 0.1,
            _ => 2.0,
        };
    SparseSetReport {
        alpha,
        r_window,
        grid_step,
        measure_dalpha: measure,
        half_ball_measure: 0.5 * unit_ball_volume(d) * quarter.powi(d as i32),
        grid_error: d as f64 * grid_step * surface_budget,
        points_tested,
        points_counted: counted,
    }
}

// ---------------------------------------------------------------------------
// rearrangement inequality
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RearrangementResult {
    pub lhs: f64,
    pub rhs: f64,
    pub rho: f64,
    pub sigma: f64,
}

impl RearrangementResult {
    pub fn holds(&self) -> bool {
        self.lhs >= self.rhs - SIGMA_GATE * self.sigma
    }
}

/// Volume-matched comparison: solve `|Omega ∩ B_rho(x)| = |Omega ∩ E|` for
/// `rho` by bisection over a common sample set, then compare the kernel mass
/// of `Omega \ E` against `Omega \ B_rho(x)`. The radial truncation is chosen
/// so it can only under-estimate the left side.
pub fn rearrangement_check(
    omega: &Omega,
    set: &RegionSet,
    x: &[f64],
    s: f64,
    cfg: &QuadConfig,
) -> Result<RearrangementResult, DensityError> {
    let d = set.dim();
    let n = cfg.volume_samples;
    let stream = mix_seed(&[cfg.seed, 0x7265_6172]);
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    let samples: Vec<Vec<f64>> = (0..n)
        .map(|_| random_in_ball(&mut rng, &omega.center, omega.radius))
        .collect();
    let in_e = samples
        .iter()
        .filter(|p| set.membership(p) == Region::Inside)
        .count();
    let dists: Vec<f64> = samples.iter().map(|p| point::dist(p, x)).collect();
    let target = in_e as f64 / n as f64;

    let rho = if in_e == 0 {
        0.0
    } else {
        let vol_at = |rho: f64| dists.iter().filter(|&&t| t < rho).count() as f64 / n as f64;
        let mut lo = 0.0;
        let mut hi = omega.radius + point::dist(x, &omega.center);
        if vol_at(hi) < target {
            return Err(DensityError::Bisection(format!(
                "window volume {} cannot reach target {target}",
                vol_at(hi)
            )));
        }
        let mut iters = 0;
        while hi - lo > 1e-3 * hi.max(1e-12) {
            let mid = 0.5 * (lo + hi);
            if vol_at(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            iters += 1;
            if iters > 200 {
                return Err(DensityError::Bisection(
                    "volume matching did not converge".into(),
                ));
            }
        }
        0.5 * (lo + hi)
    };

    // kernel mass of Omega minus a region, truncated below r_min; for the
    // left side the omitted mass is nonnegative, so truncation is safe
    let r_min = if rho > 0.0 {
        (1e-6 * omega.radius).min(0.5 * rho)
    } else {
        1e-6 * omega.radius
    };
    let r_max = omega.radius + point::dist(x, &omega.center);
    let kernel_mass = |excluded: &dyn Fn(&[f64]) -> bool, tag: u64| -> (f64, f64) {
        let mut total = 0.0;
        let mut var = 0.0;
        let mut a = r_min;
        while a < r_max {
            let b = (2.0 * a).min(r_max);
            let f = |y: &[f64]| {
                if omega.contains(y) && !excluded(y) {
                    point::dist(x, y).powf(-(d as f64) - s)
                } else {
                    0.0
                }
            };
            let c = cfg.with_seed(mix_seed(&[cfg.seed, tag]));
            let sh = shell_integrate(f, x, a, b, &c).expect("finite integrand");
            total += sh.value;
            var += sh.stat_error * sh.stat_error;
            a = b;
        }
        (total, var)
    };

    let (lhs, var_l) = kernel_mass(&|y| set.membership(y) == Region::Inside, 0x6c68);
    let (rhs, var_r) = kernel_mass(&|y| point::dist(y, x) < rho, 0x7268);
    Ok(RearrangementResult {
        lhs,
        rhs,
        rho,
        sigma: (var_l + var_r).sqrt(),
    })
}

// ---------------------------------------------------------------------------
// curvature thresholds under sparseness
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub verdict: CheckVerdict,
    pub measured: Option<f64>,
    pub threshold: f64,
    pub precondition_fraction: f64,
}

/// Verified density precondition: fraction plus its gate margin must stay
/// below the bound.
fn density_precondition(
    set: &RegionSet,
    center: &[f64],
    r: f64,
    bound: f64,
    cfg: &QuadConfig,
) -> (bool, f64) {
    let mut c = cfg.clone();
    c.volume_samples = cfg.volume_samples * 4;
    let vf = volume_fraction(set, center, r, &c);
    (vf.inside + SIGMA_GATE * vf.std_error <= bound, vf.inside)
}

/// Curvature threshold at a sparse contact: with
/// `|E ∩ B_{2r}(center)| <= beta |B_{2r}|`, the touching-ball curvature must
/// reach `(M+1) r^{-s}`.
pub fn sparse_curvature_threshold(
    set: &RegionSet,
    kernel: &KernelSpec,
    ball: &TouchingBall,
    m: f64,
    ledger: &ConstantLedger,
    cfg: &QuadConfig,
) -> Result<ThresholdResult, DensityError> {
    let r = ball.radius;
    let threshold = (m + 1.0) * r.powf(-kernel.s());
    let (ok, frac) = density_precondition(
        set,
        ball.center.as_slice(),
        2.0 * r,
        ledger.beta,
        cfg,
    );
    if !ok {
        return Ok(ThresholdResult {
            verdict: CheckVerdict::NotApplicable,
            measured: None,
            threshold,
            precondition_fraction: frac,
        });
    }
    let est = curvature_via_touching_ball(set, kernel, ball, cfg)?;
    let verdict = match est.verdict {
        Verdict::Diverged { direction: 1, .. } => CheckVerdict::Pass,
        Verdict::Converged(v) => {
            if v >= threshold - est.error_bound {
                CheckVerdict::Pass
            } else {
                CheckVerdict::Fail
            }
        }
        _ => CheckVerdict::Inconclusive,
    };
    Ok(ThresholdResult {
        verdict,
        measured: est.verdict.value(),
        threshold,
        precondition_fraction: frac,
    })
}

/// Single dyadic annulus lower bound: with `|E ∩ B_r(x)| <= gamma |B_r|`,
/// the annulus integral must reach `cshell r^{-s}`.
pub fn shell_lower_bound_check(
    set: &RegionSet,
    kernel: &KernelSpec,
    x: &[f64],
    r: f64,
    ledger: &ConstantLedger,
    cfg: &QuadConfig,
) -> Result<ThresholdResult, DensityError> {
    let threshold = ledger.cshell * r.powf(-kernel.s());
    let (ok, frac) = density_precondition(set, x, r, ledger.gamma, cfg);
    if !ok {
        return Ok(ThresholdResult {
            verdict: CheckVerdict::NotApplicable,
            measured: None,
            threshold,
            precondition_fraction: frac,
        });
    }
    let c = cfg.with_kernel(kernel);
    let f = |y: &[f64]| set.tilde_chi_f(y) * kernel.evaluate(&sub(x, y));
    let sh = shell_integrate(f, x, r / 2.0, r, &c)?;
    let verdict = if sh.value >= threshold - SIGMA_GATE * sh.stat_error {
        CheckVerdict::Pass
    } else {
        CheckVerdict::Fail
    };
    Ok(ThresholdResult {
        verdict,
        measured: Some(sh.value),
        threshold,
        precondition_fraction: frac,
    })
}

fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

// ---------------------------------------------------------------------------
// blow-up scan
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlowupFit {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: Option<f64>,
    pub envelope_ok: bool,
    pub verdict: CheckVerdict,
    /// First dyadic scale at which the sparseness precondition failed.
    pub first_failing_scale: Option<f64>,
}

/// Truncated-curvature blow-up: under dyadic sparseness below `gamma` down to
/// the feature scale, the truncated integrals must grow like `r^{-s}` and stay
/// above the ledger envelope.
pub fn blowup_scan(
    set: &RegionSet,
    kernel: &KernelSpec,
    x: &[f64],
    r0: f64,
    ledger: &ConstantLedger,
    cfg: &QuadConfig,
) -> Result<BlowupFit, DensityError> {
    let s = kernel.s();
    // dyadic sweep r0 * 2^{-j}, stopping at the feature scale when the set
    // has one below r0 (scale-free sets sweep the full range)
    let feature = set.feature_scale();
    let j_max = 5;
    let mut radii: Vec<f64> = (0..=j_max).map(|j| r0 * 2f64.powi(-j)).collect();
    if feature < r0 {
        radii.retain(|r| *r >= feature);
    }
    // dyadic precondition sweep
    for &r in &radii {
        let (frac, err) = volume_fraction_fast(set, x, r, cfg);
        if frac - SIGMA_GATE * err > ledger.gamma {
            return Ok(BlowupFit {
                radii: vec![],
                values: vec![],
                errors: vec![],
                slope: None,
                envelope_ok: false,
                verdict: CheckVerdict::NotApplicable,
                first_failing_scale: Some(r),
            });
        }
    }

    let evals: Result<Vec<(f64, f64)>, DensityError> = radii
        .iter()
        .map(|&rj| {
            curvature_lower_bound_truncated(set, kernel, x, rj, cfg).map_err(DensityError::from)
        })
        .collect();
    let evals = evals?;
    let values: Vec<f64> = evals.iter().map(|e| e.0).collect();
    let errors: Vec<f64> = evals.iter().map(|e| e.1).collect();

    // log-log slope (requires positive values)
    let slope = if values.iter().all(|v| *v > 0.0) {
        let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
        let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        if sxx > 0.0 {
            Some(sxy / sxx)
        } else {
            None
        }
    } else {
        None
    };

    let envelope_ok = radii.iter().zip(&values).zip(&errors).all(|((rj, v), e)| {
        *v >= ledger.blowup_envelope(r0, *rj) - SIGMA_GATE * e
    });
    let steep_enough = slope.map_or(false, |m| m <= -s * (1.0 - 0.1));
    let verdict = if envelope_ok && steep_enough {
        CheckVerdict::Pass
    } else if slope.is_none() {
        CheckVerdict::Inconclusive
    } else {
        CheckVerdict::Fail
    };
    Ok(BlowupFit {
        radii,
        values,
        errors,
        slope,
        envelope_ok,
        verdict,
        first_failing_scale: None,
    })
}

// ---------------------------------------------------------------------------
// viscosity scan
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanReport {
    pub points: usize,
    /// Boundary points with no exterior touching ball; the definition does
    /// not constrain them.
    pub unconstrained: usize,
    pub evaluated: usize,
    pub inconclusive: usize,
    pub violations: Vec<(Point, f64)>,
    pub diverging: usize,
    pub max_value: Option<f64>,
}

impl ScanReport {
    pub fn is_subsolution(&self) -> bool {
        self.violations.is_empty() && self.diverging == 0
    }
}

/// Sample boundary points in the window, search for exterior touching balls,
/// and test the curvature bound wherever one exists.
pub fn viscosity_subsolution_scan(
    set: &RegionSet,
    kernel: &KernelSpec,
    omega: &Omega,
    bound: f64,
    n_points: usize,
    cfg: &QuadConfig,
) -> Result<ScanReport, DensityError> {
    let pts = set.sample_boundary(
        n_points,
        mix_seed(&[cfg.seed, 0x7363_616e]),
        Some((&omega.center, omega.radius)),
    );
    let max_radius = 0.5 * omega.radius;
    let mut report = ScanReport {
        points: pts.len(),
        unconstrained: 0,
        evaluated: 0,
        inconclusive: 0,
        violations: Vec::new(),
        diverging: 0,
        max_value: None,
    };
    for (i, p) in pts.iter().enumerate() {
        let seed = mix_seed(&[cfg.seed, 0x6578_7462, i as u64]);
        let Some(ball) = find_exterior_ball(set, p.as_slice(), max_radius, seed) else {
            report.unconstrained += 1;
            continue;
        };
        let est = curvature_via_touching_ball(set, kernel, &ball, cfg)?;
        report.evaluated += 1;
        match est.verdict {
            Verdict::Converged(v) => {
                report.max_value = Some(report.max_value.map_or(v, |m: f64| m.max(v)));
                if v - est.error_bound > bound {
                    report.violations.push((p.clone(), v));
                }
            }
            Verdict::Diverged { direction: 1, .. } => {
                report.diverging += 1;
                report.violations.push((p.clone(), f64::INFINITY));
            }
            _ => report.inconclusive += 1,
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// fractional surface-density chain
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SbVerdict {
    pub r: f64,
    pub identity_lhs: f64,
    pub identity_rhs: f64,
    pub identity_sigma: f64,
    pub identity_pass: bool,
    pub per_set: f64,
    pub per_ball: f64,
    pub per_sigma: f64,
    pub per_pass: bool,
}

/// Mean-deviation identity `int_{B_r} |chi_E - avg| = 2 |E ∩ B_r| |B_r \ E| / |B_r|`
/// checked with two independent sample streams. Returns `(lhs, rhs, sigma)`.
pub fn mean_deviation_identity(
    set: &RegionSet,
    center: &[f64],
    r: f64,
    cfg: &QuadConfig,
) -> (f64, f64, f64) {
    let d = set.dim();
    let ball_vol = unit_ball_volume(d) * r.powi(d as i32);
    let p1 = volume_fraction(set, center, r, cfg);
    let p2 = volume_fraction(set, center, r, &cfg.with_seed(mix_seed(&[cfg.seed, 1])));
    // E[|chi - p1|] over the second stream
    let lhs = (p2.inside * (1.0 - p1.inside) + (1.0 - p2.inside) * p1.inside) * ball_vol;
    let rhs = 2.0 * p2.inside * (1.0 - p2.inside) * ball_vol;
    let sigma = ((1.0 - 2.0 * p1.inside).abs() * p2.std_error
        + (1.0 - 2.0 * p2.inside).abs() * p1.std_error
        + 2.0 * (1.0 - 2.0 * p2.inside).abs() * p2.std_error)
        * ball_vol;
    (lhs, rhs, sigma.max(1e-12 * ball_vol))
}

/// The mean-deviation identity plus the surface-density inequality
/// `Per_alpha(E; B_r) >= delta Per_alpha(B_r)` (`alpha = 1` uses the classical
/// perimeter and the exact sphere area).
pub fn fractional_sb_check(
    set: &RegionSet,
    center: &[f64],
    radii: &[f64],
    alpha_order: f64,
    delta: f64,
    cfg: &QuadConfig,
) -> Result<Vec<SbVerdict>, DensityError> {
    let d = set.dim();
    let mut out = Vec::new();
    for &r in radii {
        let (lhs, rhs, dsig) = mean_deviation_identity(set, center, r, cfg);
        let identity_pass = (lhs - rhs).abs() <= SIGMA_GATE * dsig;

        let (per_set, per_ball, per_sigma) = if (alpha_order - 1.0).abs() < 1e-12 {
            let est = classical_perimeter_minkowski(
                set,
                &Omega::new(center.to_vec(), r),
                (r / 64.0).min(0.25 * set.feature_scale()),
                cfg,
            );
            let sphere = unit_sphere_area(d) * r.powf(d as f64 - 1.0);
            (est.value, sphere, est.stat_error)
        } else {
            let k = KernelSpec::fractional(d, alpha_order).expect("order in (0,1)");
            let e_per = perimeter_k(set, &Omega::new(center.to_vec(), r), &k, cfg)?;
            let ball = RegionSet::ball(center.to_vec(), r).expect("positive radius");
            let b_per = perimeter_k(
                &ball,
                &Omega::new(center.to_vec(), 2.0 * r),
                &k,
                &cfg.with_seed(mix_seed(&[cfg.seed, 2])),
            )?;
            (
                e_per.value,
                b_per.value,
                (e_per.stat_error.powi(2) + (delta * b_per.stat_error).powi(2)).sqrt(),
            )
        };
        let per_pass = per_set >= delta * per_ball - SIGMA_GATE * per_sigma;
        out.push(SbVerdict {
            r,
            identity_lhs: lhs,
            identity_rhs: rhs,
            identity_sigma: dsig,
            identity_pass,
            per_set,
            per_ball,
            per_sigma,
            per_pass,
        });
    }
    Ok(out)
}
