//! Special functions: Lanczos gamma, unit-ball volume, sphere area.

use std::f64::consts::PI;

// Lanczos coefficients (g = 7, n = 9), as used by the GNU Scientific Library.
// Relative error is below 1e-13 on the real domain used here.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_P: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for real arguments (poles at non-positive integers return NaN).
pub fn gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    if x < 0.5 {
        // reflection formula
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS_P[0];
        for (i, &p) in LANCZOS_P.iter().enumerate().skip(1) {
            acc += p / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

/// Volume of the unit ball in `d` dimensions: `pi^{d/2} / Gamma(d/2 + 1)`.
pub fn unit_ball_volume(d: usize) -> f64 {
    PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0 + 1.0)
}

/// Surface area of the unit sphere in `R^d`: `d |B_1|`.
pub fn unit_sphere_area(d: usize) -> f64 {
    d as f64 * unit_ball_volume(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Reference values computed to 20 digits with an independent
    // arbitrary-precision evaluation.
    const GAMMA_REFS: &[(f64, f64)] = &[
        (0.05, 19.470085311255512864),
        (0.125, 7.5339415987976119047),
        (0.25, 3.6256099082219083119),
        (0.375, 2.3704361844166009086),
        (0.5, 1.7724538509055160273),
        (0.625, 1.4345188480905567756),
        (0.75, 1.2254167024651776451),
        (0.875, 1.0896523574228969513),
        (0.95, 1.0314533171290321962),
        (1.0, 1.0),
        (1.25, 0.90640247705547707798),
        (1.5, 0.88622692545275801365),
        (2.0, 1.0),
        (2.5, 1.3293403881791370205),
        (3.5, 3.3233509704478425512),
        (10.5, 1133278.3889487855673),
    ];

    #[test]
    fn gamma_matches_reference_to_1e12() {
        for &(x, want) in GAMMA_REFS {
            let got = gamma(x);
            assert_relative_eq!(got, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn gamma_recurrence() {
        for &x in &[0.3, 0.7, 1.1, 1.9, 2.6] {
            assert_relative_eq!(gamma(x + 1.0), x * gamma(x), max_relative = 1e-13);
        }
    }

    #[test]
    fn gamma_poles_are_nan() {
        assert!(gamma(0.0).is_nan());
        assert!(gamma(-2.0).is_nan());
    }

    #[test]
    fn ball_volumes() {
        assert_relative_eq!(unit_ball_volume(1), 2.0, max_relative = 1e-14);
        assert_relative_eq!(unit_ball_volume(2), PI, max_relative = 1e-14);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * PI / 3.0, max_relative = 1e-13);
        assert_relative_eq!(unit_ball_volume(4), 4.9348022005446793094, max_relative = 1e-13);
    }

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(unit_sphere_area(1), 2.0, max_relative = 1e-14);
        assert_relative_eq!(unit_sphere_area(2), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(unit_sphere_area(3), 4.0 * PI, max_relative = 1e-13);
    }
}
