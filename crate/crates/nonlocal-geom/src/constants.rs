//! The explicit constant ledger: every quantity the density-estimate
//! verifiers compare against, computed from `(d, s, lambda, Lambda, M)` and
//! nothing else. The ledger is pure data; experiments are reproducible from
//! its CSV alone.

use crate::curvature::ball_curvature_exact;
use crate::special::unit_ball_volume;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("parameter out of domain: {0}")]
    BadParam(String),
    #[error("derived sparseness constant alpha = {0} is not below 1")]
    AlphaNotBelowOne(f64),
    #[error("ledger csv parse error: {0}")]
    Parse(String),
}

/// Explicit constants for the volumetric density estimate and the fat-boundary
/// threshold, traced from the comparison-ball and annulus bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantLedger {
    // inputs
    pub d: usize,
    pub s: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub m: f64,
    // derived
    /// Exact s-mean curvature of the unit ball.
    pub hball: f64,
    /// Upper comparison bound for the curvature of the touching ball.
    pub c1: f64,
    /// Annulus kernel mass constant `lambda d |B_1| / (2s)`.
    pub c4: f64,
    /// Equals `c4`; lower-bound constant in the rearrangement step.
    pub c2: f64,
    /// Geometric factor `2^{-s-s/d}` from the displaced-volume bound.
    pub c3: f64,
    /// Sparseness threshold forcing curvature above `(M+1) r^{-s}`.
    pub beta: f64,
    /// Maximal-function weak (1,1) constant; Vitali covering gives `3^d`.
    pub chl: f64,
    /// Sparse-point measure constant `1/2 (4^d chl)^{-1}`.
    pub theta: f64,
    /// Dyadic annulus lower bound `lambda d |B_1| (2^s - 1)/s`.
    pub c1shell: f64,
    /// Dyadic annulus upper bound `Lambda |B_1| 2^{d+s}`.
    pub c2shell: f64,
    /// Shell sparseness threshold `c1shell / (2 c2shell)`.
    pub gamma: f64,
    /// Shell lower-bound constant `c1shell / 2`.
    pub cshell: f64,
    /// Sparseness level for the volumetric estimate (`beta`).
    pub alpha_vol: f64,
    /// Sparseness level for the fat-boundary estimate (`min(beta, gamma)`).
    pub alpha_fat: f64,
    /// Density constant for the volumetric estimate: `theta * alpha_vol`.
    pub delta12: f64,
    /// Density constant for the fat-boundary estimate: `theta * alpha_fat`.
    pub delta16: f64,
}

/// Build the ledger. Errors on domain violations and on the (never observed
/// in the admissible domain, still asserted) case `alpha >= 1`.
pub fn build_ledger(
    d: usize,
    s: f64,
    lambda: f64,
    big_lambda: f64,
    m: f64,
) -> Result<ConstantLedger, LedgerError> {
    if d < 1 {
        return Err(LedgerError::BadParam("d must be >= 1".into()));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(LedgerError::BadParam(format!("s must lie in (0,1), got {s}")));
    }
    if !(lambda > 0.0 && big_lambda >= lambda) {
        return Err(LedgerError::BadParam(format!(
            "need 0 < lambda <= Lambda, got {lambda}, {big_lambda}"
        )));
    }
    if !(m >= 0.0) {
        return Err(LedgerError::BadParam(format!("M must be >= 0, got {m}")));
    }
    let df = d as f64;
    let vol = unit_ball_volume(d);
    let hball = ball_curvature_exact(d, s);
    let c1 = big_lambda * hball;
    let c4 = lambda * df * vol / (2.0 * s);
    let c2 = c4;
    let c3 = 2f64.powf(-s - s / df);
    let beta = (c2 * c3 / (m + 1.0 + c1 + c2)).powf(df / s);
    let chl = 3f64.powi(d as i32);
    let theta = 0.5 / (4f64.powi(d as i32) * chl);
    let c1shell = lambda * df * vol * (2f64.powf(s) - 1.0) / s;
    let c2shell = big_lambda * vol * 2f64.powf(df + s);
    let gamma = c1shell / (2.0 * c2shell);
    let cshell = c1shell / 2.0;
    let alpha_vol = beta;
    let alpha_fat = beta.min(gamma);
    if alpha_vol >= 1.0 || alpha_fat >= 1.0 {
        return Err(LedgerError::AlphaNotBelowOne(alpha_vol.max(alpha_fat)));
    }
    Ok(ConstantLedger {
        d,
        s,
        lambda,
        big_lambda,
        m,
        hball,
        c1,
        c4,
        c2,
        c3,
        beta,
        chl,
        theta,
        c1shell,
        c2shell,
        gamma,
        cshell,
        alpha_vol,
        alpha_fat,
        delta12: theta * alpha_vol,
        delta16: theta * alpha_fat,
    })
}

impl ConstantLedger {
    /// Rebuild with the curvature bound rescaled for a window of half the
    /// radius: `M -> 2^s M` (used by the all-radii sweep).
    pub fn rescaled_for_half_window(&self) -> ConstantLedger {
        build_ledger(
            self.d,
            self.s,
            self.lambda,
            self.big_lambda,
            2f64.powf(self.s) * self.m,
        )
        .expect("rescaled parameters stay admissible")
    }

    /// Tail constant of the truncated blow-up chain: `2^s Lambda d |B_1| / s`.
    pub fn truncation_tail_constant(&self) -> f64 {
        2f64.powf(self.s) * self.big_lambda * self.d as f64 * unit_ball_volume(self.d) / self.s
    }

    /// Blow-up envelope at truncation radius `r` with sparseness verified
    /// down from `r0`: `-C_tail / r0^s + 2^{-s} cshell r^{-s}`.
    pub fn blowup_envelope(&self, r0: f64, r: f64) -> f64 {
        -self.truncation_tail_constant() / r0.powf(self.s)
            + 2f64.powf(-self.s) * self.cshell * r.powf(-self.s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LedgerRow {
    pub name: &'static str,
    pub value: f64,
    pub formula: &'static str,
    pub derivation: &'static str,
}

/// The 16 derived constants as a table: name, value, formula, derivation.
pub fn ledger_report(l: &ConstantLedger) -> Vec<LedgerRow> {
    vec![
        LedgerRow {
            name: "hball",
            value: l.hball,
            formula: "2^{1-s} pi^{(d-1)/2} G((1-s)/2) / (s G((d-s)/2))",
            derivation: "exact unit-ball curvature via the Gamma function",
        },
        LedgerRow {
            name: "c1",
            value: l.c1,
            formula: "Lambda * hball",
            derivation: "upper comparison bound for the touching-ball curvature",
        },
        LedgerRow {
            name: "c4",
            value: l.c4,
            formula: "lambda * d * |B1| / (2s)",
            derivation: "half the kernel mass of a centred annulus",
        },
        LedgerRow {
            name: "c2",
            value: l.c2,
            formula: "c4",
            derivation: "rearranged complement integral lower bound",
        },
        LedgerRow {
            name: "c3",
            value: l.c3,
            formula: "2^{-s-s/d}",
            derivation: "displaced-volume radius bound",
        },
        LedgerRow {
            name: "beta",
            value: l.beta,
            formula: "(c2 c3 / (M+1+c1+c2))^{d/s}",
            derivation: "sparseness forcing curvature >= (M+1) r^{-s}",
        },
        LedgerRow {
            name: "chl",
            value: l.chl,
            formula: "3^d",
            derivation: "Vitali covering constant for the centred maximal function",
        },
        LedgerRow {
            name: "theta",
            value: l.theta,
            formula: "(1/2) (4^d chl)^{-1}",
            derivation: "sparse-point measure lower bound",
        },
        LedgerRow {
            name: "c1shell",
            value: l.c1shell,
            formula: "lambda d |B1| (2^s - 1)/s",
            derivation: "kernel mass of the dyadic annulus",
        },
        LedgerRow {
            name: "c2shell",
            value: l.c2shell,
            formula: "Lambda |B1| 2^{d+s}",
            derivation: "annulus mass displaced by the set",
        },
        LedgerRow {
            name: "gamma",
            value: l.gamma,
            formula: "c1shell / (2 c2shell)",
            derivation: "sparseness keeping each annulus integral positive",
        },
        LedgerRow {
            name: "cshell",
            value: l.cshell,
            formula: "c1shell / 2",
            derivation: "surviving annulus lower bound",
        },
        LedgerRow {
            name: "alpha_vol",
            value: l.alpha_vol,
            formula: "beta",
            derivation: "sparseness level for the volumetric estimate",
        },
        LedgerRow {
            name: "alpha_fat",
            value: l.alpha_fat,
            formula: "min(beta, gamma)",
            derivation: "sparseness level for the fat-boundary estimate",
        },
        LedgerRow {
            name: "delta12",
            value: l.delta12,
            formula: "theta * alpha_vol",
            derivation: "volumetric density constant",
        },
        LedgerRow {
            name: "delta16",
            value: l.delta16,
            formula: "theta * alpha_fat",
            derivation: "fat-boundary density constant",
        },
    ]
}

/// CSV serialization: inputs in header comments, one row per constant.
pub fn ledger_to_csv(l: &ConstantLedger) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# inputs: d={} s={} lambda={} Lambda={} M={}\n",
        l.d, l.s, l.lambda, l.big_lambda, l.m
    ));
    out.push_str("name,value,formula,derivation\n");
    for row in ledger_report(l) {
        out.push_str(&format!(
            "{},{},\"{}\",\"{}\"\n",
            row.name, row.value, row.formula, row.derivation
        ));
    }
    out
}

/// Parse a ledger back from its CSV (round-trip identity with
/// [`ledger_to_csv`]): the inputs line is authoritative, values are verified.
pub fn ledger_from_csv(text: &str) -> Result<ConstantLedger, LedgerError> {
    let inputs = text
        .lines()
        .find(|l| l.starts_with("# inputs:"))
        .ok_or_else(|| LedgerError::Parse("missing inputs line".into()))?;
    let mut d = None;
    let mut s = None;
    let mut lambda = None;
    let mut big = None;
    let mut m = None;
    for tok in inputs.trim_start_matches("# inputs:").split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| LedgerError::Parse(format!("bad token {tok}")))?;
        let val: f64 = v
            .parse()
            .map_err(|e| LedgerError::Parse(format!("bad value in {tok}: {e}")))?;
        match k {
            "d" => d = Some(val as usize),
            "s" => s = Some(val),
            "lambda" => lambda = Some(val),
            "Lambda" => big = Some(val),
            "M" => m = Some(val),
            _ => return Err(LedgerError::Parse(format!("unknown key {k}"))),
        }
    }
    let ledger = build_ledger(
        d.ok_or_else(|| LedgerError::Parse("missing d".into()))?,
        s.ok_or_else(|| LedgerError::Parse("missing s".into()))?,
        lambda.ok_or_else(|| LedgerError::Parse("missing lambda".into()))?,
        big.ok_or_else(|| LedgerError::Parse("missing Lambda".into()))?,
        m.ok_or_else(|| LedgerError::Parse("missing M".into()))?,
    )?;
    // verify the persisted values against the rebuilt chain
    for line in text.lines().skip(2) {
        let mut parts = line.splitn(3, ',');
        let (Some(name), Some(value)) = (parts.next(), parts.next()) else {
            continue;
        };
        let value: f64 = value
            .parse()
            .map_err(|e| LedgerError::Parse(format!("row {name}: {e}")))?;
        let expect = ledger_report(&ledger)
            .into_iter()
            .find(|r| r.name == name)
            .map(|r| r.value);
        if let Some(expect) = expect {
            if (value - expect).abs() > 1e-12 * expect.abs().max(1.0) {
                return Err(LedgerError::Parse(format!(
                    "row {name}: stored {value} != derived {expect}"
                )));
            }
        }
    }
    Ok(ledger)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_chain_d1() {
        // chain evaluated by hand/script as an independent oracle:
        // d=1, s=1/2, lambda=Lambda=1, M=0
        let l = build_ledger(1, 0.5, 1.0, 1.0, 0.0).unwrap();
        let sqrt2 = std::f64::consts::SQRT_2;
        assert_relative_eq!(l.hball, 2.0 * sqrt2, max_relative = 1e-12);
        assert_relative_eq!(l.c1, 2.0 * sqrt2, max_relative = 1e-12);
        assert_relative_eq!(l.c4, 2.0, max_relative = 1e-12);
        assert_relative_eq!(l.c2, 2.0, max_relative = 1e-12);
        assert_relative_eq!(l.c3, 0.5, max_relative = 1e-12);
        assert_relative_eq!(
            l.beta,
            (1.0 / (3.0 + 2.0 * sqrt2)).powi(2),
            max_relative = 1e-12
        );
        assert_relative_eq!(l.beta, 0.029437251522859414, max_relative = 1e-12);
        assert_relative_eq!(l.chl, 3.0, max_relative = 1e-15);
        assert_relative_eq!(l.theta, 1.0 / 24.0, max_relative = 1e-15);
        assert_relative_eq!(l.delta12, 0.0012265521467858089, max_relative = 1e-12);
    }

    #[test]
    fn reference_chain_d2() {
        let l = build_ledger(2, 0.5, 1.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(l.hball, 14.832597418410975, max_relative = 1e-12);
        assert_relative_eq!(l.c4, std::f64::consts::PI * 2.0, max_relative = 1e-12);
        assert_relative_eq!(l.c3, 2f64.powf(-0.75), max_relative = 1e-12);
        assert_relative_eq!(l.beta, 0.00081436711490718955, max_relative = 1e-11);
        assert_relative_eq!(l.gamma, 0.14644660940672624, max_relative = 1e-12);
        assert_relative_eq!(l.c1shell, 5.205161138274292, max_relative = 1e-12);
        assert_relative_eq!(l.c2shell, 17.771531752633465, max_relative = 1e-12);
        assert_relative_eq!(l.delta12, 2.8276635934277415e-6, max_relative = 1e-11);
    }

    #[test]
    fn beta_invariant_under_joint_scaling() {
        // beta depends on (lambda, Lambda, M+1) only through ratios
        let base = build_ledger(2, 0.5, 1.0, 2.0, 1.0).unwrap();
        for &c in &[0.5, 3.0, 10.0] {
            let scaled = build_ledger(2, 0.5, c * 1.0, c * 2.0, c * (1.0 + 1.0) - 1.0).unwrap();
            assert_relative_eq!(scaled.beta, base.beta, max_relative = 1e-12);
        }
    }

    #[test]
    fn beta_vanishes_monotonically_in_m() {
        let mut prev = f64::INFINITY;
        for i in 0..14 {
            let m = 2f64.powi(i) - 1.0;
            let l = build_ledger(1, 0.5, 1.0, 1.0, m).unwrap();
            assert!(l.beta < prev);
            prev = l.beta;
        }
        assert!(prev < 1e-6);
    }

    #[test]
    fn delta12_monotone_in_m_and_ellipticity_ratio() {
        // finite differences over a parameter grid
        for d in 1..=3 {
            for &s in &[0.25, 0.5, 0.75] {
                let mut prev = f64::INFINITY;
                for &m in &[0.0, 0.5, 1.0, 2.0, 4.0] {
                    let l = build_ledger(d, s, 1.0, 1.0, m).unwrap();
                    assert!(l.delta12 <= prev);
                    prev = l.delta12;
                }
                let mut prev = f64::INFINITY;
                for &big in &[1.0, 1.5, 2.0, 4.0] {
                    let l = build_ledger(d, s, 1.0, big, 0.0).unwrap();
                    assert!(l.delta12 <= prev);
                    prev = l.delta12;
                }
            }
        }
    }

    #[test]
    fn gamma_matches_shell_quotient() {
        let l = build_ledger(3, 0.7, 0.5, 2.5, 3.0).unwrap();
        assert_relative_eq!(l.gamma, l.c1shell / (2.0 * l.c2shell), max_relative = 1e-15);
    }

    #[test]
    fn all_entries_positive_and_thresholds_below_one() {
        for d in 1..=3 {
            for &s in &[0.1, 0.25, 0.5, 0.75, 0.9] {
                for &(lam, big, m) in &[(1.0, 1.0, 0.0), (0.5, 2.0, 1.0), (1.0, 4.0, 10.0)] {
                    let l = build_ledger(d, s, lam, big, m).unwrap();
                    for row in ledger_report(&l) {
                        assert!(row.value > 0.0, "{} not positive", row.name);
                    }
                    assert!(l.beta < 1.0);
                    assert!(l.gamma < 1.0);
                    assert!(l.theta < 1.0);
                    assert!(l.delta12 < 1.0 && l.delta16 < 1.0);
                    assert!(l.delta16 <= l.delta12);
                }
            }
        }
    }

    #[test]
    fn sanity_corridor() {
        // unit envelope, no curvature bound: delta12 stays well below the true
        // half-space density 1/2 (the chain is far from sharp)
        for d in 1..=3 {
            for &s in &[0.25, 0.5, 0.75] {
                let l = build_ledger(d, s, 1.0, 1.0, 0.0).unwrap();
                assert!(l.delta12 > 0.0 && l.delta12 < 0.1, "delta12 {}", l.delta12);
            }
        }
    }

    #[test]
    fn report_has_sixteen_rows_and_m_touches_only_sparseness_rows() {
        let a = build_ledger(2, 0.5, 1.0, 2.0, 0.0).unwrap();
        let b = build_ledger(2, 0.5, 1.0, 2.0, 5.0).unwrap();
        let ra = ledger_report(&a);
        let rb = ledger_report(&b);
        assert_eq!(ra.len(), 16);
        assert_eq!(rb.len(), 16);
        for (x, y) in ra.iter().zip(&rb) {
            let differs = x.value != y.value;
            let m_dependent = matches!(
                x.name,
                "beta" | "alpha_vol" | "alpha_fat" | "delta12" | "delta16"
            );
            assert_eq!(
                differs, m_dependent,
                "row {} unexpectedly {}",
                x.name,
                if differs { "changed" } else { "frozen" }
            );
        }
    }

    #[test]
    fn csv_round_trip() {
        let l = build_ledger(2, 0.5, 1.0, 2.0, 1.5).unwrap();
        let csv = ledger_to_csv(&l);
        let back = ledger_from_csv(&csv).unwrap();
        assert_eq!(l, back);
    }

    #[test]
    fn domain_errors() {
        assert!(build_ledger(0, 0.5, 1.0, 1.0, 0.0).is_err());
        assert!(build_ledger(1, 1.5, 1.0, 1.0, 0.0).is_err());
        assert!(build_ledger(1, 0.5, 0.0, 1.0, 0.0).is_err());
        assert!(build_ledger(1, 0.5, 2.0, 1.0, 0.0).is_err());
        assert!(build_ledger(1, 0.5, 1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn half_window_rescale() {
        let l = build_ledger(1, 0.5, 1.0, 1.0, 1.0).unwrap();
        let r = l.rescaled_for_half_window();
        assert_relative_eq!(r.m, 2f64.sqrt(), max_relative = 1e-12);
        assert!(r.delta12 < l.delta12);
    }
}
