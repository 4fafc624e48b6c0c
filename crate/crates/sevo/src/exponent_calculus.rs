//! Derived constants, admissibility conditions, and decay-rate tables for
//! the coupled system
//!
//! ```text
//!     u_tt + (-Delta)^{sigma1} u + (-Delta)^{sigma1} u_t = |v|^{p1}
//!     v_tt + (-Delta)^{sigma2} v + (-Delta)^{sigma2} v_t = |u|^{p2}
//! ```
//!
//! with data (u0, u1), (v0, v1) in (L^m \cap H^{2 sigma_j, q}) x
//! (L^m \cap L^q), 1 <= m < q < infinity.
//!
//! Everything in this module is exact f64 arithmetic on the parameter
//! tuple; no grids or transforms are involved. The four supported decay
//! regimes are
//!
//! * Theorem 1.1 — loss of decay driven by the u-equation
//!   (sigma1 >= sigma2, p1 below threshold < p2),
//! * Theorem 1.2 — the mirrored loss regime driven by the v-equation,
//! * Theorem 1.3 / 1.4 — no loss of decay (both exponents above the
//!   threshold), under the respective ordering of sigma1, sigma2.
//!
//! [`classify`] reproduces the theorem hypotheses literally (including
//! strict-vs-non-strict boundaries) and reports, for each condition, the
//! binding inequality with both sides evaluated, so a verdict can be
//! audited line by line.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Parameter tuple of the coupled system.
///
/// `n` is the space dimension, `sigma1`/`sigma2` the fractional Laplacian
/// orders of the u- and v-equations, `m < q` the Lebesgue data-space pair,
/// and `p1`/`p2` the nonlinearity powers (|v|^{p1} forces u, |u|^{p2}
/// forces v).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub n: u32,
    pub sigma1: f64,
    pub sigma2: f64,
    pub m: f64,
    pub q: f64,
    pub p1: f64,
    pub p2: f64,
}

/// A violated structural invariant of [`ProblemParams`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("space dimension must satisfy n >= 1, got n = {0}")]
    Dimension(u32),
    #[error("fractional orders must satisfy sigma >= 1, got sigma{0} = {1}")]
    SigmaRange(u8, f64),
    #[error("data spaces must satisfy 1 <= m < q < infinity, got m = {m}, q = {q}")]
    DataSpaces { m: f64, q: f64 },
    #[error("nonlinearity powers must satisfy p > 1, got p{0} = {1}")]
    PowerRange(u8, f64),
    #[error("parameter {0} must be finite")]
    NonFinite(&'static str),
}

impl ProblemParams {
    /// Checks the structural invariants: n >= 1, sigma_j >= 1,
    /// 1 <= m < q < infinity, p_j > 1, and finiteness throughout.
    pub fn validate(&self) -> Result<(), ParamError> {
        for (name, v) in [
            ("sigma1", self.sigma1),
            ("sigma2", self.sigma2),
            ("m", self.m),
            ("q", self.q),
            ("p1", self.p1),
            ("p2", self.p2),
        ] {
            if !v.is_finite() {
                return Err(ParamError::NonFinite(name));
            }
        }
        if self.n < 1 {
            return Err(ParamError::Dimension(self.n));
        }
        if self.sigma1 < 1.0 {
            return Err(ParamError::SigmaRange(1, self.sigma1));
        }
        if self.sigma2 < 1.0 {
            return Err(ParamError::SigmaRange(2, self.sigma2));
        }
        if !(1.0 <= self.m && self.m < self.q) {
            return Err(ParamError::DataSpaces {
                m: self.m,
                q: self.q,
            });
        }
        if self.p1 <= 1.0 {
            return Err(ParamError::PowerRange(1, self.p1));
        }
        if self.p2 <= 1.0 {
            return Err(ParamError::PowerRange(2, self.p2));
        }
        Ok(())
    }

    /// Space dimension as a float, for rate formulas.
    pub fn nf(&self) -> f64 {
        f64::from(self.n)
    }
}

/// Constants derived from a parameter tuple.
///
/// With [n/2] = floor(n/2) and 1/r defined by 1 + 1/q = 1/r + 1/m:
///
/// ```text
/// alpha  = (1/m - 1/q) (2 + [n/2] + n (1/sigma2 - 1/sigma1))
/// beta   = (1/m - 1/q) (2 + [n/2] + n (1/sigma1 - 1/sigma2))
/// gamma  = (1 + 1/q - 1/m)(2 + [n/2]) = (2 + [n/2]) / r
/// kappa1 = (1 + gamma + alpha) / 2
/// kappa2 = (1 + gamma + beta) / 2
/// ```
///
/// Note 1 < r <= q always (r = q iff m = 1), and the exact identity
/// kappa1 - kappa2 = (1/m - 1/q) n (1/sigma2 - 1/sigma1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub half_n: u32,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub r: f64,
}

/// Computes [`DerivedConstants`], validating the parameters first.
pub fn derived_constants(p: &ProblemParams) -> Result<DerivedConstants, ParamError> {
    p.validate()?;
    let half_n = p.n / 2;
    let hn = f64::from(half_n);
    let dm = 1.0 / p.m - 1.0 / p.q;
    let alpha = dm * (2.0 + hn + p.nf() * (1.0 / p.sigma2 - 1.0 / p.sigma1));
    let beta = dm * (2.0 + hn + p.nf() * (1.0 / p.sigma1 - 1.0 / p.sigma2));
    let inv_r = 1.0 + 1.0 / p.q - 1.0 / p.m;
    let gamma = inv_r * (2.0 + hn);
    Ok(DerivedConstants {
        half_n,
        alpha,
        beta,
        gamma,
        kappa1: (1.0 + gamma + alpha) / 2.0,
        kappa2: (1.0 + gamma + beta) / 2.0,
        r: 1.0 / inv_r,
    })
}

/// Identifier of one admissibility condition, as printed in check output
/// and serialized into verdict files.
///
/// The `GN*` entries are the Gagliardo-Nirenberg dimension regimes with
/// their exponent caps; `EXP*` are the loss-threshold conditions; `DIM`,
/// `ORD`, `THRESH-DENOM` are the structural preconditions of a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConditionId {
    #[serde(rename = "ORD")]
    Ord,
    #[serde(rename = "DIM")]
    Dim,
    #[serde(rename = "THRESH-DENOM")]
    ThreshDenom,
    #[serde(rename = "GN11A1")]
    Gn11A1,
    #[serde(rename = "GN11A2")]
    Gn11A2,
    #[serde(rename = "GN11A3")]
    Gn11A3,
    #[serde(rename = "GN12A1")]
    Gn12A1,
    #[serde(rename = "GN12A2")]
    Gn12A2,
    #[serde(rename = "GN12A3")]
    Gn12A3,
    #[serde(rename = "EXP11A-part1")]
    Exp11APart1,
    #[serde(rename = "EXP11A-threshold")]
    Exp11AThreshold,
    #[serde(rename = "EXP11B")]
    Exp11B,
    #[serde(rename = "EXP12A-part1")]
    Exp12APart1,
    #[serde(rename = "EXP12A-threshold")]
    Exp12AThreshold,
    #[serde(rename = "EXP12B")]
    Exp12B,
}

impl std::fmt::Display for ConditionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ConditionId::Ord => "ORD",
            ConditionId::Dim => "DIM",
            ConditionId::ThreshDenom => "THRESH-DENOM",
            ConditionId::Gn11A1 => "GN11A1",
            ConditionId::Gn11A2 => "GN11A2",
            ConditionId::Gn11A3 => "GN11A3",
            ConditionId::Gn12A1 => "GN12A1",
            ConditionId::Gn12A2 => "GN12A2",
            ConditionId::Gn12A3 => "GN12A3",
            ConditionId::Exp11APart1 => "EXP11A-part1",
            ConditionId::Exp11AThreshold => "EXP11A-threshold",
            ConditionId::Exp11B => "EXP11B",
            ConditionId::Exp12APart1 => "EXP12A-part1",
            ConditionId::Exp12AThreshold => "EXP12A-threshold",
            ConditionId::Exp12B => "EXP12B",
        };
        f.write_str(s)
    }
}

/// Which theorem family a condition entry was evaluated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    /// Theorems 1.1 / 1.3 (sigma1 >= sigma2).
    #[serde(rename = "1.1/1.3")]
    F11,
    /// Theorems 1.2 / 1.4 (sigma2 >= sigma1).
    #[serde(rename = "1.2/1.4")]
    F12,
}

/// One evaluated admissibility condition.
///
/// For compound conditions (the GN regimes bound several exponents, the
/// threshold condition is a two-sided chain) `lhs`/`rhs` record the
/// *binding* sub-inequality — the one with the smallest margin — and
/// `note` spells out which inequality that is.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Condition {
    pub id: ConditionId,
    pub family: Family,
    pub satisfied: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub note: String,
}

/// All conditions of both theorem families, evaluated on one tuple.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    pub entries: Vec<Condition>,
}

impl ConditionReport {
    /// Looks up an entry by id within a family.
    pub fn get(&self, family: Family, id: ConditionId) -> Option<&Condition> {
        self.entries
            .iter()
            .find(|c| c.family == family && c.id == id)
    }

    /// True iff the entry exists and is satisfied.
    pub fn holds(&self, family: Family, id: ConditionId) -> bool {
        self.get(family, id).is_some_and(|c| c.satisfied)
    }
}

/// A sub-inequality of a compound condition: `lhs (<|<=) rhs`, with the
/// margin `rhs - lhs` used to pick the binding one.
struct Ineq {
    lhs: f64,
    rhs: f64,
    strict: bool,
    label: &'static str,
}

impl Ineq {
    fn le(lhs: f64, rhs: f64, label: &'static str) -> Self {
        Ineq {
            lhs,
            rhs,
            strict: false,
            label,
        }
    }
    fn lt(lhs: f64, rhs: f64, label: &'static str) -> Self {
        Ineq {
            lhs,
            rhs,
            strict: true,
            label,
        }
    }
    fn satisfied(&self) -> bool {
        if self.strict {
            self.lhs < self.rhs
        } else {
            self.lhs <= self.rhs
        }
    }
    fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// Builds a [`Condition`] from sub-inequalities: satisfied iff all hold,
/// lhs/rhs taken from the minimum-margin (binding) one.
fn compound(id: ConditionId, family: Family, prefix: &str, ineqs: &[Ineq]) -> Condition {
    let satisfied = ineqs.iter().all(Ineq::satisfied);
    let binding = ineqs
        .iter()
        .min_by(|a, b| a.margin().total_cmp(&b.margin()))
        .expect("compound condition needs at least one inequality");
    let rel = if binding.strict { "<" } else { "<=" };
    let note = if prefix.is_empty() {
        format!("binding: {} {} {}", binding.label, rel, binding.rhs)
    } else {
        format!(
            "{}; binding: {} {} {}",
            prefix, binding.label, rel, binding.rhs
        )
    };
    Condition {
        id,
        family,
        satisfied,
        lhs: binding.lhs,
        rhs: binding.rhs,
        note,
    }
}

/// The loss threshold `1 + 2 m sigma (1 + kappa) / (n - 2 m sigma kappa)`,
/// or `None` when the denominator is not positive (THRESH-DENOM guard).
///
/// In family 1.1/1.3 call it with (sigma2, kappa1); in family 1.2/1.4
/// with (sigma1, kappa2). Equivalent closed form:
/// `(n + 2 m sigma) / (n - 2 m sigma kappa)`.
pub fn loss_threshold(n: f64, m: f64, sigma: f64, kappa: f64) -> Option<f64> {
    let denom = n - 2.0 * m * sigma * kappa;
    if denom > 0.0 {
        Some(1.0 + 2.0 * m * sigma * (1.0 + kappa) / denom)
    } else {
        None
    }
}

/// Evaluates the Gagliardo-Nirenberg regime of one family: picks the
/// dimension window containing n and returns the regime condition with
/// its exponent caps. `sig_lo`/`sig_hi` are the family's smaller/larger
/// order as they appear in the window bounds (sigma2/sigma1 for family
/// 1.1, sigma1/sigma2 for family 1.2); `ids` are the A1/A2/A3 ids.
fn gn_condition(
    p: &ProblemParams,
    family: Family,
    sig_lo: f64,
    sig_hi: f64,
    ids: [ConditionId; 3],
) -> Condition {
    let n = p.nf();
    let (q, m) = (p.q, p.m);
    let ratio = q / m;
    // Exponent caps n/(n - 2 q sigma) only make sense inside the window
    // that guarantees the denominator is positive.
    let a1_bound = 2.0 * q * sig_lo;
    let a2_bound = 2.0 * q * sig_hi;
    let a3_bound = 2.0 * q * q * sig_lo / (q - m);
    if n <= a1_bound {
        compound(
            ids[0],
            family,
            "regime n <= 2 q sigma_min",
            &[
                Ineq::le(n, a1_bound, "n"),
                Ineq::le(ratio, p.p1, "q/m (lower bound on p1)"),
                Ineq::le(ratio, p.p2, "q/m (lower bound on p2)"),
            ],
        )
    } else if n <= a2_bound {
        // Only the exponent fed by the smaller-order equation is capped.
        let cap = n / (n - a1_bound);
        let (capped, free, cap_label) = match family {
            Family::F11 => (p.p1, p.p2, "p1 (cap n/(n-2q sigma2))"),
            Family::F12 => (p.p2, p.p1, "p2 (cap n/(n-2q sigma1))"),
        };
        compound(
            ids[1],
            family,
            "regime 2 q sigma_min < n <= 2 q sigma_max",
            &[
                Ineq::le(n, a2_bound, "n"),
                Ineq::le(ratio, capped, "q/m (lower bound, capped exponent)"),
                Ineq::le(capped, cap, cap_label),
                Ineq::le(ratio, free, "q/m (lower bound, free exponent)"),
            ],
        )
    } else if n <= a3_bound {
        let (cap1, cap2) = (n / (n - a1_bound), n / (n - a2_bound));
        // In family 1.1: p1 <= n/(n - 2q sigma2), p2 <= n/(n - 2q sigma1);
        // family 1.2 swaps which exponent meets which order.
        let (p1_cap, p2_cap) = match family {
            Family::F11 => (cap1, cap2),
            Family::F12 => (cap2, cap1),
        };
        compound(
            ids[2],
            family,
            "regime 2 q sigma_max < n <= 2 q^2 sigma_min/(q-m)",
            &[
                Ineq::le(n, a3_bound, "n"),
                Ineq::le(ratio, p.p1, "q/m (lower bound on p1)"),
                Ineq::le(p.p1, p1_cap, "p1 (upper cap)"),
                Ineq::le(ratio, p.p2, "q/m (lower bound on p2)"),
                Ineq::le(p.p2, p2_cap, "p2 (upper cap)"),
            ],
        )
    } else {
        // n beyond every admissible window: record the failed A3 regime
        // inequality so the report shows why no block applies.
        compound(
            ids[2],
            family,
            "no admissible dimension regime",
            &[Ineq::le(n, a3_bound, "n")],
        )
    }
}

/// Evaluates every admissibility condition of both theorem families.
///
/// Entries are appended family by family: ORD, DIM, GN regime,
/// THRESH-DENOM, then (only when the threshold exists) EXP*-part1,
/// EXP*-threshold, EXP*B. `classify` consumes this; the check command
/// prints it in full.
pub fn check_conditions(p: &ProblemParams, c: &DerivedConstants) -> ConditionReport {
    let n = p.nf();
    let mut entries = Vec::new();

    // ---- family 1.1 / 1.3: sigma1 >= sigma2, loss driven by u ----
    {
        let fam = Family::F11;
        entries.push(compound(
            ConditionId::Ord,
            fam,
            "sigma2 <= sigma1",
            &[Ineq::le(p.sigma2, p.sigma1, "sigma2")],
        ));
        entries.push(compound(
            ConditionId::Dim,
            fam,
            "sigma1 < n",
            &[Ineq::lt(p.sigma1, n, "sigma1")],
        ));
        entries.push(gn_condition(
            p,
            fam,
            p.sigma2,
            p.sigma1,
            [
                ConditionId::Gn11A1,
                ConditionId::Gn11A2,
                ConditionId::Gn11A3,
            ],
        ));
        let denom = n - 2.0 * p.m * p.sigma2 * c.kappa1;
        entries.push(compound(
            ConditionId::ThreshDenom,
            fam,
            "2 m sigma2 kappa1 < n",
            &[Ineq::lt(
                2.0 * p.m * p.sigma2 * c.kappa1,
                n,
                "2 m sigma2 kappa1",
            )],
        ));
        if let Some(thr) = loss_threshold(n, p.m, p.sigma2, c.kappa1) {
            // Part 1 of the loss condition: the combined-exponent bound
            // m (1 + p2 + p2 (1 + p1) kappa1) / ((p2-1)/sigma1 + p2 (p1-1)/sigma2) < n/2.
            let part1 = p.m * (1.0 + p.p2 + p.p2 * (1.0 + p.p1) * c.kappa1)
                / ((p.p2 - 1.0) / p.sigma1 + p.p2 * (p.p1 - 1.0) / p.sigma2);
            entries.push(compound(
                ConditionId::Exp11APart1,
                fam,
                "combined-exponent bound",
                &[Ineq::lt(
                    part1,
                    n / 2.0,
                    "m(1+p2+p2(1+p1)k1)/((p2-1)/s1+p2(p1-1)/s2)",
                )],
            ));
            entries.push(compound(
                ConditionId::Exp11AThreshold,
                fam,
                "p1 <= threshold < p2",
                &[Ineq::le(p.p1, thr, "p1"), Ineq::lt(thr, p.p2, "threshold")],
            ));
            entries.push(compound(
                ConditionId::Exp11B,
                fam,
                "min(p1,p2) > threshold",
                &[Ineq::lt(thr, p.p1.min(p.p2), "threshold")],
            ));
        }
        let _ = denom;
    }

    // ---- family 1.2 / 1.4: sigma2 >= sigma1, loss driven by v ----
    {
        let fam = Family::F12;
        entries.push(compound(
            ConditionId::Ord,
            fam,
            "sigma1 <= sigma2",
            &[Ineq::le(p.sigma1, p.sigma2, "sigma1")],
        ));
        entries.push(compound(
            ConditionId::Dim,
            fam,
            "sigma2 < n",
            &[Ineq::lt(p.sigma2, n, "sigma2")],
        ));
        entries.push(gn_condition(
            p,
            fam,
            p.sigma1,
            p.sigma2,
            [
                ConditionId::Gn12A1,
                ConditionId::Gn12A2,
                ConditionId::Gn12A3,
            ],
        ));
        entries.push(compound(
            ConditionId::ThreshDenom,
            fam,
            "2 m sigma1 kappa2 < n",
            &[Ineq::lt(
                2.0 * p.m * p.sigma1 * c.kappa2,
                n,
                "2 m sigma1 kappa2",
            )],
        ));
        if let Some(thr) = loss_threshold(n, p.m, p.sigma1, c.kappa2) {
            let part1 = p.m * (1.0 + p.p1 + p.p1 * (1.0 + p.p2) * c.kappa2)
                / ((p.p1 - 1.0) / p.sigma2 + p.p1 * (p.p2 - 1.0) / p.sigma1);
            entries.push(compound(
                ConditionId::Exp12APart1,
                fam,
                "combined-exponent bound",
                &[Ineq::lt(
                    part1,
                    n / 2.0,
                    "m(1+p1+p1(1+p2)k2)/((p1-1)/s2+p1(p2-1)/s1)",
                )],
            ));
            entries.push(compound(
                ConditionId::Exp12AThreshold,
                fam,
                "p2 <= threshold < p1",
                &[Ineq::le(p.p2, thr, "p2"), Ineq::lt(thr, p.p1, "threshold")],
            ));
            entries.push(compound(
                ConditionId::Exp12B,
                fam,
                "min(p1,p2) > threshold",
                &[Ineq::lt(thr, p.p1.min(p.p2), "threshold")],
            ));
        }
    }

    ConditionReport { entries }
}

/// Outcome regime of [`classify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Theorem 1.1: loss of decay, u-driven (p1 below threshold).
    Thm11Loss,
    /// Theorem 1.2: loss of decay, v-driven (p2 below threshold).
    Thm12Loss,
    /// Theorem 1.3: no loss of decay, sigma1 >= sigma2.
    Thm13NoLoss,
    /// Theorem 1.4: no loss of decay, sigma2 >= sigma1.
    Thm14NoLoss,
    /// No theorem applies to the tuple.
    None,
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Scenario::Thm11Loss => "Theorem 1.1 (loss of decay)",
            Scenario::Thm12Loss => "Theorem 1.2 (loss of decay)",
            Scenario::Thm13NoLoss => "Theorem 1.3 (no loss of decay)",
            Scenario::Thm14NoLoss => "Theorem 1.4 (no loss of decay)",
            Scenario::None => "no theorem applies",
        };
        f.write_str(s)
    }
}

/// Full classification result: the scenario, the audited condition
/// report, and (for loss scenarios) the epsilon loss exponents entering
/// the rate table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoremVerdict {
    pub scenario: Scenario,
    pub report: ConditionReport,
    /// epsilon(p1, sigma2), present when family 1.1's threshold exists.
    pub eps_p1_sigma2: Option<f64>,
    /// epsilon(p2, sigma1), present when family 1.2's threshold exists.
    pub eps_p2_sigma1: Option<f64>,
    pub note: Option<String>,
}

/// Whether the loss exponent uses the theorem-statement weight
/// `p * kappa` or the weight `p * kappa / 2` obtained by integrating the
/// displayed Gagliardo-Nirenberg envelope directly.
///
/// The two coincide in sign exactly at the loss threshold; `Paper` is the
/// default everywhere a theorem rate table is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsVariant {
    #[default]
    Paper,
    GnDerived,
}

/// The loss exponent
///
/// ```text
/// epsilon(p, sigma) = 1 - n (p - 1) / (2 m sigma) + p * kappa        (Paper)
///                   = 1 - n (p - 1) / (2 m sigma) + p * kappa / 2    (GnDerived)
/// ```
///
/// where the slot pairing is (p1, sigma2, kappa1) for the u-equation of
/// family 1.1 and (p2, sigma1, kappa2) for the v-equation of family 1.2.
/// With the `Paper` weight, `epsilon >= 0` iff `p` is at or below the
/// loss threshold (whenever the threshold denominator is positive).
pub fn epsilon_loss(
    p_exp: f64,
    sigma: f64,
    kappa: f64,
    n: f64,
    m: f64,
    variant: EpsVariant,
) -> f64 {
    let weight = match variant {
        EpsVariant::Paper => kappa,
        EpsVariant::GnDerived => kappa / 2.0,
    };
    1.0 - n * (p_exp - 1.0) / (2.0 * m * sigma) + p_exp * weight
}

/// epsilon(p1, sigma2) with kappa1 — the family-1.1 slot.
pub fn eps1(p: &ProblemParams, c: &DerivedConstants, variant: EpsVariant) -> f64 {
    epsilon_loss(p.p1, p.sigma2, c.kappa1, p.nf(), p.m, variant)
}

/// epsilon(p2, sigma1) with kappa2 — the family-1.2 slot.
pub fn eps2(p: &ProblemParams, c: &DerivedConstants, variant: EpsVariant) -> f64 {
    epsilon_loss(p.p2, p.sigma1, c.kappa2, p.nf(), p.m, variant)
}

fn family_base_holds(rep: &ConditionReport, fam: Family) -> bool {
    use ConditionId::*;
    let gn = match fam {
        Family::F11 => [Gn11A1, Gn11A2, Gn11A3],
        Family::F12 => [Gn12A1, Gn12A2, Gn12A3],
    };
    rep.holds(fam, Ord)
        && rep.holds(fam, Dim)
        && gn.iter().any(|id| rep.holds(fam, *id))
        && rep.holds(fam, ThreshDenom)
}

/// Classifies a parameter tuple into one of the five scenarios.
///
/// Tests, in order: Theorem 1.3 (no loss, family 1.1), Theorem 1.4
/// (no loss, family 1.2), Theorem 1.1 (loss), Theorem 1.2 (loss); the
/// first theorem whose full hypothesis set holds wins, and `none` is
/// returned when all four fail. When sigma1 = sigma2 and the mirrored
/// branch of the winning theorem also holds, a note records that the
/// branches coincide.
pub fn classify(p: &ProblemParams) -> Result<TheoremVerdict, ParamError> {
    let c = derived_constants(p)?;
    let report = check_conditions(p, &c);
    use ConditionId::*;

    let b11 = family_base_holds(&report, Family::F11);
    let b12 = family_base_holds(&report, Family::F12);
    let noloss11 = b11 && report.holds(Family::F11, Exp11B);
    let noloss12 = b12 && report.holds(Family::F12, Exp12B);
    let loss11 =
        b11 && report.holds(Family::F11, Exp11APart1) && report.holds(Family::F11, Exp11AThreshold);
    let loss12 =
        b12 && report.holds(Family::F12, Exp12APart1) && report.holds(Family::F12, Exp12AThreshold);

    let (scenario, mirror_also) = if noloss11 {
        (Scenario::Thm13NoLoss, noloss12)
    } else if noloss12 {
        (Scenario::Thm14NoLoss, noloss11)
    } else if loss11 {
        (Scenario::Thm11Loss, loss12)
    } else if loss12 {
        (Scenario::Thm12Loss, loss11)
    } else {
        (Scenario::None, false)
    };

    let note = if p.sigma1 == p.sigma2 && scenario != Scenario::None && mirror_also {
        Some("branches coincide: sigma1 = sigma2 makes the mirrored hypotheses identical".into())
    } else {
        None
    };

    let eps_p1_sigma2 =
        loss_threshold(p.nf(), p.m, p.sigma2, c.kappa1).map(|_| eps1(p, &c, EpsVariant::Paper));
    let eps_p2_sigma1 =
        loss_threshold(p.nf(), p.m, p.sigma1, c.kappa2).map(|_| eps2(p, &c, EpsVariant::Paper));

    Ok(TheoremVerdict {
        scenario,
        report,
        eps_p1_sigma2,
        eps_p2_sigma1,
        note,
    })
}

/// Predicted decay rates of one solution component: the exponent `e` in
/// `norm <= C (1+t)^e` for the L^q norm of the component, of |D|^{sigma_j}
/// applied to it (shared by the time derivative), and of |D|^{2 sigma_j}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentRates {
    pub rate_lq: f64,
    pub rate_mid: f64,
    pub rate_top: f64,
}

impl ComponentRates {
    fn from_base(base: f64, shift: f64) -> Self {
        ComponentRates {
            rate_lq: base + shift,
            rate_mid: base - 0.5 + shift,
            rate_top: base - 1.0 + shift,
        }
    }
}

/// Decay-rate table for both components under a given scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRateTable {
    pub u: ComponentRates,
    pub v: ComponentRates,
}

/// Rate table of the no-loss theorems: both components decay at the
/// linear rates, shift (gamma+1)/2 on the L^q level. Independent of
/// p1, p2.
pub fn noloss_rates(p: &ProblemParams, c: &DerivedConstants) -> DecayRateTable {
    let dec = |sigma: f64| -p.nf() / (2.0 * sigma) * (1.0 - 1.0 / c.r);
    let shift = (c.gamma + 1.0) / 2.0;
    DecayRateTable {
        u: ComponentRates::from_base(dec(p.sigma1), shift),
        v: ComponentRates::from_base(dec(p.sigma2), shift),
    }
}

/// Rate table predicted by the verdict's scenario.
///
/// Loss scenarios shift the driving component by `epsilon + kappa_j / 2`
/// and the other by `kappa_j / 2`; no-loss scenarios use
/// [`noloss_rates`]. Returns `None` for the `none` scenario.
pub fn predicted_rates(
    p: &ProblemParams,
    c: &DerivedConstants,
    verdict: &TheoremVerdict,
) -> Option<DecayRateTable> {
    let dec = |sigma: f64| -p.nf() / (2.0 * sigma) * (1.0 - 1.0 / c.r);
    match verdict.scenario {
        Scenario::Thm11Loss => {
            let eps = verdict.eps_p1_sigma2?;
            Some(DecayRateTable {
                u: ComponentRates::from_base(dec(p.sigma1), eps + c.kappa1 / 2.0),
                v: ComponentRates::from_base(dec(p.sigma2), c.kappa1 / 2.0),
            })
        }
        Scenario::Thm12Loss => {
            let eps = verdict.eps_p2_sigma1?;
            Some(DecayRateTable {
                u: ComponentRates::from_base(dec(p.sigma1), c.kappa2 / 2.0),
                v: ComponentRates::from_base(dec(p.sigma2), eps + c.kappa2 / 2.0),
            })
        }
        Scenario::Thm13NoLoss | Scenario::Thm14NoLoss => Some(noloss_rates(p, c)),
        Scenario::None => None,
    }
}

/// Exponent of the Gagliardo-Nirenberg envelope for the raised norm
/// `‖w‖^{p}_{L^{eta p}}` of a component whose own order is `sigma_own`
/// and whose L^q decay rate is `rate_lq`:
///
/// ```text
/// p * ( -n/(2 sigma_own) (1/m - 1/(eta p)) + S )
/// with S = rate_lq + n/(2 sigma_own) (1 - 1/r)
/// ```
///
/// For the family-1.1 loss table this reduces to S = kappa1/2 for the
/// v-component and S = epsilon + kappa1/2 for u; in the no-loss table
/// S = (gamma+1)/2 for both.
pub fn gn_envelope_exponent(
    p_exp: f64,
    eta: f64,
    sigma_own: f64,
    rate_lq: f64,
    n: f64,
    m: f64,
    r: f64,
) -> f64 {
    let s = rate_lq + n / (2.0 * sigma_own) * (1.0 - 1.0 / r);
    p_exp * (-n / (2.0 * sigma_own) * (1.0 / m - 1.0 / (eta * p_exp)) + s)
}

/// True iff the time integral of the nonlinear envelope
/// `(1+t)^{p (-n/(2 sigma)(1/m - 1/(m p)) + kappa/2)}` diverges, i.e. the
/// exponent is >= -1. A true flag is the mechanism behind the loss of
/// decay: the Duhamel integral over the driving nonlinearity stops being
/// uniformly bounded.
pub fn nonintegrability_flag(p_exp: f64, sigma: f64, kappa: f64, n: f64, m: f64) -> bool {
    let e = p_exp * (-n / (2.0 * sigma) * (1.0 / m - 1.0 / (m * p_exp)) + kappa / 2.0);
    e >= -1.0
}

/// Cartesian product grid over parameter tuples for [`region_scan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub n: Vec<u32>,
    pub sigma1: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub m: Vec<f64>,
    pub q: Vec<f64>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
}

impl ParamGrid {
    /// Number of tuples in the product (every combination, valid or not).
    pub fn cardinality(&self) -> usize {
        self.n.len()
            * self.sigma1.len()
            * self.sigma2.len()
            * self.m.len()
            * self.q.len()
            * self.p1.len()
            * self.p2.len()
    }

    /// Enumerates the product in row-major order
    /// (n, sigma1, sigma2, m, q, p1, p2).
    pub fn tuples(&self) -> Vec<ProblemParams> {
        let mut out = Vec::with_capacity(self.cardinality());
        for &n in &self.n {
            for &sigma1 in &self.sigma1 {
                for &sigma2 in &self.sigma2 {
                    for &m in &self.m {
                        for &q in &self.q {
                            for &p1 in &self.p1 {
                                for &p2 in &self.p2 {
                                    out.push(ProblemParams {
                                        n,
                                        sigma1,
                                        sigma2,
                                        m,
                                        q,
                                        p1,
                                        p2,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Classifies every tuple of the grid, in grid order. Invalid tuples
/// (e.g. m >= q corners of the product) are carried through as errors so
/// the scan output stays exhaustive: one row per grid point.
pub fn region_scan(grid: &ParamGrid) -> Vec<(ProblemParams, Result<TheoremVerdict, ParamError>)> {
    grid.tuples()
        .into_iter()
        .map(|p| (p, classify(&p)))
        .collect()
}

/// Scenario tallies over a scan.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub total: usize,
    pub thm11_loss: usize,
    pub thm12_loss: usize,
    pub thm13_no_loss: usize,
    pub thm14_no_loss: usize,
    pub none: usize,
    pub invalid: usize,
}

/// Tallies scan results by scenario.
pub fn scan_summary(rows: &[(ProblemParams, Result<TheoremVerdict, ParamError>)]) -> ScanSummary {
    let mut s = ScanSummary {
        total: rows.len(),
        ..Default::default()
    };
    for (_, res) in rows {
        match res {
            Err(_) => s.invalid += 1,
            Ok(v) => match v.scenario {
                Scenario::Thm11Loss => s.thm11_loss += 1,
                Scenario::Thm12Loss => s.thm12_loss += 1,
                Scenario::Thm13NoLoss => s.thm13_no_loss += 1,
                Scenario::Thm14NoLoss => s.thm14_no_loss += 1,
                Scenario::None => s.none += 1,
            },
        }
    }
    s
}
