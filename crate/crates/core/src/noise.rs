//! Coefficient laws η and the scalar norms built from them.
//!
//! Two anti-concentration conditions drive everything downstream:
//!
//! - growth: `|E exp(iηa)| ≤ exp(−c_η ‖a‖_T²)` pointwise, where `‖a‖_T`
//!   is the distance from `a` to the lattice πZ;
//! - pair spread: `P(1 ≤ |η₁−η₂| ≤ C_η) ≥ 1/2` for independent copies.
//!
//! Symmetric Bernoulli satisfies both with `c_η = 2/π²` and `C_η = 2`.
//! Only finite-support laws are accepted; every expectation below is an
//! exact finite sum, not an estimate.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Growth constant of the symmetric Bernoulli law.
pub const BERNOULLI_C_ETA: f64 = 2.0 / (PI * PI);

/// Finite-support law of the i.i.d. coefficients. A custom law may
/// carry a user-supplied growth constant `c_η`; [`growth_check`] audits
/// it, it is never derived.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseModel {
    Bernoulli,
    Finite {
        atoms: Vec<(f64, f64)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c_eta: Option<f64>,
    },
}

impl NoiseModel {
    /// Symmetric Bernoulli: ±1 with probability 1/2 each.
    pub fn bernoulli() -> Self {
        NoiseModel::Bernoulli
    }

    /// A general finite law from `(value, probability)` atoms.
    pub fn finite(atoms: Vec<(f64, f64)>) -> Result<Self> {
        NoiseModel::finite_with_c_eta(atoms, None)
    }

    /// A finite law together with a claimed growth constant.
    pub fn finite_with_c_eta(atoms: Vec<(f64, f64)>, c_eta: Option<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptySet("noise support"));
        }
        let total: f64 = atoms.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "noise probabilities sum to {total}, expected 1"
            )));
        }
        if atoms.iter().any(|&(v, p)| p < 0.0 || !v.is_finite()) {
            return Err(Error::invalid("noise atoms must be finite with p >= 0"));
        }
        if let Some(c) = c_eta {
            if !crate::error::positive(c) {
                return Err(Error::invalid("claimed c_eta must be positive"));
            }
        }
        Ok(NoiseModel::Finite { atoms, c_eta })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: NoiseModel =
            serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        if let NoiseModel::Finite { atoms, c_eta } = &model {
            NoiseModel::finite_with_c_eta(atoms.clone(), *c_eta)
        } else {
            Ok(model)
        }
    }

    /// Support as `(value, probability)` pairs.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match self {
            NoiseModel::Bernoulli => vec![(-1.0, 0.5), (1.0, 0.5)],
            NoiseModel::Finite { atoms, .. } => atoms.clone(),
        }
    }

    /// Growth constant `c_η`: closed form for Bernoulli, the user's claim
    /// for custom laws.
    pub fn c_eta(&self) -> Option<f64> {
        match self {
            NoiseModel::Bernoulli => Some(BERNOULLI_C_ETA),
            NoiseModel::Finite { c_eta, .. } => *c_eta,
        }
    }

    /// One draw from the law.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let atoms = self.atoms();
        for &(v, p) in &atoms {
            acc += p;
            if u < acc {
                return v;
            }
        }
        atoms.last().expect("nonempty support").0
    }

    /// Law of `|η₁ − η₂|` for independent copies, merged over equal
    /// values (tolerance 1e-12).
    pub fn abs_difference_law(&self) -> Vec<(f64, f64)> {
        let atoms = self.atoms();
        let mut pairs: Vec<(f64, f64)> = Vec::new();
        for &(v1, p1) in &atoms {
            for &(v2, p2) in &atoms {
                pairs.push(((v1 - v2).abs(), p1 * p2));
            }
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (v, p) in pairs {
            match merged.last_mut() {
                Some((mv, mp)) if (v - *mv).abs() <= 1e-12 => *mp += p,
                _ => merged.push((v, p)),
            }
        }
        merged
    }
}

/// `‖a‖_T = inf_{z∈Z} |a − πz|`, the distance from `a` to the lattice πZ.
pub fn t_norm(a: f64) -> f64 {
    let r = a.rem_euclid(PI);
    r.min(PI - r)
}

/// `|E exp(iηa)|`, evaluated exactly over the finite support.
pub fn char_abs(model: &NoiseModel, a: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (v, p) in model.atoms() {
        re += p * (v * a).cos();
        im += p * (v * a).sin();
    }
    (re * re + im * im).sqrt()
}

/// `‖a‖_η = (2/π) (E ‖a(η₁−η₂)‖_T²)^{1/2}`, exact over all support pairs.
pub fn eta_norm(model: &NoiseModel, a: f64) -> f64 {
    let atoms = model.atoms();
    let mut expect = 0.0;
    for &(v1, p1) in &atoms {
        for &(v2, p2) in &atoms {
            let t = t_norm(a * (v1 - v2));
            expect += p1 * p2 * t * t;
        }
    }
    (2.0 / PI) * expect.sqrt()
}

/// Outcome of auditing the growth condition on a grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthCheck {
    pub holds: bool,
    /// Largest ratio excess `|E exp(iηa)| / exp(−c‖a‖_T²) − 1` over the grid.
    pub max_excess: f64,
    /// Grid point attaining the excess.
    pub worst_a: f64,
}

/// Verify `char_abs(a) ≤ exp(−c ‖a‖_T²)` at every grid point.
pub fn growth_check(model: &NoiseModel, c: f64, grid: &[f64]) -> Result<GrowthCheck> {
    if !crate::error::positive(c) {
        return Err(Error::invalid("growth constant c must be positive"));
    }
    if grid.is_empty() {
        return Err(Error::EmptySet("growth check grid"));
    }
    let mut max_excess = f64::NEG_INFINITY;
    let mut worst_a = grid[0];
    for &a in grid {
        let lhs = char_abs(model, a);
        let t = t_norm(a);
        let rhs = (-c * t * t).exp();
        let excess = lhs / rhs - 1.0;
        if excess > max_excess {
            max_excess = excess;
            worst_a = a;
        }
    }
    // One-ulp slack: the Bernoulli bound holds with equality at a ∈ πZ.
    Ok(GrowthCheck {
        holds: max_excess <= 1e-12,
        max_excess,
        worst_a,
    })
}

/// Outcome of the pair-spread audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnticoncentrationAudit {
    pub satisfied: bool,
    /// Smallest `C ≥ 1` with `P(1 ≤ |η₁−η₂| ≤ C) ≥ 1/2`, when one exists.
    pub c_eta_min: Option<f64>,
    /// Support point of `|η₁−η₂|` in `[1, C_eta_min]` carrying the most
    /// mass. This is the dilation constant α used by the GAP pipeline.
    pub alpha: Option<f64>,
}

/// Grid audit of the pointwise dilation step
/// `E‖(η₁−η₂)a‖_T² ≥ ½‖αa‖_T²`. It is not literally true for every law
/// and every `a`, so violations are reported, never assumed away.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaCheck {
    pub holds: bool,
    /// Largest `½‖αa‖_T² − E‖(η₁−η₂)a‖_T²` over the grid.
    pub max_violation: f64,
    pub worst_a: f64,
}

pub fn alpha_lower_bound_check(model: &NoiseModel, alpha: f64, grid: &[f64]) -> Result<AlphaCheck> {
    if grid.is_empty() {
        return Err(Error::EmptySet("alpha check grid"));
    }
    let law = model.abs_difference_law();
    let mut max_violation = f64::NEG_INFINITY;
    let mut worst_a = grid[0];
    for &a in grid {
        let lhs: f64 = law
            .iter()
            .map(|&(v, p)| {
                let t = t_norm(a * v);
                p * t * t
            })
            .sum();
        let t = t_norm(alpha * a);
        let violation = 0.5 * t * t - lhs;
        if violation > max_violation {
            max_violation = violation;
            worst_a = a;
        }
    }
    Ok(AlphaCheck {
        holds: max_violation <= 1e-12,
        max_violation,
        worst_a,
    })
}

/// Enumerate the law of `|η₁−η₂|` and extract `C_η` and α.
pub fn anticoncentration_audit(model: &NoiseModel) -> AnticoncentrationAudit {
    let law = model.abs_difference_law();
    let in_range: Vec<(f64, f64)> = law.iter().copied().filter(|&(v, _)| v >= 1.0).collect();
    let mut cum = 0.0;
    let mut c_min = None;
    for &(v, p) in &in_range {
        cum += p;
        if cum >= 0.5 - 1e-12 {
            c_min = Some(v);
            break;
        }
    }
    match c_min {
        None => AnticoncentrationAudit {
            satisfied: false,
            c_eta_min: None,
            alpha: None,
        },
        Some(c) => {
            let alpha = in_range
                .iter()
                .filter(|&&(v, _)| v <= c + 1e-12)
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .map(|&(v, _)| v);
            AnticoncentrationAudit {
                satisfied: true,
                c_eta_min: Some(c),
                alpha,
            }
        }
    }
}
