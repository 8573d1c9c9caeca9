//! The characteristic-function side of the small-ball problem.
//!
//! Everything here revolves around the gaussian-weighted integral
//!
//! ```text
//! I(X) = ∫ |E exp(i⟨X,ξ⟩)| e^{−|ξ|²/2} dξ = (2π)^{d/2} E_g |φ_X(g)|,
//! ```
//!
//! which upper-bounds `ρ_R^K` through the body constant κ:
//! `ρ_R^K(X) ≤ κ(K)^d · I(X/R)`. The η-norm variant replaces `|φ|` with
//! `exp(−½ Σ_v ‖⟨v,ξ⟩‖_η²)`, and the classical Euclidean inequality with
//! its unspecified absolute constant is kept as a comparison-only report.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::geometry::{BodyConstants, KappaScalePoint};
use crate::mc;
use crate::noise::{char_abs, eta_norm, t_norm, NoiseModel};
use crate::smallball::VectorSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    IIntegral,
    EsseenKBound,
    EsseenEtaBound,
    EuclideanBound,
}

/// A Monte Carlo estimate of a bound or integral.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EsseenEstimate {
    pub kind: EstimateKind,
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

/// `|φ_X(ξ)| = ∏_j |E exp(iη⟨v_j,ξ⟩)|`, exact for finite-support η.
pub fn char_system_abs(vectors: &[Vec<f64>], model: &NoiseModel, xi: &[f64]) -> f64 {
    vectors
        .iter()
        .map(|v| char_abs(model, crate::linalg::dot(v, xi)))
        .product()
}

/// `I(X_V)` as a gaussian expectation. An empty vector list means φ ≡ 1,
/// so `I = (2π)^{d/2}`.
pub fn esseen_integral(
    vectors: &[Vec<f64>],
    d: usize,
    model: &NoiseModel,
    samples: usize,
    seed: u64,
) -> Result<EsseenEstimate> {
    if samples < 1_000 {
        return Err(Error::invalid("esseen_integral needs >= 1000 samples"));
    }
    if vectors.iter().any(|v| v.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: vectors.iter().map(|v| v.len()).find(|&l| l != d).unwrap_or(0),
        });
    }
    let weight = (2.0 * PI).powf(d as f64 / 2.0);
    let est = mc::mc_mean(samples, seed, |rng| {
        let g = mc::gaussian_vec(rng, d);
        weight * char_system_abs(vectors, model, &g)
    });
    Ok(EsseenEstimate {
        kind: EstimateKind::IIntegral,
        value: est.mean,
        std_error: est.std_error,
        samples,
        seed,
    })
}

/// `I(X_V)` on the raw system.
pub fn esseen_integral_system(
    system: &VectorSystem,
    model: &NoiseModel,
    samples: usize,
    seed: u64,
) -> Result<EsseenEstimate> {
    esseen_integral(system.vectors(), system.dimension(), model, samples, seed)
}

/// `κ(K)^d · I(X_{V_R})`. The Monte Carlo error is reported alongside,
/// never subtracted.
pub fn esseen_bound(
    system: &VectorSystem,
    model: &NoiseModel,
    constants: &BodyConstants,
    samples: usize,
    seed: u64,
) -> Result<EsseenEstimate> {
    let d = system.dimension();
    let rescaled = system.rescaled_vectors();
    let integral = esseen_integral(&rescaled, d, model, samples, seed)?;
    let factor = constants.kappa.powi(d as i32);
    Ok(EsseenEstimate {
        kind: EstimateKind::EsseenKBound,
        value: factor * integral.value,
        std_error: factor * integral.std_error,
        samples,
        seed,
    })
}

/// `κ^d (2π)^{d/2} E_g exp(−½ Σ_{v∈V_R} ‖⟨v,g⟩‖_η²)`.
pub fn esseen_eta_bound(
    system: &VectorSystem,
    model: &NoiseModel,
    constants: &BodyConstants,
    samples: usize,
    seed: u64,
) -> Result<EsseenEstimate> {
    if samples < 1_000 {
        return Err(Error::invalid("esseen_eta_bound needs >= 1000 samples"));
    }
    let d = system.dimension();
    let rescaled = system.rescaled_vectors();
    let weight = (2.0 * PI).powf(d as f64 / 2.0);
    let est = mc::mc_mean(samples, seed, |rng| {
        let g = mc::gaussian_vec(rng, d);
        let sum: f64 = rescaled
            .iter()
            .map(|v| {
                let e = eta_norm(model, crate::linalg::dot(v, &g));
                e * e
            })
            .sum();
        weight * (-0.5 * sum).exp()
    });
    let factor = constants.kappa.powi(d as i32);
    Ok(EsseenEstimate {
        kind: EstimateKind::EsseenEtaBound,
        value: factor * est.mean,
        std_error: factor * est.std_error,
        samples,
        seed,
    })
}

/// Volume of the unit Euclidean ball in dimension `d`.
fn unit_ball_volume(d: usize) -> f64 {
    PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0 + 1.0)
}

/// The classical Euclidean inequality
/// `ρ_R ≤ C^d (R/√d + √d/ε)^d ∫_{εB₂} |φ_X(ξ)| dξ`,
/// with the absolute constant `C` exposed as a knob (the inequality is
/// reported for comparison, not asserted: with `C = 1` it can fall below
/// ρ).
pub fn esseen_euclidean_bound(
    system: &VectorSystem,
    model: &NoiseModel,
    epsilon: f64,
    constant_c: f64,
    samples: usize,
    seed: u64,
) -> Result<EsseenEstimate> {
    if !crate::error::positive(epsilon) {
        return Err(Error::invalid("esseen_euclidean_bound needs epsilon > 0"));
    }
    if samples < 1_000 {
        return Err(Error::invalid("esseen_euclidean_bound needs >= 1000 samples"));
    }
    let d = system.dimension();
    let df = d as f64;
    let ball_volume = epsilon.powi(d as i32) * unit_ball_volume(d);
    let est = mc::mc_mean(samples, seed, |rng| {
        // uniform in εB₂: gaussian direction, radius ε·u^{1/d}
        let g = mc::gaussian_vec(rng, d);
        let len = crate::linalg::norm2(&g);
        let u: f64 = rng.gen::<f64>();
        let radius = epsilon * u.powf(1.0 / df);
        let xi = if len > 1e-300 {
            crate::linalg::scale(&g, radius / len)
        } else {
            vec![0.0; d]
        };
        char_system_abs(system.vectors(), model, &xi)
    });
    let front = constant_c.powi(d as i32)
        * (system.r() / df.sqrt() + df.sqrt() / epsilon).powi(d as i32);
    Ok(EsseenEstimate {
        kind: EstimateKind::EuclideanBound,
        value: front * ball_volume * est.mean,
        std_error: front * ball_volume * est.std_error,
        samples,
        seed,
    })
}

/// Composite Simpson over `[a, b]` with `n` (even) intervals.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = if n.is_multiple_of(2) { n } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let x = a + h * i as f64;
        sum += f(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

/// One cell of the torus-integral lemma audit:
/// `∫ exp(−λ‖ξw+α‖_T² − ξ²/2) dξ ≤ 40(|w|+1)/(|w|√(1+λ))`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaTvCheck {
    pub lambda: f64,
    pub w: f64,
    pub alpha: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Quadrature truncated at |ξ| ≤ 12: the discarded gaussian tail is
/// below 1e−31, far under the 1e−6 error budget.
pub fn lemma_tv_check(lambda: f64, w: f64, alpha: f64, quad_points: usize) -> Result<LemmaTvCheck> {
    if !crate::error::positive(lambda) {
        return Err(Error::invalid("lemma_tv_check needs lambda > 0"));
    }
    if w == 0.0 {
        return Err(Error::invalid("lemma_tv_check needs w != 0"));
    }
    if quad_points < 1_000 {
        return Err(Error::invalid("lemma_tv_check needs >= 1000 quadrature points"));
    }
    let f = |xi: f64| {
        let t = t_norm(xi * w + alpha);
        (-lambda * t * t - xi * xi / 2.0).exp()
    };
    let lhs = simpson(f, -12.0, 12.0, quad_points.max(1 << 17));
    let rhs = 40.0 * (w.abs() + 1.0) / (w.abs() * (1.0 + lambda).sqrt());
    Ok(LemmaTvCheck {
        lambda,
        w,
        alpha,
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-6,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaledBoundPoint {
    pub t: f64,
    pub kappa: f64,
    pub integral: f64,
    pub integral_std_error: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaledBound {
    pub t_star: f64,
    pub value: f64,
    pub profile: Vec<ScaledBoundPoint>,
}

/// Scan `κ(tK)^d · I((t/R) X_V)` over a dilation grid and return the
/// minimizer. With `1 ∈ t_grid` the result can only improve on the plain
/// bound.
pub fn optimize_scaled_bound(
    system: &VectorSystem,
    model: &NoiseModel,
    t_grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<ScaledBound> {
    if t_grid.is_empty() {
        return Err(Error::EmptySet("scaled bound t grid"));
    }
    let d = system.dimension();
    let kappa_profile: Vec<KappaScalePoint> =
        crate::geometry::kappa_scaling_profile(system.body(), t_grid, samples, seed)?;
    let mut profile = Vec::with_capacity(t_grid.len());
    let mut best: Option<(f64, f64)> = None;
    for point in &kappa_profile {
        let scaled: Vec<Vec<f64>> = system
            .vectors()
            .iter()
            .map(|v| crate::linalg::scale(v, point.t / system.r()))
            .collect();
        let integral = esseen_integral(&scaled, d, model, samples, seed)?;
        let bound = if point.kappa.is_finite() {
            point.kappa.powi(d as i32) * integral.value
        } else {
            f64::INFINITY
        };
        profile.push(ScaledBoundPoint {
            t: point.t,
            kappa: point.kappa,
            integral: integral.value,
            integral_std_error: integral.std_error,
            bound,
        });
        if best.is_none_or(|(_, v)| bound < v) {
            best = Some((point.t, bound));
        }
    }
    let (t_star, value) = best.expect("nonempty grid");
    Ok(ScaledBound {
        t_star,
        value,
        profile,
    })
}
