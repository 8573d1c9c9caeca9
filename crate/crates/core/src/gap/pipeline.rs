//! The full inverse-structure pipeline: find a level set of the η-norm
//! statistic on a grid, discard bad vectors, round the rest to a lattice,
//! check the dual volume bound, fit a GAP, and verify the four
//! conclusions (rank/cardinality, approximation, full dimension, bounded
//! generators) with explicit two-sided records.
//!
//! Absolute constants the theory leaves unspecified live in
//! [`ConstantsConfig`] (defaults 1); every record stores the constant it
//! used next to both sides of its inequality, so the artifact measures
//! the constants instead of assuming them.

use std::collections::HashSet;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{estimate_constants, BodyConstants, BodyKind};
use crate::linalg;
use crate::mc;
use crate::noise::{anticoncentration_audit, eta_norm, t_norm, NoiseModel};
use crate::smallball::{atoms, rho_exact, Certificate, VectorSystem};

use super::fit::{fit_gap, FittedGap, IntGap};
use super::{dedup_points, kfold_sumset, Gap};

/// ∏(2L+1) convention notice, logged in every pipeline report.
pub const PROPERNESS_CONVENTION: &str =
    "proper = injective representation, |Q| = prod(2L_j+1) over |x_j| <= L_j";

// ---------------------------------------------------------------------------
// level-set search
// ---------------------------------------------------------------------------

/// Level set found on the rescaled grid `(B_0 − B_0)/N ⊂ [−2,2]^d`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSetResult {
    /// Achieved level: S collects grid points with
    /// `Σ_v ‖α⟨v,s⟩‖_T² ≤ 16m`.
    pub m: u32,
    /// Search cap `M` (statement bound capped by the tail-split value).
    pub m_cap: u32,
    pub n_grid: u32,
    pub alpha: f64,
    pub points: Vec<Vec<f64>>,
    /// `(1/|S|) Σ_{s∈S} Σ_v ‖α⟨v,s⟩‖_T²`; at most `8π²m` by the filter
    /// (16 ≤ 8π²).
    pub average_statistic: f64,
    /// `(N/(2√d κ))^d · ρ`, the size the level set must reach.
    pub size_required: f64,
    pub found: bool,
    /// Grid minimum of the η-norm statistic `Σ_v ‖⟨v,s⟩‖_η²` (diagnostic).
    pub g_min: f64,
    pub g_argmin: Vec<f64>,
}

/// Scan the grid for the smallest level `m ≤ M` whose level set reaches
/// the required size. `rho` is the concentration value backing the size
/// requirement (supply the exact value or a certified lower bound).
#[allow(clippy::too_many_arguments)]
pub fn level_set_search(
    system: &VectorSystem,
    model: &NoiseModel,
    alpha: f64,
    a_exponent: f64,
    n_grid: u32,
    grid_budget: u64,
    kappa: f64,
    rho: f64,
) -> Result<LevelSetResult> {
    if n_grid == 0 {
        return Err(Error::invalid("level_set_search needs N >= 1"));
    }
    if !(crate::error::positive(rho) && rho <= 1.0) {
        return Err(Error::invalid("level_set_search needs rho in (0,1]"));
    }
    let d = system.dimension();
    let side = 4 * n_grid as u64 + 1;
    let grid_size = side.checked_pow(d as u32).filter(|&g| g <= grid_budget);
    if grid_size.is_none() {
        return Err(Error::budget(format!(
            "grid of ({side})^{d} points exceeds budget {grid_budget} (grid stages are for d <= 2)"
        )));
    }
    let df = d as f64;
    let n = system.n() as f64;
    let rescaled = system.rescaled_vectors();

    // search cap: the statement-level 10√(d log(κ n^A)) capped by the
    // value the tail split actually needs
    let log_arg = kappa * n.powf(a_exponent);
    let m_stat = if log_arg > 1.0 {
        10.0 * (df * log_arg.ln()).sqrt()
    } else {
        0.0
    };
    let m_proof_sq = 4.0
        * (a_exponent * n.ln() + df * kappa.ln() + 2f64.ln() - df / 2.0 * (2.0 * PI).ln());
    let m_proof = m_proof_sq.max(0.0).sqrt();
    let m_cap = m_stat.min(m_proof).floor().max(0.0) as u32;

    // one pass over the grid
    let inv_n = 1.0 / n_grid as f64;
    let range = -(2 * n_grid as i64)..=(2 * n_grid as i64);
    let mut grid: Vec<(Vec<f64>, f64, f64)> = Vec::with_capacity(grid_size.unwrap() as usize);
    let mut idx = vec![*range.start(); d];
    loop {
        let s: Vec<f64> = idx.iter().map(|&k| k as f64 * inv_n).collect();
        let mut tsum = 0.0;
        let mut gsum = 0.0;
        for v in &rescaled {
            let inner = linalg::dot(v, &s);
            let t = t_norm(alpha * inner);
            tsum += t * t;
            let e = eta_norm(model, inner);
            gsum += e * e;
        }
        grid.push((s, tsum, gsum));
        let mut pos = 0;
        loop {
            if pos == d {
                break;
            }
            idx[pos] += 1;
            if idx[pos] <= *range.end() {
                break;
            }
            idx[pos] = *range.start();
            pos += 1;
        }
        if pos == d {
            break;
        }
    }

    let (g_argmin, _, g_min) = grid
        .iter()
        .map(|(s, _, g)| (s, 0.0, *g))
        .fold((&grid[0].0, 0.0, f64::INFINITY), |acc, cur| {
            if cur.2 < acc.2 {
                cur
            } else {
                acc
            }
        });
    let g_argmin = g_argmin.clone();

    let size_required = (n_grid as f64 / (2.0 * df.sqrt() * kappa)).powi(d as i32) * rho;
    for m in 0..=m_cap {
        let cut = 16.0 * m as f64;
        let points: Vec<Vec<f64>> = grid
            .iter()
            .filter(|(_, tsum, _)| *tsum <= cut)
            .map(|(s, _, _)| s.clone())
            .collect();
        if points.len() as f64 >= size_required.max(1.0) {
            let average_statistic = grid
                .iter()
                .filter(|(_, tsum, _)| *tsum <= cut)
                .map(|(_, tsum, _)| *tsum)
                .sum::<f64>()
                / points.len() as f64;
            return Ok(LevelSetResult {
                m,
                m_cap,
                n_grid,
                alpha,
                points,
                average_statistic,
                size_required,
                found: true,
                g_min,
                g_argmin,
            });
        }
    }
    // no admissible level: report the best effort at the cap
    let cut = 16.0 * m_cap as f64;
    let mut points: Vec<Vec<f64>> = grid
        .iter()
        .filter(|(_, tsum, _)| *tsum <= cut)
        .map(|(s, _, _)| s.clone())
        .collect();
    if points.is_empty() {
        let argmin_t = grid
            .iter()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .expect("nonempty grid");
        points.push(argmin_t.0.clone());
    }
    let average_statistic = points
        .iter()
        .map(|s| {
            rescaled
                .iter()
                .map(|v| {
                    let t = t_norm(alpha * linalg::dot(v, s));
                    t * t
                })
                .sum::<f64>()
        })
        .sum::<f64>()
        / points.len() as f64;
    Ok(LevelSetResult {
        m: m_cap,
        m_cap,
        n_grid,
        alpha,
        points,
        average_statistic,
        size_required,
        found: false,
        g_min,
        g_argmin,
    })
}

// ---------------------------------------------------------------------------
// bad-vector split
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitResult {
    pub good: Vec<Vec<f64>>,
    pub bad: Vec<Vec<f64>>,
    pub good_indices: Vec<usize>,
    pub bad_indices: Vec<usize>,
    pub averages: Vec<f64>,
    pub threshold: f64,
    /// When the S-average bound holds, Markov forces `|bad| ≤ n'`.
    pub markov_consistent: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub markov_note: Option<String>,
}

/// A rescaled vector is bad when its S-average of `‖α⟨v,s⟩‖_T²` reaches
/// `8π²m/n'`. With `m = 0` only strictly positive averages count as bad,
/// so an all-zero system keeps all its vectors.
pub fn bad_vector_split(
    rescaled: &[Vec<f64>],
    alpha: f64,
    s_points: &[Vec<f64>],
    m: u32,
    n_prime: usize,
) -> Result<SplitResult> {
    if s_points.is_empty() {
        return Err(Error::EmptySet("level set S"));
    }
    if n_prime == 0 {
        return Err(Error::invalid("bad_vector_split needs n' >= 1"));
    }
    let threshold = 8.0 * PI * PI * m as f64 / n_prime as f64;
    let averages: Vec<f64> = rescaled
        .iter()
        .map(|v| {
            s_points
                .iter()
                .map(|s| {
                    let t = t_norm(alpha * linalg::dot(v, s));
                    t * t
                })
                .sum::<f64>()
                / s_points.len() as f64
        })
        .collect();
    let mut good = Vec::new();
    let mut bad = Vec::new();
    let mut good_indices = Vec::new();
    let mut bad_indices = Vec::new();
    for (i, (v, &avg)) in rescaled.iter().zip(&averages).enumerate() {
        let is_bad = avg >= threshold && avg > 0.0;
        if is_bad {
            bad.push(v.clone());
            bad_indices.push(i);
        } else {
            good.push(v.clone());
            good_indices.push(i);
        }
    }
    let total: f64 = averages.iter().sum();
    let premise = total <= 8.0 * PI * PI * m as f64 + 1e-12;
    let markov_consistent = !premise || bad.len() <= n_prime;
    let markov_note = (!markov_consistent).then(|| {
        format!(
            "S-average bound holds (sum {total:.6}) yet {} > n' = {n_prime} vectors are bad; averages: {averages:?}",
            bad.len()
        )
    });
    Ok(SplitResult {
        good,
        bad,
        good_indices,
        bad_indices,
        averages,
        threshold,
        markov_consistent,
        markov_note,
    })
}

// ---------------------------------------------------------------------------
// k choice
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KChoice {
    pub k: usize,
    pub k_raw: f64,
    /// Admissible-range endpoints `√(n'/(640π²√(d log(n^A κ))))` and `√n'`.
    pub range_low: f64,
    pub range_high: f64,
}

/// `k = ⌊√(n'/(64π²m))⌋`, clamped to at least 1 (with `m` clamped to at
/// least 1 first).
pub fn choose_k(
    n_prime: usize,
    m: u32,
    d: usize,
    n: usize,
    a_exponent: f64,
    kappa: f64,
) -> Result<KChoice> {
    if n_prime == 0 {
        return Err(Error::invalid("choose_k needs n' >= 1"));
    }
    let m_eff = m.max(1) as f64;
    let k_raw = (n_prime as f64 / (64.0 * PI * PI * m_eff)).sqrt();
    let k = (k_raw.floor() as usize).max(1);
    let log_arg = (n as f64).powf(a_exponent) * kappa;
    let range_low = if log_arg > 1.0 {
        (n_prime as f64 / (640.0 * PI * PI * ((d as f64) * log_arg.ln()).sqrt())).sqrt()
    } else {
        0.0
    };
    Ok(KChoice {
        k,
        k_raw,
        range_low,
        range_high: (n_prime as f64).sqrt(),
    })
}

// ---------------------------------------------------------------------------
// lattice rounding
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundedLattice {
    /// `(v', z)` pairs: `z/Dk` approximates `v'`.
    pub entries: Vec<(Vec<f64>, Vec<i64>)>,
    /// Deduplicated rounding set `F ⊂ Z^d`.
    pub f_points: Vec<Vec<i64>>,
    pub max_error: f64,
    /// The guaranteed bound `1/(Dk)` (rounding itself achieves `1/(2Dk)`).
    pub error_bound: f64,
}

/// Round each `v'` to `z = round(Dk·v')` (ties to even), with the zero
/// shortcut `z = 0` whenever `‖v'‖_∞ ≤ 1/(Dk)`.
pub fn round_to_lattice(points: &[Vec<f64>], d_big: f64, k: usize) -> Result<RoundedLattice> {
    let dk = d_big * k as f64;
    if !crate::error::positive(dk) {
        return Err(Error::invalid("round_to_lattice needs D·k > 0"));
    }
    let mut entries = Vec::with_capacity(points.len());
    let mut f_set: std::collections::BTreeSet<Vec<i64>> = std::collections::BTreeSet::new();
    let mut max_error = 0.0f64;
    for v in points {
        let sup = v.iter().map(|c| c.abs()).fold(0.0, f64::max);
        let z: Vec<i64> = if sup <= 1.0 / dk {
            vec![0; v.len()]
        } else {
            v.iter().map(|&c| (dk * c).round_ties_even() as i64).collect()
        };
        let err = v
            .iter()
            .zip(&z)
            .map(|(&c, &zi)| (c - zi as f64 / dk).abs())
            .fold(0.0, f64::max);
        max_error = max_error.max(err);
        f_set.insert(z.clone());
        entries.push((v.clone(), z));
    }
    Ok(RoundedLattice {
        entries,
        f_points: f_set.into_iter().collect(),
        max_error,
        error_bound: 1.0 / dk,
    })
}

// ---------------------------------------------------------------------------
// dual volume bound
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualVolumeCheck {
    /// Outer measure of `k(V'∪{0}) + B_∞(0, 1/(256dα))` by cell counting.
    pub lhs: f64,
    /// `36π² (2√d κ/α)^d / ρ`.
    pub rhs: f64,
    pub holds: bool,
    pub cells: u64,
    pub resolution: u32,
    pub box_radius: f64,
    pub sumset_size: usize,
}

/// Count grid cells of side `1/resolution` meeting the union of ℓ_∞
/// balls around the k-fold sumset; an outer measure, hence an upper
/// bound for the true volume.
#[allow(clippy::too_many_arguments)]
pub fn dual_volume_check(
    v_points: &[Vec<f64>],
    k: usize,
    alpha: f64,
    kappa: f64,
    d: usize,
    rho: f64,
    resolution: u32,
    sumset_budget: u64,
) -> Result<DualVolumeCheck> {
    if resolution == 0 {
        return Err(Error::invalid("dual_volume_check needs resolution >= 1"));
    }
    if !crate::error::positive(rho) {
        return Err(Error::invalid("dual_volume_check needs rho > 0"));
    }
    let mut base: Vec<Vec<f64>> = v_points.to_vec();
    base.push(vec![0.0; d]);
    dedup_points(&mut base, super::POINT_MERGE_TOL);
    let sumset = kfold_sumset(&base, k, sumset_budget)?;
    let r_box = 1.0 / (256.0 * d as f64 * alpha);
    let res = resolution as f64;
    let cells_per_axis = (2.0 * r_box * res).ceil() as u64 + 2;
    let work = (sumset.len() as u64).saturating_mul(cells_per_axis.saturating_pow(d as u32));
    if work > 100_000_000 {
        return Err(Error::budget(format!(
            "dual volume cell count ~{work} exceeds the working cap; lower the resolution"
        )));
    }
    let mut cells: HashSet<Vec<i64>> = HashSet::new();
    for c in &sumset {
        let ranges: Vec<(i64, i64)> = c
            .iter()
            .map(|&x| {
                let lo = ((x - r_box) * res).floor() as i64;
                let hi = (((x + r_box) * res).ceil() as i64 - 1).max(lo);
                (lo, hi)
            })
            .collect();
        let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        loop {
            cells.insert(idx.clone());
            let mut pos = 0;
            loop {
                if pos == d {
                    break;
                }
                idx[pos] += 1;
                if idx[pos] <= ranges[pos].1 {
                    break;
                }
                idx[pos] = ranges[pos].0;
                pos += 1;
            }
            if pos == d {
                break;
            }
        }
    }
    let lhs = cells.len() as f64 / res.powi(d as i32);
    let rhs = 36.0 * PI * PI * (2.0 * (d as f64).sqrt() * kappa / alpha).powi(d as i32) / rho;
    Ok(DualVolumeCheck {
        lhs,
        rhs,
        holds: lhs <= rhs,
        cells: cells.len() as u64,
        resolution,
        box_radius: r_box,
        sumset_size: sumset.len(),
    })
}

// ---------------------------------------------------------------------------
// verification of the four conclusions
// ---------------------------------------------------------------------------

/// Unspecified absolute constants, one knob per inequality (defaults 1).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstantsConfig {
    pub part1_rank: f64,
    pub part1_cardinality: f64,
    pub part2: f64,
    pub part3: f64,
    pub part4: f64,
    /// Constant in the hyperplane threshold; 80 is the conservative
    /// default, 40 the optimistic variant.
    pub hyperplane: f64,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        ConstantsConfig {
            part1_rank: 1.0,
            part1_cardinality: 1.0,
            part2: 1.0,
            part3: 1.0,
            part4: 1.0,
            hyperplane: 80.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Part1Record {
    pub rank: usize,
    pub rank_rhs: f64,
    pub rank_holds: bool,
    pub cardinality: f64,
    /// False when the coefficient-box upper bound stood in for an exact
    /// count (enumeration over budget, improper GAP).
    pub cardinality_exact: bool,
    pub cardinality_rhs: f64,
    pub cardinality_holds: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Part2Record {
    /// `C·ω_∞(K)·R/(dk)`.
    pub threshold: f64,
    pub distances: Vec<f64>,
    pub count_within: usize,
    pub required: usize,
    pub holds: bool,
    /// Smallest constant that would make the claim true for n−n' vectors.
    pub effective_constant: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Part3Record {
    /// Largest integer `t` with `t·{−1,1}^d ⊆ Q'` (integer witnesses).
    pub t_max: Option<u64>,
    /// `C' = D/t_max`: `{−1,1}^d ⊆ (C'k/R)Q`.
    pub c_prime: Option<f64>,
    pub rhs: f64,
    pub holds: bool,
    /// One `(vertex, coefficients)` witness per cube vertex at `t_max`.
    pub witnesses: Vec<(Vec<i64>, Vec<i64>)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Part4Record {
    /// `max_j ‖g_j‖_K` over the rescaled generators.
    pub lhs: f64,
    /// `C·C_K^{k+1}((dαk/R)·max_v ‖v‖_K + ω_∞(K))`.
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApproximationVerification {
    pub part1: Part1Record,
    pub part2: Part2Record,
    pub part3: Part3Record,
    pub part4: Part4Record,
    pub constants: ConstantsConfig,
}

/// Everything the verifier needs about one pipeline run.
pub struct VerifyInputs<'a> {
    pub system: &'a VectorSystem,
    /// The fitted integer GAP `Q'` (unscaled).
    pub q: &'a IntGap,
    /// `R/(Dk)`: `Q = scale·Q'`.
    pub scale: f64,
    pub a_exponent: f64,
    pub epsilon: f64,
    pub n_prime: usize,
    pub k: usize,
    pub alpha: f64,
    pub d_big: f64,
    pub rho: f64,
    pub constants: &'a ConstantsConfig,
    pub enum_budget: u64,
}

/// Evaluate the four conclusions for a fitted GAP.
pub fn verify_approximation(inp: &VerifyInputs) -> Result<ApproximationVerification> {
    let system = inp.system;
    let body = system.body();
    let d = system.dimension();
    let df = d as f64;
    let n = system.n();
    let q = inp.q;
    let rank = q.rank();
    let omega_inf = body.omega_infinity()?;
    let c_k = body.quasi_constant();

    // Part 1: rank and cardinality
    let rank_rhs = inp.constants.part1_rank * (df + inp.a_exponent / inp.epsilon);
    let gap_real = q.to_gap(1.0);
    let proper = gap_real.is_proper(inp.enum_budget)?;
    let (cardinality, cardinality_exact) = if proper {
        (q.cardinality_cap() as f64, true)
    } else {
        match gap_real.enumerate(inp.enum_budget) {
            Ok(points) => (points.len() as f64, true),
            Err(Error::BudgetExceeded(_)) => (q.cardinality_cap() as f64, false),
            Err(e) => return Err(e),
        }
    };
    let cardinality_rhs = inp.constants.part1_cardinality
        * (inp.n_prime as f64).powf((df - rank as f64) / 2.0)
        / inp.rho;
    let part1 = Part1Record {
        rank,
        rank_rhs,
        rank_holds: (rank as f64) <= rank_rhs,
        cardinality,
        cardinality_exact,
        cardinality_rhs,
        cardinality_holds: cardinality <= cardinality_rhs,
    };

    // Part 2: distances from the original vectors to Q = scale·Q'
    let threshold =
        inp.constants.part2 * omega_inf * system.r() / (df * inp.k as f64);
    let is_unit_box = q.generators.len() == d
        && q.generators
            .iter()
            .enumerate()
            .all(|(i, g)| g.iter().enumerate().all(|(j, &c)| c == i64::from(i == j)));
    let mut note = None;
    let distances: Vec<f64> = if q.cardinality_cap() <= inp.enum_budget {
        let points: Vec<Vec<f64>> = q.to_gap(inp.scale).enumerate(inp.enum_budget)?;
        system
            .vectors()
            .iter()
            .map(|v| body.dist_to_set(v, &points))
            .collect::<Result<_>>()?
    } else if is_unit_box {
        // coordinate-wise nearest point is optimal for coordinate-
        // monotone norms (all lp and box bodies)
        if matches!(body.kind(), BodyKind::Radial { .. }) {
            note = Some("unit-box nearest-point shortcut on a radial body is heuristic".into());
        }
        system
            .vectors()
            .iter()
            .map(|v| {
                let nearest: Vec<f64> = v
                    .iter()
                    .zip(&q.bounds)
                    .map(|(&c, &l)| {
                        let z = (c / inp.scale).round_ties_even().clamp(-(l as f64), l as f64);
                        z * inp.scale
                    })
                    .collect();
                body.norm(&linalg::sub(v, &nearest))
            })
            .collect::<Result<_>>()?
    } else {
        return Err(Error::budget(format!(
            "part 2 needs enumeration of {} points (budget {})",
            q.cardinality_cap(),
            inp.enum_budget
        )));
    };
    let mut sorted = distances.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let count_within = distances.iter().filter(|&&x| x <= threshold).count();
    let required = n.saturating_sub(inp.n_prime);
    let effective_constant = if required >= 1 {
        sorted[required - 1] * df * inp.k as f64 / (omega_inf * system.r())
    } else {
        0.0
    };
    let part2 = Part2Record {
        threshold,
        distances,
        count_within,
        required,
        holds: count_within >= required,
        effective_constant,
        note,
    };

    // Part 3: largest t with t·{−1,1}^d ⊆ Q', by exact integer witness
    let vertices: Vec<Vec<i64>> = (0..(1usize << d))
        .map(|mask| {
            (0..d)
                .map(|i| if mask >> i & 1 == 1 { 1i64 } else { -1 })
                .collect()
        })
        .collect();
    let t_cap: i64 = (0..d)
        .map(|axis| {
            q.generators
                .iter()
                .zip(&q.bounds)
                .map(|(g, &l)| l * g[axis].abs())
                .sum::<i64>()
        })
        .min()
        .unwrap_or(0)
        .min(200_000);
    let mut t_max = None;
    let mut witnesses = Vec::new();
    for t in (1..=t_cap).rev() {
        let found: Option<Vec<(Vec<i64>, Vec<i64>)>> = vertices
            .iter()
            .map(|u| {
                let target: Vec<i64> = u.iter().map(|&c| c * t).collect();
                q.member_witness(&target).map(|w| (u.clone(), w))
            })
            .collect();
        if let Some(ws) = found {
            t_max = Some(t as u64);
            witnesses = ws;
            break;
        }
    }
    let c_prime = t_max.map(|t| inp.d_big / t as f64);
    let part3_rhs = inp.constants.part3 * df * inp.alpha;
    let part3 = Part3Record {
        t_max,
        c_prime,
        rhs: part3_rhs,
        holds: c_prime.is_some_and(|c| c <= part3_rhs),
        witnesses,
    };

    // Part 4: generator norms of the rescaled GAP
    let mut lhs = 0.0f64;
    for g in &q.generators {
        let scaled: Vec<f64> = g.iter().map(|&c| c as f64 * inp.scale).collect();
        lhs = lhs.max(body.norm(&scaled)?);
    }
    let mut max_v_norm = 0.0f64;
    for v in system.vectors() {
        max_v_norm = max_v_norm.max(body.norm(v)?);
    }
    let part4_rhs = inp.constants.part4
        * c_k.powi(inp.k as i32 + 1)
        * (df * inp.alpha * inp.k as f64 / system.r() * max_v_norm + omega_inf);
    let part4 = Part4Record {
        lhs,
        rhs: part4_rhs,
        holds: lhs <= part4_rhs,
    };

    Ok(ApproximationVerification {
        part1,
        part2,
        part3,
        part4,
        constants: inp.constants.clone(),
    })
}

// ---------------------------------------------------------------------------
// the pipeline
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineBudgets {
    pub grid: u64,
    pub enumeration: u64,
    pub sumset: u64,
    pub volume_resolution: u32,
}

impl Default for PipelineBudgets {
    fn default() -> Self {
        PipelineBudgets {
            grid: 1 << 20,
            enumeration: 1 << 22,
            sumset: 1 << 20,
            volume_resolution: 2048,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineParams {
    pub a_exponent: f64,
    pub epsilon: f64,
    pub n_prime: usize,
    /// Grid resolution N (free parameter of the level-set stage).
    pub n_grid: u32,
    /// Rank cap for the GAP fitter.
    pub r_max: usize,
    /// Exact ρ or a certified lower bound; computed when absent.
    pub rho: Option<f64>,
    pub constants: ConstantsConfig,
    pub budgets: PipelineBudgets,
    /// Monte Carlo samples for the body constants.
    pub mc_samples: usize,
}

impl PipelineParams {
    pub fn new(a_exponent: f64, epsilon: f64, n_prime: usize) -> Self {
        PipelineParams {
            a_exponent,
            epsilon,
            n_prime,
            n_grid: 32,
            r_max: 3,
            rho: None,
            constants: ConstantsConfig::default(),
            budgets: PipelineBudgets::default(),
            mc_samples: 200_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSetSummary {
    pub m: u32,
    pub m_cap: u32,
    pub n_grid: u32,
    pub s_size: usize,
    pub size_required: f64,
    pub average_statistic: f64,
    pub found: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitSummary {
    pub n_good: usize,
    pub n_bad: usize,
    pub bad_indices: Vec<usize>,
    pub threshold: f64,
    pub markov_consistent: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundingSummary {
    pub f_size: usize,
    pub max_error: f64,
    pub error_bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitSummary {
    pub rank: usize,
    pub bounds: Vec<i64>,
    pub cardinality: u64,
    pub proper: bool,
    pub used_fallback: bool,
}

/// One structured document per pipeline run, one record per stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapPipelineReport {
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub r: f64,
    pub a_exponent: f64,
    pub epsilon: f64,
    pub n_prime: usize,
    pub rho: f64,
    pub rho_certificate: Certificate,
    pub rho_meets_level: bool,
    pub body_constants: BodyConstants,
    pub alpha: f64,
    pub cap_eta: f64,
    /// `D = 512dα`.
    pub d_big: f64,
    pub level_set: LevelSetSummary,
    pub split: SplitSummary,
    pub k_choice: KChoice,
    pub rounding: RoundingSummary,
    pub dual_volume: DualVolumeCheck,
    pub fit: FitSummary,
    pub gap_scale: f64,
    /// The rescaled GAP `Q = (R/(Dk))Q'`.
    pub gap: Gap,
    pub verification: ApproximationVerification,
    pub properness_convention: String,
    /// Existence claims that failed numerically (not crashes).
    pub findings: Vec<String>,
}

/// Run the whole chain. Budget exhaustion is an error; failed existence
/// claims are findings inside the report.
pub fn approximation_pipeline(
    system: &VectorSystem,
    model: &NoiseModel,
    params: &PipelineParams,
    seed: u64,
) -> Result<GapPipelineReport> {
    let d = system.dimension();
    if d > 2 {
        return Err(Error::invalid(
            "the grid stages of the pipeline are desk-scale only (d <= 2)",
        ));
    }
    let n = system.n();
    let mut findings: Vec<String> = Vec::new();

    // ρ: exact (or certified lower bound) unless supplied
    let (rho, rho_certificate) = match params.rho {
        Some(r) => {
            if !(crate::error::positive(r) && r <= 1.0) {
                return Err(Error::invalid("supplied rho must lie in (0,1]"));
            }
            (r, Certificate::LowerBound)
        }
        None => {
            let dist = atoms(system, model)?;
            let res = rho_exact(&dist, system.body(), system.r())?;
            (res.rho, res.certificate)
        }
    };
    let level = (n as f64).powf(-params.a_exponent);
    let rho_meets_level = rho >= level;
    if !rho_meets_level {
        findings.push(format!(
            "rho = {rho:.6} is below the working level n^-A = {level:.6}; structure claims are vacuous at this scale"
        ));
    }

    let body_constants = estimate_constants(system.body(), params.mc_samples, mc::derive_seed(seed, 10))?;
    let audit = anticoncentration_audit(model);
    let (alpha, cap_eta) = match (audit.alpha, audit.c_eta_min) {
        (Some(a), Some(c)) if audit.satisfied => (a, c),
        _ => {
            return Err(Error::invalid(
                "noise law fails the pair-spread condition; the pipeline needs alpha",
            ))
        }
    };
    let d_big = 512.0 * d as f64 * alpha;

    let level_set = level_set_search(
        system,
        model,
        alpha,
        params.a_exponent,
        params.n_grid,
        params.budgets.grid,
        body_constants.kappa,
        rho,
    )?;
    if !level_set.found {
        findings.push(format!(
            "no level m <= {} reached the required set size {:.3}; continuing with the best-effort set (|S| = {})",
            level_set.m_cap,
            level_set.size_required,
            level_set.points.len()
        ));
    }

    let rescaled = system.rescaled_vectors();
    let split = bad_vector_split(
        &rescaled,
        alpha,
        &level_set.points,
        level_set.m,
        params.n_prime,
    )?;
    if !split.markov_consistent {
        findings.push(
            split
                .markov_note
                .clone()
                .unwrap_or_else(|| "Markov consistency violated in the bad-vector split".into()),
        );
    }

    let k_choice = choose_k(
        params.n_prime,
        level_set.m,
        d,
        n,
        params.a_exponent,
        body_constants.kappa,
    )?;
    let k = k_choice.k;

    let rounding = round_to_lattice(&split.good, d_big, k)?;
    let mut f_points = rounding.f_points.clone();
    // 0 always participates: the sumset machinery runs over V' ∪ {0}
    if !f_points.iter().any(|z| z.iter().all(|&c| c == 0)) {
        f_points.push(vec![0; d]);
        f_points.sort();
    }

    let dual_volume = dual_volume_check(
        &split.good,
        k,
        alpha,
        body_constants.kappa,
        d,
        rho,
        params.budgets.volume_resolution,
        params.budgets.sumset,
    )?;
    if !dual_volume.holds {
        findings.push(format!(
            "dual volume bound failed: outer measure {:.6} > rhs {:.6}",
            dual_volume.lhs, dual_volume.rhs
        ));
    }

    let fitted: FittedGap = fit_gap(&f_points, d, params.r_max, params.budgets.enumeration)?;
    let gap_scale = system.r() / (d_big * k as f64);
    let gap = fitted.gap.to_gap(gap_scale);

    let verification = verify_approximation(&VerifyInputs {
        system,
        q: &fitted.gap,
        scale: gap_scale,
        a_exponent: params.a_exponent,
        epsilon: params.epsilon,
        n_prime: params.n_prime,
        k,
        alpha,
        d_big,
        rho,
        constants: &params.constants,
        enum_budget: params.budgets.enumeration,
    })?;

    Ok(GapPipelineReport {
        seed,
        n,
        d,
        r: system.r(),
        a_exponent: params.a_exponent,
        epsilon: params.epsilon,
        n_prime: params.n_prime,
        rho,
        rho_certificate,
        rho_meets_level,
        body_constants,
        alpha,
        cap_eta,
        d_big,
        level_set: LevelSetSummary {
            m: level_set.m,
            m_cap: level_set.m_cap,
            n_grid: level_set.n_grid,
            s_size: level_set.points.len(),
            size_required: level_set.size_required,
            average_statistic: level_set.average_statistic,
            found: level_set.found,
        },
        split: SplitSummary {
            n_good: split.good.len(),
            n_bad: split.bad.len(),
            bad_indices: split.bad_indices.clone(),
            threshold: split.threshold,
            markov_consistent: split.markov_consistent,
        },
        k_choice,
        rounding: RoundingSummary {
            f_size: rounding.f_points.len(),
            max_error: rounding.max_error,
            error_bound: rounding.error_bound,
        },
        dual_volume,
        fit: FitSummary {
            rank: fitted.gap.rank(),
            bounds: fitted.gap.bounds.clone(),
            cardinality: fitted.cardinality,
            proper: fitted.proper,
            used_fallback: fitted.used_fallback,
        },
        gap_scale,
        gap,
        verification,
        properness_convention: PROPERNESS_CONVENTION.to_string(),
        findings,
    })
}
