//! The concentration function `ρ_R^K(X) = sup_x P(X ∈ x + RK)` for
//! random sums `X = Σ η_j v_j` with finite-support coefficients.
//!
//! For finite noise the law of `X` is a finite atom distribution, and the
//! sup over translates is a max-depth-of-translates problem. Exact
//! kernels exist for intervals (d = 1), axis-aligned boxes, and the
//! Euclidean disk in d = 2; everything else gets a certified lower bound
//! from a candidate-center grid. Membership in `x + RK` is closed:
//! boundary ties count.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BodyKind, BodySpec, StarBody};
use crate::mc;
use crate::noise::NoiseModel;

/// Default cap on `|support(η)|^n` when enumerating the law of `X`.
pub const DEFAULT_ENUM_BUDGET: u64 = 1 << 24;

/// Relative slack in the closed membership test `‖p − x‖_K ≤ R`; absorbs
/// one-ulp noise when a candidate center is derived from the atoms it is
/// meant to cover.
const MEMBERSHIP_SLACK: f64 = 1e-12;

/// The data `(V, R, K)` defining `X_V = Σ η_j v_j` and the dilate `RK`.
#[derive(Debug, Clone)]
pub struct VectorSystem {
    vectors: Vec<Vec<f64>>,
    r: f64,
    body: StarBody,
}

impl VectorSystem {
    pub fn new(vectors: Vec<Vec<f64>>, r: f64, body: StarBody) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::EmptySet("vector system"));
        }
        if !crate::error::positive(r) {
            return Err(Error::invalid(format!("radius R must be positive, got {r}")));
        }
        let d = body.dimension();
        for v in &vectors {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: v.len(),
                });
            }
        }
        Ok(VectorSystem { vectors, r, body })
    }

    pub fn n(&self) -> usize {
        self.vectors.len()
    }

    pub fn dimension(&self) -> usize {
        self.body.dimension()
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn body(&self) -> &StarBody {
        &self.body
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// The rescaled system `V_R = {v_j / R}`.
    pub fn rescaled_vectors(&self) -> Vec<Vec<f64>> {
        self.vectors
            .iter()
            .map(|v| crate::linalg::scale(v, 1.0 / self.r))
            .collect()
    }
}

/// Parseable description of a system together with its noise law.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemSpec {
    pub vectors: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    pub r: f64,
    pub body: BodySpec,
    pub noise: NoiseModel,
}

impl SystemSpec {
    pub fn build(&self) -> Result<(VectorSystem, NoiseModel)> {
        let body = self.body.build()?;
        let system = VectorSystem::new(self.vectors.clone(), self.r, body)?;
        Ok((system, self.noise.clone()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// The exact finite law of `X_V`, stored flat (stride = dimension).
#[derive(Debug, Clone)]
pub struct AtomDistribution {
    d: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    merge_tolerance: f64,
}

impl AtomDistribution {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn merge_tolerance(&self) -> f64 {
        self.merge_tolerance
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.points.chunks_exact(self.d).zip(self.weights.iter().copied())
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Build directly from `(point, weight)` pairs (merging collisions).
    /// The weights must describe a probability law.
    pub fn from_atoms(d: usize, atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptySet("atom distribution"));
        }
        let total: f64 = atoms.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "atom weights sum to {total}, expected 1 within 1e-9"
            )));
        }
        let mut points = Vec::with_capacity(atoms.len() * d);
        let mut weights = Vec::with_capacity(atoms.len());
        for (p, w) in atoms {
            if p.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.len(),
                });
            }
            points.extend_from_slice(&p);
            weights.push(w);
        }
        let mut dist = AtomDistribution {
            d,
            points,
            weights,
            merge_tolerance: 1e-9,
        };
        dist.merge();
        Ok(dist)
    }

    /// Translate every atom by `shift`.
    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: shift.len(),
            });
        }
        let mut points = self.points.clone();
        for chunk in points.chunks_exact_mut(self.d) {
            for (c, s) in chunk.iter_mut().zip(shift) {
                *c += s;
            }
        }
        Ok(AtomDistribution {
            d: self.d,
            points,
            weights: self.weights.clone(),
            merge_tolerance: self.merge_tolerance,
        })
    }

    /// Scale every atom by `s` (the law of `sX`).
    pub fn scaled(&self, s: f64) -> Self {
        AtomDistribution {
            d: self.d,
            points: self.points.iter().map(|c| c * s).collect(),
            weights: self.weights.clone(),
            merge_tolerance: self.merge_tolerance,
        }
    }

    /// `P(X ∈ center + rK)` with closed membership.
    pub fn probability_in(&self, body: &StarBody, r: f64, center: &[f64]) -> Result<f64> {
        let cutoff = r * (1.0 + MEMBERSHIP_SLACK);
        let mut total = 0.0;
        for (p, w) in self.iter() {
            let diff = crate::linalg::sub(p, center);
            if body.norm(&diff)? <= cutoff {
                total += w;
            }
        }
        Ok(total)
    }

    /// Sort atoms lexicographically and merge runs that coincide within
    /// the tolerance in ℓ_∞. Distinct sign patterns of the same sum
    /// collide this way; merging keeps kernels honest about multiplicity.
    fn merge(&mut self) {
        let d = self.d;
        let m = self.weights.len();
        let mut idx: Vec<usize> = (0..m).collect();
        let pts = &self.points;
        idx.sort_by(|&a, &b| {
            let pa = &pts[a * d..(a + 1) * d];
            let pb = &pts[b * d..(b + 1) * d];
            pa.partial_cmp(pb).unwrap()
        });
        let tol = self.merge_tolerance;
        let mut new_points: Vec<f64> = Vec::with_capacity(self.points.len());
        let mut new_weights: Vec<f64> = Vec::new();
        for &i in &idx {
            let p = &pts[i * d..(i + 1) * d];
            let mergeable = !new_weights.is_empty() && {
                let last = &new_points[(new_weights.len() - 1) * d..];
                p.iter().zip(last).all(|(a, b)| (a - b).abs() <= tol)
            };
            if mergeable {
                *new_weights.last_mut().unwrap() += self.weights[i];
            } else {
                new_points.extend_from_slice(p);
                new_weights.push(self.weights[i]);
            }
        }
        self.points = new_points;
        self.weights = new_weights;
    }
}

/// Enumerate the law of `X_V` over all `|support|^n` coefficient
/// assignments, within the default budget.
pub fn atoms(system: &VectorSystem, model: &NoiseModel) -> Result<AtomDistribution> {
    atoms_with_budget(system, model, DEFAULT_ENUM_BUDGET)
}

pub fn atoms_with_budget(
    system: &VectorSystem,
    model: &NoiseModel,
    budget: u64,
) -> Result<AtomDistribution> {
    let support = model.atoms();
    let s = support.len() as u64;
    let n = system.n();
    let total = s.checked_pow(n as u32).filter(|&t| t <= budget);
    let Some(total) = total else {
        return Err(Error::budget(format!(
            "atom enumeration needs {s}^{n} assignments, budget is {budget}"
        )));
    };
    let d = system.dimension();
    let mut points: Vec<f64> = Vec::with_capacity(total as usize * d);
    let mut weights: Vec<f64> = Vec::with_capacity(total as usize);
    let mut digits = vec![0usize; n];
    loop {
        let mut point = vec![0.0f64; d];
        let mut weight = 1.0f64;
        for (j, &dig) in digits.iter().enumerate() {
            let (value, prob) = support[dig];
            weight *= prob;
            for (pc, vc) in point.iter_mut().zip(&system.vectors()[j]) {
                *pc += value * vc;
            }
        }
        points.extend_from_slice(&point);
        weights.push(weight);
        // odometer
        let mut pos = 0;
        loop {
            if pos == n {
                let mut dist = AtomDistribution {
                    d,
                    points,
                    weights,
                    merge_tolerance: 1e-9,
                };
                dist.merge();
                return Ok(dist);
            }
            digits[pos] += 1;
            if digits[pos] < support.len() {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    Exact,
    LowerBound,
}

/// Outcome of a concentration-function computation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmallBallResult {
    pub rho: f64,
    pub certificate: Certificate,
    #[serde(rename = "center")]
    pub witness_center: Vec<f64>,
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

/// `ρ_R^K` from the exact atom law. Dispatches to an exact kernel when
/// one applies, otherwise to the candidate-grid lower bound.
pub fn rho_exact(atoms: &AtomDistribution, body: &StarBody, r: f64) -> Result<SmallBallResult> {
    if atoms.is_empty() {
        return Err(Error::EmptySet("atoms"));
    }
    if atoms.dimension() != body.dimension() {
        return Err(Error::DimensionMismatch {
            expected: body.dimension(),
            got: atoms.dimension(),
        });
    }
    if !crate::error::positive(r) {
        return Err(Error::invalid("rho_exact needs R > 0"));
    }
    let d = body.dimension();
    let m = atoms.len();
    if d == 1 {
        return interval_kernel(atoms, body, r);
    }
    let box_like = matches!(body.kind(), BodyKind::Box { .. })
        || matches!(body.kind(), BodyKind::Lp { p } if p.is_infinite());
    if box_like {
        let widths = box_half_widths(body, r);
        if d == 2 && m * m <= 200_000_000 {
            return box_kernel_2d(atoms, body, r, &widths);
        }
        let unique: u64 = (0..d)
            .map(|axis| unique_coords(atoms, axis).len() as u64)
            .product();
        if unique.saturating_mul(m as u64) <= 50_000_000 {
            return box_kernel_grid(atoms, body, r, &widths);
        }
        return rho_lower_bound(atoms, body, r, 17);
    }
    let disk = d == 2 && matches!(body.kind(), BodyKind::Lp { p } if *p == 2.0);
    if disk && m <= 1024 {
        return disk_kernel(atoms, body, r);
    }
    rho_lower_bound(atoms, body, r, 17)
}

fn box_half_widths(body: &StarBody, r: f64) -> Vec<f64> {
    match body.kind() {
        BodyKind::Box { half_widths } => half_widths.iter().map(|h| h * r).collect(),
        _ => vec![r; body.dimension()],
    }
}

/// d = 1: every star body is an interval `[-a, b]`; slide a window of
/// length `R(a+b)` over the sorted atoms. The optimum is attained with
/// the left edge on an atom because membership is closed.
fn interval_kernel(atoms: &AtomDistribution, body: &StarBody, r: f64) -> Result<SmallBallResult> {
    let (a, b) = body.interval_bounds()?;
    let len = r * (a + b);
    let mut order: Vec<usize> = (0..atoms.len()).collect();
    order.sort_by(|&i, &j| atoms.point(i)[0].partial_cmp(&atoms.point(j)[0]).unwrap());
    let pos: Vec<f64> = order.iter().map(|&i| atoms.point(i)[0]).collect();
    let w: Vec<f64> = order.iter().map(|&i| atoms.weight(i)).collect();
    let mut prefix = vec![0.0f64; pos.len() + 1];
    for i in 0..pos.len() {
        prefix[i + 1] = prefix[i] + w[i];
    }
    let cutoff = len * (1.0 + MEMBERSHIP_SLACK);
    let mut best = (f64::NEG_INFINITY, 0usize);
    let mut j = 0usize;
    for i in 0..pos.len() {
        if j < i {
            j = i;
        }
        while j + 1 < pos.len() && pos[j + 1] - pos[i] <= cutoff {
            j += 1;
        }
        let mass = prefix[j + 1] - prefix[i];
        if mass > best.0 {
            best = (mass, i);
        }
    }
    let center = vec![pos[best.1] + r * a];
    let rho = atoms.probability_in(body, r, &center)?;
    Ok(SmallBallResult {
        rho,
        certificate: Certificate::Exact,
        witness_center: center,
        method: "interval_sliding_window".into(),
        std_error: None,
    })
}

fn unique_coords(atoms: &AtomDistribution, axis: usize) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..atoms.len()).map(|i| atoms.point(i)[axis]).collect();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    xs.dedup();
    xs
}

/// d = 2 boxes: sweep anchored x-strips, then a 1-d sliding window in y.
fn box_kernel_2d(
    atoms: &AtomDistribution,
    body: &StarBody,
    r: f64,
    widths: &[f64],
) -> Result<SmallBallResult> {
    let (wx, wy) = (widths[0], widths[1]);
    let xs = unique_coords(atoms, 0);
    let span_x = 2.0 * wx * (1.0 + MEMBERSHIP_SLACK);
    let span_y = 2.0 * wy * (1.0 + MEMBERSHIP_SLACK);
    let mut best = (f64::NEG_INFINITY, vec![0.0, 0.0]);
    for &u in &xs {
        let mut active: Vec<(f64, f64)> = (0..atoms.len())
            .filter(|&i| {
                let x = atoms.point(i)[0];
                x >= u && x - u <= span_x
            })
            .map(|i| (atoms.point(i)[1], atoms.weight(i)))
            .collect();
        active.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
        let mut prefix = vec![0.0f64; active.len() + 1];
        for i in 0..active.len() {
            prefix[i + 1] = prefix[i] + active[i].1;
        }
        let mut j = 0usize;
        for i in 0..active.len() {
            if j < i {
                j = i;
            }
            while j + 1 < active.len() && active[j + 1].0 - active[i].0 <= span_y {
                j += 1;
            }
            let mass = prefix[j + 1] - prefix[i];
            if mass > best.0 {
                best = (mass, vec![u + wx, active[i].0 + wy]);
            }
        }
    }
    // report the membership-rule recomputation at the witness, so the
    // stored rho and any later recount agree exactly
    let rho = atoms.probability_in(body, r, &best.1)?;
    Ok(SmallBallResult {
        rho,
        certificate: Certificate::Exact,
        witness_center: best.1,
        method: "box_sweep_2d".into(),
        std_error: None,
    })
}

/// General-d boxes: exhaust the grid of per-axis anchor coordinates.
fn box_kernel_grid(
    atoms: &AtomDistribution,
    body: &StarBody,
    r: f64,
    widths: &[f64],
) -> Result<SmallBallResult> {
    let d = widths.len();
    let axes: Vec<Vec<f64>> = (0..d).map(|axis| unique_coords(atoms, axis)).collect();
    let mut idx = vec![0usize; d];
    let mut best = (f64::NEG_INFINITY, vec![0.0; d]);
    loop {
        let center: Vec<f64> = (0..d).map(|i| axes[i][idx[i]] + widths[i]).collect();
        let mass = atoms.probability_in(body, r, &center)?;
        if mass > best.0 {
            best = (mass, center);
        }
        let mut pos = 0;
        loop {
            if pos == d {
                return Ok(SmallBallResult {
                    rho: best.0,
                    certificate: Certificate::Exact,
                    witness_center: best.1,
                    method: "box_anchor_grid".into(),
                    std_error: None,
                });
            }
            idx[pos] += 1;
            if idx[pos] < axes[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// d = 2 Euclidean disk of radius `R`: the optimal translate can be
/// assumed to have either one atom at its center-distance-0 or two atoms
/// on its boundary, so candidates are atoms plus the two circumcenters of
/// every pair within distance `2R`.
fn disk_kernel(atoms: &AtomDistribution, body: &StarBody, r: f64) -> Result<SmallBallResult> {
    let m = atoms.len();
    let eval = |center: &[f64]| -> f64 {
        let cutoff2 = (r * (1.0 + MEMBERSHIP_SLACK)).powi(2);
        let mut total = 0.0;
        for (p, w) in atoms.iter() {
            let dx = p[0] - center[0];
            let dy = p[1] - center[1];
            if dx * dx + dy * dy <= cutoff2 {
                total += w;
            }
        }
        total
    };
    let per_row: Vec<(f64, Vec<f64>)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let pi = atoms.point(i);
            let mut best = (eval(pi), pi.to_vec());
            for j in (i + 1)..m {
                let pj = atoms.point(j);
                let dx = pj[0] - pi[0];
                let dy = pj[1] - pi[1];
                let d2 = dx * dx + dy * dy;
                if d2 > 4.0 * r * r * (1.0 + MEMBERSHIP_SLACK) || d2 == 0.0 {
                    continue;
                }
                let h2 = (r * r - d2 / 4.0).max(0.0);
                let h = h2.sqrt();
                let dist = d2.sqrt();
                let (mx, my) = ((pi[0] + pj[0]) / 2.0, (pi[1] + pj[1]) / 2.0);
                let (ux, uy) = (-dy / dist, dx / dist);
                for sgn in [1.0, -1.0] {
                    let c = vec![mx + sgn * h * ux, my + sgn * h * uy];
                    let mass = eval(&c);
                    if mass > best.0 {
                        best = (mass, c);
                    }
                }
            }
            best
        })
        .collect();
    // index-ordered reduction: first row attaining the max wins
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for cand in per_row {
        if cand.0 > best.0 {
            best = cand;
        }
    }
    let rho = atoms.probability_in(body, r, &best.1)?;
    Ok(SmallBallResult {
        rho,
        certificate: Certificate::Exact,
        witness_center: best.1,
        method: "disk_circumcenter".into(),
        std_error: None,
    })
}

/// Certified lower bound: try every atom plus a refinement lattice over
/// the atoms' bounding box as candidate centers.
pub fn rho_lower_bound(
    atoms: &AtomDistribution,
    body: &StarBody,
    r: f64,
    lattice_per_axis: usize,
) -> Result<SmallBallResult> {
    if atoms.is_empty() {
        return Err(Error::EmptySet("atoms"));
    }
    let d = atoms.dimension();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for (p, _) in atoms.iter() {
        for i in 0..d {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    let mut candidates: Vec<Vec<f64>> = (0..atoms.len()).map(|i| atoms.point(i).to_vec()).collect();
    if lattice_per_axis >= 2 {
        let mut idx = vec![0usize; d];
        'outer: loop {
            let c: Vec<f64> = (0..d)
                .map(|i| lo[i] + (hi[i] - lo[i]) * idx[i] as f64 / (lattice_per_axis - 1) as f64)
                .collect();
            candidates.push(c);
            let mut pos = 0;
            loop {
                if pos == d {
                    break 'outer;
                }
                idx[pos] += 1;
                if idx[pos] < lattice_per_axis {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }
    let scored: Vec<Result<f64>> = candidates
        .par_iter()
        .map(|c| atoms.probability_in(body, r, c))
        .collect();
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (i, s) in scored.into_iter().enumerate() {
        let v = s?;
        if v > best.0 {
            best = (v, i);
        }
    }
    Ok(SmallBallResult {
        rho: best.0,
        certificate: Certificate::LowerBound,
        witness_center: candidates.swap_remove(best.1),
        method: "candidate_grid_lower_bound".into(),
        std_error: None,
    })
}

/// Monte Carlo lower bound over the supplied candidate centers: sample
/// coefficient assignments and count hits per center.
pub fn rho_mc(
    system: &VectorSystem,
    model: &NoiseModel,
    centers: &[Vec<f64>],
    samples: usize,
    seed: u64,
) -> Result<SmallBallResult> {
    if centers.is_empty() {
        return Err(Error::EmptySet("candidate centers"));
    }
    let d = system.dimension();
    for c in centers {
        if c.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: c.len(),
            });
        }
    }
    let body = system.body();
    let r = system.r();
    let cutoff = r * (1.0 + MEMBERSHIP_SLACK);
    let n_blocks = samples.div_ceil(mc::BLOCK);
    let hits: Vec<Vec<u64>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = mc::block_rng(seed, b as u64);
            let lo = b * mc::BLOCK;
            let hi = (lo + mc::BLOCK).min(samples);
            let mut counts = vec![0u64; centers.len()];
            for _ in lo..hi {
                let mut point = vec![0.0f64; d];
                for v in system.vectors() {
                    let eta = model.sample(&mut rng);
                    for (pc, vc) in point.iter_mut().zip(v) {
                        *pc += eta * vc;
                    }
                }
                for (ci, c) in centers.iter().enumerate() {
                    let diff = crate::linalg::sub(&point, c);
                    if body.norm(&diff).map(|n| n <= cutoff).unwrap_or(false) {
                        counts[ci] += 1;
                    }
                }
            }
            counts
        })
        .collect();
    let mut totals = vec![0u64; centers.len()];
    for block in &hits {
        for (t, h) in totals.iter_mut().zip(block) {
            *t += h;
        }
    }
    let (best_idx, &best_hits) = totals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("nonempty centers");
    let p = best_hits as f64 / samples as f64;
    Ok(SmallBallResult {
        rho: p,
        certificate: Certificate::LowerBound,
        witness_center: centers[best_idx].clone(),
        method: "monte_carlo_centers".into(),
        std_error: Some((p * (1.0 - p) / samples as f64).sqrt()),
    })
}

/// `S(n, m)`: the sum of the `m` largest binomial coefficients of order
/// `n`, in exact integer arithmetic.
#[derive(Debug, Clone)]
pub struct BinomialSum {
    pub sum: BigUint,
    pub value: f64,
}

pub fn binomial_sum_s(n: usize, m: usize) -> Result<BinomialSum> {
    if m < 1 || m > n + 1 {
        return Err(Error::invalid(format!(
            "binomial_sum_s needs 1 <= m <= n+1, got n={n}, m={m}"
        )));
    }
    let mut row: Vec<BigUint> = vec![BigUint::from(1u32)];
    for k in 1..=n {
        let prev = row[k - 1].clone();
        row.push(prev * (n - k + 1) / k);
    }
    // Binomial coefficients are unimodal: the m largest are consecutive
    // around the center. Sorting the whole row keeps this independent of
    // that fact.
    row.sort();
    let sum: BigUint = row.iter().rev().take(m).sum();
    let value = sum.to_f64().unwrap_or(f64::INFINITY);
    Ok(BinomialSum { sum, value })
}

/// Canonical forward-problem audit: the all-ones system in d = 1 against
/// `2^{-n} S(n, ⌊R⌋+1)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SharpLoReport {
    pub n: usize,
    pub r: f64,
    pub rho_canonical: f64,
    pub bound: f64,
    pub ratio: f64,
}

pub fn sharp_lo_report(n: usize, r: f64) -> Result<SharpLoReport> {
    if n == 0 || n > 24 {
        return Err(Error::invalid(format!(
            "sharp_lo_report enumerates exactly; needs 1 <= n <= 24, got {n}"
        )));
    }
    if !crate::error::positive(r) {
        return Err(Error::invalid("sharp_lo_report needs R > 0"));
    }
    let body = StarBody::scaled_box(vec![1.0])?;
    let system = VectorSystem::new(vec![vec![1.0]; n], r, body)?;
    let dist = atoms(&system, &NoiseModel::bernoulli())?;
    let rho = rho_exact(&dist, system.body(), r)?.rho;
    let m = (r.floor() as usize + 1).min(n + 1);
    let s = binomial_sum_s(n, m)?;
    let bound = s.value / 2f64.powi(n as i32);
    Ok(SharpLoReport {
        n,
        r,
        rho_canonical: rho,
        bound,
        ratio: rho / bound,
    })
}
