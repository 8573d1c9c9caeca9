//! Tiny dense linear algebra on `f64` slices. Dimensions here are desk
//! scale (d ≤ 8), so plain loops beat pulling in a matrix crate.

/// Dot product of two equal-length slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// Residual of `v` after projecting out an orthonormal family `basis`.
pub fn residual(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut r = v.to_vec();
    for e in basis {
        let c = dot(&r, e);
        for (ri, ei) in r.iter_mut().zip(e) {
            *ri -= c * ei;
        }
    }
    r
}

/// Modified Gram-Schmidt. Returns an orthonormal basis of the span of
/// `vs`; vectors whose residual falls below `tol` are dropped.
pub fn orthonormalize(vs: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vs {
        let r = residual(v, &basis);
        let n = norm2(&r);
        if n > tol {
            basis.push(scale(&r, 1.0 / n));
        }
    }
    basis
}

/// Distance from `v` to the span of `basis_vectors` (not necessarily
/// orthonormal).
pub fn dist_to_span(v: &[f64], basis_vectors: &[Vec<f64>]) -> f64 {
    let onb = orthonormalize(basis_vectors, 1e-12);
    norm2(&residual(v, &onb))
}

/// A unit vector orthogonal to the span of `vs` (assumed of dimension
/// `< d`). Picks the coordinate direction with the largest residual, so
/// the construction is well conditioned whenever a normal exists.
/// Returns `None` if every coordinate residual is negligible.
pub fn unit_normal_to_span(vs: &[Vec<f64>], d: usize) -> Option<Vec<f64>> {
    let onb = orthonormalize(vs, 1e-12);
    if onb.len() >= d {
        return None;
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for i in 0..d {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        let r = residual(&e, &onb);
        let n = norm2(&r);
        if best.as_ref().is_none_or(|(bn, _)| n > *bn) {
            best = Some((n, r));
        }
    }
    let (n, r) = best?;
    if n < 1e-9 {
        return None;
    }
    Some(scale(&r, 1.0 / n))
}

/// Eigendecomposition of a small symmetric matrix by cyclic Jacobi
/// rotations. Returns `(eigenvalues, eigenvectors)` sorted ascending;
/// eigenvectors are rows of the returned matrix.
#[allow(clippy::needless_range_loop)] // index form mirrors the rotations
pub fn sym_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i][j] * m[i][j];
            }
        }
        if off < 1e-28 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| m[i][i].partial_cmp(&m[j][j]).unwrap());
    let eigenvalues: Vec<f64> = idx.iter().map(|&i| m[i][i]).collect();
    let eigenvectors: Vec<Vec<f64>> = idx
        .iter()
        .map(|&c| (0..n).map(|r| v[r][c]).collect())
        .collect();
    (eigenvalues, eigenvectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_recovers_diagonal() {
        let a = vec![vec![3.0, 0.0], vec![0.0, 1.0]];
        let (vals, vecs) = sym_eigen(&a);
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        assert!(dot(&vecs[0], &vecs[0]) - 1.0 < 1e-12);
    }

    #[test]
    fn jacobi_2x2_known() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let a = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        let (vals, vecs) = sym_eigen(&a);
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        // eigenvector for 1 is (1,-1)/sqrt2 up to sign
        assert!((vecs[0][0] + vecs[0][1]).abs() < 1e-10);
    }

    #[test]
    fn normal_to_span_orthogonal() {
        let vs = vec![vec![1.0, 2.0, 0.5]];
        let n = unit_normal_to_span(&vs, 3).unwrap();
        assert!(dot(&n, &vs[0]).abs() < 1e-10);
        assert!((norm2(&n) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dist_to_span_simple() {
        let basis = vec![vec![1.0, 0.0]];
        assert!((dist_to_span(&[3.0, 4.0], &basis) - 4.0).abs() < 1e-12);
    }
}
