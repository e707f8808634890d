use nalgebra::{Matrix3, Matrix4, Vector3};

use super::AnalysisError;
use crate::structure::Vec3;

const NEWTON_LIMIT: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperpositionResult {
    /// Proper rotation taking the centered mobile set onto the centered reference.
    pub rotation: [[f64; 3]; 3],
    /// nm
    pub rmsd: f64,
}

impl SuperpositionResult {
    pub fn apply(&self, v: Vec3) -> Vec3 {
        let r = &self.rotation;
        [0, 1, 2].map(|i| r[i][0] * v[0] + r[i][1] * v[1] + r[i][2] * v[2])
    }
}

pub(crate) fn weighted_centroid(points: &[Vec3], weights: &[f64]) -> Vec3 {
    let total: f64 = weights.iter().sum();
    let mut c = [0.0; 3];
    for (p, w) in points.iter().zip(weights) {
        for d in 0..3 {
            c[d] += w * p[d];
        }
    }
    c.map(|v| v / total)
}

fn centered(points: &[Vec3], weights: &[f64]) -> Vec<Vector3<f64>> {
    let c = weighted_centroid(points, weights);
    points.iter().map(|p| Vector3::new(p[0] - c[0], p[1] - c[1], p[2] - c[2])).collect()
}

/// Rejects inputs with fewer than three weighted points or with all points on a line.
fn check_geometry(points: &[Vector3<f64>], weights: &[f64]) -> Result<(), AnalysisError> {
    if weights.iter().filter(|w| **w > 0.0).count() < 3 {
        return Err(AnalysisError::DegenerateGeometry("fewer than 3 weighted points".into()));
    }
    let mut inertia = Matrix3::zeros();
    for (p, w) in points.iter().zip(weights) {
        inertia += *w * p * p.transpose();
    }
    let mut ev: Vec<f64> = inertia.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    if ev[0] <= 0.0 || ev[1] <= 1e-12 * ev[0] {
        return Err(AnalysisError::DegenerateGeometry("points are collinear".into()));
    }
    Ok(())
}

fn prepare(
    reference: &[Vec3],
    mobile: &[Vec3],
    weights: &[f64],
) -> Result<(Vec<Vector3<f64>>, Vec<Vector3<f64>>), AnalysisError> {
    if reference.len() != mobile.len() || weights.len() != reference.len() {
        return Err(AnalysisError::LengthMismatch {
            reference: reference.len(),
            mobile: mobile.len(),
            weights: weights.len(),
        });
    }
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(AnalysisError::InvalidWeights);
    }
    let r = centered(reference, weights);
    let m = centered(mobile, weights);
    check_geometry(&r, weights)?;
    check_geometry(&m, weights)?;
    Ok((r, m))
}

fn residual(r: &[Vector3<f64>], m: &[Vector3<f64>], weights: &[f64], rot: &Matrix3<f64>) -> f64 {
    let total: f64 = weights.iter().sum();
    let sum: f64 = r.iter().zip(m).zip(weights).map(|((r, m), w)| w * (rot * m - r).norm_squared()).sum();
    (sum / total).sqrt()
}

fn to_array(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    [0, 1, 2].map(|i| [0, 1, 2].map(|j| m[(i, j)]))
}

/// Weighted least-squares superposition by SVD of the cross-covariance.
///
/// Serves as the reference for [`qcp_rmsd`]; the sign correction keeps the
/// result a proper rotation.
pub fn kabsch_superpose(
    reference: &[Vec3],
    mobile: &[Vec3],
    weights: &[f64],
) -> Result<SuperpositionResult, AnalysisError> {
    let (r, m) = prepare(reference, mobile, weights)?;
    let mut h = Matrix3::zeros();
    for ((r, m), w) in r.iter().zip(&m).zip(weights) {
        h += *w * m * r.transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let d = (v_t.transpose() * u.transpose()).determinant().signum();
    let rot = v_t.transpose() * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose();
    Ok(SuperpositionResult { rotation: to_array(&rot), rmsd: residual(&r, &m, weights, &rot) })
}

/// Minimal RMSD by the quaternion characteristic polynomial.
///
/// The largest eigenvalue of the 4x4 key matrix comes from Newton iteration
/// on the quartic, started at the upper bound (Ga + Gb) / 2. The RMSD is then
/// measured on coordinates rotated by the matching quaternion: the closed form
/// sqrt(2 (E0 - lambda) / W) cancels catastrophically for near-identical sets.
pub fn qcp_rmsd(reference: &[Vec3], mobile: &[Vec3], weights: &[f64]) -> Result<f64, AnalysisError> {
    qcp_superpose(reference, mobile, weights).map(|s| s.rmsd)
}

pub fn qcp_superpose(
    reference: &[Vec3],
    mobile: &[Vec3],
    weights: &[f64],
) -> Result<SuperpositionResult, AnalysisError> {
    let (r, m) = prepare(reference, mobile, weights)?;
    let mut s = Matrix3::zeros();
    let mut e0 = 0.0;
    for ((r, m), w) in r.iter().zip(&m).zip(weights) {
        s += *w * m * r.transpose();
        e0 += w * (r.norm_squared() + m.norm_squared()) / 2.0;
    }
    let (sxx, sxy, sxz) = (s[(0, 0)], s[(0, 1)], s[(0, 2)]);
    let (syx, syy, syz) = (s[(1, 0)], s[(1, 1)], s[(1, 2)]);
    let (szx, szy, szz) = (s[(2, 0)], s[(2, 1)], s[(2, 2)]);
    #[rustfmt::skip]
    let key = Matrix4::new(
        sxx + syy + szz, syz - szy,        szx - sxz,        sxy - syx,
        syz - szy,       sxx - syy - szz,  sxy + syx,        szx + sxz,
        szx - sxz,       sxy + syx,        -sxx + syy - szz, syz + szy,
        sxy - syx,       szx + sxz,        syz + szy,        -sxx - syy + szz,
    );
    // The key matrix is traceless, so its characteristic polynomial is
    // x^4 + c2 x^2 + c1 x + c0 with coefficients from power traces.
    let k2 = key * key;
    let c2 = -k2.trace() / 2.0;
    let c1 = -(k2 * key).trace() / 3.0;
    let c0 = key.determinant();

    let mut lambda = e0;
    let mut converged = false;
    for _ in 0..NEWTON_LIMIT {
        let l2 = lambda * lambda;
        let p = (l2 + c2) * l2 + c1 * lambda + c0;
        let dp = 4.0 * l2 * lambda + 2.0 * c2 * lambda + c1;
        if dp == 0.0 {
            converged = p.abs() <= f64::EPSILON * e0.powi(4);
            break;
        }
        let step = p / dp;
        lambda -= step;
        if !lambda.is_finite() {
            break;
        }
        if step.abs() <= 1e-14 * e0.abs() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(AnalysisError::NoConvergence("QCP Newton iteration"));
    }

    let q = top_eigenvector(&key, lambda);
    let rot = quaternion_rotation(q);
    Ok(SuperpositionResult { rotation: to_array(&rot), rmsd: residual(&r, &m, weights, &rot) })
}

/// Eigenvector for `lambda`: the largest column of adj(K - lambda I), falling
/// back to a full decomposition when the eigenvalue is (nearly) repeated.
fn top_eigenvector(key: &Matrix4<f64>, lambda: f64) -> nalgebra::Vector4<f64> {
    let a = key - Matrix4::identity() * lambda;
    let mut best = nalgebra::Vector4::zeros();
    for j in 0..4 {
        let col = nalgebra::Vector4::from_fn(|i, _| cofactor(&a, j, i));
        if col.norm_squared() > best.norm_squared() {
            best = col;
        }
    }
    let scale = key.norm().max(f64::MIN_POSITIVE);
    if best.norm() > 1e-6 * scale.powi(3) {
        return best.normalize();
    }
    let eig = key.symmetric_eigen();
    let top = eig.eigenvalues.imax();
    eig.eigenvectors.column(top).into_owned()
}

fn cofactor(a: &Matrix4<f64>, row: usize, col: usize) -> f64 {
    let minor = Matrix3::from_fn(|i, j| a[(if i < row { i } else { i + 1 }, if j < col { j } else { j + 1 })]);
    let sign = if (row + col) % 2 == 0 { 1.0 } else { -1.0 };
    sign * minor.determinant()
}

fn quaternion_rotation(q: nalgebra::Vector4<f64>) -> Matrix3<f64> {
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    Matrix3::new(
        w * w + x * x - y * y - z * z,
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        w * w - x * x + y * y - z * z,
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        w * w - x * x - y * y + z * z,
    )
}

/// Moves `mobile` onto `reference`: centroid to centroid, then the optimal rotation.
pub(crate) fn align(reference: &[Vec3], mobile: &[Vec3], weights: &[f64]) -> Result<Vec<Vec3>, AnalysisError> {
    let fit = kabsch_superpose(reference, mobile, weights)?;
    let cr = weighted_centroid(reference, weights);
    let cm = weighted_centroid(mobile, weights);
    Ok(mobile
        .iter()
        .map(|p| {
            let v = fit.apply([p[0] - cm[0], p[1] - cm[1], p[2] - cm[2]]);
            [v[0] + cr[0], v[1] + cr[1], v[2] + cr[2]]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetra() -> Vec<Vec3> {
        vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.2, 0.0], [0.1, 0.3, 0.9], [0.5, 0.5, 0.5]]
    }

    #[test]
    fn identity_is_zero() {
        let a = tetra();
        let w = vec![1.0; a.len()];
        let k = kabsch_superpose(&a, &a, &w).unwrap();
        assert!(k.rmsd <= 1e-12);
        for i in 0..3 {
            for j in 0..3 {
                assert!((k.rotation[i][j] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        assert!(qcp_rmsd(&a, &a, &w).unwrap() <= 1e-12);
    }

    #[test]
    fn recovers_quarter_turn() {
        let a = tetra();
        let b: Vec<Vec3> = a.iter().map(|p| [-p[1], p[0], p[2]]).collect();
        let w = vec![1.0; a.len()];
        // Rotating b back onto a is a -90 degree turn about z.
        let k = kabsch_superpose(&a, &b, &w).unwrap();
        assert!(k.rmsd <= 1e-9);
        assert!((k.rotation[0][1] - 1.0).abs() < 1e-12 && (k.rotation[1][0] + 1.0).abs() < 1e-12);
        let q = qcp_superpose(&a, &b, &w).unwrap();
        assert!(q.rmsd <= 1e-9);
        assert!((q.rotation[0][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_points_are_degenerate() {
        let a = vec![[0.0; 3], [1.0, 0.0, 0.0]];
        assert!(matches!(kabsch_superpose(&a, &a, &[1.0, 1.0]), Err(AnalysisError::DegenerateGeometry(_))));
        let line: Vec<Vec3> = (0..5).map(|i| [i as f64, 2.0 * i as f64, 0.0]).collect();
        assert!(matches!(qcp_rmsd(&line, &line, &[1.0; 5]), Err(AnalysisError::DegenerateGeometry(_))));
    }

    #[test]
    fn reflection_is_not_used() {
        let a = tetra();
        let mirrored: Vec<Vec3> = a.iter().map(|p| [p[0], p[1], -p[2]]).collect();
        let w = vec![1.0; a.len()];
        let k = kabsch_superpose(&a, &mirrored, &w).unwrap();
        let det = Matrix3::from_fn(|i, j| k.rotation[i][j]).determinant();
        assert!((det - 1.0).abs() < 1e-10);
        assert!(k.rmsd > 0.01);
        assert!((qcp_rmsd(&a, &mirrored, &w).unwrap() - k.rmsd).abs() < 1e-10);
    }
}
