use super::series::superpose_to_mean;
use super::{selected_frames, AnalysisError};
use crate::structure::Vec3;
use crate::traj::{Selection, Trajectory};

/// Largest covariance dimension (3 x selected atoms) accepted by [`pca`].
pub const MAX_PCA_DIMENSION: usize = 3000;

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    /// nm^2, descending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal rows of length 3K, ordered like `eigenvalues`.
    pub eigenvectors: Vec<Vec<f64>>,
    /// frames x components, nm.
    pub projections: Vec<Vec<f64>>,
    pub mean_structure: Vec<Vec3>,
    /// Frame times in ps, for labelling projections.
    pub times: Vec<f64>,
    pub covariance_trace: f64,
}

impl PcaResult {
    /// Fraction of the total variance carried by each component.
    pub fn explained(&self) -> Vec<f64> {
        let total: f64 = self.eigenvalues.iter().sum();
        self.eigenvalues.iter().map(|v| if total > 0.0 { v / total } else { 0.0 }).collect()
    }
}

/// Principal components of the Cartesian coordinates of `selection`.
///
/// The covariance divisor is the frame count. With `superpose`, frames are
/// first fitted to their mean structure so rigid-body motion drops out.
pub fn pca(trajectory: &Trajectory, selection: &Selection, superpose: bool) -> Result<PcaResult, AnalysisError> {
    let dimension = 3 * selection.len();
    if dimension > MAX_PCA_DIMENSION {
        return Err(AnalysisError::SelectionTooLarge { dimension, max: MAX_PCA_DIMENSION });
    }
    if trajectory.len() < 2 {
        return Err(AnalysisError::TooFewFrames { needed: 2, found: trajectory.len() });
    }
    let mut frames = selected_frames(trajectory, selection)?;
    if superpose {
        frames = superpose_to_mean(&frames, &vec![1.0; selection.len()])?.0;
    }
    let n = dimension;
    let f = frames.len() as f64;
    let flat: Vec<Vec<f64>> = frames.iter().map(|fr| fr.iter().flatten().copied().collect()).collect();
    let mut mean = vec![0.0; n];
    for row in &flat {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= f);
    let centered: Vec<Vec<f64>> = flat.iter().map(|row| row.iter().zip(&mean).map(|(v, m)| v - m).collect()).collect();

    let mut cov = vec![0.0; n * n];
    for row in &centered {
        for i in 0..n {
            let xi = row[i];
            if xi == 0.0 {
                continue;
            }
            let out = &mut cov[i * n..(i + 1) * n];
            for j in i..n {
                out[j] += xi * row[j];
            }
        }
    }
    for i in 0..n {
        for j in i..n {
            let v = cov[i * n + j] / f;
            cov[i * n + j] = v;
            cov[j * n + i] = v;
        }
    }
    let covariance_trace: f64 = (0..n).map(|i| cov[i * n + i]).sum();

    let (values, vectors) = jacobi_eigen(cov, n)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| if values[i] < 0.0 && values[i] >= -1e-10 * scale.max(1.0) { 0.0 } else { values[i] }).collect();
    let eigenvectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| {
            let mut v = vectors[i * n..(i + 1) * n].to_vec();
            // Sign convention: the largest-magnitude component is positive.
            let lead = v.iter().fold(0.0f64, |best, x| if x.abs() > best.abs() { *x } else { best });
            if lead < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();
    let projections = centered
        .iter()
        .map(|row| eigenvectors.iter().map(|v| v.iter().zip(row).map(|(a, b)| a * b).sum()).collect())
        .collect();
    let mean_structure = mean.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
    Ok(PcaResult {
        eigenvalues,
        eigenvectors,
        projections,
        mean_structure,
        times: trajectory.frames.iter().map(|f| f.time).collect(),
        covariance_trace,
    })
}

/// Cyclic Jacobi for a dense symmetric `n x n` matrix (row-major).
///
/// Sweeps until the off-diagonal Frobenius norm is below 1e-12 of the full
/// norm. Returns the eigenvalues and the eigenvectors as rows.
pub(crate) fn jacobi_eigen(mut a: Vec<f64>, n: usize) -> Result<(Vec<f64>, Vec<f64>), AnalysisError> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };
    let negligible = 1e-15 * norm / n.max(1) as f64;
    let mut sweeps = 0;
    while off(&a) > 1e-12 * norm {
        if sweeps == MAX_SWEEPS {
            return Err(AnalysisError::NoConvergence("Jacobi eigensolver"));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= negligible {
                    continue;
                }
                let (app, aqq) = (a[p * n + p], a[q * n + q]);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate_rows(&mut a, n, p, q, c, s);
                for k in 0..n {
                    a[k * n + p] = a[p * n + k];
                    a[k * n + q] = a[q * n + k];
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                rotate_rows(&mut v, n, p, q, c, s);
            }
        }
    }
    Ok(((0..n).map(|i| a[i * n + i]).collect(), v))
}

/// Rows p and q become c*p - s*q and s*p + c*q.
fn rotate_rows(m: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = m.split_at_mut(q * n);
    let rp = &mut head[p * n..(p + 1) * n];
    let rq = &mut tail[..n];
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let (g, h) = (*x, *y);
        *x = c * g - s * h;
        *y = s * g + c * h;
    }
}
