//! Small least-squares helpers shared by the fitting code.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Ordinary least squares line `y ≈ c0 + c1 x`; returns (c0, c1, rms residual).
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::FitFailed(format!("need at least 2 paired samples, got {n}")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 || !sxx.is_finite() {
        return Err(Error::FitFailed("degenerate abscissae".into()));
    }
    let c1 = sxy / sxx;
    let c0 = my - c1 * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - c0 - c1 * x).powi(2)).sum();
    Ok((c0, c1, (rss / nf).sqrt()))
}

/// Solves `min |M c − b|` through an SVD.
pub fn least_squares(m: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = m.clone().svd(true, true);
    svd.solve(b, 1e-14)
        .map_err(|e| Error::FitFailed(e.to_string()))
}

/// Levenberg–Marquardt on a residual function with forward-difference Jacobian.
pub fn levenberg_marquardt<F>(mut params: Vec<f64>, residual: F, max_iter: usize) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let norm2 = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
    let mut r = residual(&params)?;
    let mut cost = norm2(&r);
    let mut lambda = 1e-3;
    for _ in 0..max_iter {
        let n = params.len();
        let m = r.len();
        let mut jac = DMatrix::zeros(m, n);
        for j in 0..n {
            let h = 1e-7 * params[j].abs().max(1.0);
            let mut pp = params.clone();
            pp[j] += h;
            let rp = residual(&pp)?;
            for i in 0..m {
                jac[(i, j)] = (rp[i] - r[i]) / h;
            }
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for d in 0..n {
                a[(d, d)] += lambda * (1.0 + jtj[(d, d)]);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
            if let Ok(rt) = residual(&trial) {
                let ct = norm2(&rt);
                if ct.is_finite() && ct < cost {
                    params = trial;
                    r = rt;
                    let rel = (cost - ct) / cost.max(1e-300);
                    cost = ct;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = true;
                    if rel < 1e-15 {
                        return Ok((params, (cost / m as f64).sqrt()));
                    }
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved || cost < 1e-30 {
            break;
        }
    }
    Ok((params, (cost / r.len().max(1) as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_is_exact_on_lines() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x).collect();
        let (c0, c1, res) = fit_line(&xs, &ys).unwrap();
        assert!((c0 - 3.0).abs() < 1e-12 && (c1 + 2.0).abs() < 1e-12 && res < 1e-12);
    }

    #[test]
    fn lm_recovers_a_rotation_angle() {
        let pts = [(1.0, 0.0), (0.0, 2.0), (-1.0, 0.5)];
        let ang = 0.7f64;
        let target: Vec<(f64, f64)> =
            pts.iter().map(|&(x, y)| (x * ang.cos() - y * ang.sin(), x * ang.sin() + y * ang.cos())).collect();
        let (p, res) = levenberg_marquardt(
            vec![0.0],
            |p| {
                Ok(pts
                    .iter()
                    .zip(&target)
                    .flat_map(|(&(x, y), &(tx, ty))| {
                        [x * p[0].cos() - y * p[0].sin() - tx, x * p[0].sin() + y * p[0].cos() - ty]
                    })
                    .collect())
            },
            50,
        )
        .unwrap();
        assert!((p[0] - ang).abs() < 1e-9 && res < 1e-9);
    }
}
