//! Levenberg–Marquardt for small dense problems.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LmReport {
    pub params: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    /// Gauss–Newton normal matrix JᵀJ at the solution.
    pub normal: Vec<Vec<f64>>,
}

/// Minimises ½‖r(p)‖² with a forward-difference Jacobian.
pub fn levenberg_marquardt<F>(residuals: F, start: &[f64], max_iter: usize) -> Result<LmReport>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let np = start.len();
    let mut p = start.to_vec();
    let mut r = residuals(&p);
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit(
            "residuals not finite at the starting point".into(),
        ));
    }
    let mut cost = half_sq(&r);
    let mut lambda = 1e-3;
    let mut jtj = vec![vec![0.0; np]; np];
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let jac = jacobian(&residuals, &p, &r);
        let mut jtr = vec![0.0; np];
        for a in 0..np {
            for b in 0..np {
                jtj[a][b] = (0..r.len()).map(|k| jac[k][a] * jac[k][b]).sum();
            }
            jtr[a] = (0..r.len()).map(|k| jac[k][a] * r[k]).sum();
        }
        let grad = jtr.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if grad < 1e-30 {
            break;
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut m = jtj.clone();
            for a in 0..np {
                m[a][a] += lambda * jtj[a][a].max(1e-300);
            }
            let neg: Vec<f64> = jtr.iter().map(|v| -v).collect();
            let Some(step) = solve_dense(m, neg) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(&step).map(|(a, b)| a + b).collect();
            let rt = residuals(&trial);
            let ct = half_sq(&rt);
            if ct.is_finite() && ct < cost {
                let rel = (cost - ct) / cost.max(1e-300);
                let step_small = step
                    .iter()
                    .zip(&p)
                    .all(|(s, x)| s.abs() <= 1e-14 * (x.abs() + 1e-14));
                p = trial;
                r = rt;
                cost = ct;
                lambda = (lambda * 0.3).max(1e-15);
                improved = true;
                if rel < 1e-15 || step_small {
                    return finish(&residuals, p, cost, iterations);
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    finish(&residuals, p, cost, iterations)
}

fn finish<F>(residuals: &F, p: Vec<f64>, cost: f64, iterations: usize) -> Result<LmReport>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let r = residuals(&p);
    let jac = jacobian(residuals, &p, &r);
    let np = p.len();
    let normal = (0..np)
        .map(|a| {
            (0..np)
                .map(|b| (0..r.len()).map(|k| jac[k][a] * jac[k][b]).sum())
                .collect()
        })
        .collect();
    Ok(LmReport {
        params: p,
        cost,
        iterations,
        normal,
    })
}

fn jacobian<F>(residuals: &F, p: &[f64], r0: &[f64]) -> Vec<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let np = p.len();
    let mut jac = vec![vec![0.0; np]; r0.len()];
    for a in 0..np {
        let h = 1e-7 * p[a].abs().max(1e-3);
        let mut pp = p.to_vec();
        pp[a] += h;
        let rp = residuals(&pp);
        pp[a] = p[a] - h;
        let rm = residuals(&pp);
        for k in 0..r0.len() {
            jac[k][a] = (rp[k] - rm[k]) / (2.0 * h);
        }
    }
    jac
}

fn half_sq(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 || !a[piv][col].is_finite() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let (upper, lower) = a.split_at_mut(row);
            for (x, p) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_exponential() {
        let t: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|t| 2.5 * (-1.3 * t).exp() + 0.2).collect();
        let rep = levenberg_marquardt(
            |p| {
                t.iter()
                    .zip(&y)
                    .map(|(t, y)| p[0] * (-p[1] * t).exp() + p[2] - y)
                    .collect()
            },
            &[1.0, 0.5, 0.0],
            200,
        )
        .unwrap();
        assert!((rep.params[0] - 2.5).abs() < 1e-8);
        assert!((rep.params[1] - 1.3).abs() < 1e-8);
        assert!((rep.params[2] - 0.2).abs() < 1e-8);
    }

    #[test]
    fn dense_solver() {
        let x = solve_dense(vec![vec![0.0, 2.0], vec![1.0, 1.0]], vec![4.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0]);
        assert!(solve_dense(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 1.0]).is_none());
    }
}
