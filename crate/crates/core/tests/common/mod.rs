//! Straightforward transcriptions of the estimators and statistics, written with
//! nested vectors and no shared code with the library. Used as oracles.
#![allow(dead_code)]

use sstest::DataMatrix;

pub type Rows = Vec<Vec<f64>>;

pub fn rows_of(x: &DataMatrix) -> Rows {
    x.rows().map(|r| r.to_vec()).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn sign(v: &[f64]) -> Vec<f64> {
    let r = norm(v);
    v.iter().map(|a| a / r).collect()
}

/// Joint location / diagonal scale fixed point, iterated until nothing moves.
pub fn hr(rows: &Rows) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let p = rows[0].len();
    let mut theta: Vec<f64> = (0..p).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let mut d: Vec<f64> = (0..p)
        .map(|j| rows.iter().map(|r| (r[j] - theta[j]).powi(2)).sum::<f64>() / (n - 1.0))
        .collect();
    for _ in 0..10_000 {
        let eps: Rows = rows
            .iter()
            .map(|r| (0..p).map(|j| (r[j] - theta[j]) / d[j].sqrt()).collect())
            .collect();
        let u: Rows = eps.iter().map(|e| sign(e)).collect();
        let inv_r: f64 = eps.iter().map(|e| 1.0 / norm(e)).sum();
        let mut moved = 0.0f64;
        for j in 0..p {
            let su: f64 = u.iter().map(|v| v[j]).sum();
            let su2: f64 = u.iter().map(|v| v[j] * v[j]).sum();
            let step = d[j].sqrt() * su / inv_r;
            theta[j] += step;
            let ratio = p as f64 * su2 / n;
            d[j] *= ratio;
            moved = moved.max(step.abs() / d[j].sqrt()).max((ratio - 1.0).abs());
        }
        if moved < 1e-14 {
            break;
        }
    }
    (theta, d)
}

/// Mean over rows of the inverse standardized radius.
pub fn zeta1(rows: &Rows, theta: &[f64], d: &[f64]) -> f64 {
    let n = rows.len() as f64;
    rows.iter()
        .map(|r| {
            let e: Vec<f64> = r.iter().zip(theta).zip(d).map(|((x, t), s)| (x - t) / s.sqrt()).collect();
            1.0 / norm(&e)
        })
        .sum::<f64>()
        / n
}

pub fn t_max(rows: &Rows) -> f64 {
    let (theta, d) = hr(rows);
    let n = rows.len() as f64;
    let p = theta.len() as f64;
    let z = zeta1(rows, &theta, &d);
    let m = theta.iter().zip(&d).map(|(t, s)| t * t / s).fold(0.0, f64::max);
    n * m * z * z * p * (1.0 - 1.0 / n.sqrt())
}

/// (T_SUM, tr(R^2) estimate) with every pair's estimate refitted without that pair.
pub fn t_sum(rows: &Rows) -> (f64, f64) {
    let n = rows.len();
    let p = rows[0].len() as f64;
    let mut cross = 0.0;
    let mut sq = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let rest: Rows = (0..n).filter(|k| *k != i && *k != j).map(|k| rows[k].clone()).collect();
            let (theta, d) = hr(&rest);
            let scaled = |r: &Vec<f64>, c: bool| -> Vec<f64> {
                (0..r.len())
                    .map(|k| (r[k] - if c { theta[k] } else { 0.0 }) / d[k].sqrt())
                    .collect()
            };
            let a: f64 = sign(&scaled(&rows[i], false))
                .iter()
                .zip(sign(&scaled(&rows[j], false)))
                .map(|(x, y)| x * y)
                .sum();
            let b: f64 = sign(&scaled(&rows[i], true))
                .iter()
                .zip(sign(&scaled(&rows[j], true)))
                .map(|(x, y)| x * y)
                .sum();
            cross += a;
            sq += b * b;
        }
    }
    let nn = (n * (n - 1)) as f64;
    (cross / nn, p * p * sq / nn)
}
