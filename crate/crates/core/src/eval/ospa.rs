use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Order, cutoff and correctness fraction of the OSPA test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OspaParams {
    pub xi: f64,
    /// Cutoff in meters.
    pub eta: f64,
    pub kappa: f64,
}

impl Default for OspaParams {
    fn default() -> Self {
        Self { xi: 2.0, eta: 1000.0, kappa: 0.5 }
    }
}

impl OspaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.xi >= 1.0) || !(self.eta > 0.0) || !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(Error::config("ospa: need xi >= 1, eta > 0 and 0 < kappa < 1"));
        }
        Ok(())
    }
}

/// Minimum-cost assignment of every row to a distinct column (`rows ≤ cols`).
///
/// Returns the column of each row and the total cost.
pub fn hungarian(cost: &[Vec<f64>]) -> Result<(Vec<usize>, f64)> {
    let n = cost.len();
    if n == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let m = cost[0].len();
    if cost.iter().any(|r| r.len() != m) || n > m {
        return Err(Error::domain("hungarian: cost must be rectangular with rows <= cols"));
    }
    if cost.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::domain("hungarian: costs must be finite"));
    }
    // potentials u (rows), v (cols); p[j] = row matched to column j, 1-based with 0 as virtual
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=m {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    let total = assign.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    Ok((assign, total))
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// OSPA distance between two planar point sets.
///
/// The smaller set is assigned into the larger one; each pair costs
/// `min(η, d)^ξ` and each unassigned point `η^ξ`. One empty set gives `η`.
pub fn ospa(x: &[[f64; 2]], x_hat: &[[f64; 2]], p: &OspaParams) -> Result<f64> {
    if !(p.xi >= 1.0 && p.eta > 0.0) {
        return Err(Error::config("ospa: need xi >= 1 and eta > 0"));
    }
    let (small, large) = if x.len() <= x_hat.len() { (x, x_hat) } else { (x_hat, x) };
    match (small.len(), large.len()) {
        (0, 0) => return Ok(0.0),
        (0, _) => return Ok(p.eta),
        _ => {}
    }
    let cost: Vec<Vec<f64>> = small
        .iter()
        .map(|a| large.iter().map(|b| dist(*a, *b).min(p.eta).powf(p.xi)).collect())
        .collect();
    let (_, total) = hungarian(&cost)?;
    let n = large.len() as f64;
    let penalty = p.eta.powf(p.xi) * (large.len() - small.len()) as f64;
    Ok(((total + penalty) / n).powf(1.0 / p.xi))
}
