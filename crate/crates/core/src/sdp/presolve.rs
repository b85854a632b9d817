//! Removal of zero and linearly dependent constraint rows.

use super::{ConicProgram, Entry};

const ZERO_ROW: f64 = 1e-13;
// Squared residual (relative to unit-norm rows) below which a row is dependent.
const DEPENDENT: f64 = 1e-12;
const INCONSISTENT: f64 = 1e-8;

#[derive(Debug)]
pub(crate) struct Presolved {
    /// Indices of the rows handed to the solver, in original order.
    pub kept: Vec<usize>,
}

fn sparse_dot(a: &[Entry], b: &[Entry]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut acc = 0.0;
    while i < a.len() && j < b.len() {
        let ka = (a[i].block, a[i].row, a[i].col);
        let kb = (b[j].block, b[j].row, b[j].col);
        match ka.cmp(&kb) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += a[i].weight() * a[i].value * b[j].value;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// Greedy basis selection through an incremental Cholesky factor of the
/// Gram matrix of the normalized rows. Rows are canonical (sorted) already.
pub(crate) fn presolve(p: &ConicProgram) -> Result<Presolved, String> {
    let rows = p.constraints();
    let mut kept: Vec<usize> = Vec::new();
    let mut scale: Vec<f64> = Vec::new();
    // Lower-triangular factor, row-major, row k has k+1 entries.
    let mut l: Vec<Vec<f64>> = Vec::new();

    for (i, c) in rows.iter().enumerate() {
        let norm = c.map.norm();
        if norm < ZERO_ROW {
            if c.rhs.abs() > ZERO_ROW {
                return Err(format!(
                    "constraint {i} has zero coefficients but rhs {}",
                    c.rhs
                ));
            }
            continue;
        }
        let k: Vec<f64> = kept
            .iter()
            .zip(&scale)
            .map(|(&j, &s)| sparse_dot(c.map.entries(), rows[j].map.entries()) / (s * norm))
            .collect();
        // forward substitution l = L^{-1} k
        let mut lv = vec![0.0; k.len()];
        for r in 0..k.len() {
            let mut acc = k[r];
            for t in 0..r {
                acc -= l[r][t] * lv[t];
            }
            lv[r] = acc / l[r][r];
        }
        let resid = 1.0 - lv.iter().map(|v| v * v).sum::<f64>();
        if resid < DEPENDENT {
            // coefficients in the kept basis: L^T c = l
            let mut coef = lv.clone();
            for r in (0..coef.len()).rev() {
                let mut acc = coef[r];
                for t in r + 1..coef.len() {
                    acc -= l[t][r] * coef[t];
                }
                coef[r] = acc / l[r][r];
            }
            let predicted: f64 = coef
                .iter()
                .zip(&kept)
                .zip(&scale)
                .map(|((c, &j), s)| c * rows[j].rhs / s)
                .sum();
            let actual = c.rhs / norm;
            if (predicted - actual).abs() > INCONSISTENT * (1.0 + actual.abs()) {
                return Err(format!(
                    "constraint {i} is a combination of earlier rows with a different rhs"
                ));
            }
            continue;
        }
        lv.push(resid.sqrt());
        l.push(lv);
        kept.push(i);
        scale.push(norm);
    }
    Ok(Presolved { kept })
}
