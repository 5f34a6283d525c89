//! Dense phase-one simplex for `A x = b, x >= 0` feasibility.

/// Row-major dense matrix.
#[derive(Debug, Clone)]
pub struct Dense {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] += v;
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// Sum of the artificial variables at the phase-one optimum.
    pub infeasibility: f64,
    /// Rows whose artificial variable stayed positive.
    pub violated_rows: Vec<usize>,
    pub pivots: usize,
}

const PIVOT_TOL: f64 = 1e-10;
const COST_TOL: f64 = 1e-10;
const DEGENERATE_RUN: usize = 64;

/// Decides whether `a x = b` has a solution with `x >= 0`. The system counts
/// as feasible when the residual left in the artificial variables is at most
/// `eps * max(1, |b|_1)`.
pub fn phase_one(a: &Dense, b: &[f64], eps: f64) -> Feasibility {
    let m = a.rows();
    let nv = a.cols();
    assert_eq!(b.len(), m, "rhs length must match row count");
    let w = nv + 1;
    let mut t = vec![0.0; m * w];
    for r in 0..m {
        let s = if b[r] < 0.0 { -1.0 } else { 1.0 };
        let src = a.row(r);
        let dst = &mut t[r * w..(r + 1) * w];
        for c in 0..nv {
            dst[c] = s * src[c];
        }
        dst[nv] = s * b[r];
    }
    // Basic variable per row: `None` while the row's artificial is basic.
    let mut basis: Vec<Option<usize>> = vec![None; m];
    let mut cost = vec![0.0; w];
    for r in 0..m {
        for c in 0..w {
            cost[c] -= t[r * w + c];
        }
    }
    let scale = b.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
    let max_pivots = 20 * (m + nv) + 1000;
    let mut pivots = 0;
    let mut degenerate = 0;

    loop {
        let bland = degenerate >= DEGENERATE_RUN;
        let mut enter = None;
        let mut best = -COST_TOL;
        for (c, &v) in cost.iter().enumerate().take(nv) {
            if v < best {
                enter = Some(c);
                if bland {
                    break;
                }
                best = v;
            }
        }
        let Some(e) = enter else { break };
        if pivots >= max_pivots {
            log::warn!("simplex pivot limit reached ({m} rows, {nv} columns)");
            break;
        }

        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            let col = t[r * w + e];
            if col > PIVOT_TOL {
                let ratio = t[r * w + nv] / col;
                let better = match leave {
                    None => true,
                    Some((lr, lratio)) => {
                        ratio < lratio - 1e-12
                            || (ratio <= lratio + 1e-12 && leave_key(basis[r], nv + r) < leave_key(basis[lr], nv + lr))
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        // Phase one is bounded below by zero, so a missing leaving row can
        // only come from round-off in the entering column.
        let Some((lr, ratio)) = leave else {
            cost[e] = 0.0;
            continue;
        };

        if ratio.abs() <= 1e-12 {
            degenerate += 1;
        } else {
            degenerate = 0;
        }
        pivot(&mut t, &mut cost, w, m, lr, e);
        basis[lr] = Some(e);
        pivots += 1;
    }

    let infeasibility = -cost[nv];
    let row_tol = eps * scale;
    let violated_rows: Vec<usize> = (0..m)
        .filter(|&r| basis[r].is_none() && t[r * w + nv] > row_tol)
        .collect();
    let feasible = infeasibility <= row_tol;
    Feasibility { feasible, infeasibility, violated_rows: if feasible { Vec::new() } else { violated_rows }, pivots }
}

// Artificial columns sort after structural ones for Bland tie-breaking.
fn leave_key(basic: Option<usize>, artificial: usize) -> usize {
    basic.unwrap_or(artificial)
}

fn pivot(t: &mut [f64], cost: &mut [f64], w: usize, m: usize, lr: usize, e: usize) {
    let p = t[lr * w + e];
    let inv = 1.0 / p;
    for c in 0..w {
        t[lr * w + c] *= inv;
    }
    t[lr * w + e] = 1.0;
    let (before, rest) = t.split_at_mut(lr * w);
    let (prow, after) = rest.split_at_mut(w);
    let eliminate = |row: &mut [f64]| {
        let f = row[e];
        if f != 0.0 {
            for (x, &pv) in row.iter_mut().zip(prow.iter()) {
                *x -= f * pv;
            }
            row[e] = 0.0;
        }
    };
    for row in before.chunks_mut(w) {
        eliminate(row);
    }
    for row in after.chunks_mut(w) {
        eliminate(row);
    }
    eliminate(cost);
    debug_assert_eq!(before.len() / w + 1 + after.len() / w, m);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense(rows: &[&[f64]]) -> Dense {
        let mut d = Dense::zeros(rows.len(), rows[0].len());
        for (r, row) in rows.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                d.set(r, c, v);
            }
        }
        d
    }

    #[test]
    fn simple_feasible() {
        // x + y = 2, x - y = 0 -> x = y = 1.
        let a = dense(&[&[1.0, 1.0], &[1.0, -1.0]]);
        assert!(phase_one(&a, &[2.0, 0.0], 1e-9).feasible);
    }

    #[test]
    fn sign_constraint_infeasible() {
        // x + y = -1 has no non-negative solution.
        let a = dense(&[&[1.0, 1.0]]);
        let f = phase_one(&a, &[-1.0], 1e-9);
        assert!(!f.feasible);
        assert_eq!(f.violated_rows, vec![0]);
        assert!((f.infeasibility - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inconsistent_rows() {
        let a = dense(&[&[1.0, 0.0], &[1.0, 0.0]]);
        let f = phase_one(&a, &[1.0, 2.0], 1e-9);
        assert!(!f.feasible);
        assert!((f.infeasibility - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_rhs_is_feasible() {
        let a = dense(&[&[1.0, -1.0, 2.0], &[0.0, 3.0, -1.0]]);
        assert!(phase_one(&a, &[0.0, 0.0], 1e-9).feasible);
    }

    proptest! {
        // A right-hand side built from a non-negative point is always feasible.
        #[test]
        fn constructed_points_are_feasible(
            m in 1usize..6,
            extra in 0usize..6,
            seed in prop::collection::vec(-3.0f64..3.0, 36 * 2),
            x in prop::collection::vec(0.0f64..2.0, 12),
        ) {
            let n = m + extra;
            let mut a = Dense::zeros(m, n);
            for r in 0..m {
                for c in 0..n {
                    a.set(r, c, seed[(r * n + c) % seed.len()]);
                }
            }
            let b: Vec<f64> = (0..m).map(|r| (0..n).map(|c| a.get(r, c) * x[c % x.len()]).sum()).collect();
            prop_assert!(phase_one(&a, &b, 1e-7).feasible);
        }

        // Rows whose coefficients are all positive cannot reach a negative rhs.
        #[test]
        fn positive_rows_reject_negative_rhs(m in 1usize..5, n in 1usize..6, v in prop::collection::vec(0.1f64..3.0, 30)) {
            let mut a = Dense::zeros(m, n);
            for r in 0..m {
                for c in 0..n {
                    a.set(r, c, v[(r * n + c) % v.len()]);
                }
            }
            let mut b = vec![1.0; m];
            b[m - 1] = -0.5;
            let f = phase_one(&a, &b, 1e-7);
            prop_assert!(!f.feasible);
        }
    }
}
