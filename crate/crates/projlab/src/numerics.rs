//! Internal numerical utilities: compensated summation, small dense solves,
//! nonnegative least squares, and safeguarded scalar root finding.

use crate::error::{Error, Result};

/// Kahan compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Solve the (possibly under- or over-determined) system `A x = b` by
/// Gaussian elimination with partial pivoting, returning one particular
/// solution with free variables set to zero. Returns `None` if the system is
/// inconsistent at the pivot tolerance.
pub(crate) fn solve_consistent(a: &[Vec<f64>], b: &[f64], pivot_tol: f64) -> Option<Vec<f64>> {
    let rows = a.len();
    debug_assert_eq!(rows, b.len());
    if rows == 0 {
        return Some(Vec::new());
    }
    let cols = a[0].len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            debug_assert_eq!(row.len(), cols);
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();

    let scale = m
        .iter()
        .flat_map(|r| r[..cols].iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1.0);

    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut rank = 0usize;
    for col in 0..cols {
        // find the largest pivot in this column below the current rank row
        let (best_row, best_val) = (rank..rows)
            .map(|r| (r, m[r][col].abs()))
            .fold((rank, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_val <= pivot_tol * scale {
            continue;
        }
        m.swap(rank, best_row);
        let piv = m[rank][col];
        for r in 0..rows {
            if r == rank {
                continue;
            }
            let factor = m[r][col] / piv;
            if factor != 0.0 {
                for c in col..=cols {
                    let delta = factor * m[rank][c];
                    m[r][c] -= delta;
                }
                m[r][col] = 0.0;
            }
        }
        pivot_cols.push(col);
        rank += 1;
        if rank == rows {
            break;
        }
    }

    // rows below the rank must have (numerically) zero right-hand sides
    let rhs_scale = b.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(scale);
    for r in rank..rows {
        if m[r][cols].abs() > pivot_tol * rhs_scale * 1e3 {
            return None;
        }
    }

    let mut x = vec![0.0; cols];
    for (r, &col) in pivot_cols.iter().enumerate() {
        x[col] = m[r][cols] / m[r][col];
    }
    Some(x)
}

/// Nonnegative least squares: minimize `|| M mu - v ||` subject to `mu >= 0`,
/// where `M` is given by its columns. Lawson-Hanson active-set iteration;
/// problems here are tiny (a handful of columns).
pub(crate) fn nnls(columns: &[Vec<f64>], v: &[f64], pivot_tol: f64) -> Vec<f64> {
    let n = columns.len();
    let mut mu = vec![0.0f64; n];
    if n == 0 {
        return mu;
    }
    let m = v.len();
    let mut passive = vec![false; n];
    let residual = |mu: &[f64]| -> Vec<f64> {
        let mut r = v.to_vec();
        for (j, col) in columns.iter().enumerate() {
            if mu[j] != 0.0 {
                for i in 0..m {
                    r[i] -= mu[j] * col[i];
                }
            }
        }
        r
    };
    let scale = v.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);

    for _outer in 0..(4 * n + 8) {
        let r = residual(&mu);
        // gradient of the passive-set objective w.r.t. each inactive column
        let mut best = (None, pivot_tol * scale);
        for j in 0..n {
            if passive[j] {
                continue;
            }
            let g: f64 = columns[j].iter().zip(&r).map(|(a, b)| a * b).sum();
            if g > best.1 {
                best = (Some(j), g);
            }
        }
        let Some(enter) = best.0 else { break };
        passive[enter] = true;

        // inner loop: solve the unconstrained LS on the passive set, clip
        // negative coordinates back onto the boundary
        loop {
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let k = idx.len();
            let mut gram = vec![vec![0.0; k]; k];
            let mut rhs = vec![0.0; k];
            for (p, &jp) in idx.iter().enumerate() {
                rhs[p] = columns[jp].iter().zip(v).map(|(a, b)| a * b).sum();
                for (q, &jq) in idx.iter().enumerate() {
                    gram[p][q] = columns[jp]
                        .iter()
                        .zip(&columns[jq])
                        .map(|(a, b)| a * b)
                        .sum();
                }
            }
            let Some(z) = solve_consistent(&gram, &rhs, pivot_tol) else {
                // degenerate Gram system; keep the current feasible iterate
                return mu;
            };
            if z.iter().all(|&zi| zi > -pivot_tol * scale) {
                for (p, &j) in idx.iter().enumerate() {
                    mu[j] = z[p].max(0.0);
                }
                break;
            }
            // step towards z only as far as feasibility allows
            let mut alpha = 1.0f64;
            for (p, &j) in idx.iter().enumerate() {
                if z[p] < 0.0 {
                    let denom = mu[j] - z[p];
                    if denom > 0.0 {
                        alpha = alpha.min(mu[j] / denom);
                    }
                }
            }
            for (p, &j) in idx.iter().enumerate() {
                mu[j] += alpha * (z[p] - mu[j]);
                if mu[j] <= pivot_tol * scale {
                    mu[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    mu
}

/// Bisection for a sign change of `f` on `[lo, hi]`, to absolute width `xtol`.
/// Requires `f(lo) <= 0 <= f(hi)` (sign convention of the callers).
pub(crate) fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, xtol: f64) -> f64 {
    debug_assert!(lo <= hi);
    for _ in 0..200 {
        if hi - lo <= xtol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval at machine resolution
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Safeguarded Newton iteration for `g(y) = 0` on a bracket `[lo, hi]` with
/// `g(lo) <= 0 <= g(hi)`. Newton steps that leave the bracket fall back to
/// bisection. Terminates when the residual drops below `ytol` or the bracket
/// narrows below `xtol`.
pub(crate) fn newton_bisect(
    mut g: impl FnMut(f64) -> (f64, f64),
    mut lo: f64,
    mut hi: f64,
    start: f64,
    ytol: f64,
    xtol: f64,
) -> Result<f64> {
    let mut y = start.clamp(lo, hi);
    for _ in 0..120 {
        let (val, deriv) = g(y);
        if val.abs() <= ytol {
            return Ok(y);
        }
        if val > 0.0 {
            hi = y;
        } else {
            lo = y;
        }
        if hi - lo <= xtol {
            return Ok(0.5 * (lo + hi));
        }
        let newton = if deriv != 0.0 { y - val / deriv } else { f64::NAN };
        y = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::IterationBudget {
        op: "newton_bisect",
        iterations: 120,
        last: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_sums_many_tiny_terms() {
        let mut k = KahanSum::default();
        for _ in 0..1_000_000 {
            k.add(1e-10);
        }
        assert!((k.value() - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn solve_square_system() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve_consistent(&a, &[5.0, 10.0], 1e-12).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn solve_underdetermined_returns_particular_solution() {
        let a = vec![vec![1.0, 1.0, 0.0]];
        let x = solve_consistent(&a, &[2.0], 1e-12).unwrap();
        assert!((x[0] + x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn solve_detects_inconsistency() {
        let a = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        assert!(solve_consistent(&a, &[1.0, 2.0], 1e-12).is_none());
    }

    #[test]
    fn solve_dependent_consistent_rows() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        let x = solve_consistent(&a, &[3.0, 6.0], 1e-12).unwrap();
        assert!((x[0] + 2.0 * x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn nnls_clamps_negative_component() {
        // minimize ||mu1*(1,0) + mu2*(0,1) - (2,-3)|| over mu >= 0
        let cols = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let mu = nnls(&cols, &[2.0, -3.0], 1e-12);
        assert!((mu[0] - 2.0).abs() < 1e-10);
        assert_eq!(mu[1], 0.0);
    }

    #[test]
    fn nnls_exact_fit() {
        let cols = vec![vec![1.0, 1.0], vec![1.0, -1.0]];
        let mu = nnls(&cols, &[3.0, 1.0], 1e-12);
        assert!((mu[0] - 2.0).abs() < 1e-10);
        assert!((mu[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn newton_bisect_finds_cubic_root() {
        let y = newton_bisect(|y| (y * y * y - 2.0, 3.0 * y * y), 0.0, 2.0, 1.0, 1e-15, 1e-15)
            .unwrap();
        assert!((y - 2.0f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn bisect_matches_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14);
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-13);
    }
}
