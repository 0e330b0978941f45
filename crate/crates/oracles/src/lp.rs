//! Dense two-phase simplex with Bland's rule, for the transport problem.

const EPS: f64 = 1e-12;

/// Minimizes `c·x` subject to `A x = b`, `x ≥ 0` (with `b ≥ 0`). Returns
/// the optimal objective, or `None` if infeasible.
pub fn minimize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<f64> {
    let m = a.len();
    let n = c.len();
    // Columns: n structural, m artificial, then the right-hand side.
    let width = n + m + 1;
    let mut t: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut row = vec![0.0; width];
            row[..n].copy_from_slice(&a[i]);
            row[n + i] = 1.0;
            row[width - 1] = b[i];
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..n + m).collect();

    let pivot = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, r: usize, col: usize| {
        let p = t[r][col];
        t[r].iter_mut().for_each(|x| *x /= p);
        for i in 0..t.len() {
            if i != r {
                let f = t[i][col];
                if f != 0.0 {
                    for j in 0..t[i].len() {
                        t[i][j] -= f * t[r][j];
                    }
                }
            }
        }
        basis[r] = col;
    };

    let run = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, cost: &[f64], allowed: usize| {
        loop {
            // Reduced costs c_j - c_B B^-1 A_j.
            let entering = (0..allowed).find(|&j| {
                if basis.contains(&j) {
                    return false;
                }
                let z: f64 = (0..t.len()).map(|i| cost[basis[i]] * t[i][j]).sum();
                cost[j] - z < -EPS
            });
            let Some(col) = entering else { return };
            let mut leave: Option<(f64, usize, usize)> = None;
            for i in 0..t.len() {
                if t[i][col] > EPS {
                    let ratio = t[i][width - 1] / t[i][col];
                    let better = match leave {
                        None => true,
                        Some((r, _, bvar)) => {
                            ratio < r - EPS || (ratio <= r + EPS && basis[i] < bvar)
                        }
                    };
                    if better {
                        leave = Some((ratio, i, basis[i]));
                    }
                }
            }
            let Some((_, row, _)) = leave else { return };
            pivot(t, basis, row, col);
        }
    };

    let mut phase1 = vec![0.0; n + m];
    phase1[n..].iter_mut().for_each(|x| *x = 1.0);
    run(&mut t, &mut basis, &phase1, n + m);
    let infeasibility: f64 = (0..m).filter(|&i| basis[i] >= n).map(|i| t[i][width - 1]).sum();
    if infeasibility > 1e-9 {
        return None;
    }
    // Drive zero-level artificials out where possible.
    for r in 0..m {
        if basis[r] >= n {
            if let Some(col) = (0..n).find(|&j| t[r][j].abs() > EPS && !basis.contains(&j)) {
                pivot(&mut t, &mut basis, r, col);
            }
        }
    }
    let mut phase2 = vec![0.0; n + m];
    phase2[..n].copy_from_slice(c);
    run(&mut t, &mut basis, &phase2, n);
    Some((0..m).map(|i| phase2[basis[i]] * t[i][width - 1]).sum())
}

/// Optimal transport cost between weight vectors `a` and `b` (equal total
/// mass) under `cost[i][j]`.
pub fn transport_cost(a: &[f64], b: &[f64], cost: &[Vec<f64>]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let var = |i: usize, j: usize| i * m + j;
    let c: Vec<f64> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| cost[i][j]).collect();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..n {
        let mut row = vec![0.0; n * m];
        (0..m).for_each(|j| row[var(i, j)] = 1.0);
        rows.push(row);
        rhs.push(a[i]);
    }
    // The last column constraint is implied by the others.
    for j in 0..m.saturating_sub(1) {
        let mut row = vec![0.0; n * m];
        (0..n).for_each(|i| row[var(i, j)] = 1.0);
        rows.push(row);
        rhs.push(b[j]);
    }
    minimize(&c, &rows, &rhs).expect("balanced transport problems are feasible")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_transport() {
        // Two sources, two sinks: optimal plan ships along the diagonal.
        let cost = vec![vec![1.0, 4.0], vec![3.0, 1.0]];
        let v = transport_cost(&[0.5, 0.5], &[0.5, 0.5], &cost);
        assert!((v - 1.0).abs() < 1e-12);
        let v = transport_cost(&[1.0], &[0.25, 0.75], &[vec![2.0, 4.0]]);
        assert!((v - 3.5).abs() < 1e-12);
    }

    #[test]
    fn small_lp() {
        // min -x - y  s.t. x + s1 = 1, y + s2 = 2.
        let v = minimize(&[-1.0, -1.0, 0.0, 0.0], &[vec![1.0, 0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0, 1.0]], &[1.0, 2.0]);
        assert!((v.unwrap() + 3.0).abs() < 1e-12);
    }
}
