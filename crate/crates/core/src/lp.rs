//! Exact linear programming over the rationals.
//!
//! A dense two-phase simplex with Bland's anti-cycling rule, plus a
//! Fourier-Motzkin feasibility test for small dimensions. Both work on
//! [`Q`] so every answer is exact.

use num_traits::{One, Signed, Zero};

use crate::rational::{dot, QVector, Q};

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: Q, solution: QVector },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<QVector>,
    rhs: QVector,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize, objective: &mut QVector, obj_value: &mut Q) {
        let inv = self.rows[row][col].recip();
        for x in self.rows[row].iter_mut() {
            if !x.is_zero() {
                *x *= &inv;
            }
        }
        self.rhs[row] *= &inv;
        let pivot_row = self.rows[row].clone();
        let pivot_rhs = self.rhs[row].clone();
        for r in 0..self.rows.len() {
            if r == row || self.rows[r][col].is_zero() {
                continue;
            }
            let factor = self.rows[r][col].clone();
            for (x, p) in self.rows[r].iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x -= &factor * p;
                }
            }
            self.rhs[r] -= &factor * &pivot_rhs;
        }
        if !objective[col].is_zero() {
            let factor = objective[col].clone();
            for (x, p) in objective.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x -= &factor * p;
                }
            }
            *obj_value -= &factor * &pivot_rhs;
        }
        self.basis[row] = col;
    }

    /// Runs simplex iterations on `objective` (reduced costs) restricted to
    /// columns `< active_cols`. Returns false when unbounded.
    fn optimize(&mut self, objective: &mut QVector, obj_value: &mut Q, active_cols: usize) -> bool {
        loop {
            // Bland: smallest index with negative reduced cost enters.
            let Some(col) = (0..active_cols).find(|&j| objective[j].is_negative()) else {
                return true;
            };
            let mut best: Option<(usize, Q)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][col];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[r] / a;
                let better = match &best {
                    None => true,
                    Some((br, bq)) => {
                        ratio < *bq || (ratio == *bq && self.basis[r] < self.basis[*br])
                    }
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            let Some((row, _)) = best else {
                return false;
            };
            self.pivot(row, col, objective, obj_value);
        }
    }
}

/// Minimizes `c·x` subject to `A x = b`, `x ≥ 0`.
pub fn solve_standard(a: &[QVector], b: &[Q], c: &[Q]) -> LpOutcome {
    let m = a.len();
    let n = c.len();
    assert_eq!(b.len(), m, "rhs length mismatch");
    assert!(
        a.iter().all(|row| row.len() == n),
        "constraint width mismatch"
    );

    let total = n + m;
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for (i, (row, bi)) in a.iter().zip(b).enumerate() {
        let flip = bi.is_negative();
        let mut full: QVector = row
            .iter()
            .map(|x| if flip { -x.clone() } else { x.clone() })
            .collect();
        full.extend((0..m).map(|j| if j == i { Q::one() } else { Q::zero() }));
        rows.push(full);
        rhs.push(if flip { -bi.clone() } else { bi.clone() });
    }
    let mut tab = Tableau {
        rows,
        rhs,
        basis: (n..total).collect(),
    };

    // Phase one: minimize the sum of artificials.
    let mut phase1 = vec![Q::zero(); total];
    let mut phase1_value = Q::zero();
    for j in n..total {
        phase1[j] = Q::one();
    }
    for r in 0..m {
        for j in 0..total {
            if !tab.rows[r][j].is_zero() {
                phase1[j] -= &tab.rows[r][j];
            }
        }
        phase1_value -= &tab.rhs[r];
    }
    tab.optimize(&mut phase1, &mut phase1_value, total);
    if !phase1_value.is_zero() {
        // phase1_value holds minus the optimal artificial sum.
        return LpOutcome::Infeasible;
    }

    // Drive remaining artificials out of the basis, dropping redundant rows.
    let mut r = 0;
    while r < tab.rows.len() {
        if tab.basis[r] >= n {
            if let Some(col) = (0..n).find(|&j| !tab.rows[r][j].is_zero()) {
                let mut dummy = vec![Q::zero(); total];
                let mut dummy_value = Q::zero();
                tab.pivot(r, col, &mut dummy, &mut dummy_value);
            } else {
                tab.rows.remove(r);
                tab.rhs.remove(r);
                tab.basis.remove(r);
                continue;
            }
        }
        r += 1;
    }

    // Phase two on the original costs.
    let mut objective: QVector = c.iter().cloned().chain((0..m).map(|_| Q::zero())).collect();
    let mut value = Q::zero();
    for r in 0..tab.rows.len() {
        let bcol = tab.basis[r];
        if bcol < n && !objective[bcol].is_zero() {
            let factor = objective[bcol].clone();
            for j in 0..total {
                if !tab.rows[r][j].is_zero() {
                    let delta = &factor * &tab.rows[r][j];
                    objective[j] -= delta;
                }
            }
            value -= &factor * &tab.rhs[r];
        }
    }
    if !tab.optimize(&mut objective, &mut value, n) {
        return LpOutcome::Unbounded;
    }
    let mut solution = vec![Q::zero(); n];
    for (r, &bcol) in tab.basis.iter().enumerate() {
        if bcol < n {
            solution[bcol] = tab.rhs[r].clone();
        }
    }
    LpOutcome::Optimal {
        value: dot(c, &solution),
        solution,
    }
}

/// Value at `query` of the upper concave envelope of the lifted points
/// `(slopes[j], heights[j])`, i.e. `max Σλ_j h_j` over convex weights with
/// `Σλ_j s_j = query`. `None` when `query` lies outside the hull of the slopes.
pub fn upper_envelope_value(slopes: &[QVector], heights: &[Q], query: &[Q]) -> Option<Q> {
    let dim = query.len();
    let count = slopes.len();
    let mut a: Vec<QVector> = (0..dim)
        .map(|i| slopes.iter().map(|s| s[i].clone()).collect())
        .collect();
    a.push(vec![Q::one(); count]);
    let mut b: QVector = query.to_vec();
    b.push(Q::one());
    let c: QVector = heights.iter().map(|h| -h.clone()).collect();
    match solve_standard(&a, &b, &c) {
        LpOutcome::Optimal { value, .. } => Some(-value),
        LpOutcome::Infeasible => None,
        LpOutcome::Unbounded => unreachable!("bounded by the simplex constraint"),
    }
}

/// Whether `{x : ⟨normal_i, x⟩ ≤ offset_i}` is nonempty, by Fourier-Motzkin
/// elimination. Intended for dimensions up to three.
pub fn fourier_motzkin_feasible(normals: &[QVector], offsets: &[Q]) -> bool {
    let mut system: Vec<(QVector, Q)> = normals
        .iter()
        .cloned()
        .zip(offsets.iter().cloned())
        .collect();
    let dim = normals.first().map_or(0, Vec::len);
    for var in (0..dim).rev() {
        let mut upper = Vec::new();
        let mut lower = Vec::new();
        let mut rest = Vec::new();
        for (a, b) in system {
            if a[var].is_positive() {
                upper.push((a, b));
            } else if a[var].is_negative() {
                lower.push((a, b));
            } else {
                rest.push((a, b));
            }
        }
        for (au, bu) in &upper {
            for (al, bl) in &lower {
                let cu = au[var].clone();
                let cl = -al[var].clone();
                let a: QVector = au.iter().zip(al).map(|(x, y)| x * &cl + y * &cu).collect();
                let b = bu * &cl + bl * &cu;
                rest.push((a, b));
            }
        }
        system = rest;
    }
    system.iter().all(|(_, b)| !b.is_negative())
}
