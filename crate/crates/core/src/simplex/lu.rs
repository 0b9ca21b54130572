//! Sparse LU factorization of a simplex basis with product-form updates.
//!
//! Columns are eliminated left-looking with threshold partial pivoting;
//! between refactorizations each basis change appends an eta column.

use crate::scalar::LpFloat;

/// Sparse column, `(row, value)` pairs.
pub(crate) type SparseCol<F> = Vec<(usize, F)>;

#[derive(Debug, Clone)]
struct Eta<F> {
    pos: usize,
    pivot: F,
    entries: Vec<(usize, F)>,
}

#[derive(Debug, Clone)]
pub(crate) struct BasisFactor<F> {
    m: usize,
    /// Pivot row and basis position of each elimination step.
    piv_row: Vec<usize>,
    piv_pos: Vec<usize>,
    diag: Vec<F>,
    /// Steps with a non-empty L column, in elimination order.
    l_steps: Vec<usize>,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<F>,
    /// U column of step k: entries `(earlier step, value)`.
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<F>,
    etas: Vec<Eta<F>>,
}

/// Result of a factorization: basis positions whose column was numerically
/// dependent, each paired with the row whose logical replaced it.
pub(crate) struct Repairs {
    pub replaced: Vec<(usize, usize)>,
}

impl<F: LpFloat> BasisFactor<F> {
    /// Factorizes the basis whose position `p` holds `cols[p]`. Dependent
    /// columns are swapped for unit columns `-e_r` of unpivoted rows; the
    /// caller must update its basis heads from [`Repairs`].
    pub(crate) fn factorize(m: usize, cols: &[SparseCol<F>], pivot_tol: F) -> (Self, Repairs) {
        debug_assert_eq!(cols.len(), m);
        let mut f = BasisFactor {
            m,
            piv_row: Vec::with_capacity(m),
            piv_pos: Vec::with_capacity(m),
            diag: Vec::with_capacity(m),
            l_steps: Vec::new(),
            l_start: vec![0],
            l_idx: Vec::new(),
            l_val: Vec::new(),
            u_start: vec![0],
            u_idx: Vec::new(),
            u_val: Vec::new(),
            etas: Vec::new(),
        };
        let mut row_step = vec![usize::MAX; m];
        let mut row_count = vec![0usize; m];
        for c in cols {
            for &(i, _) in c {
                row_count[i] += 1;
            }
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| (cols[p].len() > 1, cols[p].len(), p));

        let mut w = vec![F::zero(); m];
        let mut touched = vec![false; m];
        let mut nz: Vec<usize> = Vec::new();
        let mut singular = Vec::new();
        let threshold = F::lit(0.01);

        for &p in &order {
            for &(i, v) in &cols[p] {
                if !touched[i] {
                    touched[i] = true;
                    nz.push(i);
                }
                w[i] = w[i] + v;
            }
            let fresh_singleton = cols[p].len() == 1 && row_step[cols[p][0].0] == usize::MAX;
            if !fresh_singleton {
                for (s, &k) in f.l_steps.iter().enumerate() {
                    let zr = w[f.piv_row[k]];
                    if zr == F::zero() {
                        continue;
                    }
                    for e in f.l_start[s]..f.l_start[s + 1] {
                        let i = f.l_idx[e];
                        if !touched[i] {
                            touched[i] = true;
                            nz.push(i);
                        }
                        w[i] = w[i] - f.l_val[e] * zr;
                    }
                }
            }
            let mut max = F::zero();
            for &i in &nz {
                if row_step[i] == usize::MAX {
                    max = max.max(w[i].abs());
                }
            }
            if max <= pivot_tol {
                singular.push(p);
                for &i in &nz {
                    w[i] = F::zero();
                    touched[i] = false;
                }
                nz.clear();
                continue;
            }
            let mut best: Option<usize> = None;
            for &i in &nz {
                if row_step[i] != usize::MAX || w[i].abs() < threshold * max {
                    continue;
                }
                best = match best {
                    None => Some(i),
                    Some(b) => {
                        let better = row_count[i] < row_count[b]
                            || (row_count[i] == row_count[b] && w[i].abs() > w[b].abs());
                        Some(if better { i } else { b })
                    }
                };
            }
            let r = best.unwrap();
            let step = f.piv_row.len();
            let pivot = w[r];
            for &i in &nz {
                let v = w[i];
                if v == F::zero() || i == r {
                    continue;
                }
                if row_step[i] != usize::MAX {
                    f.u_idx.push(row_step[i]);
                    f.u_val.push(v);
                } else {
                    f.l_idx.push(i);
                    f.l_val.push(v / pivot);
                }
            }
            f.u_start.push(f.u_idx.len());
            if f.l_idx.len() > *f.l_start.last().unwrap() {
                f.l_steps.push(step);
                f.l_start.push(f.l_idx.len());
            }
            f.piv_row.push(r);
            f.piv_pos.push(p);
            f.diag.push(pivot);
            row_step[r] = step;
            for &i in &nz {
                w[i] = F::zero();
                touched[i] = false;
            }
            nz.clear();
        }

        let mut replaced = Vec::new();
        if !singular.is_empty() {
            let free_rows: Vec<usize> = (0..m).filter(|&r| row_step[r] == usize::MAX).collect();
            debug_assert_eq!(free_rows.len(), singular.len());
            for (&p, &r) in singular.iter().zip(&free_rows) {
                let step = f.piv_row.len();
                f.u_start.push(f.u_idx.len());
                f.piv_row.push(r);
                f.piv_pos.push(p);
                f.diag.push(-F::one());
                row_step[r] = step;
                replaced.push((p, r));
            }
        }
        (f, Repairs { replaced })
    }

    pub(crate) fn eta_count(&self) -> usize {
        self.etas.len()
    }

    /// Solves `B x = rhs`; `rhs` is indexed by row and overwritten with the
    /// solution indexed by basis position.
    pub(crate) fn ftran(&self, rhs: &mut [F], scratch: &mut [F]) {
        for (s, &k) in self.l_steps.iter().enumerate() {
            let zr = rhs[self.piv_row[k]];
            if zr == F::zero() {
                continue;
            }
            for e in self.l_start[s]..self.l_start[s + 1] {
                let i = self.l_idx[e];
                rhs[i] = rhs[i] - self.l_val[e] * zr;
            }
        }
        for (k, &r) in self.piv_row.iter().enumerate() {
            scratch[k] = rhs[r];
        }
        for k in (0..self.m).rev() {
            let xk = scratch[k] / self.diag[k];
            scratch[k] = xk;
            if xk == F::zero() {
                continue;
            }
            for e in self.u_start[k]..self.u_start[k + 1] {
                let kk = self.u_idx[e];
                scratch[kk] = scratch[kk] - self.u_val[e] * xk;
            }
        }
        for (k, &p) in self.piv_pos.iter().enumerate() {
            rhs[p] = scratch[k];
        }
        for eta in &self.etas {
            let xp = rhs[eta.pos] / eta.pivot;
            rhs[eta.pos] = xp;
            if xp == F::zero() {
                continue;
            }
            for &(i, a) in &eta.entries {
                rhs[i] = rhs[i] - a * xp;
            }
        }
    }

    /// Solves `B' y = c`; `c` is indexed by basis position and overwritten
    /// with the solution indexed by row.
    pub(crate) fn btran(&self, c: &mut [F], scratch: &mut [F]) {
        for eta in self.etas.iter().rev() {
            let mut v = c[eta.pos];
            for &(i, a) in &eta.entries {
                v = v - a * c[i];
            }
            c[eta.pos] = v / eta.pivot;
        }
        for k in 0..self.m {
            let mut v = c[self.piv_pos[k]];
            for e in self.u_start[k]..self.u_start[k + 1] {
                v = v - self.u_val[e] * scratch[self.u_idx[e]];
            }
            scratch[k] = v / self.diag[k];
        }
        for (k, &r) in self.piv_row.iter().enumerate() {
            c[r] = scratch[k];
        }
        for (s, &k) in self.l_steps.iter().enumerate().rev() {
            let mut dot = F::zero();
            for e in self.l_start[s]..self.l_start[s + 1] {
                dot = dot + self.l_val[e] * c[self.l_idx[e]];
            }
            let r = self.piv_row[k];
            c[r] = c[r] - dot;
        }
    }

    /// Records the replacement of basis position `pos` by a column whose
    /// FTRAN image is `alpha`.
    pub(crate) fn push_eta(&mut self, pos: usize, alpha: &[F]) {
        let entries = alpha
            .iter()
            .enumerate()
            .filter(|&(i, a)| i != pos && *a != F::zero())
            .map(|(i, &a)| (i, a))
            .collect();
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            entries,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_mul(cols: &[SparseCol<f64>], x: &[f64], m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m];
        for (p, c) in cols.iter().enumerate() {
            for &(i, v) in c {
                out[i] += v * x[p];
            }
        }
        out
    }

    fn random_basis(rng: &mut ChaCha8Rng, m: usize) -> Vec<SparseCol<f64>> {
        (0..m)
            .map(|p| {
                if rng.gen_bool(0.4) {
                    vec![(p, -1.0)]
                } else {
                    let mut c: Vec<(usize, f64)> = Vec::new();
                    for i in 0..m {
                        if rng.gen_bool(0.3) {
                            c.push((i, rng.gen_range(-3.0..3.0)));
                        }
                    }
                    c.push(((p + 1) % m, 1.0 + rng.gen_range(0.0..1.0)));
                    c.sort_by_key(|e| e.0);
                    c.dedup_by_key(|e| e.0);
                    c
                }
            })
            .collect()
    }

    #[test]
    fn ftran_and_btran_solve_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let m = rng.gen_range(1..25);
            let mut cols = random_basis(&mut rng, m);
            let (f, rep) = BasisFactor::factorize(m, &cols, 1e-11);
            for &(p, r) in &rep.replaced {
                cols[p] = vec![(r, -1.0)];
            }
            let x: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut b = dense_mul(&cols, &x, m);
            let mut scratch = vec![0.0; m];
            f.ftran(&mut b, &mut scratch);
            for p in 0..m {
                assert!((b[p] - x[p]).abs() < 1e-8, "ftran mismatch");
            }
            // B' y = c  <=>  c_p = col_p . y
            let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut c: Vec<f64> = cols.iter().map(|col| col.iter().map(|&(i, v)| v * y[i]).sum()).collect();
            f.btran(&mut c, &mut scratch);
            for i in 0..m {
                assert!((c[i] - y[i]).abs() < 1e-8, "btran mismatch");
            }
        }
    }

    #[test]
    fn eta_updates_track_column_replacement() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = 12;
        let mut cols = random_basis(&mut rng, m);
        let (mut f, rep) = BasisFactor::factorize(m, &cols, 1e-11);
        for &(p, r) in &rep.replaced {
            cols[p] = vec![(r, -1.0)];
        }
        let mut scratch = vec![0.0; m];
        for step in 0..5 {
            let newcol: SparseCol<f64> = (0..m).map(|i| (i, rng.gen_range(-2.0..2.0))).collect();
            let mut alpha = vec![0.0; m];
            for &(i, v) in &newcol {
                alpha[i] = v;
            }
            f.ftran(&mut alpha, &mut scratch);
            let pos = (0..m).max_by(|&a, &b| alpha[a].abs().total_cmp(&alpha[b].abs())).unwrap();
            f.push_eta(pos, &alpha);
            cols[pos] = newcol;
            let x: Vec<f64> = (0..m).map(|i| (i + step) as f64 * 0.1).collect();
            let mut b = dense_mul(&cols, &x, m);
            f.ftran(&mut b, &mut scratch);
            for p in 0..m {
                assert!((b[p] - x[p]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn dependent_columns_are_replaced() {
        let cols = vec![vec![(0, 1.0), (1, 1.0)], vec![(0, 2.0), (1, 2.0)], vec![(2, -1.0)]];
        let (_, rep) = BasisFactor::<f64>::factorize(3, &cols, 1e-11);
        assert_eq!(rep.replaced.len(), 1);
    }
}
