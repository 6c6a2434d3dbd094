//! Dense Smith normal form over arbitrary-precision integers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

pub type Matrix = Vec<Vec<BigInt>>;

/// `U·A·V = S` with `S` diagonal, `d_i | d_{i+1}`, `d_i ≥ 0` and `U`, `V`
/// unimodular. The inverses are tracked alongside.
#[derive(Clone, Debug)]
pub struct Smith {
    pub u: Matrix,
    pub u_inv: Matrix,
    pub s: Matrix,
    pub v: Matrix,
    pub v_inv: Matrix,
}

impl Smith {
    /// Nonzero diagonal entries in order.
    pub fn invariants(&self) -> Vec<BigInt> {
        let r = self.s.len().min(self.s.first().map_or(0, |x| x.len()));
        (0..r).map(|i| self.s[i][i].clone()).filter(|d| !d.is_zero()).collect()
    }

    pub fn rank(&self) -> usize {
        self.invariants().len()
    }
}

pub fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect()
}

pub fn from_i64(a: &[Vec<i64>]) -> Matrix {
    a.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
}

pub fn mat_mul(a: &Matrix, b: &Matrix, inner: usize) -> Matrix {
    let cols = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    let mut acc = BigInt::zero();
                    for t in 0..inner {
                        if !row[t].is_zero() && !b[t][j].is_zero() {
                            acc += &row[t] * &b[t][j];
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

struct State {
    a: Matrix,
    u: Matrix,
    u_inv: Matrix,
    v: Matrix,
    v_inv: Matrix,
    rows: usize,
    cols: usize,
}

impl State {
    // row i += q * row j
    fn add_row(&mut self, i: usize, j: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for c in 0..self.cols {
            let t = &self.a[j][c] * q;
            self.a[i][c] += t;
        }
        for c in 0..self.rows {
            let t = &self.u[j][c] * q;
            self.u[i][c] += t;
        }
        for r in 0..self.rows {
            let t = &self.u_inv[r][i] * q;
            self.u_inv[r][j] -= t;
        }
    }

    // col i += q * col j
    fn add_col(&mut self, i: usize, j: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for r in 0..self.rows {
            let t = &self.a[r][j] * q;
            self.a[r][i] += t;
        }
        for r in 0..self.cols {
            let t = &self.v[r][j] * q;
            self.v[r][i] += t;
        }
        for c in 0..self.cols {
            let t = &self.v_inv[i][c] * q;
            self.v_inv[j][c] -= t;
        }
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        self.a.swap(i, j);
        self.u.swap(i, j);
        for r in 0..self.rows {
            self.u_inv[r].swap(i, j);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.rows {
            self.a[r].swap(i, j);
        }
        for r in 0..self.cols {
            self.v[r].swap(i, j);
        }
        self.v_inv.swap(i, j);
    }

    fn negate_row(&mut self, i: usize) {
        for x in self.a[i].iter_mut() {
            *x = -&*x;
        }
        for x in self.u[i].iter_mut() {
            *x = -&*x;
        }
        for r in 0..self.rows {
            self.u_inv[r][i] = -&self.u_inv[r][i];
        }
    }

    fn smallest_in(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize)> = None;
        for r in t..self.rows {
            for c in t..self.cols {
                if !self.a[r][c].is_zero()
                    && best.map_or(true, |(br, bc)| self.a[r][c].abs() < self.a[br][bc].abs())
                {
                    best = Some((r, c));
                }
            }
        }
        best
    }
}

/// Computes the Smith normal form of an integer matrix with `rows` rows and `cols` columns.
pub fn smith_normal_form(a: &Matrix, rows: usize, cols: usize) -> Smith {
    let mut st = State {
        a: a.clone(),
        u: identity(rows),
        u_inv: identity(rows),
        v: identity(cols),
        v_inv: identity(cols),
        rows,
        cols,
    };
    let mut t = 0;
    while t < rows.min(cols) {
        let Some((pr, pc)) = st.smallest_in(t) else { break };
        st.swap_rows(t, pr);
        st.swap_cols(t, pc);
        loop {
            let mut changed = false;
            for r in t + 1..rows {
                if !st.a[r][t].is_zero() {
                    let q = st.a[r][t].div_floor(&st.a[t][t]);
                    st.add_row(r, t, &-q);
                    if !st.a[r][t].is_zero() {
                        st.swap_rows(t, r);
                        changed = true;
                    }
                }
            }
            for c in t + 1..cols {
                if !st.a[t][c].is_zero() {
                    let q = st.a[t][c].div_floor(&st.a[t][t]);
                    st.add_col(c, t, &-q);
                    if !st.a[t][c].is_zero() {
                        st.swap_cols(t, c);
                        changed = true;
                    }
                }
            }
            if changed {
                continue;
            }
            // Row and column are clear; enforce divisibility of the rest.
            let pivot = st.a[t][t].clone();
            let bad = (t + 1..rows)
                .flat_map(|r| (t + 1..cols).map(move |c| (r, c)))
                .find(|&(r, c)| !(&st.a[r][c] % &pivot).is_zero());
            match bad {
                Some((r, _)) => st.add_row(t, r, &BigInt::one()),
                None => break,
            }
        }
        if st.a[t][t].is_negative() {
            st.negate_row(t);
        }
        t += 1;
    }
    Smith { u: st.u, u_inv: st.u_inv, s: st.a, v: st.v, v_inv: st.v_inv }
}
