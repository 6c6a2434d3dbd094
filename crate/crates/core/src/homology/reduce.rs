//! Sparse elimination of unit pivots from a pair of boundary matrices.
//!
//! Cancelling an entry `±1` of a boundary matrix splits off an acyclic
//! summand `(σ → τ)` without changing homology. The reduced matrices are
//! Schur complements; the recorded pivots let chains and cochains of the
//! reduced complex be lifted back to the original cells.

use crate::error::{Error, Result};
use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

/// Sparse integer matrix with both row and column access, for elimination.
#[derive(Clone, Debug, Default)]
pub struct Elim {
    pub rows: BTreeMap<usize, BTreeMap<usize, i64>>,
    pub cols: BTreeMap<usize, BTreeMap<usize, i64>>,
}

/// One cancelled pair with the data needed for lifting.
#[derive(Clone, Debug)]
pub struct Pivot {
    pub row: usize,
    pub col: usize,
    pub unit: i64,
    /// Row entries (other than the pivot) at cancellation time.
    pub row_entries: Vec<(usize, i64)>,
    /// Column entries (other than the pivot) at cancellation time.
    pub col_entries: Vec<(usize, i64)>,
}

impl Elim {
    pub fn from_triplets(trip: impl IntoIterator<Item = (usize, usize, i64)>) -> Self {
        let mut m = Elim::default();
        for (r, c, v) in trip {
            m.add(r, c, v).expect("initial entries are small");
        }
        m
    }

    fn add(&mut self, r: usize, c: usize, v: i64) -> Result<()> {
        if v == 0 {
            return Ok(());
        }
        let row = self.rows.entry(r).or_default();
        let e = row.entry(c).or_insert(0);
        *e = e.checked_add(v).ok_or(Error::OverflowDetected)?;
        let nv = *e;
        if nv == 0 {
            row.remove(&c);
            if row.is_empty() {
                self.rows.remove(&r);
            }
            let col = self.cols.get_mut(&c).expect("column mirrors row");
            col.remove(&r);
            if col.is_empty() {
                self.cols.remove(&c);
            }
        } else {
            self.cols.entry(c).or_default().insert(r, nv);
        }
        Ok(())
    }

    pub fn remove_row(&mut self, r: usize) {
        if let Some(row) = self.rows.remove(&r) {
            for c in row.keys() {
                let col = self.cols.get_mut(c).expect("mirror");
                col.remove(&r);
                if col.is_empty() {
                    self.cols.remove(c);
                }
            }
        }
    }

    pub fn remove_col(&mut self, c: usize) {
        if let Some(col) = self.cols.remove(&c) {
            for r in col.keys() {
                let row = self.rows.get_mut(r).expect("mirror");
                row.remove(&c);
                if row.is_empty() {
                    self.rows.remove(r);
                }
            }
        }
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.rows.get(&r).and_then(|row| row.get(&c)).copied().unwrap_or(0)
    }

    fn cost(&self, r: usize, c: usize) -> Option<usize> {
        let v = self.get(r, c);
        if v.abs() != 1 {
            return None;
        }
        Some((self.rows[&r].len() - 1) * (self.cols[&c].len() - 1))
    }

    /// Eliminates unit pivots in Markowitz order until none remain.
    pub fn reduce(&mut self) -> Result<Vec<Pivot>> {
        let mut heap: BinaryHeap<Reverse<(usize, usize, usize)>> = BinaryHeap::new();
        for (&r, row) in &self.rows {
            for (&c, &v) in row {
                if v.abs() == 1 {
                    heap.push(Reverse((self.cost(r, c).unwrap_or(0), r, c)));
                }
            }
        }
        let mut pivots = Vec::new();
        while let Some(Reverse((cost, r, c))) = heap.pop() {
            let Some(now) = self.cost(r, c) else { continue };
            if now != cost {
                heap.push(Reverse((now, r, c)));
                continue;
            }
            let unit = self.get(r, c);
            let row_entries: Vec<(usize, i64)> =
                self.rows[&r].iter().filter(|e| *e.0 != c).map(|(&k, &v)| (k, v)).collect();
            let col_entries: Vec<(usize, i64)> =
                self.cols[&c].iter().filter(|e| *e.0 != r).map(|(&k, &v)| (k, v)).collect();
            self.remove_row(r);
            self.remove_col(c);
            for &(x, cx) in &col_entries {
                for &(y, ay) in &row_entries {
                    // B[x,y] -= cx * ay / unit, unit = ±1
                    let delta = cx.checked_mul(ay).ok_or(Error::OverflowDetected)? * unit;
                    self.add(x, y, -delta)?;
                    // Only touched entries are re-queued; stale costs are fixed on pop.
                    if let Some(c) = self.cost(x, y) {
                        heap.push(Reverse((c, x, y)));
                    }
                }
            }
            pivots.push(Pivot { row: r, col: c, unit, row_entries, col_entries });
        }
        Ok(pivots)
    }
}
