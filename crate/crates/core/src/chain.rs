//! Chains (sparse integer coefficients) and cochains (dense values).

use crate::error::{Error, Result};
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::ops::{AddAssign, Mul};

/// A k-chain with integer coefficients, stored sparsely.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    pub degree: usize,
    pub cells: BTreeMap<usize, i64>,
}

impl Chain {
    pub fn zero(degree: usize) -> Self {
        Chain { degree, cells: BTreeMap::new() }
    }

    pub fn from_pairs(degree: usize, pairs: impl IntoIterator<Item = (usize, i64)>) -> Self {
        let mut c = Chain::zero(degree);
        for (id, v) in pairs {
            c.add(id, v);
        }
        c
    }

    pub fn add(&mut self, id: usize, coeff: i64) {
        let e = self.cells.entry(id).or_insert(0);
        *e += coeff;
        if *e == 0 {
            self.cells.remove(&id);
        }
    }

    pub fn add_chain(&mut self, other: &Chain, scale: i64) {
        for (&id, &v) in &other.cells {
            self.add(id, scale * v);
        }
    }

    pub fn scaled(&self, m: i64) -> Chain {
        let mut c = Chain::zero(self.degree);
        c.add_chain(self, m);
        c
    }

    pub fn is_zero(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, i64)> + '_ {
        self.cells.iter().map(|(&k, &v)| (k, v))
    }

    /// JSON chain record `{degree, cells: [(id, coeff)]}`.
    pub fn to_record(&self) -> serde_json::Value {
        serde_json::json!({
            "degree": self.degree,
            "cells": self.cells.iter().map(|(k, v)| (k, v)).collect::<Vec<_>>(),
        })
    }
}

/// Scalar types a cochain may carry.
pub trait Coeff: Clone + PartialEq + AddAssign + Mul<Output = Self> + Zero {
    fn from_i64(v: i64) -> Self;
    fn abs_value(&self) -> Self;
    /// Division by a positive count; truncating for integers.
    fn div_count(self, d: i64) -> Self;
}

impl Coeff for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn div_count(self, d: i64) -> Self {
        self / d as f64
    }
    fn abs_value(&self) -> Self {
        self.abs()
    }
}

impl Coeff for i64 {
    fn from_i64(v: i64) -> Self {
        v
    }
    fn div_count(self, d: i64) -> Self {
        self / d
    }
    fn abs_value(&self) -> Self {
        self.abs()
    }
}

impl Coeff for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(v.into())
    }
    fn div_count(self, d: i64) -> Self {
        self / BigRational::from_integer(d.into())
    }
    fn abs_value(&self) -> Self {
        self.abs()
    }
}

/// A k-cochain: one value per k-cell, read as the integral over that cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cochain<T = f64> {
    pub degree: usize,
    pub values: Vec<T>,
}

impl<T: Coeff> Cochain<T> {
    pub fn zeros(degree: usize, len: usize) -> Self {
        Cochain { degree, values: vec![T::zero(); len] }
    }

    pub fn new(degree: usize, values: Vec<T>) -> Self {
        Cochain { degree, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Σ_f σ(f)·ω(f)`.
    pub fn evaluate(&self, sigma: &Chain) -> Result<T> {
        if sigma.degree != self.degree {
            return Err(Error::DegreeMismatch { expected: self.degree, found: sigma.degree });
        }
        let mut acc = T::zero();
        for (id, c) in sigma.iter() {
            acc += T::from_i64(c) * self.values[id].clone();
        }
        Ok(acc)
    }

    pub fn map<U, F: Fn(&T) -> U>(&self, f: F) -> Cochain<U> {
        Cochain { degree: self.degree, values: self.values.iter().map(f).collect() }
    }
}

impl Cochain<f64> {
    pub fn axpy(&mut self, a: f64, x: &Cochain<f64>) {
        for (v, w) in self.values.iter_mut().zip(&x.values) {
            *v += a * w;
        }
    }

    pub fn scaled(&self, a: f64) -> Cochain<f64> {
        self.map(|v| a * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn l2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Evaluation pairing as a free function.
pub fn evaluate<T: Coeff>(omega: &Cochain<T>, sigma: &Chain) -> Result<T> {
    omega.evaluate(sigma)
}
