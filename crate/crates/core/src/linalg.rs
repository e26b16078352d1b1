//! Exact linear algebra over the integers and prime fields.
//!
//! Everything downstream reduces to `solve`, `kernel_basis` and the Smith
//! form implemented here. Integer entries are arbitrary precision; field
//! entries are stored as their least nonnegative residue.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("ring mismatch")]
    RingMismatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum Ring {
    Integers,
    PrimeField(u64),
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut i = 2u64;
    while i * i <= p {
        if p.is_multiple_of(i) {
            return false;
        }
        i += 1;
    }
    true
}

impl Ring {
    pub fn prime_field(p: u64) -> Result<Ring, LinalgError> {
        if is_prime(p) {
            Ok(Ring::PrimeField(p))
        } else {
            Err(LinalgError::NotPrime(p))
        }
    }

    pub fn characteristic(&self) -> u64 {
        match self {
            Ring::Integers => 0,
            Ring::PrimeField(p) => *p,
        }
    }

    pub fn reduce(&self, x: BigInt) -> BigInt {
        match self {
            Ring::Integers => x,
            Ring::PrimeField(p) => match x.to_i64() {
                Some(v) => BigInt::from(v.rem_euclid(*p as i64)),
                None => x.mod_floor(&BigInt::from(*p)),
            },
        }
    }

    pub fn from_i64(&self, x: i64) -> BigInt {
        self.reduce(BigInt::from(x))
    }

    pub fn is_unit(&self, x: &BigInt) -> bool {
        match self {
            Ring::Integers => x.abs().is_one(),
            Ring::PrimeField(_) => !self.reduce(x.clone()).is_zero(),
        }
    }

    /// Inverse of a unit.
    pub fn inverse(&self, x: &BigInt) -> BigInt {
        match self {
            Ring::Integers => {
                debug_assert!(x.abs().is_one());
                x.clone()
            }
            Ring::PrimeField(p) => {
                let p = BigInt::from(*p);
                let e = x.mod_floor(&p).extended_gcd(&p);
                e.x.mod_floor(&p)
            }
        }
    }

    /// Euclidean quotient used by the Smith reduction; over a field the
    /// remainder is always zero.
    fn quotient(&self, a: &BigInt, b: &BigInt) -> BigInt {
        match self {
            Ring::Integers => a.div_floor(b),
            Ring::PrimeField(_) => self.reduce(a * self.inverse(b)),
        }
    }

    /// Size used for pivot selection.
    fn norm(&self, x: &BigInt) -> BigInt {
        match self {
            Ring::Integers => x.abs(),
            Ring::PrimeField(_) => self.reduce(x.clone()),
        }
    }

    pub fn elements(&self) -> Option<Vec<BigInt>> {
        match self {
            Ring::Integers => None,
            Ring::PrimeField(p) => Some((0..*p).map(BigInt::from).collect()),
        }
    }
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ring::Integers => write!(f, "Z"),
            Ring::PrimeField(p) => write!(f, "F{}", p),
        }
    }
}

/// Dense matrix with exact entries, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExactMatrix {
    ring: Ring,
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl fmt::Debug for ExactMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}x{} over {}]", self.rows, self.cols, self.ring)?;
        for i in 0..self.rows {
            write!(f, "\n  ")?;
            for j in 0..self.cols {
                write!(f, "{} ", self.get(i, j))?;
            }
        }
        Ok(())
    }
}

impl ExactMatrix {
    pub fn zeros(ring: Ring, rows: usize, cols: usize) -> Self {
        ExactMatrix { ring, rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(ring: Ring, n: usize) -> Self {
        let mut m = Self::zeros(ring, n, n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn from_rows(ring: Ring, rows: usize, cols: usize, entries: Vec<BigInt>) -> Result<Self, LinalgError> {
        if entries.len() != rows * cols {
            return Err(LinalgError::Dimension(format!("{} entries for a {}x{} matrix", entries.len(), rows, cols)));
        }
        Ok(ExactMatrix { ring, rows, cols, data: entries.into_iter().map(|x| ring.reduce(x)).collect() })
    }

    pub fn from_i64(ring: Ring, rows: usize, cols: usize, entries: &[i64]) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count");
        ExactMatrix { ring, rows, cols, data: entries.iter().map(|&x| ring.from_i64(x)).collect() }
    }

    pub fn from_nested(ring: Ring, rows: &[Vec<i64>], cols: usize) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols);
            data.extend(r.iter().map(|&x| ring.from_i64(x)));
        }
        ExactMatrix { ring, rows: rows.len(), cols, data }
    }

    pub fn column(ring: Ring, v: Vec<BigInt>) -> Self {
        let n = v.len();
        ExactMatrix { ring, rows: n, cols: 1, data: v.into_iter().map(|x| ring.reduce(x)).collect() }
    }

    pub fn diagonal(ring: Ring, rows: usize, cols: usize, diag: &[BigInt]) -> Self {
        let mut m = Self::zeros(ring, rows, cols);
        for (i, x) in diag.iter().enumerate() {
            m.set(i, i, x.clone());
        }
        m
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn entries(&self) -> &[BigInt] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: BigInt) {
        self.data[i * self.cols + j] = self.ring.reduce(x);
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn col_vec(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn row_vec(&self, i: usize) -> Vec<BigInt> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn from_columns(ring: Ring, rows: usize, cols: &[Vec<BigInt>]) -> Self {
        let mut m = Self::zeros(ring, rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows);
            for (i, x) in c.iter().enumerate() {
                m.set(i, j, x.clone());
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.ring, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let x = self.get(i, j);
                if !x.is_zero() {
                    t.data[j * self.rows + i] = x.clone();
                }
            }
        }
        t
    }

    fn check_ring(&self, other: &Self) {
        assert_eq!(self.ring, other.ring, "ring mismatch");
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_ring(other);
        assert_eq!(
            self.cols, other.rows,
            "matrix product shape {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = vec![BigInt::zero(); self.rows * other.cols];
        let brows: Vec<Vec<(usize, &BigInt)>> = (0..other.rows)
            .map(|k| {
                other.data[k * other.cols..(k + 1) * other.cols]
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| !b.is_zero())
                    .collect()
            })
            .collect();
        let mut touched = false;
        for i in 0..self.rows {
            let orow = &mut out[i * other.cols..(i + 1) * other.cols];
            for (a, brow) in self.data[i * self.cols..(i + 1) * self.cols].iter().zip(&brows) {
                if a.is_zero() || brow.is_empty() {
                    continue;
                }
                touched = true;
                for (j, b) in brow {
                    orow[*j] += a * *b;
                }
            }
        }
        if touched {
            if let Ring::PrimeField(_) = self.ring {
                for x in out.iter_mut().filter(|x| !x.is_zero()) {
                    *x = self.ring.reduce(std::mem::take(x));
                }
            }
        }
        ExactMatrix { ring: self.ring, rows: self.rows, cols: other.cols, data: out }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_ring(other);
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "matrix sum shape");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| if b.is_zero() { a.clone() } else { self.ring.reduce(a + b) })
            .collect();
        ExactMatrix { ring: self.ring, rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check_ring(other);
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "matrix difference shape");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| if b.is_zero() { a.clone() } else { self.ring.reduce(a - b) })
            .collect();
        ExactMatrix { ring: self.ring, rows: self.rows, cols: self.cols, data }
    }

    pub fn neg(&self) -> Self {
        self.scale(&BigInt::from(-1))
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        let data = self.data.iter().map(|a| self.ring.reduce(a * c)).collect();
        ExactMatrix { ring: self.ring, rows: self.rows, cols: self.cols, data }
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut s = BigInt::zero();
                for j in 0..self.cols {
                    let a = self.get(i, j);
                    if !a.is_zero() && !v[j].is_zero() {
                        s += a * &v[j];
                    }
                }
                self.ring.reduce(s)
            })
            .collect()
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &Self) -> Self {
        self.check_ring(other);
        assert_eq!(self.rows, other.rows, "hstack rows");
        let cols = self.cols + other.cols;
        let mut m = Self::zeros(self.ring, self.rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.data[i * cols + j] = self.get(i, j).clone();
            }
            for j in 0..other.cols {
                m.data[i * cols + self.cols + j] = other.get(i, j).clone();
            }
        }
        m
    }

    /// Vertical concatenation.
    pub fn vstack(&self, other: &Self) -> Self {
        self.check_ring(other);
        assert_eq!(self.cols, other.cols, "vstack cols");
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        ExactMatrix { ring: self.ring, rows: self.rows + other.rows, cols: self.cols, data }
    }

    pub fn vstack_all(ring: Ring, cols: usize, parts: &[ExactMatrix]) -> Self {
        let mut out = Self::zeros(ring, 0, cols);
        for p in parts {
            out = out.vstack(p);
        }
        out
    }

    pub fn hstack_all(ring: Ring, rows: usize, parts: &[ExactMatrix]) -> Self {
        let mut out = Self::zeros(ring, rows, 0);
        for p in parts {
            out = out.hstack(p);
        }
        out
    }

    pub fn block_diag(ring: Ring, parts: &[ExactMatrix]) -> Self {
        let r: usize = parts.iter().map(|p| p.rows).sum();
        let c: usize = parts.iter().map(|p| p.cols).sum();
        let mut m = Self::zeros(ring, r, c);
        let (mut r0, mut c0) = (0, 0);
        for p in parts {
            m.set_block(r0, c0, p);
            r0 += p.rows;
            c0 += p.cols;
        }
        m
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &ExactMatrix) {
        assert!(r0 + b.rows <= self.rows && c0 + b.cols <= self.cols, "block out of range");
        for i in 0..b.rows {
            for j in 0..b.cols {
                self.data[(r0 + i) * self.cols + c0 + j] = b.get(i, j).clone();
            }
        }
    }

    pub fn add_block(&mut self, r0: usize, c0: usize, b: &ExactMatrix) {
        assert!(r0 + b.rows <= self.rows && c0 + b.cols <= self.cols, "block out of range");
        for i in 0..b.rows {
            for j in 0..b.cols {
                let x = b.get(i, j);
                if !x.is_zero() {
                    let idx = (r0 + i) * self.cols + c0 + j;
                    self.data[idx] = self.ring.reduce(&self.data[idx] + x);
                }
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(self.ring, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = self.get(r0 + i, c0 + j).clone();
            }
        }
        m
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(&self.data[i * self.cols..(i + 1) * self.cols]);
        }
        ExactMatrix { ring: self.ring, rows: idx.len(), cols: self.cols, data }
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        let mut m = Self::zeros(self.ring, self.rows, idx.len());
        for i in 0..self.rows {
            for (jj, &j) in idx.iter().enumerate() {
                m.data[i * idx.len() + jj] = self.get(i, j).clone();
            }
        }
        m
    }

    /// 0/1 matrix sending coordinate `j` to coordinate `map[j]` (or to zero).
    pub fn routing(ring: Ring, rows: usize, map: &[Option<usize>]) -> Self {
        let mut m = Self::zeros(ring, rows, map.len());
        for (j, t) in map.iter().enumerate() {
            if let Some(i) = t {
                m.set(*i, j, BigInt::one());
            }
        }
        m
    }

    pub fn to_i64_rows(&self) -> Vec<Vec<i64>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).to_i64().expect("entry fits in i64")).collect())
            .collect()
    }

    pub fn to_string_rows(&self) -> Vec<Vec<String>> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j).to_string()).collect()).collect()
    }

    // elementary operations used by the normal form

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[dst] += c * row[src]
    fn row_axpy(&mut self, dst: usize, src: usize, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let s = &self.data[src * self.cols + j];
            if !s.is_zero() {
                let v = s * c;
                let idx = dst * self.cols + j;
                self.data[idx] = self.ring.reduce(&self.data[idx] + v);
            }
        }
    }

    /// col[dst] += c * col[src]
    fn col_axpy(&mut self, dst: usize, src: usize, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let s = &self.data[i * self.cols + src];
            if !s.is_zero() {
                let v = s * c;
                let idx = i * self.cols + dst;
                self.data[idx] = self.ring.reduce(&self.data[idx] + v);
            }
        }
    }

    fn scale_row(&mut self, r: usize, c: &BigInt) {
        for j in 0..self.cols {
            let idx = r * self.cols + j;
            self.data[idx] = self.ring.reduce(&self.data[idx] * c);
        }
    }

    fn scale_col(&mut self, col: usize, c: &BigInt) {
        for i in 0..self.rows {
            let idx = i * self.cols + col;
            self.data[idx] = self.ring.reduce(&self.data[idx] * c);
        }
    }
}

/// Result of the Smith reduction: `u * m * v = diag(d)`.
#[derive(Clone, Debug)]
pub struct Smith {
    pub u: ExactMatrix,
    pub u_inv: Option<ExactMatrix>,
    pub v: ExactMatrix,
    pub diag: Vec<BigInt>,
    pub rank: usize,
}

fn smith_core(m: &ExactMatrix, want_u_inv: bool) -> Smith {
    let ring = m.ring;
    let (r, c) = (m.rows, m.cols);
    let mut a = m.clone();
    let mut u = ExactMatrix::identity(ring, r);
    let mut u_inv = if want_u_inv { Some(ExactMatrix::identity(ring, r)) } else { None };
    let mut v = ExactMatrix::identity(ring, c);
    let mut rank = 0;
    for t in 0..r.min(c) {
        loop {
            // pivot: smallest norm, then lowest row-major index
            let mut best: Option<(BigInt, usize, usize)> = None;
            for i in t..r {
                for j in t..c {
                    let x = a.get(i, j);
                    if x.is_zero() {
                        continue;
                    }
                    let n = ring.norm(x);
                    if best.as_ref().is_none_or(|(bn, _, _)| n < *bn) {
                        let unit = n.is_one();
                        best = Some((n, i, j));
                        if unit {
                            break;
                        }
                    }
                }
                if best.as_ref().is_some_and(|(bn, _, _)| bn.is_one()) {
                    break;
                }
            }
            let Some((_, pi, pj)) = best else {
                return Smith { u, u_inv, v, diag: (0..rank).map(|i| a.get(i, i).clone()).collect(), rank };
            };
            a.swap_rows(t, pi);
            u.swap_rows(t, pi);
            if let Some(ui) = u_inv.as_mut() {
                ui.swap_cols(t, pi);
            }
            a.swap_cols(t, pj);
            v.swap_cols(t, pj);
            let p = a.get(t, t).clone();
            let mut clean = true;
            for i in t + 1..r {
                let x = a.get(i, t).clone();
                if x.is_zero() {
                    continue;
                }
                let q = ring.quotient(&x, &p);
                let nq = -&q;
                a.row_axpy(i, t, &nq);
                u.row_axpy(i, t, &nq);
                if let Some(ui) = u_inv.as_mut() {
                    ui.col_axpy(t, i, &q);
                }
                if !a.get(i, t).is_zero() {
                    clean = false;
                }
            }
            for j in t + 1..c {
                let x = a.get(t, j).clone();
                if x.is_zero() {
                    continue;
                }
                let q = ring.quotient(&x, &p);
                let nq = -&q;
                a.col_axpy(j, t, &nq);
                v.col_axpy(j, t, &nq);
                if !a.get(t, j).is_zero() {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            if ring == Ring::Integers {
                // divisibility of the remaining block by the pivot
                let mut bad = None;
                'outer: for i in t + 1..r {
                    for j in t + 1..c {
                        if !a.get(i, j).is_multiple_of(&p) {
                            bad = Some(i);
                            break 'outer;
                        }
                    }
                }
                if let Some(i) = bad {
                    let one = BigInt::one();
                    a.row_axpy(t, i, &one);
                    u.row_axpy(t, i, &one);
                    if let Some(ui) = u_inv.as_mut() {
                        ui.col_axpy(i, t, &(-one));
                    }
                    continue;
                }
                if p.is_negative() {
                    let m1 = BigInt::from(-1);
                    a.scale_row(t, &m1);
                    u.scale_row(t, &m1);
                    if let Some(ui) = u_inv.as_mut() {
                        ui.scale_col(t, &m1);
                    }
                }
            } else {
                let inv = ring.inverse(&p);
                a.scale_row(t, &inv);
                u.scale_row(t, &inv);
                if let Some(ui) = u_inv.as_mut() {
                    ui.scale_col(t, &p);
                }
            }
            rank = t + 1;
            break;
        }
    }
    Smith { u, u_inv, v, diag: (0..rank).map(|i| a.get(i, i).clone()).collect(), rank }
}

/// Smith normal form `(u, d, v)` with `u * m * v = d`.
pub fn smith_normal_form(m: &ExactMatrix) -> (ExactMatrix, ExactMatrix, ExactMatrix) {
    let s = smith_core(m, false);
    let d = ExactMatrix::diagonal(m.ring, m.rows, m.cols, &s.diag);
    (s.u, d, s.v)
}

pub fn smith(m: &ExactMatrix) -> Smith {
    smith_core(m, true)
}

// ---------------------------------------------------------------------------
// Prime field fast path: reduced row echelon on machine words. Residues are
// below p < 2^32 so products fit in u64.

struct FpEchelon {
    /// rows of the echelon form, each with its pivot column
    rows: Vec<(usize, Vec<u64>)>,
}

fn fp_inv(a: u64, p: u64) -> u64 {
    let mut r = 1u64;
    let mut b = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

fn to_words(m: &ExactMatrix, p: u64) -> Vec<Vec<u64>> {
    (0..m.rows).map(|i| (0..m.cols).map(|j| m.get(i, j).to_u64().expect("reduced residue") % p).collect()).collect()
}

/// Echelonize `[m | b]` keeping track of the augmented columns.
fn fp_echelon(mut rows: Vec<Vec<u64>>, cols: usize, p: u64) -> FpEchelon {
    let mut out: Vec<(usize, Vec<u64>)> = Vec::new();
    let mut pivot_row = 0;
    let n = rows.len();
    for col in 0..cols {
        let Some(sel) = (pivot_row..n).find(|&i| rows[i][col] != 0) else { continue };
        rows.swap(pivot_row, sel);
        let inv = fp_inv(rows[pivot_row][col], p);
        for x in rows[pivot_row].iter_mut() {
            *x = *x * inv % p;
        }
        let prow = rows[pivot_row].clone();
        for i in 0..n {
            if i != pivot_row && rows[i][col] != 0 {
                let f = rows[i][col];
                for (x, y) in rows[i].iter_mut().zip(&prow) {
                    if *y != 0 {
                        *x = (*x + (p - f) * y) % p;
                    }
                }
            }
        }
        pivot_row += 1;
        if pivot_row == n {
            break;
        }
    }
    for (i, r) in rows.into_iter().enumerate() {
        if i < pivot_row {
            let pc = r.iter().position(|&x| x != 0).expect("pivot");
            out.push((pc, r));
        }
    }
    FpEchelon { rows: out }
}

fn fp_solve_many(m: &ExactMatrix, b: &ExactMatrix, p: u64) -> Option<ExactMatrix> {
    let ring = m.ring;
    let (r, c, k) = (m.rows, m.cols, b.cols);
    let mw = to_words(m, p);
    let bw = to_words(b, p);
    let aug: Vec<Vec<u64>> = (0..r).map(|i| mw[i].iter().chain(bw[i].iter()).cloned().collect()).collect();
    // a pivot among the right hand side columns certifies inconsistency
    let e = fp_echelon(aug, c + k, p);
    let mut x = ExactMatrix::zeros(ring, c, k);
    for (pc, row) in &e.rows {
        if *pc >= c {
            return None;
        }
        for j in 0..k {
            x.set(*pc, j, BigInt::from(row[c + j]));
        }
    }
    Some(x)
}

fn fp_kernel(m: &ExactMatrix, p: u64) -> Vec<Vec<BigInt>> {
    let c = m.cols;
    let e = fp_echelon(to_words(m, p), c, p);
    let pivots: Vec<usize> = e.rows.iter().map(|(pc, _)| *pc).collect();
    let mut basis = Vec::new();
    for free in 0..c {
        if pivots.contains(&free) {
            continue;
        }
        let mut v = vec![BigInt::zero(); c];
        v[free] = BigInt::one();
        for (pc, row) in &e.rows {
            if row[free] != 0 {
                v[*pc] = BigInt::from((p - row[free]) % p);
            }
        }
        basis.push(v);
    }
    basis
}

fn fp_rank(m: &ExactMatrix, p: u64) -> usize {
    fp_echelon(to_words(m, p), m.cols, p).rows.len()
}

// ---------------------------------------------------------------------------

/// Solve `m x = b` for a single column.
pub fn solve(m: &ExactMatrix, b: &[BigInt]) -> Result<Option<Vec<BigInt>>, LinalgError> {
    if b.len() != m.rows {
        return Err(LinalgError::Dimension(format!("rhs of length {} for {} rows", b.len(), m.rows)));
    }
    let bm = ExactMatrix::column(m.ring, b.to_vec());
    Ok(solve_many(m, &bm)?.map(|x| x.col_vec(0)))
}

/// Solve `m X = B` column by column; `None` if some column is unsolvable.
pub fn solve_many(m: &ExactMatrix, b: &ExactMatrix) -> Result<Option<ExactMatrix>, LinalgError> {
    if m.ring != b.ring {
        return Err(LinalgError::RingMismatch);
    }
    if b.rows != m.rows {
        return Err(LinalgError::Dimension(format!("rhs has {} rows, matrix has {}", b.rows, m.rows)));
    }
    if b.is_zero() {
        return Ok(Some(ExactMatrix::zeros(m.ring, m.cols, b.cols)));
    }
    if let Ring::PrimeField(p) = m.ring {
        return Ok(fp_solve_many(m, b, p));
    }
    let s = smith_core(m, false);
    let ub = s.u.mul(b);
    let mut y = ExactMatrix::zeros(m.ring, m.cols, b.cols);
    for i in 0..m.rows {
        for j in 0..b.cols {
            let x = ub.get(i, j);
            if i < s.rank {
                let (q, rem) = x.div_rem(&s.diag[i]);
                if !rem.is_zero() {
                    return Ok(None);
                }
                y.set(i, j, q);
            } else if !x.is_zero() {
                return Ok(None);
            }
        }
    }
    Ok(Some(s.v.mul(&y)))
}

/// A basis of `{x : m x = 0}`; over the integers it spans a direct summand.
pub fn kernel_basis(m: &ExactMatrix) -> Vec<Vec<BigInt>> {
    if m.rows == 0 || m.is_zero() {
        return (0..m.cols)
            .map(|j| {
                let mut v = vec![BigInt::zero(); m.cols];
                v[j] = BigInt::one();
                v
            })
            .collect();
    }
    if let Ring::PrimeField(p) = m.ring {
        return fp_kernel(m, p);
    }
    let s = smith_core(m, false);
    (s.rank..m.cols).map(|j| s.v.col_vec(j)).collect()
}

pub fn kernel_matrix(m: &ExactMatrix) -> ExactMatrix {
    ExactMatrix::from_columns(m.ring, m.cols, &kernel_basis(m))
}

pub fn rank(m: &ExactMatrix) -> usize {
    if let Ring::PrimeField(p) = m.ring {
        return fp_rank(m, p);
    }
    smith_core(m, false).rank
}

/// Surjective as a map of free modules (unit Smith invariants over Z).
pub fn is_surjective(m: &ExactMatrix) -> bool {
    if m.rows == 0 {
        return true;
    }
    match m.ring {
        Ring::PrimeField(p) => fp_rank(m, p) == m.rows,
        Ring::Integers => {
            let s = smith_core(m, false);
            s.rank == m.rows && s.diag.iter().all(|d| d.is_one())
        }
    }
}

pub fn is_injective(m: &ExactMatrix) -> bool {
    rank(m) == m.cols
}

/// Split injective: admits a left inverse over the ring.
pub fn is_split_injective(m: &ExactMatrix) -> bool {
    is_surjective(&m.transpose())
}

pub fn right_inverse(m: &ExactMatrix) -> Option<ExactMatrix> {
    solve_many(m, &ExactMatrix::identity(m.ring, m.rows)).expect("shapes agree")
}

pub fn left_inverse(m: &ExactMatrix) -> Option<ExactMatrix> {
    right_inverse(&m.transpose()).map(|x| x.transpose())
}

pub fn inverse(m: &ExactMatrix) -> Option<ExactMatrix> {
    if !m.is_square() {
        return None;
    }
    let r = right_inverse(m)?;
    if m.mul(&r) == ExactMatrix::identity(m.ring, m.rows) && r.mul(m) == ExactMatrix::identity(m.ring, m.rows) {
        Some(r)
    } else {
        None
    }
}

/// Determinant by fraction-free elimination (Bareiss); used to certify units.
pub fn determinant(m: &ExactMatrix) -> BigInt {
    assert!(m.is_square());
    let n = m.rows;
    if n == 0 {
        return BigInt::one();
    }
    let ring = m.ring;
    let mut a: Vec<Vec<BigInt>> = (0..n).map(|i| m.row_vec(i)).collect();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            let Some(sw) = (k + 1..n).find(|&i| !a[i][k].is_zero()) else { return BigInt::zero() };
            a.swap(k, sw);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = num / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    ring.reduce(sign * &a[n - 1][n - 1])
}

/// Invariant-factor presentation of an abelian group (or vector space).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbGroupPresentation {
    pub ring: Ring,
    pub ambient_dim: usize,
    pub free_rank: usize,
    /// Nontrivial torsion factors in divisibility order.
    pub torsion: Vec<BigInt>,
    /// Generator lifts in ambient coordinates: torsion generators first.
    pub generators: Vec<Vec<BigInt>>,
    /// Row `i` reads off the coefficient of generator `i`.
    coords: ExactMatrix,
}

impl AbGroupPresentation {
    pub fn trivial(ring: Ring, ambient_dim: usize) -> Self {
        AbGroupPresentation {
            ring,
            ambient_dim,
            free_rank: 0,
            torsion: vec![],
            generators: vec![],
            coords: ExactMatrix::zeros(ring, 0, ambient_dim),
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.free_rank == 0 && self.torsion.is_empty()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    /// `None` for infinite groups.
    pub fn order(&self) -> Option<BigInt> {
        match self.ring {
            Ring::Integers => {
                if self.free_rank > 0 {
                    None
                } else {
                    Some(self.torsion.iter().fold(BigInt::one(), |a, b| a * b))
                }
            }
            Ring::PrimeField(p) => Some(BigInt::from(p).pow(self.free_rank as u32)),
        }
    }

    pub fn modulus(&self, i: usize) -> Option<BigInt> {
        if i < self.torsion.len() {
            Some(self.torsion[i].clone())
        } else {
            match self.ring {
                Ring::Integers => None,
                Ring::PrimeField(p) => Some(BigInt::from(p)),
            }
        }
    }

    /// Canonical coordinates of the class of an ambient vector.
    pub fn class_of(&self, v: &[BigInt]) -> Vec<BigInt> {
        let raw = self.coords.mul_vec(v);
        raw.into_iter()
            .enumerate()
            .map(|(i, x)| match self.modulus(i) {
                Some(m) => x.mod_floor(&m),
                None => x,
            })
            .collect()
    }

    pub fn same_class(&self, a: &[BigInt], b: &[BigInt]) -> bool {
        let d: Vec<BigInt> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.class_of(&d).iter().all(|x| x.is_zero())
    }

    /// Ambient representative of a coordinate vector.
    pub fn lift(&self, coeffs: &[BigInt]) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); self.ambient_dim];
        for (c, g) in coeffs.iter().zip(&self.generators) {
            for (o, x) in out.iter_mut().zip(g) {
                *o += c * x;
            }
        }
        out.into_iter().map(|x| self.ring.reduce(x)).collect()
    }

    /// Short description such as `Z^2 + Z/2 + Z/6` or `F3^1`.
    pub fn describe(&self) -> String {
        if self.is_trivial() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        match self.ring {
            Ring::Integers => {
                if self.free_rank > 0 {
                    parts.push(if self.free_rank == 1 { "Z".to_string() } else { format!("Z^{}", self.free_rank) });
                }
                for t in &self.torsion {
                    parts.push(format!("Z/{}", t));
                }
            }
            Ring::PrimeField(p) => parts.push(format!("F{}^{}", p, self.free_rank)),
        }
        parts.join(" + ")
    }

    /// Presentation of the quotient of this group by the subgroup generated
    /// by the given ambient vectors (all assumed to lie in the ambient cycles).
    pub fn quotient_by(&self, sub: &[Vec<BigInt>]) -> AbGroupPresentation {
        // generator coordinates of the relations, plus the torsion relations
        let n = self.num_generators();
        let mut rel_cols: Vec<Vec<BigInt>> = sub.iter().map(|v| self.class_of(v)).collect();
        for i in 0..n {
            if let Some(m) = self.modulus(i) {
                if self.ring == Ring::Integers {
                    let mut c = vec![BigInt::zero(); n];
                    c[i] = m;
                    rel_cols.push(c);
                }
            }
        }
        let rel = ExactMatrix::from_columns(self.ring, n, &rel_cols);
        let q = cokernel_presentation(&rel);
        // translate generator lifts back into ambient coordinates
        let generators = q.generators.iter().map(|g| self.lift(g)).collect();
        let coords = q.coords.mul(&self.coords);
        AbGroupPresentation {
            ring: self.ring,
            ambient_dim: self.ambient_dim,
            free_rank: q.free_rank,
            torsion: q.torsion,
            generators,
            coords,
        }
    }
}

impl AbGroupPresentation {
    /// `cokernel(c)` computed in the basis given by the columns of `basis`,
    /// re-expressed in ambient coordinates via a left inverse of `basis`.
    pub fn from_cokernel_in_basis(c: &ExactMatrix, basis: &ExactMatrix, left: &ExactMatrix) -> Self {
        let p = cokernel_presentation(c);
        let generators = p.generators.iter().map(|g| basis.mul_vec(g)).collect();
        AbGroupPresentation {
            ring: p.ring,
            ambient_dim: basis.rows,
            free_rank: p.free_rank,
            torsion: p.torsion,
            generators,
            coords: p.coords.mul(left),
        }
    }

    /// Row `i` reads off the (unreduced) coefficient of generator `i`.
    pub fn coordinate_matrix(&self) -> ExactMatrix {
        self.coords.clone()
    }
}

/// Presentation of `target / column-span(m)`.
pub fn cokernel_presentation(m: &ExactMatrix) -> AbGroupPresentation {
    let ring = m.ring;
    let n = m.rows;
    let s = smith_core(m, true);
    let u_inv = s.u_inv.expect("requested");
    let mut torsion = Vec::new();
    let mut tors_idx = Vec::new();
    for i in 0..s.rank {
        if !ring.is_unit(&s.diag[i]) {
            torsion.push(s.diag[i].clone());
            tors_idx.push(i);
        }
    }
    let free_idx: Vec<usize> = (s.rank..n).collect();
    let mut generators = Vec::new();
    let mut coord_rows = Vec::new();
    for &i in tors_idx.iter().chain(free_idx.iter()) {
        generators.push(u_inv.col_vec(i));
        coord_rows.push(i);
    }
    let coords = s.u.select_rows(&coord_rows);
    AbGroupPresentation { ring, ambient_dim: n, free_rank: free_idx.len(), torsion, generators, coords }
}

/// Sparse system `A x = b` solved by eliminating on unit pivots first; the
/// remaining block (no unit entries left) goes to the dense solver.
/// Unit pivots are unimodular, so over `Z` the returned kernel is a lattice basis.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    ring: Ring,
    nvars: usize,
    rows: Vec<(BTreeMap<usize, BigInt>, BigInt)>,
}

/// `particular + span(kernel)` is the full solution set.
#[derive(Clone, Debug)]
pub struct SparseSolution {
    pub particular: Vec<BigInt>,
    pub kernel: Vec<Vec<BigInt>>,
}

struct Eliminated {
    var: usize,
    rest: BTreeMap<usize, BigInt>,
    rhs: BigInt,
    inv: BigInt,
}

impl SparseSystem {
    pub fn new(ring: Ring, nvars: usize) -> Self {
        SparseSystem { ring, nvars, rows: vec![] }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Adds `Σ c·x_v = rhs`; repeated columns are summed.
    pub fn push_row(&mut self, entries: impl IntoIterator<Item = (usize, BigInt)>, rhs: BigInt) {
        let mut row: BTreeMap<usize, BigInt> = BTreeMap::new();
        for (v, c) in entries {
            assert!(v < self.nvars, "column out of range");
            *row.entry(v).or_insert_with(BigInt::zero) += c;
        }
        let ring = self.ring;
        let row: BTreeMap<usize, BigInt> =
            row.into_iter().map(|(v, c)| (v, ring.reduce(c))).filter(|(_, c)| !c.is_zero()).collect();
        self.rows.push((row, ring.reduce(rhs)));
    }

    pub fn solve(&self, with_kernel: bool) -> Option<SparseSolution> {
        let ring = self.ring;
        let n = self.nvars;
        let mut rows: Vec<Option<(BTreeMap<usize, BigInt>, BigInt)>> = Vec::with_capacity(self.rows.len());
        let mut col_rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for (i, (row, rhs)) in self.rows.iter().enumerate() {
            if row.is_empty() {
                if !rhs.is_zero() {
                    return None;
                }
                rows.push(None);
                continue;
            }
            for v in row.keys() {
                col_rows[*v].insert(i);
            }
            rows.push(Some((row.clone(), rhs.clone())));
        }
        let mut elim: Vec<Eliminated> = vec![];
        let mut eliminated = vec![false; n];
        loop {
            let mut cands: Vec<(usize, usize)> = rows
                .iter()
                .enumerate()
                .filter_map(|(i, r)| {
                    let (m, _) = r.as_ref()?;
                    m.values().any(|c| ring.is_unit(c)).then_some((m.len(), i))
                })
                .collect();
            if cands.is_empty() {
                break;
            }
            cands.sort();
            let mut progressed = false;
            for (_, ri) in cands {
                let pick = match &rows[ri] {
                    None => continue,
                    Some((row, _)) => row
                        .iter()
                        .filter(|(_, c)| ring.is_unit(c))
                        .min_by_key(|(v, _)| (col_rows[**v].len(), **v))
                        .map(|(v, c)| (*v, c.clone())),
                };
                let Some((v, c)) = pick else { continue };
                let (prow, prhs) = rows[ri].take().expect("live row");
                for w in prow.keys() {
                    col_rows[*w].remove(&ri);
                }
                let inv = ring.inverse(&c);
                let targets: Vec<usize> = col_rows[v].iter().copied().collect();
                for t in targets {
                    let (trow, trhs) = rows[t].as_mut().expect("indexed row is live");
                    let factor = ring.reduce(&trow[&v] * &inv);
                    for (w, pc) in &prow {
                        let e = trow.entry(*w).or_insert_with(BigInt::zero);
                        *e = ring.reduce(&*e - &factor * pc);
                        if e.is_zero() {
                            trow.remove(w);
                            col_rows[*w].remove(&t);
                        } else {
                            col_rows[*w].insert(t);
                        }
                    }
                    *trhs = ring.reduce(&*trhs - &factor * &prhs);
                    if trow.is_empty() {
                        if !trhs.is_zero() {
                            return None;
                        }
                        rows[t] = None;
                    }
                }
                col_rows[v].clear();
                eliminated[v] = true;
                let mut rest = prow;
                rest.remove(&v);
                elim.push(Eliminated { var: v, rest, rhs: prhs, inv });
                progressed = true;
            }
            if !progressed {
                break;
            }
        }

        // dense remainder
        let live: Vec<&(BTreeMap<usize, BigInt>, BigInt)> = rows.iter().flatten().collect();
        let dense_vars: Vec<usize> = (0..n).filter(|v| !col_rows[*v].is_empty()).collect();
        let index: BTreeMap<usize, usize> = dense_vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let mut m = ExactMatrix::zeros(ring, live.len(), dense_vars.len());
        let mut b = Vec::with_capacity(live.len());
        for (r, (row, rhs)) in live.iter().enumerate() {
            for (v, c) in row {
                m.set(r, index[v], c.clone());
            }
            b.push(rhs.clone());
        }
        let y = if live.is_empty() { vec![] } else { solve(&m, &b).expect("consistent shapes")? };

        let back = |x: &mut Vec<BigInt>, homogeneous: bool| {
            for e in elim.iter().rev() {
                let mut s = if homogeneous { BigInt::zero() } else { e.rhs.clone() };
                for (w, c) in &e.rest {
                    s -= c * &x[*w];
                }
                x[e.var] = ring.reduce(s * &e.inv);
            }
        };
        let mut particular = vec![BigInt::zero(); n];
        for (i, v) in dense_vars.iter().enumerate() {
            particular[*v] = y[i].clone();
        }
        back(&mut particular, false);

        let mut kernel = vec![];
        if with_kernel {
            if !live.is_empty() {
                for kv in kernel_basis(&m) {
                    let mut x = vec![BigInt::zero(); n];
                    for (i, v) in dense_vars.iter().enumerate() {
                        x[*v] = kv[i].clone();
                    }
                    back(&mut x, true);
                    kernel.push(x);
                }
            }
            for f in (0..n).filter(|v| !eliminated[*v] && !index.contains_key(v)) {
                let mut x = vec![BigInt::zero(); n];
                x[f] = BigInt::one();
                back(&mut x, true);
                kernel.push(x);
            }
        }
        Some(SparseSolution { particular, kernel })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(rows: usize, cols: usize, e: &[i64]) -> ExactMatrix {
        ExactMatrix::from_i64(Ring::Integers, rows, cols, e)
    }

    #[test]
    fn smith_identity_is_trivial() {
        let i3 = ExactMatrix::identity(Ring::Integers, 3);
        let (u, d, v) = smith_normal_form(&i3);
        assert_eq!(u, i3);
        assert_eq!(d, i3);
        assert_eq!(v, i3);
    }

    #[test]
    fn smith_diag_2_3() {
        let m = z(2, 2, &[2, 0, 0, 3]);
        let (u, d, v) = smith_normal_form(&m);
        assert_eq!(u.mul(&m).mul(&v), d);
        assert_eq!(d, z(2, 2, &[1, 0, 0, 6]));
        assert!(determinant(&u).abs().is_one());
        assert!(determinant(&v).abs().is_one());
    }

    #[test]
    fn smith_zero() {
        let m = z(2, 2, &[0, 0, 0, 0]);
        let (_, d, _) = smith_normal_form(&m);
        assert!(d.is_zero());
    }

    #[test]
    fn solve_examples() {
        let m = z(1, 1, &[2]);
        assert_eq!(solve(&m, &[BigInt::from(4)]).unwrap(), Some(vec![BigInt::from(2)]));
        assert_eq!(solve(&m, &[BigInt::from(3)]).unwrap(), None);
        assert!(solve(&m, &[BigInt::from(3), BigInt::from(1)]).is_err());
    }

    #[test]
    fn kernel_examples() {
        assert!(kernel_basis(&z(1, 1, &[5])).is_empty());
        assert_eq!(kernel_basis(&z(1, 1, &[0])).len(), 1);
        let k = kernel_basis(&z(1, 2, &[1, 1]));
        assert_eq!(k.len(), 1);
        assert!(k[0][0] == -k[0][1].clone() && k[0][0].abs().is_one());
    }

    #[test]
    fn cokernel_examples() {
        let c = cokernel_presentation(&z(1, 1, &[2]));
        assert_eq!(c.torsion, vec![BigInt::from(2)]);
        assert_eq!(c.free_rank, 0);
        assert!(cokernel_presentation(&ExactMatrix::identity(Ring::Integers, 3)).is_trivial());
        let c = cokernel_presentation(&z(2, 2, &[2, 0, 0, 3]));
        assert_eq!(c.torsion, vec![BigInt::from(6)]);
        assert_eq!(c.describe(), "Z/6");
    }

    #[test]
    fn prime_field_paths() {
        let f3 = Ring::prime_field(3).unwrap();
        let m = ExactMatrix::from_i64(f3, 2, 3, &[1, 2, 0, 2, 1, 1]);
        let k = kernel_basis(&m);
        for v in &k {
            assert!(m.mul_vec(v).iter().all(|x| x.is_zero()));
        }
        assert_eq!(k.len() + rank(&m), 3);
        let (u, d, v) = smith_normal_form(&m);
        assert_eq!(u.mul(&m).mul(&v), d);
        assert!(Ring::prime_field(4).is_err());
    }

    #[test]
    fn fp_inconsistent_system() {
        let f2 = Ring::PrimeField(2);
        let m = ExactMatrix::from_i64(f2, 2, 1, &[1, 1]);
        let b = ExactMatrix::from_i64(f2, 2, 1, &[1, 0]);
        assert!(solve_many(&m, &b).unwrap().is_none());
    }

    fn sparse_of(m: &ExactMatrix, b: &[BigInt]) -> SparseSystem {
        let mut sys = SparseSystem::new(m.ring(), m.cols());
        for r in 0..m.rows() {
            sys.push_row((0..m.cols()).map(|c| (c, m.get(r, c).clone())), b[r].clone());
        }
        sys
    }

    fn check_sparse(m: &ExactMatrix, b: &[BigInt]) {
        let ring = m.ring();
        let dense = solve(m, b).unwrap();
        let sparse = sparse_of(m, b).solve(true);
        assert_eq!(dense.is_some(), sparse.is_some());
        let Some(sol) = sparse else { return };
        let reduce = |v: Vec<BigInt>| v.into_iter().map(|x| ring.reduce(x)).collect::<Vec<_>>();
        assert_eq!(reduce(m.mul_vec(&sol.particular)), reduce(b.to_vec()));
        assert_eq!(sol.kernel.len(), m.cols() - rank(m));
        for k in &sol.kernel {
            assert!(m.mul_vec(k).iter().all(|x| ring.reduce(x.clone()).is_zero()));
        }
        if ring == Ring::Integers && !sol.kernel.is_empty() {
            // saturated: the kernel vectors extend to a basis of Z^n
            let k = ExactMatrix::from_columns(ring, m.cols(), &sol.kernel);
            let (_, d, _) = smith_normal_form(&k);
            assert!((0..sol.kernel.len()).all(|i| d.get(i, i).abs().is_one()));
        }
    }

    #[test]
    fn sparse_matches_dense_on_non_unit_block() {
        let m = z(3, 4, &[1, 2, 0, 0, 0, 0, 2, 4, 0, 0, 6, 2]);
        check_sparse(&m, &[BigInt::from(1), BigInt::from(2), BigInt::from(4)]);
        check_sparse(&m, &[BigInt::from(1), BigInt::from(1), BigInt::from(4)]);
    }

    proptest::proptest! {
        #[test]
        fn sparse_agrees_with_dense(
            rows in 1usize..6, cols in 1usize..6,
            entries in proptest::collection::vec(-3i64..=3, 36),
            rhs in proptest::collection::vec(-4i64..=4, 6),
            p in proptest::sample::select(vec![0u64, 2, 3]),
        ) {
            let ring = if p == 0 { Ring::Integers } else { Ring::PrimeField(p) };
            let m = ExactMatrix::from_i64(ring, rows, cols, &entries[..rows * cols]);
            let b: Vec<BigInt> = rhs[..rows].iter().map(|x| ring.from_i64(*x)).collect();
            check_sparse(&m, &b);
            let zero = vec![BigInt::zero(); rows];
            check_sparse(&m, &zero);
        }
    }
}
