use std::fmt;

use crate::error::{Error, Result};

/// Largest modulus accepted; keeps every product of two residues inside `u32`.
pub const MAX_PRIME: u32 = 1 << 16;

pub fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn check_prime(p: u32) -> Result<()> {
    if p >= MAX_PRIME || !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    Ok(())
}

/// Inverse of a nonzero residue modulo the prime `p`.
pub fn inv_mod(a: u32, p: u32) -> u32 {
    debug_assert!(!a.is_multiple_of(p));
    let mut r = 1u64;
    let mut b = (a % p) as u64;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p as u64;
        }
        b = b * b % p as u64;
        e >>= 1;
    }
    r as u32
}

pub fn reduce_i64(x: i64, p: u32) -> u32 {
    x.rem_euclid(p as i64) as u32
}

/// Dense matrix over the prime field F_p, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FpMatrix {
    p: u32,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

/// Canonical reduced row echelon form together with rank and pivot columns.
#[derive(Clone, Debug)]
pub struct Rref {
    pub matrix: FpMatrix,
    pub rank: usize,
    pub pivots: Vec<usize>,
}

impl fmt::Debug for FpMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FpMatrix(p={}, {}x{})", self.p, self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        Ok(())
    }
}

impl FpMatrix {
    pub fn zeros(p: u32, rows: usize, cols: usize) -> Self {
        FpMatrix { p, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(p: u32, n: usize) -> Self {
        let mut m = Self::zeros(p, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % p;
        }
        m
    }

    /// Builds a matrix from integer rows, reducing every entry mod p.
    pub fn from_rows<R: AsRef<[i64]>>(p: u32, cols: usize, rows: &[R]) -> Result<Self> {
        let mut m = Self::zeros(p, rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {} has length {}, expected {}",
                    r,
                    row.len(),
                    cols
                )));
            }
            for (c, &x) in row.iter().enumerate() {
                m.data[r * cols + c] = reduce_i64(x, p);
            }
        }
        Ok(m)
    }

    pub fn from_vec(p: u32, rows: usize, cols: usize, data: Vec<u32>) -> Self {
        assert_eq!(data.len(), rows * cols);
        debug_assert!(data.iter().all(|&x| x < p));
        FpMatrix { p, rows, cols, data }
    }

    /// Column vector.
    pub fn column(p: u32, v: &[u32]) -> Self {
        Self::from_vec(p, v.len(), 1, v.to_vec())
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn data(&self) -> &[u32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u32) {
        self.data[r * self.cols + c] = v % self.p;
    }

    #[inline]
    pub fn add_at(&mut self, r: usize, c: usize, v: u32) {
        let idx = r * self.cols + c;
        self.data[idx] = (self.data[idx] + v % self.p) % self.p;
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [u32] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<u32> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn to_i64_rows(&self) -> Vec<Vec<i64>> {
        (0..self.rows).map(|r| self.row(r).iter().map(|&x| x as i64).collect()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    fn check_same_field(&self, other: &FpMatrix) -> Result<()> {
        if self.p != other.p {
            return Err(Error::DimensionMismatch(format!(
                "field mismatch: {} vs {}",
                self.p, other.p
            )));
        }
        Ok(())
    }

    pub fn try_mul(&self, other: &FpMatrix) -> Result<FpMatrix> {
        self.check_same_field(other)?;
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "product of {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &FpMatrix) -> FpMatrix {
        let p = self.p as u64;
        let (n, m, k) = (self.rows, self.cols, other.cols);
        let mut acc = vec![0u64; n * k];
        for i in 0..n {
            let out = &mut acc[i * k..(i + 1) * k];
            for l in 0..m {
                let a = self.data[i * m + l] as u64;
                if a == 0 {
                    continue;
                }
                let brow = &other.data[l * k..(l + 1) * k];
                for (o, &b) in out.iter_mut().zip(brow) {
                    *o += a * b as u64;
                }
            }
        }
        FpMatrix { p: self.p, rows: n, cols: k, data: acc.into_iter().map(|x| (x % p) as u32).collect() }
    }

    /// Matrix product; panics on shape mismatch.
    pub fn mul(&self, other: &FpMatrix) -> FpMatrix {
        self.try_mul(other).expect("matrix product shape mismatch")
    }

    pub fn mul_vec(&self, v: &[u32]) -> Vec<u32> {
        assert_eq!(v.len(), self.cols);
        let p = self.p as u64;
        (0..self.rows)
            .map(|r| {
                let s: u64 = self.row(r).iter().zip(v).map(|(&a, &b)| a as u64 * b as u64).sum();
                (s % p) as u32
            })
            .collect()
    }

    pub fn add(&self, other: &FpMatrix) -> FpMatrix {
        assert_eq!((self.rows, self.cols, self.p), (other.rows, other.cols, other.p));
        let p = self.p;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| (a + b) % p).collect();
        FpMatrix { p, rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &FpMatrix) -> FpMatrix {
        assert_eq!((self.rows, self.cols, self.p), (other.rows, other.cols, other.p));
        let p = self.p;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| (a + p - b) % p).collect();
        FpMatrix { p, rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: u32) -> FpMatrix {
        let p = self.p as u64;
        let s = (s % self.p) as u64;
        let data = self.data.iter().map(|&a| ((a as u64 * s) % p) as u32).collect();
        FpMatrix { p: self.p, rows: self.rows, cols: self.cols, data }
    }

    pub fn transpose(&self) -> FpMatrix {
        let mut t = Self::zeros(self.p, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    pub fn pow(&self, e: usize) -> FpMatrix {
        assert!(self.is_square());
        let mut result = Self::identity(self.p, self.rows);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_unchecked(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_unchecked(&base);
            }
        }
        result
    }

    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> FpMatrix {
        let mut m = Self::zeros(self.p, rows.len(), cols.len());
        for (i, r) in rows.clone().enumerate() {
            for (j, c) in cols.clone().enumerate() {
                m.data[i * m.cols + j] = self.get(r, c);
            }
        }
        m
    }

    pub fn select_rows(&self, idx: &[usize]) -> FpMatrix {
        let mut m = Self::zeros(self.p, idx.len(), self.cols);
        for (i, &r) in idx.iter().enumerate() {
            m.row_mut(i).copy_from_slice(self.row(r));
        }
        m
    }

    pub fn select_cols(&self, idx: &[usize]) -> FpMatrix {
        let mut m = Self::zeros(self.p, self.rows, idx.len());
        for r in 0..self.rows {
            for (j, &c) in idx.iter().enumerate() {
                m.data[r * idx.len() + j] = self.get(r, c);
            }
        }
        m
    }

    pub fn hstack(&self, other: &FpMatrix) -> FpMatrix {
        assert_eq!(self.rows, other.rows);
        let mut m = Self::zeros(self.p, self.rows, self.cols + other.cols);
        for r in 0..self.rows {
            m.row_mut(r)[..self.cols].copy_from_slice(self.row(r));
            m.row_mut(r)[self.cols..].copy_from_slice(other.row(r));
        }
        m
    }

    pub fn vstack(&self, other: &FpMatrix) -> FpMatrix {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        FpMatrix { p: self.p, rows: self.rows + other.rows, cols: self.cols, data }
    }

    /// Block-diagonal sum.
    pub fn block_diag(&self, other: &FpMatrix) -> FpMatrix {
        let mut m = Self::zeros(self.p, self.rows + other.rows, self.cols + other.cols);
        m.set_block(0, 0, self);
        m.set_block(self.rows, self.cols, other);
        m
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &FpMatrix) {
        for r in 0..b.rows {
            let dst = (r0 + r) * self.cols + c0;
            self.data[dst..dst + b.cols].copy_from_slice(b.row(r));
        }
    }

    /// In-place row reduction; returns pivot columns. Leaves the matrix in canonical RREF.
    pub fn rref_in_place(&mut self) -> Vec<usize> {
        let p = self.p;
        let (rows, cols) = (self.rows, self.cols);
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            if r == rows {
                break;
            }
            let Some(piv) = (r..rows).find(|&i| self.data[i * cols + c] != 0) else {
                continue;
            };
            if piv != r {
                for j in 0..cols {
                    self.data.swap(piv * cols + j, r * cols + j);
                }
            }
            let inv = inv_mod(self.data[r * cols + c], p);
            if inv != 1 {
                for j in c..cols {
                    let x = &mut self.data[r * cols + j];
                    *x = ((*x as u64 * inv as u64) % p as u64) as u32;
                }
            }
            for i in 0..rows {
                if i == r {
                    continue;
                }
                let f = self.data[i * cols + c];
                if f == 0 {
                    continue;
                }
                let nf = p - f;
                for j in c..cols {
                    let b = self.data[r * cols + j];
                    if b != 0 {
                        let x = &mut self.data[i * cols + j];
                        *x = (*x + nf * b) % p;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rref(&self) -> Rref {
        let mut m = self.clone();
        let pivots = m.rref_in_place();
        Rref { matrix: m, rank: pivots.len(), pivots }
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref_in_place().len()
    }

    /// Basis of the right kernel {x : self·x = 0}, one vector per row of the result.
    pub fn kernel(&self) -> FpMatrix {
        let rr = self.rref();
        kernel_from_rref(&rr, self.cols)
    }

    /// Solves self·x = b. Returns a particular solution and a kernel basis (rows).
    pub fn solve(&self, b: &[u32]) -> Result<Option<(Vec<u32>, FpMatrix)>> {
        if b.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has length {}, expected {}",
                b.len(),
                self.rows
            )));
        }
        let p = self.p;
        let aug = self.hstack(&FpMatrix::column(p, &b.iter().map(|x| x % p).collect::<Vec<_>>()));
        let rr = aug.rref();
        if rr.pivots.last() == Some(&self.cols) {
            return Ok(None);
        }
        let mut x = vec![0u32; self.cols];
        for (row, &pc) in rr.pivots.iter().enumerate() {
            x[pc] = rr.matrix.get(row, self.cols);
        }
        let kernel = kernel_from_rref(
            &Rref {
                matrix: rr.matrix.select_cols(&(0..self.cols).collect::<Vec<_>>()),
                rank: rr.rank,
                pivots: rr.pivots.clone(),
            },
            self.cols,
        );
        debug_assert_eq!(self.mul_vec(&x), b.iter().map(|v| v % p).collect::<Vec<_>>());
        Ok(Some((x, kernel)))
    }

    pub fn inverse(&self) -> Option<FpMatrix> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let aug = self.hstack(&FpMatrix::identity(self.p, n));
        let rr = aug.rref();
        if rr.rank < n || rr.pivots[n - 1] != n - 1 {
            return None;
        }
        Some(rr.matrix.submatrix(0..n, n..2 * n))
    }

    pub fn is_invertible(&self) -> bool {
        self.is_square() && self.rank() == self.rows
    }
}

fn kernel_from_rref(rr: &Rref, cols: usize) -> FpMatrix {
    let p = rr.matrix.p;
    let mut is_pivot = vec![false; cols];
    for &c in &rr.pivots {
        is_pivot[c] = true;
    }
    let free: Vec<usize> = (0..cols).filter(|&c| !is_pivot[c]).collect();
    let mut k = FpMatrix::zeros(p, free.len(), cols);
    for (i, &fc) in free.iter().enumerate() {
        k.data[i * cols + fc] = 1 % p;
        for (row, &pc) in rr.pivots.iter().enumerate() {
            let v = rr.matrix.get(row, fc);
            k.data[i * cols + pc] = (p - v) % p;
        }
    }
    k
}
