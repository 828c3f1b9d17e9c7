use super::matrix::FpMatrix;
use crate::error::{Error, Result};

/// A subspace of F_p^n stored by its canonical RREF basis (rows).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Subspace {
    ambient: usize,
    basis: FpMatrix,
    pivots: Vec<usize>,
}

impl Subspace {
    /// Span of the rows of `rows`.
    pub fn span(rows: &FpMatrix) -> Self {
        let rr = rows.rref();
        let basis = rr.matrix.submatrix(0..rr.rank, 0..rows.cols());
        Subspace { ambient: rows.cols(), basis, pivots: rr.pivots }
    }

    /// Span of the columns of `m`, i.e. its image.
    pub fn image(m: &FpMatrix) -> Self {
        Self::span(&m.transpose())
    }

    /// Kernel of `m` as a subspace of its source.
    pub fn kernel(m: &FpMatrix) -> Self {
        let k = m.kernel();
        Subspace::span(&k)
    }

    pub fn zero(p: u32, n: usize) -> Self {
        Subspace { ambient: n, basis: FpMatrix::zeros(p, 0, n), pivots: vec![] }
    }

    pub fn full(p: u32, n: usize) -> Self {
        Subspace { ambient: n, basis: FpMatrix::identity(p, n), pivots: (0..n).collect() }
    }

    /// Trusts that `basis` is already in canonical RREF with the given pivots.
    pub(crate) fn from_rref_unchecked(basis: FpMatrix, pivots: Vec<usize>) -> Self {
        Subspace { ambient: basis.cols(), basis, pivots }
    }

    pub fn p(&self) -> u32 {
        self.basis.p()
    }
    pub fn ambient(&self) -> usize {
        self.ambient
    }
    pub fn dim(&self) -> usize {
        self.pivots.len()
    }
    pub fn basis(&self) -> &FpMatrix {
        &self.basis
    }
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn non_pivots(&self) -> Vec<usize> {
        let mut mark = vec![false; self.ambient];
        for &c in &self.pivots {
            mark[c] = true;
        }
        (0..self.ambient).filter(|&c| !mark[c]).collect()
    }

    /// Reduces `v` modulo the subspace; the result vanishes at pivot columns.
    pub fn residue(&self, v: &[u32]) -> Vec<u32> {
        let p = self.p();
        let mut r: Vec<u32> = v.iter().map(|x| x % p).collect();
        for (a, &pc) in self.pivots.iter().enumerate() {
            let f = r[pc];
            if f == 0 {
                continue;
            }
            let nf = p - f;
            for (x, &b) in r.iter_mut().zip(self.basis.row(a)) {
                *x = (*x + nf * b) % p;
            }
        }
        r
    }

    pub fn contains(&self, v: &[u32]) -> bool {
        assert_eq!(v.len(), self.ambient);
        self.residue(v).iter().all(|&x| x == 0)
    }

    /// Coordinates of `v` in the RREF basis, if `v` lies in the subspace.
    pub fn coords(&self, v: &[u32]) -> Option<Vec<u32>> {
        if !self.contains(v) {
            return None;
        }
        Some(self.pivots.iter().map(|&c| v[c] % self.p()).collect())
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        (0..other.dim()).all(|a| self.contains(other.basis.row(a)))
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace> {
        self.check_compatible(other)?;
        Ok(Subspace::span(&self.basis.vstack(&other.basis)))
    }

    pub fn intersection(&self, other: &Subspace) -> Result<Subspace> {
        self.check_compatible(other)?;
        let a = self.dim();
        let stacked = self.basis.vstack(&other.basis);
        // left kernel: combinations x·U − y·V = 0 show up as kernel vectors of the transpose
        let lk = stacked.transpose().kernel();
        let xs = lk.submatrix(0..lk.rows(), 0..a);
        Ok(Subspace::span(&xs.mul(&self.basis)))
    }

    fn check_compatible(&self, other: &Subspace) -> Result<()> {
        if self.ambient != other.ambient || self.p() != other.p() {
            return Err(Error::DimensionMismatch(format!(
                "subspaces of F_{}^{} and F_{}^{}",
                self.p(),
                self.ambient,
                other.p(),
                other.ambient
            )));
        }
        Ok(())
    }

    /// Projection onto the quotient (coordinates at non-pivot columns) and a section of it.
    /// The projection has kernel exactly this subspace; projection · section = identity.
    pub fn quotient_map(&self) -> (FpMatrix, FpMatrix) {
        let p = self.p();
        let np = self.non_pivots();
        let mut proj = FpMatrix::zeros(p, np.len(), self.ambient);
        for (j, &c) in np.iter().enumerate() {
            proj.set(j, c, 1);
        }
        for (a, &pc) in self.pivots.iter().enumerate() {
            for (j, &c) in np.iter().enumerate() {
                let v = self.basis.get(a, c);
                if v != 0 {
                    proj.set(j, pc, p - v);
                }
            }
        }
        let mut section = FpMatrix::zeros(p, self.ambient, np.len());
        for (j, &c) in np.iter().enumerate() {
            section.set(c, j, 1);
        }
        (proj, section)
    }

    /// Image of the subspace under the linear map `m` (acting on column vectors).
    pub fn map(&self, m: &FpMatrix) -> Subspace {
        assert_eq!(m.cols(), self.ambient);
        Subspace::image(&m.mul(&self.basis.transpose()))
    }

    pub fn is_invariant(&self, m: &FpMatrix) -> bool {
        (0..self.dim()).all(|a| self.contains(&m.mul_vec(self.basis.row(a))))
    }
}

/// All d-dimensional subspaces of F_p^n, each exactly once, in echelon-form order.
pub fn enumerate_subspaces(n: usize, d: usize, p: u32) -> SubspaceIter {
    SubspaceIter::new(n, d, p, pivot_patterns(n, d))
}

/// Pivot column sets of d-dimensional subspaces of F_p^n; each one is an independent
/// chunk of the enumeration.
pub fn pivot_patterns(n: usize, d: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, d: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for c in start..n {
            if n - c < d - cur.len() {
                break;
            }
            cur.push(c);
            rec(c + 1, n, d, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if d <= n {
        rec(0, n, d, &mut Vec::new(), &mut out);
    }
    out
}

/// Subspaces whose RREF has the given pivot columns.
pub fn subspaces_with_pivots(n: usize, pivots: Vec<usize>, p: u32) -> SubspaceIter {
    SubspaceIter::new(n, pivots.len(), p, vec![pivots])
}

pub struct SubspaceIter {
    n: usize,
    p: u32,
    patterns: std::vec::IntoIter<Vec<usize>>,
    current: Option<(Vec<usize>, Vec<(usize, usize)>)>,
    digits: Vec<u32>,
    fresh: bool,
    d: usize,
}

impl SubspaceIter {
    fn new(n: usize, d: usize, p: u32, patterns: Vec<Vec<usize>>) -> Self {
        let mut it = SubspaceIter {
            n,
            p,
            patterns: patterns.into_iter(),
            current: None,
            digits: vec![],
            fresh: false,
            d,
        };
        it.next_pattern();
        it
    }

    fn next_pattern(&mut self) {
        self.current = self.patterns.next().map(|piv| {
            let free = free_positions(self.n, &piv);
            (piv, free)
        });
        if let Some((_, free)) = &self.current {
            self.digits = vec![0; free.len()];
            self.fresh = true;
        }
    }
}

/// Positions (row, col) of an RREF with these pivots that carry free entries.
pub fn free_positions(n: usize, pivots: &[usize]) -> Vec<(usize, usize)> {
    let mut is_piv = vec![false; n];
    for &c in pivots {
        is_piv[c] = true;
    }
    let mut free = Vec::new();
    for (a, &pc) in pivots.iter().enumerate() {
        for c in pc + 1..n {
            if !is_piv[c] {
                free.push((a, c));
            }
        }
    }
    free
}

impl Iterator for SubspaceIter {
    type Item = Subspace;

    fn next(&mut self) -> Option<Subspace> {
        loop {
            self.current.as_ref()?;
            if !self.fresh {
                // odometer step; rolls over into the next pivot pattern
                let mut i = 0;
                while i < self.digits.len() {
                    self.digits[i] += 1;
                    if self.digits[i] < self.p {
                        break;
                    }
                    self.digits[i] = 0;
                    i += 1;
                }
                if i == self.digits.len() {
                    self.next_pattern();
                    continue;
                }
            }
            self.fresh = false;
            let (piv, free) = self.current.as_ref()?;
            let mut b = FpMatrix::zeros(self.p, self.d, self.n);
            for (a, &pc) in piv.iter().enumerate() {
                b.set(a, pc, 1);
            }
            for (&(a, c), &v) in free.iter().zip(&self.digits) {
                b.set(a, c, v);
            }
            return Some(Subspace::from_rref_unchecked(b, piv.clone()));
        }
    }
}

/// Gaussian binomial coefficient [n choose d]_q.
pub fn gaussian_binomial(n: usize, d: usize, q: u64) -> u128 {
    if d > n {
        return 0;
    }
    let q = q as u128;
    let mut r: u128 = 1;
    for i in 0..d {
        let num = q.pow((n - i) as u32) - 1;
        let den = q.pow((i + 1) as u32) - 1;
        r = r * num / den;
    }
    r
}

/// Number of flags 0 ⊂ V_1 ⊂ … ⊂ F_q^m with successive quotient dimensions `parts`.
pub fn q_multinomial(parts: &[usize], q: u64) -> u128 {
    let mut total: usize = parts.iter().sum();
    let mut r = 1u128;
    for &a in parts.iter().rev() {
        r *= gaussian_binomial(total, a, q);
        total -= a;
    }
    r
}
