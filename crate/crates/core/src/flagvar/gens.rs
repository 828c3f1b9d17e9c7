//! Canonical generator matrices of free submodules of H^m, H = K[ε]/(ε^L).
//!
//! A free submodule U of rank e has a unique generating set x_0, …, x_{e−1} whose entries on
//! the pivot rows p_0 < … < p_{e−1} of (U + εH^m)/εH^m are the unit vectors. On the other rows
//! the constant terms follow the RREF pattern and the higher coefficients are free.

use crate::linalg::{gaussian_binomial, pivot_patterns, FpMatrix, Subspace};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FreeGens {
    pub m: usize,
    pub e: usize,
    pub len: usize,
    pub pivots: Vec<usize>,
    /// entry (b, a) is coeffs[(b·e + a)·len ..][..len]
    pub coeffs: Vec<u32>,
}

impl FreeGens {
    pub fn zero_rank(m: usize, len: usize) -> Self {
        FreeGens { m, e: 0, len, pivots: vec![], coeffs: vec![] }
    }

    pub fn entry(&self, b: usize, a: usize) -> &[u32] {
        let s = (b * self.e + a) * self.len;
        &self.coeffs[s..s + self.len]
    }

    pub fn entry_mut(&mut self, b: usize, a: usize) -> &mut [u32] {
        let s = (b * self.e + a) * self.len;
        &mut self.coeffs[s..s + self.len]
    }

    pub fn dim(&self) -> usize {
        self.e * self.len
    }

    pub fn non_pivots(&self) -> Vec<usize> {
        (0..self.m).filter(|b| !self.pivots.contains(b)).collect()
    }

    /// Coordinates of ε^t x_a, index b·len + s.
    pub fn vector(&self, a: usize, t: usize) -> Vec<u32> {
        let mut v = vec![0; self.m * self.len];
        for b in 0..self.m {
            let en = self.entry(b, a);
            for s in t..self.len {
                v[b * self.len + s] = en[s - t];
            }
        }
        v
    }

    /// Rows ε^t x_a, a < e, t < len.
    pub fn basis_rows(&self, p: u32) -> FpMatrix {
        let n = self.m * self.len;
        let mut data = Vec::with_capacity(self.dim() * n);
        for a in 0..self.e {
            for t in 0..self.len {
                data.extend(self.vector(a, t));
            }
        }
        FpMatrix::from_vec(p, self.dim(), n, data)
    }

    pub fn to_subspace(&self, p: u32) -> Subspace {
        Subspace::span(&self.basis_rows(p))
    }

    /// w minus the H-combination of the generators matching w on the pivot rows; zero iff w ∈ U.
    pub fn residual(&self, w: &[u32], p: u32) -> Vec<u32> {
        let len = self.len;
        let mut out = w.to_vec();
        let pp = p as u64;
        for (a, &pa) in self.pivots.iter().enumerate() {
            let lam = &w[pa * len..pa * len + len];
            if lam.iter().all(|&x| x == 0) {
                continue;
            }
            for b in 0..self.m {
                let en = self.entry(b, a);
                for (u, &lu) in lam.iter().enumerate() {
                    if lu == 0 {
                        continue;
                    }
                    for h in 0..len - u {
                        if en[h] == 0 {
                            continue;
                        }
                        let idx = b * len + u + h;
                        let sub = (lu as u64 * en[h] as u64) % pp;
                        out[idx] = ((out[idx] as u64 + pp - sub) % pp) as u32;
                    }
                }
            }
        }
        out
    }

    pub fn contains(&self, w: &[u32], p: u32) -> bool {
        self.residual(w, p).iter().all(|&x| x == 0)
    }

    /// Same generators with entries cut or zero-padded to a new length.
    pub fn with_len(&self, len: usize) -> FreeGens {
        let mut out = FreeGens {
            m: self.m,
            e: self.e,
            len,
            pivots: self.pivots.clone(),
            coeffs: vec![0; self.m * self.e * len],
        };
        let keep = len.min(self.len);
        for b in 0..self.m {
            for a in 0..self.e {
                out.entry_mut(b, a)[..keep].copy_from_slice(&self.entry(b, a)[..keep]);
            }
        }
        out
    }

    /// Canonical generators of an ε-stable subspace of H^m, or None if it is not free.
    pub fn from_subspace(u: &Subspace, m: usize, len: usize) -> Option<FreeGens> {
        let p = u.p();
        if u.ambient() != m * len || len == 0 || !u.dim().is_multiple_of(len) {
            return None;
        }
        let e = u.dim() / len;
        if e == 0 {
            return Some(FreeGens::zero_rank(m, len));
        }
        let b = u.basis();
        let top: Vec<usize> = (0..m).map(|r| r * len).collect();
        let w = Subspace::span(&b.select_cols(&top));
        if w.dim() != e {
            return None;
        }
        let pivots = w.pivots().to_vec();
        let cols: Vec<usize> = pivots.iter().flat_map(|&pa| (0..len).map(move |t| pa * len + t)).collect();
        let s_inv = b.select_cols(&cols).inverse()?;
        let mut out = FreeGens { m, e, len, pivots, coeffs: vec![0; m * e * len] };
        for a in 0..e {
            // coefficients c with c·S = unit at (p_a, 0)
            let c = s_inv.row(a * len);
            let mut x = vec![0u64; m * len];
            for (r, &cr) in c.iter().enumerate() {
                if cr == 0 {
                    continue;
                }
                for (xi, &v) in x.iter_mut().zip(b.row(r)) {
                    *xi = (*xi + cr as u64 * v as u64) % p as u64;
                }
            }
            for bb in 0..m {
                for s in 0..len {
                    out.entry_mut(bb, a)[s] = x[bb * len + s] as u32;
                }
            }
        }
        Some(out)
    }
}

/// Number of free rank-e submodules of H^m over F_q.
pub fn candidate_count(m: usize, e: usize, len: usize, q: u64) -> u128 {
    if e > m {
        return 0;
    }
    let g = gaussian_binomial(m, e, q);
    let exp = (len.saturating_sub(1) * e * (m - e)) as u32;
    (q as u128).checked_pow(exp).and_then(|x| x.checked_mul(g)).unwrap_or(u128::MAX)
}

/// All free rank-e submodules of H^m, each once, as canonical generators.
pub struct Candidates {
    p: u32,
    patterns: std::vec::IntoIter<Vec<usize>>,
    slots: Vec<usize>,
    digits: Vec<u32>,
    current: Option<FreeGens>,
    fresh: bool,
    m: usize,
    e: usize,
    len: usize,
}

impl Candidates {
    pub fn new(m: usize, e: usize, len: usize, p: u32) -> Self {
        let mut it = Candidates {
            p,
            patterns: pivot_patterns(m, e).into_iter(),
            slots: vec![],
            digits: vec![],
            current: None,
            fresh: false,
            m,
            e,
            len,
        };
        it.next_pattern();
        it
    }

    fn next_pattern(&mut self) {
        self.current = None;
        if let Some(piv) = self.patterns.next() {
            let (m, e, len) = (self.m, self.e, self.len);
            let mut g = FreeGens { m, e, len, pivots: piv.clone(), coeffs: vec![0; m * e * len] };
            let mut slots = Vec::new();
            for (a, &pa) in piv.iter().enumerate() {
                g.entry_mut(pa, a)[0] = 1;
            }
            for b in 0..m {
                if piv.contains(&b) {
                    continue;
                }
                for (a, &pa) in piv.iter().enumerate() {
                    let base = (b * e + a) * len;
                    if b > pa {
                        slots.push(base);
                    }
                    slots.extend((1..len).map(|h| base + h));
                }
            }
            self.digits = vec![0; slots.len()];
            self.slots = slots;
            self.current = Some(g);
            self.fresh = true;
        }
    }
}

impl Iterator for Candidates {
    type Item = FreeGens;

    fn next(&mut self) -> Option<FreeGens> {
        loop {
            let g = self.current.as_mut()?;
            if self.fresh {
                self.fresh = false;
                return Some(g.clone());
            }
            let mut pos = 0;
            while pos < self.digits.len() {
                self.digits[pos] += 1;
                if self.digits[pos] < self.p {
                    g.coeffs[self.slots[pos]] = self.digits[pos];
                    break;
                }
                self.digits[pos] = 0;
                g.coeffs[self.slots[pos]] = 0;
                pos += 1;
            }
            if pos == self.digits.len() {
                self.next_pattern();
                continue;
            }
            return Some(g.clone());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn eps_stable_free(u: &Subspace, m: usize, len: usize, p: u32) -> bool {
        let j = crate::hmod::jordan(p, len, m);
        u.is_invariant(&j) && FreeGens::from_subspace(u, m, len).is_some()
    }

    #[test]
    fn counts_match_brute_force() {
        // all ε-stable free subspaces of H^m found by scanning every subspace
        for (m, len, p) in [(2, 2, 2), (2, 2, 3), (3, 2, 2), (2, 3, 2), (1, 3, 3)] {
            for e in 0..=m {
                let cands: Vec<FreeGens> = Candidates::new(m, e, len, p).collect();
                assert_eq!(cands.len() as u128, candidate_count(m, e, len, p as u64));
                let subs: HashSet<Subspace> = cands.iter().map(|g| g.to_subspace(p)).collect();
                assert_eq!(subs.len(), cands.len());
                let brute = crate::linalg::enumerate_subspaces(m * len, e * len, p)
                    .filter(|u| eps_stable_free(u, m, len, p))
                    .count();
                assert_eq!(brute, cands.len(), "m={m} len={len} p={p} e={e}");
                for g in &cands {
                    let u = g.to_subspace(p);
                    assert_eq!(u.dim(), g.dim());
                    assert_eq!(FreeGens::from_subspace(&u, m, len).as_ref(), Some(g));
                    for a in 0..e {
                        for t in 0..len {
                            assert!(g.contains(&g.vector(a, t), p));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn membership_detects_outsiders() {
        let p = 3;
        let g = Candidates::new(2, 1, 2, p).nth(4).unwrap();
        let u = g.to_subspace(p);
        for idx in 0..p.pow(4) {
            let v: Vec<u32> = crate::sampling::digits(idx as u64, p, 4).iter().map(|&x| x as u32).collect();
            assert_eq!(g.contains(&v, p), u.contains(&v));
        }
    }

    #[test]
    fn non_free_rejected() {
        // ε·H ⊂ H is ε-stable but not free
        let p = 2;
        let u = Subspace::span(&FpMatrix::from_vec(p, 1, 2, vec![0, 1]));
        assert!(FreeGens::from_subspace(&u, 1, 2).is_none());
    }
}
