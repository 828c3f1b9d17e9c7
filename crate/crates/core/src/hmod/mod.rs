//! Representations of H(k) = H(C, kD, Ω) as tuples of matrices over F_p.

mod ops;
mod structure;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cartan::{CartanDatum, RankVector};
use crate::error::{Error, Result};
use crate::linalg::{check_prime, FpMatrix};

pub use ops::{direct_sum, direct_sum_all, normalize, random_locally_free, random_structure, sub_quotient, SubQuotient};
pub use structure::{from_structure_matrices, to_structure_matrices, StructureMatrices};

/// Integer matrices whose reductions mod p give the module.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntLift {
    pub eps: Vec<Vec<Vec<i64>>>,
    /// indexed by Ω pair, then parallel copy
    pub arrows: Vec<Vec<Vec<Vec<i64>>>>,
}

#[derive(Clone, Debug)]
pub struct HModule {
    datum: Arc<CartanDatum>,
    k: usize,
    p: u32,
    dims: Vec<usize>,
    eps: Vec<FpMatrix>,
    arrows: Vec<Vec<FpMatrix>>,
    lift: Option<IntLift>,
}

impl PartialEq for HModule {
    fn eq(&self, o: &Self) -> bool {
        self.k == o.k
            && self.p == o.p
            && self.dims == o.dims
            && self.eps == o.eps
            && self.arrows == o.arrows
            && *self.datum == *o.datum
    }
}

/// Which (if any) relation fails.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    H1(usize),
    H2 { i: usize, j: usize, g: usize },
}

/// Per-vertex evidence for local freeness: dimension, loop length and rank of Eps_i.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FreenessCertificate {
    pub vertex: usize,
    pub dim: usize,
    pub loop_len: usize,
    pub eps_rank: usize,
    pub free: bool,
}

/// Nilpotent Jordan form: `count` blocks of size `len`, basis e_{a,t} at a·len + t,
/// with e_{a,t} ↦ e_{a,t+1}.
pub fn jordan(p: u32, len: usize, count: usize) -> FpMatrix {
    let d = len * count;
    let mut m = FpMatrix::zeros(p, d, d);
    for a in 0..count {
        for t in 0..len.saturating_sub(1) {
            m.set(a * len + t + 1, a * len + t, 1);
        }
    }
    m
}

impl HModule {
    /// Builds and validates a module from explicit matrices.
    pub fn new(
        datum: Arc<CartanDatum>,
        k: usize,
        p: u32,
        eps: Vec<FpMatrix>,
        arrows: Vec<Vec<FpMatrix>>,
    ) -> Result<Self> {
        let m = Self::from_parts(datum, k, p, eps, arrows)?;
        m.validate()?;
        Ok(m)
    }

    /// Shape checks only; relations are not verified.
    pub fn from_parts(
        datum: Arc<CartanDatum>,
        k: usize,
        p: u32,
        eps: Vec<FpMatrix>,
        arrows: Vec<Vec<FpMatrix>>,
    ) -> Result<Self> {
        check_prime(p)?;
        if k == 0 {
            return Err(Error::KTooSmall { k, min: 1 });
        }
        let n = datum.n();
        if eps.len() != n {
            return Err(Error::ShapeMismatch(format!("{} loop matrices for {} vertices", eps.len(), n)));
        }
        let dims: Vec<usize> = eps.iter().map(|e| e.rows()).collect();
        for (i, e) in eps.iter().enumerate() {
            if !e.is_square() || e.p() != p {
                return Err(Error::ShapeMismatch(format!("loop matrix at vertex {} is not square over F_{}", i + 1, p)));
            }
        }
        if arrows.len() != datum.omega().len() {
            return Err(Error::ShapeMismatch(format!(
                "{} arrow families for {} oriented pairs",
                arrows.len(),
                datum.omega().len()
            )));
        }
        for (fam, a) in arrows.iter().zip(datum.omega()) {
            if fam.len() != a.g {
                return Err(Error::ShapeMismatch(format!(
                    "pair ({},{}) needs {} arrows, got {}",
                    a.i + 1,
                    a.j + 1,
                    a.g,
                    fam.len()
                )));
            }
            for m in fam {
                if m.rows() != dims[a.i] || m.cols() != dims[a.j] || m.p() != p {
                    return Err(Error::ShapeMismatch(format!(
                        "arrow ({},{}) has shape {}x{}, expected {}x{}",
                        a.i + 1,
                        a.j + 1,
                        m.rows(),
                        m.cols(),
                        dims[a.i],
                        dims[a.j]
                    )));
                }
            }
        }
        Ok(HModule { datum, k, p, dims, eps, arrows, lift: None })
    }

    /// Builds from integer matrices, keeping them as the integer lift.
    pub fn from_integer_matrices(
        datum: Arc<CartanDatum>,
        k: usize,
        p: u32,
        eps: Vec<Vec<Vec<i64>>>,
        arrows: Vec<Vec<Vec<Vec<i64>>>>,
    ) -> Result<Self> {
        let to_mat = |rows: &Vec<Vec<i64>>, cols: usize| FpMatrix::from_rows(p, cols, rows);
        let e: Vec<FpMatrix> =
            eps.iter().map(|m| to_mat(m, m.len())).collect::<Result<_>>().map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        let dims: Vec<usize> = eps.iter().map(|m| m.len()).collect();
        let mut a = Vec::new();
        if arrows.len() != datum.omega().len() {
            return Err(Error::ShapeMismatch(format!(
                "{} arrow families for {} oriented pairs",
                arrows.len(),
                datum.omega().len()
            )));
        }
        for (fam, pair) in arrows.iter().zip(datum.omega()) {
            let mut v = Vec::new();
            for m in fam {
                if m.len() != dims[pair.i] {
                    return Err(Error::ShapeMismatch(format!("arrow ({},{}) row count", pair.i + 1, pair.j + 1)));
                }
                v.push(to_mat(m, dims[pair.j]).map_err(|e| Error::ShapeMismatch(e.to_string()))?);
            }
            a.push(v);
        }
        let mut m = Self::new(datum, k, p, e, a)?;
        m.lift = Some(IntLift { eps, arrows });
        Ok(m)
    }

    pub(crate) fn new_trusted(
        datum: Arc<CartanDatum>,
        k: usize,
        p: u32,
        eps: Vec<FpMatrix>,
        arrows: Vec<Vec<FpMatrix>>,
    ) -> Self {
        let dims = eps.iter().map(|e| e.rows()).collect();
        HModule { datum, k, p, dims, eps, arrows, lift: None }
    }

    pub fn datum(&self) -> &CartanDatum {
        &self.datum
    }
    pub fn datum_arc(&self) -> &Arc<CartanDatum> {
        &self.datum
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }
    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }
    pub fn eps(&self, i: usize) -> &FpMatrix {
        &self.eps[i]
    }
    pub fn eps_all(&self) -> &[FpMatrix] {
        &self.eps
    }
    /// Arrow matrix for Ω pair `pair` (index into `datum().omega()`) and parallel copy `g`.
    pub fn arrow(&self, pair: usize, g: usize) -> &FpMatrix {
        &self.arrows[pair][g]
    }
    pub fn arrows_all(&self) -> &[Vec<FpMatrix>] {
        &self.arrows
    }
    pub fn lift(&self) -> Option<&IntLift> {
        self.lift.as_ref()
    }
    pub fn with_lift(mut self, lift: IntLift) -> Self {
        self.lift = Some(lift);
        self
    }
    pub fn without_lift(mut self) -> Self {
        self.lift = None;
        self
    }

    /// Loop length k·c_i.
    pub fn loop_len(&self, i: usize) -> usize {
        self.datum.loop_len(self.k, i)
    }

    pub fn is_zero(&self) -> bool {
        self.total_dim() == 0
    }

    pub fn same_algebra(&self, other: &HModule) -> Result<()> {
        if self.k != other.k || self.p != other.p || *self.datum != *other.datum {
            return Err(Error::DatumMismatch(format!(
                "(k={}, p={}) vs (k={}, p={})",
                self.k, self.p, other.k, other.p
            )));
        }
        Ok(())
    }

    pub fn check_relations(&self) -> Option<Violation> {
        for i in 0..self.datum.n() {
            if !self.eps[i].pow(self.loop_len(i)).is_zero() {
                return Some(Violation::H1(i));
            }
        }
        for (idx, a) in self.datum.omega().iter().enumerate() {
            let ei = self.eps[a.i].pow(a.f_ji);
            let ej = self.eps[a.j].pow(a.f_ij);
            for (g, m) in self.arrows[idx].iter().enumerate() {
                if ei.mul(m) != m.mul(&ej) {
                    return Some(Violation::H2 { i: a.i, j: a.j, g });
                }
            }
        }
        None
    }

    pub fn validate(&self) -> Result<()> {
        match self.check_relations() {
            None => Ok(()),
            Some(Violation::H1(i)) => Err(Error::RelationH1Violated(i)),
            Some(Violation::H2 { i, j, g }) => Err(Error::RelationH2Violated { i, j, g }),
        }
    }

    pub fn freeness_certificate(&self) -> Vec<FreenessCertificate> {
        (0..self.datum.n())
            .map(|i| {
                let d = self.dims[i];
                let l = self.loop_len(i);
                let rank = self.eps[i].rank();
                let free = d.is_multiple_of(l) && rank == d - d / l;
                FreenessCertificate { vertex: i, dim: d, loop_len: l, eps_rank: rank, free }
            })
            .collect()
    }

    pub fn is_locally_free(&self) -> bool {
        self.freeness_certificate().iter().all(|c| c.free)
    }

    pub fn rank_vector(&self) -> Result<RankVector> {
        let cert = self.freeness_certificate();
        if let Some(c) = cert.iter().find(|c| !c.free) {
            return Err(Error::NotLocallyFree(format!(
                "vertex {}: dim {}, loop length {}, rank of eps {}",
                c.vertex + 1,
                c.dim,
                c.loop_len,
                c.eps_rank
            )));
        }
        Ok(RankVector(cert.iter().map(|c| c.dim / c.loop_len).collect()))
    }

    /// True if every loop is in the standard Jordan form with blocks of full length.
    pub fn is_standard(&self) -> bool {
        (0..self.datum.n()).all(|i| {
            let l = self.loop_len(i);
            self.dims[i].is_multiple_of(l) && self.eps[i] == jordan(self.p, l, self.dims[i] / l)
        })
    }

    /// Rank vector, assuming standard form (no rank computations).
    pub fn standard_rank(&self) -> Option<RankVector> {
        if self.is_standard() {
            Some(RankVector((0..self.datum.n()).map(|i| self.dims[i] / self.loop_len(i)).collect()))
        } else {
            None
        }
    }

    /// The central element ε acting at vertex i, i.e. Eps_i^{c_i}.
    pub fn central_eps(&self, i: usize) -> FpMatrix {
        self.eps[i].pow(self.datum.sym(i))
    }

    /// All structure maps as (source, target, matrix): loops, then arrows.
    pub fn generators(&self) -> Vec<(usize, usize, &FpMatrix)> {
        let mut out: Vec<(usize, usize, &FpMatrix)> = (0..self.datum.n()).map(|i| (i, i, &self.eps[i])).collect();
        for (idx, a) in self.datum.omega().iter().enumerate() {
            for m in &self.arrows[idx] {
                out.push((a.j, a.i, m));
            }
        }
        out
    }

    /// Applies the per-vertex change of basis: returns P⁻¹·X·P on every map.
    pub fn conjugate(&self, p_mats: &[FpMatrix], p_inv: &[FpMatrix]) -> HModule {
        let eps = (0..self.datum.n()).map(|i| p_inv[i].mul(&self.eps[i]).mul(&p_mats[i])).collect();
        let arrows = self
            .datum
            .omega()
            .iter()
            .enumerate()
            .map(|(idx, a)| self.arrows[idx].iter().map(|m| p_inv[a.i].mul(m).mul(&p_mats[a.j])).collect())
            .collect();
        HModule::new_trusted(self.datum.clone(), self.k, self.p, eps, arrows)
    }

    /// E^r = ⊕ E_i^{r_i}.
    pub fn free(datum: Arc<CartanDatum>, k: usize, p: u32, r: &RankVector) -> Result<Self> {
        if r.len() != datum.n() {
            return Err(Error::LengthMismatch { expected: datum.n(), got: r.len() });
        }
        let eps = (0..datum.n()).map(|i| jordan(p, datum.loop_len(k, i), r[i])).collect();
        let arrows = datum
            .omega()
            .iter()
            .map(|a| {
                (0..a.g)
                    .map(|_| FpMatrix::zeros(p, datum.loop_len(k, a.i) * r[a.i], datum.loop_len(k, a.j) * r[a.j]))
                    .collect()
            })
            .collect();
        let m = HModule::from_parts(datum, k, p, eps, arrows)?;
        let lift = IntLift {
            eps: m.eps.iter().map(|e| e.to_i64_rows()).collect(),
            arrows: m.arrows.iter().map(|f| f.iter().map(|x| x.to_i64_rows()).collect()).collect(),
        };
        Ok(m.with_lift(lift))
    }

    /// The simple module S_i: one-dimensional at i, all maps zero.
    pub fn simple(datum: Arc<CartanDatum>, k: usize, p: u32, i: usize) -> Result<Self> {
        let n = datum.n();
        if i >= n {
            return Err(Error::VertexOutOfRange(i));
        }
        let dims: Vec<usize> = (0..n).map(|v| usize::from(v == i)).collect();
        let eps = dims.iter().map(|&d| FpMatrix::zeros(p, d, d)).collect();
        let arrows = datum
            .omega()
            .iter()
            .map(|a| (0..a.g).map(|_| FpMatrix::zeros(p, dims[a.i], dims[a.j])).collect())
            .collect();
        HModule::new(datum, k, p, eps, arrows)
    }

    pub fn zero(datum: Arc<CartanDatum>, k: usize, p: u32) -> Self {
        let n = datum.n();
        HModule::free(datum, k, p, &RankVector::zero(n)).expect("zero module")
    }

    /// Reduction of the integer lift modulo another prime.
    pub fn reduce_mod_p(&self, q: u32) -> Result<HModule> {
        let lift = self.lift.as_ref().ok_or(Error::NoIntegerLift)?;
        let m = HModule::from_integer_matrices(self.datum.clone(), self.k, q, lift.eps.clone(), lift.arrows.clone())
            .map_err(|e| Error::RelationBrokenAtPrime { p: q, reason: e.to_string() })?;
        if self.is_locally_free() && !m.is_locally_free() {
            return Err(Error::RelationBrokenAtPrime { p: q, reason: "local freeness lost".into() });
        }
        Ok(m)
    }

    /// Integer lift read off the entries (representatives in 0..p).
    pub fn integer_lift_of_entries(&self) -> IntLift {
        IntLift {
            eps: self.eps.iter().map(|e| e.to_i64_rows()).collect(),
            arrows: self.arrows.iter().map(|f| f.iter().map(|x| x.to_i64_rows()).collect()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a2() -> Arc<CartanDatum> {
        Arc::new(CartanDatum::a2())
    }

    /// The A_2 module over H(2) with bases 1,1' and 2,2', ε_1: 1 ↦ 1', ε_2: 2 ↦ 2', α: 2 ↦ 1'.
    pub(crate) fn small_example(p: u32) -> HModule {
        HModule::from_integer_matrices(
            a2(),
            2,
            p,
            vec![vec![vec![0, 0], vec![1, 0]], vec![vec![0, 0], vec![1, 0]]],
            vec![vec![vec![vec![0, 0], vec![1, 0]]]],
        )
        .unwrap()
    }

    #[test]
    fn free_modules_validate() {
        for r in [[0usize, 0], [1, 0], [2, 3]] {
            let m = HModule::free(a2(), 2, 5, &RankVector(r.to_vec())).unwrap();
            assert!(m.validate().is_ok());
            assert!(m.is_locally_free());
            assert_eq!(m.rank_vector().unwrap(), RankVector(r.to_vec()));
            assert!(m.is_standard());
        }
        let b2 = Arc::new(CartanDatum::b2());
        let e1 = HModule::free(b2, 3, 3, &RankVector(vec![1, 0])).unwrap();
        assert_eq!(e1.dims(), &[6, 0]);
        assert_eq!(*e1.eps(0), jordan(3, 6, 1));
    }

    #[test]
    fn h2_violation_detected() {
        let e = HModule::from_integer_matrices(
            a2(),
            2,
            5,
            vec![vec![vec![0]], vec![vec![0, 0], vec![1, 0]]],
            vec![vec![vec![vec![0, 1]]]],
        );
        assert_eq!(e.unwrap_err(), Error::RelationH2Violated { i: 0, j: 1, g: 0 });
        let h1 = HModule::from_integer_matrices(
            a2(),
            1,
            5,
            vec![vec![vec![1]], vec![vec![0]]],
            vec![vec![vec![vec![0]]]],
        );
        assert_eq!(h1.unwrap_err(), Error::RelationH1Violated(0));
    }

    #[test]
    fn small_example_is_locally_free() {
        let m = small_example(5);
        assert!(m.validate().is_ok());
        assert!(m.is_locally_free());
        assert_eq!(m.rank_vector().unwrap(), RankVector(vec![1, 1]));
        let e2 = HModule::free(a2(), 2, 5, &RankVector(vec![0, 1])).unwrap();
        assert_eq!(e2.rank_vector().unwrap(), RankVector(vec![0, 1]));
    }

    #[test]
    fn simple_not_locally_free() {
        let s = HModule::simple(a2(), 2, 3, 0).unwrap();
        assert!(!s.is_locally_free());
        assert!(matches!(s.rank_vector(), Err(Error::NotLocallyFree(_))));
        let s1 = HModule::simple(a2(), 1, 3, 0).unwrap();
        assert!(s1.is_locally_free());
    }

    #[test]
    fn reduce_mod_other_primes() {
        let m = small_example(5);
        for q in [2, 3, 7, 11] {
            let r = m.reduce_mod_p(q).unwrap();
            assert!(r.is_locally_free());
        }
        // loop entry 3 vanishes mod 3
        let bad = HModule::from_integer_matrices(
            a2(),
            2,
            5,
            vec![vec![vec![0, 0], vec![3, 0]], vec![vec![0, 0], vec![1, 0]]],
            vec![vec![vec![vec![0, 0], vec![1, 0]]]],
        )
        .unwrap();
        assert!(bad.is_locally_free());
        assert!(matches!(bad.reduce_mod_p(3), Err(Error::RelationBrokenAtPrime { p: 3, .. })));
        let no_lift = small_example(5).without_lift();
        assert_eq!(no_lift.reduce_mod_p(3).unwrap_err(), Error::NoIntegerLift);
    }

    #[test]
    fn central_element_commutes() {
        let m = small_example(7);
        let e0 = m.central_eps(0);
        let e1 = m.central_eps(1);
        assert_eq!(e0.mul(m.arrow(0, 0)), m.arrow(0, 0).mul(&e1));
        assert!(e0.pow(m.k()).is_zero());
    }
}
