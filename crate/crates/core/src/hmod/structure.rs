use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{jordan, normalize, HModule, IntLift};
use crate::cartan::{CartanDatum, RankVector};
use crate::error::{Error, Result};
use crate::linalg::FpMatrix;

/// Modulated-graph presentation of a locally free module of rank r.
///
/// For each Ω pair (i,j), `blocks[pair]` is an r_i × (|c_ij|·r_j) matrix over
/// H_i = F[ε_i]/(ε_i^{k·c_i}); each entry is a coefficient list (constant term first).
/// Column `b·|c_ij| + g·f_ij + t` pairs generator b of E_j^{r_j} with the H_i-basis element
/// α^(g)·ε_j^t, t < f_ij.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureMatrices {
    pub k: usize,
    pub rank: RankVector,
    pub blocks: Vec<Vec<Vec<Vec<i64>>>>,
}

impl StructureMatrices {
    pub fn zero(datum: &CartanDatum, k: usize, rank: &RankVector) -> Self {
        let blocks = datum
            .omega()
            .iter()
            .map(|a| vec![vec![vec![0i64; datum.loop_len(k, a.i)]; a.c_abs * rank[a.j]]; rank[a.i]])
            .collect();
        StructureMatrices { k, rank: rank.clone(), blocks }
    }

    pub fn check_shape(&self, datum: &CartanDatum) -> Result<()> {
        if self.rank.len() != datum.n() {
            return Err(Error::LengthMismatch { expected: datum.n(), got: self.rank.len() });
        }
        if self.k == 0 {
            return Err(Error::KTooSmall { k: 0, min: 1 });
        }
        if self.blocks.len() != datum.omega().len() {
            return Err(Error::ShapeMismatch(format!(
                "{} structure blocks for {} oriented pairs",
                self.blocks.len(),
                datum.omega().len()
            )));
        }
        for (blk, a) in self.blocks.iter().zip(datum.omega()) {
            let cols = a.c_abs * self.rank[a.j];
            if blk.len() != self.rank[a.i] || blk.iter().any(|row| row.len() != cols) {
                return Err(Error::ShapeMismatch(format!(
                    "block ({},{}) must be {}x{}",
                    a.i + 1,
                    a.j + 1,
                    self.rank[a.i],
                    cols
                )));
            }
            let max = datum.loop_len(self.k, a.i);
            for row in blk {
                for e in row {
                    if e.len() > max {
                        return Err(Error::EntryDegreeOverflow { len: e.len(), max });
                    }
                }
            }
        }
        Ok(())
    }

    /// Reinterprets every entry over the longer truncation for k+1 (zero padding).
    pub fn lift(&self, datum: &CartanDatum) -> Result<Self> {
        self.check_shape(datum)?;
        Ok(self.with_k(datum, self.k + 1))
    }

    /// Truncates or pads every entry for a new k.
    pub fn with_k(&self, datum: &CartanDatum, k: usize) -> Self {
        let blocks = self
            .blocks
            .iter()
            .zip(datum.omega())
            .map(|(blk, a)| {
                let len = datum.loop_len(k, a.i);
                blk.iter()
                    .map(|row| {
                        row.iter()
                            .map(|e| {
                                let mut e = e.clone();
                                e.resize(len, 0);
                                e
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        StructureMatrices { k, rank: self.rank.clone(), blocks }
    }

    /// Number of scalar parameters Σ k c_i |c_ij| r_i r_j.
    pub fn param_count(&self, datum: &CartanDatum) -> usize {
        datum.structure_param_count(self.k, &self.rank)
    }

    /// Overwrites every coefficient from a flat parameter vector (block, row, column, degree order).
    pub fn from_params(datum: &CartanDatum, k: usize, rank: &RankVector, params: &[i64]) -> Self {
        let mut s = Self::zero(datum, k, rank);
        let mut it = params.iter();
        for blk in &mut s.blocks {
            for row in blk {
                for e in row {
                    for c in e.iter_mut() {
                        *c = *it.next().expect("parameter vector too short");
                    }
                }
            }
        }
        assert!(it.next().is_none(), "parameter vector too long");
        s
    }
}

/// Expands structure matrices into arrow matrices over the integers.
fn integer_arrows(datum: &CartanDatum, s: &StructureMatrices) -> Vec<Vec<Vec<Vec<i64>>>> {
    let k = s.k;
    let r = &s.rank;
    datum
        .omega()
        .iter()
        .zip(&s.blocks)
        .map(|(a, blk)| {
            let li = datum.loop_len(k, a.i);
            let lj = datum.loop_len(k, a.j);
            let steps = lj / a.f_ij;
            (0..a.g)
                .map(|g| {
                    let mut m = vec![vec![0i64; lj * r[a.j]]; li * r[a.i]];
                    for (row_a, row) in blk.iter().enumerate() {
                        for b in 0..r[a.j] {
                            for t in 0..a.f_ij {
                                let poly = &row[b * a.c_abs + g * a.f_ij + t];
                                for u in 0..steps {
                                    let col = b * lj + u * a.f_ij + t;
                                    for (h, &coef) in poly.iter().enumerate() {
                                        let deg = h + u * a.f_ji;
                                        if deg < li && coef != 0 {
                                            m[row_a * li + deg][col] += coef;
                                        }
                                    }
                                }
                            }
                        }
                    }
                    m
                })
                .collect()
        })
        .collect()
}

pub fn from_structure_matrices(datum: Arc<CartanDatum>, s: &StructureMatrices, p: u32) -> Result<HModule> {
    s.check_shape(&datum)?;
    let k = s.k;
    let eps_int: Vec<Vec<Vec<i64>>> =
        (0..datum.n()).map(|i| jordan(2, datum.loop_len(k, i), s.rank[i]).to_i64_rows()).collect();
    let arrows_int = integer_arrows(&datum, s);
    let eps: Vec<FpMatrix> = (0..datum.n()).map(|i| jordan(p, datum.loop_len(k, i), s.rank[i])).collect();
    let dims: Vec<usize> = eps.iter().map(|e| e.rows()).collect();
    let arrows: Vec<Vec<FpMatrix>> = arrows_int
        .iter()
        .zip(datum.omega())
        .map(|(fam, a)| fam.iter().map(|m| FpMatrix::from_rows(p, dims[a.j], m)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let m = HModule::from_parts(datum, k, p, eps, arrows)?;
    debug_assert!(m.validate().is_ok());
    Ok(m.with_lift(IntLift { eps: eps_int, arrows: arrows_int }))
}

pub fn to_structure_matrices(m: &HModule) -> Result<StructureMatrices> {
    let rank = m.rank_vector()?;
    let std;
    let m = if m.is_standard() {
        m
    } else {
        std = normalize(m)?.0;
        &std
    };
    let datum = m.datum();
    let k = m.k();
    let mut s = StructureMatrices::zero(datum, k, &rank);
    for (idx, a) in datum.omega().iter().enumerate() {
        let li = datum.loop_len(k, a.i);
        let lj = datum.loop_len(k, a.j);
        for g in 0..a.g {
            let mat = m.arrow(idx, g);
            for row_a in 0..rank[a.i] {
                for b in 0..rank[a.j] {
                    for t in 0..a.f_ij {
                        let entry = &mut s.blocks[idx][row_a][b * a.c_abs + g * a.f_ij + t];
                        for (h, c) in entry.iter_mut().enumerate() {
                            *c = mat.get(row_a * li + h, b * lj + t) as i64;
                        }
                    }
                }
            }
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmod::random_structure;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_structure_gives_free_module() {
        let d = Arc::new(CartanDatum::b2());
        let r = RankVector(vec![2, 1]);
        let s = StructureMatrices::zero(&d, 2, &r);
        let m = from_structure_matrices(d.clone(), &s, 5).unwrap();
        assert_eq!(m, HModule::free(d, 2, 5, &r).unwrap());
    }

    #[test]
    fn counterexample_module_shape() {
        // A_2, k=2, r=(2,2), U_12 = [[0, ε... ]] given by the constant matrix (0 1; 0 0)
        let d = Arc::new(CartanDatum::a2());
        let s = StructureMatrices {
            k: 2,
            rank: RankVector(vec![2, 2]),
            blocks: vec![vec![vec![vec![0], vec![1]], vec![vec![0], vec![0]]]],
        };
        let m = from_structure_matrices(d, &s, 3).unwrap();
        assert!(m.validate().is_ok());
        assert_eq!(m.rank_vector().unwrap(), RankVector(vec![2, 2]));
        let a = m.arrow(0, 0);
        // generator 2 of M_2 goes to generator 1 of M_1, and ε-multiples follow
        assert_eq!(a.get(0, 2), 1);
        assert_eq!(a.get(1, 3), 1);
        assert_eq!(a.rank(), 2);
        let back = to_structure_matrices(&m).unwrap();
        assert_eq!(back, s.with_k(m.datum(), 2));
    }

    #[test]
    fn degree_overflow_rejected() {
        let d = Arc::new(CartanDatum::a2());
        let s = StructureMatrices { k: 1, rank: RankVector(vec![1, 1]), blocks: vec![vec![vec![vec![0, 1]]]] };
        assert!(matches!(from_structure_matrices(d, &s, 3), Err(Error::EntryDegreeOverflow { .. })));
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(CartanDatum::a2().structure_param_count(1, &RankVector(vec![1, 1])), 1);
        assert_eq!(CartanDatum::b2().structure_param_count(2, &RankVector(vec![1, 1])), 4);
        assert_eq!(CartanDatum::kronecker().structure_param_count(1, &RankVector(vec![1, 1])), 2);
    }

    fn data() -> Vec<Arc<CartanDatum>> {
        vec![
            Arc::new(CartanDatum::a2()),
            Arc::new(CartanDatum::b2()),
            Arc::new(CartanDatum::kronecker()),
            Arc::new(
                CartanDatum::new(vec![vec![2, -3], vec![-1, 2]], vec![1, 3], &[(1, 0)]).unwrap(),
            ),
        ]
    }

    proptest! {
        #[test]
        fn roundtrip_and_validity(which in 0usize..4, r0 in 0usize..3, r1 in 0usize..3, k in 1usize..4, seed in any::<u64>()) {
            let d = data()[which].clone();
            let p = 3;
            let r = RankVector(vec![r0, r1]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_structure(&d, k, p, &r, &mut rng);
            let m = from_structure_matrices(d.clone(), &s, p).unwrap();
            prop_assert!(m.validate().is_ok());
            prop_assert!(m.is_locally_free());
            prop_assert_eq!(m.rank_vector().unwrap(), r.clone());
            prop_assert_eq!(m.dims().to_vec(), r.dims(&d, k));
            let back = to_structure_matrices(&m).unwrap();
            prop_assert_eq!(&back, &s);
            for i in 0..d.n() {
                let e = m.central_eps(i);
                prop_assert!(e.pow(k).is_zero());
            }
            for (idx, a) in d.omega().iter().enumerate() {
                for g in 0..a.g {
                    prop_assert_eq!(m.central_eps(a.i).mul(m.arrow(idx, g)), m.arrow(idx, g).mul(&m.central_eps(a.j)));
                }
            }
        }
    }
}
