use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{from_structure_matrices, HModule, IntLift, StructureMatrices};
use crate::cartan::{CartanDatum, RankVector};
use crate::error::{Error, Result};
use crate::linalg::{FpMatrix, Subspace};

/// Uniform random structure matrices with coefficients in 0..p.
pub fn random_structure<R: Rng>(
    datum: &CartanDatum,
    k: usize,
    p: u32,
    r: &RankVector,
    rng: &mut R,
) -> StructureMatrices {
    let mut s = StructureMatrices::zero(datum, k, r);
    for blk in &mut s.blocks {
        for row in blk {
            for e in row {
                for c in e.iter_mut() {
                    *c = rng.gen_range(0..p) as i64;
                }
            }
        }
    }
    s
}

pub fn random_locally_free(datum: Arc<CartanDatum>, k: usize, p: u32, r: &RankVector, seed: u64) -> Result<HModule> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = random_structure(&datum, k, p, r, &mut rng);
    from_structure_matrices(datum, &s, p)
}

/// Conjugates a locally free module into standard Jordan form.
/// Returns the new module and per-vertex basis matrices P with new = P⁻¹·old·P.
pub fn normalize(m: &HModule) -> Result<(HModule, Vec<FpMatrix>)> {
    let rank = m.rank_vector()?;
    let p = m.p();
    let n = m.datum().n();
    let mut ps = Vec::with_capacity(n);
    let mut invs = Vec::with_capacity(n);
    for i in 0..n {
        let l = m.loop_len(i);
        let d = m.dims()[i];
        let e = m.eps(i);
        // generators: unit vectors spanning a complement of the radical im(Eps_i)
        let gens = Subspace::image(e).non_pivots();
        debug_assert_eq!(gens.len(), rank[i]);
        let mut pm = FpMatrix::zeros(p, d, d);
        for (a, &c) in gens.iter().enumerate() {
            let mut v = vec![0u32; d];
            v[c] = 1;
            for t in 0..l {
                for (row, &x) in v.iter().enumerate() {
                    pm.set(row, a * l + t, x);
                }
                v = e.mul_vec(&v);
            }
        }
        let inv = pm.inverse().ok_or_else(|| Error::Internal("normalizing basis is singular".into()))?;
        ps.push(pm);
        invs.push(inv);
    }
    let out = m.conjugate(&ps, &invs);
    debug_assert!(out.is_standard());
    Ok((out, ps))
}

/// A submodule and quotient, with the linear maps tying them to the ambient module.
#[derive(Clone, Debug)]
pub struct SubQuotient {
    pub sub: HModule,
    pub quotient: HModule,
    /// d_i × dim U_i, columns are the RREF basis of U_i
    pub inclusion: Vec<FpMatrix>,
    /// (d_i − dim U_i) × d_i
    pub projection: Vec<FpMatrix>,
    /// d_i × (d_i − dim U_i), a right inverse of `projection`
    pub section: Vec<FpMatrix>,
}

/// Restriction and corestriction of every structure map to U and M/U.
pub fn sub_quotient(m: &HModule, u: &[Subspace]) -> Result<SubQuotient> {
    let datum = m.datum_arc().clone();
    let n = datum.n();
    if u.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: u.len() });
    }
    for i in 0..n {
        if u[i].ambient() != m.dims()[i] || u[i].p() != m.p() {
            return Err(Error::ShapeMismatch(format!("subspace at vertex {} has wrong ambient space", i + 1)));
        }
    }
    let inclusion: Vec<FpMatrix> = u.iter().map(|s| s.basis().transpose()).collect();
    let qm: Vec<(FpMatrix, FpMatrix)> = u.iter().map(|s| s.quotient_map()).collect();
    let restrict = |x: &FpMatrix, s: usize, t: usize, what: &str| -> Result<FpMatrix> {
        let img = x.mul(&inclusion[s]);
        let mut out = FpMatrix::zeros(m.p(), u[t].dim(), u[s].dim());
        for c in 0..img.cols() {
            let col = img.col(c);
            let coords = u[t]
                .coords(&col)
                .ok_or_else(|| Error::NotInvariant(format!("{what} maps vertex {} out of the subspace", s + 1)))?;
            for (r, v) in coords.into_iter().enumerate() {
                out.set(r, c, v);
            }
        }
        Ok(out)
    };
    let corestrict = |x: &FpMatrix, s: usize, t: usize| qm[t].0.mul(x).mul(&qm[s].1);
    let mut sub_eps = Vec::with_capacity(n);
    let mut q_eps = Vec::with_capacity(n);
    for i in 0..n {
        sub_eps.push(restrict(m.eps(i), i, i, "loop")?);
        q_eps.push(corestrict(m.eps(i), i, i));
    }
    let mut sub_arr = Vec::new();
    let mut q_arr = Vec::new();
    for (idx, a) in datum.omega().iter().enumerate() {
        let mut sf = Vec::new();
        let mut qf = Vec::new();
        for g in 0..a.g {
            sf.push(restrict(m.arrow(idx, g), a.j, a.i, "arrow")?);
            qf.push(corestrict(m.arrow(idx, g), a.j, a.i));
        }
        sub_arr.push(sf);
        q_arr.push(qf);
    }
    let sub = HModule::new_trusted(datum.clone(), m.k(), m.p(), sub_eps, sub_arr);
    let quotient = HModule::new_trusted(datum, m.k(), m.p(), q_eps, q_arr);
    let (projection, section) = qm.into_iter().unzip();
    Ok(SubQuotient { sub, quotient, inclusion, projection, section })
}

pub fn direct_sum(m: &HModule, n: &HModule) -> Result<HModule> {
    m.same_algebra(n)?;
    let datum = m.datum_arc().clone();
    let eps = (0..datum.n()).map(|i| m.eps(i).block_diag(n.eps(i))).collect();
    let arrows = (0..datum.omega().len())
        .map(|idx| (0..datum.omega()[idx].g).map(|g| m.arrow(idx, g).block_diag(n.arrow(idx, g))).collect())
        .collect();
    let s = HModule::new_trusted(datum, m.k(), m.p(), eps, arrows);
    Ok(match (m.lift(), n.lift()) {
        (Some(a), Some(b)) => s.with_lift(IntLift {
            eps: (0..m.datum().n())
                .map(|i| block_diag_int(&a.eps[i], &b.eps[i], m.dims()[i], n.dims()[i]))
                .collect(),
            arrows: m
                .datum()
                .omega()
                .iter()
                .enumerate()
                .map(|(idx, pr)| {
                    a.arrows[idx]
                        .iter()
                        .zip(&b.arrows[idx])
                        .map(|(x, y)| block_diag_int(x, y, m.dims()[pr.j], n.dims()[pr.j]))
                        .collect()
                })
                .collect(),
        }),
        _ => s,
    })
}

fn block_diag_int(a: &[Vec<i64>], b: &[Vec<i64>], ac: usize, bc: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    for r in a {
        let mut row = r.clone();
        row.resize(ac + bc, 0);
        out.push(row);
    }
    for r in b {
        let mut row = vec![0; ac];
        row.extend_from_slice(r);
        out.push(row);
    }
    out
}

pub fn direct_sum_all(datum: Arc<CartanDatum>, k: usize, p: u32, parts: &[HModule]) -> Result<HModule> {
    let mut acc = HModule::zero(datum, k, p);
    for part in parts {
        acc = direct_sum(&acc, part)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn random_is_deterministic() {
        let d = Arc::new(CartanDatum::b2());
        let r = RankVector(vec![1, 2]);
        let a = random_locally_free(d.clone(), 2, 5, &r, 42).unwrap();
        let b = random_locally_free(d.clone(), 2, 5, &r, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn direct_sum_with_zero() {
        let d = Arc::new(CartanDatum::a2());
        let m = random_locally_free(d.clone(), 2, 3, &RankVector(vec![1, 2]), 7).unwrap();
        let z = HModule::zero(d.clone(), 2, 3);
        assert_eq!(direct_sum(&m, &z).unwrap(), m);
        let n = random_locally_free(d, 2, 3, &RankVector(vec![2, 0]), 8).unwrap();
        let s = direct_sum(&m, &n).unwrap();
        assert_eq!(s.rank_vector().unwrap(), RankVector(vec![3, 2]));
        assert!(s.lift().is_some());
        assert_eq!(s.reduce_mod_p(3).unwrap(), s);
    }

    #[test]
    fn not_invariant_detected() {
        let d = Arc::new(CartanDatum::a2());
        let e = HModule::free(d, 2, 3, &RankVector(vec![1, 0])).unwrap();
        // the top basis vector is not ε-stable
        let u = vec![Subspace::span(&FpMatrix::from_rows(3, 2, &[[1, 0]]).unwrap()), Subspace::zero(3, 0)];
        assert!(matches!(sub_quotient(&e, &u), Err(Error::NotInvariant(_))));
        let u = vec![Subspace::span(&FpMatrix::from_rows(3, 2, &[[0, 1]]).unwrap()), Subspace::zero(3, 0)];
        let sq = sub_quotient(&e, &u).unwrap();
        assert_eq!(sq.sub.dims(), &[1, 0]);
        assert!(!sq.sub.is_locally_free());
    }

    proptest! {
        #[test]
        fn normalize_conjugates(seed in any::<u64>(), g in proptest::collection::vec(0u32..5, 64)) {
            // scramble a random module by a random basis change, then normalize back
            let d = Arc::new(CartanDatum::b2());
            let r = RankVector(vec![1, 1]);
            let m = random_locally_free(d.clone(), 2, 5, &r, seed).unwrap();
            let dims = m.dims().to_vec();
            let mut ps = Vec::new();
            let mut off = 0;
            for &di in &dims {
                let mut pm = FpMatrix::from_vec(5, di, di, g[off..off + di * di].to_vec());
                off = (off + di * di) % 32;
                if pm.inverse().is_none() {
                    pm = FpMatrix::identity(5, di);
                }
                ps.push(pm);
            }
            let invs: Vec<FpMatrix> = ps.iter().map(|x| x.inverse().unwrap()).collect();
            let scrambled = m.conjugate(&ps, &invs);
            prop_assert!(scrambled.validate().is_ok());
            let (std, basis) = normalize(&scrambled).unwrap();
            prop_assert!(std.is_standard());
            prop_assert!(std.validate().is_ok());
            let binv: Vec<FpMatrix> = basis.iter().map(|x| x.inverse().unwrap()).collect();
            prop_assert_eq!(scrambled.conjugate(&basis, &binv), std);
        }

        #[test]
        fn quotient_of_free_summand_is_locally_free(seed in any::<u64>()) {
            // U = first summand of E^r ⊕ N inside the direct sum
            let d = Arc::new(CartanDatum::a2());
            let a = random_locally_free(d.clone(), 2, 3, &RankVector(vec![1, 1]), seed).unwrap();
            let b = random_locally_free(d.clone(), 2, 3, &RankVector(vec![0, 1]), seed ^ 1).unwrap();
            let s = direct_sum(&a, &b).unwrap();
            let u: Vec<Subspace> = (0..2)
                .map(|i| {
                    let da = a.dims()[i];
                    let ds = s.dims()[i];
                    let mut rows = FpMatrix::zeros(3, da, ds);
                    for t in 0..da { rows.set(t, t, 1); }
                    Subspace::span(&rows)
                })
                .collect();
            let sq = sub_quotient(&s, &u).unwrap();
            prop_assert!(sq.sub.validate().is_ok() && sq.quotient.validate().is_ok());
            prop_assert_eq!(sq.sub.rank_vector().unwrap(), RankVector(vec![1, 1]));
            prop_assert_eq!(sq.quotient.rank_vector().unwrap(), RankVector(vec![0, 1]));
            for i in 0..2 {
                prop_assert_eq!(sq.projection[i].mul(&sq.section[i]), FpMatrix::identity(3, sq.quotient.dims()[i]));
            }
        }
    }
}
