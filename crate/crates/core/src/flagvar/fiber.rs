//! The reduction map on flags, its fibers as solution sets of affine linear systems, and the
//! point-count ratio between consecutive k.

use serde::Serialize;

use super::gens::FreeGens;
use super::tangent::{flag_tensors, hom_tensor, TensorModule};
use super::{point_count, FlagOfSubmodules};
use crate::cartan::RankVector;
use crate::error::{Error, Result};
use crate::hmod::{normalize, HModule};
use crate::homext::Hom;
use crate::linalg::FpMatrix;
use crate::reduce::{reduce, reduce_to};

/// U_• ↦ U_•/ε^{k−1}U_• inside M/ε^{k−1}M.
pub fn reduce_flag(m: &HModule, flag: &FlagOfSubmodules) -> Result<FlagOfSubmodules> {
    flag.validate(m)?;
    let red = reduce(m)?;
    let layers = flag
        .layers
        .iter()
        .map(|l| l.iter().zip(&red.projection).map(|(u, q)| u.map(q)).collect())
        .collect();
    let out = FlagOfSubmodules { brseq: flag.brseq.clone(), layers };
    out.validate(&red.module)?;
    Ok(out)
}

#[derive(Clone, Debug)]
pub enum Fiber {
    Empty,
    /// an affine space: one point of it and its dimension
    Affine { dim: usize, particular: FlagOfSubmodules },
}

#[derive(Clone, Debug)]
pub struct FiberReport {
    pub fiber: Fiber,
    pub unknowns: usize,
    pub equations: usize,
    /// dim Hom over H(1) ⊗ A_l between ι(U)/ε and (M̄^(l)/ι(U))/ε, the expected fiber dimension
    pub hom_dim: usize,
}

impl FiberReport {
    pub fn dim(&self) -> Option<usize> {
        match &self.fiber {
            Fiber::Empty => None,
            Fiber::Affine { dim, .. } => Some(*dim),
        }
    }
}

/// Residuals of the closure and nesting conditions for a tuple of generator matrices.
fn residuals(m: &HModule, gens: &[Vec<FreeGens>]) -> Vec<u32> {
    let p = m.p();
    let mut out = Vec::new();
    for (layer, g) in gens.iter().enumerate() {
        for (idx, pr) in m.datum().omega().iter().enumerate() {
            for copy in 0..pr.g {
                let a_mat = m.arrow(idx, copy);
                for a in 0..g[pr.j].e {
                    for t in 0..pr.f_ij {
                        out.extend(g[pr.i].residual(&a_mat.mul_vec(&g[pr.j].vector(a, t)), p));
                    }
                }
            }
        }
        if layer + 1 < gens.len() {
            for (i, x) in g.iter().enumerate() {
                for a in 0..x.e {
                    out.extend(gens[layer + 1][i].residual(&x.vector(a, 0), p));
                }
            }
        }
    }
    out
}

fn reduce_tensor(x: &TensorModule) -> Result<TensorModule> {
    let reds = x.slots.iter().map(|s| reduce_to(s, 1)).collect::<Result<Vec<_>>>()?;
    let conn: Vec<Hom> = x
        .connectors
        .iter()
        .enumerate()
        .map(|(s, mu)| mu.iter().enumerate().map(|(i, f)| reds[s + 1].projection[i].mul(f).mul(&reds[s].section[i])).collect())
        .collect();
    TensorModule::new(reds.into_iter().map(|r| r.module).collect(), conn)
}

/// All flags U_• of M over H(k) whose reduction is the given flag of M/ε^{k−1}M.
///
/// The canonical generators of a lift agree with those of the base flag below degree
/// (k−1)c_i; the remaining c_i coefficients of each non-pivot entry are the unknowns, and the
/// closure and nesting conditions are affine in them.
pub fn fiber_of_reduction(m: &HModule, base: &FlagOfSubmodules) -> Result<FiberReport> {
    let k = m.k();
    if k < 2 {
        return Err(Error::KTooSmall { k, min: 2 });
    }
    m.rank_vector()?;
    let red = reduce(m)?;
    if let Err(e) = base.validate(&red.module) {
        return Err(Error::FlagNotInReduction(e.to_string()));
    }
    let (ms, to_orig) = if m.is_standard() {
        (m.clone(), None)
    } else {
        let (s, p) = normalize(m)?;
        (s, Some(p))
    };
    let red_s = reduce(&ms)?;
    let n = m.datum().n();
    let p = m.p();
    // base layers in the coordinates of the standard reduction
    let layers: Vec<Vec<crate::linalg::Subspace>> = match &to_orig {
        None => base.layers.clone(),
        Some(pm) => {
            let t: Vec<FpMatrix> = (0..n)
                .map(|i| red_s.projection[i].mul(&pm[i].inverse().expect("basis change")).mul(&red.section[i]))
                .collect();
            base.layers.iter().map(|l| l.iter().zip(&t).map(|(u, ti)| u.map(ti)).collect()).collect()
        }
    };
    let datum = m.datum();
    let mut gens: Vec<Vec<FreeGens>> = Vec::with_capacity(layers.len());
    for (li, l) in layers.iter().enumerate() {
        let mut row = Vec::with_capacity(n);
        for (i, u) in l.iter().enumerate() {
            let rank_i = ms.dims()[i] / ms.loop_len(i);
            let short = datum.loop_len(k - 1, i);
            let g = FreeGens::from_subspace(u, rank_i, short)
                .ok_or_else(|| Error::FlagNotInReduction(format!("layer {} is not free at vertex {}", li + 1, i + 1)))?;
            row.push(g.with_len(ms.loop_len(i)));
        }
        gens.push(row);
    }
    let mut unknowns = Vec::new();
    for (li, row) in gens.iter().enumerate() {
        for (i, g) in row.iter().enumerate() {
            let lo = datum.loop_len(k - 1, i);
            for b in g.non_pivots() {
                for a in 0..g.e {
                    for h in lo..g.len {
                        unknowns.push((li, i, (b * g.e + a) * g.len + h));
                    }
                }
            }
        }
    }
    let f0 = residuals(&ms, &gens);
    let mut jac = FpMatrix::zeros(p, f0.len(), unknowns.len());
    for (col, &(li, i, pos)) in unknowns.iter().enumerate() {
        gens[li][i].coeffs[pos] = 1;
        let f = residuals(&ms, &gens);
        gens[li][i].coeffs[pos] = 0;
        for (r, (&a, &b)) in f.iter().zip(&f0).enumerate() {
            jac.set(r, col, (a + p - b) % p);
        }
    }
    let rhs: Vec<u32> = f0.iter().map(|&x| (p - x) % p).collect();
    let (sub, quot) = flag_tensors(&red.module, base)?;
    let hom_dim = hom_tensor(&reduce_tensor(&sub)?, &reduce_tensor(&quot)?)?.dim;
    let fiber = match jac.solve(&rhs)? {
        None => Fiber::Empty,
        Some((x, ker)) => {
            for (&(li, i, pos), &v) in unknowns.iter().zip(&x) {
                gens[li][i].coeffs[pos] = v;
            }
            if residuals(&ms, &gens).iter().any(|&v| v != 0) {
                return Err(Error::Internal("lift equations are not affine".into()));
            }
            let flag_layers = gens
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .map(|(i, g)| {
                            let u = g.to_subspace(p);
                            match &to_orig {
                                Some(t) => u.map(&t[i]),
                                None => u,
                            }
                        })
                        .collect()
                })
                .collect();
            Fiber::Affine {
                dim: ker.rows(),
                particular: FlagOfSubmodules { brseq: base.brseq.clone(), layers: flag_layers },
            }
        }
    };
    Ok(FiberReport { fiber, unknowns: unknowns.len(), equations: f0.len(), hom_dim })
}

#[derive(Clone, Debug, Serialize)]
pub struct BundleRatio {
    pub q: u32,
    pub count_k: u64,
    pub count_reduced: u64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BundleReport {
    pub brseq: Vec<RankVector>,
    pub k: usize,
    /// d(brseq) over H(1)
    pub d: i64,
    pub rows: Vec<BundleRatio>,
    pub all_hold: bool,
}

/// count_k = q^d · count_{k−1} at each prime, for an integer-defined module over H(k).
pub fn bundle_ratio_check(m: &HModule, brseq: &[RankVector], primes: &[u32]) -> Result<BundleReport> {
    let k = m.k();
    if k < 2 {
        return Err(Error::KTooSmall { k, min: 2 });
    }
    if m.lift().is_none() {
        return Err(Error::NoIntegerLift);
    }
    let d = m.datum().flag_dimension(brseq)?;
    let mut rows = Vec::new();
    for &q in primes {
        let mq = m.reduce_mod_p(q)?;
        let count_k = point_count(&mq, brseq)?;
        let count_reduced = point_count(&reduce(&mq)?.module, brseq)?;
        let scale = (q as u128).pow(d.unsigned_abs() as u32);
        let holds = if d >= 0 {
            count_k as u128 == scale * count_reduced as u128
        } else {
            count_k as u128 * scale == count_reduced as u128
        };
        rows.push(BundleRatio { q, count_k, count_reduced, holds });
    }
    let all_hold = rows.iter().all(|r| r.holds);
    Ok(BundleReport { brseq: brseq.to_vec(), k, d, rows, all_hold })
}
