//! Flags of locally free submodules: enumeration, point counts, tangent spaces, the reduction
//! map on flags and its fibers.

mod count;
mod fiber;
pub mod gens;
mod tangent;

pub use count::{closed_form_count, counting_polynomial, tabulate_counts, PointCountTable};
pub use fiber::{bundle_ratio_check, fiber_of_reduction, reduce_flag, BundleRatio, BundleReport, Fiber, FiberReport};
pub use tangent::{flag_tensors, hom_tensor, repetitive_module, tangent_dimension, TensorHom, TensorModule};

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::cartan::RankVector;
use crate::error::{Error, Result};
use crate::hmod::{normalize, sub_quotient, HModule};
use crate::linalg::{FpMatrix, Subspace};
use gens::{candidate_count, Candidates, FreeGens};

/// Default cap on the number of candidate submodules per vertex and layer.
pub const DEFAULT_CANDIDATE_LIMIT: u128 = 10_000_000;

/// A chain 0 ⊆ U_1 ⊆ … ⊆ U_{l−1} ⊆ M given by per-vertex subspaces.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FlagOfSubmodules {
    pub brseq: Vec<RankVector>,
    /// layers[m][i] = U_{m+1} at vertex i
    pub layers: Vec<Vec<Subspace>>,
}

impl Serialize for FlagOfSubmodules {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            brseq: &'a [RankVector],
            layers: Vec<Vec<Vec<Vec<u32>>>>,
        }
        let layers = self
            .layers
            .iter()
            .map(|l| l.iter().map(|u| (0..u.dim()).map(|r| u.basis().row(r).to_vec()).collect()).collect())
            .collect();
        Repr { brseq: &self.brseq, layers }.serialize(s)
    }
}

/// Cumulative rank vectors e_m = r_1 + … + r_m for m = 1..l−1.
pub fn cumulative_ranks(brseq: &[RankVector]) -> Vec<RankVector> {
    let mut out = Vec::new();
    let mut acc = RankVector::zero(brseq.first().map_or(0, |r| r.len()));
    for r in &brseq[..brseq.len().saturating_sub(1)] {
        acc = &acc + r;
        out.push(acc.clone());
    }
    out
}

fn check_brseq(m: &HModule, brseq: &[RankVector]) -> Result<RankVector> {
    let rank = m.rank_vector()?;
    if brseq.is_empty() {
        return Err(Error::InvalidInput("empty rank-vector sequence".into()));
    }
    let n = m.datum().n();
    let mut total = RankVector::zero(n);
    for r in brseq {
        if r.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: r.len() });
        }
        total = &total + r;
    }
    if total != rank {
        if total.leq(&rank) {
            return Err(Error::InvalidInput(format!("sequence sums to {total}, module rank is {rank}")));
        }
        return Err(Error::RankTooLarge(format!("sequence sums to {total}, module rank is {rank}")));
    }
    Ok(rank)
}

impl FlagOfSubmodules {
    pub fn len(&self) -> usize {
        self.brseq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.brseq.is_empty()
    }

    /// Layers are nested submodules, locally free with locally free quotients, of the declared
    /// ranks.
    pub fn validate(&self, m: &HModule) -> Result<()> {
        check_brseq(m, &self.brseq)?;
        let ranks = cumulative_ranks(&self.brseq);
        if self.layers.len() != ranks.len() {
            return Err(Error::LengthMismatch { expected: ranks.len(), got: self.layers.len() });
        }
        for (idx, (layer, e)) in self.layers.iter().zip(&ranks).enumerate() {
            let sq = sub_quotient(m, layer)?;
            if sq.sub.rank_vector()? != *e {
                return Err(Error::InvalidInput(format!("layer {} does not have rank {e}", idx + 1)));
            }
            sq.quotient.rank_vector()?;
            if idx + 1 < self.layers.len() {
                for (u, w) in layer.iter().zip(&self.layers[idx + 1]) {
                    if !w.contains_subspace(u) {
                        return Err(Error::NotInvariant(format!("layer {} is not inside layer {}", idx + 1, idx + 2)));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Flag enumeration over a module in standard form. Points are canonical generator matrices
/// per layer and vertex.
pub struct FlagSpace {
    pub(crate) module: HModule,
    /// standard coordinates → coordinates of the module given by the caller
    pub(crate) to_orig: Option<Vec<FpMatrix>>,
    pub(crate) brseq: Vec<RankVector>,
    pub(crate) ranks: Vec<RankVector>,
    /// (layer, vertex) in visiting order
    order: Vec<(usize, usize)>,
}

impl FlagSpace {
    pub fn new(m: &HModule, brseq: &[RankVector]) -> Result<Self> {
        Self::with_limit(m, brseq, DEFAULT_CANDIDATE_LIMIT)
    }

    pub fn with_limit(m: &HModule, brseq: &[RankVector], limit: u128) -> Result<Self> {
        check_brseq(m, brseq)?;
        let (module, to_orig) = if m.is_standard() {
            (m.clone(), None)
        } else {
            let (s, p) = normalize(m)?;
            (s, Some(p))
        };
        let ranks = cumulative_ranks(brseq);
        let rank = module.rank_vector()?;
        let n = module.datum().n();
        for e in &ranks {
            for i in 0..n {
                let c = candidate_count(rank[i], e[i], module.loop_len(i), module.p() as u64);
                if c > limit {
                    return Err(Error::BudgetExceeded(format!(
                        "{c} candidate submodules at vertex {}, limit {limit}",
                        i + 1
                    )));
                }
            }
        }
        let mut order = Vec::new();
        for layer in (0..ranks.len()).rev() {
            for i in 0..n {
                order.push((layer, i));
            }
        }
        Ok(FlagSpace { module, to_orig, brseq: brseq.to_vec(), ranks, order })
    }

    pub fn module(&self) -> &HModule {
        &self.module
    }

    fn candidates(&self, layer: usize, i: usize) -> Candidates {
        let m = &self.module;
        Candidates::new(m.dims()[i] / m.loop_len(i), self.ranks[layer][i], m.loop_len(i), m.p())
    }

    /// Does candidate `g` for (layer, i) fit with what is already placed?
    fn admissible(&self, state: &[Vec<Option<FreeGens>>], layer: usize, i: usize, g: &FreeGens) -> bool {
        let m = &self.module;
        let p = m.p();
        if layer + 1 < self.ranks.len() {
            let outer = state[layer + 1][i].as_ref().expect("outer layer placed first");
            if !(0..g.e).all(|a| outer.contains(&g.vector(a, 0), p)) {
                return false;
            }
        }
        for (idx, pr) in m.datum().omega().iter().enumerate() {
            let (src, tgt) = if pr.i == i {
                (state[layer][pr.j].as_ref(), Some(g))
            } else if pr.j == i {
                (Some(g), state[layer][pr.i].as_ref())
            } else {
                continue;
            };
            let (Some(xs), Some(xt)) = (src, tgt) else { continue };
            for gg in 0..pr.g {
                let a_mat = m.arrow(idx, gg);
                for a in 0..xs.e {
                    for t in 0..pr.f_ij {
                        if !xt.contains(&a_mat.mul_vec(&xs.vector(a, t)), p) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    fn dfs<F: FnMut(&[Vec<Option<FreeGens>>])>(&self, pos: usize, state: &mut Vec<Vec<Option<FreeGens>>>, f: &mut F) {
        if pos == self.order.len() {
            f(state);
            return;
        }
        let (layer, i) = self.order[pos];
        for g in self.candidates(layer, i) {
            if self.admissible(state, layer, i, &g) {
                state[layer][i] = Some(g);
                self.dfs(pos + 1, state, f);
                state[layer][i] = None;
            }
        }
    }

    fn empty_state(&self) -> Vec<Vec<Option<FreeGens>>> {
        vec![vec![None; self.module.datum().n()]; self.ranks.len()]
    }

    /// Calls `f` on every flag point, sequentially and in a fixed order.
    pub fn for_each<F: FnMut(&[Vec<FreeGens>])>(&self, mut f: F) {
        if self.ranks.is_empty() {
            f(&[]);
            return;
        }
        let mut state = self.empty_state();
        self.dfs(0, &mut state, &mut |s| {
            let pt: Vec<Vec<FreeGens>> = s.iter().map(|l| l.iter().map(|g| g.clone().unwrap()).collect()).collect();
            f(&pt)
        });
    }

    /// Folds over all points, splitting the first placement across worker threads.
    pub fn fold<T, I, F, C>(&self, init: I, f: F, combine: C) -> T
    where
        T: Send,
        I: Fn() -> T + Sync + Send,
        F: Fn(&mut T, &[Vec<FreeGens>]) + Sync + Send,
        C: Fn(T, T) -> T + Sync + Send,
    {
        if self.ranks.is_empty() {
            let mut acc = init();
            f(&mut acc, &[]);
            return acc;
        }
        let (layer0, i0) = self.order[0];
        self.candidates(layer0, i0)
            .par_bridge()
            .map(|g| {
                let mut acc = init();
                let mut state = self.empty_state();
                if self.admissible(&state, layer0, i0, &g) {
                    state[layer0][i0] = Some(g);
                    self.dfs(1, &mut state, &mut |s| {
                        let pt: Vec<Vec<FreeGens>> =
                            s.iter().map(|l| l.iter().map(|g| g.clone().unwrap()).collect()).collect();
                        f(&mut acc, &pt)
                    });
                }
                acc
            })
            .reduce(&init, &combine)
    }

    pub fn count(&self) -> u64 {
        self.fold(|| 0u64, |acc, _| *acc += 1, |a, b| a + b)
    }

    /// The flag at a point, in the coordinates of the standard module.
    pub fn to_flag_standard(&self, pt: &[Vec<FreeGens>]) -> FlagOfSubmodules {
        let p = self.module.p();
        let layers = pt.iter().map(|l| l.iter().map(|g| g.to_subspace(p)).collect()).collect();
        FlagOfSubmodules { brseq: self.brseq.clone(), layers }
    }

    /// The flag of submodules at a point, in the caller's coordinates.
    pub fn to_flag(&self, pt: &[Vec<FreeGens>]) -> FlagOfSubmodules {
        let p = self.module.p();
        let layers = pt
            .iter()
            .map(|l| {
                l.iter()
                    .enumerate()
                    .map(|(i, g)| {
                        let u = g.to_subspace(p);
                        match &self.to_orig {
                            Some(t) => u.map(&t[i]),
                            None => u,
                        }
                    })
                    .collect()
            })
            .collect();
        FlagOfSubmodules { brseq: self.brseq.clone(), layers }
    }
}

/// All locally free submodules of rank e, as per-vertex subspaces.
pub fn enumerate_locally_free_submodules(m: &HModule, e: &RankVector) -> Result<Vec<Vec<Subspace>>> {
    let rank = m.rank_vector()?;
    if e.len() != rank.len() {
        return Err(Error::LengthMismatch { expected: rank.len(), got: e.len() });
    }
    if !e.leq(&rank) {
        return Err(Error::RankTooLarge(format!("{e} is not below {rank}")));
    }
    let brseq = vec![e.clone(), &rank - e];
    Ok(enumerate_flags(m, &brseq)?.into_iter().map(|f| f.layers.into_iter().next().unwrap()).collect())
}

pub fn enumerate_flags(m: &HModule, brseq: &[RankVector]) -> Result<Vec<FlagOfSubmodules>> {
    let fs = FlagSpace::new(m, brseq)?;
    let mut out = Vec::new();
    fs.for_each(|pt| out.push(fs.to_flag(pt)));
    Ok(out)
}

/// Number of flags of the given type, by streaming enumeration.
pub fn point_count(m: &HModule, brseq: &[RankVector]) -> Result<u64> {
    Ok(FlagSpace::new(m, brseq)?.count())
}

#[derive(Clone, Debug, Serialize)]
pub struct TangentSurvey {
    pub points: u64,
    pub min: Option<usize>,
    pub max: Option<usize>,
    /// Σ_{a<b} ⟨r_a, r_b⟩ over H(k)
    pub expected: i64,
}

impl TangentSurvey {
    /// Constant over all points and equal to the expected value (vacuous for no points).
    pub fn constant_and_expected(&self) -> bool {
        match (self.min, self.max) {
            (Some(a), Some(b)) => a == b && a as i64 == self.expected,
            _ => true,
        }
    }
}

/// Tangent dimension at every flag point. Grassmannians use the adapted-basis Hom solve,
/// longer flags the tensor-module solve.
pub fn tangent_survey(m: &HModule, brseq: &[RankVector]) -> Result<TangentSurvey> {
    let fs = FlagSpace::new(m, brseq)?;
    let expected = m.datum().flag_dimension_k(m.k(), brseq)?;
    type Acc = Result<(u64, Option<usize>, Option<usize>)>;
    let step = |acc: &mut Acc, pt: &[Vec<FreeGens>]| {
        let Ok((n, lo, hi)) = acc else { return };
        let t = if pt.len() == 1 {
            tangent::tangent_fast(&fs.module, &pt[0])
        } else if pt.is_empty() {
            Ok(0)
        } else {
            tangent_dimension(&fs.module, &fs.to_flag_standard(pt))
        };
        match t {
            Ok(t) => {
                *n += 1;
                *lo = Some(lo.map_or(t, |x| x.min(t)));
                *hi = Some(hi.map_or(t, |x| x.max(t)));
            }
            Err(e) => *acc = Err(e),
        }
    };
    let merge = |a: Acc, b: Acc| -> Acc {
        let (a, b) = (a?, b?);
        let mn = match (a.1, b.1) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        let mx = match (a.2, b.2) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (x, y) => x.or(y),
        };
        Ok((a.0 + b.0, mn, mx))
    };
    let (points, min, max) = fs.fold(|| Ok((0, None, None)), step, merge)?;
    Ok(TangentSurvey { points, min, max, expected })
}
