//! The reduction functor M ↦ M/ε^{k−1}M, lifting of structure matrices and chains, and the
//! checks built on them.

use std::sync::Arc;

use serde::Serialize;

use crate::cartan::{CartanDatum, RankVector};
use crate::error::{Error, Result};
use crate::hmod::{from_structure_matrices, HModule, IntLift, StructureMatrices};
use crate::homext::{are_isomorphic, find_rigid, is_hom, is_rigid, Hom};
use crate::linalg::{FpMatrix, Subspace};
use crate::sampling::SamplingConfig;

/// A reduced module with the maps identifying it as a quotient.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub module: HModule,
    /// M_i → M̄_i
    pub projection: Vec<FpMatrix>,
    /// M̄_i → M_i, right inverse of the projection
    pub section: Vec<FpMatrix>,
}

/// M/ε^j M as a module over H(j).
pub fn reduce_to(m: &HModule, j: usize) -> Result<Reduction> {
    if j == 0 || j > m.k() {
        return Err(Error::KTooSmall { k: m.k(), min: j.max(1) });
    }
    let datum = m.datum_arc().clone();
    let n = datum.n();
    let mut proj = Vec::with_capacity(n);
    let mut sec = Vec::with_capacity(n);
    let mut kept: Vec<Option<Vec<usize>>> = Vec::with_capacity(n);
    for i in 0..n {
        let img = Subspace::image(&m.eps(i).pow(j * datum.sym(i)));
        let (q, s) = img.quotient_map();
        let np = img.non_pivots();
        // a coordinate subspace quotient keeps integer entries meaningful
        let is_coord = img.basis().data().iter().filter(|&&x| x != 0).count() == img.dim();
        kept.push(is_coord.then_some(np));
        proj.push(q);
        sec.push(s);
    }
    let eps = (0..n).map(|i| proj[i].mul(m.eps(i)).mul(&sec[i])).collect();
    let arrows = datum
        .omega()
        .iter()
        .enumerate()
        .map(|(idx, a)| (0..a.g).map(|g| proj[a.i].mul(m.arrow(idx, g)).mul(&sec[a.j])).collect())
        .collect();
    let mut module = HModule::new(datum.clone(), j, m.p(), eps, arrows)
        .map_err(|e| Error::Internal(format!("reduced module fails relations: {e}")))?;
    if let (Some(lift), true) = (m.lift(), kept.iter().all(|x| x.is_some())) {
        let sel = |mat: &Vec<Vec<i64>>, rows: &[usize], cols: &[usize]| -> Vec<Vec<i64>> {
            rows.iter().map(|&r| cols.iter().map(|&c| mat[r][c]).collect()).collect()
        };
        let kept: Vec<Vec<usize>> = kept.into_iter().map(|x| x.unwrap()).collect();
        let new_lift = IntLift {
            eps: (0..n).map(|i| sel(&lift.eps[i], &kept[i], &kept[i])).collect(),
            arrows: datum
                .omega()
                .iter()
                .enumerate()
                .map(|(idx, a)| lift.arrows[idx].iter().map(|x| sel(x, &kept[a.i], &kept[a.j])).collect())
                .collect(),
        };
        module = module.with_lift(new_lift);
    }
    Ok(Reduction { module, projection: proj, section: sec })
}

/// M̄ = M/ε^{k−1}M over H(k−1).
pub fn reduce(m: &HModule) -> Result<Reduction> {
    if m.k() < 2 {
        return Err(Error::KTooSmall { k: m.k(), min: 2 });
    }
    reduce_to(m, m.k() - 1)
}

/// Reinterprets structure matrices over H(k−1) as structure matrices over H(k).
pub fn lift(datum: Arc<CartanDatum>, s: &StructureMatrices, p: u32) -> Result<HModule> {
    let lifted = s.lift(&datum)?;
    from_structure_matrices(datum, &lifted, p)
}

/// A module with a chain of submodules given as per-vertex subspaces.
#[derive(Clone, Debug)]
pub struct ModuleChain {
    pub top: HModule,
    /// rank vectors e_1 ≤ … ≤ e_l of the layers
    pub ranks: Vec<RankVector>,
    /// layer m spanned by the first e_{m,i} H_i-generators at every vertex
    pub layers: Vec<Vec<Subspace>>,
}

/// Layer subspaces for a structure-matrix presentation in which each layer is spanned by an
/// initial segment of the H_i-bases.
fn initial_segment_layers(m: &HModule, ranks: &[RankVector]) -> Vec<Vec<Subspace>> {
    ranks
        .iter()
        .map(|e| {
            (0..m.datum().n())
                .map(|i| {
                    let d = m.dims()[i];
                    let sz = e[i] * m.loop_len(i);
                    let mut b = FpMatrix::zeros(m.p(), sz, d);
                    for t in 0..sz {
                        b.set(t, t, 1);
                    }
                    Subspace::span(&b)
                })
                .collect()
        })
        .collect()
}

fn check_nested(datum: &CartanDatum, s: &StructureMatrices, ranks: &[RankVector]) -> Result<()> {
    for w in ranks.windows(2) {
        if !w[0].leq(&w[1]) {
            return Err(Error::NotNested(format!("{} is not below {}", w[0], w[1])));
        }
    }
    if let Some(last) = ranks.last() {
        if !last.leq(&s.rank) {
            return Err(Error::NotNested(format!("{} exceeds the module rank {}", last, s.rank)));
        }
    }
    for e in ranks {
        for (blk, a) in s.blocks.iter().zip(datum.omega()) {
            for (row, entries) in blk.iter().enumerate().skip(e[a.i]) {
                for b in 0..e[a.j] {
                    for c in 0..a.c_abs {
                        if entries[b * a.c_abs + c].iter().any(|&x| x != 0) {
                            return Err(Error::NotNested(format!(
                                "block ({},{}) row {} maps layer {} outside itself",
                                a.i + 1,
                                a.j + 1,
                                row + 1,
                                e
                            )));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Chain from a block-triangular presentation over H(k): the structure matrices of the top
/// module with layers spanned by initial segments of the generators.
pub fn chain_from_structure(
    datum: Arc<CartanDatum>,
    s: &StructureMatrices,
    ranks: &[RankVector],
    p: u32,
) -> Result<ModuleChain> {
    check_nested(&datum, s, ranks)?;
    let top = from_structure_matrices(datum, s, p)?;
    let layers = initial_segment_layers(&top, ranks);
    Ok(ModuleChain { top, ranks: ranks.to_vec(), layers })
}

/// Lifts a block-triangular presentation from H(k−1) to H(k), keeping the block shape.
pub fn lift_chain(datum: Arc<CartanDatum>, s: &StructureMatrices, ranks: &[RankVector], p: u32) -> Result<ModuleChain> {
    check_nested(&datum, s, ranks)?;
    let lifted = s.lift(&datum)?;
    chain_from_structure(datum, &lifted, ranks, p)
}

/// Images of a chain of subspaces under a reduction.
pub fn reduce_layers(red: &Reduction, layers: &[Vec<Subspace>]) -> Vec<Vec<Subspace>> {
    layers.iter().map(|l| l.iter().zip(&red.projection).map(|(u, q)| u.map(q)).collect()).collect()
}

/// The map induced by f ∈ Hom(M, N) on the reductions.
pub fn reduce_hom(m: &HModule, n: &HModule, f: &Hom) -> Result<Hom> {
    if !is_hom(m, n, f) {
        return Err(Error::NotAHomomorphism("intertwiner equations fail".into()));
    }
    let rm = reduce(m)?;
    let rn = reduce(n)?;
    Ok(f.iter().enumerate().map(|(i, fi)| rn.projection[i].mul(fi).mul(&rm.section[i])).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct TransferStep {
    pub k: usize,
    pub found: bool,
    pub exhaustive: bool,
    /// for k ≥ 2 with a rigid module found: is its reduction rigid?
    pub reduction_rigid: Option<bool>,
    /// … and isomorphic to the rigid module found at k−1?
    pub reduction_isomorphic: Option<bool>,
    pub iso_certain: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransferReport {
    pub rank: RankVector,
    pub p: u32,
    pub steps: Vec<TransferStep>,
    pub consistent: bool,
}

pub struct TransferOutcome {
    pub report: TransferReport,
    /// rigid modules found, indexed by k − 1
    pub rigid: Vec<Option<HModule>>,
}

/// Rigid modules at k = 1..k_max and the behaviour of reduction on them.
pub fn rigid_transfer_check(
    datum: Arc<CartanDatum>,
    p: u32,
    r: &RankVector,
    k_max: usize,
    trials: usize,
    cfg: &SamplingConfig,
) -> Result<TransferOutcome> {
    let mut rigid: Vec<Option<HModule>> = Vec::new();
    let mut steps = Vec::new();
    for k in 1..=k_max {
        let s = find_rigid(datum.clone(), k, p, r, trials, cfg)?;
        steps.push(TransferStep {
            k,
            found: s.found(),
            exhaustive: s.exhaustive,
            reduction_rigid: None,
            reduction_isomorphic: None,
            iso_certain: None,
        });
        rigid.push(s.module);
    }
    for k in 2..=k_max {
        if let Some(m) = &rigid[k - 1] {
            let red = reduce(m)?.module;
            let step = &mut steps[k - 1];
            step.reduction_rigid = Some(is_rigid(&red)?);
            if let Some(prev) = &rigid[k - 2] {
                let iso = are_isomorphic(&red, prev, cfg)?;
                step.reduction_isomorphic = Some(iso.isomorphic);
                step.iso_certain = Some(iso.certain);
            }
        }
    }
    let pattern_same = steps.iter().all(|s| s.found == steps[0].found);
    let reductions_ok = steps
        .iter()
        .all(|s| s.reduction_rigid.unwrap_or(true) && s.reduction_isomorphic.unwrap_or(true));
    let report = TransferReport { rank: r.clone(), p, steps, consistent: pattern_same && reductions_ok };
    Ok(TransferOutcome { report, rigid })
}

#[derive(Clone, Debug, Serialize)]
pub struct FiltrationReport {
    /// layer_dims[j][i] = dim of (ε^j M / ε^{j+1} M) at vertex i, j = 0..k−1
    pub layer_dims: Vec<Vec<usize>>,
    /// rank of the map induced by ε from layer j to layer j+1, per vertex
    pub induced_ranks: Vec<Vec<usize>>,
    pub equal_layers: bool,
    pub bijective: bool,
}

pub fn epsilon_filtration_check(m: &HModule) -> Result<FiltrationReport> {
    m.rank_vector()?;
    let n = m.datum().n();
    let k = m.k();
    let mut layer_dims = vec![vec![0; n]; k];
    let mut induced = vec![vec![0; n]; k.saturating_sub(1)];
    for i in 0..n {
        let e = m.central_eps(i);
        // V_j = ε^j M_i
        let mut v: Vec<Subspace> = Vec::with_capacity(k + 2);
        let mut pw = FpMatrix::identity(m.p(), m.dims()[i]);
        for _ in 0..=k + 1 {
            v.push(Subspace::image(&pw));
            pw = e.mul(&pw);
        }
        for j in 0..k {
            layer_dims[j][i] = v[j].dim() - v[j + 1].dim();
        }
        for j in 0..k.saturating_sub(1) {
            let img = v[j].map(&e).sum(&v[j + 2])?;
            induced[j][i] = img.dim() - v[j + 2].dim();
        }
    }
    let equal_layers = layer_dims.windows(2).all(|w| w[0] == w[1]);
    let bijective = (0..k.saturating_sub(1)).all(|j| induced[j] == layer_dims[j] && induced[j] == layer_dims[j + 1]);
    Ok(FiltrationReport { layer_dims, induced_ranks: induced, equal_layers, bijective })
}
