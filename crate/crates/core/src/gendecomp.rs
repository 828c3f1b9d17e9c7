//! Krull–Schmidt decomposition through Fitting's lemma, and sampled generic decompositions of
//! rank vectors.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cartan::{CartanDatum, RankVector};
use crate::error::{Error, Result};
use crate::hmod::{direct_sum_all, from_structure_matrices, normalize, random_structure, sub_quotient, HModule};
use crate::homext::{are_isomorphic, combine, ext1_dim, hom_space, Hom};
use crate::linalg::Subspace;
use crate::sampling::{derive_seed, digits, space_size, structure_point, SamplingConfig};

#[derive(Clone, Debug)]
pub struct KrullSchmidt {
    pub parts: Vec<HModule>,
    /// every part certified by an exhaustive scan of its endomorphisms (or End = K)
    pub certain: bool,
}

impl KrullSchmidt {
    /// Sorted rank vectors of the parts.
    pub fn rank_type(&self) -> Result<Vec<RankVector>> {
        let mut t = self.parts.iter().map(|m| m.rank_vector()).collect::<Result<Vec<_>>>()?;
        t.sort();
        Ok(t)
    }
}

/// Fitting splitting of M along φ^N: None if φ is nilpotent or invertible.
fn fitting_split(m: &HModule, phi: &Hom) -> Option<(Vec<Subspace>, Vec<Subspace>)> {
    let mut ker = Vec::with_capacity(phi.len());
    let mut img = Vec::with_capacity(phi.len());
    let (mut kd, mut id) = (0, 0);
    for (i, f) in phi.iter().enumerate() {
        let d = m.dims()[i];
        let pw = if d == 0 { f.clone() } else { f.pow(d) };
        let k = Subspace::kernel(&pw);
        let im = Subspace::image(&pw);
        kd += k.dim();
        id += im.dim();
        ker.push(k);
        img.push(im);
    }
    if kd == 0 || id == 0 {
        None
    } else {
        Some((ker, img))
    }
}

/// Is φ neither nilpotent nor invertible? Cheaper than a full split.
fn splits(m: &HModule, phi: &Hom) -> bool {
    let mut all_inv = true;
    let mut all_nil = true;
    for (i, f) in phi.iter().enumerate() {
        let d = m.dims()[i];
        if d == 0 {
            continue;
        }
        if all_inv && f.rank() < d {
            all_inv = false;
        }
        if all_nil && !f.pow(d).is_zero() {
            all_nil = false;
        }
        if !all_inv && !all_nil {
            return true;
        }
    }
    false
}

enum Split {
    Parts(HModule, HModule),
    Indecomposable { certain: bool },
}

fn try_split(m: &HModule, cfg: &SamplingConfig, salt: u64) -> Result<Split> {
    let end = hom_space(m, m)?;
    let dim = end.dim();
    if dim <= 1 {
        return Ok(Split::Indecomposable { certain: true });
    }
    let apply = |phi: &Hom| -> Result<Option<Split>> {
        match fitting_split(m, phi) {
            None => Ok(None),
            Some((ker, img)) => {
                let a = sub_quotient(m, &ker)?.sub;
                let b = sub_quotient(m, &img)?.sub;
                Ok(Some(Split::Parts(a, b)))
            }
        }
    };
    for phi in &end.basis {
        if let Some(s) = apply(phi)? {
            return Ok(s);
        }
    }
    let p = m.p();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, salt));
    for _ in 0..cfg.fitting_trials {
        let c: Vec<u32> = (0..dim).map(|_| rng.gen_range(0..p)).collect();
        if let Some(s) = apply(&combine(&end.basis, &c))? {
            return Ok(s);
        }
    }
    match space_size(p, dim) {
        Some(sz) if sz <= cfg.fitting_budget => {
            for idx in 1..sz {
                let c: Vec<u32> = digits(idx, p, dim).iter().map(|&x| x as u32).collect();
                let phi = combine(&end.basis, &c);
                if splits(m, &phi) {
                    if let Some(s) = apply(&phi)? {
                        return Ok(s);
                    }
                }
            }
            Ok(Split::Indecomposable { certain: true })
        }
        _ => Ok(Split::Indecomposable { certain: false }),
    }
}

fn standardize(m: HModule) -> Result<HModule> {
    if m.is_standard() {
        Ok(m)
    } else {
        Ok(normalize(&m)?.0)
    }
}

/// Splits M into indecomposable summands. The direct sum of the parts is checked to be
/// isomorphic to M.
pub fn krull_schmidt(m: &HModule, cfg: &SamplingConfig) -> Result<KrullSchmidt> {
    m.validate()?;
    let mut parts = Vec::new();
    let mut certain = true;
    let mut stack = vec![m.clone()];
    let mut salt = 0xf17u64;
    while let Some(x) = stack.pop() {
        if x.is_zero() {
            continue;
        }
        salt += 1;
        match try_split(&x, cfg, salt)? {
            Split::Parts(a, b) => {
                stack.push(a);
                stack.push(b);
            }
            Split::Indecomposable { certain: c } => {
                certain &= c;
                parts.push(x);
            }
        }
    }
    let locally_free = m.is_locally_free();
    let parts: Vec<HModule> = if locally_free {
        parts.into_iter().map(standardize).collect::<Result<_>>()?
    } else {
        parts
    };
    if !parts.is_empty() {
        let sum = direct_sum_all(m.datum_arc().clone(), m.k(), m.p(), &parts)?;
        let iso = are_isomorphic(&sum, m, cfg)?;
        if !iso.isomorphic && iso.certain {
            return Err(Error::Internal("rebuilt direct sum is not isomorphic to the input".into()));
        }
    }
    Ok(KrullSchmidt { parts, certain })
}

/// Decomposition type and dim End of one point.
#[derive(Clone, Debug)]
struct PointInfo {
    kind: Vec<RankVector>,
    end_dim: usize,
    certain: bool,
}

fn analyze(m: &HModule, cfg: &SamplingConfig) -> Result<PointInfo> {
    let ks = krull_schmidt(m, cfg)?;
    Ok(PointInfo { kind: ks.rank_type()?, end_dim: hom_space(m, m)?.dim(), certain: ks.certain })
}

/// Runs `f` on every structure point (exhaustive) or on `cfg.samples` seeded random points.
/// Returns results in a deterministic order and whether the scan was exhaustive.
fn over_points<T: Send>(
    datum: &Arc<CartanDatum>,
    k: usize,
    p: u32,
    r: &RankVector,
    cfg: &SamplingConfig,
    f: impl Fn(&HModule) -> Result<T> + Sync,
) -> Result<(Vec<T>, bool)> {
    let nparams = datum.structure_param_count(k, r);
    if let Some(sz) = space_size(p, nparams).filter(|&s| s <= cfg.exhaustive_budget) {
        let out = (0..sz)
            .into_par_iter()
            .map(|idx| f(&from_structure_matrices(datum.clone(), &structure_point(datum, k, p, r, idx), p)?))
            .collect::<Result<Vec<T>>>()?;
        return Ok((out, true));
    }
    let out = (0..cfg.samples.max(1) as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, t));
            f(&from_structure_matrices(datum.clone(), &random_structure(datum, k, p, r, &mut rng), p)?)
        })
        .collect::<Result<Vec<T>>>()?;
    Ok((out, false))
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtGeneric {
    pub min: usize,
    /// pairs examined before the minimum was settled
    pub pairs: u64,
    /// the minimum reached the lower bound max(0, −⟨r,s⟩) or every pair was examined
    pub settled: bool,
}

/// Minimum of dim Ext¹(M, N) over sampled pairs of rank r and s. Stops early once the
/// lower bound max(0, −⟨r,s⟩) is reached.
pub fn ext_generic(
    datum: Arc<CartanDatum>,
    k: usize,
    p: u32,
    r: &RankVector,
    s: &RankVector,
    cfg: &SamplingConfig,
) -> Result<ExtGeneric> {
    let floor = (-datum.euler(k, r, s)).max(0) as usize;
    let nr = datum.structure_param_count(k, r);
    let ns = datum.structure_param_count(k, s);
    let mut min = usize::MAX;
    let mut pairs = 0;
    let pair_budget = cfg.iso_budget.min(cfg.exhaustive_budget);
    match (space_size(p, nr), space_size(p, ns)) {
        (Some(a), Some(b)) if a.checked_mul(b).is_some_and(|x| x <= pair_budget) => {
            let ms = (0..a)
                .map(|i| from_structure_matrices(datum.clone(), &structure_point(&datum, k, p, r, i), p))
                .collect::<Result<Vec<_>>>()?;
            let ns_ = (0..b)
                .map(|i| from_structure_matrices(datum.clone(), &structure_point(&datum, k, p, s, i), p))
                .collect::<Result<Vec<_>>>()?;
            'outer: for m in &ms {
                for n in &ns_ {
                    pairs += 1;
                    min = min.min(ext1_dim(m, n)?);
                    if min == floor {
                        break 'outer;
                    }
                }
            }
            Ok(ExtGeneric { min, pairs, settled: true })
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0xe47));
            for _ in 0..cfg.samples.max(1) {
                let m = from_structure_matrices(datum.clone(), &random_structure(&datum, k, p, r, &mut rng), p)?;
                let n = from_structure_matrices(datum.clone(), &random_structure(&datum, k, p, s, &mut rng), p)?;
                pairs += 1;
                min = min.min(ext1_dim(&m, &n)?);
                if min == floor {
                    break;
                }
            }
            Ok(ExtGeneric { min, pairs, settled: min == floor })
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SchurEstimate {
    pub rank: RankVector,
    pub estimate: bool,
    /// fraction of all points that are indecomposable
    pub rate: f64,
    /// fraction among points with minimal dim End
    pub stratum_rate: f64,
    pub min_end: usize,
    pub points: usize,
    pub exhaustive: bool,
    pub certain: bool,
    pub seed: u64,
}

fn schur_from(r: &RankVector, infos: &[PointInfo], exhaustive: bool, cfg: &SamplingConfig) -> SchurEstimate {
    let min_end = infos.iter().map(|x| x.end_dim).min().unwrap_or(0);
    let indec = |x: &PointInfo| x.kind.len() == 1;
    let n_ind = infos.iter().filter(|x| indec(x)).count();
    let stratum: Vec<&PointInfo> = infos.iter().filter(|x| x.end_dim == min_end).collect();
    let s_ind = stratum.iter().filter(|x| indec(x)).count();
    let rate = n_ind as f64 / infos.len().max(1) as f64;
    let stratum_rate = s_ind as f64 / stratum.len().max(1) as f64;
    SchurEstimate {
        rank: r.clone(),
        estimate: !r.is_zero() && stratum_rate > cfg.threshold,
        rate,
        stratum_rate,
        min_end,
        points: infos.len(),
        exhaustive,
        certain: infos.iter().all(|x| x.certain),
        seed: cfg.seed,
    }
}

pub fn is_schur_root(
    datum: Arc<CartanDatum>,
    k: usize,
    p: u32,
    r: &RankVector,
    cfg: &SamplingConfig,
) -> Result<SchurEstimate> {
    let (infos, exhaustive) = over_points(&datum, k, p, r, cfg, |m| analyze(m, cfg))?;
    Ok(schur_from(r, &infos, exhaustive, cfg))
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtWitness {
    pub from: RankVector,
    pub to: RankVector,
    pub ext: ExtGeneric,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport {
    pub rank: RankVector,
    pub k: usize,
    pub p: u32,
    pub parts: Vec<RankVector>,
    pub schur: Vec<SchurEstimate>,
    pub ext_witnesses: Vec<ExtWitness>,
    /// decomposition types seen, with counts, on all points and on the min-End stratum
    pub type_counts: Vec<(Vec<RankVector>, usize)>,
    pub stratum_type_counts: Vec<(Vec<RankVector>, usize)>,
    pub min_end: usize,
    pub points: usize,
    pub exhaustive: bool,
    pub certain: bool,
    pub seed: u64,
    pub criteria_hold: bool,
    pub failures: Vec<String>,
}

fn tally<'a>(it: impl Iterator<Item = &'a PointInfo>) -> Vec<(Vec<RankVector>, usize)> {
    let mut m: BTreeMap<Vec<RankVector>, usize> = BTreeMap::new();
    for x in it {
        *m.entry(x.kind.clone()).or_default() += 1;
    }
    let mut v: Vec<_> = m.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    v
}

/// Generic decomposition type of r: the majority type among points of minimal dim End,
/// followed by checks that the parts are Schur roots with pairwise vanishing generic Ext.
pub fn canonical_decomposition(
    datum: Arc<CartanDatum>,
    k: usize,
    p: u32,
    r: &RankVector,
    cfg: &SamplingConfig,
) -> Result<DecompositionReport> {
    if r.len() != datum.n() {
        return Err(Error::LengthMismatch { expected: datum.n(), got: r.len() });
    }
    if r.is_zero() {
        return Ok(DecompositionReport {
            rank: r.clone(),
            k,
            p,
            parts: vec![],
            schur: vec![],
            ext_witnesses: vec![],
            type_counts: vec![],
            stratum_type_counts: vec![],
            min_end: 0,
            points: 1,
            exhaustive: true,
            certain: true,
            seed: cfg.seed,
            criteria_hold: true,
            failures: vec![],
        });
    }
    let (infos, exhaustive) = over_points(&datum, k, p, r, cfg, |m| analyze(m, cfg))?;
    let min_end = infos.iter().map(|x| x.end_dim).min().unwrap_or(0);
    let type_counts = tally(infos.iter());
    let stratum_type_counts = tally(infos.iter().filter(|x| x.end_dim == min_end));
    let parts = stratum_type_counts[0].0.clone();
    let mut failures = Vec::new();
    let mut schur = Vec::new();
    let mut distinct: Vec<RankVector> = parts.clone();
    distinct.dedup();
    for part in &distinct {
        let est = if part == r {
            schur_from(r, &infos, exhaustive, cfg)
        } else {
            is_schur_root(datum.clone(), k, p, part, cfg)?
        };
        if !est.estimate {
            failures.push(format!("part {part} is not a Schur root (stratum rate {:.3})", est.stratum_rate));
        }
        schur.push(est);
    }
    let mut ext_witnesses = Vec::new();
    let mut seen = BTreeMap::new();
    for (a, ra) in parts.iter().enumerate() {
        for (b, rb) in parts.iter().enumerate() {
            if a == b || seen.contains_key(&(ra.clone(), rb.clone())) {
                continue;
            }
            let e = ext_generic(datum.clone(), k, p, ra, rb, cfg)?;
            if e.min != 0 {
                failures.push(format!("ext({ra},{rb}) = {} on all samples", e.min));
            }
            seen.insert((ra.clone(), rb.clone()), ());
            ext_witnesses.push(ExtWitness { from: ra.clone(), to: rb.clone(), ext: e });
        }
    }
    let certain = exhaustive && infos.iter().all(|x| x.certain);
    Ok(DecompositionReport {
        rank: r.clone(),
        k,
        p,
        parts,
        schur,
        ext_witnesses,
        type_counts,
        stratum_type_counts,
        min_end,
        points: infos.len(),
        exhaustive,
        certain,
        seed: cfg.seed,
        criteria_hold: failures.is_empty(),
        failures,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct KIndependenceReport {
    pub rank: RankVector,
    pub p: u32,
    pub decompositions: Vec<DecompositionReport>,
    pub agree: bool,
    pub seed: u64,
}

pub fn k_independence_check(
    datum: Arc<CartanDatum>,
    p: u32,
    r: &RankVector,
    k_max: usize,
    cfg: &SamplingConfig,
) -> Result<KIndependenceReport> {
    let decompositions = (1..=k_max)
        .map(|k| canonical_decomposition(datum.clone(), k, p, r, cfg))
        .collect::<Result<Vec<_>>>()?;
    let agree = decompositions.windows(2).all(|w| w[0].parts == w[1].parts);
    Ok(KIndependenceReport { rank: r.clone(), p, decompositions, agree, seed: cfg.seed })
}
