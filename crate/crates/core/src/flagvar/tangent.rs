//! Modules over H(k) ⊗ A_l as chains of H(k)-modules with connecting maps, and tangent spaces
//! of flag varieties.

use super::gens::FreeGens;
use super::FlagOfSubmodules;
use crate::error::{Error, Result};
use crate::hmod::{jordan, sub_quotient, HModule};
use crate::homext::{hom_dim, identity_hom, is_hom, Hom};
use crate::linalg::FpMatrix;
use crate::rep::LinearRep;

/// (M_1, …, M_{l−1}; μ_1, …, μ_{l−2}) with μ_s: M_s → M_{s+1}.
#[derive(Clone, Debug)]
pub struct TensorModule {
    pub l: usize,
    pub slots: Vec<HModule>,
    pub connectors: Vec<Hom>,
}

impl TensorModule {
    pub fn new(slots: Vec<HModule>, connectors: Vec<Hom>) -> Result<Self> {
        if slots.is_empty() {
            return Err(Error::InvalidInput("a tensor module needs at least one slot".into()));
        }
        if connectors.len() + 1 != slots.len() {
            return Err(Error::LengthMismatch { expected: slots.len() - 1, got: connectors.len() });
        }
        for w in slots.windows(2) {
            w[0].same_algebra(&w[1])?;
        }
        for (s, mu) in connectors.iter().enumerate() {
            if !is_hom(&slots[s], &slots[s + 1], mu) {
                return Err(Error::NotAHomomorphism(format!("connector {} is not H-linear", s + 1)));
            }
        }
        Ok(TensorModule { l: slots.len() + 1, slots, connectors })
    }

    /// One component per (slot, vertex); maps are the module generators in every slot
    /// followed by the connectors.
    pub fn to_rep(&self) -> LinearRep {
        let n = self.slots[0].datum().n();
        let mut dims = Vec::new();
        let mut maps = Vec::new();
        for (s, m) in self.slots.iter().enumerate() {
            dims.extend_from_slice(m.dims());
            for (a, b, x) in m.generators() {
                maps.push((s * n + a, s * n + b, x.clone()));
            }
        }
        for (s, mu) in self.connectors.iter().enumerate() {
            for (i, x) in mu.iter().enumerate() {
                maps.push((s * n + i, (s + 1) * n + i, x.clone()));
            }
        }
        LinearRep { p: self.slots[0].p(), dims, maps }
    }
}

/// M^(l) = (M, …, M; id, …, id).
pub fn repetitive_module(m: &HModule, l: usize) -> Result<TensorModule> {
    if l < 2 {
        return Err(Error::InvalidInput("l must be at least 2".into()));
    }
    TensorModule::new(vec![m.clone(); l - 1], vec![identity_hom(m); l - 2])
}

#[derive(Clone, Debug)]
pub struct TensorHom {
    pub dim: usize,
    /// basis[b][s] is the component in slot s
    pub basis: Vec<Vec<Hom>>,
}

pub fn hom_tensor(x: &TensorModule, y: &TensorModule) -> Result<TensorHom> {
    if x.l != y.l {
        return Err(Error::ShapeMismatch(format!("tensor lengths {} and {}", x.l, y.l)));
    }
    x.slots[0].same_algebra(&y.slots[0])?;
    let n = x.slots[0].datum().n();
    let flat = x.to_rep().hom_basis(&y.to_rep())?;
    let basis: Vec<Vec<Hom>> = flat
        .into_iter()
        .map(|f| f.chunks(n).map(|c| c.to_vec()).collect())
        .collect();
    for f in &basis {
        for (s, fs) in f.iter().enumerate() {
            if !is_hom(&x.slots[s], &y.slots[s], fs) {
                return Err(Error::Internal("tensor hom component is not H-linear".into()));
            }
        }
    }
    Ok(TensorHom { dim: basis.len(), basis })
}

/// ι(U_•) = (U_1, …, U_{l−1}; inclusions) and M^(l)/ι(U_•).
pub fn flag_tensors(m: &HModule, flag: &FlagOfSubmodules) -> Result<(TensorModule, TensorModule)> {
    flag.validate(m)?;
    if flag.layers.is_empty() {
        let z = HModule::zero(m.datum_arc().clone(), m.k(), m.p());
        return Ok((TensorModule::new(vec![z], vec![])?, TensorModule::new(vec![m.clone()], vec![])?));
    }
    let sqs = flag.layers.iter().map(|l| sub_quotient(m, l)).collect::<Result<Vec<_>>>()?;
    let mut inc = Vec::new();
    let mut quo = Vec::new();
    for s in 0..sqs.len() - 1 {
        let (lo, hi) = (&flag.layers[s], &flag.layers[s + 1]);
        let mu: Hom = (0..m.datum().n())
            .map(|i| {
                let src = &sqs[s].inclusion[i];
                let mut out = FpMatrix::zeros(m.p(), hi[i].dim(), lo[i].dim());
                for c in 0..src.cols() {
                    let coords = hi[i].coords(&src.col(c)).expect("nested layers");
                    for (r, v) in coords.into_iter().enumerate() {
                        out.set(r, c, v);
                    }
                }
                out
            })
            .collect();
        inc.push(mu);
        quo.push((0..m.datum().n()).map(|i| sqs[s + 1].projection[i].mul(&sqs[s].section[i])).collect());
    }
    let subs = sqs.iter().map(|x| x.sub.clone()).collect();
    let quots = sqs.iter().map(|x| x.quotient.clone()).collect();
    Ok((TensorModule::new(subs, inc)?, TensorModule::new(quots, quo)?))
}

/// dim Hom(ι(U_•), M^(l)/ι(U_•)) by a direct linear solve.
pub fn tangent_dimension(m: &HModule, flag: &FlagOfSubmodules) -> Result<usize> {
    let (sub, quot) = flag_tensors(m, flag)?;
    Ok(hom_tensor(&sub, &quot)?.dim)
}

/// K-matrix of an H-matrix whose (row generator, column generator) entry is a polynomial.
fn h_matrix(p: u32, rows: usize, cols: usize, len: usize, entry: impl Fn(usize, usize) -> Vec<u32>) -> FpMatrix {
    let mut out = FpMatrix::zeros(p, rows * len, cols * len);
    for r in 0..rows {
        for c in 0..cols {
            let poly = entry(r, c);
            for (h, &v) in poly.iter().enumerate() {
                if v == 0 {
                    continue;
                }
                for s in 0..len - h {
                    out.set(r * len + h + s, c * len + s, v);
                }
            }
        }
    }
    out
}

/// Base change adapted to a free submodule given by canonical generators: the new H-basis is
/// x_0, …, x_{e−1} followed by the unit generators at non-pivot rows. Returns (P, P⁻¹).
pub(crate) fn adapted_basis(g: &FreeGens, p: u32) -> (FpMatrix, FpMatrix) {
    let (m, e, len) = (g.m, g.e, g.len);
    let np = g.non_pivots();
    let unit = |on: bool| {
        let mut v = vec![0; len];
        if on {
            v[0] = 1;
        }
        v
    };
    let pm = h_matrix(p, m, m, len, |b, c| if c < e { g.entry(b, c).to_vec() } else { unit(b == np[c - e]) });
    let qm = h_matrix(p, m, m, len, |r, c| {
        if r < e {
            return unit(c == g.pivots[r]);
        }
        let b = np[r - e];
        if c == b {
            return unit(true);
        }
        match g.pivots.iter().position(|&x| x == c) {
            Some(a) => g.entry(b, a).iter().map(|&x| (p - x) % p).collect(),
            None => unit(false),
        }
    });
    (pm, qm)
}

/// Sub and quotient of a standard module at a Grassmannian point, both in standard form.
pub(crate) fn adapted_split(m: &HModule, gens: &[FreeGens]) -> Result<(HModule, HModule)> {
    let datum = m.datum_arc().clone();
    let n = datum.n();
    let p = m.p();
    let pq: Vec<(FpMatrix, FpMatrix)> = gens.iter().map(|g| adapted_basis(g, p)).collect();
    let split = |i: usize| gens[i].dim();
    let mut sub_arr = Vec::new();
    let mut q_arr = Vec::new();
    for (idx, pr) in datum.omega().iter().enumerate() {
        let mut sf = Vec::new();
        let mut qf = Vec::new();
        for g in 0..pr.g {
            let a = pq[pr.i].1.mul(m.arrow(idx, g)).mul(&pq[pr.j].0);
            let (si, sj) = (split(pr.i), split(pr.j));
            let (di, dj) = (m.dims()[pr.i], m.dims()[pr.j]);
            if !a.submatrix(si..di, 0..sj).is_zero() {
                return Err(Error::NotInvariant("arrow leaves the submodule".into()));
            }
            sf.push(a.submatrix(0..si, 0..sj));
            qf.push(a.submatrix(si..di, sj..dj));
        }
        sub_arr.push(sf);
        q_arr.push(qf);
    }
    let sub_eps = (0..n).map(|i| jordan(p, gens[i].len, gens[i].e)).collect();
    let q_eps = (0..n).map(|i| jordan(p, gens[i].len, gens[i].m - gens[i].e)).collect();
    Ok((
        HModule::new_trusted(datum.clone(), m.k(), p, sub_eps, sub_arr),
        HModule::new_trusted(datum, m.k(), p, q_eps, q_arr),
    ))
}

/// Tangent dimension at a Grassmannian point of a standard module, through the adapted basis.
pub(crate) fn tangent_fast(m: &HModule, gens: &[FreeGens]) -> Result<usize> {
    let (sub, quot) = adapted_split(m, gens)?;
    hom_dim(&sub, &quot)
}
