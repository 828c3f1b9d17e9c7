//! Plain linear representations: vector spaces at components and a list of maps.
//! Homomorphisms are solved for directly from the intertwiner equations.

use crate::error::{Error, Result};
use crate::hmod::HModule;
use crate::linalg::FpMatrix;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearRep {
    pub p: u32,
    pub dims: Vec<usize>,
    /// (source component, target component, matrix of shape dim(target) × dim(source))
    pub maps: Vec<(usize, usize, FpMatrix)>,
}

impl LinearRep {
    /// One component per vertex; maps are the loops followed by the arrows.
    pub fn from_module(m: &HModule) -> Self {
        LinearRep {
            p: m.p(),
            dims: m.dims().to_vec(),
            maps: m.generators().into_iter().map(|(s, t, x)| (s, t, x.clone())).collect(),
        }
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    fn check_shape(&self, other: &LinearRep) -> Result<()> {
        let same = self.p == other.p
            && self.dims.len() == other.dims.len()
            && self.maps.len() == other.maps.len()
            && self.maps.iter().zip(&other.maps).all(|(a, b)| a.0 == b.0 && a.1 == b.1);
        if !same {
            return Err(Error::ShapeMismatch("representations of different shapes".into()));
        }
        Ok(())
    }

    /// Is `f` (one matrix per component) an intertwiner self → other?
    pub fn is_hom(&self, other: &LinearRep, f: &[FpMatrix]) -> bool {
        self.maps.iter().zip(&other.maps).all(|((s, t, x), (_, _, y))| f[*t].mul(x) == y.mul(&f[*s]))
    }

    fn equations(&self, other: &LinearRep) -> (FpMatrix, Vec<usize>) {
        let mut offsets = Vec::with_capacity(self.dims.len() + 1);
        let mut acc = 0;
        for c in 0..self.dims.len() {
            offsets.push(acc);
            acc += other.dims[c] * self.dims[c];
        }
        offsets.push(acc);
        let rows: usize = self.maps.iter().map(|(s, t, _)| other.dims[*t] * self.dims[*s]).sum();
        let p = self.p;
        let mut e = FpMatrix::zeros(p, rows, acc);
        let mut row0 = 0;
        for ((s, t, x), (_, _, y)) in self.maps.iter().zip(&other.maps) {
            let (s, t) = (*s, *t);
            let (ds_x, dt_x) = (self.dims[s], self.dims[t]);
            let (ds_y, dt_y) = (other.dims[s], other.dims[t]);
            // entry (r, c) of f_t·X − Y·f_s, r < dt_y, c < ds_x
            for r in 0..dt_y {
                for c in 0..ds_x {
                    let row = row0 + r * ds_x + c;
                    for l in 0..dt_x {
                        let v = x.get(l, c);
                        if v != 0 {
                            e.add_at(row, offsets[t] + r * dt_x + l, v);
                        }
                    }
                    for l in 0..ds_y {
                        let v = y.get(r, l);
                        if v != 0 {
                            e.add_at(row, offsets[s] + l * ds_x + c, p - v);
                        }
                    }
                }
            }
            row0 += dt_y * ds_x;
        }
        (e, offsets)
    }

    pub fn hom_dim(&self, other: &LinearRep) -> Result<usize> {
        self.check_shape(other)?;
        let (e, offsets) = self.equations(other);
        Ok(offsets[self.dims.len()] - e.rank())
    }

    /// Basis of Hom(self, other); each element is verified by substitution.
    pub fn hom_basis(&self, other: &LinearRep) -> Result<Vec<Vec<FpMatrix>>> {
        self.check_shape(other)?;
        let (e, offsets) = self.equations(other);
        let ker = e.kernel();
        let mut out = Vec::with_capacity(ker.rows());
        for v in 0..ker.rows() {
            let row = ker.row(v);
            let f: Vec<FpMatrix> = (0..self.dims.len())
                .map(|c| {
                    FpMatrix::from_vec(self.p, other.dims[c], self.dims[c], row[offsets[c]..offsets[c + 1]].to_vec())
                })
                .collect();
            if !self.is_hom(other, &f) {
                return Err(Error::Internal("hom basis element fails substitution".into()));
            }
            out.push(f);
        }
        Ok(out)
    }
}
