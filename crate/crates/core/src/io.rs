//! Versioned file formats: Cartan configs (JSON or TOML) and module files (JSON).
//!
//! Vertices are 1-indexed in every file.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cartan::{CartanDatum, RankVector};
use crate::error::{Error, Result};
use crate::hmod::{from_structure_matrices, to_structure_matrices, HModule, StructureMatrices};

pub const FORMAT_VERSION: u32 = 1;

fn default_k() -> usize {
    1
}
fn default_p() -> u32 {
    5
}
fn default_version() -> u32 {
    FORMAT_VERSION
}

fn check_version(v: u32) -> Result<()> {
    if v == 0 || v > FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format_version {v}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartanConfig {
    #[serde(default = "default_version")]
    pub format_version: u32,
    pub n: usize,
    #[serde(rename = "C")]
    pub c: Vec<Vec<i64>>,
    #[serde(rename = "D")]
    pub d: Vec<i64>,
    #[serde(default)]
    pub omega: Vec<[usize; 2]>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_p")]
    pub p: u32,
}

impl CartanConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Format(e.to_string()))
    }

    /// TOML for a `.toml` extension, JSON otherwise.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml")) {
            Self::from_toml(&text)
        } else {
            Self::from_json(&text)
        }
    }

    pub fn from_datum(datum: &CartanDatum, k: usize, p: u32) -> Self {
        CartanConfig {
            format_version: FORMAT_VERSION,
            n: datum.n(),
            c: datum.cartan().to_vec(),
            d: datum.symmetrizer().iter().map(|&x| x as i64).collect(),
            omega: datum.omega_pairs().iter().map(|&(i, j)| [i + 1, j + 1]).collect(),
            k,
            p,
        }
    }

    pub fn datum(&self) -> Result<CartanDatum> {
        check_version(self.format_version)?;
        if self.c.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: self.c.len() });
        }
        if self.d.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: self.d.len() });
        }
        if self.k == 0 {
            return Err(Error::KTooSmall { k: 0, min: 1 });
        }
        let omega = self
            .omega
            .iter()
            .map(|&[i, j]| {
                for v in [i, j] {
                    if v == 0 || v > self.n {
                        return Err(Error::VertexOutOfRange(v));
                    }
                }
                Ok((i - 1, j - 1))
            })
            .collect::<Result<Vec<_>>>()?;
        CartanDatum::new(self.c.clone(), self.d.clone(), &omega)
    }
}

fn pair_key(i: usize, j: usize) -> String {
    format!("({},{})", i + 1, j + 1)
}

/// "(i,j)" with 1-indexed vertices, whitespace allowed.
fn parse_pair_key(key: &str, n: usize) -> Result<(usize, usize)> {
    let bad = || Error::Format(format!("bad pair key {key:?}, expected \"(i,j)\""));
    let inner = key.trim().strip_prefix('(').and_then(|s| s.strip_suffix(')')).ok_or_else(bad)?;
    let mut it = inner.split(',').map(|s| s.trim().parse::<usize>());
    let (Some(Ok(i)), Some(Ok(j)), None) = (it.next(), it.next(), it.next()) else {
        return Err(bad());
    };
    for v in [i, j] {
        if v == 0 || v > n {
            return Err(Error::VertexOutOfRange(v));
        }
    }
    Ok((i - 1, j - 1))
}

type Block = Vec<Vec<Vec<i64>>>;
type Matrix = Vec<Vec<i64>>;

/// A module either by structure matrices or by raw ε and arrow matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuleFile {
    #[serde(default = "default_version")]
    pub format_version: u32,
    pub rank: Vec<usize>,
    pub k: usize,
    pub p: u32,
    /// "(i,j)" → r_i × (|c_ij| r_j) matrix of coefficient lists
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<BTreeMap<String, Block>>,
    /// one square matrix per vertex
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<Matrix>>,
    /// "(i,j)" → g_ij matrices, each dim M_i × dim M_j
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrow: Option<BTreeMap<String, Vec<Matrix>>>,
}

impl ModuleFile {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("module files serialize")
    }

    pub fn from_structure(datum: &CartanDatum, s: &StructureMatrices, p: u32) -> Self {
        let structure = datum
            .omega()
            .iter()
            .zip(&s.blocks)
            .map(|(a, b)| (pair_key(a.i, a.j), b.clone()))
            .collect();
        ModuleFile {
            format_version: FORMAT_VERSION,
            rank: s.rank.0.clone(),
            k: s.k,
            p,
            structure: Some(structure),
            eps: None,
            arrow: None,
        }
    }

    /// Structure form when the module is locally free, raw form otherwise.
    /// Raw matrices come from the integer lift when there is one.
    pub fn from_module(m: &HModule) -> Self {
        if let Ok(s) = to_structure_matrices(m) {
            return Self::from_structure(m.datum(), &s, m.p());
        }
        let (eps, arrows) = match m.lift() {
            Some(l) => (l.eps.clone(), l.arrows.clone()),
            None => (
                m.eps_all().iter().map(|e| e.to_i64_rows()).collect(),
                m.arrows_all().iter().map(|f| f.iter().map(|a| a.to_i64_rows()).collect()).collect(),
            ),
        };
        let arrow = m
            .datum()
            .omega()
            .iter()
            .zip(arrows)
            .map(|(a, fam)| (pair_key(a.i, a.j), fam))
            .collect();
        ModuleFile {
            format_version: FORMAT_VERSION,
            rank: m.rank_vector().map(|r| r.0).unwrap_or_default(),
            k: m.k(),
            p: m.p(),
            structure: None,
            eps: Some(eps),
            arrow: Some(arrow),
        }
    }

    /// Structure matrices in Ω order, if the file is in structure form.
    pub fn structure_matrices(&self, datum: &CartanDatum) -> Result<Option<StructureMatrices>> {
        let Some(map) = &self.structure else { return Ok(None) };
        let mut by_pair: BTreeMap<(usize, usize), &Block> = BTreeMap::new();
        for (key, b) in map {
            by_pair.insert(parse_pair_key(key, datum.n())?, b);
        }
        let mut blocks = Vec::new();
        for a in datum.omega() {
            let b = by_pair
                .remove(&(a.i, a.j))
                .ok_or_else(|| Error::Format(format!("structure lacks block {}", pair_key(a.i, a.j))))?;
            blocks.push(b.clone());
        }
        if let Some((&(i, j), _)) = by_pair.iter().next() {
            return Err(Error::Format(format!("structure block {} is not an oriented pair", pair_key(i, j))));
        }
        let s = StructureMatrices { k: self.k, rank: RankVector(self.rank.clone()), blocks };
        s.check_shape(datum)?;
        Ok(Some(s))
    }

    pub fn to_module(&self, datum: Arc<CartanDatum>) -> Result<HModule> {
        check_version(self.format_version)?;
        if self.rank.len() != datum.n() {
            return Err(Error::LengthMismatch { expected: datum.n(), got: self.rank.len() });
        }
        match (&self.structure, &self.eps, &self.arrow) {
            (Some(_), None, None) => {
                let s = self.structure_matrices(&datum)?.expect("structure form");
                from_structure_matrices(datum, &s, self.p)
            }
            (None, Some(eps), arrow) => {
                let empty = BTreeMap::new();
                let map = arrow.as_ref().unwrap_or(&empty);
                let mut by_pair: BTreeMap<(usize, usize), &Vec<Matrix>> = BTreeMap::new();
                for (key, fam) in map {
                    by_pair.insert(parse_pair_key(key, datum.n())?, fam);
                }
                let mut arrows = Vec::new();
                for a in datum.omega() {
                    let fam = by_pair
                        .remove(&(a.i, a.j))
                        .ok_or_else(|| Error::Format(format!("arrow lacks family {}", pair_key(a.i, a.j))))?;
                    if fam.len() != a.g {
                        return Err(Error::ShapeMismatch(format!(
                            "family {} needs {} matrices, got {}",
                            pair_key(a.i, a.j),
                            a.g,
                            fam.len()
                        )));
                    }
                    arrows.push(fam.clone());
                }
                if let Some((&(i, j), _)) = by_pair.iter().next() {
                    return Err(Error::Format(format!("arrow family {} is not an oriented pair", pair_key(i, j))));
                }
                let m = HModule::from_integer_matrices(datum, self.k, self.p, eps.clone(), arrows)?;
                if m.rank_vector()?.0 != self.rank {
                    return Err(Error::ShapeMismatch(format!(
                        "declared rank {:?} but matrices have rank {:?}",
                        self.rank,
                        m.rank_vector()?.0
                    )));
                }
                Ok(m)
            }
            _ => Err(Error::Format("module file needs either `structure` or `eps` (with `arrow`)".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmod::random_locally_free;

    const B2_JSON: &str = r#"{"n": 2, "C": [[2,-1],[-2,2]], "D": [2,1], "omega": [[1,2]], "k": 2}"#;

    #[test]
    fn config_formats_agree() {
        let j = CartanConfig::from_json(B2_JSON).unwrap();
        let t = CartanConfig::from_toml("n = 2\nC = [[2,-1],[-2,2]]\nD = [2,1]\nomega = [[1,2]]\nk = 2\n").unwrap();
        assert_eq!(j, t);
        assert_eq!(j.p, 5);
        assert_eq!(j.format_version, FORMAT_VERSION);
        let d = j.datum().unwrap();
        assert_eq!(d, CartanDatum::b2());
        assert_eq!(CartanConfig::from_datum(&d, 2, 5), j);
    }

    #[test]
    fn config_errors() {
        let bad_sym = r#"{"n": 2, "C": [[2,-1],[-2,2]], "D": [1,1], "omega": [[1,2]]}"#;
        assert!(matches!(CartanConfig::from_json(bad_sym).unwrap().datum(), Err(Error::SymmetrizerMismatch(..))));
        let zero_idx = r#"{"n": 2, "C": [[2,-1],[-1,2]], "D": [1,1], "omega": [[0,1]]}"#;
        assert!(matches!(CartanConfig::from_json(zero_idx).unwrap().datum(), Err(Error::VertexOutOfRange(0))));
        let future = r#"{"format_version": 9, "n": 1, "C": [[2]], "D": [1]}"#;
        assert!(matches!(CartanConfig::from_json(future).unwrap().datum(), Err(Error::Format(_))));
        assert!(CartanConfig::from_json("{").is_err());
    }

    #[test]
    fn structure_round_trip() {
        let d = Arc::new(CartanDatum::b2());
        for seed in 0..10 {
            let m = random_locally_free(d.clone(), 2, 3, &RankVector(vec![1, 2]), seed).unwrap();
            let f = ModuleFile::from_module(&m);
            assert!(f.structure.is_some());
            let back = ModuleFile::from_json(&f.to_json()).unwrap().to_module(d.clone()).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn raw_form() {
        let d = Arc::new(CartanDatum::a2());
        // rank (1,1) over A_2 with arrow 1, written raw
        let text = r#"{"rank": [1,1], "k": 1, "p": 3, "eps": [[[0]], [[0]]], "arrow": {"(1,2)": [[[1]]]}}"#;
        let m = ModuleFile::from_json(text).unwrap().to_module(d.clone()).unwrap();
        assert_eq!(m.dims(), &[1, 1]);
        assert_eq!(m.arrow(0, 0).get(0, 0), 1);
        let wrong_rank = text.replace("[1,1], \"k\"", "[2,1], \"k\"");
        assert!(ModuleFile::from_json(&wrong_rank).unwrap().to_module(d.clone()).is_err());
        let bad_key = text.replace("(1,2)", "(2,1)");
        assert!(ModuleFile::from_json(&bad_key).unwrap().to_module(d.clone()).is_err());
        let neither = r#"{"rank": [1,1], "k": 1, "p": 3}"#;
        assert!(matches!(ModuleFile::from_json(neither).unwrap().to_module(d), Err(Error::Format(_))));
    }

    #[test]
    fn structure_key_parsing() {
        assert_eq!(parse_pair_key(" ( 1 , 2 ) ", 2).unwrap(), (0, 1));
        assert!(parse_pair_key("(1,2,3)", 3).is_err());
        assert!(parse_pair_key("1,2", 2).is_err());
        assert!(matches!(parse_pair_key("(1,3)", 2), Err(Error::VertexOutOfRange(3))));
    }
}
