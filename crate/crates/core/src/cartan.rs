//! Symmetrizable Cartan data, orientations, the quiver of H(k) and its bilinear forms.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Index, Sub};

use crate::error::{Error, Result};

/// Greatest common divisor of two non-negative integers.
pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// One oriented pair (i,j) of Ω: arrows j → i.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrientedPair {
    pub i: usize,
    pub j: usize,
    /// g_ij, the number of parallel arrows
    pub g: usize,
    /// |c_ij| = g_ij f_ij
    pub c_abs: usize,
    pub f_ij: usize,
    pub f_ji: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CartanDatum {
    n: usize,
    c: Vec<Vec<i64>>,
    d: Vec<usize>,
    g: Vec<Vec<usize>>,
    f: Vec<Vec<usize>>,
    omega: Vec<OrientedPair>,
}

pub fn validate_cartan(c: Vec<Vec<i64>>, d: Vec<i64>) -> Result<CartanDatum> {
    let n = c.len();
    if d.len() != n || c.iter().any(|row| row.len() != n) {
        return Err(Error::NotSquare);
    }
    for i in 0..n {
        if c[i][i] != 2 {
            return Err(Error::DiagonalNotTwo(i));
        }
        if d[i] <= 0 {
            return Err(Error::NonPositiveSymmetrizer(i));
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && c[i][j] > 0 {
                return Err(Error::PositiveOffDiagonal(i, j));
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if d[i] * c[i][j] != d[j] * c[j][i] {
                return Err(Error::SymmetrizerMismatch(i, j));
            }
        }
    }
    let mut g = vec![vec![0usize; n]; n];
    let mut f = vec![vec![0usize; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && c[i][j] < 0 {
                let gij = gcd(c[i][j], c[j][i]);
                g[i][j] = gij as usize;
                f[i][j] = (c[i][j].abs() / gij) as usize;
            }
        }
    }
    Ok(CartanDatum { n, c, d: d.into_iter().map(|x| x as usize).collect(), g, f, omega: vec![] })
}

pub fn validate_orientation(datum: &CartanDatum, omega: &[(usize, usize)]) -> Result<CartanDatum> {
    let n = datum.n;
    let mut directed = vec![vec![false; n]; n];
    for &(i, j) in omega {
        if i >= n {
            return Err(Error::VertexOutOfRange(i));
        }
        if j >= n {
            return Err(Error::VertexOutOfRange(j));
        }
        if i == j || datum.c[i][j] == 0 {
            return Err(Error::PairNotAnEdge(i, j));
        }
        if directed[j][i] {
            return Err(Error::BothDirections(i.min(j), i.max(j)));
        }
        directed[i][j] = true;
    }
    for i in 0..n {
        for j in i + 1..n {
            if datum.c[i][j] < 0 && !directed[i][j] && !directed[j][i] {
                return Err(Error::MissingPair(i, j));
            }
        }
    }
    if let Some(cycle) = find_cycle(n, &directed) {
        return Err(Error::CycleInOrientation(cycle));
    }
    let mut pairs: Vec<(usize, usize)> = omega.to_vec();
    pairs.sort();
    pairs.dedup();
    let omega = pairs
        .into_iter()
        .map(|(i, j)| OrientedPair {
            i,
            j,
            g: datum.g[i][j],
            c_abs: datum.c[i][j].unsigned_abs() as usize,
            f_ij: datum.f[i][j],
            f_ji: datum.f[j][i],
        })
        .collect();
    Ok(CartanDatum { omega, ..datum.clone() })
}

/// Depth-first search for a directed cycle; edges i → j for (i,j) in the orientation.
fn find_cycle(n: usize, adj: &[Vec<bool>]) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    fn dfs(v: usize, adj: &[Vec<bool>], mark: &mut [Mark], stack: &mut Vec<usize>) -> Option<Vec<usize>> {
        mark[v] = Mark::Active;
        stack.push(v);
        for w in 0..adj.len() {
            if !adj[v][w] {
                continue;
            }
            match mark[w] {
                Mark::Active => {
                    let pos = stack.iter().position(|&x| x == w).unwrap();
                    return Some(stack[pos..].to_vec());
                }
                Mark::New => {
                    if let Some(c) = dfs(w, adj, mark, stack) {
                        return Some(c);
                    }
                }
                Mark::Done => {}
            }
        }
        stack.pop();
        mark[v] = Mark::Done;
        None
    }
    let mut mark = vec![Mark::New; n];
    for v in 0..n {
        if mark[v] == Mark::New {
            if let Some(c) = dfs(v, adj, &mut mark, &mut Vec::new()) {
                return Some(c);
            }
        }
    }
    None
}

impl CartanDatum {
    /// Validates C, D and Ω in one go. Ω pairs are 0-based here.
    pub fn new(c: Vec<Vec<i64>>, d: Vec<i64>, omega: &[(usize, usize)]) -> Result<Self> {
        let base = validate_cartan(c, d)?;
        validate_orientation(&base, omega)
    }

    /// Type A_2 with D = diag(1,1) and Ω = {(1,2)}.
    pub fn a2() -> Self {
        Self::new(vec![vec![2, -1], vec![-1, 2]], vec![1, 1], &[(0, 1)]).unwrap()
    }

    /// Type B_2 with C = [[2,-1],[-2,2]], D = diag(2,1), Ω = {(1,2)}.
    pub fn b2() -> Self {
        Self::new(vec![vec![2, -1], vec![-2, 2]], vec![2, 1], &[(0, 1)]).unwrap()
    }

    /// Kronecker type C = [[2,-2],[-2,2]], D = I, Ω = {(1,2)}.
    pub fn kronecker() -> Self {
        Self::new(vec![vec![2, -2], vec![-2, 2]], vec![1, 1], &[(0, 1)]).unwrap()
    }

    /// n vertices, no edges.
    pub fn discrete(d: Vec<i64>) -> Self {
        let n = d.len();
        let c = (0..n).map(|i| (0..n).map(|j| if i == j { 2 } else { 0 }).collect()).collect();
        Self::new(c, d, &[]).unwrap()
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn cartan(&self) -> &[Vec<i64>] {
        &self.c
    }
    pub fn c(&self, i: usize, j: usize) -> i64 {
        self.c[i][j]
    }
    /// Base symmetrizer entry c_i.
    pub fn sym(&self, i: usize) -> usize {
        self.d[i]
    }
    pub fn symmetrizer(&self) -> &[usize] {
        &self.d
    }
    pub fn g(&self, i: usize, j: usize) -> usize {
        self.g[i][j]
    }
    pub fn f(&self, i: usize, j: usize) -> usize {
        self.f[i][j]
    }
    pub fn omega(&self) -> &[OrientedPair] {
        &self.omega
    }
    pub fn omega_pairs(&self) -> Vec<(usize, usize)> {
        self.omega.iter().map(|a| (a.i, a.j)).collect()
    }

    /// Loop length k·c_i at vertex i.
    pub fn loop_len(&self, k: usize, i: usize) -> usize {
        k * self.d[i]
    }

    /// Orientation (i,j) with i < j for every edge; always acyclic.
    pub fn suggest_orientation(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.c[i][j] < 0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Vertex order in which the source j of every pair (i,j) precedes i.
    pub fn topological_order(&self) -> Vec<usize> {
        let mut indeg = vec![0usize; self.n];
        for a in &self.omega {
            indeg[a.i] += 1;
        }
        let mut order = Vec::with_capacity(self.n);
        let mut ready: Vec<usize> = (0..self.n).filter(|&v| indeg[v] == 0).collect();
        while let Some(v) = ready.pop() {
            order.push(v);
            for a in &self.omega {
                if a.j == v {
                    indeg[a.i] -= 1;
                    if indeg[a.i] == 0 {
                        ready.push(a.i);
                    }
                }
            }
        }
        order
    }

    pub fn build_quiver(&self, k: usize) -> Quiver {
        let loops = (0..self.n).map(|i| self.loop_len(k, i)).collect();
        let mut arrows = Vec::new();
        for a in &self.omega {
            for g in 0..a.g {
                arrows.push(Arrow { source: a.j, target: a.i, copy: g });
            }
        }
        Quiver { n: self.n, loop_orders: loops, arrows }
    }

    fn check_len(&self, v: &[i64]) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: v.len() });
        }
        Ok(())
    }

    /// ⟨a,b⟩ for H(k): Σ k c_i a_i b_i + Σ_{(i,j)∈Ω} k c_i c_ij a_j b_i.
    pub fn euler_form(&self, k: usize, a: &[i64], b: &[i64]) -> Result<i64> {
        self.check_len(a)?;
        self.check_len(b)?;
        let k = k as i64;
        let mut s = 0;
        for i in 0..self.n {
            s += k * self.d[i] as i64 * a[i] * b[i];
        }
        for p in &self.omega {
            s += k * self.d[p.i] as i64 * self.c[p.i][p.j] * a[p.j] * b[p.i];
        }
        Ok(s)
    }

    pub fn euler(&self, k: usize, a: &RankVector, b: &RankVector) -> i64 {
        self.euler_form(k, &a.as_i64(), &b.as_i64()).expect("rank vector length")
    }

    /// Σ k c_i a_i b_i.
    pub fn symmetrizer_form(&self, k: usize, a: &[i64], b: &[i64]) -> Result<i64> {
        self.check_len(a)?;
        self.check_len(b)?;
        Ok((0..self.n).map(|i| k as i64 * self.d[i] as i64 * a[i] * b[i]).sum())
    }

    /// Quadratic form q(r) = ⟨r,r⟩ for H(k).
    pub fn quadratic(&self, k: usize, r: &RankVector) -> i64 {
        self.euler(k, r, r)
    }

    /// d(brseq) = Σ_{a<b} ⟨r_a, r_b⟩ for H(1).
    pub fn flag_dimension(&self, brseq: &[RankVector]) -> Result<i64> {
        for r in brseq {
            self.check_len(&r.as_i64())?;
        }
        let mut s = 0;
        for a in 0..brseq.len() {
            for b in a + 1..brseq.len() {
                s += self.euler(1, &brseq[a], &brseq[b]);
            }
        }
        Ok(s)
    }

    /// Σ_{a<b} ⟨r_a, r_b⟩ for H(k).
    pub fn flag_dimension_k(&self, k: usize, brseq: &[RankVector]) -> Result<i64> {
        Ok(k as i64 * self.flag_dimension(brseq)?)
    }

    /// Number of free parameters Σ_{(i,j)∈Ω} k c_i |c_ij| r_i r_j of the structure matrices.
    pub fn structure_param_count(&self, k: usize, r: &RankVector) -> usize {
        self.omega.iter().map(|a| self.loop_len(k, a.i) * a.c_abs * r[a.i] * r[a.j]).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arrow {
    pub source: usize,
    pub target: usize,
    pub copy: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Quiver {
    pub n: usize,
    pub loop_orders: Vec<usize>,
    pub arrows: Vec<Arrow>,
}

/// Tuple of non-negative integers indexed by vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct RankVector(pub Vec<usize>);

impl RankVector {
    pub fn zero(n: usize) -> Self {
        RankVector(vec![0; n])
    }
    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = vec![0; n];
        v[i] = 1;
        RankVector(v)
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
    pub fn as_i64(&self) -> Vec<i64> {
        self.0.iter().map(|&x| x as i64).collect()
    }
    pub fn leq(&self, other: &RankVector) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
    /// Dimension vector k c_i r_i.
    pub fn dims(&self, datum: &CartanDatum, k: usize) -> Vec<usize> {
        self.0.iter().enumerate().map(|(i, &r)| datum.loop_len(k, i) * r).collect()
    }

    /// All rank vectors of the given length with entry sum in 1..=max_total.
    pub fn all_up_to(n: usize, max_total: usize) -> Vec<RankVector> {
        let mut out = Vec::new();
        let mut cur = vec![0usize; n];
        fn rec(i: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<RankVector>) {
            if i == cur.len() {
                if cur.iter().any(|&x| x > 0) {
                    out.push(RankVector(cur.clone()));
                }
                return;
            }
            for v in 0..=left {
                cur[i] = v;
                rec(i + 1, left - v, cur, out);
            }
            cur[i] = 0;
        }
        rec(0, max_total, &mut cur, &mut out);
        out
    }

    /// All e with 0 ≤ e ≤ self componentwise.
    pub fn sub_vectors(&self) -> Vec<RankVector> {
        let mut out = vec![vec![]];
        for &m in &self.0 {
            out = out
                .into_iter()
                .flat_map(|pre: Vec<usize>| {
                    (0..=m).map(move |x| {
                        let mut v = pre.clone();
                        v.push(x);
                        v
                    })
                })
                .collect();
        }
        out.into_iter().map(RankVector).collect()
    }
}

impl Index<usize> for RankVector {
    type Output = usize;
    fn index(&self, i: usize) -> &usize {
        &self.0[i]
    }
}

impl Add for &RankVector {
    type Output = RankVector;
    fn add(self, o: &RankVector) -> RankVector {
        RankVector(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &RankVector {
    type Output = RankVector;
    fn sub(self, o: &RankVector) -> RankVector {
        RankVector(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }
}

impl From<Vec<usize>> for RankVector {
    fn from(v: Vec<usize>) -> Self {
        RankVector(v)
    }
}

impl std::fmt::Display for RankVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}
