//! Point-count tables over several primes, interpolation, and the closed form for Ω = ∅.

use std::collections::BTreeMap;
use std::fmt::Write;

use num_bigint::BigInt;
use serde::Serialize;

use super::point_count;
use crate::cartan::{CartanDatum, RankVector};
use crate::error::{Error, Result};
use crate::hmod::HModule;
use crate::linalg::{is_prime, lagrange_interpolate, q_multinomial, IntPoly};

#[derive(Clone, Debug, Serialize)]
pub struct PointCountTable {
    pub format_version: u32,
    pub brseq: Vec<RankVector>,
    pub k: usize,
    pub counts: BTreeMap<u32, u64>,
    pub degree_bound: usize,
    pub primes_used: Vec<u32>,
    pub polynomial: Option<IntPoly>,
    pub polynomial_text: Option<String>,
    /// P(1); a heuristic estimate of the Euler characteristic
    pub chi_estimate: Option<String>,
}

impl PointCountTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("q,count\n");
        for (q, c) in &self.counts {
            writeln!(s, "{q},{c}").unwrap();
        }
        s
    }
}

fn count_at(m: &HModule, brseq: &[RankVector], q: u32) -> Result<u64> {
    if q == m.p() {
        point_count(m, brseq)
    } else {
        point_count(&m.reduce_mod_p(q)?, brseq)
    }
}

/// Counts at each prime, without interpolation.
pub fn tabulate_counts(m: &HModule, brseq: &[RankVector], primes: &[u32]) -> Result<PointCountTable> {
    let mut counts = BTreeMap::new();
    for &q in primes {
        counts.insert(q, count_at(m, brseq, q)?);
    }
    let d = m.datum().flag_dimension_k(m.k(), brseq)?;
    Ok(PointCountTable {
        format_version: 1,
        brseq: brseq.to_vec(),
        k: m.k(),
        counts,
        degree_bound: d.max(0) as usize,
        primes_used: primes.to_vec(),
        polynomial: None,
        polynomial_text: None,
        chi_estimate: None,
    })
}

fn next_prime(mut q: u32) -> u32 {
    q += 1;
    while !is_prime(q) {
        q += 1;
    }
    q
}

/// Counts at bound + 2 primes (one beyond what interpolation needs, as a consistency check)
/// and the interpolating integer polynomial. The degree bound defaults to k·d(brseq).
pub fn counting_polynomial(
    m: &HModule,
    brseq: &[RankVector],
    primes: &[u32],
    degree_bound: Option<usize>,
) -> Result<PointCountTable> {
    if m.lift().is_none() {
        return Err(Error::NoIntegerLift);
    }
    let d = m.datum().flag_dimension_k(m.k(), brseq)?;
    let bound = degree_bound.unwrap_or(d.max(0) as usize);
    if primes.len() < bound + 1 {
        return Err(Error::NotEnoughPrimes { have: primes.len(), need: bound + 1 });
    }
    let mut used = primes.to_vec();
    if used.len() == bound + 1 {
        used.push(next_prime(*used.iter().max().unwrap()));
    }
    let mut table = tabulate_counts(m, brseq, &used)?;
    table.degree_bound = bound;
    let points: Vec<(i64, BigInt)> = used.iter().map(|&q| (q as i64, BigInt::from(table.counts[&q]))).collect();
    let poly = lagrange_interpolate(&points, bound)?;
    table.chi_estimate = Some(poly.eval_i64(1).to_string());
    table.polynomial_text = Some(poly.to_string());
    table.polynomial = Some(poly);
    Ok(table)
}

/// |Fl_r(F_q^m)| · q^{(k c_i − 1) d_i} per vertex, for a datum without arrows.
pub fn closed_form_count(datum: &CartanDatum, k: usize, brseq: &[RankVector], q: u64) -> Result<u128> {
    if !datum.omega().is_empty() {
        return Err(Error::InvalidInput("closed form needs an empty orientation".into()));
    }
    let mut total = 1u128;
    for i in 0..datum.n() {
        let parts: Vec<usize> = brseq.iter().map(|r| r[i]).collect();
        let mut di = 0;
        for a in 0..parts.len() {
            for b in a + 1..parts.len() {
                di += parts[a] * parts[b];
            }
        }
        let exp = (datum.loop_len(k, i) - 1) * di;
        total = total
            .checked_mul(q_multinomial(&parts, q))
            .and_then(|t| t.checked_mul((q as u128).checked_pow(exp as u32)?))
            .ok_or_else(|| Error::BudgetExceeded("closed-form count overflows".into()))?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::super::tests::{n_module, rv};
    use super::*;
    use crate::hmod::{from_structure_matrices, StructureMatrices};
    use std::sync::Arc;

    #[test]
    fn n_polynomial() {
        let t = counting_polynomial(&n_module(1, 2), &[rv(&[1, 1]), rv(&[1, 1])], &[2, 3], None).unwrap();
        assert_eq!(t.counts[&2], 5);
        assert_eq!(t.counts[&3], 7);
        assert_eq!(t.polynomial_text.as_deref(), Some("2q + 1"));
        assert_eq!(t.chi_estimate.as_deref(), Some("3"));
        assert_eq!(t.primes_used, vec![2, 3, 5]);
        let low = counting_polynomial(&n_module(1, 2), &[rv(&[1, 1]), rv(&[1, 1])], &[2, 3], Some(0));
        assert!(matches!(low, Err(Error::InconsistentPoint { .. })));
        assert!(matches!(
            counting_polynomial(&n_module(1, 2), &[rv(&[1, 1]), rv(&[1, 1])], &[2], None),
            Err(Error::NotEnoughPrimes { .. })
        ));
        assert!(t.to_csv().starts_with("q,count\n2,5\n"));
    }

    #[test]
    fn single_point() {
        let d = Arc::new(CartanDatum::a2());
        let s = StructureMatrices { k: 1, rank: rv(&[1, 1]), blocks: vec![vec![vec![vec![1]]]] };
        let m = from_structure_matrices(d, &s, 2).unwrap();
        let t = counting_polynomial(&m, &[rv(&[1, 0]), rv(&[0, 1])], &[2, 3, 5], None).unwrap();
        assert_eq!(t.polynomial_text.as_deref(), Some("1"));
        assert_eq!(t.chi_estimate.as_deref(), Some("1"));
    }

    #[test]
    fn closed_form_matches_enumeration() {
        for c in [vec![1, 1], vec![1, 2]] {
            let d = Arc::new(CartanDatum::discrete(c));
            for k in 1..=2 {
                for q in [2u32, 3] {
                    for r in RankVector::all_up_to(2, 3) {
                        let e = HModule::free(d.clone(), k, q, &r).unwrap();
                        for first in r.sub_vectors() {
                            let rest = &r - &first;
                            for second in rest.sub_vectors() {
                                let brseq = vec![first.clone(), second.clone(), &rest - &second];
                                let cf = closed_form_count(&d, k, &brseq, q as u64).unwrap();
                                assert_eq!(point_count(&e, &brseq).unwrap() as u128, cf);
                            }
                        }
                    }
                }
            }
        }
        assert!(closed_form_count(&CartanDatum::a2(), 1, &[rv(&[1, 0])], 2).is_err());
    }
}
