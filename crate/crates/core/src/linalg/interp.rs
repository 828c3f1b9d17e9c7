use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer polynomial, coefficients from the constant term upward.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntPoly {
    #[serde(with = "bigint_vec")]
    pub coeffs: Vec<BigInt>,
}

mod bigint_vec {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        let strs: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        serde::Serialize::serialize(&strs, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        let strs: Vec<String> = Vec::deserialize(d)?;
        strs.iter().map(|s| s.parse().map_err(serde::de::Error::custom)).collect()
    }
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        IntPoly { coeffs }
    }

    pub fn from_i64(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&x| BigInt::from(x)).collect())
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_i64(&self, x: i64) -> BigInt {
        self.eval(&BigInt::from(x))
    }

    pub fn to_i64_coeffs(&self) -> Option<Vec<i64>> {
        self.coeffs.iter().map(|c| c.to_i64()).collect()
    }
}

impl std::fmt::Display for IntPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let show_coeff = i == 0 || !a.is_one();
            if show_coeff {
                write!(f, "{}", a)?;
            }
            match i {
                0 => {}
                1 => write!(f, "q")?,
                _ => write!(f, "q^{}", i)?,
            }
        }
        Ok(())
    }
}

/// Interpolates the first `degree_bound + 1` points by a polynomial of degree at most
/// `degree_bound` and checks every remaining point against it.
///
/// Fails with `NonIntegerCoefficient` if the interpolant is not integral, and with
/// `InconsistentPoint` if a surplus point is off the interpolant.
pub fn lagrange_interpolate(points: &[(i64, BigInt)], degree_bound: usize) -> Result<IntPoly> {
    let need = degree_bound + 1;
    if points.len() < need {
        return Err(Error::NotEnoughPoints { have: points.len(), need });
    }
    for (i, a) in points.iter().enumerate() {
        if points[..i].iter().any(|b| b.0 == a.0) {
            return Err(Error::DuplicateNode(a.0));
        }
    }
    let base = &points[..need];
    // Newton divided differences
    let xs: Vec<BigRational> = base.iter().map(|(x, _)| BigRational::from_integer(BigInt::from(*x))).collect();
    let mut dd: Vec<BigRational> = base.iter().map(|(_, y)| BigRational::from_integer(y.clone())).collect();
    for level in 1..need {
        for i in (level..need).rev() {
            let num = &dd[i] - &dd[i - 1];
            let den = &xs[i] - &xs[i - level];
            dd[i] = num / den;
        }
    }
    // expand Newton form into monomial coefficients
    let mut coeffs: Vec<BigRational> = vec![BigRational::zero(); need];
    let mut basis: Vec<BigRational> = vec![BigRational::one()];
    for (i, d) in dd.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            coeffs[j] += d * b;
        }
        if i + 1 < need {
            let mut next = vec![BigRational::zero(); basis.len() + 1];
            for (j, b) in basis.iter().enumerate() {
                next[j + 1] += b;
                next[j] -= &xs[i] * b;
            }
            basis = next;
        }
    }
    let mut ints = Vec::with_capacity(need);
    for (deg, c) in coeffs.iter().enumerate() {
        if !c.is_integer() {
            return Err(Error::NonIntegerCoefficient { degree: deg, value: c.to_string() });
        }
        ints.push(c.to_integer());
    }
    let poly = IntPoly::new(ints);
    for (x, y) in &points[need..] {
        let v = poly.eval_i64(*x);
        if &v != y {
            return Err(Error::InconsistentPoint { q: *x, expected: y.to_string(), got: v.to_string() });
        }
    }
    Ok(poly)
}
