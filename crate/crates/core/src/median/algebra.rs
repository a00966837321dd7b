use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::identities::{verify_median_axioms, CheckPolicy};
use super::{TernaryOp, TernaryTable};
use crate::error::{ensure_within, Error, Result};

/// Largest element count stored as an explicit `n³` table.
pub const TABLE_LIMIT: usize = 256;

/// Largest cube dimension accepted by [`FiniteMedianAlgebra::median_cube`].
pub const CUBE_LIMIT: usize = 16;

/// Bitwise three-way majority.
#[inline]
pub fn majority(a: u64, b: u64, c: u64) -> u64 {
    (a & b) | (b & c) | (a & c)
}

#[derive(Clone, Debug)]
enum Backing {
    Table(Vec<u32>),
    /// Elements are bit vectors closed under bitwise majority.
    Majority {
        codes: Vec<u64>,
        index: HashMap<u64, u32>,
    },
}

/// A finite set with a ternary operation satisfying (M1)–(M3).
#[derive(Clone, Debug)]
pub struct FiniteMedianAlgebra {
    labels: Vec<String>,
    backing: Backing,
}

#[derive(Serialize, Deserialize)]
struct AlgebraJson {
    elements: Vec<String>,
    median: Vec<u32>,
}

impl FiniteMedianAlgebra {
    /// Builds an algebra from a row-major `n³` table, rejecting tables that
    /// are not median operators.
    pub fn from_table(labels: Vec<String>, table: Vec<u32>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::EmptySet);
        }
        ensure_within("median table elements", n, TABLE_LIMIT)?;
        let raw = TernaryTable::new(n, table)
            .ok_or_else(|| Error::invalid(format!("median table must have {} entries with values below {n}", n * n * n)))?;
        let report = verify_median_axioms(&raw, &CheckPolicy::default());
        if let Some(msg) = report.first_violation() {
            return Err(Error::NotMedian(msg));
        }
        Ok(FiniteMedianAlgebra {
            labels,
            backing: Backing::Table(raw.data().to_vec()),
        })
    }

    /// Builds an algebra from bit vectors; the set must be closed under
    /// bitwise majority.
    pub fn from_codes(labels: Vec<String>, codes: Vec<u64>) -> Result<Self> {
        if codes.is_empty() {
            return Err(Error::EmptySet);
        }
        if labels.len() != codes.len() {
            return Err(Error::invalid("one label per code required"));
        }
        ensure_within("majority-closure check", codes.len(), TABLE_LIMIT)?;
        let alg = Self::from_codes_unchecked(labels, codes)?;
        if let Backing::Majority { codes, index } = &alg.backing {
            for &a in codes {
                for &b in codes {
                    for &c in codes {
                        if !index.contains_key(&majority(a, b, c)) {
                            return Err(Error::NotMedian(format!(
                                "codes not closed under majority: {a:#b}, {b:#b}, {c:#b}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(alg)
    }

    pub(crate) fn from_codes_unchecked(labels: Vec<String>, codes: Vec<u64>) -> Result<Self> {
        let mut index = HashMap::with_capacity(codes.len());
        for (i, &c) in codes.iter().enumerate() {
            if index.insert(c, i as u32).is_some() {
                return Err(Error::invalid(format!("duplicate element code {c:#b}")));
            }
        }
        Ok(FiniteMedianAlgebra {
            labels,
            backing: Backing::Majority { codes, index },
        })
    }

    /// Freezes any ternary operator into a validated table.
    pub fn tabulate(op: &impl TernaryOp, labels: Vec<String>) -> Result<Self> {
        if labels.len() != op.len() {
            return Err(Error::invalid("one label per element required"));
        }
        ensure_within("median table elements", op.len(), TABLE_LIMIT)?;
        Self::from_table(labels, TernaryTable::from_op(op).data().to_vec())
    }

    /// The median cube `Iⁿ`: n-bit vectors under coordinatewise majority.
    /// Labels are bit strings, coordinate 1 first.
    pub fn median_cube(n: usize) -> Result<Self> {
        ensure_within("median cube dimension", n, CUBE_LIMIT)?;
        let codes: Vec<u64> = (0..1u64 << n).collect();
        let labels = codes.iter().map(|&c| bit_label(c, n)).collect();
        Self::from_codes_unchecked(labels, codes)
    }

    /// Direct product with componentwise median.
    pub fn product(&self, other: &Self) -> Result<Self> {
        let (n, m) = (self.len(), other.len());
        ensure_within("product elements", n * m, TABLE_LIMIT)?;
        let nm = n * m;
        let mut table = Vec::with_capacity(nm * nm * nm);
        for x in 0..nm {
            for y in 0..nm {
                for z in 0..nm {
                    let a = self.median(x / m, y / m, z / m);
                    let b = other.median(x % m, y % m, z % m);
                    table.push((a * m + b) as u32);
                }
            }
        }
        let labels = (0..nm)
            .map(|x| format!("({},{})", self.labels[x / m], other.labels[x % m]))
            .collect();
        Ok(FiniteMedianAlgebra {
            labels,
            backing: Backing::Table(table),
        })
    }

    /// Restriction to a median-closed subset, reindexed in the given order.
    pub fn subalgebra(&self, elements: &[usize]) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::EmptySet);
        }
        let mut position = vec![u32::MAX; self.len()];
        for (i, &e) in elements.iter().enumerate() {
            if e >= self.len() {
                return Err(Error::invalid(format!("element {e} out of range")));
            }
            position[e] = i as u32;
        }
        if let Backing::Majority { codes, .. } = &self.backing {
            let sub_codes = elements.iter().map(|&e| codes[e]).collect();
            let labels = elements.iter().map(|&e| self.labels[e].clone()).collect();
            let alg = Self::from_codes_unchecked(labels, sub_codes)?;
            ensure_closed(&alg, |x, y, z| alg.try_median(x, y, z))?;
            return Ok(alg);
        }
        ensure_within("median table elements", elements.len(), TABLE_LIMIT)?;
        let k = elements.len();
        let mut table = Vec::with_capacity(k * k * k);
        for &a in elements {
            for &b in elements {
                for &c in elements {
                    let v = position[self.median(a, b, c)];
                    if v == u32::MAX {
                        return Err(Error::invalid("subset is not closed under the median"));
                    }
                    table.push(v);
                }
            }
        }
        Ok(FiniteMedianAlgebra {
            labels: elements.iter().map(|&e| self.labels[e].clone()).collect(),
            backing: Backing::Table(table),
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Bit-vector code of an element when the algebra sits in a majority cube.
    pub fn code(&self, i: usize) -> Option<u64> {
        match &self.backing {
            Backing::Majority { codes, .. } => Some(codes[i]),
            Backing::Table(_) => None,
        }
    }

    pub fn index_of_code(&self, code: u64) -> Option<usize> {
        match &self.backing {
            Backing::Majority { index, .. } => index.get(&code).map(|&i| i as usize),
            Backing::Table(_) => None,
        }
    }

    fn try_median(&self, a: usize, b: usize, c: usize) -> Option<usize> {
        match &self.backing {
            Backing::Table(t) => {
                let n = self.labels.len();
                Some(t[(a * n + b) * n + c] as usize)
            }
            Backing::Majority { codes, index } => index
                .get(&majority(codes[a], codes[b], codes[c]))
                .map(|&i| i as usize),
        }
    }

    pub fn to_json(&self) -> Result<serde_json::Value> {
        ensure_within("median table elements", self.len(), TABLE_LIMIT)?;
        let table = TernaryTable::from_op(self);
        Ok(serde_json::to_value(AlgebraJson {
            elements: self.labels.clone(),
            median: table.data().to_vec(),
        })?)
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let parsed: AlgebraJson = serde_json::from_value(value.clone())?;
        Self::from_table(parsed.elements, parsed.median)
    }
}

fn ensure_closed(
    alg: &FiniteMedianAlgebra,
    op: impl Fn(usize, usize, usize) -> Option<usize>,
) -> Result<()> {
    let n = alg.len();
    ensure_within("closure check elements", n, TABLE_LIMIT)?;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if op(a, b, c).is_none() {
                    return Err(Error::invalid("subset is not closed under the median"));
                }
            }
        }
    }
    Ok(())
}

pub(crate) fn bit_label(code: u64, width: usize) -> String {
    (0..width)
        .map(|i| if code >> i & 1 == 1 { '1' } else { '0' })
        .collect()
}

impl TernaryOp for FiniteMedianAlgebra {
    fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    fn median(&self, a: usize, b: usize, c: usize) -> usize {
        self.try_median(a, b, c)
            .expect("majority backing is closed by construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_medians() {
        let c1 = FiniteMedianAlgebra::median_cube(1).unwrap();
        assert_eq!(c1.len(), 2);
        assert_eq!(c1.median(0, 1, 0), 0);

        let c2 = FiniteMedianAlgebra::median_cube(2).unwrap();
        let p = |s: &str| c2.index_of(s).unwrap();
        // (0,0), (0,1), (1,1) with coordinate 1 written first.
        assert_eq!(c2.median(p("00"), p("01"), p("11")), p("01"));
    }

    #[test]
    fn cube_limit() {
        assert!(FiniteMedianAlgebra::median_cube(16).is_ok());
        let err = FiniteMedianAlgebra::median_cube(17).unwrap_err();
        assert!(err.is_resource_limit());
    }

    #[test]
    fn json_round_trip() {
        let c2 = FiniteMedianAlgebra::median_cube(2).unwrap();
        let json = c2.to_json().unwrap();
        assert_eq!(json["median"].as_array().unwrap().len(), 64);
        let back = FiniteMedianAlgebra::from_json(&json).unwrap();
        assert_eq!(TernaryTable::from_op(&back), TernaryTable::from_op(&c2));
        assert_eq!(back.labels(), c2.labels());
    }

    #[test]
    fn rejects_non_median_tables() {
        let c1 = FiniteMedianAlgebra::median_cube(1).unwrap();
        let mut t = TernaryTable::from_op(&c1);
        t.set(0, 0, 1, 1);
        let err = FiniteMedianAlgebra::from_table(c1.labels().to_vec(), t.data().to_vec()).unwrap_err();
        assert!(matches!(err, Error::NotMedian(_)));
    }

    #[test]
    fn product_and_subalgebra() {
        let c1 = FiniteMedianAlgebra::median_cube(1).unwrap();
        let sq = c1.product(&c1).unwrap();
        assert_eq!(sq.len(), 4);
        assert_eq!(sq.label(1), "(0,1)");
        let diag = sq.subalgebra(&[0, 3]).unwrap();
        assert_eq!(diag.median(0, 1, 1), 1);
        assert_eq!(sq.subalgebra(&[0, 1, 2]).unwrap().len(), 3);

        let c3 = FiniteMedianAlgebra::median_cube(3).unwrap();
        assert!(c3.subalgebra(&[1, 2, 4]).is_err());
        assert_eq!(c3.subalgebra(&[0, 1, 2, 4]).unwrap().len(), 4);
        let c3_table = c3.product(&FiniteMedianAlgebra::median_cube(0).unwrap()).unwrap();
        assert!(c3_table.subalgebra(&[1, 2, 4]).is_err());
    }
}
