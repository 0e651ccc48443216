//! The twisted polynomial ring `K{σ}` with `σ·b = b^q σ`.
//!
//! Elements act on field elements as additive polynomials `Σ b_i z^{q^i}`.
//! Coefficients auto-embed to the highest tower level among the operands;
//! only right division is provided.

use crate::ffield::{FieldElem, FieldTower};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// `Σ b_i σ^i` with `b_i` on one tower level, trailing zeros trimmed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrePoly {
    pub coeffs: Vec<FieldElem>,
}

impl OrePoly {
    pub fn new(tower: &FieldTower, mut coeffs: Vec<FieldElem>) -> OrePoly {
        let lvl = coeffs.iter().map(|c| c.level).max().unwrap_or(0);
        for c in coeffs.iter_mut() {
            *c = tower.lift(c, lvl);
        }
        while coeffs.len() > 0 && coeffs.last().unwrap().is_zero() {
            coeffs.pop();
        }
        OrePoly { coeffs }
    }

    pub fn zero() -> OrePoly {
        OrePoly { coeffs: Vec::new() }
    }

    pub fn one(tower: &FieldTower, level: usize) -> OrePoly {
        OrePoly {
            coeffs: vec![tower.one(level)],
        }
    }

    pub fn sigma(tower: &FieldTower, level: usize) -> OrePoly {
        OrePoly {
            coeffs: vec![tower.zero(level), tower.one(level)],
        }
    }

    pub fn constant(c: FieldElem) -> OrePoly {
        if c.is_zero() {
            OrePoly::zero()
        } else {
            OrePoly { coeffs: vec![c] }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// σ-degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn level(&self) -> usize {
        self.coeffs.iter().map(|c| c.level).max().unwrap_or(0)
    }

    pub fn add(&self, tower: &FieldTower, other: &OrePoly) -> OrePoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let lvl = self.level().max(other.level());
        let mut coeffs = Vec::with_capacity(n);
        for i in 0..n {
            let a = self
                .coeffs
                .get(i)
                .map(|c| tower.lift(c, lvl))
                .unwrap_or_else(|| tower.zero(lvl));
            let b = other
                .coeffs
                .get(i)
                .map(|c| tower.lift(c, lvl))
                .unwrap_or_else(|| tower.zero(lvl));
            coeffs.push(tower.add(&a, &b));
        }
        OrePoly::new(tower, coeffs)
    }

    pub fn sub(&self, tower: &FieldTower, other: &OrePoly) -> OrePoly {
        self.add(tower, &other.neg(tower))
    }

    pub fn neg(&self, tower: &FieldTower) -> OrePoly {
        OrePoly {
            coeffs: self.coeffs.iter().map(|c| tower.neg(c)).collect(),
        }
    }

    pub fn scale(&self, tower: &FieldTower, c: &FieldElem) -> OrePoly {
        OrePoly::new(
            tower,
            self.coeffs.iter().map(|b| tower.mul(c, b)).collect(),
        )
    }

    /// Product under the commutation rule `σ·b = b^q σ`:
    /// `(Σ a_i σ^i)(Σ b_j σ^j) = Σ a_i b_j^{q^i} σ^{i+j}`.
    pub fn mul(&self, tower: &FieldTower, other: &OrePoly) -> OrePoly {
        if self.is_zero() || other.is_zero() {
            return OrePoly::zero();
        }
        let lvl = self.level().max(other.level());
        let n = self.coeffs.len() + other.coeffs.len() - 1;
        let mut coeffs = vec![tower.zero(lvl); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let a = tower.lift(a, lvl);
            // b^{q^i}, computed incrementally over j
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let tb = tower.frobenius_iter(&tower.lift(b, lvl), i);
                coeffs[i + j] = tower.add(&coeffs[i + j], &tower.mul(&a, &tb));
            }
        }
        OrePoly::new(tower, coeffs)
    }

    /// Evaluates the additive polynomial `Σ b_i z^{q^i}` at `z`.
    pub fn eval(&self, tower: &FieldTower, z: &FieldElem) -> FieldElem {
        if self.is_zero() {
            return tower.zero(z.level);
        }
        tower.eval_additive(&self.coeffs, z)
    }

    /// Right division: `self = quot · other + rem`, `deg(rem) < deg(other)`.
    pub fn right_divmod(&self, tower: &FieldTower, other: &OrePoly) -> Result<(OrePoly, OrePoly)> {
        if other.is_zero() {
            return Err(Error::DivisionByZero("ore division by zero".into()));
        }
        let lvl = self.level().max(other.level());
        let db = other.degree().unwrap();
        let mut rem = OrePoly::new(tower, self.coeffs.clone());
        let mut quot_coeffs: Vec<FieldElem> = Vec::new();
        while let Some(dr) = rem.degree() {
            if dr < db {
                break;
            }
            let shift = dr - db;
            // c σ^shift · other has leading coefficient c · b_db^{q^shift}
            let lead = tower.frobenius_iter(&tower.lift(&other.coeffs[db], lvl), shift);
            let c = tower
                .div(&tower.lift(&rem.coeffs[dr], lvl), &lead)
                .expect("lead invertible over a field");
            let mut mono = vec![tower.zero(lvl); shift + 1];
            mono[shift] = c.clone();
            let mono = OrePoly { coeffs: mono };
            rem = rem.sub(tower, &mono.mul(tower, other));
            if quot_coeffs.len() < shift + 1 {
                quot_coeffs.resize(shift + 1, tower.zero(lvl));
            }
            quot_coeffs[shift] = c;
        }
        Ok((OrePoly::new(tower, quot_coeffs), rem))
    }

    /// `self^n` by repeated multiplication.
    pub fn pow(&self, tower: &FieldTower, n: usize) -> OrePoly {
        let lvl = self.level();
        let mut acc = OrePoly::one(tower, lvl);
        for _ in 0..n {
            acc = acc.mul(tower, self);
        }
        acc
    }

    /// `F_q`-basis of the kernel of the induced additive map on `level`.
    pub fn kernel_in(&self, tower: &FieldTower, level: usize) -> Vec<FieldElem> {
        tower.additive_kernel(&self.coeffs, level)
    }
}

/// A square matrix of twisted polynomials, acting on `G_a^k` points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OreMat {
    pub k: usize,
    /// row-major, `k*k` entries
    pub entries: Vec<OrePoly>,
}

impl OreMat {
    pub fn new(k: usize, entries: Vec<OrePoly>) -> Result<OreMat> {
        if entries.len() != k * k {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries, got {}",
                k * k,
                entries.len()
            )));
        }
        Ok(OreMat { k, entries })
    }

    pub fn identity(tower: &FieldTower, k: usize, level: usize) -> OreMat {
        let mut entries = vec![OrePoly::zero(); k * k];
        for i in 0..k {
            entries[i * k + i] = OrePoly::one(tower, level);
        }
        OreMat { k, entries }
    }

    pub fn at(&self, i: usize, j: usize) -> &OrePoly {
        &self.entries[i * self.k + j]
    }

    pub fn add(&self, tower: &FieldTower, other: &OreMat) -> OreMat {
        let entries = self
            .entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| a.add(tower, b))
            .collect();
        OreMat { k: self.k, entries }
    }

    pub fn mul(&self, tower: &FieldTower, other: &OreMat) -> OreMat {
        let k = self.k;
        let mut entries = vec![OrePoly::zero(); k * k];
        for i in 0..k {
            for j in 0..k {
                let mut acc = OrePoly::zero();
                for l in 0..k {
                    acc = acc.add(tower, &self.at(i, l).mul(tower, other.at(l, j)));
                }
                entries[i * k + j] = acc;
            }
        }
        OreMat { k, entries }
    }

    pub fn scale(&self, tower: &FieldTower, c: &FieldElem) -> OreMat {
        OreMat {
            k: self.k,
            entries: self.entries.iter().map(|p| p.scale(tower, c)).collect(),
        }
    }

    /// Componentwise additive-polynomial evaluation on a `G_a^k` point.
    pub fn apply(&self, tower: &FieldTower, v: &[FieldElem]) -> Result<Vec<FieldElem>> {
        if v.len() != self.k {
            return Err(Error::DimensionMismatch(format!(
                "matrix of size {} applied to point of size {}",
                self.k,
                v.len()
            )));
        }
        let lvl = v
            .iter()
            .map(|c| c.level)
            .chain(self.entries.iter().map(|p| p.level()))
            .max()
            .unwrap_or(0);
        let mut out = Vec::with_capacity(self.k);
        for i in 0..self.k {
            let mut acc = tower.zero(lvl);
            for j in 0..self.k {
                let t = self.at(i, j).eval(tower, &v[j]);
                acc = tower.add(&acc, &tower.lift(&t, lvl));
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// The constant-term matrix (coefficients of σ⁰), as a dense field matrix.
    pub fn constant_matrix(&self, tower: &FieldTower) -> Vec<Vec<FieldElem>> {
        let lvl = self.entries.iter().map(|p| p.level()).max().unwrap_or(0);
        (0..self.k)
            .map(|i| {
                (0..self.k)
                    .map(|j| {
                        self.at(i, j)
                            .coeffs
                            .first()
                            .map(|c| tower.lift(c, lvl))
                            .unwrap_or_else(|| tower.zero(lvl))
                    })
                    .collect()
            })
            .collect()
    }
}

// ---- serialization ----

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrePolyJson {
    pub level: usize,
    pub coeffs: Vec<Vec<u64>>,
}

impl OrePoly {
    pub fn to_json(&self) -> OrePolyJson {
        OrePolyJson {
            level: self.level(),
            coeffs: self.coeffs.iter().map(|c| c.coeffs.clone()).collect(),
        }
    }

    pub fn from_json(tower: &FieldTower, j: &OrePolyJson) -> Result<OrePoly> {
        let coeffs = j
            .coeffs
            .iter()
            .map(|c| tower.elem(j.level, c.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(OrePoly::new(tower, coeffs))
    }
}
