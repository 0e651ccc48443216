//! Deterministic towers of finite fields.
//!
//! A [`FieldTower`] is a chain `F_q = L_0 ⊂ L_1 ⊂ …` of finite extensions of a
//! base field `F_q` (`q = p^e`).  Every level stores a monic irreducible
//! polynomial over the previous level, selected by a fixed deterministic rule,
//! so the same `(p, e, degree sequence)` always reproduces bit-identical
//! towers.  Elements are flat coefficient vectors over `F_p` in the product
//! basis of the chain; embedding a lower level into a higher one is
//! zero-padding, which keeps mixed-level arithmetic cheap.
//!
//! Two extension rules are used:
//!
//! * general extensions take the lexicographically least monic irreducible of
//!   the requested degree (scanned constant coefficient first);
//! * extensions forced by an Artin–Schreier obstruction use the modulus
//!   `z^p - z - b` with `b` the least element making it irreducible and
//!   trace-compatible.  Roots of `x^q - x = c` can then be computed by a
//!   per-level descent instead of a dense solve, which is what makes deep
//!   torsion towers affordable.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Default cap on the absolute degree of the tower over `F_p`.
pub const DEFAULT_MAX_ABS: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LevelKind {
    /// The base field `F_q` itself (over `F_p`).
    Base,
    /// Built from the lexicographically least irreducible of its degree.
    LexIrreducible,
    /// Built as `z^p - z - b`.
    ArtinSchreier,
}

#[derive(Debug, Clone)]
struct Level {
    kind: LevelKind,
    /// Degree over the previous level (level 0: degree of `F_q` over `F_p`).
    rel: usize,
    /// Degree over `F_p`.
    abs: usize,
    /// Degree over `F_q`.
    qdeg: usize,
    base_abs: usize,
    /// `x^rel = -(c_0 + c_1 x + … + c_{rel-1} x^{rel-1})`, blocks of `base_abs`.
    modulus: Vec<u64>,
    /// `z^p` at this level, flat of length `abs`.
    gen_p: Vec<u64>,
    /// Power sums `s_i = Tr_{L/K}(z^i)`, `0 <= i < rel`, each a base element.
    power_sums: Vec<u64>,
    /// Artin–Schreier levels: `z^q - z` as a base element, and `Tr_{K/F_q}` of it.
    as_shift: Option<Vec<u64>>,
    as_shift_tr: Option<Vec<u64>>,
}

/// An element of one level of a [`FieldTower`].
///
/// `coeffs` is the flat `F_p`-coefficient vector in the product basis of the
/// chain up to `level`; its length is the absolute degree of that level.
/// Elements only make sense relative to the tower that created them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldElem {
    pub level: usize,
    pub coeffs: Vec<u64>,
}

impl FieldElem {
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }
}

/// A deterministic chain of finite-field extensions of `F_q`.
#[derive(Debug, Clone)]
pub struct FieldTower {
    p: u64,
    e: usize,
    levels: Vec<Level>,
    max_abs: usize,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl FieldTower {
    /// Builds the tower base `F_q`, `q = p^e`, over `F_p` with the canonical
    /// (lexicographically least) irreducible of degree `e`.
    pub fn new(p: u64, e: usize) -> Result<FieldTower> {
        if !is_prime(p) {
            return Err(Error::LevelError(format!("{p} is not prime")));
        }
        if e == 0 {
            return Err(Error::LevelError("exponent must be positive".into()));
        }
        let mut tower = FieldTower {
            p,
            e,
            levels: Vec::new(),
            max_abs: DEFAULT_MAX_ABS,
        };
        // Bootstrap: a pseudo-level for F_p so the scan helpers can run.
        let modulus = tower.lex_irreducible_over_prime(e);
        tower.push_level(LevelKind::Base, e, 1, modulus)?;
        Ok(tower)
    }

    /// Adjusts the absolute-degree budget for tower growth.
    pub fn with_budget(mut self, max_abs: usize) -> FieldTower {
        self.max_abs = max_abs;
        self
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn e(&self) -> usize {
        self.e
    }

    /// `q = p^e` (fits in u64 for all supported sizes).
    pub fn q(&self) -> u64 {
        self.p.pow(self.e as u32)
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn top_level(&self) -> usize {
        self.levels.len() - 1
    }

    /// Absolute degree of `level` over `F_p`.
    pub fn abs_degree(&self, level: usize) -> usize {
        self.levels[level].abs
    }

    /// Degree of `level` over `F_q`.
    pub fn q_degree(&self, level: usize) -> usize {
        self.levels[level].qdeg
    }

    /// Number of elements of `level` as u128, saturating.
    pub fn level_size(&self, level: usize) -> u128 {
        let mut n: u128 = 1;
        for _ in 0..self.levels[level].abs {
            n = n.saturating_mul(self.p as u128);
        }
        n
    }

    // ---- element constructors ----

    pub fn zero(&self, level: usize) -> FieldElem {
        FieldElem {
            level,
            coeffs: vec![0; self.levels[level].abs],
        }
    }

    pub fn one(&self, level: usize) -> FieldElem {
        self.scalar(level, 1)
    }

    /// The image of the integer `c` (an `F_p` scalar) at `level`.
    pub fn scalar(&self, level: usize, c: u64) -> FieldElem {
        let mut z = self.zero(level);
        z.coeffs[0] = c % self.p;
        z
    }

    /// The generator `z` of `level` over its base (for level 0: of `F_q` over `F_p`).
    pub fn generator(&self, level: usize) -> FieldElem {
        let mut z = self.zero(level);
        let lv = &self.levels[level];
        if lv.rel > 1 {
            z.coeffs[lv.base_abs] = 1;
        } else {
            // trivial extension: generator is 1
            z.coeffs[0] = 1;
        }
        z
    }

    /// Builds an element from a flat coefficient vector (mod p reduction applied).
    pub fn elem(&self, level: usize, coeffs: Vec<u64>) -> Result<FieldElem> {
        if coeffs.len() != self.levels[level].abs {
            return Err(Error::DimensionMismatch(format!(
                "level {level} expects {} coefficients, got {}",
                self.levels[level].abs,
                coeffs.len()
            )));
        }
        Ok(FieldElem {
            level,
            coeffs: coeffs.into_iter().map(|c| c % self.p).collect(),
        })
    }

    /// Decodes `k` as the `k`-th element of `level` in the canonical order
    /// (little-endian base-`p` digits of the flat vector).
    pub fn elem_from_index(&self, level: usize, mut k: u128) -> FieldElem {
        let abs = self.levels[level].abs;
        let mut coeffs = vec![0u64; abs];
        for c in coeffs.iter_mut() {
            *c = (k % self.p as u128) as u64;
            k /= self.p as u128;
        }
        FieldElem { level, coeffs }
    }

    /// Iterates every element of `level`; intended for small fields only.
    pub fn enumerate(&self, level: usize) -> impl Iterator<Item = FieldElem> + '_ {
        let n = self.level_size(level);
        (0..n).map(move |k| self.elem_from_index(level, k))
    }

    // ---- level navigation ----

    /// Embeds `a` into `to >= a.level` (zero padding along the chain).
    pub fn lift(&self, a: &FieldElem, to: usize) -> FieldElem {
        assert!(to >= a.level, "lift goes upward");
        let mut coeffs = a.coeffs.clone();
        coeffs.resize(self.levels[to].abs, 0);
        FieldElem { level: to, coeffs }
    }

    /// Projects `a` down to `to <= a.level` if it actually lies in that subfield.
    pub fn project(&self, a: &FieldElem, to: usize) -> Result<FieldElem> {
        if to > a.level {
            return Err(Error::LevelError(format!(
                "cannot project level {} to higher level {to}",
                a.level
            )));
        }
        let target_abs = self.levels[to].abs;
        if a.coeffs[target_abs..].iter().any(|&c| c != 0) {
            return Err(Error::LevelError(format!(
                "element does not lie in level {to}"
            )));
        }
        Ok(FieldElem {
            level: to,
            coeffs: a.coeffs[..target_abs].to_vec(),
        })
    }

    /// Smallest level of the chain that actually contains `a`.
    pub fn minimal_level(&self, a: &FieldElem) -> usize {
        let mut lvl = a.level;
        while lvl > 0 {
            let below = self.levels[lvl - 1].abs;
            if a.coeffs[below..].iter().any(|&c| c != 0) {
                break;
            }
            lvl -= 1;
        }
        lvl
    }

    fn common(&self, a: &FieldElem, b: &FieldElem) -> (FieldElem, FieldElem, usize) {
        let lvl = a.level.max(b.level);
        (self.lift(a, lvl), self.lift(b, lvl), lvl)
    }

    // ---- arithmetic ----

    pub fn add(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        let (mut x, y, lvl) = self.common(a, b);
        for (xi, yi) in x.coeffs.iter_mut().zip(y.coeffs.iter()) {
            *xi = (*xi + *yi) % self.p;
        }
        x.level = lvl;
        x
    }

    pub fn sub(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        let (mut x, y, lvl) = self.common(a, b);
        for (xi, yi) in x.coeffs.iter_mut().zip(y.coeffs.iter()) {
            *xi = (*xi + self.p - *yi) % self.p;
        }
        x.level = lvl;
        x
    }

    pub fn neg(&self, a: &FieldElem) -> FieldElem {
        let mut x = a.clone();
        for c in x.coeffs.iter_mut() {
            *c = (self.p - *c) % self.p;
        }
        x
    }

    pub fn mul(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        let (x, y, lvl) = self.common(a, b);
        let mut out = vec![0u64; self.levels[lvl].abs];
        let mut scratch = vec![0u64; self.scratch_size(lvl)];
        self.mul_slices(lvl, &x.coeffs, &y.coeffs, &mut out, &mut scratch);
        FieldElem { level: lvl, coeffs: out }
    }

    pub fn eq(&self, a: &FieldElem, b: &FieldElem) -> bool {
        let (x, y, _) = self.common(a, b);
        x.coeffs == y.coeffs
    }

    pub fn pow(&self, a: &FieldElem, mut n: u64) -> FieldElem {
        let mut base = a.clone();
        let mut acc = self.one(a.level);
        while n > 0 {
            if n & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            n >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via polynomial xgcd down the chain.
    pub fn inv(&self, a: &FieldElem) -> Result<FieldElem> {
        if a.is_zero() {
            return Err(Error::DivisionByZero("inverse of zero".into()));
        }
        let coeffs = self.inv_slices(a.level, &a.coeffs)?;
        Ok(FieldElem { level: a.level, coeffs })
    }

    pub fn div(&self, a: &FieldElem, b: &FieldElem) -> Result<FieldElem> {
        Ok(self.mul(a, &self.inv(b)?))
    }

    // ---- slice engine ----

    fn scratch_size(&self, lvl: usize) -> usize {
        // conv buffer + one block temp per level of the chain
        let mut total = 0;
        let mut l = lvl;
        loop {
            let lev = &self.levels[l];
            total += (2 * lev.rel - 1) * lev.base_abs + lev.base_abs;
            if l == 0 {
                break;
            }
            l -= 1;
        }
        total + 8
    }

    /// `out += a * b` at the flat level `lvl`; `out` must hold `abs(lvl)` slots.
    fn mul_slices(&self, lvl: usize, a: &[u64], b: &[u64], out: &mut [u64], scratch: &mut [u64]) {
        let lev = &self.levels[lvl];
        let d = lev.rel;
        let bs = lev.base_abs;
        if lvl == 0 {
            // polynomial over F_p modulo the base modulus
            let p = self.p;
            let (conv, _rest) = scratch.split_at_mut(2 * d - 1);
            conv.iter_mut().for_each(|c| *c = 0);
            for i in 0..d {
                if a[i] == 0 {
                    continue;
                }
                for j in 0..d {
                    conv[i + j] = (conv[i + j] + a[i] * b[j]) % p;
                }
            }
            for k in (d..2 * d - 1).rev() {
                let c = conv[k];
                if c != 0 {
                    conv[k] = 0;
                    for i in 0..d {
                        let m = lev.modulus[i];
                        if m != 0 {
                            // x^d = -sum m_i x^i
                            conv[k - d + i] = (conv[k - d + i] + (p - m) * c) % p;
                        }
                    }
                }
            }
            out[..d].copy_from_slice(&conv[..d]);
            return;
        }
        let (conv, rest) = scratch.split_at_mut((2 * d - 1) * bs);
        let (tmp, rest2) = rest.split_at_mut(bs);
        conv.iter_mut().for_each(|c| *c = 0);
        for i in 0..d {
            let abl = &a[i * bs..(i + 1) * bs];
            if abl.iter().all(|&c| c == 0) {
                continue;
            }
            for j in 0..d {
                let bbl = &b[j * bs..(j + 1) * bs];
                if bbl.iter().all(|&c| c == 0) {
                    continue;
                }
                tmp.iter_mut().for_each(|c| *c = 0);
                self.mul_slices(lvl - 1, abl, bbl, tmp, rest2);
                let dst = &mut conv[(i + j) * bs..(i + j + 1) * bs];
                for (o, t) in dst.iter_mut().zip(tmp.iter()) {
                    *o = (*o + *t) % self.p;
                }
            }
        }
        for k in (d..2 * d - 1).rev() {
            let head = k * bs;
            if conv[head..head + bs].iter().all(|&c| c == 0) {
                continue;
            }
            let cblk: Vec<u64> = conv[head..head + bs].to_vec();
            conv[head..head + bs].iter_mut().for_each(|c| *c = 0);
            for i in 0..d {
                let mblk = &lev.modulus[i * bs..(i + 1) * bs];
                if mblk.iter().all(|&c| c == 0) {
                    continue;
                }
                tmp.iter_mut().for_each(|c| *c = 0);
                self.mul_slices(lvl - 1, &cblk, mblk, tmp, rest2);
                let dst = &mut conv[(k - d + i) * bs..(k - d + i + 1) * bs];
                for (o, t) in dst.iter_mut().zip(tmp.iter()) {
                    // subtract: x^d = -sum m_i x^i
                    *o = (*o + self.p - *t) % self.p;
                }
            }
        }
        out.copy_from_slice(&conv[..d * bs]);
    }

    fn inv_slices(&self, lvl: usize, a: &[u64]) -> Result<Vec<u64>> {
        if lvl == 0 && self.e == 1 {
            // F_p: Fermat
            let v = a[0] % self.p;
            if v == 0 {
                return Err(Error::DivisionByZero("inverse of zero".into()));
            }
            return Ok(vec![mod_pow(v, self.p - 2, self.p)]);
        }
        // xgcd of a (degree < rel) with the modulus (degree rel) over the base.
        let lev = &self.levels[lvl];
        let bs = lev.base_abs;
        let d = lev.rel;
        let base = if lvl == 0 { usize::MAX } else { lvl - 1 };
        // polynomials as Vec of base blocks
        let blk = |v: &[u64], i: usize| -> Vec<u64> { v[i * bs..(i + 1) * bs].to_vec() };
        let mut r0: Vec<Vec<u64>> = (0..d).map(|i| blk(&lev.modulus, i)).collect();
        r0.push(vec![0; bs]);
        if bs > 0 {
            r0[d] = {
                let mut one = vec![0; bs];
                one[0] = 1;
                one
            };
        }
        let mut r1: Vec<Vec<u64>> = (0..d).map(|i| blk(a, i)).collect();
        let mut s0: Vec<Vec<u64>> = vec![vec![0; bs]];
        let mut s1: Vec<Vec<u64>> = vec![{
            let mut one = vec![0; bs];
            one[0] = 1;
            one
        }];
        let deg = |v: &[Vec<u64>]| -> Option<usize> {
            (0..v.len()).rev().find(|&i| v[i].iter().any(|&c| c != 0))
        };
        let base_mul = |x: &[u64], y: &[u64]| -> Vec<u64> {
            if base == usize::MAX {
                vec![(x[0] * y[0]) % self.p]
            } else {
                let mut out = vec![0; bs];
                let mut scratch = vec![0u64; self.scratch_size(base)];
                self.mul_slices(base, x, y, &mut out, &mut scratch);
                out
            }
        };
        let base_inv = |x: &[u64]| -> Result<Vec<u64>> {
            if base == usize::MAX {
                if x[0] % self.p == 0 {
                    return Err(Error::DivisionByZero("inverse of zero".into()));
                }
                Ok(vec![mod_pow(x[0] % self.p, self.p - 2, self.p)])
            } else {
                self.inv_slices(base, x)
            }
        };
        let base_sub = |x: &mut Vec<u64>, y: &[u64]| {
            for (xi, yi) in x.iter_mut().zip(y.iter()) {
                *xi = (*xi + self.p - *yi % self.p) % self.p;
            }
        };
        while let Some(d1) = deg(&r1) {
            let d0 = match deg(&r0) {
                Some(d0) => d0,
                None => break,
            };
            if d0 < d1 {
                std::mem::swap(&mut r0, &mut r1);
                std::mem::swap(&mut s0, &mut s1);
                continue;
            }
            // kill r0's leading term with r1
            let lead_inv = base_inv(&r1[d1])?;
            let c = base_mul(&r0[d0], &lead_inv);
            let shift = d0 - d1;
            for i in 0..=d1 {
                let t = base_mul(&c, &r1[i]);
                base_sub(&mut r0[i + shift], &t);
            }
            while s0.len() < s1.len() + shift {
                s0.push(vec![0; bs]);
            }
            for i in 0..s1.len() {
                let t = base_mul(&c, &s1[i]);
                base_sub(&mut s0[i + shift], &t);
            }
            if deg(&r0).map_or(true, |nd| nd < d1) {
                std::mem::swap(&mut r0, &mut r1);
                std::mem::swap(&mut s0, &mut s1);
            }
        }
        // r0 holds the gcd (a constant), s0 the cofactor with s0 * a = r0 mod modulus
        let d0 = deg(&r0).ok_or_else(|| Error::DivisionByZero("zero gcd".into()))?;
        if d0 != 0 {
            return Err(Error::DivisionByZero("element not invertible".into()));
        }
        let scale = base_inv(&r0[0])?;
        let mut out = vec![0; d * bs];
        for (i, s) in s0.iter().enumerate().take(d) {
            let t = base_mul(&scale, s);
            out[i * bs..(i + 1) * bs].copy_from_slice(&t);
        }
        Ok(out)
    }

    // ---- Frobenius and traces ----

    /// `a ↦ a^p`, computed by the tower recursion `(Σ c_i z^i)^p = Σ c_i^p (z^p)^i`.
    pub fn frob_p(&self, a: &FieldElem) -> FieldElem {
        let coeffs = self.frob_p_slices(a.level, &a.coeffs);
        FieldElem { level: a.level, coeffs }
    }

    fn frob_p_slices(&self, lvl: usize, a: &[u64]) -> Vec<u64> {
        let lev = &self.levels[lvl];
        let d = lev.rel;
        let bs = lev.base_abs;
        if lvl == 0 {
            if self.e == 1 {
                return a.to_vec(); // x^p = x on F_p
            }
        }
        // blocks over the base (for level 0 the "base" is F_p where x^p = x)
        let blocks: Vec<Vec<u64>> = (0..d)
            .map(|i| {
                let b = &a[i * bs..(i + 1) * bs];
                if lvl == 0 {
                    b.to_vec()
                } else {
                    self.frob_p_slices(lvl - 1, b)
                }
            })
            .collect();
        // Horner at gen_p
        let mut acc = vec![0u64; lev.abs];
        let mut scratch = vec![0u64; self.scratch_size(lvl)];
        for i in (0..d).rev() {
            if acc.iter().any(|&c| c != 0) {
                let prev = acc.clone();
                acc.iter_mut().for_each(|c| *c = 0);
                self.mul_slices(lvl, &prev, &lev.gen_p, &mut acc, &mut scratch);
            }
            for (j, &c) in blocks[i].iter().enumerate() {
                acc[j] = (acc[j] + c) % self.p;
            }
        }
        acc
    }

    /// The `q`-power Frobenius `σ(a) = a^q` (identity on `F_q`).
    pub fn frobenius(&self, a: &FieldElem) -> FieldElem {
        let mut x = a.clone();
        for _ in 0..self.e {
            x = self.frob_p(&x);
        }
        x
    }

    /// `a^{q^i}`.
    pub fn frobenius_iter(&self, a: &FieldElem, i: usize) -> FieldElem {
        let m = self.q_degree(a.level);
        let mut x = a.clone();
        for _ in 0..(i % m.max(1)) {
            x = self.frobenius(&x);
        }
        x
    }

    /// Trace from `a`'s level down to `to`, via per-level power sums.
    pub fn trace(&self, a: &FieldElem, to: usize) -> Result<FieldElem> {
        if to > a.level {
            return Err(Error::LevelError(format!(
                "trace target {to} above element level {}",
                a.level
            )));
        }
        let mut cur = a.clone();
        let mut lvl = a.level;
        while lvl > to {
            let lev = &self.levels[lvl];
            let bs = lev.base_abs;
            // Tr_{L/K}(Σ c_i z^i) = Σ c_i s_i
            let mut acc = vec![0u64; bs];
            let mut scratch = vec![0u64; self.scratch_size(lvl.saturating_sub(1)).max(8)];
            let mut tmp = vec![0u64; bs];
            for i in 0..lev.rel {
                let cblk = &cur.coeffs[i * bs..(i + 1) * bs];
                let sblk = &lev.power_sums[i * bs..(i + 1) * bs];
                if cblk.iter().all(|&c| c == 0) || sblk.iter().all(|&c| c == 0) {
                    continue;
                }
                tmp.iter_mut().for_each(|c| *c = 0);
                if lvl == 0 {
                    tmp[0] = (cblk[0] * sblk[0]) % self.p;
                } else {
                    self.mul_slices(lvl - 1, cblk, sblk, &mut tmp, &mut scratch);
                }
                for (o, t) in acc.iter_mut().zip(tmp.iter()) {
                    *o = (*o + *t) % self.p;
                }
            }
            lvl -= 1;
            cur = FieldElem { level: lvl, coeffs: acc };
        }
        Ok(cur)
    }

    /// Trace to the prime field as a plain integer mod p.
    pub fn trace_to_prime(&self, a: &FieldElem) -> Result<u64> {
        let t = self.trace(a, 0)?;
        // trace of the F_q element down to F_p: sum of p-power conjugates
        let mut acc = self.zero(0);
        let mut x = t;
        for _ in 0..self.e {
            acc = self.add(&acc, &x);
            x = self.frob_p(&x);
        }
        Ok(acc.coeffs[0])
    }

    // ---- level creation ----

    fn push_level(
        &mut self,
        kind: LevelKind,
        rel: usize,
        base_abs: usize,
        modulus: Vec<u64>,
    ) -> Result<usize> {
        let abs = rel * base_abs;
        if abs > self.max_abs {
            return Err(Error::TowerBudget(format!(
                "extension would reach absolute degree {abs} > budget {}",
                self.max_abs
            )));
        }
        let qdeg = if self.levels.is_empty() {
            1
        } else {
            rel * self.levels.last().unwrap().qdeg
        };
        let mut level = Level {
            kind,
            rel,
            abs,
            qdeg,
            base_abs,
            modulus,
            gen_p: Vec::new(),
            power_sums: Vec::new(),
            as_shift: None,
            as_shift_tr: None,
        };
        level.power_sums = self.newton_power_sums(&level);
        self.levels.push(level);
        let idx = self.levels.len() - 1;
        let genp = self.compute_gen_p(idx);
        self.levels[idx].gen_p = genp;
        if kind == LevelKind::ArtinSchreier {
            // z^q = z + T_e(b) with T_e(b) = b + b^p + … + b^{p^{e-1}}
            let b = {
                let lev = &self.levels[idx];
                FieldElem {
                    level: idx - 1,
                    coeffs: lev.modulus[0..lev.base_abs]
                        .iter()
                        .map(|&c| (self.p - c) % self.p)
                        .collect(),
                }
            };
            let mut shift = self.zero(idx - 1);
            let mut x = b;
            for _ in 0..self.e {
                shift = self.add(&shift, &x);
                x = self.frob_p(&x);
            }
            let tr = self.trace(&shift, 0)?;
            self.levels[idx].as_shift = Some(shift.coeffs);
            self.levels[idx].as_shift_tr = Some(tr.coeffs);
        }
        Ok(idx)
    }

    fn compute_gen_p(&self, lvl: usize) -> Vec<u64> {
        let lev = &self.levels[lvl];
        if lev.rel == 1 {
            let mut one = vec![0u64; lev.abs];
            one[0] = 1;
            return one;
        }
        if lev.kind == LevelKind::ArtinSchreier {
            // z^p = z + b
            let bs = lev.base_abs;
            let mut v = vec![0u64; lev.abs];
            for i in 0..bs {
                v[i] = (self.p - lev.modulus[i]) % self.p;
            }
            v[bs] = (v[bs] + 1) % self.p;
            return v;
        }
        // generic: z^p by square-and-multiply over this level
        let z = self.generator(lvl);
        self.pow(&z, self.p).coeffs
    }

    /// Power sums of the modulus roots via Newton's identities.
    fn newton_power_sums(&self, lev: &Level) -> Vec<u64> {
        let d = lev.rel;
        let bs = lev.base_abs;
        let base = if self.levels.is_empty() {
            usize::MAX // F_p
        } else {
            self.levels.len() - 1
        };
        let mul = |x: &[u64], y: &[u64]| -> Vec<u64> {
            if base == usize::MAX || bs == 1 && base == usize::MAX {
                vec![(x[0] * y[0]) % self.p]
            } else {
                let mut out = vec![0; bs];
                let mut scratch = vec![0u64; self.scratch_size(base)];
                self.mul_slices(base, x, y, &mut out, &mut scratch);
                out
            }
        };
        // monic f = x^d + a_{d-1} x^{d-1} + … + a_0 with a_i = modulus block i
        let a = |i: usize| -> Vec<u64> { lev.modulus[i * bs..(i + 1) * bs].to_vec() };
        let mut sums: Vec<Vec<u64>> = Vec::with_capacity(d);
        let mut s0 = vec![0u64; bs];
        s0[0] = (d as u64) % self.p;
        sums.push(s0);
        for k in 1..d {
            // s_k = -k a_{d-k} - Σ_{i=1}^{k-1} a_{d-i} s_{k-i}
            let mut acc = vec![0u64; bs];
            let ka = a(d - k);
            let kmod = (k as u64) % self.p;
            for (o, &c) in acc.iter_mut().zip(ka.iter()) {
                *o = (kmod * (c % self.p)) % self.p;
            }
            for i in 1..k {
                let t = mul(&a(d - i), &sums[k - i]);
                for (o, &c) in acc.iter_mut().zip(t.iter()) {
                    *o = (*o + c) % self.p;
                }
            }
            for o in acc.iter_mut() {
                *o = (self.p - *o) % self.p;
            }
            sums.push(acc);
        }
        sums.concat()
    }

    /// Extends the top of the tower by the lexicographically least monic
    /// irreducible of degree `rel`, returning the new level index.
    pub fn extend_lex(&mut self, rel: usize) -> Result<usize> {
        if rel < 2 {
            return Err(Error::LevelError("extension degree must be >= 2".into()));
        }
        let top = self.top_level();
        let modulus = self.lex_irreducible(top, rel)?;
        self.push_level(LevelKind::LexIrreducible, rel, self.levels[top].abs, modulus)
    }

    /// Extends by `z^p - z - b`, `b` the least element of the top level with
    /// nonzero prime trace (irreducibility) and nonzero `Tr_{K/F_q}(T_e(b))`
    /// (descent compatibility).
    pub fn extend_artin_schreier(&mut self) -> Result<usize> {
        let top = self.top_level();
        let p = self.p;
        let mut chosen = None;
        let size = self.level_size(top);
        let mut k: u128 = 1;
        while k < size {
            let b = self.elem_from_index(top, k);
            if self.trace_to_prime(&b)? != 0 {
                // T_e(b)
                let mut shift = self.zero(top);
                let mut x = b.clone();
                for _ in 0..self.e {
                    shift = self.add(&shift, &x);
                    x = self.frob_p(&x);
                }
                if !self.trace(&shift, 0)?.is_zero() {
                    chosen = Some(b);
                    break;
                }
            }
            k += 1;
        }
        let b = chosen.ok_or_else(|| {
            Error::LevelError("no Artin–Schreier extension element found".into())
        })?;
        // modulus z^p - z - b: c_0 = -b, c_1 = -1 (as base blocks), rest 0
        let bs = self.levels[top].abs;
        let mut modulus = vec![0u64; (p as usize) * bs];
        for (i, &c) in b.coeffs.iter().enumerate() {
            modulus[i] = (p - c) % p;
        }
        modulus[bs] = p - 1;
        self.push_level(LevelKind::ArtinSchreier, p as usize, bs, modulus)
    }

    // ---- irreducibility ----

    fn lex_irreducible_over_prime(&self, d: usize) -> Vec<u64> {
        // level 0 does not exist yet; coefficients are plain F_p scalars
        if d == 1 {
            return vec![0];
        }
        let mut k: u128 = 0;
        loop {
            let mut c = vec![0u64; d];
            let mut kk = k;
            for ci in c.iter_mut() {
                *ci = (kk % self.p as u128) as u64;
                kk /= self.p as u128;
            }
            if self.prime_poly_irreducible(&c) {
                return c;
            }
            k += 1;
        }
    }

    /// Irreducibility over F_p via gcd with x^{p^i} - x, used only for the base level.
    fn prime_poly_irreducible(&self, c: &[u64]) -> bool {
        let d = c.len();
        let p = self.p;
        let mulmod = |a: &[u64], b: &[u64]| -> Vec<u64> {
            let mut conv = vec![0u64; a.len() + b.len() - 1];
            for (i, &x) in a.iter().enumerate() {
                if x == 0 {
                    continue;
                }
                for (j, &y) in b.iter().enumerate() {
                    conv[i + j] = (conv[i + j] + x * y) % p;
                }
            }
            // reduce modulo x^d + Σ c_i x^i
            for k in (d..conv.len()).rev() {
                let v = conv[k];
                if v != 0 {
                    conv[k] = 0;
                    for i in 0..d {
                        if c[i] != 0 {
                            conv[k - d + i] = (conv[k - d + i] + (p - c[i]) * v) % p;
                        }
                    }
                }
            }
            conv.truncate(d);
            conv
        };
        let gcd_deg = |mut a: Vec<u64>, mut b: Vec<u64>| -> usize {
            let deg = |v: &[u64]| (0..v.len()).rev().find(|&i| v[i] != 0);
            loop {
                let (da, db) = (deg(&a), deg(&b));
                match (da, db) {
                    (None, None) => return 0,
                    (None, Some(db)) => return db,
                    (Some(da), None) => return da,
                    (Some(da), Some(db)) => {
                        if da < db {
                            std::mem::swap(&mut a, &mut b);
                            continue;
                        }
                        let lead = mod_pow(b[db], p - 2, p);
                        let c0 = (a[da] * lead) % p;
                        for i in 0..=db {
                            a[i + da - db] = (a[i + da - db] + (p - (b[i] * c0) % p)) % p;
                        }
                    }
                }
            }
        };
        // x^{p^i} mod f, iterated p-power of x
        let mut xp = vec![0u64; d];
        if d == 1 {
            return true;
        }
        xp[1] = 1; // x
        let mut cur = xp.clone();
        for _i in 1..=d / 2 {
            // raise to p-th power once per i? No: need p^i, so iterate i times total.
            // cur holds x^{p^{i-1}}; compute cur^p
            let mut acc = vec![0u64; d];
            acc[0] = 1;
            let mut basepow = cur.clone();
            let mut n = p;
            while n > 0 {
                if n & 1 == 1 {
                    acc = mulmod(&acc, &basepow);
                }
                basepow = mulmod(&basepow, &basepow);
                n >>= 1;
            }
            cur = acc;
            // gcd(x^{p^i} - x, f)
            let mut diff = cur.clone();
            diff[1] = (diff[1] + p - 1) % p;
            let mut f = c.to_vec();
            f.push(1);
            if gcd_deg(f, diff) != 0 {
                return false;
            }
        }
        true
    }

    /// Lexicographically least monic irreducible of degree `d` over `level`.
    fn lex_irreducible(&self, level: usize, d: usize) -> Result<Vec<u64>> {
        let bs = self.levels[level].abs;
        let elem_count = self.level_size(level);
        let mut k: u128 = 0;
        let limit = elem_count
            .checked_pow(d as u32)
            .unwrap_or(u128::MAX);
        while k < limit {
            let mut flat = vec![0u64; d * bs];
            let mut kk = k;
            for j in 0..d {
                let digit = kk % elem_count;
                kk /= elem_count;
                let el = self.elem_from_index(level, digit);
                flat[j * bs..(j + 1) * bs].copy_from_slice(&el.coeffs);
            }
            if self.poly_irreducible(level, &flat, d) {
                return Ok(flat);
            }
            k += 1;
        }
        Err(Error::LevelError(format!(
            "no irreducible of degree {d} over level {level}"
        )))
    }

    /// Irreducibility over `level` of the monic poly `x^d + Σ c_i x^i`
    /// (coefficients flat), by gcd with `x^{|K|^i} - x` for `i <= d/2`.
    pub fn poly_irreducible(&self, level: usize, flat: &[u64], d: usize) -> bool {
        if d == 1 {
            return true;
        }
        let bs = self.levels[level].abs;
        let c: Vec<FieldElem> = (0..d)
            .map(|i| FieldElem {
                level,
                coeffs: flat[i * bs..(i + 1) * bs].to_vec(),
            })
            .collect();
        // constant term zero => divisible by x
        if c[0].is_zero() {
            return false;
        }
        let reduce = |conv: &mut Vec<FieldElem>| {
            for k in (d..conv.len()).rev() {
                if conv[k].is_zero() {
                    continue;
                }
                let v = conv[k].clone();
                conv[k] = self.zero(level);
                for i in 0..d {
                    if !c[i].is_zero() {
                        let t = self.mul(&v, &c[i]);
                        conv[k - d + i] = self.sub(&conv[k - d + i], &t);
                    }
                }
            }
            conv.truncate(d);
        };
        // x^{p} of a reduced poly: coefficientwise Frobenius then exponent stretch
        let p_power = |g: &[FieldElem]| -> Vec<FieldElem> {
            let mut out = vec![self.zero(level); (d - 1) * self.p as usize + 1];
            for (j, gj) in g.iter().enumerate() {
                if !gj.is_zero() {
                    out[j * self.p as usize] = self.frob_p(gj);
                }
            }
            reduce(&mut out);
            out
        };
        let mut xq = vec![self.zero(level); d];
        xq[1] = self.one(level);
        let steps_per = self.levels[level].abs; // p-powers per |K|-power
        for _i in 1..=d / 2 {
            for _ in 0..steps_per {
                xq = p_power(&xq);
            }
            // gcd(xq - x, f) over the level
            let mut diff = xq.clone();
            diff[1] = self.sub(&diff[1], &self.one(level));
            let mut f: Vec<FieldElem> = c.clone();
            f.push(self.one(level));
            if self.poly_gcd_degree(level, f, diff) != 0 {
                return false;
            }
        }
        true
    }

    fn poly_gcd_degree(&self, _level: usize, mut a: Vec<FieldElem>, mut b: Vec<FieldElem>) -> usize {
        let deg = |v: &[FieldElem]| (0..v.len()).rev().find(|&i| !v[i].is_zero());
        loop {
            match (deg(&a), deg(&b)) {
                (None, None) => return 0,
                (None, Some(db)) => return db,
                (Some(da), None) => return da,
                (Some(da), Some(db)) => {
                    if da < db {
                        std::mem::swap(&mut a, &mut b);
                        continue;
                    }
                    let lead = self.inv(&b[db]).expect("nonzero lead");
                    let c0 = self.mul(&a[da], &lead);
                    for i in 0..=db {
                        let t = self.mul(&b[i], &c0);
                        a[i + da - db] = self.sub(&a[i + da - db], &t);
                    }
                }
            }
        }
    }

    // ---- F_q structure of a level ----

    /// The element's coordinates over `F_q` in the product basis (level-0 chunks).
    pub fn fq_coords(&self, a: &FieldElem) -> Vec<FieldElem> {
        let e_abs = self.levels[0].abs;
        a.coeffs
            .chunks(e_abs)
            .map(|ch| FieldElem {
                level: 0,
                coeffs: ch.to_vec(),
            })
            .collect()
    }

    /// Reassembles an element of `level` from `F_q`-coordinates.
    pub fn from_fq_coords(&self, level: usize, coords: &[FieldElem]) -> FieldElem {
        let e_abs = self.levels[0].abs;
        let mut coeffs = vec![0u64; self.levels[level].abs];
        for (i, c) in coords.iter().enumerate() {
            coeffs[i * e_abs..(i + 1) * e_abs].copy_from_slice(&c.coeffs);
        }
        FieldElem { level, coeffs }
    }

    /// The product basis of `level` over `F_q`, in canonical order.
    pub fn fq_basis(&self, level: usize) -> Vec<FieldElem> {
        let e_abs = self.levels[0].abs;
        let m = self.q_degree(level);
        (0..m)
            .map(|j| {
                let mut v = self.zero(level);
                v.coeffs[j * e_abs] = 1;
                v
            })
            .collect()
    }

    // ---- the named operations ----

    /// Evaluates the additive polynomial `Σ b_i z^{q^i}` at `z`.
    pub fn eval_additive(&self, coeffs: &[FieldElem], z: &FieldElem) -> FieldElem {
        let lvl = coeffs
            .iter()
            .map(|c| c.level)
            .chain(std::iter::once(z.level))
            .max()
            .unwrap();
        let mut acc = self.zero(lvl);
        let mut zq = self.lift(z, lvl);
        for b in coeffs.iter() {
            if !b.is_zero() {
                acc = self.add(&acc, &self.mul(b, &zq));
            }
            zq = self.frobenius(&zq);
        }
        acc
    }

    /// `F_q`-basis of `{z in level : Σ b_i z^{q^i} = 0}` in reduced echelon form.
    pub fn additive_kernel(&self, coeffs: &[FieldElem], level: usize) -> Vec<FieldElem> {
        let m = self.q_degree(level);
        let basis = self.fq_basis(level);
        // columns: images of the basis, in F_q coordinates
        let mut mat: Vec<Vec<FieldElem>> = vec![Vec::with_capacity(m); m];
        for bj in basis.iter() {
            let img = self.eval_additive(coeffs, &self.lift(bj, level));
            let img = self.project(&img, level).expect("closed under the map");
            let coords = self.fq_coords(&img);
            for (row, c) in mat.iter_mut().zip(coords.into_iter()) {
                row.push(c);
            }
        }
        let null = crate::ffield::linalg::nullspace(self, &mat);
        null.into_iter()
            .map(|v| self.from_fq_coords(level, &v))
            .collect()
    }

    /// Canonical root of `x^q - x = c`: lexicographically least solution in the
    /// smallest chain level containing one; extends the tower by an
    /// Artin–Schreier level if every current level is obstructed.
    pub fn artin_schreier_solve(&mut self, c: &FieldElem) -> Result<FieldElem> {
        let min_lvl = self.minimal_level(c);
        let c0 = self.project(c, min_lvl).unwrap();
        let s = self.trace(&c0, 0)?;
        let qd = self.q_degree(min_lvl) as u64;
        // trace at level l >= min_lvl scales by [l : min_lvl]
        let mut solve_lvl = None;
        if s.is_zero() {
            solve_lvl = Some(min_lvl);
        } else {
            for l in (min_lvl + 1)..self.level_count() {
                let ratio = (self.q_degree(l) as u64 / qd) % self.p;
                if ratio == 0 {
                    solve_lvl = Some(l);
                    break;
                }
            }
        }
        let lvl = match solve_lvl {
            Some(l) => l,
            None => self.extend_artin_schreier()?,
        };
        let lifted = self.lift(&c0, lvl);
        let x = self.solve_frob_minus_id(lvl, &lifted)?;
        Ok(self.canonical_as_root(&x))
    }

    /// Particular solution of `x^q - x = c` at `lvl`; the trace obstruction must vanish.
    fn solve_frob_minus_id(&self, lvl: usize, c: &FieldElem) -> Result<FieldElem> {
        debug_assert!(self.trace(c, 0).unwrap().is_zero());
        if lvl == 0 {
            // on F_q the map is zero, so c must be 0
            if !c.is_zero() {
                return Err(Error::LevelError("unsolvable at base level".into()));
            }
            return Ok(self.zero(0));
        }
        if self.levels[lvl].kind == LevelKind::ArtinSchreier {
            return self.as_descent_solve(lvl, c);
        }
        // dense fallback: (Frob_q - Id) x = c over F_p
        let abs = self.levels[lvl].abs;
        let mut cols: Vec<Vec<u64>> = Vec::with_capacity(abs);
        for j in 0..abs {
            let mut bjv = self.zero(lvl);
            bjv.coeffs[j] = 1;
            let mut img = self.frobenius(&bjv);
            img.coeffs[j] = (img.coeffs[j] + self.p - 1) % self.p;
            cols.push(img.coeffs);
        }
        let x = fp_solve(self.p, abs, &cols, &c.coeffs).ok_or_else(|| {
            Error::LevelError("frobenius system unexpectedly inconsistent".into())
        })?;
        Ok(FieldElem { level: lvl, coeffs: x })
    }

    /// Descent solver over an Artin–Schreier level `L = K[z]/(z^p - z - b)`.
    ///
    /// Writing `y = Σ y_i z^i` and using `z^q = z + T`, the equation
    /// `y^q - y = c` becomes triangular in the `z`-degree; inner trace
    /// obstructions are cancelled by shifting the next-higher coefficient by a
    /// scalar, and the top obstruction vanishes exactly when `Tr(c) = 0`.
    fn as_descent_solve(&self, lvl: usize, c: &FieldElem) -> Result<FieldElem> {
        let lev = &self.levels[lvl];
        let bs = lev.base_abs;
        let d = lev.rel; // = p
        let base = lvl - 1;
        let shift = FieldElem {
            level: base,
            coeffs: lev.as_shift.clone().unwrap(),
        };
        let shift_tr = FieldElem {
            level: 0,
            coeffs: lev.as_shift_tr.clone().unwrap(),
        };
        let cblk = |i: usize| FieldElem {
            level: base,
            coeffs: c.coeffs[i * bs..(i + 1) * bs].to_vec(),
        };
        let mut y: Vec<FieldElem> = vec![self.zero(base); d];
        // binomials mod p for exponents < p
        let binom = |n: usize, k: usize| -> u64 {
            let mut r = 1u64;
            for i in 0..k {
                r = r * ((n - i) as u64) % self.p;
                let inv = mod_pow((i + 1) as u64 % self.p, self.p - 2, self.p);
                r = r * inv % self.p;
            }
            r
        };
        let mut shift_pows: Vec<FieldElem> = vec![self.one(base)];
        for _ in 1..d {
            let last = shift_pows.last().unwrap().clone();
            shift_pows.push(self.mul(&last, &shift));
        }
        for i in (0..d).rev() {
            // rhs_i = c_i - Σ_{j>i} y_j^q C(j,i) T^{j-i}
            let rhs = |tower: &FieldTower, y: &[FieldElem]| -> FieldElem {
                let mut r = cblk(i);
                for j in (i + 1)..d {
                    if y[j].is_zero() {
                        continue;
                    }
                    let bc = binom(j, i);
                    if bc == 0 {
                        continue;
                    }
                    let mut t = tower.frobenius(&y[j]);
                    t = tower.mul(&t, &shift_pows[j - i]);
                    t = tower.mul(&t, &tower.scalar(base, bc));
                    r = tower.sub(&r, &t);
                }
                r
            };
            let mut r = rhs(self, &y);
            let tr = self.trace(&r, 0)?;
            if !tr.is_zero() {
                if i + 1 >= d {
                    return Err(Error::LevelError(
                        "descent obstruction at top component".into(),
                    ));
                }
                // shift y_{i+1} by λ ∈ F_q with λ (i+1) Tr(T) = Tr(rhs_i)
                let denom = self.mul(&self.scalar(0, (i as u64 + 1) % self.p), &shift_tr);
                let lambda = self.div(&tr, &denom)?;
                y[i + 1] = self.add(&y[i + 1], &self.lift(&lambda, base));
                r = rhs(self, &y);
                debug_assert!(self.trace(&r, 0)?.is_zero());
            }
            y[i] = self.solve_frob_minus_id(base, &r)?;
        }
        let mut coeffs = vec![0u64; lev.abs];
        for (i, yi) in y.iter().enumerate() {
            coeffs[i * bs..(i + 1) * bs].copy_from_slice(&yi.coeffs);
        }
        Ok(FieldElem { level: lvl, coeffs })
    }

    /// Lexicographically least translate of `x` by `F_q` (the root-kernel of `x^q - x`).
    fn canonical_as_root(&self, x: &FieldElem) -> FieldElem {
        let mut best = x.clone();
        for l in 1..self.q() {
            let cand = self.add(x, &self.lift(&self.elem_from_index(0, l as u128), x.level));
            if cand.coeffs < best.coeffs {
                best = cand;
            }
        }
        best
    }

    /// Lexicographically least element of `x + span_Fq(kernel)`, enumerating the
    /// kernel span. Intended for small kernels (dimension <= ~8).
    pub fn canonical_coset_rep(&self, x: &FieldElem, kernel: &[FieldElem]) -> FieldElem {
        let dim = kernel.len();
        let q = self.q();
        let count = (q as u128).pow(dim as u32);
        let mut best = x.clone();
        for mask in 0..count {
            let mut cand = x.clone();
            let mut m = mask;
            for k in kernel.iter() {
                let digit = (m % q as u128) as u64;
                m /= q as u128;
                if digit != 0 {
                    let lam = self.elem_from_index(0, digit as u128);
                    cand = self.add(&cand, &self.mul(&self.lift(&lam, k.level), k));
                }
            }
            if cand.coeffs < best.coeffs {
                best = cand;
            }
        }
        best
    }

    /// A basis of `level` over `F_q` together with its trace-dual; when a
    /// self-dual (trace-orthonormal) basis exists the two coincide and the
    /// flag is set.
    pub fn dual_basis(&self, level: usize) -> (Vec<FieldElem>, Vec<FieldElem>, bool) {
        let m = self.q_degree(level);
        let basis = self.fq_basis(level);
        // self-dual exists iff q is even or m is odd
        let self_dual_exists = self.p == 2 || m % 2 == 1;
        if self_dual_exists {
            if let Some(sd) = self.self_dual_search(level, m) {
                return (sd.clone(), sd, true);
            }
        }
        // dual of the product basis by inverting the Gram matrix over F_q
        let tr_fq = |x: &FieldElem| self.trace(x, 0).unwrap();
        let gram: Vec<Vec<FieldElem>> = basis
            .iter()
            .map(|bi| basis.iter().map(|bj| tr_fq(&self.mul(bi, bj))).collect())
            .collect();
        let inv = crate::ffield::linalg::invert(self, &gram).expect("trace form nondegenerate");
        let dual: Vec<FieldElem> = (0..m)
            .map(|i| {
                let mut acc = self.zero(level);
                for (j, bj) in basis.iter().enumerate() {
                    if !inv[i][j].is_zero() {
                        acc = self.add(&acc, &self.mul(&self.lift(&inv[i][j], level), bj));
                    }
                }
                acc
            })
            .collect();
        (basis, dual, false)
    }

    /// Lexicographic DFS for a trace-orthonormal basis.
    fn self_dual_search(&self, level: usize, m: usize) -> Option<Vec<FieldElem>> {
        let size = self.level_size(level);
        let mut chosen: Vec<FieldElem> = Vec::new();
        let mut visited: u64 = 0;
        self.sd_dfs(level, m, size, &mut chosen, &mut visited)
    }

    fn sd_dfs(
        &self,
        level: usize,
        m: usize,
        size: u128,
        chosen: &mut Vec<FieldElem>,
        visited: &mut u64,
    ) -> Option<Vec<FieldElem>> {
        if chosen.len() == m {
            return Some(chosen.clone());
        }
        let start = chosen
            .last()
            .map(|e| index_of(self, e) + 1)
            .unwrap_or(1);
        for k in start..size {
            *visited += 1;
            if *visited > 1 << 22 {
                return None;
            }
            let v = self.elem_from_index(level, k);
            let t = self.trace(&self.mul(&v, &v), 0).unwrap();
            if !self.eq(&t, &self.one(0)) {
                continue;
            }
            if chosen
                .iter()
                .any(|w| !self.trace(&self.mul(&v, w), 0).unwrap().is_zero())
            {
                continue;
            }
            // independence over F_q
            let mut rows: Vec<Vec<FieldElem>> = chosen.iter().map(|w| self.fq_coords(w)).collect();
            rows.push(self.fq_coords(&v));
            if crate::ffield::linalg::rank(self, rows) != chosen.len() + 1 {
                continue;
            }
            chosen.push(v);
            if let Some(found) = self.sd_dfs(level, m, size, chosen, visited) {
                return Some(found);
            }
            chosen.pop();
        }
        None
    }
}

fn index_of(tower: &FieldTower, e: &FieldElem) -> u128 {
    let mut k: u128 = 0;
    for &c in e.coeffs.iter().rev() {
        k = k * tower.p() as u128 + c as u128;
    }
    k
}

fn mod_pow(mut b: u64, mut n: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    b %= p;
    while n > 0 {
        if n & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        n >>= 1;
    }
    acc
}

/// Row-reduced form of a column matrix over `F_p`, kept around so several
/// right-hand sides can be solved against the same map.
#[derive(Debug, Clone)]
pub(crate) struct FpSolver {
    p: u64,
    rows: usize,
    cols: usize,
    /// reduced rows of `[A | I]`: each row is `cols` entries of R then `rows` of E
    reduced: Vec<Vec<u64>>,
    pivots: Vec<usize>,
}

impl FpSolver {
    /// Builds the solver from columns of the matrix.
    pub fn from_columns(p: u64, rows: usize, columns: &[Vec<u64>]) -> FpSolver {
        let cols = columns.len();
        let mut a = vec![vec![0u64; cols + rows]; rows];
        for (j, col) in columns.iter().enumerate() {
            for i in 0..rows {
                a[i][j] = col[i] % p;
            }
        }
        for (i, row) in a.iter_mut().enumerate() {
            row[cols + i] = 1;
        }
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            let Some(pr) = (r..rows).find(|&i| a[i][c] != 0) else {
                continue;
            };
            a.swap(r, pr);
            let inv = mod_pow(a[r][c], p - 2, p);
            for v in a[r].iter_mut() {
                *v = *v * inv % p;
            }
            for i in 0..rows {
                if i != r && a[i][c] != 0 {
                    let f = a[i][c];
                    for j in 0..cols + rows {
                        a[i][j] = (a[i][j] + (p - f) * a[r][j]) % p;
                    }
                }
            }
            pivots.push(c);
            r += 1;
            if r == rows {
                break;
            }
        }
        FpSolver { p, rows, cols, reduced: a, pivots }
    }

    /// One particular solution of `A x = b`, or `None` when inconsistent.
    pub fn solve(&self, b: &[u64]) -> Option<Vec<u64>> {
        let p = self.p;
        // transformed rhs: E b
        let eb: Vec<u64> = self
            .reduced
            .iter()
            .map(|row| {
                let mut acc = 0u64;
                for (i, &bi) in b.iter().enumerate() {
                    acc = (acc + row[self.cols + i] * (bi % p)) % p;
                }
                acc
            })
            .collect();
        for i in self.pivots.len()..self.rows {
            if eb[i] != 0 {
                return None;
            }
        }
        let mut x = vec![0u64; self.cols];
        for (row, &c) in self.pivots.iter().enumerate() {
            x[c] = eb[row];
        }
        Some(x)
    }
}

/// Solves the column system `A x = rhs` over `F_p`; `cols[j]` is column `j`.
fn fp_solve(p: u64, n: usize, cols: &[Vec<u64>], rhs: &[u64]) -> Option<Vec<u64>> {
    // build augmented row-major matrix
    let m = cols.len();
    let mut a = vec![vec![0u64; m + 1]; n];
    for (j, col) in cols.iter().enumerate() {
        for i in 0..n {
            a[i][j] = col[i] % p;
        }
    }
    for i in 0..n {
        a[i][m] = rhs[i] % p;
    }
    let mut piv_cols = Vec::new();
    let mut r = 0;
    for c in 0..m {
        let Some(pr) = (r..n).find(|&i| a[i][c] != 0) else {
            continue;
        };
        a.swap(r, pr);
        let inv = mod_pow(a[r][c], p - 2, p);
        for v in a[r].iter_mut() {
            *v = *v * inv % p;
        }
        for i in 0..n {
            if i != r && a[i][c] != 0 {
                let f = a[i][c];
                for j in c..=m {
                    a[i][j] = (a[i][j] + (p - f) * a[r][j]) % p;
                }
            }
        }
        piv_cols.push(c);
        r += 1;
        if r == n {
            break;
        }
    }
    // consistency
    for i in r..n {
        if a[i][m] != 0 {
            return None;
        }
    }
    let mut x = vec![0u64; m];
    for (row, &c) in piv_cols.iter().enumerate() {
        x[c] = a[row][m];
    }
    Some(x)
}

/// Gaussian elimination over a tower level, shared by the additive-kernel,
/// dual-basis and lattice code.
pub(crate) mod linalg {
    use super::{FieldElem, FieldTower};

    /// Reduced row echelon form; returns the nonzero rows and their pivot columns.
    pub fn rref(
        tower: &FieldTower,
        mut rows: Vec<Vec<FieldElem>>,
    ) -> (Vec<Vec<FieldElem>>, Vec<usize>) {
        if rows.is_empty() {
            return (rows, Vec::new());
        }
        let ncols = rows[0].len();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..ncols {
            let Some(pr) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
                continue;
            };
            rows.swap(r, pr);
            let inv = tower.inv(&rows[r][c]).expect("pivot nonzero");
            for j in c..ncols {
                rows[r][j] = tower.mul(&rows[r][j], &inv);
            }
            for i in 0..rows.len() {
                if i != r && !rows[i][c].is_zero() {
                    let f = rows[i][c].clone();
                    for j in c..ncols {
                        let t = tower.mul(&f, &rows[r][j]);
                        rows[i][j] = tower.sub(&rows[i][j], &t);
                    }
                }
            }
            pivots.push(c);
            r += 1;
            if r == rows.len() {
                break;
            }
        }
        rows.truncate(r);
        (rows, pivots)
    }

    pub fn rank(tower: &FieldTower, rows: Vec<Vec<FieldElem>>) -> usize {
        rref(tower, rows).1.len()
    }

    /// Nullspace basis (as coefficient vectors) of the matrix with the given rows.
    pub fn nullspace(tower: &FieldTower, rows: &[Vec<FieldElem>]) -> Vec<Vec<FieldElem>> {
        if rows.is_empty() {
            return Vec::new();
        }
        let ncols = rows[0].len();
        let lvl = rows
            .iter()
            .flat_map(|r| r.iter().map(|e| e.level))
            .max()
            .unwrap_or(0);
        let (rr, pivots) = rref(tower, rows.to_vec());
        let mut basis = Vec::new();
        let piv_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
        for free in 0..ncols {
            if piv_set.contains(&free) {
                continue;
            }
            let mut v = vec![tower.zero(lvl); ncols];
            v[free] = tower.one(lvl);
            for (row, &pc) in rr.iter().zip(pivots.iter()) {
                // pivot entry is 1: x_pc = -row[free]
                v[pc] = tower.neg(&tower.lift(&row[free], lvl));
            }
            basis.push(v);
        }
        basis
    }

    /// Inverse of a square matrix over the tower.
    pub fn invert(tower: &FieldTower, m: &[Vec<FieldElem>]) -> Option<Vec<Vec<FieldElem>>> {
        let n = m.len();
        let lvl = m
            .iter()
            .flat_map(|r| r.iter().map(|e| e.level))
            .max()
            .unwrap_or(0);
        let mut aug: Vec<Vec<FieldElem>> = m
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut r: Vec<FieldElem> = row.iter().map(|e| tower.lift(e, lvl)).collect();
                for j in 0..n {
                    r.push(if i == j { tower.one(lvl) } else { tower.zero(lvl) });
                }
                r
            })
            .collect();
        let mut rr = 0;
        for c in 0..n {
            let pr = (rr..n).find(|&i| !aug[i][c].is_zero())?;
            aug.swap(rr, pr);
            let inv = tower.inv(&aug[rr][c]).ok()?;
            for j in 0..2 * n {
                aug[rr][j] = tower.mul(&aug[rr][j], &inv);
            }
            for i in 0..n {
                if i != rr && !aug[i][c].is_zero() {
                    let f = aug[i][c].clone();
                    for j in 0..2 * n {
                        let t = tower.mul(&f, &aug[rr][j]);
                        aug[i][j] = tower.sub(&aug[i][j], &t);
                    }
                }
            }
            rr += 1;
        }
        if rr < n {
            return None;
        }
        Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
    }
}

// ---- serialization ----

/// JSON form of a tower: `{p, e, levels: [{degree, poly}]}` where `degree` is
/// the degree over `F_q` and `poly` the flat lower coefficients of the monic
/// modulus over the previous level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TowerJson {
    pub p: u64,
    pub e: usize,
    pub levels: Vec<TowerLevelJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TowerLevelJson {
    pub degree: usize,
    pub poly: Vec<u64>,
}

impl FieldTower {
    pub fn to_json(&self) -> TowerJson {
        TowerJson {
            p: self.p,
            e: self.e,
            levels: self
                .levels
                .iter()
                .skip(1)
                .map(|l| TowerLevelJson {
                    degree: l.qdeg,
                    poly: l.modulus.clone(),
                })
                .collect(),
        }
    }

    /// Rebuilds a tower from its JSON description, validating every modulus.
    pub fn from_json(j: &TowerJson) -> Result<FieldTower> {
        let mut tower = FieldTower::new(j.p, j.e)?;
        for lv in &j.levels {
            let top = tower.top_level();
            let prev_q = tower.q_degree(top);
            if lv.degree % prev_q != 0 {
                return Err(Error::LevelError(format!(
                    "level degree {} incompatible with chain degree {prev_q}",
                    lv.degree
                )));
            }
            let rel = lv.degree / prev_q;
            let bs = tower.levels[top].abs;
            if lv.poly.len() != rel * bs {
                return Err(Error::LevelError("modulus length mismatch".into()));
            }
            if !tower.poly_irreducible(top, &lv.poly, rel) {
                return Err(Error::LevelError("stored modulus not irreducible".into()));
            }
            // recognize the Artin–Schreier shape z^p - z - b
            let p = tower.p as usize;
            let is_as = rel == p && {
                let mut linear_ok = lv.poly[bs] == tower.p - 1;
                for (i, &c) in lv.poly[bs..2 * bs].iter().enumerate() {
                    if i > 0 && c != 0 {
                        linear_ok = false;
                    }
                }
                let rest_zero = lv.poly[2 * bs..].iter().all(|&c| c == 0);
                linear_ok && rest_zero && rel > 1
            };
            let kind = if is_as {
                LevelKind::ArtinSchreier
            } else {
                LevelKind::LexIrreducible
            };
            tower.push_level(kind, rel, bs, lv.poly.clone())?;
        }
        Ok(tower)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f4() -> (FieldTower, FieldElem) {
        let mut t = FieldTower::new(2, 1).unwrap();
        let l = t.extend_lex(2).unwrap();
        let w = t.generator(l);
        (t, w)
    }

    #[test]
    fn f4_modulus_is_least() {
        let (t, w) = f4();
        // x^2 + x + 1 is the only irreducible quadratic over F_2
        let w2 = t.mul(&w, &w);
        let expect = t.add(&w, &t.one(1)); // ω² = ω + 1
        assert!(t.eq(&w2, &expect));
    }

    #[test]
    fn frobenius_on_f4() {
        let (t, w) = f4();
        // oracle: square via polynomial reduction
        let sq = t.mul(&w, &w);
        assert!(t.eq(&t.frobenius(&w), &sq));
        assert!(t.frobenius(&t.zero(1)).is_zero());
        assert!(t.eq(&t.frobenius(&t.one(1)), &t.one(1)));
        // order divides the extension degree
        assert!(t.eq(&t.frobenius(&t.frobenius(&w)), &w));
    }

    #[test]
    fn frobenius_is_fq_algebra_endomorphism() {
        let mut t = FieldTower::new(3, 1).unwrap();
        let l = t.extend_lex(2).unwrap();
        for a in t.enumerate(l) {
            for kb in [1u128, 3, 5, 7] {
                let b = t.elem_from_index(l, kb);
                let lhs = t.frobenius(&t.add(&a, &b));
                let rhs = t.add(&t.frobenius(&a), &t.frobenius(&b));
                assert!(t.eq(&lhs, &rhs));
                let lhs = t.frobenius(&t.mul(&a, &b));
                let rhs = t.mul(&t.frobenius(&a), &t.frobenius(&b));
                assert!(t.eq(&lhs, &rhs));
            }
        }
    }

    #[test]
    fn trace_f4_down() {
        let (t, w) = f4();
        // oracle: sum of conjugates by enumeration
        let tr = t.trace(&w, 0).unwrap();
        let direct = t.add(&w, &t.frobenius(&w));
        assert!(t.eq(&t.lift(&tr, 1), &direct));
        assert!(t.eq(&tr, &t.one(0)));
        assert!(t.trace(&t.zero(1), 0).unwrap().is_zero());
        // Tr(1) = 0 in even characteristic, even degree
        assert!(t.trace(&t.one(1), 0).unwrap().is_zero());
    }

    #[test]
    fn trace_transitivity_on_chain() {
        let mut t = FieldTower::new(2, 1).unwrap();
        let l1 = t.extend_lex(2).unwrap();
        let l2 = t.extend_lex(2).unwrap();
        for a in t.enumerate(l2) {
            let direct = t.trace(&a, 0).unwrap();
            let mid = t.trace(&a, l1).unwrap();
            let two_step = t.trace(&mid, 0).unwrap();
            assert!(t.eq(&direct, &two_step));
            // also check against the conjugate-sum oracle
            let mut s = t.zero(l2);
            let mut x = a.clone();
            for _ in 0..t.q_degree(l2) {
                s = t.add(&s, &x);
                x = t.frobenius(&x);
            }
            assert!(t.eq(&t.lift(&direct, l2), &s));
        }
    }

    #[test]
    fn inverse_and_pow() {
        let mut t = FieldTower::new(3, 1).unwrap();
        let l = t.extend_lex(2).unwrap();
        for a in t.enumerate(l) {
            if a.is_zero() {
                assert!(t.inv(&a).is_err());
                continue;
            }
            let inv = t.inv(&a).unwrap();
            assert!(t.eq(&t.mul(&a, &inv), &t.one(l)));
            // Fermat: a^(q^m - 1) = 1
            assert!(t.eq(&t.pow(&a, 8), &t.one(l)));
        }
    }

    #[test]
    fn dual_basis_f4_self_dual() {
        let (t, w) = f4();
        let (basis, dual, flag) = t.dual_basis(1);
        assert!(flag);
        assert_eq!(basis.len(), 2);
        // the canonical search finds {ω, ω²}
        let w2 = t.mul(&w, &w);
        assert!(t.eq(&basis[0], &w));
        assert!(t.eq(&basis[1], &w2));
        for (i, bi) in basis.iter().enumerate() {
            for (j, dj) in dual.iter().enumerate() {
                let tr = t.trace(&t.mul(bi, dj), 0).unwrap();
                if i == j {
                    assert!(t.eq(&tr, &t.one(0)));
                } else {
                    assert!(tr.is_zero());
                }
            }
        }
    }

    #[test]
    fn dual_basis_trivial_level() {
        let t = FieldTower::new(2, 1).unwrap();
        let (basis, dual, flag) = t.dual_basis(0);
        assert!(flag);
        assert_eq!(basis.len(), 1);
        assert!(t.eq(&basis[0], &t.one(0)));
        assert!(t.eq(&dual[0], &t.one(0)));
    }

    #[test]
    fn dual_basis_f9_no_self_dual() {
        let mut t = FieldTower::new(3, 1).unwrap();
        let l = t.extend_lex(2).unwrap();
        let (basis, dual, flag) = t.dual_basis(l);
        assert!(!flag);
        // exhaustive oracle: no trace-orthonormal basis exists
        let mut found = false;
        for a in t.enumerate(l) {
            for kb in 0..t.level_size(l) {
                let b = t.elem_from_index(l, kb);
                let taa = t.eq(&t.trace(&t.mul(&a, &a), 0).unwrap(), &t.one(0));
                let tbb = t.eq(&t.trace(&t.mul(&b, &b), 0).unwrap(), &t.one(0));
                let tab = t.trace(&t.mul(&a, &b), 0).unwrap().is_zero();
                let indep = crate::ffield::linalg::rank(
                    &t,
                    vec![t.fq_coords(&a), t.fq_coords(&b)],
                ) == 2;
                if taa && tbb && tab && indep {
                    found = true;
                }
            }
        }
        assert!(!found);
        // the returned pair is a genuine dual pair
        for (i, bi) in basis.iter().enumerate() {
            for (j, dj) in dual.iter().enumerate() {
                let tr = t.trace(&t.mul(bi, dj), 0).unwrap();
                if i == j {
                    assert!(t.eq(&tr, &t.one(0)));
                } else {
                    assert!(tr.is_zero());
                }
            }
        }
    }

    #[test]
    fn artin_schreier_small_cases() {
        // q=2, c=0: canonical pick 0
        let mut t = FieldTower::new(2, 1).unwrap();
        let x = t.artin_schreier_solve(&t.zero(0).clone()).unwrap();
        assert!(x.is_zero());
        // q=2, c=1: no root in F_2, root ω in F_4
        let one = t.one(0);
        let x = t.artin_schreier_solve(&one).unwrap();
        assert_eq!(x.level, 1);
        assert_eq!(t.q_degree(1), 2);
        let check = t.sub(&t.frobenius(&x), &x);
        assert!(t.eq(&check, &t.lift(&one, x.level)));
        // canonical: lex-least of {ω, ω+1}
        assert_eq!(x.coeffs, vec![0, 1]);
    }

    #[test]
    fn artin_schreier_q3_needs_cubic_extension() {
        // x^3 - x = 1 has no root in F_3 or F_9; the first root appears in F_27.
        let mut t = FieldTower::new(3, 1).unwrap();
        let one = t.one(0);
        let x = t.artin_schreier_solve(&one).unwrap();
        assert_eq!(t.q_degree(x.level), 3);
        let check = t.sub(&t.frobenius(&x), &x);
        assert!(t.eq(&check, &t.lift(&one, x.level)));
        // oracle: enumerate F_3 and a lex-least degree-2 extension; no roots there
        let mut t2 = FieldTower::new(3, 1).unwrap();
        let l9 = t2.extend_lex(2).unwrap();
        for z in t2.enumerate(l9) {
            let v = t2.sub(&t2.frobenius(&z), &z);
            assert!(!t2.eq(&v, &t2.one(l9)));
        }
    }

    #[test]
    fn artin_schreier_solution_set_is_coset_of_fq() {
        let mut t = FieldTower::new(3, 1).unwrap();
        let c = t.scalar(0, 2);
        let x = t.artin_schreier_solve(&c).unwrap();
        let lvl = x.level;
        // verify and enumerate all solutions at that level
        let mut sols = Vec::new();
        for z in t.enumerate(lvl) {
            let v = t.sub(&t.frobenius(&z), &z);
            if t.eq(&v, &t.lift(&c, lvl)) {
                sols.push(z);
            }
        }
        assert_eq!(sols.len(), 3);
        assert!(sols.iter().any(|s| t.eq(s, &x)));
        // canonical pick is the lex-least
        assert!(sols.iter().all(|s| x.coeffs <= s.coeffs));
        for s in sols.iter() {
            let d = t.sub(s, &x);
            assert!(t.minimal_level(&d) == 0);
        }
    }

    #[test]
    fn artin_schreier_deep_chain_q2() {
        // iterate x^2 - x = c starting from 1; the root level divides 2^depth
        // and is minimal (an unobstructed level is never skipped)
        let mut t = FieldTower::new(2, 1).unwrap();
        let mut c = t.one(0);
        for depth in 1..=8 {
            let x = t.artin_schreier_solve(&c).unwrap();
            let qd = t.q_degree(x.level);
            assert!((1usize << depth) % qd == 0);
            if depth <= 2 {
                assert_eq!(qd, 1 << depth);
            }
            let check = t.sub(&t.frobenius(&x), &x);
            assert!(t.eq(&check, &t.lift(&c, x.level)));
            // minimality: the trace obstruction is nonzero on every lower level
            // that contains c
            let cl = t.minimal_level(&c);
            for l in cl..x.level {
                let ratio = (t.q_degree(l) / t.q_degree(cl)) as u64 % t.p();
                let s = t.trace(&t.project(&c, cl).unwrap(), 0).unwrap();
                assert!(ratio != 0 || s.is_zero() == false || l >= x.level);
                if !s.is_zero() {
                    assert!(ratio != 0);
                }
            }
            c = x;
        }
    }

    #[test]
    fn artin_schreier_deep_chain_q4() {
        let mut t = FieldTower::new(2, 2).unwrap();
        let mut c = t.one(0);
        for _depth in 1..=4 {
            let x = t.artin_schreier_solve(&c).unwrap();
            let check = t.sub(&t.frobenius(&x), &x);
            assert!(t.eq(&check, &t.lift(&c, x.level)));
            c = x;
        }
        assert!(t.abs_degree(t.top_level()) <= 32);
    }

    #[test]
    fn additive_kernel_examples() {
        let (t, _) = f4();
        // P = σ + 1 over F_2 (z² + z): kernel in F_2 is {1}
        let p_coeffs = vec![t.one(0), t.one(0)];
        let ker = t.additive_kernel(&p_coeffs, 0);
        assert_eq!(ker.len(), 1);
        assert!(t.eq(&ker[0], &t.one(0)));
        // P = σ: kernel = 0
        let ker = t.additive_kernel(&[t.zero(0), t.one(0)], 1);
        assert!(ker.is_empty());
        // P = σ² + 1 (z⁴ + z) over F_4: the whole field, dimension 2
        let p_coeffs = vec![t.one(0), t.zero(0), t.one(0)];
        let ker = t.additive_kernel(&p_coeffs, 1);
        assert_eq!(ker.len(), 2);
        for k in ker.iter() {
            assert!(t.eval_additive(&p_coeffs, k).is_zero());
        }
        // oracle: enumerate F_4
        let count = t
            .enumerate(1)
            .filter(|z| t.eval_additive(&p_coeffs, z).is_zero())
            .count();
        assert_eq!(count, 4);
    }

    #[test]
    fn additive_kernel_matches_enumeration() {
        let mut t = FieldTower::new(3, 1).unwrap();
        let l = t.extend_lex(2).unwrap();
        // P = σ - 1: kernel = F_q inside any level
        let p_coeffs = vec![t.neg(&t.one(0)), t.one(0)];
        let ker = t.additive_kernel(&p_coeffs, l);
        assert_eq!(ker.len(), 1);
        let brute: Vec<_> = t
            .enumerate(l)
            .filter(|z| t.eval_additive(&p_coeffs, z).is_zero())
            .collect();
        assert_eq!(brute.len(), 3);
    }

    #[test]
    fn tower_construction_is_deterministic() {
        let mut t1 = FieldTower::new(2, 1).unwrap();
        t1.extend_lex(2).unwrap();
        t1.extend_artin_schreier().unwrap();
        let mut t2 = FieldTower::new(2, 1).unwrap();
        t2.extend_lex(2).unwrap();
        t2.extend_artin_schreier().unwrap();
        for (l1, l2) in t1.levels.iter().zip(t2.levels.iter()) {
            assert_eq!(l1.modulus, l2.modulus);
        }
    }

    #[test]
    fn tower_json_round_trip() {
        let mut t = FieldTower::new(2, 2).unwrap();
        t.extend_lex(2).unwrap();
        let j = t.to_json();
        let t2 = FieldTower::from_json(&j).unwrap();
        assert_eq!(t.levels.len(), t2.levels.len());
        for (l1, l2) in t.levels.iter().zip(t2.levels.iter()) {
            assert_eq!(l1.modulus, l2.modulus);
            assert_eq!(l1.qdeg, l2.qdeg);
        }
        let s = serde_json::to_string(&j).unwrap();
        let j2: TowerJson = serde_json::from_str(&s).unwrap();
        assert_eq!(serde_json::to_string(&j2).unwrap(), s);
    }

    #[test]
    fn budget_is_enforced() {
        let mut t = FieldTower::new(2, 1).unwrap().with_budget(4);
        t.extend_lex(2).unwrap();
        assert!(matches!(t.extend_lex(4), Err(Error::TowerBudget(_))));
    }

    #[test]
    fn q4_base_field() {
        let t = FieldTower::new(2, 2).unwrap();
        assert_eq!(t.q(), 4);
        let w = t.generator(0);
        // x² + x + 1 over F_2
        let w2 = t.mul(&w, &w);
        assert!(t.eq(&w2, &t.add(&w, &t.one(0))));
        // Frobenius is the identity on F_q
        assert!(t.eq(&t.frobenius(&w), &w));
        assert!(!t.eq(&t.frob_p(&w), &w));
    }
}
