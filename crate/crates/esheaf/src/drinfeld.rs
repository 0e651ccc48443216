//! Drinfeld modules and abelian t-modules over `A = F_q[t]`, their torsion
//! modules, and compatible division-point chains.
//!
//! A [`DModule`] is the structure map `t ↦ φ_t` into `K{σ}` (σ-rank 1) or into
//! `k×k` matrices over `K{σ}` (σ-rank `k`).  For a point `x = (f(t))` of
//! `Spec F_q[t]` away from the characteristic, a [`TateSystem`] is a family of
//! chains `α_h` with `φ_{t_x}(α_0) = 0` and `φ_{t_x}(α_h) = α_{h-1}`, one chain
//! per rank index, forming an `F_q[t]/(t_x^{h+1})`-module basis of the
//! division points at every depth.

use crate::ffield::{FieldElem, FieldTower, FpSolver};
use crate::ore::{OreMat, OrePoly};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// A closed point of `Spec F_q[t]`: the monic irreducible `f(t)` generating
/// its maximal ideal, coefficients on tower level 0, constant term first,
/// leading 1 included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XPoint {
    pub poly: Vec<FieldElem>,
}

impl XPoint {
    /// The rational point `x = (t - xi)`.
    pub fn rational(tower: &FieldTower, xi: FieldElem) -> XPoint {
        XPoint {
            poly: vec![tower.neg(&xi), tower.one(0)],
        }
    }

    /// Builds `x` from a monic polynomial over `F_q`, checking irreducibility.
    pub fn from_poly(tower: &FieldTower, poly: Vec<FieldElem>) -> Result<XPoint> {
        let d = poly.len() - 1;
        if d == 0 {
            return Err(Error::DimensionMismatch("point needs positive degree".into()));
        }
        if !tower.eq(&poly[d], &tower.one(0)) {
            return Err(Error::DimensionMismatch("point polynomial must be monic".into()));
        }
        let flat: Vec<u64> = poly[..d]
            .iter()
            .flat_map(|c| c.coeffs.clone())
            .collect();
        if !tower.poly_irreducible(0, &flat, d) {
            return Err(Error::DimensionMismatch("point polynomial reducible".into()));
        }
        Ok(XPoint { poly })
    }

    pub fn degree(&self) -> usize {
        self.poly.len() - 1
    }

    /// For rational points, the coordinate `xi` with `t_x = t - xi`.
    pub fn xi(&self, tower: &FieldTower) -> Option<FieldElem> {
        if self.degree() == 1 {
            Some(tower.neg(&self.poly[0]))
        } else {
            None
        }
    }

    pub fn eval(&self, tower: &FieldTower, z: &FieldElem) -> FieldElem {
        let mut acc = tower.zero(z.level);
        for c in self.poly.iter().rev() {
            acc = tower.mul(&acc, z);
            acc = tower.add(&acc, &tower.lift(c, acc.level.max(c.level)));
        }
        acc
    }
}

/// The image of `t` (or of any `a ∈ F_q[t]`) under the structure map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DAction {
    Scalar(OrePoly),
    Matrix(OreMat),
}

impl DAction {
    pub fn k(&self) -> usize {
        match self {
            DAction::Scalar(_) => 1,
            DAction::Matrix(m) => m.k,
        }
    }

    pub fn add(&self, tower: &FieldTower, other: &DAction) -> DAction {
        match (self, other) {
            (DAction::Scalar(a), DAction::Scalar(b)) => DAction::Scalar(a.add(tower, b)),
            (DAction::Matrix(a), DAction::Matrix(b)) => DAction::Matrix(a.add(tower, b)),
            _ => panic!("mixed action arithmetic"),
        }
    }

    pub fn mul(&self, tower: &FieldTower, other: &DAction) -> DAction {
        match (self, other) {
            (DAction::Scalar(a), DAction::Scalar(b)) => DAction::Scalar(a.mul(tower, b)),
            (DAction::Matrix(a), DAction::Matrix(b)) => DAction::Matrix(a.mul(tower, b)),
            _ => panic!("mixed action arithmetic"),
        }
    }

    pub fn add_scalar(&self, tower: &FieldTower, c: &FieldElem) -> DAction {
        match self {
            DAction::Scalar(a) => DAction::Scalar(a.add(tower, &OrePoly::constant(c.clone()))),
            DAction::Matrix(a) => {
                let mut m = a.clone();
                for i in 0..m.k {
                    let e = m.at(i, i).add(tower, &OrePoly::constant(c.clone()));
                    m.entries[i * m.k + i] = e;
                }
                DAction::Matrix(m)
            }
        }
    }

    pub fn scale(&self, tower: &FieldTower, c: &FieldElem) -> DAction {
        match self {
            DAction::Scalar(a) => DAction::Scalar(a.scale(tower, c)),
            DAction::Matrix(a) => DAction::Matrix(a.scale(tower, c)),
        }
    }

    /// Applies the additive operator to a `G_a^k` point.
    pub fn apply(&self, tower: &FieldTower, v: &[FieldElem]) -> Result<Vec<FieldElem>> {
        match self {
            DAction::Scalar(p) => {
                if v.len() != 1 {
                    return Err(Error::DimensionMismatch("scalar action on vector".into()));
                }
                Ok(vec![p.eval(tower, &v[0])])
            }
            DAction::Matrix(m) => m.apply(tower, v),
        }
    }
}

/// Certificate for the constant-term characteristic shape `(x^{p^j} - b)^m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharCertificate {
    pub j: u32,
    pub m: usize,
}

/// A Drinfeld module (`k = 1`) or abelian t-module (`k > 1`) over `F_q[t]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DModule {
    pub k: usize,
    pub n: usize,
    pub theta: FieldElem,
    pub action: DAction,
}

/// A point of `G_a^k`: `k` field elements.
pub type Point = Vec<FieldElem>;

fn point_flat(p: &Point) -> Vec<u64> {
    p.iter().flat_map(|c| c.coeffs.clone()).collect()
}

impl DModule {
    /// σ-rank-1 module from `φ_t = θ + g_1 σ + … + g_n σ^n`.
    pub fn drinfeld(tower: &FieldTower, phi_t: OrePoly) -> Result<DModule> {
        let n = phi_t
            .degree()
            .ok_or_else(|| Error::DimensionMismatch("zero structure map".into()))?;
        if n == 0 {
            return Err(Error::DimensionMismatch("rank must be positive".into()));
        }
        if phi_t.coeffs[n].is_zero() {
            return Err(Error::DimensionMismatch("leading coefficient zero".into()));
        }
        let theta = phi_t.coeffs[0].clone();
        Ok(DModule {
            k: 1,
            n,
            theta,
            action: DAction::Scalar(phi_t),
        })
    }

    /// The Carlitz module `φ_t = θ + σ`.
    pub fn carlitz(tower: &FieldTower, theta: FieldElem) -> Result<DModule> {
        let lvl = theta.level;
        DModule::drinfeld(
            tower,
            OrePoly::new(tower, vec![theta, tower.one(lvl)]),
        )
    }

    /// Rank-1 module `φ_t = θ + g σ`.
    pub fn rank1(tower: &FieldTower, theta: FieldElem, g: FieldElem) -> Result<DModule> {
        DModule::drinfeld(tower, OrePoly::new(tower, vec![theta, g]))
    }

    /// Rank-2 module `φ_t = θ + g_1 σ + g_2 σ²`.
    pub fn rank2(
        tower: &FieldTower,
        theta: FieldElem,
        g1: FieldElem,
        g2: FieldElem,
    ) -> Result<DModule> {
        DModule::drinfeld(tower, OrePoly::new(tower, vec![theta, g1, g2]))
    }

    /// σ-rank `k > 1` t-module with the given matrix action of `t`.
    pub fn t_module(
        tower: &FieldTower,
        n: usize,
        theta: FieldElem,
        phi_t: OreMat,
    ) -> Result<DModule> {
        let _ = tower;
        Ok(DModule {
            k: phi_t.k,
            n,
            theta,
            action: DAction::Matrix(phi_t),
        })
    }

    /// The unique `F_q`-algebra homomorphism image of `a(t)` (coefficients on
    /// level 0) under `t ↦ φ_t`.
    pub fn phi_of(&self, tower: &FieldTower, a: &[FieldElem]) -> DAction {
        let lvl = self.theta.level;
        let mut acc = match &self.action {
            DAction::Scalar(_) => DAction::Scalar(OrePoly::zero()),
            DAction::Matrix(m) => {
                DAction::Matrix(OreMat::new(m.k, vec![OrePoly::zero(); m.k * m.k]).unwrap())
            }
        };
        for c in a.iter().rev() {
            acc = acc.mul(tower, &self.action);
            if !c.is_zero() {
                acc = acc.add_scalar(tower, &tower.lift(c, lvl.max(c.level)));
            }
        }
        acc
    }

    /// `φ_{t_x}` for the point `x`.
    pub fn phi_at_x(&self, tower: &FieldTower, x: &XPoint) -> DAction {
        self.phi_of(tower, &x.poly)
    }

    /// `φ_{t_x^r}`.
    pub fn phi_x_power(&self, tower: &FieldTower, x: &XPoint, r: usize) -> DAction {
        let base = self.phi_at_x(tower, x);
        let mut acc = match &self.action {
            DAction::Scalar(_) => DAction::Scalar(OrePoly::one(tower, self.theta.level)),
            DAction::Matrix(m) => DAction::Matrix(OreMat::identity(tower, m.k, self.theta.level)),
        };
        for _ in 0..r {
            acc = acc.mul(tower, &base);
        }
        acc
    }

    /// Checks that `x` avoids the characteristic `(t - θ)`.
    pub fn check_away_from_characteristic(&self, tower: &FieldTower, x: &XPoint) -> Result<()> {
        if x.eval(tower, &self.theta).is_zero() {
            return Err(Error::CharacteristicCollision(
                "x meets the characteristic of the module".into(),
            ));
        }
        Ok(())
    }

    /// The action of `t` on the quotient by σ (the constant-term matrix), with
    /// its characteristic shape `(x^{p^j} - b)^m`, `k = p^j m`, `(p, m) = 1`.
    pub fn characteristic_of(
        &self,
        tower: &FieldTower,
    ) -> Result<(FieldElem, CharCertificate)> {
        if self.k == 1 {
            return Ok((self.theta.clone(), CharCertificate { j: 0, m: 1 }));
        }
        let mat = match &self.action {
            DAction::Matrix(m) => m.constant_matrix(tower),
            DAction::Scalar(_) => unreachable!(),
        };
        let lvl = mat
            .iter()
            .flat_map(|r| r.iter().map(|c| c.level))
            .max()
            .unwrap_or(0);
        let char_poly = charpoly(tower, &mat, lvl);
        let p = tower.p();
        let mut j = 0u32;
        let mut m = self.k;
        while m % (p as usize) == 0 {
            m /= p as usize;
            j += 1;
        }
        let pj = (p as usize).pow(j);
        // char(x) must be supported on exponents that are multiples of p^j
        for (i, c) in char_poly.iter().enumerate() {
            if i % pj != 0 && !c.is_zero() {
                return Err(Error::NotEllipticCharacteristic(format!(
                    "coefficient at degree {i} should vanish"
                )));
            }
        }
        // read b off the y^{m-1} coefficient of (y - b)^m, y = x^{p^j}
        let coeff = &char_poly[pj * (m - 1)];
        let m_inv = tower.inv(&tower.scalar(lvl, (m as u64) % p))?;
        let b = tower.neg(&tower.mul(coeff, &m_inv));
        // verify the full expansion
        let mut expect = vec![tower.zero(lvl); self.k + 1];
        for i in 0..=m {
            // C(m, i) (-b)^{m-i} y^i
            let mut c = tower.scalar(lvl, binom_mod_p(m, i, p));
            let mut nb = tower.neg(&b);
            let mut pow = tower.one(lvl);
            for _ in 0..(m - i) {
                pow = tower.mul(&pow, &nb);
            }
            nb = pow;
            c = tower.mul(&c, &nb);
            expect[pj * i] = tower.add(&expect[pj * i], &c);
        }
        for (a, bexp) in char_poly.iter().zip(expect.iter()) {
            if !tower.eq(a, bexp) {
                return Err(Error::NotEllipticCharacteristic(
                    "characteristic polynomial has the wrong shape".into(),
                ));
            }
        }
        Ok((b, CharCertificate { j, m }))
    }

    /// Recovers θ from the characteristic data: the `p^j`-th root of `b`
    /// (`x ↦ x^{p^j}` is bijective on a finite field, with inverse a power of
    /// the Frobenius itself).
    pub fn theta_from_characteristic(
        tower: &FieldTower,
        b: &FieldElem,
        cert: &CharCertificate,
    ) -> FieldElem {
        let abs = tower.abs_degree(b.level);
        let steps = (abs - (cert.j as usize % abs)) % abs;
        let mut y = b.clone();
        for _ in 0..steps {
            y = tower.frob_p(&y);
        }
        y
    }

    /// `F_q`-basis of `ker φ_{t_x^r}` with automatic tower extension until the
    /// dimension saturates at `n · r · deg(x)`.
    pub fn torsion_basis(
        &self,
        tower: &mut FieldTower,
        x: &XPoint,
        r: usize,
    ) -> Result<Vec<Point>> {
        self.check_away_from_characteristic(tower, x)?;
        if r == 0 {
            return Ok(Vec::new());
        }
        let target = self.n * r * x.degree();
        let phi = self.phi_x_power(tower, x, r);
        saturate_kernel(tower, &phi, target)
    }

    /// Builds chains `α_0 … α_depth` per rank index, with canonical root picks.
    pub fn tate_basis(
        &self,
        tower: &mut FieldTower,
        x: &XPoint,
        depth: usize,
    ) -> Result<TateSystem> {
        self.tate_basis_with_policy(tower, x, depth, PickPolicy::Least)
    }

    pub fn tate_basis_with_policy(
        &self,
        tower: &mut FieldTower,
        x: &XPoint,
        depth: usize,
        policy: PickPolicy,
    ) -> Result<TateSystem> {
        self.check_away_from_characteristic(tower, x)?;
        let residue = if x.degree() > 1 {
            Some(ResidueData::build(tower, x)?)
        } else {
            None
        };
        let phi = self.phi_at_x(tower, x);
        let kernel = saturate_kernel(tower, &phi, self.n * x.degree())?;
        // fast scalar path: rank-1 chains detwist to x^q - x = c
        if self.k == 1 && self.n == 1 && x.degree() == 1 && policy == PickPolicy::Least {
            let chain = self.rank1_chain(tower, x, depth)?;
            return Ok(TateSystem {
                module: self.clone(),
                x: x.clone(),
                depth,
                chains: vec![chain.into_iter().map(|e| vec![e]).collect()],
                kernel,
                residue,
            });
        }
        // chain generators: for deg(x) = 1 the full kernel basis; otherwise a
        // k(x)-module basis (for n = 1, the least nonzero kernel element)
        let generators: Vec<Point> = if x.degree() == 1 {
            kernel.clone()
        } else if self.n == 1 {
            vec![kernel
                .iter()
                .min_by(|a, b| point_flat(a).cmp(&point_flat(b)))
                .unwrap()
                .clone()]
        } else {
            return Err(Error::DimensionMismatch(
                "chains at non-rational points are supported for n = 1 only".into(),
            ));
        };
        let mut chains: Vec<Vec<Point>> = generators.into_iter().map(|g| vec![g]).collect();
        let mut solvers: HashMap<usize, FpSolver> = HashMap::new();
        for _h in 1..=depth {
            for ci in 0..chains.len() {
                let prev = chains[ci].last().unwrap().clone();
                let next = solve_preimage(tower, &phi, &prev, &kernel, &mut solvers, policy)?;
                chains[ci].push(next);
            }
        }
        Ok(TateSystem {
            module: self.clone(),
            x: x.clone(),
            depth,
            chains,
            kernel,
            residue,
        })
    }

    /// Rank-1 chain via the detwisted recursion `w^q - w = -c^{-1} w_{h-1}`,
    /// `α_h = α_0 w_h`, with canonical Artin–Schreier picks throughout.
    fn rank1_chain(
        &self,
        tower: &mut FieldTower,
        x: &XPoint,
        depth: usize,
    ) -> Result<Vec<FieldElem>> {
        let phi = self.phi_at_x(tower, x);
        let kernel = saturate_kernel(tower, &phi, 1)?;
        let alpha0 = kernel[0][0].clone();
        // θ_x = θ - ξ (the constant term of φ_{t_x})
        let c = match &phi {
            DAction::Scalar(p) => p.coeffs[0].clone(),
            _ => unreachable!(),
        };
        let c_inv = tower.inv(&c)?;
        let mut ws = vec![tower.one(0)];
        for _ in 1..=depth {
            let rhs = tower.neg(&tower.mul(&c_inv, ws.last().unwrap()));
            let w = tower.artin_schreier_solve(&rhs)?;
            ws.push(w);
        }
        Ok(ws.into_iter().map(|w| tower.mul(&alpha0, &w)).collect())
    }
}

/// Root-pick policy for chain construction; `Least` is the canonical choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PickPolicy {
    Least,
    Greatest,
}

/// Saturates the kernel of an additive operator by probing lexicographically
/// least extensions of ascending degree until the target dimension is reached.
fn saturate_kernel(
    tower: &mut FieldTower,
    phi: &DAction,
    target_dim: usize,
) -> Result<Vec<Point>> {
    loop {
        let lvl = tower.top_level();
        let ker = action_kernel(tower, phi, lvl);
        if ker.len() >= target_dim {
            if ker.len() > target_dim {
                return Err(Error::DimensionMismatch(format!(
                    "kernel dimension {} exceeds expected {target_dim}",
                    ker.len()
                )));
            }
            return Ok(ker);
        }
        // probe extension degrees on a scratch copy; commit the first that grows
        let mut committed = false;
        for d in 2..=64 {
            let grown = tower.abs_degree(lvl) * d;
            if grown > crate::ffield::DEFAULT_MAX_ABS {
                break;
            }
            let mut probe = tower.clone();
            if probe.extend_lex(d).is_err() {
                break;
            }
            let pk = action_kernel(&probe, phi, probe.top_level());
            if pk.len() > ker.len() {
                tower.extend_lex(d)?;
                committed = true;
                break;
            }
        }
        if !committed {
            return Err(Error::TowerBudget(
                "kernel did not saturate within the tower budget".into(),
            ));
        }
    }
}

/// `F_q`-basis (echelonized) of the kernel of an additive operator at `level`.
fn action_kernel(tower: &FieldTower, phi: &DAction, level: usize) -> Vec<Point> {
    match phi {
        DAction::Scalar(p) => tower
            .additive_kernel(&p.coeffs, level)
            .into_iter()
            .map(|e| vec![e])
            .collect(),
        DAction::Matrix(m) => {
            let k = m.k;
            let qd = tower.q_degree(level);
            // F_q matrix of the blocked map
            let mut rows: Vec<Vec<FieldElem>> = vec![Vec::new(); k * qd];
            let basis = tower.fq_basis(level);
            for blk in 0..k {
                for bj in basis.iter() {
                    let mut v = vec![tower.zero(level); k];
                    v[blk] = bj.clone();
                    let img = m.apply(tower, &v).unwrap();
                    for (ib, comp) in img.iter().enumerate() {
                        let comp = tower.project(comp, level).expect("closed");
                        for (ic, c) in tower.fq_coords(&comp).into_iter().enumerate() {
                            rows[ib * qd + ic].push(c);
                        }
                    }
                }
            }
            let null = crate::ffield::linalg::nullspace(tower, &rows);
            null.into_iter()
                .map(|coords| {
                    (0..k)
                        .map(|blk| {
                            tower.from_fq_coords(level, &coords[blk * qd..(blk + 1) * qd])
                        })
                        .collect()
                })
                .collect()
        }
    }
}

/// Solves `φ(y) = target`, extending the tower when necessary, and returns the
/// canonical coset representative.
fn solve_preimage(
    tower: &mut FieldTower,
    phi: &DAction,
    target: &Point,
    kernel: &[Point],
    solvers: &mut HashMap<usize, FpSolver>,
    policy: PickPolicy,
) -> Result<Point> {
    loop {
        let lvl = tower.top_level();
        let solver = solvers
            .entry(lvl)
            .or_insert_with(|| build_action_solver(tower, phi, lvl));
        let k = phi.k();
        let abs = tower.abs_degree(lvl);
        let mut rhs = vec![0u64; k * abs];
        for (i, c) in target.iter().enumerate() {
            let c = tower.lift(c, lvl);
            rhs[i * abs..(i + 1) * abs].copy_from_slice(&c.coeffs);
        }
        if let Some(sol) = solver.solve(&rhs) {
            let point: Point = (0..k)
                .map(|i| FieldElem {
                    level: lvl,
                    coeffs: sol[i * abs..(i + 1) * abs].to_vec(),
                })
                .collect();
            return Ok(canonical_point(tower, &point, kernel, policy));
        }
        // extend: probe ascending degrees until the equation becomes solvable
        let mut committed = false;
        for d in 2..=64 {
            if tower.abs_degree(lvl) * d > crate::ffield::DEFAULT_MAX_ABS {
                break;
            }
            let mut probe = tower.clone();
            if probe.extend_lex(d).is_err() {
                break;
            }
            let plvl = probe.top_level();
            let psolver = build_action_solver(&probe, phi, plvl);
            let pabs = probe.abs_degree(plvl);
            let mut prhs = vec![0u64; k * pabs];
            for (i, c) in target.iter().enumerate() {
                let c = probe.lift(c, plvl);
                prhs[i * pabs..(i + 1) * pabs].copy_from_slice(&c.coeffs);
            }
            if psolver.solve(&prhs).is_some() {
                tower.extend_lex(d)?;
                committed = true;
                break;
            }
        }
        if !committed {
            return Err(Error::TowerBudget(
                "preimage not found within the tower budget".into(),
            ));
        }
    }
}

fn build_action_solver(tower: &FieldTower, phi: &DAction, level: usize) -> FpSolver {
    let k = phi.k();
    let abs = tower.abs_degree(level);
    let mut cols = Vec::with_capacity(k * abs);
    for blk in 0..k {
        for j in 0..abs {
            let mut v = vec![tower.zero(level); k];
            v[blk].coeffs[j] = 1;
            let img = phi.apply(tower, &v).unwrap();
            let mut col = vec![0u64; k * abs];
            for (i, c) in img.iter().enumerate() {
                let c = tower.lift(c, level);
                col[i * abs..(i + 1) * abs].copy_from_slice(&c.coeffs);
            }
            cols.push(col);
        }
    }
    FpSolver::from_columns(tower.p(), k * abs, &cols)
}

/// The canonical representative of `y + span_{F_q}(kernel)`.
fn canonical_point(
    tower: &FieldTower,
    y: &Point,
    kernel: &[Point],
    policy: PickPolicy,
) -> Point {
    let q = tower.q();
    let dim = kernel.len();
    let count = (q as u128).pow(dim as u32);
    let lvl = y.iter().map(|c| c.level).max().unwrap_or(0);
    let mut best: Option<(Vec<u64>, Point)> = None;
    for mask in 0..count {
        let mut cand: Point = y.iter().map(|c| tower.lift(c, lvl)).collect();
        let mut m = mask;
        for kv in kernel.iter() {
            let digit = (m % q as u128) as u64;
            m /= q as u128;
            if digit != 0 {
                let lam = tower.elem_from_index(0, digit as u128);
                for (ci, ki) in cand.iter_mut().zip(kv.iter()) {
                    let t = tower.mul(&tower.lift(&lam, lvl), &tower.lift(ki, lvl));
                    *ci = tower.add(ci, &t);
                }
            }
        }
        let key = point_flat(&cand);
        let better = match (&best, policy) {
            (None, _) => true,
            (Some((bk, _)), PickPolicy::Least) => key < *bk,
            (Some((bk, _)), PickPolicy::Greatest) => key > *bk,
        };
        if better {
            best = Some((key, cand));
        }
    }
    best.unwrap().1
}

/// Residue-field data for a non-rational point: the tower level realizing
/// `k(x)`, a root of the point polynomial there, the `F_q`-basis of `k(x)`
/// with its trace-dual, and the polynomial lifts of the basis elements.
#[derive(Debug, Clone)]
pub struct ResidueData {
    pub level: usize,
    pub tau: FieldElem,
    pub omegas: Vec<FieldElem>,
    pub duals: Vec<FieldElem>,
    pub self_dual: bool,
    /// `w_c(t)` with `w_c(τ) = ω_c`, coefficients on level 0.
    pub lifts: Vec<Vec<FieldElem>>,
}

impl ResidueData {
    pub fn build(tower: &mut FieldTower, x: &XPoint) -> Result<ResidueData> {
        let d = x.degree();
        // realize k(x) on the chain: the first level of q-degree divisible by d,
        // or a fresh extension when the tower is still the base field
        let mut level = None;
        for l in 0..tower.level_count() {
            if tower.q_degree(l) == d {
                level = Some(l);
                break;
            }
        }
        let level = match level {
            Some(l) => l,
            None => {
                if tower.level_count() == 1 {
                    tower.extend_lex(d)?
                } else {
                    return Err(Error::LevelError(
                        "no tower level realizes the residue field".into(),
                    ));
                }
            }
        };
        // lex-least root of the point polynomial in that level
        let mut tau = None;
        for z in tower.enumerate(level) {
            if x.eval(tower, &z).is_zero() {
                tau = Some(z);
                break;
            }
        }
        let tau = tau.ok_or_else(|| {
            Error::LevelError("point polynomial has no root in the residue level".into())
        })?;
        let (omegas, duals, self_dual) = tower.dual_basis(level);
        // express each ω_c in powers of τ to lift it to a polynomial in t
        let qd = tower.q_degree(level);
        let mut pow_rows: Vec<Vec<FieldElem>> = Vec::with_capacity(qd);
        let mut pw = tower.one(level);
        for _ in 0..qd {
            pow_rows.push(tower.fq_coords(&pw));
            pw = tower.mul(&pw, &tau);
        }
        let lifts = omegas
            .iter()
            .map(|w| {
                let coords = tower.fq_coords(w);
                solve_fq(tower, &pow_rows, &coords).ok_or_else(|| {
                    Error::LevelError("residue basis not expressible in τ powers".into())
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ResidueData {
            level,
            tau,
            omegas,
            duals,
            self_dual,
            lifts,
        })
    }
}

/// Solves `Σ_i x_i rows[i] = rhs` over `F_q` (level-0 entries).
fn solve_fq(
    tower: &FieldTower,
    rows: &[Vec<FieldElem>],
    rhs: &[FieldElem],
) -> Option<Vec<FieldElem>> {
    let n = rows.len();
    let m = rhs.len();
    let mut aug: Vec<Vec<FieldElem>> = (0..m)
        .map(|c| {
            let mut row: Vec<FieldElem> = rows.iter().map(|r| r[c].clone()).collect();
            row.push(rhs[c].clone());
            row
        })
        .collect();
    let (rr, pivots) = crate::ffield::linalg::rref(tower, std::mem::take(&mut aug));
    let mut x = vec![tower.zero(0); n];
    for (row, &pc) in rr.iter().zip(pivots.iter()) {
        if pc == n {
            return None; // inconsistent
        }
        x[pc] = row[n].clone();
    }
    Some(x)
}

/// A compatible system of division-point chains.
#[derive(Debug, Clone)]
pub struct TateSystem {
    pub module: DModule,
    pub x: XPoint,
    pub depth: usize,
    /// `chains[ξ][h]` is the depth-`h` point of chain `ξ`.
    pub chains: Vec<Vec<Point>>,
    /// `F_q`-basis of `ker φ_{t_x}` at the saturation level.
    pub kernel: Vec<Point>,
    pub residue: Option<ResidueData>,
}

impl TateSystem {
    /// The `(ξ, c, h)` point `φ_{w_c}(α^ξ_h)` for non-rational `x`
    /// (for rational `x` this is just `α^ξ_h`).
    pub fn point(&self, tower: &FieldTower, xi: usize, c: usize, h: usize) -> Result<Point> {
        let base = &self.chains[xi][h];
        match &self.residue {
            None => Ok(base.clone()),
            Some(res) => {
                let w = &res.lifts[c];
                let phi_w = self.module.phi_of(tower, w);
                phi_w.apply(tower, base)
            }
        }
    }

    /// Verifies `φ_{t_x}(α_h) = α_{h-1}` and `φ_{t_x}(α_0) = 0` on every chain.
    pub fn verify_chains(&self, tower: &FieldTower) -> bool {
        let phi = self.module.phi_at_x(tower, &self.x);
        for chain in self.chains.iter() {
            for (h, pt) in chain.iter().enumerate() {
                let img = phi.apply(tower, pt).unwrap();
                if h == 0 {
                    if img.iter().any(|c| !c.is_zero()) {
                        return false;
                    }
                } else {
                    let prev = &chain[h - 1];
                    let lvl = img
                        .iter()
                        .chain(prev.iter())
                        .map(|c| c.level)
                        .max()
                        .unwrap();
                    for (a, b) in img.iter().zip(prev.iter()) {
                        if !tower.eq(&tower.lift(a, lvl), &tower.lift(b, lvl)) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

fn charpoly(tower: &FieldTower, mat: &[Vec<FieldElem>], lvl: usize) -> Vec<FieldElem> {
    // det(x I - A) by cofactor expansion with polynomial entries
    let k = mat.len();
    type Poly = Vec<FieldElem>;
    let padd = |tower: &FieldTower, a: &Poly, b: &Poly| -> Poly {
        let n = a.len().max(b.len());
        (0..n)
            .map(|i| {
                let x = a.get(i).cloned().unwrap_or_else(|| tower.zero(0));
                let y = b.get(i).cloned().unwrap_or_else(|| tower.zero(0));
                tower.add(&tower.lift(&x, x.level.max(y.level)), &tower.lift(&y, x.level.max(y.level)))
            })
            .collect()
    };
    let pmul = |tower: &FieldTower, a: &Poly, b: &Poly| -> Poly {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let lvl = a
            .iter()
            .chain(b.iter())
            .map(|c| c.level)
            .max()
            .unwrap_or(0);
        let mut out = vec![tower.zero(lvl); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                let t = tower.mul(&tower.lift(x, lvl), &tower.lift(y, lvl));
                out[i + j] = tower.add(&out[i + j], &t);
            }
        }
        out
    };
    fn det_rec(
        tower: &FieldTower,
        n: usize,
        get: &dyn Fn(usize, usize) -> Vec<FieldElem>,
        padd: &dyn Fn(&FieldTower, &Vec<FieldElem>, &Vec<FieldElem>) -> Vec<FieldElem>,
        pmul: &dyn Fn(&FieldTower, &Vec<FieldElem>, &Vec<FieldElem>) -> Vec<FieldElem>,
    ) -> Vec<FieldElem> {
        if n == 1 {
            return get(0, 0);
        }
        let mut acc: Vec<FieldElem> = Vec::new();
        for i in 0..n {
            let minor = |r: usize, c: usize| get(if r < i { r } else { r + 1 }, c + 1);
            let sub = det_rec(tower, n - 1, &minor, padd, pmul);
            let mut term = pmul(tower, &get(i, 0), &sub);
            if i % 2 == 1 {
                term = term.iter().map(|c| tower.neg(c)).collect();
            }
            acc = padd(tower, &acc, &term);
        }
        acc
    }
    let get = |i: usize, j: usize| -> Vec<FieldElem> {
        // entry of x I - A as a polynomial in x
        let a = tower.neg(&tower.lift(&mat[i][j], lvl));
        if i == j {
            vec![a, tower.one(lvl)]
        } else {
            vec![a]
        }
    };
    let mut cp = det_rec(tower, k, &get, &padd, &pmul);
    cp.resize(k + 1, tower.zero(lvl));
    cp
}

fn binom_mod_p(n: usize, k: usize, p: u64) -> u64 {
    // Lucas' theorem
    let mut n = n as u64;
    let mut k = k as u64;
    let mut acc = 1u64;
    while n > 0 || k > 0 {
        let nd = n % p;
        let kd = k % p;
        if kd > nd {
            return 0;
        }
        // small binomial
        let mut c = 1u64;
        for i in 0..kd {
            c = c * ((nd - i) % p) % p;
            // inverse of (i+1)
            let mut inv = 1u64;
            let mut b = (i + 1) % p;
            let mut e = p - 2;
            while e > 0 {
                if e & 1 == 1 {
                    inv = inv * b % p;
                }
                b = b * b % p;
                e >>= 1;
            }
            c = c * inv % p;
        }
        acc = acc * c % p;
        n /= p;
        k /= p;
    }
    acc
}

// ---- serialization ----

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DModuleJson {
    pub tower: crate::ffield::TowerJson,
    pub k: usize,
    pub n: usize,
    pub theta: FieldElem,
    pub phi_t: Vec<crate::ore::OrePolyJson>,
}

impl DModule {
    pub fn to_json(&self, tower: &FieldTower) -> DModuleJson {
        let phi_t = match &self.action {
            DAction::Scalar(p) => vec![p.to_json()],
            DAction::Matrix(m) => m.entries.iter().map(|p| p.to_json()).collect(),
        };
        DModuleJson {
            tower: tower.to_json(),
            k: self.k,
            n: self.n,
            theta: self.theta.clone(),
            phi_t,
        }
    }

    pub fn from_json(tower: &FieldTower, j: &DModuleJson) -> Result<DModule> {
        if j.k == 1 {
            let p = OrePoly::from_json(tower, &j.phi_t[0])?;
            DModule::drinfeld(tower, p)
        } else {
            let entries = j
                .phi_t
                .iter()
                .map(|p| OrePoly::from_json(tower, p))
                .collect::<Result<Vec<_>>>()?;
            let m = OreMat::new(j.k, entries)?;
            DModule::t_module(tower, j.n, j.theta.clone(), m)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TateSystemJson {
    pub depth: usize,
    pub x_poly: Vec<Vec<u64>>,
    pub chains: Vec<Vec<Vec<FieldElem>>>,
}

impl TateSystem {
    pub fn to_json(&self) -> TateSystemJson {
        TateSystemJson {
            depth: self.depth,
            x_poly: self.x.poly.iter().map(|c| c.coeffs.clone()).collect(),
            chains: self.chains.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn carlitz_q2() -> (FieldTower, DModule) {
        let t = FieldTower::new(2, 1).unwrap();
        let m = DModule::carlitz(&t, t.one(0)).unwrap();
        (t, m)
    }

    #[test]
    fn phi_of_examples() {
        let (t, m) = carlitz_q2();
        // φ_c = c for c in F_q
        let a = m.phi_of(&t, &[t.one(0)]);
        match a {
            DAction::Scalar(p) => {
                assert_eq!(p.degree(), Some(0));
                assert!(t.eq(&p.coeffs[0], &t.one(0)));
            }
            _ => panic!(),
        }
        // φ_{t²} = σ² + 1 for the Carlitz module at θ = 1, q = 2
        let a = m.phi_of(&t, &[t.zero(0), t.zero(0), t.one(0)]);
        match a {
            DAction::Scalar(p) => {
                assert_eq!(p.degree(), Some(2));
                assert!(t.eq(&p.coeffs[0], &t.one(0)));
                assert!(p.coeffs[1].is_zero());
                assert!(t.eq(&p.coeffs[2], &t.one(0)));
            }
            _ => panic!(),
        }
        // φ_{t²+t} = σ² + σ
        let a = m.phi_of(&t, &[t.zero(0), t.one(0), t.one(0)]);
        match a {
            DAction::Scalar(p) => {
                assert!(p.coeffs[0].is_zero());
                assert!(t.eq(&p.coeffs[1], &t.one(0)));
                assert!(t.eq(&p.coeffs[2], &t.one(0)));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn phi_of_is_ring_homomorphism() {
        let mut t = FieldTower::new(3, 1).unwrap();
        let l = t.extend_lex(2).unwrap();
        let m = DModule::rank2(&t, t.generator(l), t.one(0), t.one(l)).unwrap();
        let polys: Vec<Vec<FieldElem>> = vec![
            vec![t.one(0), t.scalar(0, 2)],
            vec![t.scalar(0, 2), t.zero(0), t.one(0)],
            vec![t.zero(0), t.one(0)],
        ];
        for a in polys.iter() {
            for b in polys.iter() {
                // a(t)·b(t) as polynomials
                let mut prod = vec![t.zero(0); a.len() + b.len() - 1];
                for (i, x) in a.iter().enumerate() {
                    for (j, y) in b.iter().enumerate() {
                        prod[i + j] = t.add(&prod[i + j], &t.mul(x, y));
                    }
                }
                let lhs = m.phi_of(&t, &prod);
                let rhs = m.phi_of(&t, a).mul(&t, &m.phi_of(&t, b));
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn characteristic_of_rank1() {
        let (t, m) = carlitz_q2();
        let (b, cert) = m.characteristic_of(&t).unwrap();
        assert!(t.eq(&b, &t.one(0)));
        assert_eq!(cert, CharCertificate { j: 0, m: 1 });
    }

    #[test]
    fn characteristic_of_jordan_block_odd_p() {
        // k = 2, p = 3: char poly (x - θ)², so j = 0, m = 2, b = θ
        let mut t = FieldTower::new(3, 1).unwrap();
        let l = t.extend_lex(2).unwrap();
        let theta = t.generator(l);
        let phi = OreMat::new(
            2,
            vec![
                OrePoly::new(&t, vec![theta.clone(), t.one(l)]),
                OrePoly::one(&t, l),
                OrePoly::zero(),
                OrePoly::new(&t, vec![theta.clone(), t.one(l)]),
            ],
        )
        .unwrap();
        let m = DModule::t_module(&t, 2, theta.clone(), phi).unwrap();
        let (b, cert) = m.characteristic_of(&t).unwrap();
        assert!(t.eq(&b, &theta));
        assert_eq!(cert, CharCertificate { j: 0, m: 2 });
        let rec = DModule::theta_from_characteristic(&t, &b, &cert);
        assert!(t.eq(&rec, &theta));
    }

    #[test]
    fn characteristic_of_jordan_block_even_p() {
        // k = 2 = p: char poly (x - θ)² = x² - θ², so j = 1, m = 1, b = θ²
        let mut t = FieldTower::new(2, 1).unwrap();
        let l = t.extend_lex(2).unwrap();
        let theta = t.generator(l);
        let phi = OreMat::new(
            2,
            vec![
                OrePoly::new(&t, vec![theta.clone(), t.one(l)]),
                OrePoly::one(&t, l),
                OrePoly::zero(),
                OrePoly::new(&t, vec![theta.clone(), t.one(l)]),
            ],
        )
        .unwrap();
        let m = DModule::t_module(&t, 2, theta.clone(), phi).unwrap();
        let (b, cert) = m.characteristic_of(&t).unwrap();
        assert!(t.eq(&b, &t.mul(&theta, &theta)));
        assert_eq!(cert, CharCertificate { j: 1, m: 1 });
        let rec = DModule::theta_from_characteristic(&t, &b, &cert);
        assert!(t.eq(&rec, &theta));
    }

    #[test]
    fn characteristic_shape_rejects_generic_matrix() {
        let t = FieldTower::new(3, 1).unwrap();
        // constant matrix diag(0, 1): char (x)(x-1), not of the required shape
        let phi = OreMat::new(
            2,
            vec![
                OrePoly::new(&t, vec![t.zero(0), t.one(0)]),
                OrePoly::zero(),
                OrePoly::zero(),
                OrePoly::new(&t, vec![t.one(0), t.one(0)]),
            ],
        )
        .unwrap();
        let m = DModule::t_module(&t, 2, t.zero(0), phi).unwrap();
        assert!(matches!(
            m.characteristic_of(&t),
            Err(Error::NotEllipticCharacteristic(_))
        ));
    }

    #[test]
    fn torsion_carlitz_q2() {
        let (mut t, m) = carlitz_q2();
        let x = XPoint::rational(&t, t.zero(0));
        // r = 0: empty
        assert!(m.torsion_basis(&mut t, &x, 0).unwrap().is_empty());
        // r = 1: basis {1}
        let b1 = m.torsion_basis(&mut t, &x, 1).unwrap();
        assert_eq!(b1.len(), 1);
        assert!(t.eq(&b1[0][0], &t.one(0)));
        // r = 2: dimension 2, contains ω with ω² + ω = 1
        let b2 = m.torsion_basis(&mut t, &x, 2).unwrap();
        assert_eq!(b2.len(), 2);
        let phi2 = m.phi_x_power(&t, &x, 2);
        for v in b2.iter() {
            let img = phi2.apply(&t, v).unwrap();
            assert!(img[0].is_zero());
        }
        // some element λ with φ_t(λ) = 1 lives in the basis span; check the
        // defining equation λ² + λ = 1 for a basis member of minimal level > 0
        let lam = b2.iter().find(|v| v[0].level > 0).unwrap();
        let sq = t.mul(&lam[0], &lam[0]);
        let chk = t.add(&sq, &lam[0]);
        assert!(t.eq(&chk, &t.one(lam[0].level)));
    }

    #[test]
    fn torsion_dimension_matches_brute_force() {
        // Carlitz and a rank-2 module for q ∈ {2, 3}: dim = n · r
        for p in [2u64, 3] {
            let t0 = FieldTower::new(p, 1).unwrap();
            let theta = t0.one(0);
            let modules = vec![
                DModule::carlitz(&t0, theta.clone()).unwrap(),
                DModule::rank2(&t0, theta.clone(), t0.one(0), t0.one(0)).unwrap(),
            ];
            for m in modules {
                let mut t = t0.clone();
                let x = XPoint::rational(&t, t.scalar(0, p - 1)); // ξ = -1 ≠ θ = 1
                for r in 1..=2 {
                    let basis = m.torsion_basis(&mut t, &x, r).unwrap();
                    assert_eq!(basis.len(), m.n * r, "p={p} n={} r={r}", m.n);
                    // brute force on fields of size ≤ 2^12
                    let lvl = t.top_level();
                    if t.level_size(lvl) <= 1 << 12 {
                        let phi = m.phi_x_power(&t, &x, r);
                        let count = t
                            .enumerate(lvl)
                            .filter(|z| phi.apply(&t, &[z.clone()]).unwrap()[0].is_zero())
                            .count() as u128;
                        assert_eq!(count, (t.q() as u128).pow((m.n * r) as u32));
                    }
                }
            }
        }
    }

    #[test]
    fn torsion_characteristic_collision() {
        let (mut t, m) = carlitz_q2();
        let x = XPoint::rational(&t, t.one(0)); // ξ = θ = 1
        assert!(matches!(
            m.torsion_basis(&mut t, &x, 1),
            Err(Error::CharacteristicCollision(_))
        ));
    }

    #[test]
    fn tate_basis_carlitz_example() {
        let (mut t, m) = carlitz_q2();
        let x = XPoint::rational(&t, t.zero(0));
        let ts = m.tate_basis(&mut t, &x, 1).unwrap();
        assert_eq!(ts.chains.len(), 1);
        // α_0 = 1, α_1 = ω
        assert!(t.eq(&ts.chains[0][0][0], &t.one(0)));
        let a1 = &ts.chains[0][1][0];
        assert_eq!(t.q_degree(a1.level), 2);
        assert_eq!(a1.coeffs, vec![0, 1]);
        assert!(ts.verify_chains(&t));
    }

    #[test]
    fn tate_depth0_chain() {
        let (mut t, m) = carlitz_q2();
        let x = XPoint::rational(&t, t.zero(0));
        let ts = m.tate_basis(&mut t, &x, 0).unwrap();
        assert_eq!(ts.chains[0].len(), 1);
        assert!(!ts.chains[0][0][0].is_zero());
        assert!(ts.verify_chains(&t));
    }

    #[test]
    fn tate_chain_consistency_rank2() {
        let mut t = FieldTower::new(2, 1).unwrap();
        let m = DModule::rank2(&t, t.one(0), t.one(0), t.one(0)).unwrap();
        let x = XPoint::rational(&t, t.zero(0));
        let ts = m.tate_basis(&mut t, &x, 2).unwrap();
        assert_eq!(ts.chains.len(), 2);
        assert!(ts.verify_chains(&t));
        // division points at depth h form a free module: the depth-h points
        // together with their φ_{t_x}-images span dimension n(h+1)
        let mut rows = Vec::new();
        let lvl = t.top_level();
        for chain in ts.chains.iter() {
            for pt in chain.iter() {
                rows.push(t.fq_coords(&t.lift(&pt[0], lvl)));
            }
        }
        let rank = crate::ffield::linalg::rank(&t, rows);
        assert_eq!(rank, 2 * 3);
    }

    #[test]
    fn tate_policies_differ_by_unit_series() {
        // n = 1: two pick policies give chains related by a scalar series in
        // F_q[[t_x]] with unit constant term
        let (mut t, m) = carlitz_q2();
        let x = XPoint::rational(&t, t.zero(0));
        let a = m.tate_basis(&mut t, &x, 3).unwrap();
        let mut t2 = FieldTower::new(2, 1).unwrap();
        let b = m.tate_basis_with_policy(&mut t2, &x, 3, PickPolicy::Greatest).unwrap();
        assert!(b.verify_chains(&t2));
        // towers agree level by level, so compare flat coordinates directly
        let lvl = t.top_level().max(t2.top_level());
        let ca: Vec<FieldElem> = a.chains[0].iter().map(|p| t.lift(&p[0], lvl)).collect();
        let cb: Vec<FieldElem> = b.chains[0].iter().map(|p| t.lift(&p[0], lvl)).collect();
        // triangular solve for w_0..w_3 in F_q with α'_h = Σ_{j≤h} w_j α_{h-j}
        let mut ws: Vec<FieldElem> = Vec::new();
        for h in 0..=3usize {
            let mut rhs = cb[h].clone();
            for (j, w) in ws.iter().enumerate() {
                let tmul = t.mul(&t.lift(w, lvl), &ca[h - j]);
                rhs = t.sub(&rhs, &tmul);
            }
            let w = t.div(&rhs, &ca[0]).unwrap();
            assert!(t.eq(&t.frobenius(&w), &w), "w_{h} not σ-fixed");
            ws.push(w);
        }
        assert!(!ws[0].is_zero());
    }

    #[test]
    fn tate_non_rational_point() {
        // Carlitz over F_2 at the degree-2 point x = (t² + t + 1)
        let (mut t, m) = carlitz_q2();
        let x = XPoint::from_poly(
            &t,
            vec![t.one(0), t.one(0), t.one(0)],
        )
        .unwrap();
        let ts = m.tate_basis(&mut t, &x, 1).unwrap();
        assert!(ts.verify_chains(&t));
        assert_eq!(ts.kernel.len(), 2); // n · deg(x)
        let res = ts.residue.as_ref().unwrap();
        assert_eq!(t.q_degree(res.level), 2);
        // the derived (ξ, c) points are annihilated by φ_{t_x} at depth 0
        let phi = m.phi_at_x(&t, &x);
        for c in 0..2 {
            let pt = ts.point(&t, 0, c, 0).unwrap();
            let img = phi.apply(&t, &pt).unwrap();
            assert!(img[0].is_zero());
        }
        // lifts really evaluate to the residue basis at τ
        for (c, w) in res.lifts.iter().enumerate() {
            let mut acc = t.zero(res.level);
            let mut pw = t.one(res.level);
            for coef in w.iter() {
                acc = t.add(&acc, &t.mul(&t.lift(coef, res.level), &pw));
                pw = t.mul(&pw, &res.tau);
            }
            assert!(t.eq(&acc, &res.omegas[c]));
        }
    }

    #[test]
    fn dmodule_json_round_trip() {
        let (t, m) = carlitz_q2();
        let j = m.to_json(&t);
        let m2 = DModule::from_json(&t, &j).unwrap();
        assert_eq!(m, m2);
    }
}
