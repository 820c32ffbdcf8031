//! Dense states and operators on `ℓ²(G)^⊗N`.
//!
//! A product basis state `|g_1,…,g_N⟩` has index `Σ_k idx(g_k)·|G|^{N−k}`,
//! i.e. particle 1 is the most significant digit. Operators are stored
//! row-major.

use std::fmt;

use num_complex::Complex64;
use serde::de::Deserializer;
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::group::{GroupElement, GroupSpec};

pub type C64 = Complex64;

/// Shared comparison tolerance: two operators or states are equal when the
/// largest elementwise deviation is below this value.
pub const DEFAULT_EPS: f64 = 1e-10;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// `N` particles on the group `G`; dimension `|G|^N`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSpace")]
pub struct SpaceLabel {
    group: GroupSpec,
    particles: usize,
    #[serde(skip)]
    dim: usize,
}

#[derive(Deserialize)]
struct RawSpace {
    group: GroupSpec,
    particles: usize,
}

impl TryFrom<RawSpace> for SpaceLabel {
    type Error = Error;

    fn try_from(raw: RawSpace) -> Result<Self> {
        SpaceLabel::new(raw.group, raw.particles)
    }
}

impl SpaceLabel {
    pub fn new(group: GroupSpec, particles: usize) -> Result<Self> {
        if particles == 0 {
            return Err(Error::structural("a space needs at least one particle"));
        }
        let dim = (0..particles)
            .try_fold(1usize, |acc, _| acc.checked_mul(group.order()))
            .ok_or_else(|| Error::structural("space dimension overflows"))?;
        Ok(SpaceLabel { group, particles, dim })
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Same group, different particle count.
    pub fn with_particles(&self, particles: usize) -> Result<Self> {
        SpaceLabel::new(self.group.clone(), particles)
    }

    pub fn basis_index(&self, config: &[GroupElement]) -> Result<usize> {
        if config.len() != self.particles {
            return Err(Error::structural(format!(
                "configuration has {} particles, space has {}",
                config.len(),
                self.particles
            )));
        }
        let n = self.group.order();
        config.iter().try_fold(0usize, |acc, g| Ok(acc * n + self.group.index_of(g)?))
    }

    /// Basis index from per-particle element indices.
    pub fn index_from_digits(&self, digits: &[usize]) -> usize {
        let n = self.group.order();
        digits.iter().fold(0, |acc, &d| acc * n + d)
    }

    /// Per-particle element indices of a basis index.
    pub fn digits(&self, index: usize) -> Vec<usize> {
        let n = self.group.order();
        let mut out = vec![0; self.particles];
        let mut rest = index;
        for slot in out.iter_mut().rev() {
            *slot = rest % n;
            rest /= n;
        }
        out
    }

    pub fn config_of(&self, index: usize) -> Vec<GroupElement> {
        self.digits(index).into_iter().map(|d| self.group.element_at(d)).collect()
    }

    pub(crate) fn ensure_same(&self, other: &SpaceLabel) -> Result<()> {
        if self != other {
            return Err(Error::SpaceMismatch(format!("{self} vs {other}")));
        }
        Ok(())
    }

    pub(crate) fn ensure_same_group(&self, other: &SpaceLabel) -> Result<()> {
        if self.group != other.group {
            return Err(Error::GroupMismatch { expected: self.group.to_string(), found: other.group.to_string() });
        }
        Ok(())
    }
}

impl fmt::Display for SpaceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.group, self.particles)
    }
}

/// Read access to the matrix elements of a density operator.
///
/// Lets the trace and projection kernels run on `|ψ⟩⟨ψ|` without
/// materializing a dense `dim × dim` matrix.
pub trait Density: Sync {
    fn space(&self) -> &SpaceLabel;

    /// `⟨r|ρ|c⟩`.
    fn entry(&self, r: usize, c: usize) -> C64;

    /// `Σ_{x∈X, y∈Y} ⟨x|ρ|y⟩`. Pure states override this with a product of
    /// two amplitude sums.
    fn block_sum(&self, rows: &[usize], cols: &[usize]) -> C64 {
        let mut s = ZERO;
        for &x in rows {
            for &y in cols {
                s += self.entry(x, y);
            }
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    space: SpaceLabel,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(space: SpaceLabel, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::structural(format!(
                "state has {} amplitudes, space {} needs {}",
                amplitudes.len(),
                space,
                space.dim()
            )));
        }
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::structural("state contains non-finite amplitudes"));
        }
        Ok(StateVector { space, amplitudes })
    }

    pub fn zeros(space: SpaceLabel) -> Self {
        let amplitudes = vec![ZERO; space.dim()];
        StateVector { space, amplitudes }
    }

    pub fn basis(space: SpaceLabel, index: usize) -> Result<Self> {
        if index >= space.dim() {
            return Err(Error::structural(format!("basis index {index} out of range")));
        }
        let mut s = StateVector::zeros(space);
        s.amplitudes[index] = ONE;
        Ok(s)
    }

    /// `|g_1,…,g_N⟩`.
    pub fn from_config(space: SpaceLabel, config: &[GroupElement]) -> Result<Self> {
        let idx = space.basis_index(config)?;
        StateVector::basis(space, idx)
    }

    pub fn space(&self) -> &SpaceLabel {
        &self.space
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Returns a unit-norm copy. Never called implicitly.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::domain("cannot normalize the zero vector"));
        }
        Ok(self.scale(C64::new(1.0 / n, 0.0)))
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.space.ensure_same(&other.space)?;
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn scale(&self, s: C64) -> Self {
        StateVector { space: self.space.clone(), amplitudes: self.amplitudes.iter().map(|a| a * s).collect() }
    }

    pub fn add(&self, other: &StateVector) -> Result<Self> {
        self.space.ensure_same(&other.space)?;
        Ok(StateVector {
            space: self.space.clone(),
            amplitudes: self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn tensor(&self, other: &StateVector) -> Result<Self> {
        self.space.ensure_same_group(&other.space)?;
        let space = self.space.with_particles(self.space.particles() + other.space.particles())?;
        let mut amplitudes = Vec::with_capacity(space.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        Ok(StateVector { space, amplitudes })
    }

    /// `|self⟩⟨self|` as a dense operator.
    pub fn projector(&self) -> Operator {
        self.outer(self).expect("same space")
    }

    /// `|self⟩⟨other|`.
    pub fn outer(&self, other: &StateVector) -> Result<Operator> {
        self.space.ensure_same(&other.space)?;
        let d = self.space.dim();
        let mut data = Vec::with_capacity(d * d);
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                data.push(a * b.conj());
            }
        }
        Ok(Operator { space: self.space.clone(), data })
    }

    pub fn max_diff(&self, other: &StateVector) -> Result<f64> {
        self.space.ensure_same(&other.space)?;
        Ok(max_abs_diff(&self.amplitudes, &other.amplitudes))
    }

    pub fn approx_eq(&self, other: &StateVector, eps: f64) -> bool {
        self.max_diff(other).is_ok_and(|d| d < eps)
    }
}

impl Density for StateVector {
    fn space(&self) -> &SpaceLabel {
        &self.space
    }

    fn entry(&self, r: usize, c: usize) -> C64 {
        self.amplitudes[r] * self.amplitudes[c].conj()
    }

    fn block_sum(&self, rows: &[usize], cols: &[usize]) -> C64 {
        let a: C64 = rows.iter().map(|&x| self.amplitudes[x]).sum();
        let b: C64 = cols.iter().map(|&y| self.amplitudes[y]).sum();
        a * b.conj()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: SpaceLabel,
    data: Vec<C64>,
}

impl Operator {
    pub fn new(space: SpaceLabel, data: Vec<C64>) -> Result<Self> {
        let d = space.dim();
        if data.len() != d * d {
            return Err(Error::structural(format!(
                "operator has {} entries, space {} needs {}",
                data.len(),
                space,
                d * d
            )));
        }
        if data.iter().any(|a| !a.is_finite()) {
            return Err(Error::structural("operator contains non-finite entries"));
        }
        Ok(Operator { space, data })
    }

    pub fn zeros(space: SpaceLabel) -> Self {
        let d = space.dim();
        Operator { space, data: vec![ZERO; d * d] }
    }

    pub fn identity(space: SpaceLabel) -> Self {
        let d = space.dim();
        let mut op = Operator::zeros(space);
        for i in 0..d {
            op.data[i * d + i] = ONE;
        }
        op
    }

    /// Builds an operator entry by entry; `f(row, col)`.
    pub fn from_fn<F>(space: SpaceLabel, exec: Execution, f: F) -> Self
    where
        F: Fn(usize, usize) -> C64 + Send + Sync,
    {
        let d = space.dim();
        let mut data = vec![ZERO; d * d];
        exec::for_each_row(&mut data, d, exec, |r, row| {
            for (c, v) in row.iter_mut().enumerate() {
                *v = f(r, c);
            }
        });
        Operator { space, data }
    }

    /// Matrix unit `|r⟩⟨c|`.
    pub fn unit(space: SpaceLabel, r: usize, c: usize) -> Result<Self> {
        let d = space.dim();
        if r >= d || c >= d {
            return Err(Error::structural("matrix unit index out of range"));
        }
        let mut op = Operator::zeros(space);
        op.data[r * d + c] = ONE;
        Ok(op)
    }

    /// Permutation-with-phase unitary `|x⟩ ↦ phase·|perm[x]⟩`.
    pub fn permutation(space: SpaceLabel, perm: &[usize], phase: C64) -> Result<Self> {
        let d = space.dim();
        if perm.len() != d {
            return Err(Error::structural("permutation length does not match dimension"));
        }
        let mut op = Operator::zeros(space);
        for (x, &px) in perm.iter().enumerate() {
            op.data[px * d + x] = phase;
        }
        Ok(op)
    }

    pub fn space(&self) -> &SpaceLabel {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim() + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        let d = self.dim();
        self.data[r * d + c] = v;
    }

    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        self.matmul_with(other, Execution::default())
    }

    pub fn matmul_with(&self, other: &Operator, exec: Execution) -> Result<Operator> {
        self.space.ensure_same(&other.space)?;
        let d = self.dim();
        let mut out = vec![ZERO; d * d];
        let (a, b) = (&self.data, &other.data);
        exec::for_each_row(&mut out, d, exec, |r, row| {
            for k in 0..d {
                let s = a[r * d + k];
                if s == ZERO {
                    continue;
                }
                for (o, &bv) in row.iter_mut().zip(&b[k * d..(k + 1) * d]) {
                    *o += s * bv;
                }
            }
        });
        Ok(Operator { space: self.space.clone(), data: out })
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        self.space.ensure_same(&psi.space)?;
        let d = self.dim();
        let amplitudes = (0..d)
            .map(|r| self.data[r * d..(r + 1) * d].iter().zip(&psi.amplitudes).map(|(m, v)| m * v).sum())
            .collect();
        Ok(StateVector { space: self.space.clone(), amplitudes })
    }

    pub fn adjoint(&self) -> Operator {
        let d = self.dim();
        let mut data = vec![ZERO; d * d];
        for r in 0..d {
            for c in 0..d {
                data[c * d + r] = self.data[r * d + c].conj();
            }
        }
        Operator { space: self.space.clone(), data }
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Operator, f: impl Fn(C64, C64) -> C64) -> Result<Operator> {
        self.space.ensure_same(&other.space)?;
        Ok(Operator {
            space: self.space.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn scale(&self, s: C64) -> Operator {
        Operator { space: self.space.clone(), data: self.data.iter().map(|a| a * s).collect() }
    }

    /// `self += s · other`.
    pub fn add_scaled(&mut self, s: C64, other: &Operator) -> Result<()> {
        self.space.ensure_same(&other.space)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        Ok(())
    }

    pub fn trace(&self) -> C64 {
        let d = self.dim();
        (0..d).map(|i| self.data[i * d + i]).sum()
    }

    /// Kronecker product; `self` acts on the leading particles.
    pub fn tensor(&self, other: &Operator) -> Result<Operator> {
        self.space.ensure_same_group(&other.space)?;
        let space = self.space.with_particles(self.space.particles() + other.space.particles())?;
        let (da, db) = (self.dim(), other.dim());
        let d = da * db;
        let mut data = vec![ZERO; d * d];
        for ra in 0..da {
            for ca in 0..da {
                let s = self.data[ra * da + ca];
                if s == ZERO {
                    continue;
                }
                for rb in 0..db {
                    let row = (ra * db + rb) * d + ca * db;
                    for cb in 0..db {
                        data[row + cb] = s * other.data[rb * db + cb];
                    }
                }
            }
        }
        Ok(Operator { space, data })
    }

    /// Standard partial trace over the last `m` particles.
    pub fn partial_trace_last(&self, m: usize) -> Result<Operator> {
        partial_trace_last(self, m)
    }

    /// `tr(self† other)`.
    pub fn hs_inner(&self, other: &Operator) -> Result<C64> {
        self.space.ensure_same(&other.space)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn max_diff(&self, other: &Operator) -> Result<f64> {
        self.space.ensure_same(&other.space)?;
        Ok(max_abs_diff(&self.data, &other.data))
    }

    pub fn approx_eq(&self, other: &Operator, eps: f64) -> bool {
        self.max_diff(other).is_ok_and(|d| d < eps)
    }

    pub fn is_hermitian(&self, eps: f64) -> bool {
        let d = self.dim();
        (0..d).all(|r| (r..d).all(|c| (self.data[r * d + c] - self.data[c * d + r].conj()).norm() < eps))
    }

    /// Hermitian and idempotent to within `eps`.
    pub fn is_projector(&self, eps: f64) -> bool {
        self.is_hermitian(eps) && self.matmul(self).is_ok_and(|sq| sq.approx_eq(self, eps))
    }

    /// Smallest-eigenvalue test `λ_min ≥ −eps` for a Hermitian operator.
    ///
    /// Runs a Cholesky factorization of `self + eps·𝟏`, which exists exactly
    /// when every eigenvalue exceeds `−eps` (up to rounding).
    pub fn is_psd(&self, eps: f64) -> bool {
        if !self.is_hermitian(eps.max(1e-12)) {
            return false;
        }
        let d = self.dim();
        let mut l = self.data.clone();
        for i in 0..d {
            l[i * d + i] += eps;
        }
        for j in 0..d {
            let mut diag = l[j * d + j].re;
            for k in 0..j {
                diag -= l[j * d + k].norm_sqr();
            }
            if diag <= 0.0 {
                return false;
            }
            let pivot = diag.sqrt();
            l[j * d + j] = C64::new(pivot, 0.0);
            for i in (j + 1)..d {
                let mut v = l[i * d + j];
                for k in 0..j {
                    v -= l[i * d + k] * l[j * d + k].conj();
                }
                l[i * d + j] = v / pivot;
            }
        }
        true
    }

    /// `P self P†` for the permutation unitary `|x⟩ ↦ |perm[x]⟩`.
    pub fn conjugate_by_permutation(&self, perm: &[usize]) -> Operator {
        let d = self.dim();
        let mut data = vec![ZERO; d * d];
        for x in 0..d {
            let px = perm[x];
            for y in 0..d {
                data[px * d + perm[y]] = self.data[x * d + y];
            }
        }
        Operator { space: self.space.clone(), data }
    }
}

impl Density for Operator {
    fn space(&self) -> &SpaceLabel {
        &self.space
    }

    fn entry(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.space.dim() + c]
    }
}

/// Standard partial trace over the last `m` particles of any density.
pub fn partial_trace_last<D: Density + ?Sized>(rho: &D, m: usize) -> Result<Operator> {
    let space = rho.space();
    if m >= space.particles() {
        return Err(Error::structural(format!("cannot trace out {m} of {} particles", space.particles())));
    }
    let kept = space.with_particles(space.particles() - m)?;
    let dz = space.dim() / kept.dim();
    Ok(Operator::from_fn(kept, Execution::default(), |r, c| (0..dz).map(|z| rho.entry(r * dz + z, c * dz + z)).sum()))
}

fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

struct Pairs<'a>(&'a [C64]);

impl Serialize for Pairs<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for v in self.0 {
            seq.serialize_element(&[v.re, v.im])?;
        }
        seq.end()
    }
}

#[derive(Serialize)]
struct WireOut<'a> {
    space: &'a SpaceLabel,
    data: Pairs<'a>,
}

#[derive(Deserialize)]
struct WireIn {
    space: SpaceLabel,
    data: Vec<[f64; 2]>,
}

fn unpack(data: Vec<[f64; 2]>) -> Vec<C64> {
    data.into_iter().map(|[re, im]| C64::new(re, im)).collect()
}

impl Serialize for StateVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        WireOut { space: &self.space, data: Pairs(&self.amplitudes) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for StateVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = WireIn::deserialize(d)?;
        StateVector::new(w.space, unpack(w.data)).map_err(serde::de::Error::custom)
    }
}

impl Serialize for Operator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        WireOut { space: &self.space, data: Pairs(&self.data) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = WireIn::deserialize(d)?;
        Operator::new(w.space, unpack(w.data)).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::Rng;
    use proptest::prelude::*;

    fn space(g: &str, n: usize) -> SpaceLabel {
        SpaceLabel::new(g.parse().unwrap(), n).unwrap()
    }

    #[test]
    fn basis_index_examples() {
        let s = space("Z3", 2);
        let g = s.group().clone();
        let e = |v: i64| g.element(&[v]).unwrap();
        assert_eq!(s.basis_index(&[e(0), e(0)]).unwrap(), 0);
        assert_eq!(s.basis_index(&[e(1), e(2)]).unwrap(), 5);
        let s2 = space("Z2", 3);
        let g2 = s2.group().clone();
        let c: Vec<_> = [1, 0, 1].iter().map(|&v| g2.element(&[v]).unwrap()).collect();
        assert_eq!(s2.basis_index(&c).unwrap(), 5);
        assert!(matches!(s.basis_index(&[e(1)]), Err(Error::Structural(_))));
    }

    #[test]
    fn basis_index_roundtrip() {
        let s = space("Z2xZ3", 2);
        for i in 0..s.dim() {
            assert_eq!(s.basis_index(&s.config_of(i)).unwrap(), i);
            assert_eq!(s.index_from_digits(&s.digits(i)), i);
        }
    }

    #[test]
    fn tensor_examples() {
        let s1 = space("Z2", 1);
        let id = Operator::identity(s1.clone());
        assert_eq!(id.tensor(&id).unwrap(), Operator::identity(space("Z2", 2)));
        let p0 = Operator::unit(s1.clone(), 0, 0).unwrap();
        let p1 = Operator::unit(s1.clone(), 1, 1).unwrap();
        let psi = StateVector::basis(space("Z2", 2), 1).unwrap();
        assert_eq!(p0.tensor(&p1).unwrap().apply(&psi).unwrap(), psi);

        let mut rng = Rng::seeded(1);
        let a = rng.operator(space("Z3", 1));
        let b = rng.operator(space("Z3", 1));
        let t = a.tensor(&b).unwrap().trace();
        assert!((t - a.trace() * b.trace()).norm() < 1e-12);
        assert!(a.tensor(&Operator::identity(space("Z2", 1))).is_err());
    }

    #[test]
    fn tensor_is_associative() {
        let mut rng = Rng::seeded(2);
        let s = space("Z2", 1);
        let (a, b, c) = (rng.operator(s.clone()), rng.operator(s.clone()), rng.operator(space("Z2", 2)));
        let left = a.tensor(&b).unwrap().tensor(&c).unwrap();
        let right = a.tensor(&b.tensor(&c).unwrap()).unwrap();
        // same index bookkeeping; only the float product order differs
        assert!(left.approx_eq(&right, 1e-13));
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = Rng::seeded(3);
        let rho = rng.density(space("Z3", 2), 3);
        let sigma = rng.density(space("Z3", 1), 2);
        let joint = rho.tensor(&sigma).unwrap();
        let reduced = joint.partial_trace_last(1).unwrap();
        assert!(reduced.approx_eq(&rho.scale(sigma.trace()), 1e-12));
        assert!((joint.trace() - reduced.trace()).norm() < 1e-12);
        assert!(joint.partial_trace_last(3).is_err());
    }

    #[test]
    fn partial_trace_is_positive() {
        let mut rng = Rng::seeded(4);
        for k in 0..100 {
            let rho = rng.density(space("Z2", 3), 1 + k % 4);
            let red = rho.partial_trace_last(1 + k % 2).unwrap();
            assert!(red.is_psd(1e-10));
        }
    }

    #[test]
    fn psd_test_rejects_negative_eigenvalue() {
        let s = space("Z2", 1);
        let mut op = Operator::identity(s);
        op.set(1, 1, C64::new(-1e-6, 0.0));
        assert!(!op.is_psd(1e-10));
        assert!(op.is_psd(1e-5));
    }

    #[test]
    fn hs_inner_examples() {
        let s = space("Z3", 2);
        let id = Operator::identity(s.clone());
        assert_eq!(id.hs_inner(&id).unwrap(), C64::new(9.0, 0.0));
        let a = Rng::seeded(5).operator(s);
        let v = a.hs_inner(&a).unwrap();
        assert!(v.re >= 0.0 && v.im.abs() < 1e-12);
    }

    #[test]
    fn pure_density_matches_projector() {
        let s = space("Z3", 2);
        let psi = Rng::seeded(6).state(s);
        let p = psi.projector();
        for r in 0..9 {
            for c in 0..9 {
                assert!((psi.entry(r, c) - p.get(r, c)).norm() < 1e-15);
            }
        }
        let rows = [0, 4, 8];
        let cols = [1, 2];
        assert!((psi.block_sum(&rows, &cols) - p.block_sum(&rows, &cols)).norm() < 1e-14);
        let a = partial_trace_last(&psi, 1).unwrap();
        assert!(a.approx_eq(&p.partial_trace_last(1).unwrap(), 1e-14));
    }

    #[test]
    fn matmul_modes_agree() {
        let s = space("Z3", 2);
        let mut rng = Rng::seeded(7);
        let (a, b) = (rng.operator(s.clone()), rng.operator(s));
        let p = a.matmul_with(&b, Execution::Parallel).unwrap();
        let q = a.matmul_with(&b, Execution::Sequential).unwrap();
        assert_eq!(p, q);
        let direct = (0..9).map(|k| a.get(2, k) * b.get(k, 5)).sum::<C64>();
        assert!((p.get(2, 5) - direct).norm() < 1e-13);
    }

    #[test]
    fn permutation_conjugation() {
        let s = space("Z2", 2);
        let perm = [2, 0, 3, 1];
        let p = Operator::permutation(s.clone(), &perm, ONE).unwrap();
        let a = Rng::seeded(8).operator(s);
        let dense = p.matmul(&a).unwrap().matmul(&p.adjoint()).unwrap();
        assert!(dense.approx_eq(&a.conjugate_by_permutation(&perm), 1e-14));
    }

    #[test]
    fn json_roundtrip_is_bit_exact() {
        let s = space("Z2xZ3", 1);
        let mut rng = Rng::seeded(9);
        let a = rng.operator(s.clone());
        let text = serde_json::to_string(&a).unwrap();
        assert!(text.starts_with(r#"{"space":{"group":{"moduli":[2,3]},"particles":1},"data":[["#));
        let back: Operator = serde_json::from_str(&text).unwrap();
        assert_eq!(back, a);
        let psi = rng.state(s);
        let back: StateVector = serde_json::from_str(&serde_json::to_string(&psi).unwrap()).unwrap();
        assert_eq!(back, psi);
        let short = r#"{"space":{"group":{"moduli":[2]},"particles":1},"data":[[1,0]]}"#;
        assert!(serde_json::from_str::<StateVector>(short).is_err());
    }

    proptest! {
        #[test]
        fn entries_roundtrip_through_json(re in -1e300f64..1e300, im in -1e-300f64..1e-300) {
            let s = space("Z2", 1);
            let psi = StateVector::new(s, vec![C64::new(re, im), C64::new(im, re)]).unwrap();
            let back: StateVector = serde_json::from_str(&serde_json::to_string(&psi).unwrap()).unwrap();
            prop_assert_eq!(back, psi);
        }
    }
}
