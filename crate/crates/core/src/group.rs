//! Finite Abelian groups presented as products of cyclic factors.
//!
//! Elements are residue vectors and all group arithmetic is exact integer
//! arithmetic. Complex numbers only appear when a character is evaluated.
//!
//! Element and character enumeration use the same mixed-radix order: the
//! last cyclic factor varies fastest, and index 0 is the identity (resp. the
//! trivial character). Every other module relies on this bijection.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `Z_{n_1} × … × Z_{n_k}` with every `n_j ≥ 2`.
///
/// Isomorphic groups with different presentations (`Z6` and `Z2xZ3`) are
/// distinct specs; no canonicalization is attempted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawGroupSpec")]
pub struct GroupSpec {
    moduli: Vec<usize>,
    #[serde(skip)]
    order: usize,
    /// lcm of the moduli; characters take values in the `lcm`-th roots of unity.
    #[serde(skip)]
    exponent: usize,
}

#[derive(Deserialize)]
struct RawGroupSpec {
    moduli: Vec<usize>,
}

impl TryFrom<RawGroupSpec> for GroupSpec {
    type Error = Error;

    fn try_from(raw: RawGroupSpec) -> Result<Self> {
        GroupSpec::new(raw.moduli)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement {
    residues: Vec<usize>,
}

/// Character `χ_k(g) = exp(2πi Σ_j k_j g_j / n_j)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Character {
    index: Vec<usize>,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl GroupSpec {
    pub fn new(moduli: Vec<usize>) -> Result<Self> {
        if moduli.is_empty() {
            return Err(Error::InvalidGroup("at least one cyclic factor is required".into()));
        }
        if let Some(&bad) = moduli.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidGroup(format!("cyclic factor order {bad} is below 2")));
        }
        let order = moduli
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::InvalidGroup("group order overflows".into()))?;
        let exponent = moduli.iter().fold(1usize, |l, &n| l / gcd(l, n) * n);
        Ok(GroupSpec { moduli, order, exponent })
    }

    /// `Z_n`.
    pub fn cyclic(n: usize) -> Result<Self> {
        GroupSpec::new(vec![n])
    }

    pub fn moduli(&self) -> &[usize] {
        &self.moduli
    }

    /// `|G| = ∏ n_j`.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn is_cyclic(&self) -> bool {
        self.moduli.len() == 1
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement { residues: vec![0; self.moduli.len()] }
    }

    /// Builds an element, reducing each residue modulo its factor.
    pub fn element(&self, residues: &[i64]) -> Result<GroupElement> {
        if residues.len() != self.moduli.len() {
            return Err(Error::structural(format!(
                "element has {} residues, group {} has {} factors",
                residues.len(),
                self,
                self.moduli.len()
            )));
        }
        let residues = residues.iter().zip(&self.moduli).map(|(&r, &n)| r.rem_euclid(n as i64) as usize).collect();
        Ok(GroupElement { residues })
    }

    pub fn character(&self, index: &[i64]) -> Result<Character> {
        let e = self.element(index)?;
        Ok(Character { index: e.residues })
    }

    fn check(&self, residues: &[usize]) -> Result<()> {
        if residues.len() != self.moduli.len() || residues.iter().zip(&self.moduli).any(|(&r, &n)| r >= n) {
            return Err(Error::GroupMismatch { expected: self.to_string(), found: format!("{residues:?}") });
        }
        Ok(())
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.check(&g.residues).is_ok()
    }

    pub fn compose(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        self.check(&a.residues)?;
        self.check(&b.residues)?;
        let residues = a.residues.iter().zip(&b.residues).zip(&self.moduli).map(|((&x, &y), &n)| (x + y) % n).collect();
        Ok(GroupElement { residues })
    }

    pub fn inverse(&self, a: &GroupElement) -> Result<GroupElement> {
        self.check(&a.residues)?;
        let residues = a.residues.iter().zip(&self.moduli).map(|(&x, &n)| (n - x) % n).collect();
        Ok(GroupElement { residues })
    }

    /// Mixed-radix index of an element (last factor fastest).
    pub fn index_of(&self, g: &GroupElement) -> Result<usize> {
        self.check(&g.residues)?;
        Ok(g.residues.iter().zip(&self.moduli).fold(0, |acc, (&r, &n)| acc * n + r))
    }

    pub fn element_at(&self, index: usize) -> GroupElement {
        debug_assert!(index < self.order);
        let mut residues = vec![0; self.moduli.len()];
        let mut rest = index;
        for (slot, &n) in residues.iter_mut().zip(&self.moduli).rev() {
            *slot = rest % n;
            rest /= n;
        }
        GroupElement { residues }
    }

    pub fn character_at(&self, index: usize) -> Character {
        Character { index: self.element_at(index).residues }
    }

    pub fn character_index(&self, chi: &Character) -> Result<usize> {
        self.check(&chi.index)?;
        Ok(chi.index.iter().zip(&self.moduli).fold(0, |acc, (&r, &n)| acc * n + r))
    }

    pub fn enumerate_elements(&self) -> Vec<GroupElement> {
        (0..self.order).map(|i| self.element_at(i)).collect()
    }

    pub fn enumerate_characters(&self) -> Vec<Character> {
        (0..self.order).map(|i| self.character_at(i)).collect()
    }

    /// Group law on mixed-radix indices.
    pub fn compose_idx(&self, a: usize, b: usize) -> usize {
        let mut out = 0;
        let mut place = 1;
        let (mut a, mut b) = (a, b);
        for &n in self.moduli.iter().rev() {
            out += ((a % n + b % n) % n) * place;
            place *= n;
            a /= n;
            b /= n;
        }
        out
    }

    pub fn inverse_idx(&self, a: usize) -> usize {
        let mut out = 0;
        let mut place = 1;
        let mut a = a;
        for &n in self.moduli.iter().rev() {
            out += ((n - a % n) % n) * place;
            place *= n;
            a /= n;
        }
        out
    }

    /// Numerator `r` of the phase `χ_k(g) = exp(2πi r / exponent)`, reduced
    /// into `[0, exponent)`.
    fn phase_numerator(&self, k: &[usize], g: &[usize]) -> usize {
        let l = self.exponent as u128;
        let r = k
            .iter()
            .zip(g)
            .zip(&self.moduli)
            .map(|((&k, &g), &n)| (k as u128 * g as u128 % n as u128) * (l / n as u128))
            .sum::<u128>()
            % l;
        r as usize
    }

    fn root_of_unity(&self, r: usize) -> Complex64 {
        let l = self.exponent;
        // Exact values on the axes keep zeros exactly zero.
        if (4 * r).is_multiple_of(l) {
            return match 4 * r / l {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, 1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, -1.0),
            };
        }
        // Symmetric reduction keeps the argument small.
        let signed = if 2 * r > l { r as f64 - l as f64 } else { r as f64 };
        Complex64::from_polar(1.0, 2.0 * PI * signed / l as f64)
    }

    pub fn eval_character(&self, chi: &Character, g: &GroupElement) -> Result<Complex64> {
        self.check(&chi.index)?;
        self.check(&g.residues)?;
        Ok(self.root_of_unity(self.phase_numerator(&chi.index, &g.residues)))
    }

    /// `χ_k(g)` on mixed-radix indices.
    pub fn character_value(&self, k: usize, g: usize) -> Complex64 {
        let k = self.element_at(k).residues;
        let g = self.element_at(g).residues;
        self.root_of_unity(self.phase_numerator(&k, &g))
    }

    /// Dense `|G| × |G|` table `t[k * |G| + g] = χ_k(g)`.
    pub fn character_table(&self) -> Vec<Complex64> {
        let n = self.order;
        let elems: Vec<_> = self.enumerate_elements();
        let mut table = Vec::with_capacity(n * n);
        for k in &elems {
            for g in &elems {
                table.push(self.root_of_unity(self.phase_numerator(&k.residues, &g.residues)));
            }
        }
        table
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.moduli.iter().map(|n| format!("Z{n}")).collect();
        f.write_str(&parts.join("x"))
    }
}

impl FromStr for GroupSpec {
    type Err = Error;

    /// Parses `"Z6"`, `"Z2xZ3"`, `"z2XZ2"`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower.is_empty() {
            return Err(Error::InvalidGroup("empty group string".into()));
        }
        let moduli = lower
            .split('x')
            .map(|part| {
                let digits = part
                    .trim()
                    .strip_prefix('z')
                    .ok_or_else(|| Error::InvalidGroup(format!("factor {part:?} must look like Z<n>")))?;
                digits.parse::<usize>().map_err(|_| Error::InvalidGroup(format!("bad cyclic order in {part:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        GroupSpec::new(moduli)
    }
}

impl GroupElement {
    pub fn residues(&self) -> &[usize] {
        &self.residues
    }
}

impl Character {
    pub fn index(&self) -> &[usize] {
        &self.index
    }

    pub fn is_trivial(&self) -> bool {
        self.index.iter().all(|&k| k == 0)
    }
}
