//! Sparse multi-mode bosonic states with two polarization rails per spatial mode.
//!
//! A [`PureState`] maps [`BasisVector`]s (one [`Occupancy`] per spatial mode) to
//! complex amplitudes. Basis vectors compare lexicographically, so iteration and
//! serialization order is canonical. Multi-photon rails follow the usual bosonic
//! normalization, `|n⟩ = (a†)ⁿ/√(n!) |0⟩`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default bound on the photon number of any basis vector.
pub const DEFAULT_PHOTON_CAP: u32 = 8;

/// Amplitudes with magnitude below this are dropped after every operation.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// Polarization rail of a spatial mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rail {
    H,
    V,
}

impl Rail {
    pub const BOTH: [Rail; 2] = [Rail::H, Rail::V];
}

/// Photon counts on the horizontal and vertical rails of one spatial mode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Occupancy {
    pub h: u8,
    pub v: u8,
}

impl Occupancy {
    pub const EMPTY: Occupancy = Occupancy { h: 0, v: 0 };
    pub const H: Occupancy = Occupancy { h: 1, v: 0 };
    pub const V: Occupancy = Occupancy { h: 0, v: 1 };

    pub const fn new(h: u8, v: u8) -> Self {
        Occupancy { h, v }
    }

    pub fn total(self) -> u32 {
        u32::from(self.h) + u32::from(self.v)
    }

    pub fn get(self, rail: Rail) -> u8 {
        match rail {
            Rail::H => self.h,
            Rail::V => self.v,
        }
    }

    pub fn is_empty(self) -> bool {
        self.h == 0 && self.v == 0
    }

    pub(crate) fn set(&mut self, rail: Rail, n: u8) {
        match rail {
            Rail::H => self.h = n,
            Rail::V => self.v = n,
        }
    }
}

impl fmt::Display for Occupancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("0");
        }
        for (n, tag) in [(self.h, "H"), (self.v, "V")] {
            match n {
                0 => {}
                1 => f.write_str(tag)?,
                n => write!(f, "{tag}{n}")?,
            }
        }
        Ok(())
    }
}

impl FromStr for Occupancy {
    type Err = Error;

    /// Parses tokens such as `0`, `H`, `V2`, `HV`, `H2V`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidState(format!("bad occupancy token `{s}`"));
        if s == "0" {
            return Ok(Occupancy::EMPTY);
        }
        let mut occ = Occupancy::EMPTY;
        let mut chars = s.chars().peekable();
        let mut seen_any = false;
        while let Some(c) = chars.next() {
            let rail = match c {
                'H' => Rail::H,
                'V' => Rail::V,
                _ => return Err(bad()),
            };
            let mut digits = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(*d);
                chars.next();
            }
            let n: u8 = if digits.is_empty() {
                1
            } else {
                digits.parse().map_err(|_| bad())?
            };
            if occ.get(rail) != 0 || n == 0 {
                return Err(bad());
            }
            occ.set(rail, n);
            seen_any = true;
        }
        if seen_any {
            Ok(occ)
        } else {
            Err(bad())
        }
    }
}

/// Photon occupancies of every spatial mode; the computational basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisVector(Vec<Occupancy>);

impl BasisVector {
    pub fn new(modes: Vec<Occupancy>) -> Self {
        BasisVector(modes)
    }

    pub fn vacuum(modes: usize) -> Self {
        BasisVector(vec![Occupancy::EMPTY; modes])
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn occupancy(&self, mode: usize) -> Occupancy {
        self.0[mode]
    }

    pub fn as_slice(&self) -> &[Occupancy] {
        &self.0
    }

    pub fn photon_number(&self) -> u32 {
        self.0.iter().map(|o| o.total()).sum()
    }

    pub(crate) fn occupancies_mut(&mut self) -> &mut Vec<Occupancy> {
        &mut self.0
    }
}

impl fmt::Display for BasisVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tokens: Vec<String> = self.0.iter().map(|o| o.to_string()).collect();
        let sep = if tokens.iter().all(|t| t.len() == 1) {
            ""
        } else {
            ","
        };
        write!(f, "|{}⟩", tokens.join(sep))
    }
}

impl FromStr for BasisVector {
    type Err = Error;

    /// `"HV0H"` is read one letter per mode, with a single nonzero digit attached
    /// to the preceding letter (`"V2H0"` is three modes); a mode holding both
    /// polarizations needs whitespace or commas, as in `"H2 0 HV"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s
            .trim()
            .trim_start_matches('|')
            .trim_end_matches('⟩')
            .trim_end_matches('>');
        let tokens: Vec<String> = if s.contains(|c: char| c.is_whitespace() || c == ',') {
            s.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(str::to_owned)
                .collect()
        } else {
            let mut tokens: Vec<String> = Vec::new();
            for c in s.chars() {
                match tokens.last_mut() {
                    Some(t) if ('1'..='9').contains(&c) && t.ends_with(['H', 'V']) => t.push(c),
                    _ => tokens.push(c.to_string()),
                }
            }
            tokens
        };
        tokens
            .iter()
            .map(|t| t.parse())
            .collect::<Result<Vec<_>>>()
            .map(BasisVector)
    }
}

/// A (possibly sub-normalized) superposition of Fock basis vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    modes: usize,
    cap: u32,
    terms: BTreeMap<BasisVector, Complex64>,
}

impl PureState {
    /// The all-vacuum state on `modes` spatial modes.
    pub fn vacuum(modes: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(BasisVector::vacuum(modes), Complex64::new(1.0, 0.0));
        PureState {
            modes,
            cap: DEFAULT_PHOTON_CAP,
            terms,
        }
    }

    /// A single basis vector with unit amplitude.
    pub fn basis(vector: BasisVector) -> Result<Self> {
        let modes = vector.modes();
        Self::from_terms(modes, [(vector, Complex64::new(1.0, 0.0))])
    }

    /// Parses a single ket, e.g. `PureState::ket("V0H")`.
    pub fn ket(s: &str) -> Result<Self> {
        Self::basis(s.parse()?)
    }

    /// Builds a state from terms, summing repeated basis vectors and pruning dust.
    pub fn from_terms<I>(modes: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (BasisVector, Complex64)>,
    {
        Self::from_terms_with_cap(modes, DEFAULT_PHOTON_CAP, terms)
    }

    pub fn from_terms_with_cap<I>(modes: usize, cap: u32, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (BasisVector, Complex64)>,
    {
        let mut map: BTreeMap<BasisVector, Complex64> = BTreeMap::new();
        for (vector, amp) in terms {
            if vector.modes() != modes {
                return Err(Error::DimensionMismatch {
                    left: modes,
                    right: vector.modes(),
                });
            }
            let count = vector.photon_number();
            if count > cap {
                return Err(Error::Capacity { count, cap });
            }
            *map.entry(vector).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        Ok(Self::from_map(modes, cap, map))
    }

    /// Sums `(amplitude, ket)` pairs; a convenience for literal states in tests
    /// and named-state constructors.
    pub fn superposition(pairs: &[(Complex64, &str)]) -> Result<Self> {
        let vectors = pairs
            .iter()
            .map(|(a, k)| k.parse::<BasisVector>().map(|v| (v, *a)))
            .collect::<Result<Vec<_>>>()?;
        let modes = vectors
            .first()
            .map(|(v, _)| v.modes())
            .ok_or_else(|| Error::InvalidState("empty superposition".into()))?;
        Self::from_terms(modes, vectors)
    }

    pub(crate) fn from_map(
        modes: usize,
        cap: u32,
        mut terms: BTreeMap<BasisVector, Complex64>,
    ) -> Self {
        terms.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
        PureState { modes, cap, terms }
    }

    /// Returns the same state with a different photon cap.
    pub fn with_photon_cap(mut self, cap: u32) -> Result<Self> {
        if let Some(count) = self.max_photon_number().filter(|&n| n > cap) {
            return Err(Error::Capacity { count, cap });
        }
        self.cap = cap;
        Ok(self)
    }

    pub fn photon_cap(&self) -> u32 {
        self.cap
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical basis order.
    pub fn terms(&self) -> impl Iterator<Item = (&BasisVector, &Complex64)> {
        self.terms.iter()
    }

    pub fn amplitude(&self, vector: &BasisVector) -> Complex64 {
        self.terms.get(vector).copied().unwrap_or_default()
    }

    pub fn max_photon_number(&self) -> Option<u32> {
        self.terms.keys().map(BasisVector::photon_number).max()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n < PRUNE_THRESHOLD {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(k, a)| (k.clone(), a * factor))
            .collect();
        Self::from_map(self.modes, self.cap, terms)
    }

    /// Multiplies each amplitude by `phase(basis vector)`.
    pub fn map_amplitudes<F>(&self, mut phase: F) -> Self
    where
        F: FnMut(&BasisVector) -> Complex64,
    {
        let terms = self
            .terms
            .iter()
            .map(|(k, a)| (k.clone(), a * phase(k)))
            .collect();
        Self::from_map(self.modes, self.cap, terms)
    }

    /// Applies `a†` on one rail, with the bosonic factor `√(n+1)`.
    pub fn creation_apply(&self, mode: usize, rail: Rail) -> Result<Self> {
        self.check_mode(mode)?;
        let mut out = BTreeMap::new();
        for (vector, amp) in &self.terms {
            let count = vector.photon_number() + 1;
            if count > self.cap {
                return Err(Error::Capacity {
                    count,
                    cap: self.cap,
                });
            }
            let mut raised = vector.clone();
            let occ = &mut raised.occupancies_mut()[mode];
            let n = occ.get(rail) + 1;
            occ.set(rail, n);
            out.insert(raised, amp * f64::from(n).sqrt());
        }
        Ok(Self::from_map(self.modes, self.cap, out))
    }

    /// Tensor product; modes of `right` follow those of `self`.
    pub fn tensor(&self, right: &PureState) -> Result<Self> {
        let cap = self.cap.max(right.cap);
        let mut out = BTreeMap::new();
        for (lv, la) in &self.terms {
            for (rv, ra) in &right.terms {
                let count = lv.photon_number() + rv.photon_number();
                if count > cap {
                    return Err(Error::Capacity { count, cap });
                }
                let mut modes = lv.as_slice().to_vec();
                modes.extend_from_slice(rv.as_slice());
                out.insert(BasisVector(modes), la * ra);
            }
        }
        Ok(Self::from_map(self.modes + right.modes, cap, out))
    }

    /// Output mode `i` carries what was in input mode `permutation[i]`.
    pub fn reorder_modes(&self, permutation: &[usize]) -> Result<Self> {
        validate_permutation(permutation, self.modes)?;
        let terms = self
            .terms
            .iter()
            .map(|(k, a)| {
                let modes = permutation.iter().map(|&p| k.occupancy(p)).collect();
                (BasisVector(modes), *a)
            })
            .collect();
        Ok(Self::from_map(self.modes, self.cap, terms))
    }

    /// `⟨self|other⟩`.
    pub fn inner_product(&self, other: &PureState) -> Result<Complex64> {
        if self.modes != other.modes {
            return Err(Error::DimensionMismatch {
                left: self.modes,
                right: other.modes,
            });
        }
        let (small, large, conj_small) = if self.terms.len() <= other.terms.len() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, a) in &small.terms {
            if let Some(b) = large.terms.get(k) {
                acc += if conj_small {
                    a.conj() * b
                } else {
                    b.conj() * a
                };
            }
        }
        Ok(acc)
    }

    /// Appends one empty spatial mode at the end.
    pub fn append_vacuum_mode(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(k, a)| {
                let mut modes = k.as_slice().to_vec();
                modes.push(Occupancy::EMPTY);
                (BasisVector(modes), *a)
            })
            .collect();
        Self::from_map(self.modes + 1, self.cap, terms)
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.modes {
            Ok(())
        } else {
            Err(Error::BadMode {
                mode,
                modes: self.modes,
            })
        }
    }

    pub(crate) fn raw_terms(&self) -> &BTreeMap<BasisVector, Complex64> {
        &self.terms
    }
}

impl fmt::Display for PureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (k, a)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({:.6}{:+.6}i){}", a.re, a.im, k)?;
        }
        Ok(())
    }
}

/// True iff `|⟨a|b⟩| ≥ 1 − tol`; both states are expected to be normalized.
pub fn equal_up_to_global_phase(a: &PureState, b: &PureState, tol: f64) -> bool {
    match a.inner_product(b) {
        Ok(overlap) => overlap.norm() >= 1.0 - tol,
        Err(_) => false,
    }
}

pub(crate) fn validate_permutation(permutation: &[usize], modes: usize) -> Result<()> {
    if permutation.len() != modes {
        return Err(Error::Permutation(format!(
            "length {} for {} modes",
            permutation.len(),
            modes
        )));
    }
    let mut seen = vec![false; modes];
    for &p in permutation {
        if p >= modes || std::mem::replace(&mut seen[p], true) {
            return Err(Error::Permutation(format!(
                "{permutation:?} is not a bijection"
            )));
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    occ: Vec<[u8; 2]>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct StateRepr {
    modes: usize,
    terms: Vec<TermRepr>,
}

impl Serialize for PureState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = StateRepr {
            modes: self.modes,
            terms: self
                .terms
                .iter()
                .map(|(k, a)| TermRepr {
                    occ: k.as_slice().iter().map(|o| [o.h, o.v]).collect(),
                    re: a.re,
                    im: a.im,
                })
                .collect(),
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PureState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = StateRepr::deserialize(deserializer)?;
        let terms = repr.terms.into_iter().map(|t| {
            let occ = t.occ.iter().map(|&[h, v]| Occupancy::new(h, v)).collect();
            (BasisVector(occ), Complex64::new(t.re, t.im))
        });
        PureState::from_terms(repr.modes, terms).map_err(serde::de::Error::custom)
    }
}
