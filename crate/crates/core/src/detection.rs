//! Non-number-resolving detection, the polarization-independent detector
//! (PID), measurement branching and classical feed-forward.
//!
//! A detector reports only whether its rail holds zero photons or some
//! photons. After a rail split the H component of a mode sits in the mode
//! itself (the H port) and the V component in a fresh mode (the V port), so
//! every measured mode is a single detector rail.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elements::{apply_element, apply_pbs, apply_pr, ElementDescriptor};
use crate::ensemble::{Branch, Disposition, Ensemble, OutcomeEvent, OutcomeRecord, WEIGHT_EPSILON};
use crate::error::{Error, Result};
use crate::fock::{BasisVector, Occupancy, PureState};

/// Click record of one measurement site, one entry per detector rail.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClickPattern(Vec<bool>);

impl ClickPattern {
    pub fn new(clicks: Vec<bool>) -> Self {
        ClickPattern(clicks)
    }

    pub fn from_occupancies(occ: &[Occupancy]) -> Self {
        ClickPattern(occ.iter().map(|o| !o.is_empty()).collect())
    }

    pub fn clicks(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&c| c).count()
    }
}

impl fmt::Display for ClickPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &c in &self.0 {
            f.write_str(if c { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Shape of a measurement site.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SiteKind {
    /// One PID: rails `[H port, V port]`.
    Pid,
    /// Two PIDs after a two-mode interferometer: rails `[c_H, d_H, c_V, d_V]`.
    FourRail,
}

impl SiteKind {
    pub fn arity(self) -> usize {
        match self {
            SiteKind::Pid => 2,
            SiteKind::FourRail => 4,
        }
    }
}

/// Two-photon four-rail kets, numbered 1 to 10. Positions are
/// `(c_H, d_H, c_V, d_V)`.
pub const SHORTHAND_KETS: [&str; 10] = [
    "0H0V", "H0V0", "H00V", "0HV0", "HH00", "00VV", "H2000", "0H200", "00V20", "000V2",
];

/// Basis vector of shorthand ket `n` (1-based).
pub fn shorthand_ket(n: u8) -> Result<BasisVector> {
    match n {
        1..=10 => SHORTHAND_KETS[usize::from(n - 1)].parse(),
        _ => Err(Error::InvalidState(format!(
            "shorthand label {n} outside 1..=10"
        ))),
    }
}

/// Interpreted outcome of a measurement site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OutcomeLabel {
    /// PID: neither port fired.
    NoClick,
    /// PID: only the H port fired.
    HorizontalPort,
    /// PID: only the V port fired.
    VerticalPort,
    /// PID: both ports fired.
    BothPorts,
    /// Four-rail site: exactly one detector fired.
    SingleClick,
    /// Four-rail site: nothing fired.
    AllSilent,
    /// Four-rail site: two detectors fired, shorthand label 1 to 6.
    Shorthand(u8),
}

impl fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutcomeLabel::NoClick => f.write_str("|00⟩"),
            OutcomeLabel::HorizontalPort => f.write_str("|H^n 0⟩"),
            OutcomeLabel::VerticalPort => f.write_str("|0 V^n⟩"),
            OutcomeLabel::BothPorts => f.write_str("|H^n V^n⟩"),
            OutcomeLabel::SingleClick => f.write_str("single-click"),
            OutcomeLabel::AllSilent => f.write_str("|0000⟩"),
            OutcomeLabel::Shorthand(n) => write!(f, "|{n}⟩"),
        }
    }
}

impl FromStr for OutcomeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "|00⟩" => OutcomeLabel::NoClick,
            "|H^n 0⟩" => OutcomeLabel::HorizontalPort,
            "|0 V^n⟩" => OutcomeLabel::VerticalPort,
            "|H^n V^n⟩" => OutcomeLabel::BothPorts,
            "single-click" => OutcomeLabel::SingleClick,
            "|0000⟩" => OutcomeLabel::AllSilent,
            _ => {
                let n = s
                    .strip_prefix('|')
                    .and_then(|r| r.strip_suffix('⟩'))
                    .and_then(|n| n.parse::<u8>().ok())
                    .filter(|n| (1..=10).contains(n))
                    .ok_or_else(|| Error::InvalidState(format!("unknown outcome label `{s}`")))?;
                OutcomeLabel::Shorthand(n)
            }
        })
    }
}

impl Serialize for OutcomeLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OutcomeLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Maps a click pattern to its outcome label.
pub fn interpret_pattern(
    pattern: &ClickPattern,
    site: &str,
    kind: SiteKind,
) -> Result<OutcomeLabel> {
    let inconsistent = |reason: String| Error::Consistency {
        site: site.to_owned(),
        pattern: pattern.to_string(),
        reason,
    };
    if pattern.len() != kind.arity() {
        return Err(inconsistent(format!("expected {} rails", kind.arity())));
    }
    let c = pattern.clicks();
    match kind {
        SiteKind::Pid => Ok(match (c[0], c[1]) {
            (false, false) => OutcomeLabel::NoClick,
            (true, false) => OutcomeLabel::HorizontalPort,
            (false, true) => OutcomeLabel::VerticalPort,
            (true, true) => OutcomeLabel::BothPorts,
        }),
        SiteKind::FourRail => match pattern.count() {
            0 => Ok(OutcomeLabel::AllSilent),
            1 => Ok(OutcomeLabel::SingleClick),
            2 => {
                let n = match c {
                    [false, true, false, true] => 1,
                    [true, false, true, false] => 2,
                    [true, false, false, true] => 3,
                    [false, true, true, false] => 4,
                    [true, true, false, false] => 5,
                    _ => 6,
                };
                Ok(OutcomeLabel::Shorthand(n))
            }
            n => Err(inconsistent(format!("{n} clicks at a two-photon site"))),
        },
    }
}

fn check_distinct(state: &PureState, modes: &[usize]) -> Result<()> {
    for (i, &m) in modes.iter().enumerate() {
        state.check_mode(m)?;
        if modes[..i].contains(&m) {
            return Err(Error::DuplicateMode(m));
        }
    }
    Ok(())
}

/// Measures `modes` with non-resolving detectors.
///
/// Each distinct photon occupancy of the measured rails becomes its own
/// branch (a proper mixture), labelled by its click pattern. Measured modes
/// are removed; the remaining modes keep their relative order. Events are
/// recorded with disposition `keep` until feed-forward decides otherwise.
pub fn measure_nr(
    state: &PureState,
    modes: &[usize],
    site: &str,
    kind: SiteKind,
) -> Result<Ensemble> {
    check_distinct(state, modes)?;
    if modes.len() != kind.arity() {
        return Err(Error::Arity {
            kind: "measurement site",
            expected: kind.arity(),
            got: modes.len(),
        });
    }
    let mut groups: BTreeMap<Vec<Occupancy>, Vec<(BasisVector, Complex64)>> = BTreeMap::new();
    for (v, a) in state.terms() {
        let occ: Vec<Occupancy> = modes.iter().map(|&m| v.occupancy(m)).collect();
        let rest: Vec<Occupancy> = (0..state.modes())
            .filter(|m| !modes.contains(m))
            .map(|m| v.occupancy(m))
            .collect();
        groups
            .entry(occ)
            .or_default()
            .push((BasisVector::new(rest), *a));
    }
    let remaining = state.modes() - modes.len();
    let mut branches = Vec::with_capacity(groups.len());
    for (occ, terms) in groups {
        let part = PureState::from_terms_with_cap(remaining, state.photon_cap(), terms)?;
        let weight = part.norm_sqr();
        if weight <= WEIGHT_EPSILON {
            continue;
        }
        let pattern = ClickPattern::from_occupancies(&occ);
        let label = interpret_pattern(&pattern, site, kind)?;
        branches.push(Branch {
            weight,
            state: part.normalized()?,
            record: OutcomeRecord {
                events: vec![OutcomeEvent {
                    site: site.to_owned(),
                    pattern,
                    label,
                    disposition: Disposition::Keep,
                }],
            },
        });
    }
    Ensemble::from_branches(branches)
}

/// What to do after a given outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct Action {
    pub disposition: Disposition,
    pub elements: Vec<ElementDescriptor>,
}

impl Action {
    pub fn keep(elements: Vec<ElementDescriptor>) -> Self {
        Action {
            disposition: Disposition::Keep,
            elements,
        }
    }

    pub fn discard() -> Self {
        Action {
            disposition: Disposition::Discard,
            elements: Vec::new(),
        }
    }
}

/// Outcome-keyed feed-forward table. Looking up a key without a rule is an error.
#[derive(Clone, Debug, PartialEq)]
pub struct FeedForwardRules<K: Ord> {
    site: String,
    rules: BTreeMap<K, Action>,
}

impl<K: Ord + Clone + fmt::Display> FeedForwardRules<K> {
    pub fn new(site: impl Into<String>) -> Self {
        FeedForwardRules {
            site: site.into(),
            rules: BTreeMap::new(),
        }
    }

    /// Adds `action` for each of `keys`, replacing earlier rules.
    pub fn with(mut self, keys: &[K], action: Action) -> Self {
        for k in keys {
            self.rules.insert(k.clone(), action.clone());
        }
        self
    }

    pub fn site(&self) -> &str {
        &self.site
    }

    pub fn action(&self, key: &K) -> Result<&Action> {
        self.rules.get(key).ok_or_else(|| Error::UnmatchedPattern {
            site: self.site.clone(),
            label: key.to_string(),
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &Action)> {
        self.rules.iter()
    }
}

/// Applies `rules` to the most recent event of every kept branch.
pub fn feed_forward(
    measured: &Ensemble,
    rules: &FeedForwardRules<OutcomeLabel>,
) -> Result<Ensemble> {
    let mut branches = Vec::with_capacity(measured.len());
    for b in measured.branches() {
        if !b.is_kept() {
            branches.push(b.clone());
            continue;
        }
        let label = b
            .record
            .last()
            .map(|e| e.label)
            .ok_or_else(|| Error::InvalidState("branch has no measurement to act on".into()))?;
        let action = rules.action(&label)?;
        branches.push(apply_action(b, action)?);
    }
    Ensemble::from_branches(branches)
}

/// Sets the latest event's disposition and, if kept, applies the corrections.
pub fn apply_action(branch: &Branch, action: &Action) -> Result<Branch> {
    let mut record = branch.record.clone();
    if let Some(last) = record.events.last_mut() {
        last.disposition = action.disposition;
    }
    let state = match action.disposition {
        Disposition::Keep => action
            .elements
            .iter()
            .try_fold(branch.state.clone(), |s, e| apply_element(&s, e))?,
        Disposition::Discard => branch.state.clone(),
    };
    Ok(Branch {
        weight: branch.weight,
        state,
        record,
    })
}

/// Splits `mode` into an H port (the mode itself) and a V port (a fresh mode
/// appended at the end) with PR(π/4) followed by a PBS. Returns the new state
/// and the index of the V port.
pub fn rail_split(state: &PureState, mode: usize) -> Result<(PureState, usize)> {
    state.check_mode(mode)?;
    let fresh = state.modes();
    let s = apply_pr(&state.append_vacuum_mode(), mode, FRAC_PI_4)?;
    Ok((apply_pbs(&s, mode, fresh)?, fresh))
}

/// Polarization-independent detection of `mode` followed by `rules`.
///
/// Rule elements address the modes left after the measured mode is removed.
pub fn pid(
    state: &PureState,
    mode: usize,
    rules: &FeedForwardRules<OutcomeLabel>,
) -> Result<Ensemble> {
    let (split, fresh) = rail_split(state, mode)?;
    let measured = measure_nr(&split, &[mode, fresh], rules.site(), SiteKind::Pid)?;
    feed_forward(&measured, rules)
}
