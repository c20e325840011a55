//! Weighted mixtures of pure states tagged with classical measurement records.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::detection::{ClickPattern, OutcomeLabel};
use crate::error::{Error, Result};
use crate::fock::{BasisVector, PureState};

/// Weights below this are treated as impossible outcomes and dropped.
pub const WEIGHT_EPSILON: f64 = 1e-24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Disposition {
    Keep,
    Discard,
}

impl fmt::Display for Disposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Disposition::Keep => "keep",
            Disposition::Discard => "discard",
        })
    }
}

/// One measurement: where it happened, what clicked, and what was decided.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeEvent {
    pub site: String,
    pub pattern: ClickPattern,
    pub label: OutcomeLabel,
    pub disposition: Disposition,
}

impl fmt::Display for OutcomeEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.site, self.label)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OutcomeRecord {
    pub events: Vec<OutcomeEvent>,
}

impl OutcomeRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: OutcomeEvent) {
        self.events.push(event);
    }

    pub fn concat(&self, other: &OutcomeRecord) -> OutcomeRecord {
        let mut events = self.events.clone();
        events.extend(other.events.iter().cloned());
        OutcomeRecord { events }
    }

    /// Discard if any event was discarded.
    pub fn disposition(&self) -> Disposition {
        if self
            .events
            .iter()
            .any(|e| e.disposition == Disposition::Discard)
        {
            Disposition::Discard
        } else {
            Disposition::Keep
        }
    }

    pub fn is_kept(&self) -> bool {
        self.disposition() == Disposition::Keep
    }

    /// Canonical text label: events joined as `site:label; site:label`.
    pub fn label(&self) -> String {
        if self.events.is_empty() {
            return "-".to_owned();
        }
        self.events
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ")
    }

    pub fn last(&self) -> Option<&OutcomeEvent> {
        self.events.last()
    }

    pub fn find(&self, site: &str) -> Option<&OutcomeEvent> {
        self.events.iter().find(|e| e.site == site)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub weight: f64,
    pub state: PureState,
    pub record: OutcomeRecord,
}

impl Branch {
    pub fn is_kept(&self) -> bool {
        self.record.is_kept()
    }
}

/// A classical mixture of normalized pure states.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Ensemble {
    branches: Vec<Branch>,
}

impl Ensemble {
    /// A single branch holding `state` normalized, with weight equal to its squared norm.
    pub fn from_state(state: PureState) -> Result<Self> {
        let weight = state.norm_sqr();
        let state = state.normalized()?;
        Ok(Ensemble {
            branches: vec![Branch {
                weight,
                state,
                record: OutcomeRecord::new(),
            }],
        })
    }

    /// Wraps branches after checking their weights. Branches may differ in
    /// mode count: a branch discarded early keeps the modes it had then.
    pub fn from_branches(branches: Vec<Branch>) -> Result<Self> {
        for b in &branches {
            if !(0.0..=1.0 + 1e-12).contains(&b.weight) {
                return Err(Error::InvalidState(format!(
                    "branch weight {} outside [0, 1]",
                    b.weight
                )));
            }
        }
        Ok(Ensemble { branches })
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn into_branches(self) -> Vec<Branch> {
        self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn kept(&self) -> impl Iterator<Item = &Branch> {
        self.branches.iter().filter(|b| b.is_kept())
    }

    pub fn total_weight(&self) -> f64 {
        self.branches.iter().map(|b| b.weight).sum()
    }

    pub fn kept_weight(&self) -> f64 {
        self.kept().map(|b| b.weight).sum()
    }

    pub fn discarded_weight(&self) -> f64 {
        self.branches
            .iter()
            .filter(|b| !b.is_kept())
            .map(|b| b.weight)
            .sum()
    }

    /// Total weight per record label, with the label's disposition.
    pub fn outcome_weights(&self) -> BTreeMap<String, (Disposition, f64)> {
        let mut out: BTreeMap<String, (Disposition, f64)> = BTreeMap::new();
        for b in &self.branches {
            let entry = out
                .entry(b.record.label())
                .or_insert((b.record.disposition(), 0.0));
            entry.1 += b.weight;
        }
        out
    }

    /// Product ensemble; modes of `other` follow those of `self`.
    pub fn tensor(&self, other: &Ensemble) -> Result<Ensemble> {
        let mut branches = Vec::with_capacity(self.len() * other.len());
        for a in &self.branches {
            for b in &other.branches {
                branches.push(Branch {
                    weight: a.weight * b.weight,
                    state: a.state.tensor(&b.state)?,
                    record: a.record.concat(&b.record),
                });
            }
        }
        Ok(Ensemble { branches })
    }

    /// Replaces every kept branch by the ensemble `f` produces from it.
    /// Weights multiply and records concatenate; discarded branches pass through.
    pub fn flat_map_kept<F>(&self, mut f: F) -> Result<Ensemble>
    where
        F: FnMut(&Branch) -> Result<Ensemble>,
    {
        let mut branches = Vec::new();
        for b in &self.branches {
            if !b.is_kept() {
                branches.push(b.clone());
                continue;
            }
            for child in f(b)?.branches {
                branches.push(Branch {
                    weight: b.weight * child.weight,
                    state: child.state,
                    record: b.record.concat(&child.record),
                });
            }
        }
        Ok(Ensemble { branches })
    }

    /// Applies `f` to the state of every kept branch.
    pub fn map_kept_states<F>(&self, mut f: F) -> Result<Ensemble>
    where
        F: FnMut(&PureState) -> Result<PureState>,
    {
        let mut branches = Vec::with_capacity(self.len());
        for b in &self.branches {
            let state = if b.is_kept() {
                f(&b.state)?
            } else {
                b.state.clone()
            };
            branches.push(Branch { state, ..b.clone() });
        }
        Ok(Ensemble { branches })
    }

    /// Partial trace over one mode: one branch per occupancy of the traced mode.
    pub fn trace_out(&self, mode: usize) -> Result<Ensemble> {
        let mut branches = Vec::new();
        for b in &self.branches {
            b.state.check_mode(mode)?;
            let mut groups: BTreeMap<_, Vec<(BasisVector, Complex64)>> = BTreeMap::new();
            for (v, a) in b.state.terms() {
                let mut rest = v.as_slice().to_vec();
                let occ = rest.remove(mode);
                groups
                    .entry(occ)
                    .or_default()
                    .push((BasisVector::new(rest), *a));
            }
            for terms in groups.into_values() {
                let part = PureState::from_terms_with_cap(
                    b.state.modes() - 1,
                    b.state.photon_cap(),
                    terms,
                )?;
                let p = part.norm_sqr();
                if p * b.weight <= WEIGHT_EPSILON {
                    continue;
                }
                branches.push(Branch {
                    weight: b.weight * p,
                    state: part.normalized()?,
                    record: b.record.clone(),
                });
            }
        }
        Ok(Ensemble { branches })
    }

    /// Branches sorted by record label, then by state; the order used in reports.
    pub fn canonicalized(&self) -> Ensemble {
        let mut branches = self.branches.clone();
        branches.sort_by(|a, b| {
            a.record
                .label()
                .cmp(&b.record.label())
                .then_with(|| compare_states(&a.state, &b.state))
        });
        Ensemble { branches }
    }
}

/// A deterministic total order on states: basis vectors first, then amplitude bits.
pub fn compare_states(a: &PureState, b: &PureState) -> Ordering {
    let ka = a.terms().map(|(k, _)| k);
    let kb = b.terms().map(|(k, _)| k);
    ka.cmp(kb).then_with(|| {
        let bits = |s: &PureState| -> Vec<(u64, u64)> {
            s.terms()
                .map(|(_, z)| (z.re.to_bits(), z.im.to_bits()))
                .collect()
        };
        bits(a).cmp(&bits(b))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::equal_up_to_global_phase;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn event(site: &str, disposition: Disposition) -> OutcomeEvent {
        OutcomeEvent {
            site: site.into(),
            pattern: ClickPattern::new(vec![true, false]),
            label: OutcomeLabel::HorizontalPort,
            disposition,
        }
    }

    #[test]
    fn trace_last_mode_of_product() {
        let e = Ensemble::from_state(PureState::ket("H0").unwrap()).unwrap();
        let t = e.trace_out(1).unwrap();
        assert_eq!(t.len(), 1);
        assert!((t.branches()[0].weight - 1.0).abs() < 1e-15);
        assert_eq!(t.branches()[0].state, PureState::ket("H").unwrap());
    }

    #[test]
    fn trace_bell_pair_gives_maximal_mixture() {
        let r = FRAC_1_SQRT_2;
        let phi = PureState::superposition(&[(c(r), "HH"), (c(r), "VV")]).unwrap();
        let t = Ensemble::from_state(phi).unwrap().trace_out(1).unwrap();
        assert_eq!(t.len(), 2);
        for b in t.branches() {
            assert!((b.weight - 0.5).abs() < 1e-15);
        }
        assert!(t
            .branches()
            .iter()
            .any(|b| b.state == PureState::ket("H").unwrap()));
        assert!(t
            .branches()
            .iter()
            .any(|b| b.state == PureState::ket("V").unwrap()));
    }

    #[test]
    fn trace_vacuum_mode_of_v0h() {
        let e = Ensemble::from_branches(vec![Branch {
            weight: 1.0 / 3.0,
            state: PureState::ket("V0H").unwrap(),
            record: OutcomeRecord::new(),
        }])
        .unwrap();
        let t = e.trace_out(1).unwrap();
        assert_eq!(t.len(), 1);
        assert!((t.branches()[0].weight - 1.0 / 3.0).abs() < 1e-15);
        assert!(equal_up_to_global_phase(
            &t.branches()[0].state,
            &PureState::ket("VH").unwrap(),
            1e-12
        ));
    }

    #[test]
    fn dispositions_and_labels() {
        let mut r = OutcomeRecord::new();
        assert_eq!(r.label(), "-");
        r.push(event("a", Disposition::Keep));
        assert!(r.is_kept());
        r.push(event("b", Disposition::Discard));
        assert_eq!(r.disposition(), Disposition::Discard);
        assert_eq!(r.label(), "a:|H^n 0⟩; b:|H^n 0⟩");
    }

    #[test]
    fn flat_map_multiplies_weights_and_passes_discards() {
        let mut discarded = OutcomeRecord::new();
        discarded.push(event("x", Disposition::Discard));
        let e = Ensemble::from_branches(vec![
            Branch {
                weight: 0.25,
                state: PureState::ket("H").unwrap(),
                record: discarded,
            },
            Branch {
                weight: 0.75,
                state: PureState::ket("V").unwrap(),
                record: OutcomeRecord::new(),
            },
        ])
        .unwrap();
        let r = FRAC_1_SQRT_2;
        let plus = PureState::superposition(&[(c(r), "HH"), (c(r), "VV")]).unwrap();
        let out = e
            .flat_map_kept(|_| Ensemble::from_state(plus.clone())?.trace_out(0))
            .unwrap();
        assert_eq!(out.len(), 3);
        assert!((out.total_weight() - 1.0).abs() < 1e-15);
        assert!((out.discarded_weight() - 0.25).abs() < 1e-15);
        assert!((out.kept_weight() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn tensor_multiplies_weights() {
        let r = FRAC_1_SQRT_2;
        let phi = PureState::superposition(&[(c(r), "HH"), (c(r), "VV")]).unwrap();
        let mixed = Ensemble::from_state(phi).unwrap().trace_out(1).unwrap();
        let prod = mixed.tensor(&mixed).unwrap();
        assert_eq!(prod.len(), 4);
        assert!((prod.total_weight() - 1.0).abs() < 1e-15);
        assert!(prod.branches().iter().all(|b| b.state.modes() == 2));
    }

    #[test]
    fn outcome_weights_aggregate_by_label() {
        let mk = |w: f64, site: &str| Branch {
            weight: w,
            state: PureState::ket("H").unwrap(),
            record: OutcomeRecord {
                events: vec![event(site, Disposition::Keep)],
            },
        };
        let e = Ensemble::from_branches(vec![mk(0.25, "a"), mk(0.25, "a"), mk(0.5, "b")]).unwrap();
        let w = e.outcome_weights();
        assert_eq!(w.len(), 2);
        assert!((w["a:|H^n 0⟩"].1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_weights() {
        let b = Branch {
            weight: 1.5,
            state: PureState::ket("H").unwrap(),
            record: OutcomeRecord::new(),
        };
        assert!(matches!(
            Ensemble::from_branches(vec![b]),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn record_json_shape() {
        let r = OutcomeRecord {
            events: vec![event("b2g.pid", Disposition::Keep)],
        };
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"[{"site":"b2g.pid","pattern":[true,false],"label":"|H^n 0⟩","disposition":"keep"}]"#
        );
    }
}
