//! Brute-force branch enumeration on a rail-level state vector.
//!
//! This engine shares no arithmetic with [`crate::elements`]: every element
//! is turned into a dense single-photon matrix over the rails it touches, and
//! multi-photon amplitudes are permanents of its submatrices,
//! `⟨m|U|n⟩ = perm(U[m, n]) / √(Π n_i! Π m_j!)`. Gadget layouts are written out
//! here a second time as step programs; only the feed-forward tables and
//! element descriptors are borrowed from the gadgets module.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::detection::{FeedForwardRules, OutcomeLabel};
use crate::elements::{ElementDescriptor, ElementKind};
use crate::ensemble::{compare_states, Disposition};
use crate::error::{Error, Result};
use crate::fock::{BasisVector, Occupancy, PureState, DEFAULT_PHOTON_CAP};
use crate::gadgets::{self, LabelPair};

const PRUNE: f64 = 1e-14;
const MIN_WEIGHT: f64 = 1e-24;

type Matrix = Vec<Vec<Complex64>>;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Permanent by Ryser's inclusion-exclusion formula.
pub fn permanent(a: &Matrix) -> Complex64 {
    let n = a.len();
    if n == 0 {
        return re(1.0);
    }
    let mut total = Complex64::new(0.0, 0.0);
    for subset in 1u32..(1 << n) {
        let mut prod = re(1.0);
        for row in a {
            let s: Complex64 = (0..n)
                .filter(|j| subset & (1 << j) != 0)
                .map(|j| row[j])
                .sum();
            prod *= s;
        }
        let sign = if (n as u32 - subset.count_ones()).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        total += prod * sign;
    }
    total
}

fn factorial(n: u8) -> f64 {
    (1..=u32::from(n)).map(f64::from).product()
}

/// All occupation vectors of `k` rails holding `n` photons in total.
fn compositions(k: usize, n: u8) -> Vec<Vec<u8>> {
    if k == 0 {
        return if n == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in compositions(k - 1, n - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn expand(counts: &[u8]) -> Vec<usize> {
    counts
        .iter()
        .enumerate()
        .flat_map(|(i, &c)| std::iter::repeat_n(i, usize::from(c)))
        .collect()
}

/// State over `2 × modes` rails; rail `2m` is H and `2m + 1` is V of mode `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct RailState {
    modes: usize,
    terms: BTreeMap<Vec<u8>, Complex64>,
}

impl RailState {
    pub fn from_pure(state: &PureState) -> Self {
        let terms = state
            .terms()
            .map(|(v, a)| {
                let rails = v.as_slice().iter().flat_map(|o| [o.h, o.v]).collect();
                (rails, *a)
            })
            .collect();
        RailState {
            modes: state.modes(),
            terms,
        }
    }

    pub fn to_pure(&self) -> Result<PureState> {
        let max = self
            .terms
            .keys()
            .map(|r| r.iter().map(|&n| u32::from(n)).sum::<u32>())
            .max()
            .unwrap_or(0);
        let terms = self.terms.iter().map(|(r, a)| {
            let occ = r.chunks(2).map(|p| Occupancy::new(p[0], p[1])).collect();
            (BasisVector::new(occ), *a)
        });
        PureState::from_terms_with_cap(self.modes, max.max(DEFAULT_PHOTON_CAP), terms)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    fn scaled(&self, f: f64) -> Self {
        RailState {
            modes: self.modes,
            terms: self.terms.iter().map(|(k, a)| (k.clone(), a * f)).collect(),
        }
    }

    /// Applies the single-photon matrix `u` (`u[out][in]`) to the listed rails.
    pub fn apply(&self, rails: &[usize], u: &Matrix) -> Self {
        let mut out: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
        for (key, amp) in &self.terms {
            let n_in: Vec<u8> = rails.iter().map(|&r| key[r]).collect();
            let total: u8 = n_in.iter().sum();
            let cols = expand(&n_in);
            let in_norm: f64 = n_in.iter().map(|&n| factorial(n)).product();
            for n_out in compositions(rails.len(), total) {
                let rows = expand(&n_out);
                let sub: Matrix = rows
                    .iter()
                    .map(|&i| cols.iter().map(|&j| u[i][j]).collect())
                    .collect();
                let out_norm: f64 = n_out.iter().map(|&n| factorial(n)).product();
                let a = permanent(&sub) / (in_norm * out_norm).sqrt();
                if a.norm() < PRUNE {
                    continue;
                }
                let mut k = key.clone();
                for (&r, &n) in rails.iter().zip(&n_out) {
                    k[r] = n;
                }
                *out.entry(k).or_default() += amp * a;
            }
        }
        out.retain(|_, a| a.norm() >= PRUNE);
        RailState {
            modes: self.modes,
            terms: out,
        }
    }

    pub fn append_mode(&self) -> Self {
        RailState {
            modes: self.modes + 1,
            terms: self
                .terms
                .iter()
                .map(|(k, a)| {
                    let mut k = k.clone();
                    k.extend([0, 0]);
                    (k, *a)
                })
                .collect(),
        }
    }

    /// Output mode `i` takes input mode `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        RailState {
            modes: self.modes,
            terms: self
                .terms
                .iter()
                .map(|(k, a)| {
                    (
                        perm.iter()
                            .flat_map(|&p| [k[2 * p], k[2 * p + 1]])
                            .collect(),
                        *a,
                    )
                })
                .collect(),
        }
    }

    pub fn tensor(&self, other: &RailState) -> Self {
        let mut terms = BTreeMap::new();
        for (ka, a) in &self.terms {
            for (kb, b) in &other.terms {
                let mut k = ka.clone();
                k.extend_from_slice(kb);
                terms.insert(k, a * b);
            }
        }
        RailState {
            modes: self.modes + other.modes,
            terms,
        }
    }

    /// Splits on the occupancy of `modes`; each part is returned normalized
    /// with its probability and the per-mode photon counts.
    fn measure(&self, modes: &[usize]) -> Vec<(Vec<u8>, f64, RailState)> {
        let mut groups: BTreeMap<Vec<u8>, BTreeMap<Vec<u8>, Complex64>> = BTreeMap::new();
        for (k, a) in &self.terms {
            let counts: Vec<u8> = modes.iter().map(|&m| k[2 * m] + k[2 * m + 1]).collect();
            let rest: Vec<u8> = (0..self.modes)
                .filter(|m| !modes.contains(m))
                .flat_map(|m| [k[2 * m], k[2 * m + 1]])
                .collect();
            // distinct rail occupancies are orthogonal, so group by the full rails
            let mut full = counts.clone();
            full.extend(modes.iter().flat_map(|&m| [k[2 * m], k[2 * m + 1]]));
            groups.entry(full).or_default().insert(rest, *a);
        }
        groups
            .into_iter()
            .filter_map(|(full, terms)| {
                let part = RailState {
                    modes: self.modes - modes.len(),
                    terms,
                };
                let p = part.norm_sqr();
                (p > MIN_WEIGHT)
                    .then(|| (full[..modes.len()].to_vec(), p, part.scaled(1.0 / p.sqrt())))
            })
            .collect()
    }
}

/// Rails and single-photon matrix of an element.
fn element_matrix(e: &ElementDescriptor) -> (Vec<usize>, Matrix) {
    let t = e.targets();
    let z = re(0.0);
    match e.kind() {
        ElementKind::Pr { theta } => {
            let (s, c) = theta.sin_cos();
            (
                vec![2 * t[0], 2 * t[0] + 1],
                vec![vec![re(c), re(-s)], vec![re(s), re(c)]],
            )
        }
        ElementKind::Ps { phi } => {
            let p = Complex64::from_polar(1.0, phi);
            (vec![2 * t[0], 2 * t[0] + 1], vec![vec![p, z], vec![z, p]])
        }
        ElementKind::Pdps { phi } => {
            let p = Complex64::from_polar(1.0, phi);
            (
                vec![2 * t[0], 2 * t[0] + 1],
                vec![vec![re(1.0), z], vec![z, p]],
            )
        }
        ElementKind::Pbs => {
            // rails [aH, aV, bH, bV]; V rails exchange
            let o = re(1.0);
            (
                vec![2 * t[0], 2 * t[0] + 1, 2 * t[1], 2 * t[1] + 1],
                vec![
                    vec![o, z, z, z],
                    vec![z, z, z, o],
                    vec![z, z, o, z],
                    vec![z, o, z, z],
                ],
            )
        }
        ElementKind::Bs => {
            let r = re(FRAC_1_SQRT_2);
            (
                vec![2 * t[0], 2 * t[0] + 1, 2 * t[1], 2 * t[1] + 1],
                vec![
                    vec![r, z, r, z],
                    vec![z, r, z, r],
                    vec![r, z, -r, z],
                    vec![z, r, z, -r],
                ],
            )
        }
    }
}

fn shifted(e: &ElementDescriptor, offset: usize) -> ElementDescriptor {
    let targets = e.targets().iter().map(|t| t + offset).collect();
    ElementDescriptor::new(e.kind(), targets).expect("shifting keeps targets distinct")
}

/// Click interpretation written independently of [`crate::detection`].
fn classify(counts: &[u8], site: &str) -> Result<OutcomeLabel> {
    let clicked: Vec<usize> = counts
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(i, _)| i)
        .collect();
    match (counts.len(), clicked.as_slice()) {
        (2, []) => Ok(OutcomeLabel::NoClick),
        (2, [0]) => Ok(OutcomeLabel::HorizontalPort),
        (2, [1]) => Ok(OutcomeLabel::VerticalPort),
        (2, [0, 1]) => Ok(OutcomeLabel::BothPorts),
        (4, []) => Ok(OutcomeLabel::AllSilent),
        (4, [_]) => Ok(OutcomeLabel::SingleClick),
        (4, [i, j]) => Ok(OutcomeLabel::Shorthand(match (i, j) {
            (1, 3) => 1,
            (0, 2) => 2,
            (0, 3) => 3,
            (1, 2) => 4,
            (0, 1) => 5,
            _ => 6,
        })),
        _ => Err(Error::Consistency {
            site: site.to_owned(),
            pattern: format!("{counts:?}"),
            reason: "not a valid outcome for this site".into(),
        }),
    }
}

enum Step {
    Element(ElementDescriptor),
    /// Appends a fresh mode `f` and maps `m_H → (m_H + f_V)/√2`, `m_V → (−m_H + f_V)/√2`.
    Split(usize),
    Permute(Vec<usize>),
    Tensor(RailState),
    Measure {
        site: &'static str,
        modes: Vec<usize>,
        rules: FeedForwardRules<OutcomeLabel>,
        offset: usize,
    },
    PairRules {
        first: &'static str,
        second: &'static str,
        rules: FeedForwardRules<LabelPair>,
    },
}

fn split_matrix() -> Matrix {
    let r = re(FRAC_1_SQRT_2);
    let z = re(0.0);
    let o = re(1.0);
    // rails [mH, mV, fH, fV]
    vec![
        vec![r, -r, z, z],
        vec![z, z, z, z],
        vec![z, z, o, z],
        vec![r, r, z, o],
    ]
}

/// Gadgets the oracle can enumerate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GadgetName {
    B2g,
    Pid,
    G2a,
    A2c,
    Cz,
    Pipeline,
}

impl GadgetName {
    pub const ALL: [GadgetName; 6] = [
        GadgetName::B2g,
        GadgetName::Pid,
        GadgetName::G2a,
        GadgetName::A2c,
        GadgetName::Cz,
        GadgetName::Pipeline,
    ];

    /// Mode count of the input state, or `None` when any count ≥ 1 is accepted.
    pub fn input_modes(self) -> Option<usize> {
        match self {
            GadgetName::B2g => Some(4),
            GadgetName::Pid => None,
            GadgetName::G2a => Some(6),
            GadgetName::A2c | GadgetName::Cz | GadgetName::Pipeline => Some(2),
        }
    }
}

impl fmt::Display for GadgetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GadgetName::B2g => "b2g",
            GadgetName::Pid => "pid",
            GadgetName::G2a => "g2a",
            GadgetName::A2c => "a2c",
            GadgetName::Cz => "cz",
            GadgetName::Pipeline => "pipeline",
        })
    }
}

impl FromStr for GadgetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GadgetName::ALL
            .into_iter()
            .find(|g| g.to_string() == s)
            .ok_or_else(|| Error::UnknownExperiment(s.to_owned()))
    }
}

fn rails_literal(modes: usize, terms: &[(f64, &str)]) -> RailState {
    let mut out = BTreeMap::new();
    for &(a, ket) in terms {
        let rails: Vec<u8> = ket
            .chars()
            .flat_map(|c| match c {
                'H' => [1, 0],
                'V' => [0, 1],
                _ => [0, 0],
            })
            .collect();
        assert_eq!(rails.len(), 2 * modes);
        out.insert(rails, re(a));
    }
    RailState { modes, terms: out }
}

fn bell_pair() -> RailState {
    rails_literal(2, &[(FRAC_1_SQRT_2, "HH"), (FRAC_1_SQRT_2, "VV")])
}

fn ancilla() -> RailState {
    rails_literal(
        4,
        &[(0.5, "HVVH"), (0.5, "VHVH"), (0.5, "VHHV"), (-0.5, "HVHV")],
    )
}

fn pr(m: usize, theta: f64) -> Step {
    Step::Element(ElementDescriptor::pr(m, theta))
}

fn pdps(m: usize, phi: f64) -> Step {
    Step::Element(ElementDescriptor::pdps(m, phi))
}

/// B2G on modes `o..o+4`; leaves three modes at `o..o+3`.
fn b2g_steps(o: usize, fresh: usize) -> Vec<Step> {
    let mut perm: Vec<usize> = (0..fresh).collect();
    perm.swap(o + 2, o + 3);
    vec![
        Step::Element(ElementDescriptor::pbs(o + 1, o + 2)),
        Step::Permute(perm),
        Step::Split(o + 3),
        Step::Measure {
            site: gadgets::B2G_SITE,
            modes: vec![o + 3, fresh],
            rules: gadgets::b2g_rules(),
            offset: o,
        },
    ]
}

/// G2A on modes `o..o+6`; leaves four modes at `o..o+4`.
fn g2a_steps(o: usize, fresh: usize) -> Vec<Step> {
    let (a, b) = (o + 1, o + 4);
    vec![
        pr(a, FRAC_PI_4),
        pr(b, FRAC_PI_4),
        Step::Element(ElementDescriptor::pbs(a, b)),
        pdps(a, FRAC_PI_4),
        pdps(b, FRAC_PI_4),
        Step::Split(a),
        Step::Split(b),
        Step::Measure {
            site: gadgets::G2A_SITE,
            modes: vec![a, b, fresh, fresh + 1],
            rules: gadgets::g2a_rules(),
            offset: o,
        },
    ]
}

/// Two A2C sites on `[q1, a1, a2, a3, a4, q2]` plus post-processing.
fn cz_tail() -> Vec<Step> {
    vec![
        Step::Element(ElementDescriptor::bs(0, 1)),
        Step::Split(0),
        Step::Split(1),
        Step::Measure {
            site: gadgets::CZ_SITE_1,
            modes: vec![0, 1, 6, 7],
            rules: gadgets::a2c_rules(gadgets::CZ_SITE_1),
            offset: 0,
        },
        Step::Element(ElementDescriptor::bs(3, 2)),
        Step::Split(3),
        Step::Split(2),
        Step::Measure {
            site: gadgets::CZ_SITE_2,
            modes: vec![3, 2, 4, 5],
            rules: gadgets::a2c_rules(gadgets::CZ_SITE_2),
            offset: 0,
        },
        Step::PairRules {
            first: gadgets::CZ_SITE_1,
            second: gadgets::CZ_SITE_2,
            rules: gadgets::cz_rules(),
        },
    ]
}

fn program(gadget: GadgetName, modes: usize) -> Vec<Step> {
    match gadget {
        GadgetName::B2g => b2g_steps(0, 4),
        GadgetName::Pid => vec![
            Step::Split(modes - 1),
            Step::Measure {
                site: gadgets::PID_SITE,
                modes: vec![modes - 1, modes],
                rules: gadgets::pid_chain_rules(),
                offset: 0,
            },
        ],
        GadgetName::G2a => g2a_steps(0, 6),
        GadgetName::A2c => vec![
            Step::Element(ElementDescriptor::bs(0, 1)),
            Step::Split(0),
            Step::Split(1),
            Step::Measure {
                site: gadgets::A2C_SITE,
                modes: vec![0, 1, 2, 3],
                rules: gadgets::a2c_rules(gadgets::A2C_SITE),
                offset: 0,
            },
        ],
        GadgetName::Cz => {
            let mut steps = vec![
                Step::Tensor(ancilla()),
                Step::Permute(vec![0, 2, 3, 4, 5, 1]),
            ];
            steps.extend(cz_tail());
            steps
        }
        GadgetName::Pipeline => {
            // [q1, q2, A0..A3, B0..B3]
            let bells = bell_pair()
                .tensor(&bell_pair())
                .tensor(&bell_pair())
                .tensor(&bell_pair());
            let mut steps = vec![Step::Tensor(bells)];
            steps.extend(b2g_steps(2, 10));
            steps.extend(b2g_steps(5, 9));
            steps.extend(g2a_steps(2, 8));
            steps.push(Step::Permute(vec![0, 2, 3, 4, 5, 1]));
            steps.extend(cz_tail());
            steps
        }
    }
}

/// One leaf of the branch tree.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleRow {
    pub label: String,
    pub disposition: Disposition,
    pub probability: f64,
    pub state: PureState,
}

struct Walker<'a> {
    steps: &'a [Step],
    rows: Vec<OracleRow>,
}

impl Walker<'_> {
    fn walk(
        &mut self,
        at: usize,
        state: RailState,
        weight: f64,
        events: &mut Vec<(String, OutcomeLabel)>,
    ) -> Result<()> {
        let Some(step) = self.steps.get(at) else {
            return self.leaf(state, weight, events, Disposition::Keep);
        };
        match step {
            Step::Element(e) => self.walk(at + 1, apply_descriptor(&state, e, 0), weight, events),
            Step::Split(m) => {
                let s = state.append_mode();
                let f = s.modes() - 1;
                let s = s.apply(&[2 * m, 2 * m + 1, 2 * f, 2 * f + 1], &split_matrix());
                self.walk(at + 1, s, weight, events)
            }
            Step::Permute(p) => self.walk(at + 1, state.permute(p), weight, events),
            Step::Tensor(t) => self.walk(at + 1, state.tensor(t), weight, events),
            Step::Measure {
                site,
                modes,
                rules,
                offset,
            } => {
                for (counts, p, part) in state.measure(modes) {
                    let label = classify(&counts, site)?;
                    let action = rules.action(&label)?;
                    events.push((site.to_string(), label));
                    let w = weight * p;
                    match action.disposition {
                        Disposition::Discard => self.leaf(part, w, events, Disposition::Discard)?,
                        Disposition::Keep => {
                            let s = action
                                .elements
                                .iter()
                                .fold(part, |s, e| apply_descriptor(&s, e, *offset));
                            self.walk(at + 1, s, w, events)?;
                        }
                    }
                    events.pop();
                }
                Ok(())
            }
            Step::PairRules {
                first,
                second,
                rules,
            } => {
                let find = |site: &str| {
                    events
                        .iter()
                        .rev()
                        .find(|(s, _)| s == site)
                        .map(|(_, l)| *l)
                };
                let key = match (find(first), find(second)) {
                    (Some(OutcomeLabel::Shorthand(a)), Some(OutcomeLabel::Shorthand(b))) => {
                        LabelPair(a, b)
                    }
                    other => {
                        return Err(Error::InvalidState(format!(
                            "no outcome pair to post-process: {other:?}"
                        )));
                    }
                };
                let action = rules.action(&key)?;
                match action.disposition {
                    Disposition::Discard => self.leaf(state, weight, events, Disposition::Discard),
                    Disposition::Keep => {
                        let s = action
                            .elements
                            .iter()
                            .fold(state, |s, e| apply_descriptor(&s, e, 0));
                        self.walk(at + 1, s, weight, events)
                    }
                }
            }
        }
    }

    fn leaf(
        &mut self,
        state: RailState,
        weight: f64,
        events: &[(String, OutcomeLabel)],
        disposition: Disposition,
    ) -> Result<()> {
        let label = if events.is_empty() {
            "-".to_owned()
        } else {
            events
                .iter()
                .map(|(s, l)| format!("{s}:{l}"))
                .collect::<Vec<_>>()
                .join("; ")
        };
        self.rows.push(OracleRow {
            label,
            disposition,
            probability: weight,
            state: state.to_pure()?,
        });
        Ok(())
    }
}

fn apply_descriptor(state: &RailState, e: &ElementDescriptor, offset: usize) -> RailState {
    let (rails, u) = element_matrix(&shifted(e, offset));
    state.apply(&rails, &u)
}

/// Exhaustive depth-first expansion of every measurement branch of `gadget`
/// on `input`. Rows are sorted by label, then state.
pub fn enumerate_exact(gadget: GadgetName, input: &PureState) -> Result<Vec<OracleRow>> {
    if let Some(m) = gadget.input_modes() {
        if input.modes() != m {
            return Err(Error::DimensionMismatch {
                left: m,
                right: input.modes(),
            });
        }
    } else if input.modes() == 0 {
        return Err(Error::InvalidState("PID needs at least one mode".into()));
    }
    let input = input.normalized()?;
    let steps = program(gadget, input.modes());
    let mut walker = Walker {
        steps: &steps,
        rows: Vec::new(),
    };
    walker.walk(0, RailState::from_pure(&input), 1.0, &mut Vec::new())?;
    let mut rows = walker.rows;
    rows.sort_by(|a, b| {
        a.label
            .cmp(&b.label)
            .then_with(|| compare_states(&a.state, &b.state))
    });
    Ok(rows)
}

/// Total probability per label, with the label's disposition.
pub fn aggregate(rows: &[OracleRow]) -> BTreeMap<String, (Disposition, f64)> {
    let mut out: BTreeMap<String, (Disposition, f64)> = BTreeMap::new();
    for r in rows {
        out.entry(r.label.clone()).or_insert((r.disposition, 0.0)).1 += r.probability;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::equal_up_to_global_phase;
    use crate::gadgets::{ghz_plus, phi_plus, t1_prime};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn permanent_small_cases() {
        let m = |rows: &[&[f64]]| -> Matrix {
            rows.iter()
                .map(|r| r.iter().map(|&x| re(x)).collect())
                .collect()
        };
        assert_eq!(permanent(&m(&[])), re(1.0));
        assert_eq!(permanent(&m(&[&[3.0]])), re(3.0));
        assert_eq!(permanent(&m(&[&[1.0, 2.0], &[3.0, 4.0]])), re(10.0));
        let ones = m(&[&[1.0; 3], &[1.0; 3], &[1.0; 3]]);
        assert!((permanent(&ones) - re(6.0)).norm() < 1e-12);
    }

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(4, 2).len(), 10);
        assert_eq!(compositions(2, 0), vec![vec![0, 0]]);
    }

    #[test]
    fn hong_ou_mandel_from_permanents() {
        let s = RailState::from_pure(&PureState::ket("HH").unwrap());
        let out = s.apply(
            &[0, 1, 2, 3],
            &element_matrix(&ElementDescriptor::bs(0, 1)).1,
        );
        let p = out.to_pure().unwrap();
        assert_eq!(p.len(), 2);
        assert!(close(
            p.amplitude(&"H2 0".parse().unwrap()).re,
            FRAC_1_SQRT_2
        ));
        assert!(close(
            p.amplitude(&"0 H2".parse().unwrap()).re,
            -FRAC_1_SQRT_2
        ));
    }

    #[test]
    fn b2g_enumeration() {
        let rows =
            enumerate_exact(GadgetName::B2g, &phi_plus().tensor(&phi_plus()).unwrap()).unwrap();
        let keep: f64 = rows
            .iter()
            .filter(|r| r.disposition == Disposition::Keep)
            .map(|r| r.probability)
            .sum();
        let discard: f64 = rows
            .iter()
            .filter(|r| r.disposition == Disposition::Discard)
            .map(|r| r.probability)
            .sum();
        assert!(close(keep, 0.75));
        assert!(close(discard, 0.25));
        let ghz: f64 = rows
            .iter()
            .filter(|r| {
                r.disposition == Disposition::Keep
                    && equal_up_to_global_phase(&r.state, &ghz_plus(), 1e-12)
            })
            .map(|r| r.probability)
            .sum();
        assert!(close(ghz, 0.5));
    }

    #[test]
    fn g2a_enumeration() {
        let rows =
            enumerate_exact(GadgetName::G2a, &ghz_plus().tensor(&ghz_plus()).unwrap()).unwrap();
        let keep: Vec<_> = rows
            .iter()
            .filter(|r| r.disposition == Disposition::Keep)
            .collect();
        assert!(close(keep.iter().map(|r| r.probability).sum(), 0.5));
        assert!(keep
            .iter()
            .all(|r| equal_up_to_global_phase(&r.state, &t1_prime(), 1e-12)));
    }

    #[test]
    fn cz_enumeration_has_sixteen_kept_labels() {
        let rows = enumerate_exact(GadgetName::Cz, &PureState::ket("VH").unwrap()).unwrap();
        let agg = aggregate(&rows);
        let kept: Vec<_> = agg
            .iter()
            .filter(|(_, (d, _))| *d == Disposition::Keep)
            .collect();
        assert_eq!(kept.len(), 16);
        assert!(kept.iter().all(|(_, (_, p))| close(*p, 1.0 / 64.0)));
    }

    #[test]
    fn enumeration_is_deterministic() {
        let input = PureState::ket("HV").unwrap();
        assert_eq!(
            enumerate_exact(GadgetName::Cz, &input).unwrap(),
            enumerate_exact(GadgetName::Cz, &input).unwrap()
        );
    }

    #[test]
    fn input_shape_is_checked() {
        assert!(enumerate_exact(GadgetName::B2g, &PureState::ket("HH").unwrap()).is_err());
        assert!("nope".parse::<GadgetName>().is_err());
        assert_eq!(
            "pipeline".parse::<GadgetName>().unwrap(),
            GadgetName::Pipeline
        );
    }
}
