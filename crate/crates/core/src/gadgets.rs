//! Bell-to-GHZ (B2G), error-correction circuit (ECC), GHZ-to-ancilla (G2A),
//! ancilla-to-controlled-phase (A2C), and the controlled-phase pipeline built
//! from them.
//!
//! Mode indices are 0-based. Every gadget keeps discarded branches in its
//! ensemble so that probability completeness can be checked.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;

use num_complex::Complex64;

use crate::detection::{
    apply_action, feed_forward, measure_nr, pid, rail_split, Action, FeedForwardRules,
    OutcomeLabel, SiteKind,
};
use crate::elements::{apply_pbs, apply_pdps, apply_pr, ElementDescriptor};
use crate::ensemble::{Branch, Ensemble};
use crate::error::{Error, Result};
use crate::fock::{equal_up_to_global_phase, PureState};

/// Tolerance for "equal up to global phase" when classifying success branches.
pub const MATCH_TOLERANCE: f64 = 1e-12;

pub const B2G_SITE: &str = "b2g.pid";
pub const PID_SITE: &str = "pid";
pub const ECC_SITE: &str = "ecc";
pub const G2A_SITE: &str = "g2a.ecc";
pub const A2C_SITE: &str = "a2c";
pub const CZ_SITE_1: &str = "cz.a2c1";
pub const CZ_SITE_2: &str = "cz.a2c2";

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn literal(pairs: &[(f64, &str)]) -> PureState {
    let pairs: Vec<_> = pairs.iter().map(|&(a, k)| (c(a), k)).collect();
    PureState::superposition(&pairs).expect("literal named state")
}

/// `(|HH⟩ + |VV⟩)/√2`.
pub fn phi_plus() -> PureState {
    phi_plus_d(2).expect("d = 2")
}

/// `(|H…H⟩ + |V…V⟩)/√2` on `d` modes.
pub fn phi_plus_d(d: usize) -> Result<PureState> {
    cat_state(d, 1.0)
}

/// `(|H…H⟩ − |V…V⟩)/√2` on `d` modes.
pub fn phi_minus_d(d: usize) -> Result<PureState> {
    cat_state(d, -1.0)
}

fn cat_state(d: usize, sign: f64) -> Result<PureState> {
    if d == 0 {
        return Err(Error::InvalidState(
            "cat state needs at least one mode".into(),
        ));
    }
    let h = "H".repeat(d);
    let v = "V".repeat(d);
    let r = FRAC_1_SQRT_2;
    let s = PureState::superposition(&[(c(r), h.as_str()), (c(sign * r), v.as_str())])?;
    let cap = s.photon_cap().max(d as u32);
    s.with_photon_cap(cap)
}

/// `(|HHH⟩ + |VVV⟩)/√2`.
pub fn ghz_plus() -> PureState {
    phi_plus_d(3).expect("d = 3")
}

/// `(|HHH⟩ − |VVV⟩)/√2`.
pub fn ghz_minus() -> PureState {
    phi_minus_d(3).expect("d = 3")
}

/// The four-qubit ancilla `(|HVVH⟩ + |VHVH⟩ + |VHHV⟩ − |HVHV⟩)/2`.
pub fn t1_prime() -> PureState {
    literal(&[(0.5, "HVVH"), (0.5, "VHVH"), (0.5, "VHHV"), (-0.5, "HVHV")])
}

/// The B2G failure state with an empty middle mode.
pub fn v0h() -> PureState {
    literal(&[(1.0, "V0H")])
}

/// `α|H⟩ + β|V⟩`, normalized.
pub fn qubit(alpha: Complex64, beta: Complex64) -> Result<PureState> {
    PureState::superposition(&[(alpha, "H"), (beta, "V")])?.normalized()
}

/// Controlled-phase on a two-mode polarization state: `|VV⟩ → −|VV⟩`.
pub fn cz_reference(state: &PureState) -> Result<PureState> {
    if state.modes() != 2 {
        return Err(Error::DimensionMismatch {
            left: 2,
            right: state.modes(),
        });
    }
    let vv = "VV".parse()?;
    Ok(state.map_amplitudes(|v| if *v == vv { c(-1.0) } else { c(1.0) }))
}

/// Which branches of a gadget's ensemble count as success.
#[derive(Clone, Debug, PartialEq)]
pub enum SuccessPredicate {
    /// Every kept branch.
    Kept,
    /// Kept branches equal to the target up to global phase.
    KeptMatching(PureState),
}

impl SuccessPredicate {
    pub fn accepts(&self, branch: &Branch) -> bool {
        branch.is_kept()
            && match self {
                SuccessPredicate::Kept => true,
                SuccessPredicate::KeptMatching(target) => {
                    equal_up_to_global_phase(&branch.state, target, MATCH_TOLERANCE)
                }
            }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GadgetResult {
    pub ensemble: Ensemble,
    pub success: SuccessPredicate,
}

impl GadgetResult {
    pub fn success_probability(&self) -> f64 {
        self.success_branches().map(|b| b.weight).sum()
    }

    pub fn keep_probability(&self) -> f64 {
        self.ensemble.kept_weight()
    }

    pub fn success_branches(&self) -> impl Iterator<Item = &Branch> {
        self.ensemble
            .branches()
            .iter()
            .filter(|b| self.success.accepts(b))
    }
}

fn expect_modes(state: &PureState, modes: usize) -> Result<()> {
    if state.modes() == modes {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            left: modes,
            right: state.modes(),
        })
    }
}

/// Feed-forward after the B2G detector. Rule elements act on the three
/// remaining modes.
pub fn b2g_rules() -> FeedForwardRules<OutcomeLabel> {
    FeedForwardRules::new(B2G_SITE)
        .with(
            &[OutcomeLabel::HorizontalPort],
            Action::keep(vec![ElementDescriptor::pdps(0, PI)]),
        )
        .with(&[OutcomeLabel::VerticalPort], Action::keep(vec![]))
        .with(
            &[OutcomeLabel::NoClick, OutcomeLabel::BothPorts],
            Action::discard(),
        )
}

/// Parity check on two Bell pairs: PBS on the inner modes, then a PID on the
/// fourth output. Success is a kept branch equal to `|GHZ⁺⟩`.
pub fn b2g(input: &PureState) -> Result<GadgetResult> {
    expect_modes(input, 4)?;
    let s = apply_pbs(input, 1, 2)?.reorder_modes(&[0, 1, 3, 2])?;
    let ensemble = pid(&s, 3, &b2g_rules())?;
    Ok(GadgetResult {
        ensemble,
        success: SuccessPredicate::KeptMatching(ghz_plus()),
    })
}

/// Feed-forward that turns `|Φ⁺_d⟩` into `|Φ⁺_{d−1}⟩` after a PID on its last mode.
pub fn pid_chain_rules() -> FeedForwardRules<OutcomeLabel> {
    FeedForwardRules::new(PID_SITE)
        .with(
            &[OutcomeLabel::HorizontalPort],
            Action::keep(vec![ElementDescriptor::pdps(0, PI)]),
        )
        .with(&[OutcomeLabel::VerticalPort], Action::keep(vec![]))
        .with(
            &[OutcomeLabel::NoClick, OutcomeLabel::BothPorts],
            Action::discard(),
        )
}

/// PID on the last mode of `|Φ⁺_d⟩` with [`pid_chain_rules`].
pub fn pid_chain_step(d: usize) -> Result<GadgetResult> {
    if d < 2 {
        return Err(Error::Config(format!(
            "chain length {d} must be at least 2"
        )));
    }
    let ensemble = pid(&phi_plus_d(d)?, d - 1, &pid_chain_rules())?;
    Ok(GadgetResult {
        ensemble,
        success: SuccessPredicate::KeptMatching(phi_plus_d(d - 1)?),
    })
}

/// ECC up to the detectors. The two modes are rotated by π/4, combined on a
/// PBS, phased by PDPS(π/4) and split into rails. Returns the state and the
/// four detector modes `[c_H, d_H, c_V, d_V]`.
pub fn ecc_pre_detection(
    state: &PureState,
    mode_a: usize,
    mode_b: usize,
) -> Result<(PureState, [usize; 4])> {
    let s = apply_pr(state, mode_a, FRAC_PI_4)?;
    let s = apply_pr(&s, mode_b, FRAC_PI_4)?;
    let s = apply_pbs(&s, mode_a, mode_b)?;
    let s = apply_pdps(&s, mode_a, FRAC_PI_4)?;
    let s = apply_pdps(&s, mode_b, FRAC_PI_4)?;
    let (s, fa) = rail_split(&s, mode_a)?;
    let (s, fb) = rail_split(&s, mode_b)?;
    Ok((s, [mode_a, mode_b, fa, fb]))
}

/// Plain ECC dispositions: keep two-click outcomes 3 to 6, discard the rest.
pub fn ecc_rules() -> FeedForwardRules<OutcomeLabel> {
    FeedForwardRules::new(ECC_SITE)
        .with(&shorthand(&[3, 4, 5, 6]), Action::keep(vec![]))
        .with(
            &[
                OutcomeLabel::Shorthand(1),
                OutcomeLabel::Shorthand(2),
                OutcomeLabel::SingleClick,
                OutcomeLabel::AllSilent,
            ],
            Action::discard(),
        )
}

fn shorthand(labels: &[u8]) -> Vec<OutcomeLabel> {
    labels.iter().map(|&n| OutcomeLabel::Shorthand(n)).collect()
}

/// ECC on `mode_a`, `mode_b` with the plain dispositions of [`ecc_rules`].
pub fn ecc(state: &PureState, mode_a: usize, mode_b: usize) -> Result<Ensemble> {
    ecc_with_rules(state, mode_a, mode_b, &ecc_rules())
}

/// ECC followed by an arbitrary feed-forward table.
pub fn ecc_with_rules(
    state: &PureState,
    mode_a: usize,
    mode_b: usize,
    rules: &FeedForwardRules<OutcomeLabel>,
) -> Result<Ensemble> {
    let (s, rails) = ecc_pre_detection(state, mode_a, mode_b)?;
    let measured = measure_nr(&s, &rails, rules.site(), SiteKind::FourRail)?;
    feed_forward(&measured, rules)
}

/// Conversion applied on every kept G2A branch, after the outcome-specific
/// phase fix: PR(π/2) on modes 1 and 2, PDPS(π/2) on 1, PDPS(−π/2) on 2.
pub fn g2a_conversion() -> Vec<ElementDescriptor> {
    vec![
        ElementDescriptor::pr(1, FRAC_PI_2),
        ElementDescriptor::pr(2, FRAC_PI_2),
        ElementDescriptor::pdps(1, FRAC_PI_2),
        ElementDescriptor::pdps(2, -FRAC_PI_2),
    ]
}

/// Feed-forward for G2A's ECC site; elements act on the four remaining modes.
pub fn g2a_rules() -> FeedForwardRules<OutcomeLabel> {
    let mut parity_fix = vec![
        ElementDescriptor::pdps(1, PI),
        ElementDescriptor::pdps(2, PI),
    ];
    parity_fix.extend(g2a_conversion());
    let mut phase_fix = vec![ElementDescriptor::ps(0, FRAC_PI_2)];
    phase_fix.extend(g2a_conversion());
    FeedForwardRules::new(G2A_SITE)
        .with(&shorthand(&[5, 6]), Action::keep(parity_fix))
        .with(&shorthand(&[3, 4]), Action::keep(phase_fix))
        .with(
            &[
                OutcomeLabel::Shorthand(1),
                OutcomeLabel::Shorthand(2),
                OutcomeLabel::SingleClick,
                OutcomeLabel::AllSilent,
            ],
            Action::discard(),
        )
}

/// GHZ-to-ancilla on an ensemble of six-mode states (two three-mode
/// registers). ECC acts on the middle mode of each register (modes 1 and 4);
/// kept branches are converted to `|t₁′⟩` on modes `[0, 2, 3, 5]`.
pub fn g2a(input: &Ensemble) -> Result<GadgetResult> {
    let rules = g2a_rules();
    let ensemble = input.flat_map_kept(|b| {
        expect_modes(&b.state, 6)?;
        ecc_with_rules(&b.state, 1, 4, &rules)
    })?;
    Ok(GadgetResult {
        ensemble,
        success: SuccessPredicate::KeptMatching(t1_prime()),
    })
}

/// [`g2a`] on a single pure input.
pub fn g2a_pure(input: &PureState) -> Result<GadgetResult> {
    g2a(&Ensemble::from_state(input.clone())?)
}

/// Keep any two-click outcome, discard the rest.
pub fn a2c_rules(site: &str) -> FeedForwardRules<OutcomeLabel> {
    FeedForwardRules::new(site)
        .with(&shorthand(&[1, 2, 3, 4, 5, 6]), Action::keep(vec![]))
        .with(
            &[OutcomeLabel::SingleClick, OutcomeLabel::AllSilent],
            Action::discard(),
        )
}

/// A2C: 50:50 BS between `mode_x` (computational input) and `mode_y`
/// (ancilla), then a PID rail split on both outputs. Detector rails are
/// `[x_H, y_H, x_V, y_V]`.
pub fn a2c(state: &PureState, mode_x: usize, mode_y: usize, site: &str) -> Result<Ensemble> {
    let s = crate::elements::apply_bs(state, mode_x, mode_y)?;
    let (s, fx) = rail_split(&s, mode_x)?;
    let (s, fy) = rail_split(&s, mode_y)?;
    let measured = measure_nr(&s, &[mode_x, mode_y, fx, fy], site, SiteKind::FourRail)?;
    feed_forward(&measured, &a2c_rules(site))
}

/// Outcome pair of the two A2C sites, first digit from the site on the
/// first computational mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelPair(pub u8, pub u8);

impl fmt::Display for LabelPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}{}⟩", self.0, self.1)
    }
}

/// Post-processing of the two remaining computational modes for each A2C
/// outcome pair.
///
/// Rows with mixed parity apply the PDPS(π) on mode 0; with it on mode 1
/// those outcomes realize CZ followed by a Z error rather than CZ.
pub fn cz_rules() -> FeedForwardRules<LabelPair> {
    let flip = |m| ElementDescriptor::pr(m, FRAC_PI_2);
    let z = |m| ElementDescriptor::pdps(m, PI);
    let sign = || ElementDescriptor::ps(0, PI);
    let with_sign = |mut v: Vec<ElementDescriptor>| {
        v.push(sign());
        v
    };
    let both = vec![flip(0), flip(1), z(1)];
    let second = vec![flip(1), sign(), z(0)];
    let none = vec![z(1)];
    let first = vec![flip(0), sign(), z(0)];
    let p = |a, b| LabelPair(a, b);
    FeedForwardRules::new("cz.post")
        .with(&[p(1, 1), p(2, 2)], Action::keep(both.clone()))
        .with(&[p(1, 2), p(2, 1)], Action::keep(with_sign(both)))
        .with(&[p(3, 1), p(4, 2)], Action::keep(second.clone()))
        .with(&[p(4, 1), p(3, 2)], Action::keep(with_sign(second)))
        .with(&[p(3, 4), p(4, 3)], Action::keep(none.clone()))
        .with(&[p(3, 3), p(4, 4)], Action::keep(with_sign(none)))
        .with(&[p(1, 4), p(2, 3)], Action::keep(first.clone()))
        .with(&[p(1, 3), p(2, 4)], Action::keep(with_sign(first)))
}

fn shorthand_of(branch: &Branch, site: &str) -> Result<u8> {
    match branch.record.find(site).map(|e| e.label) {
        Some(OutcomeLabel::Shorthand(n)) => Ok(n),
        other => Err(Error::InvalidState(format!(
            "kept branch has no two-click outcome at `{site}`: {other:?}"
        ))),
    }
}

/// Controlled-phase on a two-mode input using `|t₁′⟩` as the ancilla.
pub fn cz_gate(input: &PureState) -> Result<GadgetResult> {
    cz_gate_with_ancilla(input, &t1_prime())
}

/// Controlled-phase on a two-mode input consuming a four-mode ancilla.
///
/// Modes are arranged `[q1, a1, a2, a3, a4, q2]`; A2C runs on `(q1, a1)` and
/// on `(q2, a4)`, leaving `[a2, a3]` as the output qubits.
pub fn cz_gate_with_ancilla(input: &PureState, ancilla: &PureState) -> Result<GadgetResult> {
    cz_gate_with_rules(input, ancilla, &cz_rules())
}

/// [`cz_gate_with_ancilla`] with a caller-supplied post-processing table.
pub fn cz_gate_with_rules(
    input: &PureState,
    ancilla: &PureState,
    rules: &FeedForwardRules<LabelPair>,
) -> Result<GadgetResult> {
    expect_modes(input, 2)?;
    expect_modes(ancilla, 4)?;
    let input = input.normalized()?;
    let s = input.tensor(ancilla)?.reorder_modes(&[0, 2, 3, 4, 5, 1])?;
    let first = Ensemble::from_state(s)?;
    let ensemble = first
        .flat_map_kept(|b| a2c(&b.state, 0, 1, CZ_SITE_1))?
        .flat_map_kept(|b| a2c(&b.state, 3, 2, CZ_SITE_2))?;
    let mut branches = Vec::with_capacity(ensemble.len());
    for b in ensemble.into_branches() {
        if !b.is_kept() {
            branches.push(b);
            continue;
        }
        let key = LabelPair(shorthand_of(&b, CZ_SITE_1)?, shorthand_of(&b, CZ_SITE_2)?);
        branches.push(apply_action(&b, rules.action(&key)?)?);
    }
    Ok(GadgetResult {
        ensemble: Ensemble::from_branches(branches)?,
        success: SuccessPredicate::KeptMatching(cz_reference(&input)?),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineResult {
    /// Final ensemble over the two output qubits.
    pub result: GadgetResult,
    /// Probability that the four Bell pairs yield `|t₁′⟩`.
    pub ancilla_probability: f64,
}

impl PipelineResult {
    pub fn success_probability(&self) -> f64 {
        self.result.success_probability()
    }

    /// Success probability of the gate stage given a prepared ancilla.
    pub fn gate_probability_given_ancilla(&self) -> f64 {
        self.success_probability() / self.ancilla_probability
    }
}

/// Four Bell pairs → two B2G → G2A → controlled-phase on `input`.
pub fn cz_full_pipeline(input: &PureState) -> Result<PipelineResult> {
    expect_modes(input, 2)?;
    let pairs = phi_plus().tensor(&phi_plus())?;
    let ghz = b2g(&pairs)?.ensemble;
    let registers = ghz.tensor(&ghz)?;
    let ancilla = g2a(&registers)?;
    let ancilla_probability = ancilla.success_probability();
    let ensemble = ancilla
        .ensemble
        .flat_map_kept(|b| Ok(cz_gate_with_ancilla(input, &b.state)?.ensemble))?;
    Ok(PipelineResult {
        result: GadgetResult {
            ensemble,
            success: SuccessPredicate::KeptMatching(cz_reference(&input.normalized()?)?),
        },
        ancilla_probability,
    })
}
