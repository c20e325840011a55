//! Linear-optical elements acting on [`PureState`]s.
//!
//! Mode-mixing elements are applied as substitutions of creation operators,
//! `a†_(m,r) → Σ c · a†_(m',r')`, expanded term by term. Phase elements are
//! diagonal in the Fock basis.
//!
//! Conventions:
//! - PR(θ): `a†_H → cos θ a†_H + sin θ a†_V`, `a†_V → −sin θ a†_H + cos θ a†_V`.
//! - PBS: H transmitted, V exchanged between the two modes, no reflection phase.
//! - BS: `a† → (a† + b†)/√2`, `b† → (a† − b†)/√2` on each rail.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{BasisVector, Occupancy, PureState, Rail};

/// Kind and parameters of a linear-optical element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ElementKind {
    /// 50:50 beam splitter, polarization preserving.
    Bs,
    /// Polarizing beam splitter.
    Pbs,
    /// Polarization rotator by `theta` radians.
    Pr { theta: f64 },
    /// Phase shifter, `e^{iφ}` per photon.
    Ps { phi: f64 },
    /// Polarization-dependent phase shifter, `e^{iφ}` per vertical photon.
    Pdps { phi: f64 },
}

impl ElementKind {
    pub fn name(&self) -> &'static str {
        match self {
            ElementKind::Bs => "BS",
            ElementKind::Pbs => "PBS",
            ElementKind::Pr { .. } => "PR",
            ElementKind::Ps { .. } => "PS",
            ElementKind::Pdps { .. } => "PDPS",
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            ElementKind::Bs | ElementKind::Pbs => 2,
            _ => 1,
        }
    }
}

/// One element together with the modes it acts on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DescriptorRepr", into = "DescriptorRepr")]
pub struct ElementDescriptor {
    kind: ElementKind,
    targets: Vec<usize>,
}

impl ElementDescriptor {
    pub fn new(kind: ElementKind, targets: Vec<usize>) -> Result<Self> {
        if targets.len() != kind.arity() {
            return Err(Error::Arity {
                kind: kind.name(),
                expected: kind.arity(),
                got: targets.len(),
            });
        }
        if targets.len() == 2 && targets[0] == targets[1] {
            return Err(Error::DuplicateMode(targets[0]));
        }
        Ok(ElementDescriptor { kind, targets })
    }

    pub fn bs(a: usize, b: usize) -> Self {
        Self::new(ElementKind::Bs, vec![a, b]).expect("distinct modes")
    }

    pub fn pbs(a: usize, b: usize) -> Self {
        Self::new(ElementKind::Pbs, vec![a, b]).expect("distinct modes")
    }

    pub fn pr(mode: usize, theta: f64) -> Self {
        ElementDescriptor {
            kind: ElementKind::Pr { theta },
            targets: vec![mode],
        }
    }

    pub fn ps(mode: usize, phi: f64) -> Self {
        ElementDescriptor {
            kind: ElementKind::Ps { phi },
            targets: vec![mode],
        }
    }

    pub fn pdps(mode: usize, phi: f64) -> Self {
        ElementDescriptor {
            kind: ElementKind::Pdps { phi },
            targets: vec![mode],
        }
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }
}

impl fmt::Display for ElementDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let targets: Vec<String> = self.targets.iter().map(|t| (t + 1).to_string()).collect();
        match self.kind {
            ElementKind::Pr { theta } => write!(f, "PR({theta:.4})@{}", targets.join(",")),
            ElementKind::Ps { phi } => write!(f, "PS({phi:.4})@{}", targets.join(",")),
            ElementKind::Pdps { phi } => write!(f, "PDPS({phi:.4})@{}", targets.join(",")),
            k => write!(f, "{}@{}", k.name(), targets.join(",")),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct DescriptorRepr {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi: Option<f64>,
    targets: Vec<usize>,
}

impl TryFrom<DescriptorRepr> for ElementDescriptor {
    type Error = Error;

    fn try_from(r: DescriptorRepr) -> Result<Self> {
        let missing = |p: &str| Error::Config(format!("{} requires `{p}`", r.kind));
        let kind = match r.kind.as_str() {
            "BS" => ElementKind::Bs,
            "PBS" => ElementKind::Pbs,
            "PR" => ElementKind::Pr {
                theta: r.theta.ok_or_else(|| missing("theta"))?,
            },
            "PS" => ElementKind::Ps {
                phi: r.phi.ok_or_else(|| missing("phi"))?,
            },
            "PDPS" => ElementKind::Pdps {
                phi: r.phi.ok_or_else(|| missing("phi"))?,
            },
            other => return Err(Error::Config(format!("unknown element kind `{other}`"))),
        };
        ElementDescriptor::new(kind, r.targets)
    }
}

impl From<ElementDescriptor> for DescriptorRepr {
    fn from(d: ElementDescriptor) -> Self {
        let (theta, phi) = match d.kind {
            ElementKind::Pr { theta } => (Some(theta), None),
            ElementKind::Ps { phi } | ElementKind::Pdps { phi } => (None, Some(phi)),
            _ => (None, None),
        };
        DescriptorRepr {
            kind: d.kind.name().to_owned(),
            theta,
            phi,
            targets: d.targets,
        }
    }
}

type Creator = (usize, Rail);

/// Substitutes each creation operator on the `affected` modes by `image(mode, rail)`.
fn substitute<F>(state: &PureState, affected: &[usize], image: F) -> PureState
where
    F: Fn(usize, Rail) -> Vec<(Creator, Complex64)>,
{
    let mut out: BTreeMap<BasisVector, Complex64> = BTreeMap::new();
    for (vector, amp) in state.raw_terms() {
        let mut base = vector.clone();
        let mut creators: Vec<Creator> = Vec::new();
        let mut norm = 1.0;
        for &m in affected {
            let occ = vector.occupancy(m);
            for rail in Rail::BOTH {
                let n = occ.get(rail);
                norm *= factorial(n);
                creators.extend(std::iter::repeat_n((m, rail), usize::from(n)));
            }
            base.occupancies_mut()[m] = Occupancy::EMPTY;
        }
        let mut partial: HashMap<BasisVector, Complex64> = HashMap::new();
        partial.insert(base, amp / norm.sqrt());
        for (m, rail) in creators {
            let targets = image(m, rail);
            let mut next: HashMap<BasisVector, Complex64> =
                HashMap::with_capacity(partial.len() * targets.len());
            for (v, a) in &partial {
                for &((tm, tr), c) in &targets {
                    let mut raised = v.clone();
                    let occ = &mut raised.occupancies_mut()[tm];
                    let n = occ.get(tr) + 1;
                    occ.set(tr, n);
                    *next.entry(raised).or_default() += a * c * f64::from(n).sqrt();
                }
            }
            partial = next;
        }
        for (v, a) in partial {
            *out.entry(v).or_default() += a;
        }
    }
    PureState::from_map(state.modes(), state.photon_cap(), out)
}

fn factorial(n: u8) -> f64 {
    (1..=u32::from(n)).map(f64::from).product()
}

fn check_pair(state: &PureState, a: usize, b: usize) -> Result<()> {
    state.check_mode(a)?;
    state.check_mode(b)?;
    if a == b {
        return Err(Error::DuplicateMode(a));
    }
    Ok(())
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Polarization rotator on one mode.
pub fn apply_pr(state: &PureState, mode: usize, theta: f64) -> Result<PureState> {
    state.check_mode(mode)?;
    let (s, c) = theta.sin_cos();
    Ok(substitute(state, &[mode], |m, rail| match rail {
        Rail::H => vec![((m, Rail::H), re(c)), ((m, Rail::V), re(s))],
        Rail::V => vec![((m, Rail::H), re(-s)), ((m, Rail::V), re(c))],
    }))
}

/// Phase shifter: every photon in `mode` picks up `e^{iφ}`.
pub fn apply_ps(state: &PureState, mode: usize, phi: f64) -> Result<PureState> {
    state.check_mode(mode)?;
    Ok(state
        .map_amplitudes(|v| Complex64::from_polar(1.0, phi * f64::from(v.occupancy(mode).total()))))
}

/// Polarization-dependent phase shifter: only vertical photons pick up `e^{iφ}`.
pub fn apply_pdps(state: &PureState, mode: usize, phi: f64) -> Result<PureState> {
    state.check_mode(mode)?;
    Ok(state.map_amplitudes(|v| Complex64::from_polar(1.0, phi * f64::from(v.occupancy(mode).v))))
}

/// Polarizing beam splitter: H stays, V swaps between `mode_a` and `mode_b`.
pub fn apply_pbs(state: &PureState, mode_a: usize, mode_b: usize) -> Result<PureState> {
    check_pair(state, mode_a, mode_b)?;
    Ok(substitute(state, &[mode_a, mode_b], |m, rail| match rail {
        Rail::H => vec![((m, Rail::H), re(1.0))],
        Rail::V => {
            let other = if m == mode_a { mode_b } else { mode_a };
            vec![((other, Rail::V), re(1.0))]
        }
    }))
}

/// Real 50:50 beam splitter applied identically to both rails.
pub fn apply_bs(state: &PureState, mode_a: usize, mode_b: usize) -> Result<PureState> {
    check_pair(state, mode_a, mode_b)?;
    let r = FRAC_1_SQRT_2;
    Ok(substitute(state, &[mode_a, mode_b], |m, rail| {
        let sign = if m == mode_a { 1.0 } else { -1.0 };
        vec![((mode_a, rail), re(r)), ((mode_b, rail), re(sign * r))]
    }))
}

pub fn apply_element(state: &PureState, element: &ElementDescriptor) -> Result<PureState> {
    let t = element.targets();
    match element.kind() {
        ElementKind::Bs => apply_bs(state, t[0], t[1]),
        ElementKind::Pbs => apply_pbs(state, t[0], t[1]),
        ElementKind::Pr { theta } => apply_pr(state, t[0], theta),
        ElementKind::Ps { phi } => apply_ps(state, t[0], phi),
        ElementKind::Pdps { phi } => apply_pdps(state, t[0], phi),
    }
}

/// Applies a circuit left to right.
pub fn apply_circuit(state: &PureState, circuit: &[ElementDescriptor]) -> Result<PureState> {
    circuit
        .iter()
        .try_fold(state.clone(), |s, e| apply_element(&s, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::equal_up_to_global_phase;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn ket(s: &str) -> PureState {
        PureState::ket(s).unwrap()
    }

    fn sup(pairs: &[(f64, &str)]) -> PureState {
        let pairs: Vec<_> = pairs.iter().map(|(a, k)| (re(*a), *k)).collect();
        PureState::superposition(&pairs).unwrap()
    }

    fn close(a: &PureState, b: &PureState) -> bool {
        a.modes() == b.modes() && {
            let diff = b.scaled(re(-1.0));
            let mut total = 0.0;
            for (k, x) in a.terms() {
                total += (x + diff.amplitude(k)).norm_sqr();
            }
            for (k, y) in b.terms() {
                if a.amplitude(k) == Complex64::default() {
                    total += y.norm_sqr();
                }
            }
            total.sqrt() < 1e-12
        }
    }

    #[test]
    fn pr_examples() {
        let r = FRAC_1_SQRT_2;
        let h = ket("H");
        assert!(close(&apply_pr(&h, 0, 0.0).unwrap(), &h));
        assert!(close(
            &apply_pr(&h, 0, FRAC_PI_4).unwrap(),
            &sup(&[(r, "H"), (r, "V")])
        ));
        let hv = ket("HV 0");
        assert!(close(
            &apply_pr(&hv, 0, FRAC_PI_4).unwrap(),
            &sup(&[(r, "V2 0"), (-r, "H2 0")])
        ));
    }

    #[test]
    fn pr_quarter_turn_flips_polarization() {
        assert!(close(
            &apply_pr(&ket("H"), 0, FRAC_PI_2).unwrap(),
            &ket("V")
        ));
        assert!(close(
            &apply_pr(&ket("V"), 0, FRAC_PI_2).unwrap(),
            &sup(&[(-1.0, "H")])
        ));
    }

    #[test]
    fn phase_examples() {
        assert!(close(
            &apply_ps(&ket("V"), 0, PI).unwrap(),
            &sup(&[(-1.0, "V")])
        ));
        assert!(close(
            &apply_ps(&ket("0"), 0, FRAC_PI_2).unwrap(),
            &ket("0")
        ));
        assert!(close(&apply_pdps(&ket("H"), 0, PI).unwrap(), &ket("H")));
        let v2 = ket("V2");
        let shifted = apply_pdps(&v2, 0, FRAC_PI_4).unwrap();
        assert!(
            (shifted.amplitude(&"V2".parse().unwrap()) - Complex64::new(0.0, 1.0)).norm() < 1e-15
        );

        let r = FRAC_1_SQRT_2;
        let phi_minus = sup(&[(r, "HH"), (-r, "VV")]);
        let phi_plus = sup(&[(r, "HH"), (r, "VV")]);
        assert!(close(&apply_pdps(&phi_minus, 0, PI).unwrap(), &phi_plus));
    }

    #[test]
    fn pbs_examples() {
        assert!(close(&apply_pbs(&ket("H0"), 0, 1).unwrap(), &ket("H0")));
        assert!(close(&apply_pbs(&ket("V0"), 0, 1).unwrap(), &ket("0V")));
        assert!(matches!(
            apply_pbs(&ket("V0"), 1, 1),
            Err(Error::DuplicateMode(1))
        ));
        assert!(matches!(
            apply_pbs(&ket("V0"), 0, 2),
            Err(Error::BadMode { .. })
        ));
    }

    #[test]
    fn pbs_on_two_bell_pairs() {
        let r = FRAC_1_SQRT_2;
        let phi = sup(&[(r, "HH"), (r, "VV")]);
        let out = apply_pbs(&phi.tensor(&phi).unwrap(), 1, 2)
            .unwrap()
            .reorder_modes(&[0, 1, 3, 2])
            .unwrap();
        let expected = sup(&[
            (0.5, "H H H H"),
            (0.5, "V V V V"),
            (0.5, "V 0 H HV"),
            (0.5, "H HV V 0"),
        ]);
        assert!(close(&out, &expected));
    }

    #[test]
    fn bs_examples() {
        let r = FRAC_1_SQRT_2;
        assert!(close(
            &apply_bs(&ket("H0"), 0, 1).unwrap(),
            &sup(&[(r, "H0"), (r, "0H")])
        ));
        // Hong-Ou-Mandel bunching
        assert!(close(
            &apply_bs(&ket("HH"), 0, 1).unwrap(),
            &sup(&[(r, "H2 0"), (-r, "0 H2")])
        ));
    }

    #[test]
    fn bs_squared_is_identity() {
        // pinned single-photon matrix of the chosen convention
        let r = FRAC_1_SQRT_2;
        let from_a = apply_bs(&ket("H0"), 0, 1).unwrap();
        let from_b = apply_bs(&ket("0H"), 0, 1).unwrap();
        let m = [
            [
                from_a.amplitude(&"H0".parse().unwrap()),
                from_b.amplitude(&"H0".parse().unwrap()),
            ],
            [
                from_a.amplitude(&"0H".parse().unwrap()),
                from_b.amplitude(&"0H".parse().unwrap()),
            ],
        ];
        let expected = [[r, r], [r, -r]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((m[i][j] - re(expected[i][j])).norm() < 1e-15);
            }
        }
        for k in ["HV", "H2 0", "V H", "HV V"] {
            let s = ket(k);
            let twice = apply_bs(&apply_bs(&s, 0, 1).unwrap(), 0, 1).unwrap();
            assert!(close(&twice, &s), "BS² ≠ 1 on {k}");
        }
    }

    #[test]
    fn descriptor_dispatch() {
        let d = ElementDescriptor::pdps(0, PI);
        assert!(close(
            &apply_element(&ket("V"), &d).unwrap(),
            &sup(&[(-1.0, "V")])
        ));
        let d = ElementDescriptor::pr(0, FRAC_PI_4);
        let r = FRAC_1_SQRT_2;
        assert!(close(
            &apply_element(&ket("H"), &d).unwrap(),
            &sup(&[(r, "H"), (r, "V")])
        ));
        let s = sup(&[(0.6, "H V"), (0.8, "V2 0")]);
        assert_eq!(
            apply_element(&s, &ElementDescriptor::bs(0, 1)).unwrap(),
            apply_bs(&s, 0, 1).unwrap()
        );
    }

    #[test]
    fn descriptor_validation() {
        assert!(matches!(
            ElementDescriptor::new(ElementKind::Bs, vec![0]),
            Err(Error::Arity {
                expected: 2,
                got: 1,
                ..
            })
        ));
        assert!(matches!(
            ElementDescriptor::new(ElementKind::Pbs, vec![2, 2]),
            Err(Error::DuplicateMode(2))
        ));
    }

    #[test]
    fn descriptor_json() {
        let circuit = vec![
            ElementDescriptor::bs(0, 1),
            ElementDescriptor::pr(1, FRAC_PI_4),
            ElementDescriptor::pdps(0, PI),
        ];
        let json = serde_json::to_string(&circuit).unwrap();
        assert!(json.starts_with(
            r#"[{"kind":"BS","targets":[0,1]},{"kind":"PR","theta":0.7853981633974483"#
        ));
        let back: Vec<ElementDescriptor> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, circuit);
        assert!(
            serde_json::from_str::<ElementDescriptor>(r#"{"kind":"PS","targets":[0]}"#).is_err()
        );
        assert!(
            serde_json::from_str::<ElementDescriptor>(r#"{"kind":"XX","targets":[0]}"#).is_err()
        );
    }

    #[test]
    fn circuit_matches_manual_application() {
        let s = sup(&[(0.6, "H 0"), (0.8, "0 V")]);
        let circuit = [ElementDescriptor::pbs(0, 1), ElementDescriptor::pr(0, 0.3)];
        let manual = apply_pr(&apply_pbs(&s, 0, 1).unwrap(), 0, 0.3).unwrap();
        assert!(equal_up_to_global_phase(
            &apply_circuit(&s, &circuit).unwrap(),
            &manual,
            1e-12
        ));
    }
}
