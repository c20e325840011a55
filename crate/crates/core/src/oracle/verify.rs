//! Reproduction of the transcribed tables from the simulator.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::Serialize;

use crate::detection::{FeedForwardRules, OutcomeLabel};
use crate::ensemble::Branch;
use crate::error::{Error, Result};
use crate::fock::{equal_up_to_global_phase, BasisVector, PureState};
use crate::gadgets::{
    cz_gate_with_rules, cz_reference, cz_rules, ecc, ecc_pre_detection, ghz_plus, t1_prime,
    LabelPair, CZ_SITE_1, CZ_SITE_2, ECC_SITE, MATCH_TOLERANCE,
};

use super::golden::Golden;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RowReport {
    pub name: String,
    pub matched: bool,
    /// Largest amplitude (or probability) difference after alignment.
    pub deviation: f64,
    /// Phase, in radians, removed from the simulated state before comparing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_offset: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableReport {
    pub table_id: u8,
    pub rows: Vec<RowReport>,
}

impl TableReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.matched)
    }

    pub fn max_deviation(&self) -> f64 {
        self.rows.iter().map(|r| r.deviation).fold(0.0, f64::max)
    }
}

/// Deviation of `simulated` from `golden` after removing a global phase.
///
/// Both states are normalized first. The phase reference is the golden
/// amplitude of largest magnitude, the first in canonical order on ties.
pub fn aligned_deviation(simulated: &PureState, golden: &PureState) -> Result<(f64, f64)> {
    if simulated.modes() != golden.modes() {
        return Err(Error::DimensionMismatch {
            left: simulated.modes(),
            right: golden.modes(),
        });
    }
    let sim = simulated.normalized()?;
    let gold = golden.normalized()?;
    let mut reference: Option<(&BasisVector, Complex64)> = None;
    for (k, a) in gold.terms() {
        if reference.is_none_or(|(_, r)| a.norm() > r.norm() + MATCH_TOLERANCE) {
            reference = Some((k, *a));
        }
    }
    let (k, g) = reference.ok_or(Error::ZeroNorm)?;
    let s = sim.amplitude(k);
    let offset = if s.norm() > 0.0 { (s / g).arg() } else { 0.0 };
    let undo = Complex64::from_polar(1.0, -offset);
    let support: BTreeSet<&BasisVector> = sim.terms().chain(gold.terms()).map(|(k, _)| k).collect();
    let deviation = support
        .into_iter()
        .map(|k| (sim.amplitude(k) * undo - gold.amplitude(k)).norm())
        .fold(0.0, f64::max);
    Ok((deviation, offset))
}

fn state_row(name: String, simulated: &PureState, golden: &PureState) -> Result<RowReport> {
    let (deviation, offset) = aligned_deviation(simulated, golden)?;
    Ok(RowReport {
        name,
        matched: deviation <= MATCH_TOLERANCE,
        deviation,
        phase_offset: Some(offset),
        note: None,
    })
}

pub fn verify_table(table_id: u8) -> Result<TableReport> {
    let golden = Golden::load()?;
    let rows = match table_id {
        1 => table1(&golden)?,
        2 => table2(&golden)?,
        3 => table3(&golden)?,
        4 => table4(&golden)?,
        other => return Err(Error::Config(format!("no table {other}; expected 1 to 4"))),
    };
    Ok(TableReport { table_id, rows })
}

pub fn verify_all() -> Result<Vec<TableReport>> {
    (1..=4).map(verify_table).collect()
}

fn table1(golden: &Golden) -> Result<Vec<RowReport>> {
    golden
        .table1
        .iter()
        .map(|row| {
            let (sim, _) = ecc_pre_detection(&row.input_state()?, 0, 1)?;
            state_row(format!("|{}⟩", row.input), &sim, &row.state()?)
        })
        .collect()
}

fn table2(golden: &Golden) -> Result<Vec<RowReport>> {
    golden
        .table2
        .iter()
        .map(|row| {
            let (sim, _) = ecc_pre_detection(&row.input_state()?, 0, 1)?;
            state_row(format!("|{}⟩", row.input), &sim, &row.state()?)
        })
        .collect()
}

fn table3(golden: &Golden) -> Result<Vec<RowReport>> {
    let input = ghz_plus().tensor(&ghz_plus())?;
    let measured = ecc(&input, 1, 4)?;
    let mut rows = Vec::new();
    for row in &golden.table3 {
        let expected = row.state()?;
        for &n in &row.labels {
            let branch = measured
                .branches()
                .iter()
                .find(|b| {
                    b.record.find(ECC_SITE).map(|e| e.label) == Some(OutcomeLabel::Shorthand(n))
                })
                .ok_or_else(|| Error::Golden(format!("outcome |{n}⟩ never occurs")))?;
            rows.push(state_row(format!("|{n}⟩"), &branch.state, &expected)?);
        }
    }
    Ok(rows)
}

fn pair_of(branch: &Branch) -> Option<LabelPair> {
    let digit = |site| match branch.record.find(site)?.label {
        OutcomeLabel::Shorthand(n) => Some(n),
        _ => None,
    };
    Some(LabelPair(digit(CZ_SITE_1)?, digit(CZ_SITE_2)?))
}

/// Kept branches of a CZ run, with their outcome pair.
struct CzRun {
    input: PureState,
    branches: Vec<(LabelPair, Branch)>,
}

impl CzRun {
    fn new(input: PureState, rules: &FeedForwardRules<LabelPair>) -> Result<Self> {
        let result = cz_gate_with_rules(&input, &t1_prime(), rules)?;
        let branches = result
            .ensemble
            .into_branches()
            .into_iter()
            .filter(Branch::is_kept)
            .filter_map(|b| pair_of(&b).map(|p| (p, b)))
            .collect();
        Ok(CzRun { input, branches })
    }

    fn probability(&self, pair: LabelPair) -> f64 {
        self.branches
            .iter()
            .filter(|(p, _)| *p == pair)
            .map(|(_, b)| b.weight)
            .sum()
    }

    fn implements_cz(&self, pair: LabelPair) -> Result<bool> {
        let target = cz_reference(&self.input)?;
        Ok(self
            .branches
            .iter()
            .filter(|(p, _)| *p == pair)
            .all(|(_, b)| equal_up_to_global_phase(&b.state, &target, MATCH_TOLERANCE)))
    }
}

fn cz_inputs() -> Result<Vec<PureState>> {
    let mut inputs = ["HH", "HV", "VH", "VV"]
        .iter()
        .map(|k| PureState::ket(k))
        .collect::<Result<Vec<_>>>()?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus =
        PureState::superposition(&[(Complex64::new(h, 0.0), "H"), (Complex64::new(h, 0.0), "V")])?;
    inputs.push(plus.tensor(&plus)?);
    Ok(inputs)
}

fn table4(golden: &Golden) -> Result<Vec<RowReport>> {
    let shipped_rules = cz_rules();
    let printed_rules = golden.printed_cz_rules()?;
    let inputs = cz_inputs()?;
    let shipped = inputs
        .iter()
        .map(|s| CzRun::new(s.clone(), &shipped_rules))
        .collect::<Result<Vec<_>>>()?;
    let printed = inputs
        .iter()
        .map(|s| CzRun::new(s.clone(), &printed_rules))
        .collect::<Result<Vec<_>>>()?;
    let basis_runs = &shipped[..4];
    let mut rows = Vec::new();
    for row in &golden.table4 {
        for pair in row.label_pairs() {
            let deviation = basis_runs
                .iter()
                .map(|r| (r.probability(pair) - row.probability).abs())
                .fold(0.0, f64::max);
            let mut shipped_ok = true;
            for run in &shipped {
                shipped_ok &= run.implements_cz(pair)?;
            }
            let mut printed_ok = true;
            for run in &printed {
                printed_ok &= run.implements_cz(pair)?;
            }
            let note = match (shipped_ok, printed_ok) {
                (true, true) => "printed post-processing yields CZ",
                (true, false) => {
                    "printed post-processing does not yield CZ; corrected rule yields CZ"
                }
                (false, _) => "post-processing does not yield CZ",
            };
            rows.push(RowReport {
                name: pair.to_string(),
                matched: deviation <= MATCH_TOLERANCE && shipped_ok,
                deviation,
                phase_offset: None,
                note: Some(note.to_string()),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::Rail;
    use std::collections::BTreeMap;

    fn row<'a>(report: &'a TableReport, name: &str) -> &'a RowReport {
        report.rows.iter().find(|r| r.name == name).unwrap()
    }

    #[test]
    fn alignment_removes_global_phase() {
        let g = ghz_plus();
        let rotated = g.scaled(Complex64::from_polar(1.0, 0.7));
        let (dev, off) = aligned_deviation(&rotated, &g).unwrap();
        assert!(dev < 1e-12);
        assert!((off - 0.7).abs() < 1e-12);
        let (dev, _) = aligned_deviation(&crate::gadgets::ghz_minus(), &g).unwrap();
        assert!(dev > 0.5);
    }

    #[test]
    fn table1_matches() {
        let report = verify_table(1).unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.rows.len(), 4);
        assert!(row(&report, "|0H⟩").phase_offset.unwrap().abs() < 1e-12);
    }

    #[test]
    fn table2_only_first_row_matches() {
        let report = verify_table(2).unwrap();
        let matched: Vec<bool> = report.rows.iter().map(|r| r.matched).collect();
        assert_eq!(matched, [true, false, false, false]);
    }

    #[test]
    fn table3_matches_both_classes() {
        let report = verify_table(3).unwrap();
        assert!(report.passed(), "{report:?}");
        let names: Vec<&str> = report.rows.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["|5⟩", "|6⟩", "|3⟩", "|4⟩"]);
    }

    #[test]
    fn table4_probabilities_and_notes() {
        let report = verify_table(4).unwrap();
        assert_eq!(report.rows.len(), 16);
        assert!(report.passed(), "{report:?}");
        let printed_fail = report
            .rows
            .iter()
            .filter(|r| {
                r.note
                    .as_deref()
                    .unwrap()
                    .starts_with("printed post-processing does not")
            })
            .count();
        assert_eq!(printed_fail, 8);
        assert_eq!(
            row(&report, "|11⟩").note.as_deref(),
            Some("printed post-processing yields CZ")
        );
    }

    #[test]
    fn unknown_table_is_a_config_error() {
        assert!(matches!(verify_table(5), Err(Error::Config(_))));
    }

    /// Two-photon rows follow from the single-photon rows: a†_X(a) a†_Y(b)
    /// maps to the product of the two images. Only the `HH` row agrees.
    #[test]
    fn two_photon_rows_follow_from_single_photon_rows() {
        let golden = Golden::load().unwrap();
        let image = |input: &str| -> Vec<(usize, Rail, Complex64)> {
            let r = golden.table1.iter().find(|r| r.input == input).unwrap();
            r.state()
                .unwrap()
                .terms()
                .map(|(k, a)| {
                    let m = (0..4).find(|&m| !k.occupancy(m).is_empty()).unwrap();
                    let rail = if k.occupancy(m).h == 1 {
                        Rail::H
                    } else {
                        Rail::V
                    };
                    (m, rail, *a)
                })
                .collect()
        };
        for r in &golden.table2 {
            let pol: Vec<char> = r.input.chars().collect();
            let first = image(&format!("{}0", pol[0]));
            let second = image(&format!("0{}", pol[1]));
            let mut acc: BTreeMap<BasisVector, Complex64> = BTreeMap::new();
            for &(m1, r1, a1) in &first {
                let s = PureState::vacuum(4).creation_apply(m1, r1).unwrap();
                for &(m2, r2, a2) in &second {
                    for (k, a) in s.creation_apply(m2, r2).unwrap().terms() {
                        *acc.entry(k.clone()).or_default() += a * a1 * a2;
                    }
                }
            }
            let derived = PureState::from_terms(4, acc).unwrap();
            let (sim, _) = ecc_pre_detection(&r.input_state().unwrap(), 0, 1).unwrap();
            let (dev_sim, _) = aligned_deviation(&sim, &derived).unwrap();
            assert!(dev_sim < 1e-12, "{}", r.input);
            let (dev_printed, _) = aligned_deviation(&derived, &r.state().unwrap()).unwrap();
            assert_eq!(dev_printed < 1e-12, r.input == "HH", "{}", r.input);
        }
    }
}
