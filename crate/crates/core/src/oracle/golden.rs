//! Transcribed reference tables, loaded from `data/golden.toml`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::Deserialize;

use crate::detection::{shorthand_ket, Action, FeedForwardRules};
use crate::elements::ElementDescriptor;
use crate::error::{Error, Result};
use crate::fock::{BasisVector, PureState};
use crate::gadgets::LabelPair;

/// Raw TOML source shipped with the crate.
pub const GOLDEN_TOML: &str = include_str!("../../data/golden.toml");

#[derive(Clone, Debug, Deserialize)]
pub struct Golden {
    pub version: u32,
    pub table1: Vec<KetRow>,
    pub table2: Vec<LabelRow>,
    pub table3: Vec<ClassRow>,
    pub table4: Vec<PostRow>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct KetTerm {
    pub ket: String,
    pub phase: i32,
}

#[derive(Clone, Debug, Deserialize)]
pub struct LabelTerm {
    pub label: u8,
    pub phase: i32,
}

/// Pre-detection state for a single-photon two-mode input.
#[derive(Clone, Debug, Deserialize)]
pub struct KetRow {
    pub input: String,
    pub scale: f64,
    pub terms: Vec<KetTerm>,
}

/// Pre-detection state for a two-photon input, written in shorthand labels.
#[derive(Clone, Debug, Deserialize)]
pub struct LabelRow {
    pub input: String,
    pub prefactor: i32,
    pub terms: Vec<LabelTerm>,
}

/// Heralded state of the untouched modes for a class of outcomes.
#[derive(Clone, Debug, Deserialize)]
pub struct ClassRow {
    pub labels: Vec<u8>,
    pub prefactor: i32,
    pub scale: f64,
    pub terms: Vec<KetTerm>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Pr,
    Ps,
    Pdps,
}

/// One printed post-processing operation. `angle` is in units of π and
/// `mode` is 1-based.
#[derive(Clone, Copy, Debug, Deserialize)]
pub struct PrintedOp {
    pub kind: OpKind,
    pub angle: f64,
    pub mode: usize,
}

impl PrintedOp {
    /// Element on the 0-based output modes. A printed "π PR" is the
    /// quarter-turn rotation PR(π/2).
    pub fn descriptor(&self) -> Result<ElementDescriptor> {
        if self.mode == 0 {
            return Err(Error::Golden("post-processing modes are 1-based".into()));
        }
        let m = self.mode - 1;
        Ok(match self.kind {
            OpKind::Pr => ElementDescriptor::pr(m, self.angle * FRAC_PI_2),
            OpKind::Ps => ElementDescriptor::ps(m, self.angle * PI),
            OpKind::Pdps => ElementDescriptor::pdps(m, self.angle * PI),
        })
    }
}

/// Post-processing row for a pair of A2C outcome pairs.
#[derive(Clone, Debug, Deserialize)]
pub struct PostRow {
    pub pairs: Vec<[u8; 2]>,
    pub text: String,
    pub probability: f64,
    pub ops: Vec<PrintedOp>,
}

impl PostRow {
    pub fn label_pairs(&self) -> Vec<LabelPair> {
        self.pairs.iter().map(|p| LabelPair(p[0], p[1])).collect()
    }

    pub fn elements(&self) -> Result<Vec<ElementDescriptor>> {
        self.ops.iter().map(PrintedOp::descriptor).collect()
    }
}

fn phase(units: i32) -> Complex64 {
    Complex64::from_polar(1.0, f64::from(units) * FRAC_PI_4)
}

fn ket_state(scale: f64, prefactor: i32, terms: &[KetTerm]) -> Result<PureState> {
    let vectors = terms
        .iter()
        .map(|t| {
            Ok((
                t.ket.parse::<BasisVector>()?,
                phase(prefactor + t.phase) * scale,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let modes = vectors
        .first()
        .map(|(v, _)| v.modes())
        .ok_or_else(|| Error::Golden("row without terms".into()))?;
    PureState::from_terms(modes, vectors)
}

impl KetRow {
    pub fn input_state(&self) -> Result<PureState> {
        PureState::ket(&self.input)
    }

    pub fn state(&self) -> Result<PureState> {
        ket_state(self.scale, 0, &self.terms)
    }
}

impl LabelRow {
    pub fn input_state(&self) -> Result<PureState> {
        PureState::ket(&self.input)
    }

    /// The printed row, normalized.
    pub fn state(&self) -> Result<PureState> {
        let vectors = self
            .terms
            .iter()
            .map(|t| Ok((shorthand_ket(t.label)?, phase(self.prefactor + t.phase))))
            .collect::<Result<Vec<_>>>()?;
        PureState::from_terms(4, vectors)?.normalized()
    }
}

impl ClassRow {
    pub fn state(&self) -> Result<PureState> {
        ket_state(self.scale, self.prefactor, &self.terms)
    }
}

impl Golden {
    pub fn load() -> Result<Self> {
        Self::parse(GOLDEN_TOML)
    }

    pub fn parse(source: &str) -> Result<Self> {
        toml::from_str(source).map_err(|e| Error::Golden(e.to_string()))
    }

    /// Post-processing table exactly as printed.
    pub fn printed_cz_rules(&self) -> Result<FeedForwardRules<LabelPair>> {
        let mut rules = FeedForwardRules::new("cz.post");
        for row in &self.table4 {
            rules = rules.with(&row.label_pairs(), Action::keep(row.elements()?));
        }
        Ok(rules)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_all_tables() {
        let g = Golden::load().unwrap();
        assert_eq!(g.version, 1);
        assert_eq!(g.table1.len(), 4);
        assert_eq!(g.table2.len(), 4);
        assert_eq!(g.table3.len(), 2);
        assert_eq!(g.table4.len(), 8);
        let pairs: usize = g.table4.iter().map(|r| r.pairs.len()).sum();
        assert_eq!(pairs, 16);
    }

    #[test]
    fn rows_are_normalized() {
        let g = Golden::load().unwrap();
        for row in &g.table1 {
            assert!(
                (row.state().unwrap().norm_sqr() - 1.0).abs() < 1e-12,
                "{}",
                row.input
            );
        }
        for row in &g.table3 {
            assert!((row.state().unwrap().norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn printed_ops_map_to_elements() {
        let op = PrintedOp {
            kind: OpKind::Pr,
            angle: 1.0,
            mode: 2,
        };
        assert_eq!(
            op.descriptor().unwrap(),
            ElementDescriptor::pr(1, FRAC_PI_2)
        );
        let bad = PrintedOp { mode: 0, ..op };
        assert!(bad.descriptor().is_err());
    }

    #[test]
    fn malformed_source_is_reported() {
        assert!(matches!(
            Golden::parse("version = \"x\""),
            Err(Error::Golden(_))
        ));
    }
}
