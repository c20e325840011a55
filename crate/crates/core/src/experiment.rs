//! Named experiments: exact enumeration or seeded sampling, with JSON and
//! CSV reports.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::elements::{apply_circuit, ElementDescriptor};
use crate::ensemble::Disposition;
use crate::error::{Error, Result};
use crate::fock::{equal_up_to_global_phase, PureState, DEFAULT_PHOTON_CAP};
use crate::gadgets::{
    self, cz_reference, ghz_plus, phi_plus, phi_plus_d, t1_prime, MATCH_TOLERANCE,
};
use crate::oracle::{
    enumerate_exact, fidelity, verify_all, DensityMatrix, GadgetName, OracleRow, TableReport,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    B2g,
    G2a,
    A2c,
    Cz,
    Pipeline,
    PidChain,
    Verify,
    RunCircuit,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 8] = [
        ExperimentName::B2g,
        ExperimentName::G2a,
        ExperimentName::A2c,
        ExperimentName::Cz,
        ExperimentName::Pipeline,
        ExperimentName::PidChain,
        ExperimentName::Verify,
        ExperimentName::RunCircuit,
    ];

    fn gadget(self) -> Option<GadgetName> {
        match self {
            ExperimentName::B2g => Some(GadgetName::B2g),
            ExperimentName::G2a => Some(GadgetName::G2a),
            ExperimentName::A2c => Some(GadgetName::A2c),
            ExperimentName::Cz => Some(GadgetName::Cz),
            ExperimentName::Pipeline => Some(GadgetName::Pipeline),
            ExperimentName::PidChain => Some(GadgetName::Pid),
            ExperimentName::Verify | ExperimentName::RunCircuit => None,
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentName::B2g => "b2g",
            ExperimentName::G2a => "g2a",
            ExperimentName::A2c => "a2c",
            ExperimentName::Cz => "cz",
            ExperimentName::Pipeline => "pipeline",
            ExperimentName::PidChain => "pid-chain",
            ExperimentName::Verify => "verify",
            ExperimentName::RunCircuit => "run-circuit",
        })
    }
}

impl FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentName::ALL
            .into_iter()
            .find(|e| e.to_string() == s)
            .ok_or_else(|| Error::UnknownExperiment(s.to_owned()))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    #[default]
    Enumerate,
    Sample,
}

impl FromStr for RunMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "enumerate" => Ok(RunMode::Enumerate),
            "sample" => Ok(RunMode::Sample),
            _ => Err(Error::Config(format!("unknown mode `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            _ => Err(Error::Config(format!("unknown format `{s}`"))),
        }
    }
}

pub const DEFAULT_CHAIN_DEPTH: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentName,
    pub mode: RunMode,
    /// Number of draws; required in sample mode.
    pub samples: Option<u64>,
    /// Generator seed; required in sample mode.
    pub seed: Option<u64>,
    /// Replaces the experiment's default input state.
    pub input: Option<PureState>,
    /// Elements for `run-circuit`.
    pub circuit: Option<Vec<ElementDescriptor>>,
    /// `d` for `pid-chain`.
    pub depth: Option<usize>,
    pub emit_states: bool,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentName) -> Self {
        ExperimentConfig {
            experiment,
            mode: RunMode::Enumerate,
            samples: None,
            seed: None,
            input: None,
            circuit: None,
            depth: None,
            emit_states: false,
        }
    }

    pub fn sampled(mut self, samples: u64, seed: u64) -> Self {
        self.mode = RunMode::Sample;
        self.samples = Some(samples);
        self.seed = Some(seed);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == RunMode::Sample {
            match self.samples {
                None | Some(0) => {
                    return Err(Error::Config("sample mode needs --samples ≥ 1".into()))
                }
                Some(_) => {}
            }
            if self.seed.is_none() {
                return Err(Error::Config("sample mode needs --seed".into()));
            }
            if self.experiment == ExperimentName::Verify {
                return Err(Error::Config("verify only runs in enumerate mode".into()));
            }
        }
        match self.experiment {
            ExperimentName::RunCircuit => {
                if self.circuit.is_none() || self.input.is_none() {
                    return Err(Error::Config(
                        "run-circuit needs --circuit and --input".into(),
                    ));
                }
            }
            ExperimentName::PidChain => {
                if self.input.is_some() {
                    return Err(Error::Config("pid-chain takes --depth, not --input".into()));
                }
                let d = self.depth.unwrap_or(DEFAULT_CHAIN_DEPTH);
                if d < 2 || d > DEFAULT_PHOTON_CAP as usize {
                    return Err(Error::Config(format!(
                        "depth {d} outside 2..={DEFAULT_PHOTON_CAP}"
                    )));
                }
            }
            ExperimentName::Verify if self.input.is_some() => {
                return Err(Error::Config("verify takes no input".into()));
            }
            _ => {}
        }
        if let (Some(g), Some(input)) = (self.experiment.gadget(), &self.input) {
            if let Some(m) = g.input_modes() {
                if input.modes() != m {
                    return Err(Error::Config(format!(
                        "{} expects a {m}-mode input, got {}",
                        self.experiment,
                        input.modes()
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutcomeRow {
    pub label: String,
    pub disposition: Disposition,
    /// Exact probability (enumerate) or relative frequency (sample).
    pub probability: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateRow {
    pub label: String,
    pub probability: f64,
    pub state: PureState,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub experiment: ExperimentName,
    pub mode: RunMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub outcomes: Vec<OutcomeRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_probability: Option<f64>,
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<StateRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tables: Option<Vec<TableReport>>,
}

impl RunReport {
    /// False only for a `verify` run with a mismatching row.
    pub fn verified(&self) -> bool {
        self.tables
            .as_ref()
            .is_none_or(|t| t.iter().all(TableReport::passed))
    }

    pub fn total_probability(&self) -> f64 {
        self.outcomes.iter().map(|o| o.probability).sum()
    }

    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Json => {
                let mut s =
                    serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
                s.push('\n');
                Ok(s)
            }
            OutputFormat::Csv => self.to_csv(),
        }
    }

    fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record([
            "experiment",
            "label",
            "disposition",
            "probability_or_frequency",
        ])
        .map_err(io)?;
        let name = self.experiment.to_string();
        for o in &self.outcomes {
            w.write_record([
                &name,
                &o.label,
                &o.disposition.to_string(),
                &o.probability.to_string(),
            ])
            .map_err(io)?;
        }
        for t in self.tables.iter().flatten() {
            for r in &t.rows {
                let label = format!("table{}:{}", t.table_id, r.name);
                let verdict = if r.matched { "match" } else { "mismatch" };
                w.write_record([&name, &label, verdict, &r.deviation.to_string()])
                    .map_err(io)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

/// What counts as success for a leaf of the branch tree.
enum Target {
    Kept,
    Matching(PureState),
}

impl Target {
    fn accepts(&self, row: &OracleRow) -> bool {
        row.disposition == Disposition::Keep
            && match self {
                Target::Kept => true,
                Target::Matching(s) => equal_up_to_global_phase(&row.state, s, MATCH_TOLERANCE),
            }
    }
}

fn plus_plus() -> Result<PureState> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = gadgets::qubit(
        num_complex::Complex64::new(h, 0.0),
        num_complex::Complex64::new(h, 0.0),
    )?;
    plus.tensor(&plus)
}

pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    match config.experiment {
        ExperimentName::Verify => run_verify(config),
        ExperimentName::RunCircuit => run_circuit(config),
        ExperimentName::PidChain => {
            let d = config.depth.unwrap_or(DEFAULT_CHAIN_DEPTH);
            run_tree(
                config,
                GadgetName::Pid,
                phi_plus_d(d)?,
                Target::Matching(phi_plus_d(d - 1)?),
            )
        }
        ExperimentName::B2g => {
            let input = config
                .input
                .clone()
                .map_or_else(|| phi_plus().tensor(&phi_plus()), Ok)?;
            run_tree(config, GadgetName::B2g, input, Target::Matching(ghz_plus()))
        }
        ExperimentName::G2a => {
            let input = config
                .input
                .clone()
                .map_or_else(|| ghz_plus().tensor(&ghz_plus()), Ok)?;
            run_tree(config, GadgetName::G2a, input, Target::Matching(t1_prime()))
        }
        ExperimentName::A2c => {
            // |++⟩ bunches onto one rail after the split, so it is never kept.
            let input = config
                .input
                .clone()
                .map_or_else(|| PureState::ket("HV"), Ok)?;
            run_tree(config, GadgetName::A2c, input, Target::Kept)
        }
        ExperimentName::Cz | ExperimentName::Pipeline => {
            let input = config
                .input
                .clone()
                .map_or_else(plus_plus, Ok)?
                .normalized()?;
            let target = Target::Matching(cz_reference(&input)?);
            let gadget = config.experiment.gadget().expect("gadget experiment");
            run_tree(config, gadget, input, target)
        }
    }
}

/// `|Φ⁺_d⟩` through one PID with the chain feed-forward, enumerated exactly.
pub fn pid_chain(d: usize) -> Result<RunReport> {
    let mut config = ExperimentConfig::new(ExperimentName::PidChain);
    config.depth = Some(d);
    run(&config)
}

fn run_tree(
    config: &ExperimentConfig,
    gadget: GadgetName,
    input: PureState,
    target: Target,
) -> Result<RunReport> {
    let rows = enumerate_exact(gadget, &input)?;
    let mut metrics = BTreeMap::new();
    let kept: f64 = rows
        .iter()
        .filter(|r| r.disposition == Disposition::Keep)
        .map(|r| r.probability)
        .sum();
    metrics.insert("keep_probability".to_owned(), kept);
    if let Target::Matching(psi) = &target {
        let kept_rows: Vec<(f64, &PureState)> = rows
            .iter()
            .filter(|r| r.disposition == Disposition::Keep)
            .map(|r| (r.probability, &r.state))
            .collect();
        if kept > 0.0 {
            let rho = DensityMatrix::from_mixture(&kept_rows)?.renormalized()?;
            metrics.insert("kept_fidelity".to_owned(), fidelity(&rho, psi)?);
        }
    }
    if gadget == GadgetName::Pipeline {
        // Every leaf that reaches the gate stage carries a prepared ancilla.
        let ancilla: f64 = rows
            .iter()
            .filter(|r| r.label.contains(gadgets::CZ_SITE_1))
            .map(|r| r.probability)
            .sum();
        metrics.insert("ancilla_probability".to_owned(), ancilla);
    }
    let success: Vec<bool> = rows.iter().map(|r| target.accepts(r)).collect();

    let (outcomes, success_probability) = match config.mode {
        RunMode::Enumerate => {
            let p = rows
                .iter()
                .zip(&success)
                .filter(|(_, s)| **s)
                .map(|(r, _)| r.probability)
                .sum();
            (aggregate_rows(&rows, None), p)
        }
        RunMode::Sample => {
            let n = config.samples.expect("validated");
            let counts = sample_counts(&rows, n, config.seed.expect("validated"));
            let hits: u64 = counts
                .iter()
                .zip(&success)
                .filter(|(_, s)| **s)
                .map(|(c, _)| c)
                .sum();
            (
                aggregate_rows(&rows, Some((&counts, n))),
                hits as f64 / n as f64,
            )
        }
    };
    let states = config.emit_states.then(|| {
        rows.iter()
            .zip(&success)
            .filter(|(_, s)| **s)
            .map(|(r, _)| StateRow {
                label: r.label.clone(),
                probability: r.probability,
                state: r.state.clone(),
            })
            .collect()
    });
    Ok(RunReport {
        experiment: config.experiment,
        mode: config.mode,
        samples: config.samples.filter(|_| config.mode == RunMode::Sample),
        seed: config.seed.filter(|_| config.mode == RunMode::Sample),
        outcomes,
        success_probability: Some(success_probability),
        metrics,
        states,
        tables: None,
    })
}

/// Per-label totals. With `counts`, probabilities are replaced by sample
/// frequencies.
fn aggregate_rows(rows: &[OracleRow], counts: Option<(&[u64], u64)>) -> Vec<OutcomeRow> {
    let mut by_label: BTreeMap<&str, (Disposition, f64, u64)> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        let e = by_label.entry(&r.label).or_insert((r.disposition, 0.0, 0));
        e.1 += r.probability;
        if let Some((c, _)) = counts {
            e.2 += c[i];
        }
    }
    by_label
        .into_iter()
        .map(|(label, (disposition, p, c))| OutcomeRow {
            label: label.to_owned(),
            disposition,
            probability: counts.map_or(p, |(_, n)| c as f64 / n as f64),
            count: counts.map(|_| c),
        })
        .collect()
}

/// Draws `n` leaves from the canonical leaf order with ChaCha8.
pub fn sample_counts(rows: &[OracleRow], n: u64, seed: u64) -> Vec<u64> {
    let mut cumulative = Vec::with_capacity(rows.len());
    let mut acc = 0.0;
    for r in rows {
        acc += r.probability;
        cumulative.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; rows.len()];
    if rows.is_empty() {
        return counts;
    }
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * acc;
        let i = cumulative.partition_point(|&c| c <= u).min(rows.len() - 1);
        counts[i] += 1;
    }
    counts
}

fn run_verify(config: &ExperimentConfig) -> Result<RunReport> {
    let tables = verify_all()?;
    let total = tables.iter().map(|t| t.rows.len()).sum::<usize>();
    let matched = tables
        .iter()
        .flat_map(|t| &t.rows)
        .filter(|r| r.matched)
        .count();
    let mut metrics = BTreeMap::new();
    metrics.insert("rows_total".to_owned(), total as f64);
    metrics.insert("rows_matched".to_owned(), matched as f64);
    Ok(RunReport {
        experiment: config.experiment,
        mode: config.mode,
        samples: None,
        seed: None,
        outcomes: Vec::new(),
        success_probability: None,
        metrics,
        states: None,
        tables: Some(tables),
    })
}

fn run_circuit(config: &ExperimentConfig) -> Result<RunReport> {
    let input = config.input.as_ref().expect("validated").normalized()?;
    let circuit = config.circuit.as_deref().expect("validated");
    let out = apply_circuit(&input, circuit)?;
    let mut metrics = BTreeMap::new();
    metrics.insert("norm".to_owned(), out.norm_sqr());
    let count = (config.mode == RunMode::Sample).then(|| config.samples.expect("validated"));
    Ok(RunReport {
        experiment: config.experiment,
        mode: config.mode,
        samples: count,
        seed: config.seed.filter(|_| count.is_some()),
        outcomes: vec![OutcomeRow {
            label: "-".to_owned(),
            disposition: Disposition::Keep,
            probability: 1.0,
            count,
        }],
        success_probability: Some(1.0),
        metrics,
        states: config.emit_states.then(|| {
            vec![StateRow {
                label: "-".to_owned(),
                probability: 1.0,
                state: out,
            }]
        }),
        tables: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    fn enumerate(name: ExperimentName) -> RunReport {
        run(&ExperimentConfig::new(name)).unwrap()
    }

    #[test]
    fn names_round_trip() {
        for e in ExperimentName::ALL {
            assert_eq!(e.to_string().parse::<ExperimentName>().unwrap(), e);
        }
        assert!(matches!(
            "bogus".parse::<ExperimentName>(),
            Err(Error::UnknownExperiment(_))
        ));
    }

    #[test]
    fn b2g_report() {
        let r = enumerate(ExperimentName::B2g);
        assert!(close(r.success_probability.unwrap(), 0.5));
        assert!(close(r.metrics["keep_probability"], 0.75));
        assert!(close(r.metrics["kept_fidelity"], 2.0 / 3.0));
        assert!((r.total_probability() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pipeline_report() {
        let r = enumerate(ExperimentName::Pipeline);
        assert!(close(r.metrics["ancilla_probability"], 0.125));
        assert!(close(r.success_probability.unwrap(), 1.0 / 32.0));
    }

    #[test]
    fn cz_and_g2a_reports() {
        assert!(close(
            enumerate(ExperimentName::Cz).success_probability.unwrap(),
            0.25
        ));
        assert!(close(
            enumerate(ExperimentName::G2a).success_probability.unwrap(),
            0.5
        ));
        assert!(close(
            enumerate(ExperimentName::A2c).success_probability.unwrap(),
            0.5
        ));
    }

    #[test]
    fn pid_chain_depths() {
        for d in 2..=5 {
            let r = pid_chain(d).unwrap();
            assert!(close(r.success_probability.unwrap(), 1.0), "d = {d}");
            assert!(close(r.metrics["kept_fidelity"], 1.0), "d = {d}");
        }
        assert!(matches!(pid_chain(1), Err(Error::Config(_))));
        assert!(matches!(pid_chain(9), Err(Error::Config(_))));
    }

    #[test]
    fn sampling_is_seeded() {
        let cfg = ExperimentConfig::new(ExperimentName::Cz).sampled(2000, 7);
        let a = run(&cfg).unwrap().render(OutputFormat::Json).unwrap();
        let b = run(&cfg).unwrap().render(OutputFormat::Json).unwrap();
        assert_eq!(a, b);
        let r = run(&cfg).unwrap();
        let total: u64 = r.outcomes.iter().map(|o| o.count.unwrap()).sum();
        assert_eq!(total, 2000);
        let other = run(&ExperimentConfig::new(ExperimentName::Cz).sampled(2000, 8)).unwrap();
        assert_ne!(r, other);
    }

    #[test]
    fn sample_mode_requirements() {
        let mut cfg = ExperimentConfig::new(ExperimentName::Cz);
        cfg.mode = RunMode::Sample;
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
        cfg.samples = Some(0);
        cfg.seed = Some(1);
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
        let v = ExperimentConfig::new(ExperimentName::Verify).sampled(10, 1);
        assert!(matches!(run(&v), Err(Error::Config(_))));
    }

    #[test]
    fn input_shape_is_validated() {
        let mut cfg = ExperimentConfig::new(ExperimentName::Cz);
        cfg.input = Some(PureState::ket("HHH").unwrap());
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn verify_report_flags_mismatches() {
        let r = enumerate(ExperimentName::Verify);
        assert!(!r.verified());
        assert_eq!(r.metrics["rows_total"], 28.0);
        assert_eq!(r.metrics["rows_matched"], 25.0);
    }

    #[test]
    fn run_circuit_applies_elements() {
        let mut cfg = ExperimentConfig::new(ExperimentName::RunCircuit);
        cfg.input = Some(PureState::ket("H0").unwrap());
        cfg.circuit = Some(vec![ElementDescriptor::bs(0, 1)]);
        cfg.emit_states = true;
        let r = run(&cfg).unwrap();
        let out = &r.states.unwrap()[0].state;
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn csv_has_fixed_header() {
        let r = enumerate(ExperimentName::B2g);
        let csv = r.render(OutputFormat::Csv).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next(),
            Some("experiment,label,disposition,probability_or_frequency")
        );
        assert_eq!(lines.count(), r.outcomes.len());
    }

    #[test]
    fn emitted_states_are_successes() {
        let mut cfg = ExperimentConfig::new(ExperimentName::G2a);
        cfg.emit_states = true;
        let r = run(&cfg).unwrap();
        let states = r.states.unwrap();
        assert_eq!(states.len(), 4);
        for s in states {
            assert!(equal_up_to_global_phase(&s.state, &t1_prime(), 1e-12));
        }
    }
}
