//! Scenario harness: built-in experiments, single runs, parameter sweeps,
//! and the dense cross-check.
//!
//! [`run_scenario`] dispatches on the regime. Quantum runs propagate the
//! photon state, enumerate detection histories, tabulate per-detector count
//! distributions, and condition on the observation when one is given.
//! Classical runs propagate field amplitudes; the backprop regime
//! additionally masks the output to the observed arms (all arms when nothing
//! is observed) and runs the circuit in reverse. Every probability table is
//! checked to sum to 1 before it is reported.

pub mod report;
pub mod scenario;

pub use report::{
    ClassicalReport, ForwardLine, HistoryLine, IntensityLine, ModeCounts, OutputFormat,
    PosteriorLine, QuantumReport, Report, render_report, render_sweep,
};
pub use scenario::{ElementParams, ElementSpec, Regime, Scenario, SweepSpec};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::classical::{back_propagate, propagate, FieldState};
use crate::density::count_distribution;
use crate::error::{Error, Result};
use crate::fock::{FockBasis, NORM_TOLERANCE};
use crate::retrodict::{enumerate_histories, label_histories, posterior, two_source_labels};

/// The dense cross-check refuses bases larger than this.
pub const ORACLE_BASIS_LIMIT: usize = 1000;

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 3] = ["single-photon", "penrose-fig3", "penrose-classical"];

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Attach the dense cross-check's maximum deviation to the report.
    pub oracle: bool,
}

/// Loads a shipped scenario by name.
pub fn builtin(name: &str) -> Result<Scenario> {
    let text = match name {
        "single-photon" => include_str!(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../scenarios/single_photon.scn"
        )),
        "penrose-fig3" => include_str!(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../scenarios/penrose_fig3.scn"
        )),
        "penrose-classical" => include_str!(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../scenarios/penrose_classical.scn"
        )),
        other => {
            return Err(Error::ScenarioSemantic(format!(
                "unknown builtin '{other}'; available: {}",
                BUILTIN_NAMES.join(", ")
            )))
        }
    };
    let mut scenario = Scenario::parse(text).map_err(|err| err.in_scenario(name))?;
    scenario.name = name.to_string();
    Ok(scenario)
}

/// Runs one scenario and assembles its report. Deterministic: identical
/// scenarios yield identical reports.
pub fn run_scenario(scenario: &Scenario, options: &RunOptions) -> Result<Report> {
    run_inner(scenario, options).map_err(|err| err.in_scenario(&scenario.name))
}

fn run_inner(scenario: &Scenario, options: &RunOptions) -> Result<Report> {
    scenario.validate()?;
    let mut report = Report {
        scenario_name: scenario.name.clone(),
        settings: scenario.echo_settings(),
        quantum: None,
        classical: None,
        oracle_max_deviation: None,
    };
    match scenario.regime {
        Regime::Quantum => {
            report.quantum = Some(run_quantum(scenario)?);
            if options.oracle {
                report.oracle_max_deviation = Some(oracle_deviation(scenario)?);
            }
        }
        Regime::Classical | Regime::ClassicalBackprop => {
            if options.oracle {
                return Err(Error::ScenarioSemantic(
                    "the dense cross-check applies to quantum scenarios only".into(),
                ));
            }
            report.classical = Some(run_classical(scenario)?);
        }
    }
    Ok(report)
}

fn run_quantum(scenario: &Scenario) -> Result<QuantumReport> {
    let circuit = scenario.circuit()?;
    let initial = scenario.initial_state()?;
    let forward = circuit.run(&initial)?;

    let forward_lines: Vec<ForwardLine> = forward
        .terms()
        .map(|(occupation, amplitude)| ForwardLine {
            outcome: occupation.to_string(),
            re: amplitude.re,
            im: amplitude.im,
            probability: amplitude.norm_sqr(),
        })
        .collect();
    check_sum(
        "forward state probabilities",
        forward_lines.iter().map(|line| line.probability),
    )?;

    let mut histories = enumerate_histories(&forward)?;
    if is_two_source_apparatus(scenario) {
        label_histories(&mut histories, &two_source_labels());
    }
    check_sum(
        "history probabilities",
        histories.iter().map(|h| h.probability),
    )?;
    let history_lines = histories
        .iter()
        .map(|h| HistoryLine {
            label: h.label_text(),
            outcome: h.outcome.to_string(),
            probability: h.probability,
        })
        .collect();

    let mut counts = Vec::with_capacity(scenario.num_modes);
    for mode in 0..scenario.num_modes {
        let probabilities = count_distribution(&forward, mode)?;
        check_sum(
            &format!("count distribution at d{}", mode + 1),
            probabilities.iter().copied(),
        )?;
        counts.push(ModeCounts {
            mode,
            probabilities,
        });
    }

    let posterior_lines = match scenario.detection_record()? {
        Some(record) => {
            let conditioned = posterior(&histories, &record)?;
            check_sum(
                "posterior probabilities",
                conditioned.entries().iter().map(|e| e.probability),
            )?;
            Some(
                conditioned
                    .entries()
                    .iter()
                    .map(|entry| PosteriorLine {
                        label: entry.history.label_text(),
                        outcome: entry.history.outcome.to_string(),
                        prior: entry.history.probability,
                        posterior: entry.probability,
                    })
                    .collect(),
            )
        }
        None => None,
    };

    Ok(QuantumReport {
        forward: forward_lines,
        histories: history_lines,
        counts,
        posterior: posterior_lines,
    })
}

fn run_classical(scenario: &Scenario) -> Result<ClassicalReport> {
    let circuit = scenario.circuit()?;
    let field = scenario.initial_field()?;
    let forward = propagate(&field, &circuit)?;

    let retrodicted = match scenario.regime {
        Regime::ClassicalBackprop => {
            // Observation counts carry no meaning for fields; only which arms
            // were watched matters. Nothing observed means the complete
            // output field is available.
            let masked = match scenario.detection_record()? {
                Some(record) => forward.keep_modes(&record.observed_modes())?,
                None => forward.clone(),
            };
            Some(intensity_lines(&back_propagate(&masked, &circuit)?))
        }
        _ => None,
    };

    Ok(ClassicalReport {
        forward: intensity_lines(&forward),
        retrodicted,
    })
}

fn intensity_lines(field: &FieldState) -> Vec<IntensityLine> {
    let total = field.total_intensity();
    field
        .intensities()
        .iter()
        .enumerate()
        .map(|(mode, &intensity)| IntensityLine {
            mode,
            intensity,
            fraction: if total > 0.0 { intensity / total } else { 0.0 },
        })
        .collect()
}

fn check_sum(what: &str, probabilities: impl Iterator<Item = f64>) -> Result<()> {
    let sum: f64 = probabilities.sum();
    if (sum - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NumericalValidation(format!(
            "{what} sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

/// The four-mode layout with one photon in each of the first two arms and
/// elements on (1,3), (2,4), (1,2) in that order. Histories of this layout
/// get the letter labels (a) through (g).
fn is_two_source_apparatus(scenario: &Scenario) -> bool {
    if scenario.num_modes != 4 || scenario.regime != Regime::Quantum {
        return false;
    }
    let mut photons = scenario.photons.clone();
    photons.sort_unstable();
    if photons != [0, 1] {
        return false;
    }
    let pairs: Vec<(usize, usize)> = scenario.elements.iter().map(|e| e.modes).collect();
    pairs == [(0, 2), (1, 3), (0, 1)]
}

/// Inclusive linear grid for a sweep spec; a single step sits at `from`.
pub fn sweep_values(spec: &SweepSpec) -> Vec<f64> {
    if spec.steps == 1 {
        return vec![spec.from];
    }
    (0..spec.steps)
        .map(|k| spec.from + (spec.to - spec.from) * k as f64 / (spec.steps - 1) as f64)
        .collect()
}

/// Runs the scenario once per grid value with the named parameter rewritten.
///
/// `e<k>.transmittance`, `e<k>.r_phase`, and `e<k>.t_phase` target element k
/// (1-based, splitter form only). The pseudo-parameter `epsilon` targets the
/// two-source apparatus: it sets the arm-1 coupler's reflectance and the
/// arm-2 coupler's transmittance to the value x with x/(1-x) = sqrt(epsilon),
/// the symmetric realization of the posterior odds epsilon.
pub fn sweep(
    scenario: &Scenario,
    parameter: &str,
    values: &[f64],
    options: &RunOptions,
) -> Result<Vec<(f64, Report)>> {
    let mut runs = Vec::with_capacity(values.len());
    for &value in values {
        let swept = apply_sweep_value(scenario, parameter, value)
            .map_err(|err| err.in_scenario(&scenario.name))?;
        runs.push((value, run_scenario(&swept, options)?));
    }
    Ok(runs)
}

fn apply_sweep_value(scenario: &Scenario, parameter: &str, value: f64) -> Result<Scenario> {
    let mut swept = scenario.clone();
    if parameter == "epsilon" {
        if !is_two_source_apparatus(&swept) {
            return Err(Error::ScenarioSemantic(
                "epsilon sweeps need the two-source apparatus: 4 modes, photons = 1,2, \
                 elements on (1,3), (2,4), (1,2)"
                    .into(),
            ));
        }
        if !(value >= 0.0) {
            return Err(Error::ScenarioSemantic(format!(
                "epsilon must be non-negative, got {value}"
            )));
        }
        let x = value.sqrt() / (1.0 + value.sqrt());
        set_transmittance(&mut swept.elements[0], 1.0 - x, parameter)?;
        set_transmittance(&mut swept.elements[1], x, parameter)?;
    } else if let Some((target, key)) = parameter.split_once('.') {
        let index = target
            .strip_prefix('e')
            .and_then(|rest| rest.parse::<usize>().ok())
            .filter(|&k| k >= 1)
            .ok_or_else(|| unknown_parameter(parameter))?;
        if index > swept.elements.len() {
            return Err(Error::ScenarioSemantic(format!(
                "sweep parameter '{parameter}': scenario has only {} elements",
                swept.elements.len()
            )));
        }
        let element = &mut swept.elements[index - 1];
        match (key, &mut element.params) {
            ("transmittance", ElementParams::Splitter { transmittance, .. }) => {
                *transmittance = value
            }
            ("r_phase", ElementParams::Splitter { r_phase, .. }) => *r_phase = value,
            ("t_phase", ElementParams::Splitter { t_phase, .. }) => *t_phase = value,
            ("transmittance" | "r_phase" | "t_phase", ElementParams::Matrix(_)) => {
                return Err(Error::ScenarioSemantic(format!(
                    "sweep parameter '{parameter}': element {index} uses the matrix form"
                )))
            }
            _ => return Err(unknown_parameter(parameter)),
        }
    } else {
        return Err(unknown_parameter(parameter));
    }
    swept.validate()?;
    Ok(swept)
}

fn unknown_parameter(parameter: &str) -> Error {
    Error::ScenarioSemantic(format!(
        "unknown sweep parameter '{parameter}'; expected 'epsilon' or 'e<k>.<transmittance|r_phase|t_phase>'"
    ))
}

fn set_transmittance(element: &mut ElementSpec, value: f64, parameter: &str) -> Result<()> {
    match &mut element.params {
        ElementParams::Splitter { transmittance, .. } => {
            *transmittance = value;
            Ok(())
        }
        ElementParams::Matrix(_) => Err(Error::ScenarioSemantic(format!(
            "sweep parameter '{parameter}': matrix-form elements are not sweepable"
        ))),
    }
}

/// Propagates the initial state through the dense lift of the whole circuit
/// and returns the largest amplitude difference against the sparse run.
pub fn oracle_check(scenario: &Scenario) -> Result<f64> {
    oracle_deviation(scenario).map_err(|err| err.in_scenario(&scenario.name))
}

fn oracle_deviation(scenario: &Scenario) -> Result<f64> {
    if scenario.regime != Regime::Quantum {
        return Err(Error::ScenarioSemantic(
            "the dense cross-check applies to quantum scenarios only".into(),
        ));
    }
    let initial = scenario.initial_state()?;
    let basis = FockBasis::fixed_total(scenario.num_modes, initial.max_total())?;
    if basis.len() > ORACLE_BASIS_LIMIT {
        return Err(Error::ResourceLimit(format!(
            "dense cross-check basis has {} states, limit is {ORACLE_BASIS_LIMIT}",
            basis.len()
        )));
    }
    let circuit = scenario.circuit()?;
    let mut dense = DMatrix::<Complex64>::identity(basis.len(), basis.len());
    for element in circuit.elements() {
        dense = element.to_dense(&basis)? * dense;
    }
    let expected = dense * basis.coordinates(&initial)?;
    let actual = basis.coordinates(&circuit.run(&initial)?)?;
    Ok((expected - actual)
        .iter()
        .map(|delta| delta.norm())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn posterior_for(report: &Report, label: &str) -> f64 {
        report
            .quantum
            .as_ref()
            .and_then(|q| q.posterior.as_ref())
            .and_then(|lines| lines.iter().find(|line| line.label == label))
            .map(|line| line.posterior)
            .unwrap_or_else(|| panic!("no posterior line labeled {label}"))
    }

    #[test]
    fn builtin_names_resolve_and_unknown_names_do_not() {
        for name in BUILTIN_NAMES {
            let scenario = builtin(name).unwrap();
            assert_eq!(scenario.name, name);
        }
        let err = builtin("no-such-thing").unwrap_err();
        assert!(err.to_string().contains("unknown builtin"), "{err}");
    }

    #[test]
    fn single_photon_builtin_splits_evenly() {
        let scenario = builtin("single-photon").unwrap();
        let report = run_scenario(&scenario, &RunOptions::default()).unwrap();
        let quantum = report.quantum.unwrap();
        assert_eq!(quantum.histories.len(), 2);
        for line in &quantum.histories {
            assert_abs_diff_eq!(line.probability, 0.5, epsilon = 1e-12);
        }
        assert!(report.classical.is_none());
    }

    #[test]
    fn two_source_builtin_labels_all_seven_histories() {
        let scenario = builtin("penrose-fig3").unwrap();
        let report = run_scenario(&scenario, &RunOptions::default()).unwrap();
        let quantum = report.quantum.unwrap();
        let labels: Vec<&str> = quantum.histories.iter().map(|h| h.label.as_str()).collect();
        let mut sorted = labels.clone();
        sorted.sort_unstable();
        assert_eq!(
            sorted,
            ["(a)", "(b)", "(c)", "(d)", "(e)", "(f)", "(g)"]
        );
    }

    #[test]
    fn observed_two_source_run_reports_the_posterior_odds() {
        let mut scenario = builtin("penrose-fig3").unwrap();
        scenario.observe = Some(vec![(0, 1)]);
        let report = run_scenario(&scenario, &RunOptions::default()).unwrap();
        let epsilon = (0.01 * 0.04) / (0.99 * 0.96);
        assert_abs_diff_eq!(
            posterior_for(&report, "(c)"),
            1.0 / (1.0 + epsilon),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            posterior_for(&report, "(e)"),
            epsilon / (1.0 + epsilon),
            epsilon = 1e-12
        );
    }

    #[test]
    fn classical_backprop_with_complete_output_returns_to_the_source() {
        let scenario = builtin("penrose-classical").unwrap();
        let report = run_scenario(&scenario, &RunOptions::default()).unwrap();
        let classical = report.classical.unwrap();
        assert_abs_diff_eq!(classical.forward[0].intensity, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(classical.forward[1].intensity, 0.5, epsilon = 1e-12);
        let back = classical.retrodicted.unwrap();
        assert_abs_diff_eq!(back[0].intensity, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(back[1].intensity, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn classical_backprop_from_one_arm_splits_again() {
        let mut scenario = builtin("penrose-classical").unwrap();
        scenario.observe = Some(vec![(0, 1)]);
        let report = run_scenario(&scenario, &RunOptions::default()).unwrap();
        let back = report.classical.unwrap().retrodicted.unwrap();
        assert_abs_diff_eq!(back[0].intensity, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(back[1].intensity, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn epsilon_sweep_reproduces_the_posterior_formula() {
        let mut scenario = builtin("penrose-fig3").unwrap();
        scenario.observe = Some(vec![(0, 1)]);
        let values = [1e-1, 1e-2, 1e-4];
        let runs = sweep(&scenario, "epsilon", &values, &RunOptions::default()).unwrap();
        for (value, report) in &runs {
            assert_abs_diff_eq!(
                posterior_for(report, "(c)"),
                1.0 / (1.0 + value),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn symmetric_apparatus_makes_both_candidates_even() {
        let mut scenario = builtin("penrose-fig3").unwrap();
        scenario.observe = Some(vec![(0, 1)]);
        let runs = sweep(&scenario, "epsilon", &[1.0], &RunOptions::default()).unwrap();
        assert_abs_diff_eq!(posterior_for(&runs[0].1, "(c)"), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(posterior_for(&runs[0].1, "(e)"), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn element_parameter_sweep_moves_the_split() {
        let scenario = builtin("single-photon").unwrap();
        let runs = sweep(
            &scenario,
            "e1.transmittance",
            &[0.0, 0.25, 1.0],
            &RunOptions::default(),
        )
        .unwrap();
        for (value, report) in &runs {
            let counts = &report.quantum.as_ref().unwrap().counts;
            assert_abs_diff_eq!(counts[0].probabilities[1], *value, epsilon = 1e-12);
        }
    }

    #[test]
    fn sweep_grid_is_inclusive_and_single_step_degenerates() {
        let spec = SweepSpec {
            parameter: "e1.transmittance".into(),
            from: 0.0,
            to: 1.0,
            steps: 5,
        };
        assert_eq!(sweep_values(&spec), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let single = SweepSpec { steps: 1, ..spec };
        assert_eq!(sweep_values(&single), vec![0.0]);
    }

    #[test]
    fn unknown_sweep_parameters_are_rejected() {
        let scenario = builtin("single-photon").unwrap();
        for parameter in ["frequency", "e0.transmittance", "e9.transmittance", "e1.matrix"] {
            let result = sweep(&scenario, parameter, &[0.5], &RunOptions::default());
            assert!(result.is_err(), "parameter {parameter} should be rejected");
        }
    }

    #[test]
    fn epsilon_sweeps_need_the_two_source_layout() {
        let scenario = builtin("single-photon").unwrap();
        assert!(sweep(&scenario, "epsilon", &[0.1], &RunOptions::default()).is_err());
    }

    #[test]
    fn oracle_deviation_is_zero_for_an_empty_circuit() {
        let scenario = Scenario {
            name: "empty".into(),
            num_modes: 2,
            photons: vec![0],
            elements: Vec::new(),
            observe: None,
            regime: Regime::Quantum,
            sweep: None,
        };
        assert_eq!(oracle_check(&scenario).unwrap(), 0.0);
    }

    #[test]
    fn oracle_deviation_is_tiny_for_the_two_source_builtin() {
        let scenario = builtin("penrose-fig3").unwrap();
        assert!(oracle_check(&scenario).unwrap() < 1e-12);
    }

    #[test]
    fn oracle_refuses_oversized_bases() {
        let scenario = Scenario {
            name: "big".into(),
            num_modes: 30,
            photons: vec![0, 1, 2, 3],
            elements: Vec::new(),
            observe: None,
            regime: Regime::Quantum,
            sweep: None,
        };
        let err = oracle_check(&scenario).unwrap_err();
        assert!(
            matches!(err.root(), Error::ResourceLimit(_)),
            "unexpected error: {err}"
        );
    }

    #[test]
    fn reports_render_byte_identically_across_runs() {
        let mut scenario = builtin("penrose-fig3").unwrap();
        scenario.observe = Some(vec![(0, 1), (3, 1)]);
        let options = RunOptions { oracle: true };
        let first = render_report(&run_scenario(&scenario, &options).unwrap(), OutputFormat::Tsv);
        let second = render_report(&run_scenario(&scenario, &options).unwrap(), OutputFormat::Tsv);
        assert_eq!(first, second);
        assert!(first.contains("posterior\t(c)\t"));
    }
}
