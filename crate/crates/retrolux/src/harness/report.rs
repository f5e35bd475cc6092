//! Report assembly and rendering.
//!
//! A [`Report`] holds everything one scenario run produced. Two renderings
//! exist: `Table` for reading and `Tsv` for machines. Both are deterministic,
//! and the TSV form prints every number with 12 significant digits so repeat
//! runs are byte-identical.

use std::fmt::Write as _;

/// Output flavor for rendered reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Table,
    Tsv,
}

/// One scenario run's results.
#[derive(Clone, Debug)]
pub struct Report {
    pub scenario_name: String,
    /// Echo of the settings the run actually used (sweeps rewrite them).
    pub settings: Vec<(String, String)>,
    pub quantum: Option<QuantumReport>,
    pub classical: Option<ClassicalReport>,
    /// Largest |sparse - dense| amplitude difference, when the cross-check ran.
    pub oracle_max_deviation: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct QuantumReport {
    pub forward: Vec<ForwardLine>,
    pub histories: Vec<HistoryLine>,
    pub counts: Vec<ModeCounts>,
    pub posterior: Option<Vec<PosteriorLine>>,
}

/// One basis term of the propagated state.
#[derive(Clone, Debug)]
pub struct ForwardLine {
    pub outcome: String,
    pub re: f64,
    pub im: f64,
    pub probability: f64,
}

/// One detection history (outcome with nonzero probability).
#[derive(Clone, Debug)]
pub struct HistoryLine {
    pub label: String,
    pub outcome: String,
    pub probability: f64,
}

/// Photon-count distribution at one detector.
#[derive(Clone, Debug)]
pub struct ModeCounts {
    /// 0-based mode.
    pub mode: usize,
    /// Index n holds P(n photons).
    pub probabilities: Vec<f64>,
}

/// One history's prior and its weight after conditioning on the observation.
#[derive(Clone, Debug)]
pub struct PosteriorLine {
    pub label: String,
    pub outcome: String,
    pub prior: f64,
    pub posterior: f64,
}

#[derive(Clone, Debug)]
pub struct ClassicalReport {
    pub forward: Vec<IntensityLine>,
    /// Present in the backprop regime: intensities after masking to the
    /// observed arms and running the circuit in reverse.
    pub retrodicted: Option<Vec<IntensityLine>>,
}

#[derive(Clone, Debug)]
pub struct IntensityLine {
    /// 0-based mode.
    pub mode: usize,
    pub intensity: f64,
    pub fraction: f64,
}

pub fn render_report(report: &Report, format: OutputFormat) -> String {
    match format {
        OutputFormat::Tsv => render_tsv(report),
        OutputFormat::Table => render_table(report),
    }
}

/// Renders a sweep as one block per grid point, each preceded by the swept
/// parameter value.
pub fn render_sweep(parameter: &str, runs: &[(f64, Report)], format: OutputFormat) -> String {
    let mut out = String::new();
    for (value, report) in runs {
        match format {
            OutputFormat::Tsv => {
                let _ = writeln!(out, "sweep\t{parameter}\t{}", sig(*value));
                out.push_str(&render_tsv(report));
            }
            OutputFormat::Table => {
                let _ = writeln!(out, "=== {parameter} = {value:.6} ===");
                out.push_str(&render_table(report));
                out.push('\n');
            }
        }
    }
    out
}

fn sig(x: f64) -> String {
    format!("{x:.11e}")
}

fn render_tsv(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario\tname\t{}", report.scenario_name);
    for (key, value) in &report.settings {
        let _ = writeln!(out, "setting\t{key}\t{value}");
    }
    if let Some(quantum) = &report.quantum {
        for line in &quantum.forward {
            let _ = writeln!(
                out,
                "state\t{}\t{}\t{}\t{}",
                line.outcome,
                sig(line.re),
                sig(line.im),
                sig(line.probability)
            );
        }
        for line in &quantum.histories {
            let _ = writeln!(
                out,
                "history\t{}\t{}\t{}",
                line.label,
                line.outcome,
                sig(line.probability)
            );
        }
        for counts in &quantum.counts {
            for (n, probability) in counts.probabilities.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "count\td{}\t{n}\t{}",
                    counts.mode + 1,
                    sig(*probability)
                );
            }
        }
        if let Some(posterior) = &quantum.posterior {
            for line in posterior {
                let _ = writeln!(
                    out,
                    "posterior\t{}\t{}\t{}\t{}",
                    line.label,
                    line.outcome,
                    sig(line.prior),
                    sig(line.posterior)
                );
            }
        }
    }
    if let Some(classical) = &report.classical {
        for line in &classical.forward {
            let _ = writeln!(
                out,
                "intensity\tforward\td{}\t{}\t{}",
                line.mode + 1,
                sig(line.intensity),
                sig(line.fraction)
            );
        }
        if let Some(retrodicted) = &classical.retrodicted {
            for line in retrodicted {
                let _ = writeln!(
                    out,
                    "intensity\tretrodicted\td{}\t{}\t{}",
                    line.mode + 1,
                    sig(line.intensity),
                    sig(line.fraction)
                );
            }
        }
    }
    if let Some(deviation) = report.oracle_max_deviation {
        let _ = writeln!(out, "oracle\tmax_deviation\t{}", sig(deviation));
    }
    out
}

fn render_table(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {}", report.scenario_name);
    for (key, value) in &report.settings {
        let _ = writeln!(out, "  {key:<10} {value}");
    }
    if let Some(quantum) = &report.quantum {
        let _ = writeln!(out, "\nforward state");
        let _ = writeln!(out, "  {:<14} {:>10} {:>10} {:>12}", "outcome", "re", "im", "probability");
        for line in &quantum.forward {
            let _ = writeln!(
                out,
                "  {:<14} {:>10.6} {:>10.6} {:>12.6}",
                line.outcome, line.re, line.im, line.probability
            );
        }
        let _ = writeln!(out, "\nhistories");
        let _ = writeln!(out, "  {:<6} {:<14} {:>12}", "label", "outcome", "probability");
        for line in &quantum.histories {
            let label = if line.label.is_empty() { "-" } else { &line.label };
            let _ = writeln!(
                out,
                "  {:<6} {:<14} {:>12.6}",
                label, line.outcome, line.probability
            );
        }
        let _ = writeln!(out, "\ndetector count probabilities");
        for counts in &quantum.counts {
            let cells: Vec<String> = counts
                .probabilities
                .iter()
                .enumerate()
                .map(|(n, p)| format!("P({n})={p:.6}"))
                .collect();
            let _ = writeln!(out, "  d{}: {}", counts.mode + 1, cells.join("  "));
        }
        if let Some(posterior) = &quantum.posterior {
            let _ = writeln!(out, "\nposterior over histories");
            let _ = writeln!(
                out,
                "  {:<6} {:<14} {:>12} {:>12}",
                "label", "outcome", "prior", "posterior"
            );
            for line in posterior {
                let label = if line.label.is_empty() { "-" } else { &line.label };
                let _ = writeln!(
                    out,
                    "  {:<6} {:<14} {:>12.6} {:>12.6}",
                    label, line.outcome, line.prior, line.posterior
                );
            }
        }
    }
    if let Some(classical) = &report.classical {
        let _ = writeln!(out, "\nforward intensities");
        let _ = writeln!(out, "  {:<6} {:>12} {:>10}", "mode", "intensity", "fraction");
        for line in &classical.forward {
            let _ = writeln!(
                out,
                "  d{:<5} {:>12.6} {:>10.6}",
                line.mode + 1,
                line.intensity,
                line.fraction
            );
        }
        if let Some(retrodicted) = &classical.retrodicted {
            let _ = writeln!(out, "\nretrodicted intensities");
            let _ = writeln!(out, "  {:<6} {:>12} {:>10}", "mode", "intensity", "fraction");
            for line in retrodicted {
                let _ = writeln!(
                    out,
                    "  d{:<5} {:>12.6} {:>10.6}",
                    line.mode + 1,
                    line.intensity,
                    line.fraction
                );
            }
        }
    }
    if let Some(deviation) = report.oracle_max_deviation {
        let _ = writeln!(out, "\noracle max deviation: {deviation:.3e}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        Report {
            scenario_name: "sample".into(),
            settings: vec![("modes".into(), "2".into())],
            quantum: Some(QuantumReport {
                forward: vec![ForwardLine {
                    outcome: "(1,0)".into(),
                    re: std::f64::consts::FRAC_1_SQRT_2,
                    im: 0.0,
                    probability: 0.5,
                }],
                histories: vec![HistoryLine {
                    label: String::new(),
                    outcome: "(1,0)".into(),
                    probability: 0.5,
                }],
                counts: vec![ModeCounts {
                    mode: 0,
                    probabilities: vec![0.5, 0.5],
                }],
                posterior: None,
            }),
            classical: None,
            oracle_max_deviation: Some(3.2e-16),
        }
    }

    #[test]
    fn tsv_lines_are_tab_separated_records() {
        let text = render_report(&sample(), OutputFormat::Tsv);
        assert!(text.starts_with("scenario\tname\tsample\n"));
        assert!(text.contains("state\t(1,0)\t7.07106781187e-1\t0.00000000000e0\t5.00000000000e-1\n"));
        assert!(text.contains("count\td1\t0\t5.00000000000e-1\n"));
        assert!(text.contains("oracle\tmax_deviation\t3.20000000000e-16\n"));
    }

    #[test]
    fn tsv_rendering_is_deterministic() {
        let report = sample();
        assert_eq!(
            render_report(&report, OutputFormat::Tsv),
            render_report(&report, OutputFormat::Tsv)
        );
    }

    #[test]
    fn table_mentions_every_section() {
        let text = render_report(&sample(), OutputFormat::Table);
        for needle in ["scenario: sample", "forward state", "histories", "count", "oracle"] {
            assert!(text.contains(needle), "missing {needle:?} in:\n{text}");
        }
    }

    #[test]
    fn sweep_blocks_carry_the_grid_value() {
        let runs = vec![(0.1, sample()), (0.2, sample())];
        let tsv = render_sweep("epsilon", &runs, OutputFormat::Tsv);
        assert!(tsv.contains("sweep\tepsilon\t1.00000000000e-1\n"));
        assert!(tsv.contains("sweep\tepsilon\t2.00000000000e-1\n"));
        let table = render_sweep("epsilon", &runs, OutputFormat::Table);
        assert!(table.contains("=== epsilon = 0.100000 ==="));
    }
}
