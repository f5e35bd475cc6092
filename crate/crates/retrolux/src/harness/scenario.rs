//! The scenario file format and its parser.
//!
//! Scenarios are line-oriented `key = value` text in sections. Mode numbers
//! in files are 1-based, matching the detector names `d1`, `d2`, ... used on
//! the command line; everything is 0-based once parsed.
//!
//! ```text
//! # one photon onto arm 1 of a balanced splitter
//! [scenario]
//! modes = 2            # number of optical modes
//! photons = 1          # one photon per listed mode (repeats allowed)
//! regime = quantum     # quantum | classical | classical-backprop
//!
//! [element]            # elements apply in file order
//! modes = 1,2
//! transmittance = 0.5  # |t|^2; r_phase defaults to pi/2, t_phase to 0
//!
//! [observe]            # optional: photon counts seen by detectors
//! d1 = 1
//!
//! [sweep]              # optional: parameter grid
//! parameter = e1.transmittance
//! from = 0.1
//! to = 0.9
//! steps = 9
//! ```
//!
//! An element may instead carry an explicit unitary as `matrix = a_re,a_im,
//! b_re,b_im,c_re,c_im,d_re,d_im` (row-major). Unknown sections and keys are
//! errors, as are out-of-range modes, transmittances outside [0,1], and
//! non-unitary matrices.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::classical::FieldState;
use crate::error::{Error, Result};
use crate::fock::StateVector;
use crate::linopt::{BeamSplitterElement, Circuit};
use crate::retrodict::DetectionRecord;

/// Which physics runs: photon states, classical fields, or classical fields
/// followed by back-propagation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Quantum,
    Classical,
    ClassicalBackprop,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Quantum => "quantum",
            Regime::Classical => "classical",
            Regime::ClassicalBackprop => "classical-backprop",
        }
    }
}

/// One element, either in splitter form (transmittance plus phases) or as an
/// explicit 2x2 unitary.
#[derive(Clone, Debug, PartialEq)]
pub enum ElementParams {
    Splitter {
        transmittance: f64,
        r_phase: f64,
        t_phase: f64,
    },
    Matrix([[Complex64; 2]; 2]),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElementSpec {
    /// 0-based mode pair.
    pub modes: (usize, usize),
    pub params: ElementParams,
}

impl ElementSpec {
    pub fn build(&self) -> Result<BeamSplitterElement> {
        let (i, j) = self.modes;
        match &self.params {
            ElementParams::Splitter {
                transmittance,
                r_phase,
                t_phase,
            } => {
                let t = Complex64::from_polar(transmittance.sqrt(), *t_phase);
                let r = Complex64::from_polar((1.0 - transmittance).sqrt(), *r_phase);
                BeamSplitterElement::symmetric(t, r, i, j)
            }
            ElementParams::Matrix(matrix) => BeamSplitterElement::from_matrix(*matrix, i, j),
        }
    }

    /// Deterministic one-line echo for reports, 1-based modes.
    pub fn describe(&self) -> String {
        let (i, j) = self.modes;
        match &self.params {
            ElementParams::Splitter {
                transmittance,
                r_phase,
                t_phase,
            } => format!(
                "modes={},{} transmittance={} r_phase={} t_phase={}",
                i + 1,
                j + 1,
                sig(*transmittance),
                sig(*r_phase),
                sig(*t_phase)
            ),
            ElementParams::Matrix(m) => {
                let entries: Vec<String> = m
                    .iter()
                    .flatten()
                    .flat_map(|e| [sig(e.re), sig(e.im)])
                    .collect();
                format!("modes={},{} matrix={}", i + 1, j + 1, entries.join(","))
            }
        }
    }
}

fn sig(x: f64) -> String {
    format!("{x:.11e}")
}

/// A parameter grid attached to a scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub parameter: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

/// A full experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub num_modes: usize,
    /// One photon (quantum) or unit source amplitude (classical) per entry,
    /// 0-based.
    pub photons: Vec<usize>,
    pub elements: Vec<ElementSpec>,
    /// Observed (mode, count) pairs, 0-based modes.
    pub observe: Option<Vec<(usize, u32)>>,
    pub regime: Regime,
    pub sweep: Option<SweepSpec>,
}

impl Scenario {
    /// Parses scenario text. Syntax errors carry the line number; semantic
    /// errors name the offending key or element.
    pub fn parse(text: &str) -> Result<Self> {
        Parser::new(text).parse()
    }

    /// Cross-field validation; parsing always ends with this, and
    /// programmatically edited scenarios go through it again when run.
    pub fn validate(&self) -> Result<()> {
        if self.num_modes < 2 {
            return Err(Error::ScenarioSemantic(
                "modes: a scenario needs at least two modes".into(),
            ));
        }
        for &mode in &self.photons {
            if mode >= self.num_modes {
                return Err(Error::ScenarioSemantic(format!(
                    "photons: mode {} out of range for {} modes",
                    mode + 1,
                    self.num_modes
                )));
            }
        }
        for (k, element) in self.elements.iter().enumerate() {
            let (i, j) = element.modes;
            if i >= self.num_modes || j >= self.num_modes {
                return Err(Error::ScenarioSemantic(format!(
                    "element {}: modes {},{} out of range for {} modes",
                    k + 1,
                    i + 1,
                    j + 1,
                    self.num_modes
                )));
            }
            if i == j {
                return Err(Error::ScenarioSemantic(format!(
                    "element {}: modes must be distinct",
                    k + 1
                )));
            }
            if let ElementParams::Splitter { transmittance, .. } = element.params {
                if !(0.0..=1.0).contains(&transmittance) {
                    return Err(Error::ScenarioSemantic(format!(
                        "element {}: transmittance {} outside [0,1]",
                        k + 1,
                        transmittance
                    )));
                }
            }
            // Unitarity check happens at build time; surface it with the
            // element named.
            if let Err(err) = element.build() {
                return Err(Error::ScenarioSemantic(format!("element {}: {err}", k + 1)));
            }
        }
        if let Some(observe) = &self.observe {
            if observe.is_empty() {
                return Err(Error::ScenarioSemantic(
                    "observe: no detector readings given".into(),
                ));
            }
            let mut seen = Vec::new();
            for &(mode, _) in observe {
                if mode >= self.num_modes {
                    return Err(Error::ScenarioSemantic(format!(
                        "observe: d{} out of range for {} modes",
                        mode + 1,
                        self.num_modes
                    )));
                }
                if seen.contains(&mode) {
                    return Err(Error::ScenarioSemantic(format!(
                        "observe: d{} given twice",
                        mode + 1
                    )));
                }
                seen.push(mode);
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.parameter.is_empty() {
                return Err(Error::ScenarioSemantic("sweep: empty parameter name".into()));
            }
            if sweep.steps == 0 {
                return Err(Error::ScenarioSemantic(
                    "sweep: steps must be at least 1".into(),
                ));
            }
            if !sweep.from.is_finite() || !sweep.to.is_finite() {
                return Err(Error::ScenarioSemantic(
                    "sweep: range bounds must be finite".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn circuit(&self) -> Result<Circuit> {
        let elements: Vec<BeamSplitterElement> = self
            .elements
            .iter()
            .map(|spec| spec.build())
            .collect::<Result<_>>()?;
        Circuit::with_elements(self.num_modes, elements)
    }

    /// Photon-number input state: the vacuum with one photon created per
    /// listed mode.
    pub fn initial_state(&self) -> Result<StateVector> {
        let mut state = StateVector::vacuum(self.num_modes)?;
        for &mode in &self.photons {
            state = state.create_photon(mode)?;
        }
        Ok(state)
    }

    /// Classical input field: unit amplitude per listed source mode.
    pub fn initial_field(&self) -> Result<FieldState> {
        FieldState::from_sources(self.num_modes, &self.photons)
    }

    pub fn detection_record(&self) -> Result<Option<DetectionRecord>> {
        match &self.observe {
            Some(pairs) => Ok(Some(DetectionRecord::from_pairs(self.num_modes, pairs)?)),
            None => Ok(None),
        }
    }

    /// Deterministic settings echo for reports.
    pub fn echo_settings(&self) -> Vec<(String, String)> {
        let mut settings = vec![
            ("modes".to_string(), self.num_modes.to_string()),
            (
                "photons".to_string(),
                self.photons
                    .iter()
                    .map(|m| (m + 1).to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("regime".to_string(), self.regime.as_str().to_string()),
        ];
        for (k, element) in self.elements.iter().enumerate() {
            settings.push((format!("element{}", k + 1), element.describe()));
        }
        if let Some(observe) = &self.observe {
            let text = observe
                .iter()
                .map(|(mode, count)| format!("d{}={count}", mode + 1))
                .collect::<Vec<_>>()
                .join(",");
            settings.push(("observe".to_string(), text));
        }
        settings
    }
}

/// Section currently being filled while parsing.
enum Section {
    None,
    Scenario,
    Element(usize),
    Observe,
    Sweep,
}

/// Accumulates raw keys before the final Scenario is assembled.
struct Parser<'t> {
    text: &'t str,
    num_modes: Option<usize>,
    photons: Option<Vec<usize>>,
    regime: Option<Regime>,
    elements: Vec<RawElement>,
    observe: Option<Vec<(usize, u32)>>,
    sweep: Option<RawSweep>,
}

#[derive(Default)]
struct RawElement {
    modes: Option<(usize, usize)>,
    transmittance: Option<f64>,
    r_phase: Option<f64>,
    t_phase: Option<f64>,
    matrix: Option<[[Complex64; 2]; 2]>,
}

#[derive(Default)]
struct RawSweep {
    parameter: Option<String>,
    from: Option<f64>,
    to: Option<f64>,
    steps: Option<usize>,
}

impl<'t> Parser<'t> {
    fn new(text: &'t str) -> Self {
        Self {
            text,
            num_modes: None,
            photons: None,
            regime: None,
            elements: Vec::new(),
            observe: None,
            sweep: None,
        }
    }

    fn parse(mut self) -> Result<Scenario> {
        let mut section = Section::None;
        let mut seen_scenario = false;

        for (index, raw_line) in self.text.lines().enumerate() {
            let line_no = index + 1;
            let line = strip_comment(raw_line).trim();
            if line.is_empty() {
                continue;
            }

            if let Some(header) = line.strip_prefix('[') {
                let name = header.strip_suffix(']').ok_or_else(|| syntax(
                    line_no,
                    "section header is missing the closing ']'",
                ))?;
                section = match name.trim() {
                    "scenario" => {
                        if seen_scenario {
                            return Err(syntax(line_no, "duplicate [scenario] section"));
                        }
                        seen_scenario = true;
                        Section::Scenario
                    }
                    "element" => {
                        self.elements.push(RawElement::default());
                        Section::Element(self.elements.len() - 1)
                    }
                    "observe" => {
                        if self.observe.is_some() {
                            return Err(syntax(line_no, "duplicate [observe] section"));
                        }
                        self.observe = Some(Vec::new());
                        Section::Observe
                    }
                    "sweep" => {
                        if self.sweep.is_some() {
                            return Err(syntax(line_no, "duplicate [sweep] section"));
                        }
                        self.sweep = Some(RawSweep::default());
                        Section::Sweep
                    }
                    other => {
                        return Err(syntax(line_no, &format!("unknown section [{other}]")))
                    }
                };
                if !seen_scenario {
                    return Err(syntax(line_no, "the first section must be [scenario]"));
                }
                continue;
            }

            let (key, value) = line.split_once('=').ok_or_else(|| {
                syntax(line_no, "expected 'key = value' or a [section] header")
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(syntax(line_no, "empty key"));
            }

            match section {
                Section::None => {
                    return Err(syntax(line_no, "key outside of any section"));
                }
                Section::Scenario => self.scenario_key(line_no, key, value)?,
                Section::Element(k) => self.element_key(line_no, k, key, value)?,
                Section::Observe => self.observe_key(line_no, key, value)?,
                Section::Sweep => self.sweep_key(line_no, key, value)?,
            }
        }

        if !seen_scenario {
            return Err(Error::ScenarioSemantic(
                "missing [scenario] section".into(),
            ));
        }
        self.assemble()
    }

    fn scenario_key(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        match key {
            "modes" => {
                check_fresh(line, key, self.num_modes.is_some())?;
                self.num_modes = Some(parse_number(line, key, value)?);
            }
            "photons" => {
                check_fresh(line, key, self.photons.is_some())?;
                self.photons = Some(parse_mode_list(line, key, value)?);
            }
            "regime" => {
                check_fresh(line, key, self.regime.is_some())?;
                self.regime = Some(match value {
                    "quantum" => Regime::Quantum,
                    "classical" => Regime::Classical,
                    "classical-backprop" => Regime::ClassicalBackprop,
                    other => {
                        return Err(Error::ScenarioSemantic(format!(
                            "regime: unknown value '{other}' (line {line})"
                        )))
                    }
                });
            }
            other => return Err(unknown_key(line, "scenario", other)),
        }
        Ok(())
    }

    fn element_key(&mut self, line: usize, index: usize, key: &str, value: &str) -> Result<()> {
        let element = &mut self.elements[index];
        match key {
            "modes" => {
                check_fresh(line, key, element.modes.is_some())?;
                let modes = parse_mode_list(line, key, value)?;
                if modes.len() != 2 {
                    return Err(Error::ScenarioSemantic(format!(
                        "element modes: expected exactly two modes (line {line})"
                    )));
                }
                element.modes = Some((modes[0], modes[1]));
            }
            "transmittance" => {
                check_fresh(line, key, element.transmittance.is_some())?;
                element.transmittance = Some(parse_number(line, key, value)?);
            }
            "r_phase" => {
                check_fresh(line, key, element.r_phase.is_some())?;
                element.r_phase = Some(parse_number(line, key, value)?);
            }
            "t_phase" => {
                check_fresh(line, key, element.t_phase.is_some())?;
                element.t_phase = Some(parse_number(line, key, value)?);
            }
            "matrix" => {
                check_fresh(line, key, element.matrix.is_some())?;
                let floats: Vec<f64> = value
                    .split(',')
                    .map(|part| parse_number(line, key, part.trim()))
                    .collect::<Result<_>>()?;
                if floats.len() != 8 {
                    return Err(Error::ScenarioSemantic(format!(
                        "matrix: expected 8 numbers (re,im per entry, row-major), got {} (line {line})",
                        floats.len()
                    )));
                }
                element.matrix = Some([
                    [
                        Complex64::new(floats[0], floats[1]),
                        Complex64::new(floats[2], floats[3]),
                    ],
                    [
                        Complex64::new(floats[4], floats[5]),
                        Complex64::new(floats[6], floats[7]),
                    ],
                ]);
            }
            other => return Err(unknown_key(line, "element", other)),
        }
        Ok(())
    }

    fn observe_key(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        let mode = key
            .strip_prefix('d')
            .and_then(|rest| rest.parse::<usize>().ok())
            .filter(|&m| m >= 1)
            .ok_or_else(|| unknown_key(line, "observe", key))?;
        let count: u32 = parse_number(line, key, value)?;
        let observe = self.observe.as_mut().expect("observe section started");
        if observe.iter().any(|&(m, _)| m == mode - 1) {
            return Err(Error::ScenarioSemantic(format!(
                "observe: d{mode} given twice (line {line})"
            )));
        }
        observe.push((mode - 1, count));
        Ok(())
    }

    fn sweep_key(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        let sweep = self.sweep.as_mut().expect("sweep section started");
        match key {
            "parameter" => {
                check_fresh(line, key, sweep.parameter.is_some())?;
                sweep.parameter = Some(value.to_string());
            }
            "from" => {
                check_fresh(line, key, sweep.from.is_some())?;
                sweep.from = Some(parse_number(line, key, value)?);
            }
            "to" => {
                check_fresh(line, key, sweep.to.is_some())?;
                sweep.to = Some(parse_number(line, key, value)?);
            }
            "steps" => {
                check_fresh(line, key, sweep.steps.is_some())?;
                sweep.steps = Some(parse_number(line, key, value)?);
            }
            other => return Err(unknown_key(line, "sweep", other)),
        }
        Ok(())
    }

    fn assemble(self) -> Result<Scenario> {
        let num_modes = self
            .num_modes
            .ok_or_else(|| Error::ScenarioSemantic("missing key 'modes'".into()))?;
        let photons = self
            .photons
            .ok_or_else(|| Error::ScenarioSemantic("missing key 'photons'".into()))?;

        let mut elements = Vec::with_capacity(self.elements.len());
        for (k, raw) in self.elements.into_iter().enumerate() {
            let modes = raw.modes.ok_or_else(|| {
                Error::ScenarioSemantic(format!("element {}: missing key 'modes'", k + 1))
            })?;
            let params = match (raw.matrix, raw.transmittance) {
                (Some(_), Some(_)) => {
                    return Err(Error::ScenarioSemantic(format!(
                        "element {}: matrix and transmittance are mutually exclusive",
                        k + 1
                    )))
                }
                (Some(matrix), None) => {
                    if raw.r_phase.is_some() || raw.t_phase.is_some() {
                        return Err(Error::ScenarioSemantic(format!(
                            "element {}: phases only apply to the transmittance form",
                            k + 1
                        )));
                    }
                    ElementParams::Matrix(matrix)
                }
                (None, Some(transmittance)) => ElementParams::Splitter {
                    transmittance,
                    r_phase: raw.r_phase.unwrap_or(FRAC_PI_2),
                    t_phase: raw.t_phase.unwrap_or(0.0),
                },
                (None, None) => {
                    return Err(Error::ScenarioSemantic(format!(
                        "element {}: needs either transmittance or matrix",
                        k + 1
                    )))
                }
            };
            elements.push(ElementSpec { modes, params });
        }

        let sweep = match self.sweep {
            Some(raw) => Some(SweepSpec {
                parameter: raw
                    .parameter
                    .ok_or_else(|| Error::ScenarioSemantic("sweep: missing key 'parameter'".into()))?,
                from: raw
                    .from
                    .ok_or_else(|| Error::ScenarioSemantic("sweep: missing key 'from'".into()))?,
                to: raw
                    .to
                    .ok_or_else(|| Error::ScenarioSemantic("sweep: missing key 'to'".into()))?,
                steps: raw
                    .steps
                    .ok_or_else(|| Error::ScenarioSemantic("sweep: missing key 'steps'".into()))?,
            }),
            None => None,
        };

        let scenario = Scenario {
            name: "scenario".to_string(),
            num_modes,
            photons,
            elements,
            observe: self.observe,
            regime: self.regime.unwrap_or(Regime::Quantum),
            sweep,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

fn syntax(line: usize, message: &str) -> Error {
    Error::ScenarioSyntax {
        line,
        message: message.to_string(),
    }
}

fn unknown_key(line: usize, section: &str, key: &str) -> Error {
    Error::ScenarioSemantic(format!("unknown key '{key}' in [{section}] (line {line})"))
}

fn check_fresh(line: usize, key: &str, already: bool) -> Result<()> {
    if already {
        return Err(Error::ScenarioSemantic(format!(
            "duplicate key '{key}' (line {line})"
        )));
    }
    Ok(())
}

fn parse_number<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| {
        Error::ScenarioSemantic(format!(
            "{key}: cannot parse '{value}' (line {line})"
        ))
    })
}

/// Comma-separated 1-based mode list; empty value means no modes.
fn parse_mode_list(line: usize, key: &str, value: &str) -> Result<Vec<usize>> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|part| {
            let mode: usize = parse_number(line, key, part.trim())?;
            if mode == 0 {
                return Err(Error::ScenarioSemantic(format!(
                    "{key}: modes are numbered from 1 (line {line})"
                )));
            }
            Ok(mode - 1)
        })
        .collect()
}
