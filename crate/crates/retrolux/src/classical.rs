//! Classical field amplitudes through the same circuits.
//!
//! A monochromatic classical field is one complex amplitude per mode and
//! transforms with the circuit's single-particle matrix, so intensity
//! splitting ratios coincide with single-photon detection probabilities.
//! Back-propagation with complete amplitude information inverts the circuit
//! exactly; discarding an output arm first models retrodiction from
//! incomplete information.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::NORM_TOLERANCE;
use crate::linopt::Circuit;

/// One complex amplitude per mode.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    amplitudes: Vec<Complex64>,
}

impl FieldState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid("a field needs at least one mode"));
        }
        Ok(Self { amplitudes })
    }

    /// Unit amplitude into each listed mode (repeats accumulate).
    pub fn from_sources(num_modes: usize, sources: &[usize]) -> Result<Self> {
        if num_modes == 0 {
            return Err(Error::invalid("a field needs at least one mode"));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); num_modes];
        for &mode in sources {
            if mode >= num_modes {
                return Err(Error::invalid(format!(
                    "source mode {mode} out of range for {num_modes} modes"
                )));
            }
            amplitudes[mode] += Complex64::new(1.0, 0.0);
        }
        Ok(Self { amplitudes })
    }

    pub fn num_modes(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn intensity(&self, mode: usize) -> f64 {
        self.amplitudes[mode].norm_sqr()
    }

    pub fn intensities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn total_intensity(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Zeroes every mode not in `keep`: the amplitude information an
    /// observer has when only those arms were monitored.
    pub fn keep_modes(&self, keep: &[usize]) -> Result<Self> {
        for &mode in keep {
            if mode >= self.num_modes() {
                return Err(Error::invalid(format!(
                    "mode {mode} out of range for {} modes",
                    self.num_modes()
                )));
            }
        }
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(m, a)| {
                if keep.contains(&m) {
                    *a
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Ok(Self { amplitudes })
    }
}

/// A weighted set of fields with no mutual phase relation.
#[derive(Clone, Debug, PartialEq)]
pub struct IncoherentEnsemble {
    members: Vec<(f64, FieldState)>,
}

impl IncoherentEnsemble {
    /// Weights must be non-negative and sum to one; members must share a
    /// mode count.
    pub fn new(members: Vec<(f64, FieldState)>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::invalid("an ensemble needs at least one member"))?;
        let num_modes = first.1.num_modes();
        let mut total = 0.0;
        for (weight, field) in &members {
            if *weight < 0.0 {
                return Err(Error::invalid(format!("negative ensemble weight {weight}")));
            }
            if field.num_modes() != num_modes {
                return Err(Error::invalid(
                    "ensemble members must share the mode count",
                ));
            }
            total += weight;
        }
        if (total - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::invalid(format!(
                "ensemble weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[(f64, FieldState)] {
        &self.members
    }
}

/// Runs the field forward through the circuit.
pub fn propagate(field: &FieldState, circuit: &Circuit) -> Result<FieldState> {
    if field.num_modes() != circuit.num_modes() {
        return Err(Error::invalid(format!(
            "{}-mode field fed into a {}-mode circuit",
            field.num_modes(),
            circuit.num_modes()
        )));
    }
    let mut amplitudes = field.amplitudes.clone();
    for element in circuit.elements() {
        let (i, j) = element.modes();
        let m = element.matrix();
        let (a, b) = (amplitudes[i], amplitudes[j]);
        amplitudes[i] = m[0][0] * a + m[0][1] * b;
        amplitudes[j] = m[1][0] * a + m[1][1] * b;
    }
    Ok(FieldState { amplitudes })
}

/// Runs output-side amplitudes backwards through the inverted circuit.
pub fn back_propagate(field: &FieldState, circuit: &Circuit) -> Result<FieldState> {
    propagate(field, &circuit.inverted())
}

/// Weight-averaged output intensities of an ensemble.
pub fn incoherent_mix(ensemble: &IncoherentEnsemble, circuit: &Circuit) -> Result<Vec<f64>> {
    let mut intensities = vec![0.0; circuit.num_modes()];
    for (weight, field) in ensemble.members() {
        let out = propagate(field, circuit)?;
        for (mode, amp) in out.amplitudes().iter().enumerate() {
            intensities[mode] += weight * amp.norm_sqr();
        }
    }
    Ok(intensities)
}
