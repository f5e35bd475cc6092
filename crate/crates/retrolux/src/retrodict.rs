//! Detection histories and what a detection record does to them.
//!
//! Forward evolution ends in a superposition over occupation outcomes; each
//! outcome is one candidate history of the photons. A detection record fixes
//! the photon count on some of the modes. Bayesian renormalization of the
//! surviving history weights gives the posterior; projecting the state and
//! renormalizing gives the residual state on the unobserved modes; a set of
//! mutually exclusive alternative records gives a classical mixture of such
//! residuals. None of this requires any non-unitary ingredient, which the
//! explicit detector-register coupling at the end of the module demonstrates.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::density::DensityOperator;
use crate::error::{Error, Result};
use crate::fock::{FockBasis, OccupationVector, StateVector};

/// One candidate outcome of the forward evolution.
#[derive(Clone, Debug, PartialEq)]
pub struct History {
    pub outcome: OccupationVector,
    pub amplitude: Complex64,
    pub probability: f64,
    /// Letter tag for recognized scenarios; otherwise the outcome tuple is
    /// the label.
    pub label: Option<char>,
}

impl History {
    /// Display label: the letter tag when present, the outcome otherwise.
    pub fn label_text(&self) -> String {
        match self.label {
            Some(letter) => format!("({letter})"),
            None => self.outcome.to_string(),
        }
    }
}

/// What the detectors said, mode by mode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModeObservation {
    Observed(u32),
    Unobserved,
}

/// A photon-count record over all modes, with at least one mode observed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetectionRecord {
    entries: Vec<ModeObservation>,
}

impl DetectionRecord {
    pub fn new(entries: Vec<ModeObservation>) -> Result<Self> {
        if !entries.iter().any(|e| matches!(e, ModeObservation::Observed(_))) {
            return Err(Error::invalid("a detection record must observe something"));
        }
        Ok(Self { entries })
    }

    /// Record from (mode, count) pairs; every unlisted mode is unobserved.
    pub fn from_pairs(num_modes: usize, pairs: &[(usize, u32)]) -> Result<Self> {
        let mut entries = vec![ModeObservation::Unobserved; num_modes];
        for &(mode, count) in pairs {
            if mode >= num_modes {
                return Err(Error::invalid(format!(
                    "observed mode {mode} out of range for {num_modes} modes"
                )));
            }
            if matches!(entries[mode], ModeObservation::Observed(_)) {
                return Err(Error::invalid(format!("mode {mode} observed twice")));
            }
            entries[mode] = ModeObservation::Observed(count);
        }
        Self::new(entries)
    }

    pub fn num_modes(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[ModeObservation] {
        &self.entries
    }

    /// Indices of the observed modes, ascending.
    pub fn observed_modes(&self) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(m, e)| matches!(e, ModeObservation::Observed(_)).then_some(m))
            .collect()
    }

    /// Indices of the unobserved modes, ascending.
    pub fn unobserved_modes(&self) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(m, e)| matches!(e, ModeObservation::Unobserved).then_some(m))
            .collect()
    }

    /// True when the occupation agrees with every observed count.
    pub fn matches(&self, occupation: &OccupationVector) -> bool {
        self.entries.iter().enumerate().all(|(m, e)| match e {
            ModeObservation::Observed(count) => occupation.count(m) == *count,
            ModeObservation::Unobserved => true,
        })
    }

    fn check_compatible(&self, state: &StateVector) -> Result<()> {
        if self.num_modes() != state.num_modes() {
            return Err(Error::invalid(format!(
                "record over {} modes against a {}-mode state",
                self.num_modes(),
                state.num_modes()
            )));
        }
        Ok(())
    }

    fn describe(&self) -> String {
        let parts: Vec<String> = self
            .entries
            .iter()
            .enumerate()
            .filter_map(|(m, e)| match e {
                ModeObservation::Observed(count) => Some(format!("d{}={count}", m + 1)),
                ModeObservation::Unobserved => None,
            })
            .collect();
        parts.join(",")
    }
}

/// Posterior weights over histories after a detection record.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorEntry {
    pub history: History,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Posterior {
    entries: Vec<PosteriorEntry>,
}

impl Posterior {
    pub fn entries(&self) -> &[PosteriorEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn probability_for_outcome(&self, outcome: &OccupationVector) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| &e.history.outcome == outcome)
            .map(|e| e.probability)
    }

    pub fn probability_for_label(&self, label: char) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.history.label == Some(label))
            .map(|e| e.probability)
    }
}

/// One unlabelled history per stored outcome of a normalized state, in
/// lexicographic outcome order. Outcomes that interfered away are absent
/// from the state and therefore from the history set.
pub fn enumerate_histories(state: &StateVector) -> Result<Vec<History>> {
    if !state.is_normalized() {
        return Err(Error::invalid(format!(
            "histories of a state with norm {:.6}",
            state.norm()
        )));
    }
    Ok(state
        .terms()
        .map(|(occ, amp)| History {
            outcome: occ.clone(),
            amplitude: *amp,
            probability: amp.norm_sqr(),
            label: None,
        })
        .collect())
}

/// Attaches letter tags by outcome lookup; histories without an entry keep
/// their outcome tuple as label.
pub fn label_histories(histories: &mut [History], labels: &BTreeMap<OccupationVector, char>) {
    for history in histories {
        history.label = labels.get(&history.outcome).copied();
    }
}

/// The canonical letter tags of the two-source apparatus: both photons at
/// the first exit (a), both at the second (b), and the five coincidence
/// patterns (c) through (g) over the remaining mode pairs.
pub fn two_source_labels() -> BTreeMap<OccupationVector, char> {
    let mut labels = BTreeMap::new();
    labels.insert(OccupationVector::from([2, 0, 0, 0]), 'a');
    labels.insert(OccupationVector::from([0, 2, 0, 0]), 'b');
    labels.insert(OccupationVector::from([1, 0, 0, 1]), 'c');
    labels.insert(OccupationVector::from([0, 1, 0, 1]), 'd');
    labels.insert(OccupationVector::from([1, 0, 1, 0]), 'e');
    labels.insert(OccupationVector::from([0, 1, 1, 0]), 'f');
    labels.insert(OccupationVector::from([0, 0, 1, 1]), 'g');
    labels
}

/// Bayesian update of history weights under a record: keep the histories the
/// record matches, renormalize their probabilities.
pub fn posterior(histories: &[History], record: &DetectionRecord) -> Result<Posterior> {
    if let Some(h) = histories.first() {
        if h.outcome.num_modes() != record.num_modes() {
            return Err(Error::invalid(format!(
                "record over {} modes against {}-mode histories",
                record.num_modes(),
                h.outcome.num_modes()
            )));
        }
    }
    let survivors: Vec<&History> = histories
        .iter()
        .filter(|h| record.matches(&h.outcome))
        .collect();
    let mass: f64 = survivors.iter().map(|h| h.probability).sum();
    if survivors.is_empty() || mass <= 0.0 {
        return Err(Error::ImpossibleObservation(format!(
            "record {} matches no history",
            record.describe()
        )));
    }
    Ok(Posterior {
        entries: survivors
            .into_iter()
            .map(|h| PosteriorEntry {
                history: h.clone(),
                probability: h.probability / mass,
            })
            .collect(),
    })
}

/// Projects a normalized state onto a record over a strict subset of modes.
/// Returns the renormalized residual state over the unobserved modes and
/// the probability mass of the projection.
pub fn condition(state: &StateVector, record: &DetectionRecord) -> Result<(StateVector, f64)> {
    record.check_compatible(state)?;
    let unobserved = record.unobserved_modes();
    if unobserved.is_empty() {
        return Err(Error::invalid(
            "conditioning requires at least one unobserved mode; a full record leaves no residual state",
        ));
    }
    if !state.is_normalized() {
        return Err(Error::invalid(format!(
            "conditioning a state with norm {:.6}",
            state.norm()
        )));
    }
    let mut terms = Vec::new();
    let mut mass = 0.0;
    for (occ, amp) in state.terms() {
        if record.matches(occ) {
            mass += amp.norm_sqr();
            terms.push((occ.project(&unobserved), *amp));
        }
    }
    if terms.is_empty() || mass <= 0.0 {
        return Err(Error::ImpossibleObservation(format!(
            "record {} has zero projection",
            record.describe()
        )));
    }
    let projected = StateVector::from_terms(unobserved.len(), terms)?;
    let (residual, _) = projected.normalized()?;
    Ok((residual, mass))
}

/// Classical mixture over mutually exclusive alternative records: each
/// alternative contributes its residual dyad, weighted by its share of the
/// total projection mass. All alternatives must observe the same modes.
pub fn mixed_condition(
    state: &StateVector,
    alternatives: &[DetectionRecord],
) -> Result<DensityOperator> {
    let first = alternatives
        .first()
        .ok_or_else(|| Error::invalid("mixture over zero alternatives"))?;
    let observed = first.observed_modes();
    for record in alternatives {
        record.check_compatible(state)?;
        if record.observed_modes() != observed {
            return Err(Error::invalid(
                "alternative records must observe the same set of modes",
            ));
        }
    }
    for (k, a) in alternatives.iter().enumerate() {
        for b in &alternatives[k + 1..] {
            if a == b {
                return Err(Error::invalid(
                    "alternative records must be mutually exclusive",
                ));
            }
        }
    }

    let unobserved = first.unobserved_modes();
    let basis = FockBasis::up_to_total(unobserved.len(), state.max_total())?;
    let mut weighted: Vec<(f64, StateVector)> = Vec::new();
    let mut total_mass = 0.0;
    for record in alternatives {
        match condition(state, record) {
            Ok((residual, mass)) => {
                total_mass += mass;
                weighted.push((mass, residual));
            }
            // An individually impossible alternative simply carries no
            // weight in the mixture.
            Err(Error::ImpossibleObservation(_)) => {}
            Err(other) => return Err(other),
        }
    }
    if weighted.is_empty() || total_mass <= 0.0 {
        return Err(Error::ImpossibleObservation(
            "every alternative record has zero projection".into(),
        ));
    }

    let dyads: Vec<(f64, DensityOperator)> = weighted
        .into_iter()
        .map(|(mass, residual)| {
            DensityOperator::dyad(&residual, &basis).map(|d| (mass / total_mass, d))
        })
        .collect::<Result<_>>()?;
    let parts: Vec<(f64, &DensityOperator)> =
        dyads.iter().map(|(w, d)| (*w, d)).collect();
    DensityOperator::mix(&parts)?.relabel_modes(unobserved)
}

/// Descriptor of one detector register: which mode it watches and how many
/// levels it has.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetectorRegister {
    pub mode: usize,
    pub levels: u32,
}

/// Field modes jointly entangled with detector registers.
///
/// A register with `levels = N + 1` is stored as one extra occupation slot
/// appended after the field modes. The coupling writes each watched mode's
/// photon count into its register by modular addition, a permutation of the
/// joint basis: manifestly unitary and exactly invertible.
#[derive(Clone, Debug, PartialEq)]
pub struct JointState {
    field_modes: usize,
    registers: Vec<DetectorRegister>,
    state: StateVector,
}

/// Couples ground-level registers to the given modes and applies the
/// number-copy interaction.
pub fn couple_detectors(state: &StateVector, modes: &[usize]) -> Result<JointState> {
    if modes.is_empty() {
        return Err(Error::invalid("no detector modes to couple"));
    }
    let mut seen = Vec::new();
    for &mode in modes {
        if mode >= state.num_modes() {
            return Err(Error::invalid(format!(
                "detector mode {mode} out of range for {} modes",
                state.num_modes()
            )));
        }
        if seen.contains(&mode) {
            return Err(Error::invalid(format!("detector mode {mode} listed twice")));
        }
        seen.push(mode);
    }
    let levels = state.max_total() + 1;
    let registers: Vec<DetectorRegister> = modes
        .iter()
        .map(|&mode| DetectorRegister { mode, levels })
        .collect();

    // Append ground-level registers, then couple.
    let ground = StateVector::vacuum(modes.len())?;
    let joint = JointState {
        field_modes: state.num_modes(),
        registers,
        state: state.tensor(&ground),
    };
    joint.number_copy(false)
}

impl JointState {
    pub fn field_modes(&self) -> usize {
        self.field_modes
    }

    pub fn registers(&self) -> &[DetectorRegister] {
        &self.registers
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    /// The coupling unitary (or its inverse): register level plus-or-minus
    /// the watched mode's count, modulo the register dimension.
    fn number_copy(&self, inverse: bool) -> Result<JointState> {
        if !inverse {
            // Forward coupling starts from ground registers.
            for (slot, register) in self.registers.iter().enumerate() {
                let slot_mode = self.field_modes + slot;
                for (occ, _) in self.state.terms() {
                    if occ.count(slot_mode) != 0 {
                        return Err(Error::invalid(format!(
                            "register for mode {} is not at ground level",
                            register.mode
                        )));
                    }
                }
            }
        }
        let mut terms = Vec::new();
        for (occ, amp) in self.state.terms() {
            let mut counts = occ.counts().to_vec();
            for (slot, register) in self.registers.iter().enumerate() {
                let slot_mode = self.field_modes + slot;
                let count = occ.count(register.mode);
                let level = occ.count(slot_mode);
                counts[slot_mode] = if inverse {
                    (level + register.levels - count % register.levels) % register.levels
                } else {
                    (level + count) % register.levels
                };
            }
            terms.push((OccupationVector::new(counts), *amp));
        }
        Ok(JointState {
            field_modes: self.field_modes,
            registers: self.registers.clone(),
            state: StateVector::from_terms(self.state.num_modes(), terms)?,
        })
    }

    /// Runs the coupling backwards and strips the registers, failing if any
    /// register ends away from ground level.
    pub fn decouple(&self) -> Result<StateVector> {
        let undone = self.number_copy(true)?;
        let field_modes: Vec<usize> = (0..self.field_modes).collect();
        let mut terms = Vec::new();
        for (occ, amp) in undone.state.terms() {
            for slot in 0..self.registers.len() {
                if occ.count(self.field_modes + slot) != 0 {
                    return Err(Error::invalid(format!(
                        "register for mode {} did not return to ground level",
                        self.registers[slot].mode
                    )));
                }
            }
            terms.push((occ.project(&field_modes), *amp));
        }
        StateVector::from_terms(self.field_modes, terms)
    }

    /// Probability of each register readout, in lexicographic readout order.
    pub fn register_distribution(&self) -> Vec<(OccupationVector, f64)> {
        let slots: Vec<usize> =
            (self.field_modes..self.field_modes + self.registers.len()).collect();
        let mut dist: BTreeMap<OccupationVector, f64> = BTreeMap::new();
        for (occ, amp) in self.state.terms() {
            *dist.entry(occ.project(&slots)).or_insert(0.0) += amp.norm_sqr();
        }
        dist.into_iter().collect()
    }

    /// Field outcome distribution conditioned on one register readout.
    pub fn field_distribution_given(
        &self,
        readout: &OccupationVector,
    ) -> Result<Vec<(OccupationVector, f64)>> {
        if readout.num_modes() != self.registers.len() {
            return Err(Error::invalid(format!(
                "readout over {} registers, joint state has {}",
                readout.num_modes(),
                self.registers.len()
            )));
        }
        let slots: Vec<usize> =
            (self.field_modes..self.field_modes + self.registers.len()).collect();
        let field: Vec<usize> = (0..self.field_modes).collect();
        let mut dist: BTreeMap<OccupationVector, f64> = BTreeMap::new();
        let mut mass = 0.0;
        for (occ, amp) in self.state.terms() {
            if &occ.project(&slots) == readout {
                mass += amp.norm_sqr();
                *dist.entry(occ.project(&field)).or_insert(0.0) += amp.norm_sqr();
            }
        }
        if mass <= 0.0 {
            return Err(Error::ImpossibleObservation(format!(
                "register readout {readout} never occurs"
            )));
        }
        Ok(dist.into_iter().map(|(occ, p)| (occ, p / mass)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linopt::{BeamSplitterElement, Circuit};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_source_circuit(reflect_a: f64, transmit_b: f64) -> Circuit {
        let t_a = c((1.0 - reflect_a).sqrt(), 0.0);
        let r_a = c(0.0, reflect_a.sqrt());
        let t_b = c(transmit_b.sqrt(), 0.0);
        let r_b = c(0.0, (1.0 - transmit_b).sqrt());
        Circuit::with_elements(
            4,
            [
                BeamSplitterElement::symmetric(t_a, r_a, 0, 2).unwrap(),
                BeamSplitterElement::symmetric(t_b, r_b, 1, 3).unwrap(),
                BeamSplitterElement::balanced(0, 1).unwrap(),
            ],
        )
        .unwrap()
    }

    fn two_source_input() -> StateVector {
        StateVector::vacuum(4)
            .unwrap()
            .create_photon(0)
            .unwrap()
            .create_photon(1)
            .unwrap()
    }

    fn labelled_histories(reflect_a: f64, transmit_b: f64) -> Vec<History> {
        let out = two_source_circuit(reflect_a, transmit_b)
            .run(&two_source_input())
            .unwrap();
        let mut histories = enumerate_histories(&out).unwrap();
        label_histories(&mut histories, &two_source_labels());
        histories
    }

    #[test]
    fn a_basis_state_has_one_certain_history() {
        let state = StateVector::basis_state(OccupationVector::from([1, 0, 1])).unwrap();
        let histories = enumerate_histories(&state).unwrap();
        assert_eq!(histories.len(), 1);
        assert!((histories[0].probability - 1.0).abs() < 1e-14);
    }

    #[test]
    fn histories_require_a_normalized_state() {
        let state = StateVector::basis_state(OccupationVector::from([1, 0]))
            .unwrap()
            .scaled(c(0.5, 0.0));
        assert!(matches!(
            enumerate_histories(&state),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn the_seven_labelled_histories() {
        let histories = labelled_histories(0.01, 0.04);
        assert_eq!(histories.len(), 7);
        let mut seen: Vec<char> = histories.iter().filter_map(|h| h.label).collect();
        seen.sort_unstable();
        assert_eq!(seen, vec!['a', 'b', 'c', 'd', 'e', 'f', 'g']);

        let by_label = |l: char| {
            histories
                .iter()
                .find(|h| h.label == Some(l))
                .unwrap()
                .probability
        };
        let (ta2, ra2, tb2, rb2) = (0.99, 0.01, 0.04, 0.96);
        assert!((by_label('c') - ta2 * rb2 / 2.0).abs() < 1e-12);
        assert!((by_label('e') - ra2 * tb2 / 2.0).abs() < 1e-12);
        assert!((by_label('g') - ra2 * rb2).abs() < 1e-12);
        let total: f64 = histories.iter().map(|h| h.probability).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn posterior_after_one_click_at_the_first_detector() {
        let histories = labelled_histories(0.01, 0.04);
        let record = DetectionRecord::from_pairs(4, &[(0, 1)]).unwrap();
        let post = posterior(&histories, &record).unwrap();

        assert_eq!(post.len(), 2);
        let eps = (0.01 * 0.04) / (0.99 * 0.96);
        assert!((post.probability_for_label('c').unwrap() - 1.0 / (1.0 + eps)).abs() < 1e-12);
        assert!((post.probability_for_label('e').unwrap() - eps / (1.0 + eps)).abs() < 1e-12);
        let total: f64 = post.entries().iter().map(|e| e.probability).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn a_full_record_pins_a_single_history() {
        let histories = labelled_histories(0.01, 0.04);
        for (counts, label) in [
            ([2u32, 0, 0, 0], 'a'),
            ([0, 2, 0, 0], 'b'),
            ([1, 0, 0, 1], 'c'),
            ([0, 1, 0, 1], 'd'),
            ([1, 0, 1, 0], 'e'),
            ([0, 1, 1, 0], 'f'),
            ([0, 0, 1, 1], 'g'),
        ] {
            let pairs: Vec<(usize, u32)> =
                counts.iter().enumerate().map(|(m, &n)| (m, n)).collect();
            let record = DetectionRecord::from_pairs(4, &pairs).unwrap();
            let post = posterior(&histories, &record).unwrap();
            assert_eq!(post.len(), 1);
            assert!((post.probability_for_label(label).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn impossible_counts_are_rejected() {
        let histories = labelled_histories(0.01, 0.04);
        let record = DetectionRecord::from_pairs(4, &[(0, 3)]).unwrap();
        assert!(matches!(
            posterior(&histories, &record),
            Err(Error::ImpossibleObservation(_))
        ));
    }

    #[test]
    fn posterior_sharpens_as_the_asymmetry_grows() {
        // reflect_a = transmit_b = x gives eps = x^2 / (1-x)^2.
        let x = 1e-4 / (1.0 + 1e-4);
        let histories = labelled_histories(x, x);
        let record = DetectionRecord::from_pairs(4, &[(0, 1)]).unwrap();
        let post = posterior(&histories, &record).unwrap();
        assert!((post.probability_for_label('c').unwrap() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn records_must_observe_something() {
        assert!(matches!(
            DetectionRecord::from_pairs(4, &[]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            DetectionRecord::from_pairs(4, &[(5, 1)]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn conditioning_after_the_first_stage() {
        // Only the auxiliary modes 2 and 3 are observed; the residual lives
        // on modes 0 and 1.
        let stage_one = Circuit::with_elements(
            4,
            two_source_circuit(0.01, 0.04).elements()[..2].to_vec(),
        )
        .unwrap();
        let mid = stage_one.run(&two_source_input()).unwrap();

        // Click at the fourth detector, none at the third: residual is one
        // photon in mode 0.
        let record = DetectionRecord::from_pairs(4, &[(2, 0), (3, 1)]).unwrap();
        let (residual, mass) = condition(&mid, &record).unwrap();
        let expected = StateVector::basis_state(OccupationVector::from([1, 0])).unwrap();
        assert!((residual.fidelity(&expected).unwrap() - 1.0).abs() < 1e-12);
        assert!((mass - 0.99 * 0.96).abs() < 1e-12);

        // Click at the third detector, none at the fourth: residual is one
        // photon in mode 1.
        let record = DetectionRecord::from_pairs(4, &[(2, 1), (3, 0)]).unwrap();
        let (residual, mass) = condition(&mid, &record).unwrap();
        let expected = StateVector::basis_state(OccupationVector::from([0, 1])).unwrap();
        assert!((residual.fidelity(&expected).unwrap() - 1.0).abs() < 1e-12);
        assert!((mass - 0.01 * 0.04).abs() < 1e-12);
    }

    #[test]
    fn conditioning_a_product_state_on_its_own_factor() {
        let state = two_source_input();
        let record = DetectionRecord::from_pairs(4, &[(1, 1)]).unwrap();
        let (residual, mass) = condition(&state, &record).unwrap();
        assert!((mass - 1.0).abs() < 1e-14);
        let expected = StateVector::basis_state(OccupationVector::from([1, 0, 0])).unwrap();
        assert!((residual.fidelity(&expected).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conditioning_needs_an_unobserved_remainder() {
        let state = two_source_input();
        let record = DetectionRecord::from_pairs(
            4,
            &[(0, 1), (1, 1), (2, 0), (3, 0)],
        )
        .unwrap();
        assert!(matches!(
            condition(&state, &record),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn conditioning_on_zero_mass_is_impossible() {
        let state = two_source_input();
        let record = DetectionRecord::from_pairs(4, &[(2, 2)]).unwrap();
        assert!(matches!(
            condition(&state, &record),
            Err(Error::ImpossibleObservation(_))
        ));
    }

    #[test]
    fn mixed_conditioning_reproduces_the_weighted_dyads() {
        let stage_one = Circuit::with_elements(
            4,
            two_source_circuit(0.01, 0.04).elements()[..2].to_vec(),
        )
        .unwrap();
        let mid = stage_one.run(&two_source_input()).unwrap();
        let alternatives = [
            DetectionRecord::from_pairs(4, &[(2, 0), (3, 1)]).unwrap(),
            DetectionRecord::from_pairs(4, &[(2, 1), (3, 0)]).unwrap(),
        ];
        let rho = mixed_condition(&mid, &alternatives).unwrap();

        let w1 = (0.99 * 0.96) / (0.99 * 0.96 + 0.01 * 0.04);
        let basis = rho.basis().clone();
        let psi1 = StateVector::basis_state(OccupationVector::from([1, 0])).unwrap();
        let psi2 = StateVector::basis_state(OccupationVector::from([0, 1])).unwrap();
        let expected = DensityOperator::mix(&[
            (w1, &DensityOperator::dyad(&psi1, &basis).unwrap()),
            (1.0 - w1, &DensityOperator::dyad(&psi2, &basis).unwrap()),
        ])
        .unwrap();
        let diff = (rho.matrix() - expected.matrix())
            .iter()
            .map(|e| e.norm())
            .fold(0.0f64, f64::max);
        assert!(diff < 1e-12, "deviation {diff}");
        assert!((rho.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixed_conditioning_with_one_alternative_is_a_pure_dyad() {
        let stage_one = Circuit::with_elements(
            4,
            two_source_circuit(0.01, 0.04).elements()[..2].to_vec(),
        )
        .unwrap();
        let mid = stage_one.run(&two_source_input()).unwrap();
        let record = DetectionRecord::from_pairs(4, &[(2, 0), (3, 1)]).unwrap();
        let rho = mixed_condition(&mid, std::slice::from_ref(&record)).unwrap();
        let (residual, _) = condition(&mid, &record).unwrap();
        let expected = DensityOperator::dyad(&residual, rho.basis()).unwrap();
        let diff = (rho.matrix() - expected.matrix())
            .iter()
            .map(|e| e.norm())
            .fold(0.0f64, f64::max);
        assert!(diff < 1e-13);
    }

    #[test]
    fn mixed_conditioning_rejects_mismatched_observation_sets() {
        let mid = two_source_input();
        let alternatives = [
            DetectionRecord::from_pairs(4, &[(2, 0)]).unwrap(),
            DetectionRecord::from_pairs(4, &[(3, 0)]).unwrap(),
        ];
        assert!(matches!(
            mixed_condition(&mid, &alternatives),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn coupling_writes_counts_into_registers() {
        let state = StateVector::basis_state(OccupationVector::from([1, 0, 0, 1])).unwrap();
        let joint = couple_detectors(&state, &[0, 3]).unwrap();
        let readouts = joint.register_distribution();
        assert_eq!(readouts.len(), 1);
        assert_eq!(readouts[0].0, OccupationVector::from([1, 1]));
        assert!((readouts[0].1 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn coupling_then_decoupling_is_exact() {
        let out = two_source_circuit(0.01, 0.04)
            .run(&two_source_input())
            .unwrap();
        let joint = couple_detectors(&out, &[0, 1, 2, 3]).unwrap();
        let back = joint.decouple().unwrap();
        assert!(back.fidelity(&out).unwrap() >= 1.0 - 1e-12);
    }

    #[test]
    fn coupling_reproduces_history_probabilities() {
        let out = two_source_circuit(0.01, 0.04)
            .run(&two_source_input())
            .unwrap();
        let histories = enumerate_histories(&out).unwrap();
        let joint = couple_detectors(&out, &[0, 1, 2, 3]).unwrap();
        for (readout, probability) in joint.register_distribution() {
            let matching = histories
                .iter()
                .find(|h| h.outcome == readout)
                .expect("readout should match a history");
            assert!((matching.probability - probability).abs() < 1e-12);
        }
    }

    #[test]
    fn register_conditioning_agrees_with_the_posterior() {
        let out = two_source_circuit(0.01, 0.04)
            .run(&two_source_input())
            .unwrap();
        let histories = enumerate_histories(&out).unwrap();
        let record = DetectionRecord::from_pairs(4, &[(0, 1)]).unwrap();
        let post = posterior(&histories, &record).unwrap();

        let joint = couple_detectors(&out, &[0]).unwrap();
        let field = joint
            .field_distribution_given(&OccupationVector::from([1]))
            .unwrap();
        assert_eq!(field.len(), post.len());
        for (occ, p) in field {
            let expected = post.probability_for_outcome(&occ).unwrap();
            assert!((p - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn coupling_is_linear_on_random_superpositions() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let basis = FockBasis::fixed_total(3, 2).unwrap();
        for _ in 0..20 {
            let terms: Vec<_> = basis
                .states()
                .iter()
                .map(|occ| {
                    (
                        occ.clone(),
                        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    )
                })
                .collect();
            let state = StateVector::from_terms(3, terms)
                .unwrap()
                .normalized()
                .unwrap()
                .0;
            let joint = couple_detectors(&state, &[1]).unwrap();
            assert!((joint.state().norm() - 1.0).abs() < 1e-12);
            let back = joint.decouple().unwrap();
            assert!(back.fidelity(&state).unwrap() >= 1.0 - 1e-12);
        }
    }
}
