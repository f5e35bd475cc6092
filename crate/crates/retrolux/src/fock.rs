//! Occupation-number bookkeeping: sparse photon states over a fixed set of
//! modes, and enumeration of the Fock basis at bounded photon number.
//!
//! States are stored as a map from [`OccupationVector`] to complex amplitude.
//! The map is ordered, so iteration (and therefore every serialized view of a
//! state) is deterministic. Entries whose modulus falls below
//! [`PRUNE_THRESHOLD`] are dropped after every operation; exact destructive
//! interference therefore removes an outcome from the state entirely instead
//! of leaving a residue of rounding noise.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Stored amplitudes with modulus below this are discarded.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

/// A state is treated as normalized when its norm is within this of 1.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Photon count per mode; the label of one Fock basis state.
///
/// Ordering is lexicographic over the counts, which fixes the iteration and
/// serialization order everywhere in the crate.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OccupationVector {
    counts: Vec<u32>,
}

impl OccupationVector {
    pub fn new(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn num_modes(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, mode: usize) -> u32 {
        self.counts[mode]
    }

    /// Total photon number.
    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// Copy with one mode's count replaced.
    pub fn with_count(&self, mode: usize, count: u32) -> Self {
        let mut counts = self.counts.clone();
        counts[mode] = count;
        Self { counts }
    }

    /// Restriction to a subset of modes, in the order given.
    pub fn project(&self, modes: &[usize]) -> Self {
        Self {
            counts: modes.iter().map(|&m| self.counts[m]).collect(),
        }
    }
}

impl From<&[u32]> for OccupationVector {
    fn from(counts: &[u32]) -> Self {
        Self::new(counts.to_vec())
    }
}

impl<const N: usize> From<[u32; N]> for OccupationVector {
    fn from(counts: [u32; N]) -> Self {
        Self::new(counts.to_vec())
    }
}

impl fmt::Display for OccupationVector {
    /// Renders as `(1,0,0,1)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.counts.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Sparse complex state over a fixed number of modes.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_modes: usize,
    amps: BTreeMap<OccupationVector, Complex64>,
}

impl StateVector {
    /// The vacuum: amplitude 1 on the all-zero occupation.
    pub fn vacuum(num_modes: usize) -> Result<Self> {
        if num_modes == 0 {
            return Err(Error::invalid("a state needs at least one mode"));
        }
        let mut amps = BTreeMap::new();
        amps.insert(
            OccupationVector::new(vec![0; num_modes]),
            Complex64::new(1.0, 0.0),
        );
        Ok(Self { num_modes, amps })
    }

    /// Amplitude 1 on the given occupation.
    pub fn basis_state(occupation: OccupationVector) -> Result<Self> {
        if occupation.num_modes() == 0 {
            return Err(Error::invalid("a state needs at least one mode"));
        }
        let num_modes = occupation.num_modes();
        let mut amps = BTreeMap::new();
        amps.insert(occupation, Complex64::new(1.0, 0.0));
        Ok(Self { num_modes, amps })
    }

    /// Builds a state from explicit terms. Terms on the same occupation are
    /// summed; near-zero results are pruned.
    pub fn from_terms<I>(num_modes: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (OccupationVector, Complex64)>,
    {
        if num_modes == 0 {
            return Err(Error::invalid("a state needs at least one mode"));
        }
        let mut amps: BTreeMap<OccupationVector, Complex64> = BTreeMap::new();
        for (occ, amp) in terms {
            if occ.num_modes() != num_modes {
                return Err(Error::invalid(format!(
                    "term {occ} has {} modes, state has {num_modes}",
                    occ.num_modes()
                )));
            }
            *amps.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        let mut state = Self { num_modes, amps };
        state.prune();
        Ok(state)
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    /// Number of stored (non-negligible) terms.
    pub fn num_terms(&self) -> usize {
        self.amps.len()
    }

    /// Iterates terms in lexicographic occupation order.
    pub fn terms(&self) -> impl Iterator<Item = (&OccupationVector, &Complex64)> {
        self.amps.iter()
    }

    /// Amplitude on one occupation; zero when absent.
    pub fn amplitude(&self, occupation: &OccupationVector) -> Complex64 {
        self.amps
            .get(occupation)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOLERANCE
    }

    /// Largest total photon number over stored terms (0 for the zero state).
    pub fn max_total(&self) -> u32 {
        self.amps.keys().map(|occ| occ.total()).max().unwrap_or(0)
    }

    pub(crate) fn prune(&mut self) {
        self.amps.retain(|_, amp| amp.norm() >= PRUNE_THRESHOLD);
    }

    pub(crate) fn from_map(
        num_modes: usize,
        amps: BTreeMap<OccupationVector, Complex64>,
    ) -> Self {
        let mut state = Self { num_modes, amps };
        state.prune();
        state
    }

    /// Applies one creation operator to `mode`: each amplitude on n photons
    /// becomes sqrt(n+1) times the amplitude on n+1 photons. When the input
    /// is a single basis term, the result is renormalized, so chains of
    /// `create_photon` calls starting from the vacuum stay unit norm.
    pub fn create_photon(&self, mode: usize) -> Result<Self> {
        if mode >= self.num_modes {
            return Err(Error::invalid(format!(
                "mode {mode} out of range for {} modes",
                self.num_modes
            )));
        }
        let was_basis = self.amps.len() == 1;
        let mut amps = BTreeMap::new();
        for (occ, amp) in &self.amps {
            let n = occ.count(mode);
            let raised = occ.with_count(mode, n + 1);
            amps.insert(raised, amp * f64::from(n + 1).sqrt());
        }
        let state = Self::from_map(self.num_modes, amps);
        if was_basis && state.num_terms() == 1 {
            let (normalized, _) = state.normalized()?;
            return Ok(normalized);
        }
        Ok(state)
    }

    /// Scalar product with the conjugate on `self`: (self, other).
    pub fn inner_product(&self, other: &Self) -> Result<Complex64> {
        if self.num_modes != other.num_modes {
            return Err(Error::invalid(format!(
                "inner product between {}-mode and {}-mode states",
                self.num_modes, other.num_modes
            )));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        // Walk the smaller map and look entries up in the larger one.
        let (small, large, conj_small) = if self.amps.len() <= other.amps.len() {
            (&self.amps, &other.amps, true)
        } else {
            (&other.amps, &self.amps, false)
        };
        for (occ, amp) in small {
            if let Some(other_amp) = large.get(occ) {
                acc += if conj_small {
                    amp.conj() * other_amp
                } else {
                    other_amp.conj() * amp
                };
            }
        }
        Ok(acc)
    }

    /// |(self, other)|^2 / (|self|^2 |other|^2).
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        let overlap = self.inner_product(other)?;
        let denom = self.norm_sqr() * other.norm_sqr();
        if denom == 0.0 {
            return Err(Error::DegenerateState);
        }
        Ok(overlap.norm_sqr() / denom)
    }

    /// Product state on the concatenation of the two mode sets.
    pub fn tensor(&self, other: &Self) -> Self {
        let num_modes = self.num_modes + other.num_modes;
        let mut amps = BTreeMap::new();
        for (locc, lamp) in &self.amps {
            for (rocc, ramp) in &other.amps {
                let mut counts = locc.counts().to_vec();
                counts.extend_from_slice(rocc.counts());
                amps.insert(OccupationVector::new(counts), lamp * ramp);
            }
        }
        Self::from_map(num_modes, amps)
    }

    /// Returns the unit-norm state and the norm of the input.
    pub fn normalized(&self) -> Result<(Self, f64)> {
        let norm = self.norm();
        if norm == 0.0 {
            return Err(Error::DegenerateState);
        }
        let amps = self
            .amps
            .iter()
            .map(|(occ, amp)| (occ.clone(), amp / norm))
            .collect();
        Ok((Self::from_map(self.num_modes, amps), norm))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let amps = self
            .amps
            .iter()
            .map(|(occ, amp)| (occ.clone(), amp * factor))
            .collect();
        Self::from_map(self.num_modes, amps)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.num_modes != other.num_modes {
            return Err(Error::invalid(format!(
                "sum of {}-mode and {}-mode states",
                self.num_modes, other.num_modes
            )));
        }
        let mut amps = self.amps.clone();
        for (occ, amp) in &other.amps {
            *amps.entry(occ.clone()).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        Ok(Self::from_map(self.num_modes, amps))
    }
}

/// Enumerated, lexicographically ordered Fock basis.
///
/// Two flavours exist: every occupation with an exact photon total (the
/// natural home of a number-conserving evolution), and every occupation up
/// to a photon total (the home of reduced states, where photons may have
/// left the kept modes).
#[derive(Clone, Debug, PartialEq)]
pub struct FockBasis {
    num_modes: usize,
    states: Vec<OccupationVector>,
    index: HashMap<OccupationVector, usize>,
}

impl FockBasis {
    /// All occupations of `num_modes` modes with exactly `total` photons.
    /// Size is C(total + num_modes - 1, num_modes - 1).
    pub fn fixed_total(num_modes: usize, total: u32) -> Result<Self> {
        if num_modes == 0 {
            return Err(Error::invalid("a basis needs at least one mode"));
        }
        let mut states = Vec::new();
        let mut prefix = Vec::with_capacity(num_modes);
        enumerate_exact(num_modes, total, &mut prefix, &mut states);
        Ok(Self::from_states(num_modes, states))
    }

    /// All occupations of `num_modes` modes with at most `max_total`
    /// photons. Size is C(max_total + num_modes, num_modes).
    pub fn up_to_total(num_modes: usize, max_total: u32) -> Result<Self> {
        if num_modes == 0 {
            return Err(Error::invalid("a basis needs at least one mode"));
        }
        let mut states = Vec::new();
        let mut prefix = Vec::with_capacity(num_modes);
        enumerate_up_to(num_modes, max_total, &mut prefix, &mut states);
        Ok(Self::from_states(num_modes, states))
    }

    fn from_states(num_modes: usize, states: Vec<OccupationVector>) -> Self {
        let index = states
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, occ)| (occ, i))
            .collect();
        Self {
            num_modes,
            states,
            index,
        }
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[OccupationVector] {
        &self.states
    }

    pub fn state(&self, index: usize) -> &OccupationVector {
        &self.states[index]
    }

    pub fn index_of(&self, occupation: &OccupationVector) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    /// Largest photon total the basis covers.
    pub fn max_total(&self) -> u32 {
        self.states.iter().map(|occ| occ.total()).max().unwrap_or(0)
    }

    /// Coordinates of a sparse state in this basis.
    pub fn coordinates(&self, state: &StateVector) -> Result<DVector<Complex64>> {
        if state.num_modes() != self.num_modes {
            return Err(Error::BasisMismatch(format!(
                "state has {} modes, basis has {}",
                state.num_modes(),
                self.num_modes
            )));
        }
        let mut coords = DVector::from_element(self.len(), Complex64::new(0.0, 0.0));
        for (occ, amp) in state.terms() {
            match self.index_of(occ) {
                Some(i) => coords[i] = *amp,
                None => {
                    return Err(Error::BasisMismatch(format!(
                        "state term {occ} lies outside the basis"
                    )))
                }
            }
        }
        Ok(coords)
    }

    /// Sparse state from a coordinate vector in this basis.
    pub fn state_from_coordinates(&self, coords: &DVector<Complex64>) -> Result<StateVector> {
        if coords.len() != self.len() {
            return Err(Error::BasisMismatch(format!(
                "coordinate vector of length {} against basis of size {}",
                coords.len(),
                self.len()
            )));
        }
        let amps = self
            .states
            .iter()
            .zip(coords.iter())
            .map(|(occ, amp)| (occ.clone(), *amp))
            .collect();
        Ok(StateVector::from_map(self.num_modes, amps))
    }
}

fn enumerate_exact(
    modes_left: usize,
    total: u32,
    prefix: &mut Vec<u32>,
    out: &mut Vec<OccupationVector>,
) {
    if modes_left == 1 {
        prefix.push(total);
        out.push(OccupationVector::new(prefix.clone()));
        prefix.pop();
        return;
    }
    for c in 0..=total {
        prefix.push(c);
        enumerate_exact(modes_left - 1, total - c, prefix, out);
        prefix.pop();
    }
}

fn enumerate_up_to(
    modes_left: usize,
    budget: u32,
    prefix: &mut Vec<u32>,
    out: &mut Vec<OccupationVector>,
) {
    if modes_left == 1 {
        for c in 0..=budget {
            prefix.push(c);
            out.push(OccupationVector::new(prefix.clone()));
            prefix.pop();
        }
        return;
    }
    for c in 0..=budget {
        prefix.push(c);
        enumerate_up_to(modes_left - 1, budget - c, prefix, out);
        prefix.pop();
    }
}

/// C(n, k) as f64; exact for the small arguments used here.
pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * f64::from(n - i) / f64::from(i + 1);
    }
    acc
}

/// n! as f64; exact for the small arguments used here.
pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}
