//! Dense density operators over an enumerated Fock basis.
//!
//! Sparse states cover the unitary part of the pipeline; mixtures need
//! matrices. Bases here are usually of the up-to-total kind, because a
//! reduced state of a number-conserving system spreads over photon totals.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{FockBasis, StateVector, NORM_TOLERANCE};

/// Max-entry tolerance for the Hermiticity check at construction.
pub const HERMITICITY_TOLERANCE: f64 = 1e-12;

/// A density operator with its basis and the original mode labels.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    /// Original mode indices the basis occupations refer to, ascending.
    modes: Vec<usize>,
    basis: FockBasis,
    matrix: DMatrix<Complex64>,
}

impl DensityOperator {
    /// |state><state| in the given basis. The state must be normalized and
    /// must lie inside the basis.
    pub fn dyad(state: &StateVector, basis: &FockBasis) -> Result<Self> {
        if !state.is_normalized() {
            return Err(Error::invalid(format!(
                "dyad of a state with norm {:.6}",
                state.norm()
            )));
        }
        let coords = basis.coordinates(state)?;
        let matrix = &coords * coords.adjoint();
        Ok(Self {
            modes: (0..basis.num_modes()).collect(),
            basis: basis.clone(),
            matrix,
        })
    }

    /// Wraps an explicit matrix, checking shape and Hermiticity.
    pub fn from_matrix(basis: FockBasis, matrix: DMatrix<Complex64>) -> Result<Self> {
        Self::from_matrix_with_modes((0..basis.num_modes()).collect(), basis, matrix)
    }

    fn from_matrix_with_modes(
        modes: Vec<usize>,
        basis: FockBasis,
        matrix: DMatrix<Complex64>,
    ) -> Result<Self> {
        if matrix.nrows() != basis.len() || matrix.ncols() != basis.len() {
            return Err(Error::BasisMismatch(format!(
                "{}x{} matrix against a basis of size {}",
                matrix.nrows(),
                matrix.ncols(),
                basis.len()
            )));
        }
        let hermiticity = (&matrix - matrix.adjoint())
            .iter()
            .map(|e| e.norm())
            .fold(0.0f64, f64::max);
        if hermiticity > HERMITICITY_TOLERANCE {
            return Err(Error::NumericalValidation(format!(
                "density matrix is not Hermitian: max deviation {hermiticity:.3e}"
            )));
        }
        Ok(Self {
            modes,
            basis,
            matrix,
        })
    }

    /// Convex combination of operators on a common basis. Weights must be
    /// non-negative and sum to one.
    pub fn mix(parts: &[(f64, &DensityOperator)]) -> Result<Self> {
        let (first_weight, first) = parts
            .first()
            .ok_or_else(|| Error::invalid("mixture of zero operators"))?;
        let mut total_weight = *first_weight;
        let mut acc = first.matrix.scale(*first_weight);
        for (weight, op) in &parts[1..] {
            if op.basis != first.basis || op.modes != first.modes {
                return Err(Error::BasisMismatch(
                    "mixture members live in different bases".into(),
                ));
            }
            if *weight < 0.0 {
                return Err(Error::invalid(format!("negative mixture weight {weight}")));
            }
            acc += op.matrix.scale(*weight);
            total_weight += weight;
        }
        if (total_weight - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::invalid(format!(
                "mixture weights sum to {total_weight}, expected 1"
            )));
        }
        Self::from_matrix_with_modes(first.modes.clone(), first.basis.clone(), acc)
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Original mode indices described by this operator.
    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    /// Replaces the stored mode labels, for operators built over a subset
    /// of some larger system.
    pub fn relabel_modes(mut self, modes: Vec<usize>) -> Result<Self> {
        if modes.len() != self.basis.num_modes() {
            return Err(Error::invalid(format!(
                "{} labels for a {}-mode operator",
                modes.len(),
                self.basis.num_modes()
            )));
        }
        self.modes = modes;
        Ok(self)
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|e| e.re).sum()
    }

    /// Diagonal entry for one occupation, when the basis contains it.
    pub fn population(&self, occupation: &crate::fock::OccupationVector) -> Option<f64> {
        self.basis
            .index_of(occupation)
            .map(|i| self.matrix[(i, i)].re)
    }

    /// Traces out every mode not in `keep_modes`. The reduced basis covers
    /// all kept-mode occupations up to the photon total of the input basis.
    pub fn partial_trace(&self, keep_modes: &[usize]) -> Result<DensityOperator> {
        let positions = self.keep_positions(keep_modes)?;
        let reduced_basis = FockBasis::up_to_total(positions.len(), self.basis.max_total())?;
        let n = reduced_basis.len();
        let mut reduced = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));

        let dropped: Vec<usize> = (0..self.basis.num_modes())
            .filter(|p| !positions.contains(p))
            .collect();
        // Row/column pairs contribute when they agree on every dropped mode.
        for (a, occ_a) in self.basis.states().iter().enumerate() {
            let kept_a = occ_a.project(&positions);
            let row = reduced_basis
                .index_of(&kept_a)
                .ok_or_else(|| Error::BasisMismatch(format!("{kept_a} outside reduced basis")))?;
            for (b, occ_b) in self.basis.states().iter().enumerate() {
                if occ_a.project(&dropped) != occ_b.project(&dropped) {
                    continue;
                }
                let kept_b = occ_b.project(&positions);
                let col = reduced_basis.index_of(&kept_b).ok_or_else(|| {
                    Error::BasisMismatch(format!("{kept_b} outside reduced basis"))
                })?;
                reduced[(row, col)] += self.matrix[(a, b)];
            }
        }

        let kept_labels = positions.iter().map(|&p| self.modes[p]).collect();
        Self::from_matrix_with_modes(kept_labels, reduced_basis, reduced)
    }

    /// Maps caller mode labels to positions in this operator's basis and
    /// validates the keep set.
    fn keep_positions(&self, keep_modes: &[usize]) -> Result<Vec<usize>> {
        if keep_modes.is_empty() {
            return Err(Error::invalid(
                "partial trace must keep at least one mode; use trace() for the full trace",
            ));
        }
        let mut positions: Vec<usize> = Vec::with_capacity(keep_modes.len());
        for &mode in keep_modes {
            let pos = self
                .modes
                .iter()
                .position(|&m| m == mode)
                .ok_or_else(|| Error::invalid(format!("mode {mode} not in this operator")))?;
            if positions.contains(&pos) {
                return Err(Error::invalid(format!("mode {mode} listed twice")));
            }
            positions.push(pos);
        }
        positions.sort_unstable();
        Ok(positions)
    }

    /// Machine-readable rendering: one row per matrix row, tab-separated
    /// real/imaginary pairs at 12 significant digits, preceded by the
    /// occupation labels of the basis.
    pub fn to_tsv(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let labels: Vec<String> = self
            .basis
            .states()
            .iter()
            .map(|occ| occ.to_string())
            .collect();
        writeln!(out, "basis\t{}", labels.join("\t")).unwrap();
        for row in 0..self.basis.len() {
            let mut line = labels[row].clone();
            for col in 0..self.basis.len() {
                let e = self.matrix[(row, col)];
                line.push('\t');
                line.push_str(&format!("{:.11e}\t{:.11e}", e.re, e.im));
            }
            writeln!(out, "{line}").unwrap();
        }
        out
    }
}

/// Partial trace straight from a pure state, grouping amplitude products by
/// the dropped-mode occupation. Cheaper than building the full dyad and
/// an independent cross-check for [`DensityOperator::partial_trace`].
pub fn partial_trace_pure(state: &StateVector, keep_modes: &[usize]) -> Result<DensityOperator> {
    if keep_modes.is_empty() {
        return Err(Error::invalid(
            "partial trace must keep at least one mode; use trace() for the full trace",
        ));
    }
    let mut keep: Vec<usize> = keep_modes.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.len() != keep_modes.len() {
        return Err(Error::invalid("keep set lists a mode twice"));
    }
    if let Some(&worst) = keep.iter().find(|&&m| m >= state.num_modes()) {
        return Err(Error::invalid(format!(
            "mode {worst} out of range for {} modes",
            state.num_modes()
        )));
    }
    if !state.is_normalized() {
        return Err(Error::invalid(format!(
            "partial trace of a state with norm {:.6}",
            state.norm()
        )));
    }
    let dropped: Vec<usize> = (0..state.num_modes())
        .filter(|m| !keep.contains(m))
        .collect();

    let reduced_basis = FockBasis::up_to_total(keep.len(), state.max_total())?;
    let n = reduced_basis.len();

    // Bucket coordinates by dropped occupation, then sum outer products.
    let mut buckets: std::collections::BTreeMap<_, DVector<Complex64>> =
        std::collections::BTreeMap::new();
    for (occ, amp) in state.terms() {
        let kept = occ.project(&keep);
        let rest = occ.project(&dropped);
        let row = reduced_basis
            .index_of(&kept)
            .ok_or_else(|| Error::BasisMismatch(format!("{kept} outside reduced basis")))?;
        buckets
            .entry(rest)
            .or_insert_with(|| DVector::from_element(n, Complex64::new(0.0, 0.0)))[row] += amp;
    }
    let mut matrix = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for coords in buckets.values() {
        matrix += coords * coords.adjoint();
    }
    DensityOperator::from_matrix(reduced_basis, matrix)
        .map(|op| DensityOperator { modes: keep, ..op })
}

/// Photon-count distribution of one mode: probabilities for n = 0 up to the
/// state's photon total. Requires a normalized state.
pub fn count_distribution(state: &StateVector, mode: usize) -> Result<Vec<f64>> {
    if mode >= state.num_modes() {
        return Err(Error::invalid(format!(
            "mode {mode} out of range for {} modes",
            state.num_modes()
        )));
    }
    if !state.is_normalized() {
        return Err(Error::invalid(format!(
            "count distribution of a state with norm {:.6}",
            state.norm()
        )));
    }
    let mut probs = vec![0.0; state.max_total() as usize + 1];
    for (occ, amp) in state.terms() {
        probs[occ.count(mode) as usize] += amp.norm_sqr();
    }
    Ok(probs)
}
