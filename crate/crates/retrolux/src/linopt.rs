//! Two-mode optical elements and the circuits built from them.
//!
//! An element is a 2x2 unitary acting on a pair of creation operators; every
//! column gives the image of one input operator over the two coupled modes.
//! Applying an element to a multi-photon state expands the transformed
//! operator powers binomially, which is exact and conserves the photon
//! number term by term. No renormalization is performed: unitarity keeps the
//! norm, and the tests hold the evolution to that.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fock::{binomial, factorial, FockBasis, StateVector};

/// Largest acceptable max-entry deviation of M\u{2020}M from the identity.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

/// A 2x2 unitary coupling one pair of modes.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamSplitterElement {
    modes: (usize, usize),
    /// `matrix[r][c]` is the coefficient of operator `r` in the image of
    /// operator `c`, operators ordered as (modes.0, modes.1).
    matrix: [[Complex64; 2]; 2],
}

impl BeamSplitterElement {
    /// Symmetric convention: mode i maps to t*i + r*j and mode j to r*i + t*j.
    /// Unitarity then requires |t|^2 + |r|^2 = 1 and Re(conj(t) r) = 0; a
    /// quarter-wave phase on the reflected amplitude is the usual way to
    /// satisfy the second condition.
    pub fn symmetric(t: Complex64, r: Complex64, i: usize, j: usize) -> Result<Self> {
        Self::from_matrix([[t, r], [r, t]], i, j)
    }

    /// Any explicit 2x2 unitary. Rejects the element when the matrix fails
    /// the unitarity check or the mode pair is degenerate.
    pub fn from_matrix(matrix: [[Complex64; 2]; 2], i: usize, j: usize) -> Result<Self> {
        if i == j {
            return Err(Error::invalid(format!(
                "element must couple two distinct modes, got ({i},{i})"
            )));
        }
        let deviation = unitarity_deviation(&matrix);
        if deviation > UNITARITY_TOLERANCE {
            return Err(Error::NonUnitaryElement { i, j, deviation });
        }
        Ok(Self {
            modes: (i, j),
            matrix,
        })
    }

    /// The balanced element: t = 1/sqrt(2), r = i/sqrt(2), exactly.
    pub fn balanced(i: usize, j: usize) -> Result<Self> {
        let t = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let r = Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
        Self::symmetric(t, r, i, j)
    }

    pub fn modes(&self) -> (usize, usize) {
        self.modes
    }

    pub fn matrix(&self) -> &[[Complex64; 2]; 2] {
        &self.matrix
    }

    /// Conjugate transpose on the same mode pair.
    pub fn adjoint(&self) -> Self {
        let m = &self.matrix;
        Self {
            modes: self.modes,
            matrix: [
                [m[0][0].conj(), m[1][0].conj()],
                [m[0][1].conj(), m[1][1].conj()],
            ],
        }
    }

    /// Applies the element to a state, term by term.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        let (i, j) = self.modes;
        let modes = state.num_modes();
        if i >= modes || j >= modes {
            return Err(Error::invalid(format!(
                "element on modes ({i},{j}) applied to a {modes}-mode state"
            )));
        }
        let m = &self.matrix;
        let mut amps: BTreeMap<_, Complex64> = BTreeMap::new();
        for (occ, amp) in state.terms() {
            let p = occ.count(i);
            let q = occ.count(j);
            // Undo the input normalization (a-dagger^p a-dagger^q over
            // sqrt(p! q!)), expand both transformed powers, and restore the
            // output normalization sqrt(u! v!).
            let base = amp / (factorial(p) * factorial(q)).sqrt();
            for k in 0..=p {
                for l in 0..=q {
                    let u = k + l;
                    let v = p + q - u;
                    let weight = binomial(p, k)
                        * binomial(q, l)
                        * (factorial(u) * factorial(v)).sqrt();
                    let coeff = m[0][0].powu(k)
                        * m[1][0].powu(p - k)
                        * m[0][1].powu(l)
                        * m[1][1].powu(q - l);
                    let target = occ.with_count(i, u).with_count(j, v);
                    *amps.entry(target).or_insert(Complex64::new(0.0, 0.0)) +=
                        base * weight * coeff;
                }
            }
        }
        Ok(StateVector::from_map(modes, amps))
    }

    /// Dense matrix of the element in the given basis, column by column.
    pub fn to_dense(&self, basis: &FockBasis) -> Result<DMatrix<Complex64>> {
        dense_from_columns(basis, |input| self.apply(input))
    }
}

/// An ordered sequence of elements on a fixed number of modes.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    num_modes: usize,
    elements: Vec<BeamSplitterElement>,
}

impl Circuit {
    pub fn new(num_modes: usize) -> Result<Self> {
        if num_modes < 2 {
            return Err(Error::invalid(
                "a circuit needs at least two modes to couple",
            ));
        }
        Ok(Self {
            num_modes,
            elements: Vec::new(),
        })
    }

    pub fn push(&mut self, element: BeamSplitterElement) -> Result<()> {
        let (i, j) = element.modes();
        if i >= self.num_modes || j >= self.num_modes {
            return Err(Error::invalid(format!(
                "element on modes ({i},{j}) does not fit a {}-mode circuit",
                self.num_modes
            )));
        }
        self.elements.push(element);
        Ok(())
    }

    pub fn with_elements(
        num_modes: usize,
        elements: impl IntoIterator<Item = BeamSplitterElement>,
    ) -> Result<Self> {
        let mut circuit = Self::new(num_modes)?;
        for element in elements {
            circuit.push(element)?;
        }
        Ok(circuit)
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn elements(&self) -> &[BeamSplitterElement] {
        &self.elements
    }

    /// Applies every element in sequence.
    pub fn run(&self, state: &StateVector) -> Result<StateVector> {
        if state.num_modes() != self.num_modes {
            return Err(Error::invalid(format!(
                "{}-mode state fed into a {}-mode circuit",
                state.num_modes(),
                self.num_modes
            )));
        }
        let mut current = state.clone();
        for element in &self.elements {
            current = element.apply(&current)?;
        }
        Ok(current)
    }

    /// The inverse circuit: adjoint elements in reverse order.
    pub fn inverted(&self) -> Self {
        Self {
            num_modes: self.num_modes,
            elements: self.elements.iter().rev().map(|e| e.adjoint()).collect(),
        }
    }

    /// Dense matrix of the whole circuit in the given basis.
    pub fn to_dense(&self, basis: &FockBasis) -> Result<DMatrix<Complex64>> {
        dense_from_columns(basis, |input| self.run(input))
    }

    /// The single-particle matrix: every element's 2x2 block embedded into
    /// the identity and composed in order. Column k is the image of input
    /// mode k. This is also how a classical field amplitude vector
    /// transforms.
    pub fn mode_matrix(&self) -> DMatrix<Complex64> {
        let n = self.num_modes;
        let mut acc = DMatrix::identity(n, n);
        for element in &self.elements {
            let (i, j) = element.modes();
            let m = element.matrix();
            let mut full = DMatrix::identity(n, n);
            full[(i, i)] = m[0][0];
            full[(i, j)] = m[0][1];
            full[(j, i)] = m[1][0];
            full[(j, j)] = m[1][1];
            acc = full * acc;
        }
        acc
    }
}

fn dense_from_columns<F>(basis: &FockBasis, mut image: F) -> Result<DMatrix<Complex64>>
where
    F: FnMut(&StateVector) -> Result<StateVector>,
{
    let n = basis.len();
    let mut dense = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for (col, occ) in basis.states().iter().enumerate() {
        let input = StateVector::basis_state(occ.clone())?;
        let output = image(&input)?;
        let coords = basis.coordinates(&output)?;
        dense.set_column(col, &coords);
    }
    Ok(dense)
}

fn unitarity_deviation(matrix: &[[Complex64; 2]; 2]) -> f64 {
    // Max entry of M-dagger M minus the identity.
    let mut worst: f64 = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            let mut entry = Complex64::new(0.0, 0.0);
            for k in 0..2 {
                entry += matrix[k][a].conj() * matrix[k][b];
            }
            if a == b {
                entry -= Complex64::new(1.0, 0.0);
            }
            worst = worst.max(entry.norm());
        }
    }
    worst
}
