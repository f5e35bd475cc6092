//! Shared helpers for integration tests: seeded random inputs and an
//! independent amplitude oracle built on matrix permanents.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use retrolux::fock::{FockBasis, OccupationVector, StateVector};
use retrolux::linopt::{BeamSplitterElement, Circuit};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random 2x2 unitary with both moduli bounded away from 0 and 1.
pub fn random_unitary_element(rng: &mut ChaCha8Rng, i: usize, j: usize) -> BeamSplitterElement {
    let theta: f64 = rng.gen_range(0.3..1.2);
    let (s, t) = (theta.sin(), theta.cos());
    let phi1 = rng.gen_range(0.0..std::f64::consts::TAU);
    let phi2 = rng.gen_range(0.0..std::f64::consts::TAU);
    let delta = rng.gen_range(0.0..std::f64::consts::TAU);
    let matrix = [
        [
            Complex64::from_polar(t, phi1),
            Complex64::from_polar(s, phi2),
        ],
        [
            -Complex64::from_polar(s, delta - phi2),
            Complex64::from_polar(t, delta - phi1),
        ],
    ];
    BeamSplitterElement::from_matrix(matrix, i, j).unwrap()
}

pub fn random_circuit(rng: &mut ChaCha8Rng, num_modes: usize, depth: usize) -> Circuit {
    let mut circuit = Circuit::new(num_modes).unwrap();
    for _ in 0..depth {
        let i = rng.gen_range(0..num_modes);
        let mut j = rng.gen_range(0..num_modes);
        while j == i {
            j = rng.gen_range(0..num_modes);
        }
        circuit.push(random_unitary_element(rng, i, j)).unwrap();
    }
    circuit
}

/// Random normalized state supported on the fixed-total basis.
pub fn random_state(rng: &mut ChaCha8Rng, num_modes: usize, total: u32) -> StateVector {
    let basis = FockBasis::fixed_total(num_modes, total).unwrap();
    let terms: Vec<(OccupationVector, Complex64)> = basis
        .states()
        .iter()
        .map(|occ| {
            (
                occ.clone(),
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            )
        })
        .collect();
    let state = StateVector::from_terms(num_modes, terms).unwrap();
    state.normalized().unwrap().0
}

/// The four-mode apparatus: couplers on (1,3) and (2,4), balanced mixer on
/// (1,2), fed by one photon in each of the first two arms.
pub fn two_source_circuit(t_a: f64, t_b: f64, phase_a: f64, phase_b: f64) -> Circuit {
    let coupler = |transmittance: f64, phase: f64, i: usize, j: usize| {
        let t = Complex64::from_polar(transmittance.sqrt(), phase);
        let r = Complex64::from_polar(
            (1.0 - transmittance).sqrt(),
            phase + std::f64::consts::FRAC_PI_2,
        );
        BeamSplitterElement::symmetric(t, r, i, j).unwrap()
    };
    Circuit::with_elements(
        4,
        [
            coupler(t_a, phase_a, 0, 2),
            coupler(t_b, phase_b, 1, 3),
            BeamSplitterElement::balanced(0, 1).unwrap(),
        ],
    )
    .unwrap()
}

pub fn two_source_input() -> StateVector {
    StateVector::vacuum(4)
        .unwrap()
        .create_photon(0)
        .unwrap()
        .create_photon(1)
        .unwrap()
}

/// Permanent by brute-force permutation sum; exact for the sizes used here.
pub fn permanent(matrix: &DMatrix<Complex64>) -> Complex64 {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "permanent needs a square matrix");
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut sum = Complex64::new(0.0, 0.0);
    permute(&mut indices, 0, &mut |perm| {
        let mut product = Complex64::new(1.0, 0.0);
        for (row, &col) in perm.iter().enumerate() {
            product *= matrix[(row, col)];
        }
        sum += product;
    });
    sum
}

fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Transition amplitude <output| circuit |input> from the single-particle
/// matrix F (column k is the image of mode k): the permanent of F with
/// column j repeated input_j times and row i repeated output_i times,
/// divided by the square roots of the occupation factorials.
pub fn transition_amplitude(
    mode_matrix: &DMatrix<Complex64>,
    input: &OccupationVector,
    output: &OccupationVector,
) -> Complex64 {
    let rows = repeat_indices(output.counts());
    let cols = repeat_indices(input.counts());
    if rows.len() != cols.len() {
        return Complex64::new(0.0, 0.0);
    }
    let n = rows.len();
    let mut sub = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            sub[(a, b)] = mode_matrix[(i, j)];
        }
    }
    permanent(&sub) / (norm_factor(input) * norm_factor(output))
}

fn repeat_indices(counts: &[u32]) -> Vec<usize> {
    counts
        .iter()
        .enumerate()
        .flat_map(|(mode, &n)| std::iter::repeat(mode).take(n as usize))
        .collect()
}

fn norm_factor(occupation: &OccupationVector) -> f64 {
    occupation
        .counts()
        .iter()
        .map(|&n| (1..=n).map(|k| k as f64).product::<f64>())
        .product::<f64>()
        .sqrt()
}

/// Whole-circuit matrix on a fixed-total basis, built purely from permanents
/// of the single-particle matrix.
pub fn permanent_lift(circuit: &Circuit, basis: &FockBasis) -> DMatrix<Complex64> {
    let mode_matrix = circuit.mode_matrix();
    let n = basis.len();
    let mut lift = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for (col, input) in basis.states().iter().enumerate() {
        for (row, output) in basis.states().iter().enumerate() {
            lift[(row, col)] = transition_amplitude(&mode_matrix, input, output);
        }
    }
    lift
}

pub fn max_entry_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|d| d.norm()).fold(0.0, f64::max)
}
