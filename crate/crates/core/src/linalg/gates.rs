use super::matrix::{c, r, Matrix, C64};

const S2: f64 = std::f64::consts::FRAC_1_SQRT_2;

pub fn pauli_x() -> Matrix {
    Matrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn pauli_y() -> Matrix {
    Matrix::from_rows(&[vec![r(0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), r(0.0)]])
}

pub fn pauli_z() -> Matrix {
    Matrix::from_real(&[&[1.0, 0.0], &[0.0, -1.0]])
}

pub fn hadamard() -> Matrix {
    Matrix::from_real(&[&[S2, S2], &[S2, -S2]])
}

/// Controlled-X with the first qubit as control.
pub fn cnot() -> Matrix {
    Matrix::from_real(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
        &[0.0, 0.0, 1.0, 0.0],
    ])
}

/// The balanced coin (1/√2)[[1, i], [i, 1]].
pub fn coin_y() -> Matrix {
    Matrix::from_rows(&[vec![r(S2), c(0.0, S2)], vec![c(0.0, S2), r(S2)]])
}

pub fn ket0() -> Vec<C64> {
    vec![r(1.0), r(0.0)]
}

pub fn ket1() -> Vec<C64> {
    vec![r(0.0), r(1.0)]
}

pub fn ket_plus() -> Vec<C64> {
    vec![r(S2), r(S2)]
}

pub fn ket_minus() -> Vec<C64> {
    vec![r(S2), r(-S2)]
}

/// Computational-basis measurement {|i⟩⟨i|} on dimension d.
pub fn computational_measurement(d: usize) -> Vec<Matrix> {
    (0..d).map(|i| Matrix::unit(d, i, i)).collect()
}

/// The {|+⟩⟨+|, |−⟩⟨−|} measurement.
pub fn plus_minus_measurement() -> Vec<Matrix> {
    vec![Matrix::projector(&ket_plus()), Matrix::projector(&ket_minus())]
}
