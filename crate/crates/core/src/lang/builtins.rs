use super::ast::{Channel, Gate, Measurement};
use crate::linalg::gates;
use crate::linalg::{Matrix, Shape};

pub const GATES: &[&str] = &["I", "X", "Y", "Z", "H", "CNOT"];

/// Builtin gate `name` acting on total dimension `d`. `I` exists in every
/// dimension; the others only in their natural one.
pub fn gate(name: &str, d: usize) -> Option<Gate> {
    let m = match (name, d) {
        ("I", _) => Matrix::identity(d),
        ("X", 2) => gates::pauli_x(),
        ("Y", 2) => gates::pauli_y(),
        ("Z", 2) => gates::pauli_z(),
        ("H", 2) => gates::hadamard(),
        ("CNOT", 4) => gates::cnot(),
        _ => return None,
    };
    Some(Gate { name: name.to_string(), matrix: m })
}

pub fn is_gate_name(name: &str) -> bool {
    GATES.contains(&name)
}

/// `M` is the computational-basis measurement on the listed register
/// dimensions, with outcome labels made of one digit per register. `M'`
/// is the {|+⟩, |−⟩} measurement on one qubit.
pub fn measurement(name: &str, dims: &[usize]) -> Option<Measurement> {
    match name {
        "M" => {
            if dims.iter().any(|&d| d > 10) {
                return None;
            }
            let shape = Shape::new(dims.to_vec()).ok()?;
            let n = shape.total();
            let outcomes = (0..n)
                .map(|i| {
                    let label: String = shape.digits(i).iter().map(|x| char::from(b'0' + *x as u8)).collect();
                    (label, Matrix::unit(n, i, i))
                })
                .collect();
            Some(Measurement::new("M", outcomes))
        }
        "M'" if dims == [2] => {
            let ops = gates::plus_minus_measurement();
            Some(Measurement::new("M'", vec![("0".into(), ops[0].clone()), ("1".into(), ops[1].clone())]))
        }
        _ => None,
    }
}

pub fn is_measurement_name(name: &str) -> bool {
    name == "M" || name == "M'"
}

/// `ZERO` discards its inputs and prepares |0…0⟩ on its outputs.
pub fn channel(name: &str, d_in: usize, d_out: usize) -> Option<Channel> {
    if name != "ZERO" {
        return None;
    }
    let kraus = (0..d_in)
        .map(|i| {
            let mut k = Matrix::zeros(d_out, d_in);
            k[(0, i)] = crate::linalg::ONE;
            k
        })
        .collect();
    Some(Channel { name: name.to_string(), kraus })
}

pub fn is_channel_name(name: &str) -> bool {
    name == "ZERO"
}
