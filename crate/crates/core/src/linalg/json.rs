//! JSON encoding `{"dims":[r,c],"entries":[[re,im],...]}`, row-major.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::matrix::{Matrix, C64};

#[derive(Serialize, Deserialize)]
struct Wire {
    dims: [usize; 2],
    entries: Vec<[f64; 2]>,
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        Wire { dims: [self.rows(), self.cols()], entries: self.data().iter().map(|z| [z.re, z.im]).collect() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Matrix, D::Error> {
        let w = Wire::deserialize(d)?;
        let data = w.entries.iter().map(|e| C64::new(e[0], e[1])).collect();
        Matrix::from_vec(w.dims[0], w.dims[1], data).map_err(D::Error::custom)
    }
}

pub fn to_json(m: &Matrix) -> String {
    serde_json::to_string(m).expect("matrix serializes")
}

pub fn from_json(s: &str) -> crate::error::Result<Matrix> {
    Ok(serde_json::from_str(s)?)
}
