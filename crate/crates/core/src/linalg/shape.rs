use serde::{Deserialize, Serialize};

use super::matrix::{Matrix, ZERO};
use crate::error::{Error, Result};

/// Ordered subsystem dimensions of a tensor-product space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    dims: Vec<usize>,
}

impl Shape {
    pub fn new(dims: Vec<usize>) -> Result<Shape> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::dim("subsystem dimension 0"));
        }
        Ok(Shape { dims })
    }

    pub fn qubits(n: usize) -> Shape {
        Shape { dims: vec![2; n] }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn sub(&self, factors: &[usize]) -> Shape {
        Shape { dims: factors.iter().map(|&k| self.dims[k]).collect() }
    }

    /// Mixed-radix digits of a flat index; the last factor varies fastest.
    pub fn digits(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            out[k] = idx % self.dims[k];
            idx /= self.dims[k];
        }
        out
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.dims).fold(0, |acc, (&x, &d)| acc * d + x)
    }

    fn check(&self, m: &Matrix) -> Result<()> {
        if !m.is_square() || m.rows() != self.total() {
            return Err(Error::dim(format!(
                "operator {}x{} does not fit shape {:?}",
                m.rows(),
                m.cols(),
                self.dims
            )));
        }
        Ok(())
    }

    fn check_factors(&self, fs: &[usize]) -> Result<()> {
        for (i, &f) in fs.iter().enumerate() {
            if f >= self.dims.len() {
                return Err(Error::dim(format!("factor {f} out of range for shape {:?}", self.dims)));
            }
            if fs[..i].contains(&f) {
                return Err(Error::dim(format!("factor {f} listed twice")));
            }
        }
        Ok(())
    }
}

/// Traces out every factor not listed in `keep`. The result keeps the
/// remaining factors in their original order.
pub fn partial_trace(m: &Matrix, shape: &Shape, keep: &[usize]) -> Result<Matrix> {
    shape.check(m)?;
    shape.check_factors(keep)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    let traced: Vec<usize> = (0..shape.len()).filter(|k| !kept.contains(k)).collect();
    let ks = shape.sub(&kept);
    let ts = shape.sub(&traced);
    let n = shape.total();
    let mut kidx = vec![0; n];
    let mut tidx = vec![0; n];
    for i in 0..n {
        let d = shape.digits(i);
        let kd: Vec<usize> = kept.iter().map(|&k| d[k]).collect();
        let td: Vec<usize> = traced.iter().map(|&k| d[k]).collect();
        kidx[i] = ks.index(&kd);
        tidx[i] = ts.index(&td);
    }
    let kn = ks.total();
    let mut out = Matrix::zeros(kn, kn);
    for i in 0..n {
        for j in 0..n {
            if tidx[i] == tidx[j] {
                out[(kidx[i], kidx[j])] += m[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Reorders tensor factors: factor `k` of the result is factor `perm[k]` of
/// the input.
pub fn permute(m: &Matrix, shape: &Shape, perm: &[usize]) -> Result<Matrix> {
    shape.check(m)?;
    if perm.len() != shape.len() {
        return Err(Error::dim("permutation length differs from factor count"));
    }
    shape.check_factors(perm)?;
    let ns = shape.sub(perm);
    let n = shape.total();
    let map: Vec<usize> = (0..n)
        .map(|i| {
            let d = shape.digits(i);
            let nd: Vec<usize> = perm.iter().map(|&k| d[k]).collect();
            ns.index(&nd)
        })
        .collect();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(map[i], map[j])] = m[(i, j)];
        }
    }
    Ok(out)
}

/// Partial transpose over the listed factors.
pub fn partial_transpose(m: &Matrix, shape: &Shape, factors: &[usize]) -> Result<Matrix> {
    shape.check(m)?;
    shape.check_factors(factors)?;
    let n = shape.total();
    let digits: Vec<Vec<usize>> = (0..n).map(|i| shape.digits(i)).collect();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut di = digits[i].clone();
            let mut dj = digits[j].clone();
            for &f in factors {
                std::mem::swap(&mut di[f], &mut dj[f]);
            }
            out[(shape.index(&di), shape.index(&dj))] = m[(i, j)];
        }
    }
    Ok(out)
}

/// Lifts `op`, a map from the factors `in_targets` of `in_shape` to the
/// factors `out_targets` of `out_shape`, to the whole space. The untouched
/// factors must coincide, in order, between the two shapes.
pub fn embed_map(
    op: &Matrix,
    in_shape: &Shape,
    in_targets: &[usize],
    out_shape: &Shape,
    out_targets: &[usize],
) -> Result<Matrix> {
    in_shape.check_factors(in_targets)?;
    out_shape.check_factors(out_targets)?;
    let in_t = in_shape.sub(in_targets);
    let out_t = out_shape.sub(out_targets);
    if op.rows() != out_t.total() || op.cols() != in_t.total() {
        return Err(Error::dim(format!(
            "operator {}x{} does not act {:?} -> {:?}",
            op.rows(),
            op.cols(),
            in_t.dims(),
            out_t.dims()
        )));
    }
    let in_rest: Vec<usize> = (0..in_shape.len()).filter(|k| !in_targets.contains(k)).collect();
    let out_rest: Vec<usize> = (0..out_shape.len()).filter(|k| !out_targets.contains(k)).collect();
    let rest = in_shape.sub(&in_rest);
    if rest != out_shape.sub(&out_rest) {
        return Err(Error::dim("untouched subsystems differ between domain and codomain"));
    }
    let table = |shape: &Shape, targets: &[usize], rest_f: &[usize], tshape: &Shape| {
        let mut t = vec![0usize; tshape.total() * rest.total()];
        for i in 0..shape.total() {
            let d = shape.digits(i);
            let td: Vec<usize> = targets.iter().map(|&k| d[k]).collect();
            let rd: Vec<usize> = rest_f.iter().map(|&k| d[k]).collect();
            t[tshape.index(&td) * rest.total() + rest.index(&rd)] = i;
        }
        t
    };
    let tin = table(in_shape, in_targets, &in_rest, &in_t);
    let tout = table(out_shape, out_targets, &out_rest, &out_t);
    let nr = rest.total();
    let mut out = Matrix::zeros(out_shape.total(), in_shape.total());
    for o in 0..op.rows() {
        for i in 0..op.cols() {
            let v = op[(o, i)];
            if v == ZERO {
                continue;
            }
            for r in 0..nr {
                out[(tout[o * nr + r], tin[i * nr + r])] = v;
            }
        }
    }
    Ok(out)
}

/// Lifts a square operator on the factors `targets` to the whole space.
pub fn embed(op: &Matrix, shape: &Shape, targets: &[usize]) -> Result<Matrix> {
    embed_map(op, shape, targets, shape, targets)
}
