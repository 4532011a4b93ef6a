//! Dense potential tables in row-major order (leftmost axis slowest) and the
//! labelled tensor operations the engines are built from.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub dims: Vec<usize>,
    pub values: Vec<f64>,
}

pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Number of cells of a table with the given axes, `None` on overflow.
pub fn cell_count(dims: &[usize]) -> Option<usize> {
    dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d))
}

/// `x^e` for non-negative potentials, with `0^e = 0` and tiny negative
/// rounding residues treated as zero.
pub fn powf(x: f64, e: f64) -> f64 {
    if e == 1.0 {
        x
    } else if x <= 0.0 {
        if e == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        libm::pow(x, e)
    }
}

impl Table {
    pub fn new(dims: Vec<usize>, values: Vec<f64>) -> Result<Table> {
        let n = cell_count(&dims).ok_or_else(|| Error::Schema("table too large".into()))?;
        if n != values.len() {
            return Err(Error::Schema(format!(
                "table has {} values but its axes need {}",
                values.len(),
                n
            )));
        }
        Ok(Table { dims, values })
    }

    pub fn scalar(v: f64) -> Table {
        Table {
            dims: Vec::new(),
            values: vec![v],
        }
    }

    pub fn filled(dims: Vec<usize>, v: f64) -> Table {
        let n = dims.iter().product();
        Table {
            dims,
            values: vec![v; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index(&self, assignment: &[usize]) -> Result<usize> {
        if assignment.len() != self.dims.len() {
            return Err(Error::Schema(format!(
                "assignment of {} values for a table with {} axes",
                assignment.len(),
                self.dims.len()
            )));
        }
        let mut idx = 0;
        for (&v, &d) in assignment.iter().zip(&self.dims) {
            if v >= d {
                return Err(Error::Range(format!("value index {v} outside a range of size {d}")));
            }
            idx = idx * d + v;
        }
        Ok(idx)
    }

    pub fn lookup(&self, assignment: &[usize]) -> Result<f64> {
        Ok(self.values[self.index(assignment)?])
    }

    /// Inverse of [`Table::index`].
    pub fn assignment(&self, mut idx: usize) -> Vec<usize> {
        let mut a = vec![0; self.dims.len()];
        for i in (0..self.dims.len()).rev() {
            a[i] = idx % self.dims[i];
            idx /= self.dims[i];
        }
        a
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Table {
        Table {
            dims: self.dims.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn pow(&self, e: f64) -> Table {
        self.map(|v| powf(v, e))
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Sums out one axis, weighting its values by `weights` when given.
    pub fn sum_axis(&self, axis: usize, weights: Option<&[f64]>) -> Table {
        let d = self.dims[axis];
        let inner: usize = self.dims[axis + 1..].iter().product();
        let outer: usize = self.dims[..axis].iter().product();
        let mut out = vec![0.0; outer * inner];
        for o in 0..outer {
            for v in 0..d {
                let w = weights.map_or(1.0, |w| w[v]);
                let base = (o * d + v) * inner;
                for i in 0..inner {
                    out[o * inner + i] += w * self.values[base + i];
                }
            }
        }
        let mut dims = self.dims.clone();
        dims.remove(axis);
        Table { dims, values: out }
    }

    /// Keeps only value `v` of `axis`, dropping the axis.
    pub fn slice_axis(&self, axis: usize, v: usize) -> Table {
        let d = self.dims[axis];
        let inner: usize = self.dims[axis + 1..].iter().product();
        let outer: usize = self.dims[..axis].iter().product();
        let mut out = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            let base = (o * d + v) * inner;
            out.extend_from_slice(&self.values[base..base + inner]);
        }
        let mut dims = self.dims.clone();
        dims.remove(axis);
        Table { dims, values: out }
    }

    /// Cumulative sums along a Boolean axis: the `t` cell becomes `f + t`.
    pub fn zeta_axis(&mut self, axis: usize) {
        self.along(axis, |f, t| (f, f + t));
    }

    /// Inverse of [`Table::zeta_axis`].
    pub fn mobius_axis(&mut self, axis: usize) {
        self.along(axis, |f, t| (f, t - f));
    }

    fn along(&mut self, axis: usize, op: impl Fn(f64, f64) -> (f64, f64)) {
        debug_assert_eq!(self.dims[axis], 2);
        let inner: usize = self.dims[axis + 1..].iter().product();
        let outer: usize = self.dims[..axis].iter().product();
        for o in 0..outer {
            for i in 0..inner {
                let a = o * 2 * inner + i;
                let b = a + inner;
                let (x, y) = op(self.values[a], self.values[b]);
                self.values[a] = x;
                self.values[b] = y;
            }
        }
    }

    /// Re-expresses the table over `target` axes: axes missing from `own` are
    /// broadcast, the others permuted. `own` must be a subset of `target`.
    pub fn expand<V: PartialEq + Copy>(&self, own: &[V], target: &[V], target_dims: &[usize]) -> Table {
        let own_strides = strides(&self.dims);
        let map: Vec<usize> = target
            .iter()
            .map(|v| own.iter().position(|o| o == v).map_or(0, |p| own_strides[p]))
            .collect();
        let n: usize = target_dims.iter().product();
        let mut out = Vec::with_capacity(n);
        let mut idx = vec![0usize; target.len()];
        let mut src = 0usize;
        for _ in 0..n {
            out.push(self.values[src]);
            let mut k = target.len();
            while k > 0 {
                k -= 1;
                idx[k] += 1;
                src += map[k];
                if idx[k] < target_dims[k] {
                    break;
                }
                src -= map[k] * idx[k];
                idx[k] = 0;
            }
        }
        Table {
            dims: target_dims.to_vec(),
            values: out,
        }
    }
}

/// Union of two labelled axis lists: `a`'s order first, then `b`'s new axes.
pub fn union_axes<V: PartialEq + Copy>(a: &[V], ad: &[usize], b: &[V], bd: &[usize]) -> (Vec<V>, Vec<usize>) {
    let mut vars = a.to_vec();
    let mut dims = ad.to_vec();
    for (v, d) in b.iter().zip(bd) {
        if !vars.contains(v) {
            vars.push(*v);
            dims.push(*d);
        }
    }
    (vars, dims)
}

/// Pointwise product over the union of the axes.
pub fn product<V: PartialEq + Copy>(a: &Table, av: &[V], b: &Table, bv: &[V]) -> (Table, Vec<V>) {
    let (vars, dims) = union_axes(av, &a.dims, bv, &b.dims);
    let x = a.expand(av, &vars, &dims);
    let y = b.expand(bv, &vars, &dims);
    let values = x.values.iter().zip(&y.values).map(|(p, q)| p * q).collect();
    (Table { dims, values }, vars)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_follows_row_major() {
        let iota = Table::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(iota.lookup(&[0, 0]).unwrap(), 1.0);
        assert_eq!(iota.lookup(&[0, 1]).unwrap(), 0.0);
        let disj = Table::new(vec![2, 2, 2], vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(disj.lookup(&[1, 0, 1]).unwrap(), 1.0);
        let fact = Table::new(vec![2], vec![0.9, 0.1]).unwrap();
        assert_eq!(fact.lookup(&[1]).unwrap(), 0.1);
        assert!(fact.lookup(&[1, 0]).is_err());
        assert!(Table::new(vec![2, 2], vec![1.0]).is_err());
        for i in 0..disj.len() {
            assert_eq!(disj.index(&disj.assignment(i)).unwrap(), i);
        }
    }

    #[test]
    fn products_and_sums() {
        let a = Table::new(vec![2], vec![2.0, 3.0]).unwrap();
        let b = Table::new(vec![2], vec![5.0, 7.0]).unwrap();
        let (p, vars) = product(&a, &[0], &b, &[0]);
        assert_eq!(vars, vec![0]);
        assert_eq!(p.values, vec![10.0, 21.0]);
        let ab = Table::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(ab.sum_axis(1, None).values, vec![3.0, 7.0]);
        assert_eq!(ab.sum_axis(0, None).values, vec![4.0, 6.0]);
        let bc = Table::new(vec![2, 2], vec![5.0, 6.0, 7.0, 8.0]).unwrap();
        let (abc, vars) = product(&ab, &['a', 'b'], &bc, &['b', 'c']);
        assert_eq!(vars, vec!['a', 'b', 'c']);
        for i in 0..8 {
            let x = abc.assignment(i);
            let want = ab.lookup(&[x[0], x[1]]).unwrap() * bc.lookup(&[x[1], x[2]]).unwrap();
            assert_eq!(abc.values[i], want);
        }
        let swapped = ab.expand(&['a', 'b'], &['b', 'a'], &[2, 2]);
        assert_eq!(swapped.values, vec![1.0, 3.0, 2.0, 4.0]);
    }

    #[test]
    fn zeta_mobius_roundtrip() {
        let mut t = Table::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let orig = t.clone();
        t.zeta_axis(0);
        t.zeta_axis(1);
        assert_eq!(t.values, vec![1.0, 3.0, 4.0, 10.0]);
        t.mobius_axis(1);
        t.mobius_axis(0);
        assert_eq!(t, orig);
        assert_eq!(powf(0.0, 1.0 / 3.0), 0.0);
        assert_eq!(powf(-1e-18, 0.5), 0.0);
    }
}
