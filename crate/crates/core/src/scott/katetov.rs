//! Bi-Katetov functions: distances across a common isometric embedding.

use super::{FiniteSpace, ScottError};
use crate::rational::Rational;

/// A table `f: X × Y → ℚ`, row-major in `x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiKatetov {
    rows: usize,
    cols: usize,
    values: Vec<Rational>,
}

impl BiKatetov {
    pub fn new(rows: usize, cols: usize, values: Vec<Rational>) -> Result<Self, ScottError> {
        if values.len() != rows * cols {
            return Err(ScottError::DimensionMismatch { expected: rows * cols, found: values.len() });
        }
        Ok(BiKatetov { rows, cols, values })
    }

    pub fn constant(rows: usize, cols: usize, c: Rational) -> Self {
        BiKatetov { rows, cols, values: vec![c; rows * cols] }
    }

    /// `f(x, y) = d(x, y)` on `X × X`.
    pub fn identity(x: &FiniteSpace) -> Self {
        BiKatetov { rows: x.size(), cols: x.size(), values: x.dist_table().to_vec() }
    }

    pub fn get(&self, x: usize, y: usize) -> &Rational {
        &self.values[x * self.cols + y]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }
}

/// The first inequality found to fail.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KatetovWitness {
    Negative { x: usize, y: usize },
    /// `|f(x,y) − f(w,y)| > d_X(x,w)`
    LipschitzX { x: usize, w: usize, y: usize },
    /// `|f(x,y) − f(x,z)| > d_Y(y,z)`
    LipschitzY { x: usize, y: usize, z: usize },
    /// `d_X(x,w) > f(x,y) + f(w,y)`
    TriangleX { x: usize, w: usize, y: usize },
    /// `d_Y(y,z) > f(x,y) + f(x,z)`
    TriangleY { x: usize, y: usize, z: usize },
}

fn check_shape(f: &BiKatetov, x: &FiniteSpace, y: &FiniteSpace) -> Result<(), ScottError> {
    if f.rows != x.size() || f.cols != y.size() {
        return Err(ScottError::DimensionMismatch { expected: x.size() * y.size(), found: f.rows * f.cols });
    }
    Ok(())
}

/// Checks all four inequality families exhaustively.
pub fn katetov_check(f: &BiKatetov, x: &FiniteSpace, y: &FiniteSpace) -> Result<(), ScottError> {
    check_shape(f, x, y)?;
    let fail = |w| Err(ScottError::KatetovViolation(w));
    for a in 0..x.size() {
        for b in 0..y.size() {
            if f.get(a, b).is_negative() {
                return fail(KatetovWitness::Negative { x: a, y: b });
            }
        }
    }
    for a in 0..x.size() {
        for w in 0..x.size() {
            for b in 0..y.size() {
                if (f.get(a, b) - f.get(w, b)).abs() > *x.d(a, w) {
                    return fail(KatetovWitness::LipschitzX { x: a, w, y: b });
                }
                if x.d(a, w) > &(f.get(a, b) + f.get(w, b)) {
                    return fail(KatetovWitness::TriangleX { x: a, w, y: b });
                }
            }
        }
    }
    for a in 0..x.size() {
        for b in 0..y.size() {
            for c in 0..y.size() {
                if (f.get(a, b) - f.get(a, c)).abs() > *y.d(b, c) {
                    return fail(KatetovWitness::LipschitzY { x: a, y: b, z: c });
                }
                if y.d(b, c) > &(f.get(a, b) + f.get(a, c)) {
                    return fail(KatetovWitness::TriangleY { x: a, y: b, z: c });
                }
            }
        }
    }
    Ok(())
}

/// Amalgamation `f'(x, y) = min_{a ∈ A₀, b ∈ B₀} d(x, a) + f(a, b) + d(b, y)`
/// of a function `f` given on `A₀ × B₀` (rows indexed like `sub_x`, columns
/// like `sub_y`).
pub fn katetov_extend(
    f: &BiKatetov,
    sub_x: &[usize],
    sub_y: &[usize],
    x: &FiniteSpace,
    y: &FiniteSpace,
) -> Result<BiKatetov, ScottError> {
    if sub_x.is_empty() || sub_y.is_empty() {
        return Err(ScottError::EmptySubspace);
    }
    if f.rows != sub_x.len() || f.cols != sub_y.len() {
        return Err(ScottError::DimensionMismatch { expected: sub_x.len() * sub_y.len(), found: f.rows * f.cols });
    }
    sub_x.iter().try_for_each(|&i| x.check_index(i))?;
    sub_y.iter().try_for_each(|&j| y.check_index(j))?;
    let mut values = Vec::with_capacity(x.size() * y.size());
    for px in 0..x.size() {
        for py in 0..y.size() {
            let best = (0..sub_x.len())
                .flat_map(|i| (0..sub_y.len()).map(move |j| (i, j)))
                .map(|(i, j)| x.d(px, sub_x[i]) + f.get(i, j) + y.d(sub_y[j], py))
                .min()
                .expect("nonempty subspaces");
            values.push(best);
        }
    }
    Ok(BiKatetov { rows: x.size(), cols: y.size(), values })
}

/// `q_f = max(max_x min_y f(x,y), max_y min_x f(x,y))`.
pub fn q_error(f: &BiKatetov) -> Rational {
    let forth = (0..f.rows).map(|a| (0..f.cols).map(|b| f.get(a, b)).min().unwrap()).max();
    let back = (0..f.cols).map(|b| (0..f.rows).map(|a| f.get(a, b)).min().unwrap()).max();
    forth.into_iter().chain(back).max().cloned().unwrap_or_default()
}

/// `f(x, y) = min_{(a,b) ∈ R} d(x, a) + ε + d(b, y)` with `2ε` the
/// distortion of the correspondence `R`; a bi-Katetov function with
/// `q_f = ε`.
pub fn katetov_from_correspondence(
    x: &FiniteSpace,
    y: &FiniteSpace,
    pairs: &[(usize, usize)],
) -> Result<BiKatetov, ScottError> {
    if pairs.is_empty() {
        return Err(ScottError::EmptySubspace);
    }
    for &(a, b) in pairs {
        x.check_index(a)?;
        y.check_index(b)?;
    }
    let eps = pairs
        .iter()
        .flat_map(|&(a, b)| pairs.iter().map(move |&(c, e)| (x.d(a, c) - y.d(b, e)).abs()))
        .max()
        .unwrap()
        * Rational::new(1, 2);
    let mut values = Vec::with_capacity(x.size() * y.size());
    for px in 0..x.size() {
        for py in 0..y.size() {
            let best = pairs.iter().map(|&(a, b)| x.d(px, a) + &eps + y.d(b, py)).min().unwrap();
            values.push(best);
        }
    }
    Ok(BiKatetov { rows: x.size(), cols: y.size(), values })
}
