use std::fmt;

use num_traits::ToPrimitive;

use super::ScottError;
use crate::rational::Rational;
use crate::structure::StructureCode;

/// A finite metric space with rational distances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteSpace {
    size: usize,
    dist: Vec<Rational>,
}

impl FiniteSpace {
    pub fn new(size: usize, dist: Vec<Rational>) -> Result<Self, ScottError> {
        let code = StructureCode::metric(size, dist)?;
        Self::from_structure(&code)
    }

    /// The metric part of a code. Distinct points must be at positive
    /// distance; quotient the code first if they are not.
    pub fn from_structure(code: &StructureCode) -> Result<Self, ScottError> {
        code.validate_metric()?;
        let n = code.size();
        for i in 0..n {
            for j in i + 1..n {
                if code.d(i, j).is_zero() {
                    return Err(ScottError::ZeroDistance(i, j));
                }
            }
        }
        Ok(FiniteSpace { size: n, dist: code.dist_table().to_vec() })
    }

    pub fn point() -> Self {
        FiniteSpace { size: 1, dist: vec![Rational::zero()] }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn d(&self, i: usize, j: usize) -> &Rational {
        &self.dist[i * self.size + j]
    }

    pub fn dist_table(&self) -> &[Rational] {
        &self.dist
    }

    pub fn diameter(&self) -> Rational {
        self.dist.iter().cloned().max().unwrap_or_default()
    }

    pub fn to_structure(&self) -> StructureCode {
        StructureCode::metric(self.size, self.dist.clone()).expect("dimensions match")
    }

    pub fn scaled(&self, factor: &Rational) -> Self {
        FiniteSpace { size: self.size, dist: self.dist.iter().map(|d| d * factor).collect() }
    }

    pub fn check_index(&self, i: usize) -> Result<(), ScottError> {
        if i < self.size {
            Ok(())
        } else {
            Err(ScottError::IndexOutOfRange { index: i, size: self.size })
        }
    }

    pub fn require_small_diameter(&self) -> Result<(), ScottError> {
        let diam = self.diameter();
        if diam >= Rational::one() {
            return Err(ScottError::DiameterTooLarge(diam));
        }
        Ok(())
    }
}

impl fmt::Display for FiniteSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.size {
            let row: Vec<String> = (0..self.size).map(|j| self.d(i, j).to_string()).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// `1 / (⌊max diameter⌋ + 1)`, which brings every given space below
/// diameter 1 and is 1 when they already are.
pub fn common_scale_factor<'a>(spaces: impl IntoIterator<Item = &'a FiniteSpace>) -> Rational {
    let diam = spaces.into_iter().map(FiniteSpace::diameter).max().unwrap_or_default();
    let floor = diam.numer() / diam.denom();
    let floor = floor.to_i64().expect("diameter fits in i64");
    Rational::new(1, floor + 1)
}
