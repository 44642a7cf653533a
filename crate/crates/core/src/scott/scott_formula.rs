//! Formulas expressing ranks against a fixed finite space.
//!
//! For a finite space `X` and `ā ∈ X^n`, `ψ_{α,ā}(y_0, ..., y_{n-1})`
//! evaluates in a structure `q` of diameter below 1 at `b̄` to
//! `r_α^{X,q}(ā, b̄)`. The maxima and minima over `X` become finite `max`
//! and `min`, those over `q` become quantifiers.

use std::collections::HashMap;
use std::sync::Arc;

use super::{FiniteSpace, ScottError};
use crate::formula::{Formula, Var};
use crate::rational::Rational;

pub fn scott_var(i: usize) -> Var {
    Var::new(&format!("y{i}"))
}

struct Builder<'a> {
    x: &'a FiniteSpace,
    memo: HashMap<(usize, Vec<usize>), Arc<Formula>>,
}

impl Builder<'_> {
    fn psi(&mut self, alpha: usize, a: &[usize]) -> Arc<Formula> {
        if let Some(f) = self.memo.get(&(alpha, a.to_vec())) {
            return f.clone();
        }
        let n = a.len();
        let f = if alpha == 0 {
            let gaps = (0..n).flat_map(|i| (i + 1..n).map(move |k| (i, k))).map(|(i, k)| {
                Formula::abs(Formula::sub(
                    Formula::constant(self.x.d(a[i], a[k]).clone()),
                    Formula::dhat(scott_var(i), scott_var(k)),
                ))
            });
            match Formula::max_all(gaps) {
                Some(g) => Formula::scale(Rational::new(1, 2), g),
                None => Formula::constant(Rational::zero()),
            }
        } else {
            let extended: Vec<Arc<Formula>> = (0..self.x.size())
                .map(|xi| {
                    let mut ax = a.to_vec();
                    ax.push(xi);
                    self.psi(alpha - 1, &ax)
                })
                .collect();
            let yn = scott_var(n);
            let forth = Formula::max_all(extended.iter().map(|f| Formula::inf(yn.clone(), f.clone()))).unwrap();
            let back = Formula::sup(yn, Formula::min_all(extended).unwrap());
            Formula::max(forth, back)
        };
        self.memo.insert((alpha, a.to_vec()), f.clone());
        f
    }
}

/// `ψ_{α,ā}` with free variables among `y_0, ..., y_{|ā|-1}`.
pub fn scott_formula(x: &FiniteSpace, alpha: usize, a: &[usize], budget: u64) -> Result<Arc<Formula>, ScottError> {
    a.iter().try_for_each(|&i| x.check_index(i))?;
    let nodes: u128 = (0..=alpha as u32)
        .map(|j| (x.size() as u128).checked_pow(j).unwrap_or(u128::MAX))
        .fold(0u128, u128::saturating_add);
    if nodes > budget as u128 {
        return Err(ScottError::BudgetExceeded { what: format!("{nodes} subformulas"), budget });
    }
    Ok(Builder { x, memo: HashMap::new() }.psi(alpha, a))
}
