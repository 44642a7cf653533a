//! Gromov–Hausdorff distance: from stabilized ranks, and by direct search
//! over correspondences.

use serde::Serialize;

use super::rank::{RankEngine, DEFAULT_ALPHA_CEILING};
use super::{common_scale_factor, FiniteSpace, ScottError};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GhResult {
    /// Distance between the rescaled spaces.
    pub value: Rational,
    /// Factor applied to both metrics first.
    pub scale_factor: Rational,
    pub alpha_star: usize,
}

/// `r_{α*,0}` between `x` and `y` after a common rescaling below diameter 1.
pub fn gh_rank(x: &FiniteSpace, y: &FiniteSpace) -> Result<GhResult, ScottError> {
    let scale_factor = common_scale_factor([x, y]);
    let (xs, ys) = (x.scaled(&scale_factor), y.scaled(&scale_factor));
    let mut engine = RankEngine::new(&xs, &ys)?;
    let alpha_star = engine.stabilize(xs.size() * ys.size(), DEFAULT_ALPHA_CEILING)?;
    let value = engine.value(alpha_star, &[], &[])?;
    Ok(GhResult { value, scale_factor, alpha_star })
}

/// Branch and bound over maps `f: X → Y` and `g: Y → X`. Every
/// correspondence contains the graphs of such a pair (with `g` transposed),
/// and shrinking a correspondence never increases its distortion, so the
/// minimum over these pairs is the minimum over all correspondences.
struct Search<'a> {
    x: &'a FiniteSpace,
    y: &'a FiniteSpace,
    /// Sorted distinct distortion values.
    levels: Vec<Rational>,
    /// `gap[s·P + t]`: level of `|d(a, a') − d(b, b')|` for pairs `s`, `t`.
    gap: Vec<u16>,
    best: u16,
}

impl Search<'_> {
    fn pair(&self, a: usize, b: usize) -> usize {
        a * self.y.size() + b
    }

    fn dfs(&mut self, step: usize, chosen: &mut Vec<usize>, cur: u16) {
        if cur >= self.best {
            return;
        }
        let (nx, ny) = (self.x.size(), self.y.size());
        if step == nx + ny {
            self.best = cur;
            return;
        }
        let p = nx * ny;
        let options: Vec<usize> = if step < nx {
            (0..ny).map(|b| self.pair(step, b)).collect()
        } else {
            (0..nx).map(|a| self.pair(a, step - nx)).collect()
        };
        for s in options {
            let worst = chosen.iter().map(|&t| self.gap[s * p + t]).max().unwrap_or(0).max(cur);
            if worst < self.best {
                chosen.push(s);
                self.dfs(step + 1, chosen, worst);
                chosen.pop();
            }
        }
    }
}

fn min_distortion(x: &FiniteSpace, y: &FiniteSpace, pinned: &[(usize, usize)], budget: u64) -> Result<Rational, ScottError> {
    let (nx, ny) = (x.size(), y.size());
    let leaves = (ny as u128)
        .checked_pow(nx as u32)
        .and_then(|f| f.checked_mul((nx as u128).checked_pow(ny as u32)?))
        .unwrap_or(u128::MAX);
    if leaves > budget as u128 {
        return Err(ScottError::BudgetExceeded { what: format!("{leaves} map pairs"), budget });
    }
    let p = nx * ny;
    let raw = |s: usize, t: usize| (x.d(s / ny, t / ny) - y.d(s % ny, t % ny)).abs();
    let mut levels: Vec<Rational> = (0..p).flat_map(|s| (0..p).map(move |t| (s, t))).map(|(s, t)| raw(s, t)).collect();
    levels.push(Rational::zero());
    levels.sort();
    levels.dedup();
    let gap = (0..p * p).map(|i| levels.binary_search(&raw(i / p, i % p)).unwrap() as u16).collect();
    let mut search = Search { x, y, levels, gap, best: u16::MAX };
    let mut chosen: Vec<usize> = pinned.iter().map(|&(a, b)| search.pair(a, b)).collect();
    let start = chosen
        .iter()
        .flat_map(|&s| chosen.iter().map(move |&t| (s, t)))
        .map(|(s, t)| search.gap[s * p + t])
        .max()
        .unwrap_or(0);
    search.dfs(0, &mut chosen, start);
    Ok(search.levels[search.best as usize].clone())
}

/// Half the least distortion of a correspondence between `x` and `y`.
pub fn gh_bruteforce(x: &FiniteSpace, y: &FiniteSpace, budget: u64) -> Result<Rational, ScottError> {
    Ok(min_distortion(x, y, &[], budget)? * Rational::new(1, 2))
}

/// Half the least distortion of a correspondence containing every pair
/// `(a_i, b_i)`.
pub fn delta_k(x: &FiniteSpace, y: &FiniteSpace, a: &[usize], b: &[usize], budget: u64) -> Result<Rational, ScottError> {
    if a.len() != b.len() {
        return Err(ScottError::LengthMismatch(a.len(), b.len()));
    }
    a.iter().try_for_each(|&i| x.check_index(i))?;
    b.iter().try_for_each(|&j| y.check_index(j))?;
    let pinned: Vec<(usize, usize)> = a.iter().copied().zip(b.iter().copied()).collect();
    Ok(min_distortion(x, y, &pinned, budget)? * Rational::new(1, 2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    const BUDGET: u64 = 10_000_000;

    fn pair(d: Rational) -> FiniteSpace {
        FiniteSpace::new(2, vec![q(0, 1), d.clone(), d, q(0, 1)]).unwrap()
    }

    #[test]
    fn point_and_pair() {
        let p = FiniteSpace::point();
        let two = pair(q(2, 3));
        assert_eq!(gh_bruteforce(&p, &two, BUDGET).unwrap(), q(1, 3));
        assert_eq!(gh_bruteforce(&two, &p, BUDGET).unwrap(), q(1, 3));
        let r = gh_rank(&p, &two).unwrap();
        assert_eq!((r.value, r.scale_factor), (q(1, 3), q(1, 1)));
    }

    #[test]
    fn identical_spaces() {
        let x = FiniteSpace::new(3, vec![q(0, 1), q(1, 4), q(1, 2), q(1, 4), q(0, 1), q(3, 4), q(1, 2), q(3, 4), q(0, 1)]).unwrap();
        assert_eq!(gh_bruteforce(&x, &x, BUDGET).unwrap(), q(0, 1));
        assert_eq!(gh_rank(&x, &x).unwrap().value, q(0, 1));
        assert_eq!(delta_k(&x, &x, &[0, 2], &[0, 2], BUDGET).unwrap(), q(0, 1));
        assert!(delta_k(&x, &x, &[0, 2], &[2, 0], BUDGET).unwrap() > q(0, 1));
    }

    #[test]
    fn rescaling_is_reported() {
        let a = pair(q(1, 1));
        let b = pair(q(3, 1));
        let r = gh_rank(&a, &b).unwrap();
        assert_eq!(r.scale_factor, q(1, 4));
        assert_eq!(r.value, q(1, 4));
        let c = r.scale_factor.clone();
        assert_eq!(gh_bruteforce(&a.scaled(&c), &b.scaled(&c), BUDGET).unwrap(), r.value);
    }

    #[test]
    fn budget() {
        let x = FiniteSpace::new(3, vec![q(0, 1), q(1, 4), q(1, 2), q(1, 4), q(0, 1), q(3, 4), q(1, 2), q(3, 4), q(0, 1)]).unwrap();
        assert!(matches!(gh_bruteforce(&x, &x, 100), Err(ScottError::BudgetExceeded { .. })));
    }
}
