//! Finite Markov chains and the Markov-regenerative reward ratio.

use thiserror::Error;

use crate::linalg::{solve_dense, strongly_connected};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarkovError {
    #[error("chain has no states")]
    Empty,
    #[error("matrix is not square ({rows} rows, row {row} has {len} entries)")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("{0} labels for {1} states")]
    LabelCount(usize, usize),
    #[error("row {row} sums to {sum}, expected {expected}")]
    RowSum { row: usize, sum: f64, expected: f64 },
    #[error("entry ({row}, {col}) = {value} is out of range")]
    BadEntry { row: usize, col: usize, value: f64 },
    #[error("chain has more than one recurrent class; unreachable from `{anchor}`: {unreachable:?}")]
    Reducible { anchor: String, unreachable: Vec<String> },
    #[error("not irreducible: {unreachable:?} cannot be reached from `{anchor}`")]
    NotIrreducible { anchor: String, unreachable: Vec<String> },
    #[error("linear system for the stationary distribution is singular")]
    Singular,
    #[error("dimension mismatch: {0} probabilities, {1} rewards, {2} cycle times")]
    DimensionMismatch(usize, usize, usize),
    #[error("expected cycle length is zero")]
    ZeroCycle,
}

fn row_tolerance<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(64.0))
}

fn check_square<T>(labels: &[String], rows: &[Vec<T>]) -> Result<(), MarkovError> {
    let n = rows.len();
    if n == 0 {
        return Err(MarkovError::Empty);
    }
    if labels.len() != n {
        return Err(MarkovError::LabelCount(labels.len(), n));
    }
    if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(MarkovError::NotSquare { rows: n, row, len: r.len() });
    }
    Ok(())
}

fn adjacency<T: Real>(rows: &[Vec<T>]) -> Vec<Vec<usize>> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            r.iter()
                .enumerate()
                .filter(|&(j, v)| j != i && *v > T::zero())
                .map(|(j, _)| j)
                .collect()
        })
        .collect()
}

/// Solves `pi A = 0`, `sum(pi) = 1` where `A` is `P - I` or a generator.
fn stationary_of<T: Real>(a: &[Vec<T>]) -> Result<Vec<T>, MarkovError> {
    let n = a.len();
    // Transposed system with the last equation replaced by normalization.
    let mut m: Vec<Vec<T>> = (0..n).map(|i| (0..n).map(|j| a[j][i]).collect()).collect();
    m[n - 1] = vec![T::one(); n];
    let mut rhs = vec![T::zero(); n];
    rhs[n - 1] = T::one();
    let mut pi = solve_dense(m, rhs).ok_or(MarkovError::Singular)?;
    for v in pi.iter_mut() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
    let total: T = pi.iter().copied().sum();
    for v in pi.iter_mut() {
        *v /= total;
    }
    Ok(pi)
}

/// Discrete-time chain with a row-stochastic transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDtmc<T> {
    labels: Vec<String>,
    p: Vec<Vec<T>>,
}

impl<T: Real> FiniteDtmc<T> {
    pub fn new(labels: Vec<String>, p: Vec<Vec<T>>) -> Result<Self, MarkovError> {
        check_square(&labels, &p)?;
        let tol = row_tolerance::<T>();
        for (i, row) in p.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !(v >= T::zero() && v <= T::one()) {
                    return Err(MarkovError::BadEntry {
                        row: i,
                        col: j,
                        value: v.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
            let sum: T = row.iter().copied().sum();
            if (sum - T::one()).abs() > tol {
                return Err(MarkovError::RowSum {
                    row: i,
                    sum: sum.to_f64().unwrap_or(f64::NAN),
                    expected: 1.0,
                });
            }
        }
        Ok(Self { labels, p })
    }

    /// Chain with labels `0..n`.
    pub fn unlabeled(p: Vec<Vec<T>>) -> Result<Self, MarkovError> {
        let labels = (0..p.len()).map(|i| i.to_string()).collect();
        Self::new(labels, p)
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &[Vec<T>] {
        &self.p
    }

    pub fn prob(&self, from: usize, to: usize) -> T {
        self.p[from][to]
    }

    /// Verifies there is exactly one closed communicating class.
    pub fn check_single_recurrent_class(&self) -> Result<(), MarkovError> {
        let adj = adjacency(&self.p);
        let (comp, ncomp) = strongly_connected(&adj);
        let mut closed = vec![true; ncomp];
        for (v, edges) in adj.iter().enumerate() {
            if edges.iter().any(|&w| comp[w] != comp[v]) {
                closed[comp[v]] = false;
            }
        }
        let closed_ids: Vec<usize> = (0..ncomp).filter(|&c| closed[c]).collect();
        if closed_ids.len() <= 1 {
            return Ok(());
        }
        let anchor = (0..self.len()).find(|&v| comp[v] == closed_ids[0]).unwrap();
        let reach = reachable_from(&adj, anchor);
        Err(MarkovError::Reducible {
            anchor: self.labels[anchor].clone(),
            unreachable: (0..self.len())
                .filter(|&v| !reach[v])
                .map(|v| self.labels[v].clone())
                .collect(),
        })
    }

    /// Stationary distribution `pi = pi P`.
    pub fn stationary(&self) -> Result<Vec<T>, MarkovError> {
        self.check_single_recurrent_class()?;
        let a: Vec<Vec<T>> = self
            .p
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.iter()
                    .enumerate()
                    .map(|(j, &v)| if i == j { v - T::one() } else { v })
                    .collect()
            })
            .collect();
        stationary_of(&a)
    }

    /// `max_j |(pi P)_j - pi_j|`.
    pub fn residual(&self, pi: &[T]) -> T {
        (0..self.len())
            .map(|j| {
                let s: T = (0..self.len()).map(|i| pi[i] * self.p[i][j]).sum();
                (s - pi[j]).abs()
            })
            .fold(T::zero(), T::max)
    }
}

fn reachable_from(adj: &[Vec<usize>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

/// Continuous-time chain given by its generator (rates per unit time).
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteCtmc<T> {
    labels: Vec<String>,
    q: Vec<Vec<T>>,
}

impl<T: Real> FiniteCtmc<T> {
    pub fn new(labels: Vec<String>, q: Vec<Vec<T>>) -> Result<Self, MarkovError> {
        check_square(&labels, &q)?;
        let scale = q
            .iter()
            .flat_map(|r| r.iter())
            .fold(T::zero(), |m, v| m.max(v.abs()));
        let tol = row_tolerance::<T>() * scale.max(T::one());
        for (i, row) in q.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || (i != j && v < T::zero()) {
                    return Err(MarkovError::BadEntry {
                        row: i,
                        col: j,
                        value: v.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
            let sum: T = row.iter().copied().sum();
            if sum.abs() > tol {
                return Err(MarkovError::RowSum {
                    row: i,
                    sum: sum.to_f64().unwrap_or(f64::NAN),
                    expected: 0.0,
                });
            }
        }
        Ok(Self { labels, q })
    }

    /// Generator from off-diagonal rates; the diagonal is filled in.
    pub fn from_rates(labels: Vec<String>, mut rates: Vec<Vec<T>>) -> Result<Self, MarkovError> {
        for (i, row) in rates.iter_mut().enumerate() {
            if i < row.len() {
                row[i] = T::zero();
                let out: T = row.iter().copied().sum();
                row[i] = -out;
            }
        }
        Self::new(labels, rates)
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn generator(&self) -> &[Vec<T>] {
        &self.q
    }

    pub fn check_irreducible(&self) -> Result<(), MarkovError> {
        let adj = adjacency(&self.q);
        let (comp, ncomp) = strongly_connected(&adj);
        if ncomp <= 1 {
            return Ok(());
        }
        let reach = reachable_from(&adj, 0);
        let mut unreachable: Vec<String> = (0..self.len())
            .filter(|&v| !reach[v])
            .map(|v| self.labels[v].clone())
            .collect();
        if unreachable.is_empty() {
            // Everything is reachable from 0, so 0 is not reachable back.
            unreachable = (0..self.len())
                .filter(|&v| comp[v] != comp[0])
                .map(|v| self.labels[v].clone())
                .collect();
        }
        Err(MarkovError::NotIrreducible {
            anchor: self.labels[0].clone(),
            unreachable,
        })
    }

    /// Stationary distribution `pi Q = 0`.
    pub fn stationary(&self) -> Result<Vec<T>, MarkovError> {
        self.check_irreducible()?;
        stationary_of(&self.q)
    }

    /// `max_j |(pi Q)_j|`.
    pub fn residual(&self, pi: &[T]) -> T {
        (0..self.len())
            .map(|j| (0..self.len()).map(|i| pi[i] * self.q[i][j]).sum::<T>().abs())
            .fold(T::zero(), T::max)
    }
}

/// Product-form stationary law of a birth-death chain. `up[k]` is the
/// rate (or probability) `k -> k+1`, `down[k]` the one for `k+1 -> k`.
pub fn birth_death_stationary<T: Real>(up: &[T], down: &[T]) -> Vec<T> {
    assert_eq!(up.len(), down.len());
    let mut w = Vec::with_capacity(up.len() + 1);
    w.push(T::one());
    for (u, d) in up.iter().zip(down) {
        let last = *w.last().unwrap();
        w.push(last * *u / *d);
    }
    let total: T = w.iter().copied().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Long-run reward rate `sum pi_k r_k / sum pi_k c_k` of a Markov
/// regenerative process embedded at cycle boundaries.
pub fn mrgp_ratio<T: Real>(pi: &[T], reward: &[T], cycle_time: &[T]) -> Result<T, MarkovError> {
    if pi.len() != reward.len() || pi.len() != cycle_time.len() {
        return Err(MarkovError::DimensionMismatch(pi.len(), reward.len(), cycle_time.len()));
    }
    let num: T = pi.iter().zip(reward).map(|(p, r)| *p * *r).sum();
    let den: T = pi.iter().zip(cycle_time).map(|(p, c)| *p * *c).sum();
    if !(den > T::zero()) {
        return Err(MarkovError::ZeroCycle);
    }
    Ok(num / den)
}
