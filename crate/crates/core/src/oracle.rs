//! Brute-force reference tables for small instances.
//!
//! Every path probability is computed from the literal inclusion-exclusion
//! definition: for each subset `B` of the base-state times, with sign
//! `(-1)^|B|`, and for each ordered split of `B` into `B_1..B_m`, add the
//! `L*` product of the enlarged sets. Nothing here touches the recursion or
//! the forward scan.

use thiserror::Error;

use crate::model::{l_star, ModelParams};
use crate::scalar::{KahanSum, Scalar};

/// Largest table the oracle will build.
pub const MAX_TABLE: usize = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("(m+1)^n = {size} exceeds the table cap {cap}")]
    SizeExceeded { size: u128, cap: usize },

    #[error("cannot marginalize coordinate {coordinate} of a length-{n} table")]
    BadCoordinate { coordinate: usize, n: usize },
}

/// Probabilities of all `(m + 1)^n` total paths of length `n`.
///
/// Entry `code` holds the path whose base-`(m + 1)` digits, most significant
/// first, are `X_1 .. X_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationTable<T> {
    pub n: usize,
    pub m: usize,
    pub probs: Vec<T>,
}

impl<T: Scalar> EnumerationTable<T> {
    pub fn states(&self) -> usize {
        self.m + 1
    }

    /// Decodes entry `code` into its path.
    pub fn path(&self, code: usize) -> Vec<u8> {
        decode(code, self.n, self.states())
    }

    pub fn sequence_string(&self, code: usize) -> String {
        self.path(code).iter().map(|d| char::from(b'0' + d)).collect()
    }

    /// Index of a path in the table.
    pub fn code(&self, path: &[u8]) -> usize {
        path.iter().fold(0, |acc, &s| acc * self.states() + s as usize)
    }

    pub fn prob(&self, path: &[u8]) -> T {
        self.probs[self.code(path)]
    }

    pub fn total(&self) -> T {
        self.probs.iter().copied().collect::<KahanSum<T>>().value()
    }

    pub fn min(&self) -> T {
        self.probs.iter().copied().fold(T::infinity(), T::min)
    }

    /// Sums out coordinate `coordinate` (1-based), giving a length `n - 1`
    /// table of the remaining coordinates in their original order.
    pub fn marginalize(&self, coordinate: usize) -> Result<Self, OracleError> {
        if self.n < 2 || coordinate == 0 || coordinate > self.n {
            return Err(OracleError::BadCoordinate {
                coordinate,
                n: self.n,
            });
        }
        let s = self.states();
        let inner = s.pow((self.n - coordinate) as u32);
        let outer = self.probs.len() / (inner * s);
        let mut probs = vec![T::zero(); outer * inner];
        for hi in 0..outer {
            for lo in 0..inner {
                let acc: KahanSum<T> = (0..s)
                    .map(|d| self.probs[(hi * s + d) * inner + lo])
                    .collect();
                probs[hi * inner + lo] = acc.value();
            }
        }
        Ok(Self {
            n: self.n - 1,
            m: self.m,
            probs,
        })
    }

    /// Sums out every coordinate; the total mass.
    pub fn marginalize_all(&self) -> T {
        self.total()
    }

    /// CSV dump with header `sequence,probability`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sequence,probability\n");
        for code in 0..self.probs.len() {
            out.push_str(&format!(
                "{},{:.16e}\n",
                self.sequence_string(code),
                self.probs[code].as_f64()
            ));
        }
        out
    }
}

fn decode(mut code: usize, n: usize, s: usize) -> Vec<u8> {
    let mut path = vec![0u8; n];
    for slot in path.iter_mut().rev() {
        *slot = (code % s) as u8;
        code /= s;
    }
    path
}

/// Literal evaluation of `D*(A_1..A_m; A_0)`.
pub fn d_star_literal<T: Scalar>(params: &ModelParams<T>, sets: &[Vec<u64>], zeros: &[u64]) -> T {
    let m = params.m();
    let n0 = zeros.len();
    let mut acc = KahanSum::new();
    for size in 0..=n0 {
        let sign = if size % 2 == 0 { T::one() } else { -T::one() };
        for subset in subsets_of_size(n0, size) {
            // every map from the chosen times to states 1..=m
            let splits = m.pow(size as u32);
            for split in 0..splits {
                let mut enlarged: Vec<Vec<u64>> = sets.to_vec();
                let mut code = split;
                for &idx in &subset {
                    enlarged[code % m].push(zeros[idx]);
                    code /= m;
                }
                let mut term = sign;
                for (k, set) in enlarged.iter_mut().enumerate() {
                    set.sort_unstable();
                    term *= l_star(params, k + 1, set);
                }
                acc.add(term);
            }
        }
    }
    acc.value()
}

fn subsets_of_size(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..=(n - left) {
            cur.push(i);
            go(i + 1, n, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if size <= n {
        go(0, n, size, &mut Vec::with_capacity(size), &mut out);
    }
    out
}

/// Probability of every total path of length `n`.
pub fn enumerate_all<T: Scalar>(params: &ModelParams<T>, n: usize) -> Result<EnumerationTable<T>, OracleError> {
    let s = params.m() + 1;
    let size = (s as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if size > MAX_TABLE as u128 {
        return Err(OracleError::SizeExceeded {
            size,
            cap: MAX_TABLE,
        });
    }
    let probs = (0..size as usize)
        .map(|code| {
            let path = decode(code, n, s);
            let mut sets = vec![Vec::new(); s];
            for (i, &state) in path.iter().enumerate() {
                sets[state as usize].push(i as u64 + 1);
            }
            let zeros = std::mem::take(&mut sets[0]);
            d_star_literal(params, &sets[1..], &zeros)
        })
        .collect();
    Ok(EnumerationTable {
        n,
        m: params.m(),
        probs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn canonical() -> ModelParams<f64> {
        ModelParams::new(vec![0.8, 0.6], vec![0.2, 0.3], vec![0.1, 0.1]).unwrap()
    }

    #[test]
    fn one_step_marginals() {
        let t = enumerate_all(&canonical(), 1).unwrap();
        assert_relative_eq!(t.probs[0], 0.5, max_relative = 1e-15);
        assert_relative_eq!(t.probs[1], 0.2, max_relative = 1e-15);
        assert_relative_eq!(t.probs[2], 0.3, max_relative = 1e-15);
    }

    #[test]
    fn two_step_entry() {
        let t = enumerate_all(&canonical(), 2).unwrap();
        assert_relative_eq!(t.prob(&[1, 0]), 0.08, max_relative = 1e-14);
        assert_eq!(t.sequence_string(t.code(&[1, 0])), "10");
        assert!(t.to_csv().starts_with("sequence,probability\n00,"));
    }

    #[test]
    fn positive_and_normalized() {
        for n in 1..=6 {
            let t = enumerate_all(&canonical(), n).unwrap();
            assert!(t.min() > 0.0);
            assert!((t.total() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn marginals_are_consistent() {
        let p = canonical();
        let t1 = enumerate_all(&p, 1).unwrap();
        let t2 = enumerate_all(&p, 2).unwrap();
        let t3 = enumerate_all(&p, 3).unwrap();
        let last_out = t2.marginalize(2).unwrap();
        for (a, b) in last_out.probs.iter().zip(&t1.probs) {
            assert!((a - b).abs() < 1e-12);
        }
        // dropping the first coordinate leaves a shifted window
        let first_out = t3.marginalize(1).unwrap();
        for (a, b) in first_out.probs.iter().zip(&t2.probs) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((t2.marginalize_all() - 1.0).abs() < 1e-12);
        assert!(t1.marginalize(1).is_err());
    }

    #[test]
    fn size_cap() {
        assert!(matches!(
            enumerate_all(&canonical(), 15),
            Err(OracleError::SizeExceeded { .. })
        ));
    }

    #[test]
    fn subsets_enumerated() {
        assert_eq!(subsets_of_size(4, 2).len(), 6);
        assert_eq!(subsets_of_size(3, 0), vec![Vec::<usize>::new()]);
        assert!(subsets_of_size(2, 3).is_empty());
    }
}
