//! Reference evaluator: peel the latest base-state time.
//!
//! With `i = max A_0` and `A_0' = A_0 \ {i}`,
//!
//! ```text
//! D*(A_1..A_m; A_0) = D*(A_1..A_m; A_0') - sum_k D*(.., A_k + {i}, ..; A_0')
//! ```
//!
//! down to `|A_0| <= 1`, where `D*` is the `L*` product (empty `A_0`) or the
//! single-point form `prod_k L*_k(A_k) * (1 - sum_k L*_k(A_k + {i0}) / L*_k(A_k))`.

use crate::model::{l_star, ModelParams};
use crate::scalar::{KahanSum, Scalar};

pub(super) fn d_star<T: Scalar>(params: &ModelParams<T>, sets: &mut [Vec<u64>], zeros: &[u64]) -> T {
    let m = params.m();
    let weights: Vec<T> = (1..=m).map(|k| l_star(params, k, &sets[k - 1])).collect();
    peel(params, sets, &weights, zeros)
}

fn peel<T: Scalar>(params: &ModelParams<T>, sets: &mut [Vec<u64>], weights: &[T], zeros: &[u64]) -> T {
    let m = params.m();
    match zeros {
        [] => weights.iter().copied().fold(T::one(), |a, b| a * b),
        [i0] => {
            // product form of the single-point identity, free of divisions
            let mut acc = KahanSum::new();
            acc.add(weights.iter().copied().fold(T::one(), |a, b| a * b));
            for k in 1..=m {
                let pos = insert_sorted(&mut sets[k - 1], *i0);
                let grown = l_star(params, k, &sets[k - 1]);
                sets[k - 1].remove(pos);
                let others = (1..=m)
                    .filter(|&j| j != k)
                    .fold(T::one(), |a, j| a * weights[j - 1]);
                acc.add(-(grown * others));
            }
            acc.value()
        }
        [rest @ .., last] => {
            let mut acc = KahanSum::new();
            acc.add(peel(params, sets, weights, rest));
            let mut grown_weights = weights.to_vec();
            for k in 1..=m {
                let pos = insert_sorted(&mut sets[k - 1], *last);
                grown_weights[k - 1] = l_star(params, k, &sets[k - 1]);
                acc.add(-peel(params, sets, &grown_weights, rest));
                grown_weights[k - 1] = weights[k - 1];
                sets[k - 1].remove(pos);
            }
            acc.value()
        }
    }
}

fn insert_sorted(set: &mut Vec<u64>, t: u64) -> usize {
    let pos = set.partition_point(|&x| x < t);
    set.insert(pos, t);
    pos
}
