//! Signed-weight forward scan for `D*`.
//!
//! Expanding the inclusion-exclusion sum, `D*(A_1..A_m; A_0)` is a sum over
//! every way of sending each base-state time to "excluded" or to one of the
//! states `1..=m`, signed by `(-1)^(#sent)`, of the product of `L*` weights
//! of the enlarged sets. Scanning times in ascending order, the only thing a
//! future factor needs from a partial assignment is, per state, the last time
//! that state was used. The frontier keeps the summed signed weight of all
//! partial assignments sharing a last-occurrence vector.
//!
//! For state `k` the candidate last occurrences are the last real `k` time
//! (or "never") followed by every base-state time after it, so the frontier
//! is stored densely as an `m`-dimensional tensor whose axis `k` indexes
//! those candidates. Observing a real `k` collapses axis `k` to one slot;
//! observing a `0` grows every axis by one. Slots whose coordinates point at
//! the same base-state time on two axes are structurally zero.

use crate::model::ModelParams;
use crate::scalar::{KahanSum, Scalar};

use super::{EngineConfig, EngineError};

const NEVER: u64 = 0;

/// Evaluation state of the forward scan.
#[derive(Debug, Clone)]
pub struct DpFrontier<'a, T: Scalar> {
    params: &'a ModelParams<T>,
    config: EngineConfig,
    // candidates[k - 1]: candidate last-occurrence times of state k, NEVER first if unseen
    candidates: Vec<Vec<u64>>,
    weights: Vec<T>,
    scratch: Vec<T>,
    horizon: u64,
    ln_scale: T,
    zeros_seen: usize,
    work: u64,
}

impl<'a, T: Scalar> DpFrontier<'a, T> {
    pub fn new(params: &'a ModelParams<T>, config: EngineConfig) -> Self {
        Self {
            params,
            config,
            candidates: vec![vec![NEVER]; params.m()],
            weights: vec![T::one()],
            scratch: Vec::new(),
            horizon: 0,
            ln_scale: T::zero(),
            zeros_seen: 0,
            work: 0,
        }
    }

    pub fn params(&self) -> &'a ModelParams<T> {
        self.params
    }

    /// Last processed time, `0` before any observation.
    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// Number of stored slots (including structurally zero ones).
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Candidate count along each state axis.
    pub fn dims(&self) -> Vec<usize> {
        self.candidates.iter().map(Vec::len).collect()
    }

    /// Base-state times processed so far.
    pub fn zeros_seen(&self) -> usize {
        self.zeros_seen
    }

    /// Slot updates performed so far; a machine-independent cost counter.
    pub fn work(&self) -> u64 {
        self.work
    }

    /// Natural log of the shared scale factor applied to all weights.
    pub fn ln_scale(&self) -> T {
        self.ln_scale
    }

    /// Nonzero entries as `(last-occurrence vector, weight)`, with `None`
    /// for "never". Weights exclude the shared scale.
    pub fn entries(&self) -> Vec<(Vec<Option<u64>>, T)> {
        let dims = self.dims();
        let mut out = Vec::new();
        let mut coords = vec![0usize; dims.len()];
        for &w in &self.weights {
            if w != T::zero() {
                let key = coords
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| Some(self.candidates[k][c]).filter(|&t| t != NEVER))
                    .collect();
                out.push((key, w));
            }
            advance(&mut coords, &dims);
        }
        out
    }

    /// Sum of the weights, without the shared scale.
    pub fn scaled_total(&self) -> T {
        self.weights.iter().copied().collect::<KahanSum<T>>().value()
    }

    /// `D*` of everything observed so far. Underflows to zero for long
    /// histories; see [`DpFrontier::ln_total`].
    pub fn total(&self) -> T {
        self.scaled_total() * self.ln_scale.exp()
    }

    /// Natural log of [`DpFrontier::total`], valid in rescaled mode.
    pub fn ln_total(&self) -> T {
        self.scaled_total().ln() + self.ln_scale
    }

    /// `sum |w| / |sum w|`; large values flag cancellation.
    pub fn condition_estimate(&self) -> f64 {
        let abs: KahanSum<T> = self.weights.iter().map(|w| w.abs()).collect();
        let total = self.scaled_total().abs();
        if total == T::zero() {
            f64::INFINITY
        } else {
            (abs.value() / total).as_f64()
        }
    }

    /// Kernel factor for state `k` at `time` against each candidate.
    fn kernel_row(&self, k: usize, time: u64) -> Vec<T> {
        self.candidates[k - 1]
            .iter()
            .map(|&last| {
                if last == NEVER {
                    self.params.prob(k)
                } else {
                    self.params.kernel(k, time - last)
                }
            })
            .collect()
    }

    fn check_time(&self, time: u64) -> Result<(), EngineError> {
        if time <= self.horizon {
            return Err(EngineError::OutOfOrder {
                time,
                horizon: self.horizon,
            });
        }
        if time > self.config.horizon {
            return Err(EngineError::HorizonExceeded {
                time,
                horizon: self.config.horizon,
            });
        }
        Ok(())
    }

    /// Processes `X_time = state`. Times must be strictly increasing.
    pub fn observe(&mut self, time: u64, state: usize) -> Result<(), EngineError> {
        self.check_time(time)?;
        if state > self.params.m() {
            return Err(EngineError::Pattern(crate::model::PatternError::StateOutOfRange {
                index: time,
                state,
                m: self.params.m(),
            }));
        }
        let max_before = if state == 0 {
            self.observe_base(time)?
        } else {
            self.observe_state(time, state)
        };
        self.horizon = time;
        if self.config.rescale {
            self.rescale(max_before);
        }
        Ok(())
    }

    // Both update passes return the largest |weight| seen before the update.
    fn observe_state(&mut self, time: u64, k: usize) -> T {
        let row = self.kernel_row(k, time);
        let dims = self.dims();
        let mut new_dims = dims.clone();
        new_dims[k - 1] = 1;
        let mut new_strides = strides(&new_dims);
        new_strides[k - 1] = 0;

        self.scratch.clear();
        self.scratch.resize(new_dims.iter().product(), T::zero());
        let scratch = &mut self.scratch;
        let axis = k - 1;
        let mut max_abs = T::zero();
        remap(&self.weights, &dims, &new_strides, |coords, w, off| {
            max_abs = max_abs.max(w.abs());
            scratch[off] += w * row[coords[axis]];
        });
        self.work += self.weights.len() as u64;
        std::mem::swap(&mut self.weights, &mut self.scratch);
        self.candidates[k - 1] = vec![time];
        max_abs
    }

    fn observe_base(&mut self, time: u64) -> Result<T, EngineError> {
        let m = self.params.m();
        let rows: Vec<Vec<T>> = (1..=m).map(|k| self.kernel_row(k, time)).collect();
        let dims = self.dims();
        let new_dims: Vec<usize> = dims.iter().map(|d| d + 1).collect();
        let new_len = new_dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .unwrap_or(usize::MAX);
        if new_len > self.config.frontier_cap {
            return Err(EngineError::FrontierOverflow {
                entries: new_len,
                cap: self.config.frontier_cap,
            });
        }
        let new_strides = strides(&new_dims);
        // Offset from a slot to its "sent to k" partner: axis k moves to the new last index.
        self.scratch.clear();
        self.scratch.resize(new_len, T::zero());
        let scratch = &mut self.scratch;
        let mut max_abs = T::zero();
        remap(&self.weights, &dims, &new_strides, |coords, w, off| {
            if w == T::zero() {
                return;
            }
            max_abs = max_abs.max(w.abs());
            scratch[off] += w;
            for axis in 0..m {
                let target = off + (dims[axis] - coords[axis]) * new_strides[axis];
                scratch[target] -= w * rows[axis][coords[axis]];
            }
        });
        self.work += (self.weights.len() * (m + 1)) as u64;
        std::mem::swap(&mut self.weights, &mut self.scratch);
        for cands in &mut self.candidates {
            cands.push(time);
        }
        self.zeros_seen += 1;
        Ok(max_abs)
    }

    // Kernel factors lie in (0, 1], so one update moves magnitudes by at most
    // a factor of the frontier size; the pre-update maximum is a safe gauge.
    fn rescale(&mut self, max_abs: T) {
        let floor = T::min_positive_value().sqrt();
        if max_abs > T::zero() && (max_abs < floor || max_abs > floor.recip()) {
            let inv = max_abs.recip();
            for w in &mut self.weights {
                *w *= inv;
            }
            self.ln_scale += max_abs.ln();
        }
    }

    /// Scaled total and, for every axis longer than one, the marginal weight
    /// of each candidate; one pass over the slots.
    fn marginals(&self) -> (T, Vec<Option<Vec<T>>>) {
        let dims = self.dims();
        let scan_axes: Vec<usize> = (0..dims.len()).filter(|&a| dims[a] > 1).collect();
        let Some(&first) = scan_axes.first() else {
            return (self.weights[0], vec![None; dims.len()]);
        };
        let mut acc: Vec<Vec<KahanSum<T>>> = dims.iter().map(|&d| vec![KahanSum::new(); d]).collect();
        let mut coords = vec![0usize; dims.len()];
        for &w in &self.weights {
            if w != T::zero() {
                for &a in &scan_axes {
                    acc[a][coords[a]].add(w);
                }
            }
            advance(&mut coords, &dims);
        }
        let total = acc[first].iter().map(KahanSum::value).collect::<KahanSum<T>>().value();
        let margs = (0..dims.len())
            .map(|a| (dims[a] > 1).then(|| acc[a].iter().map(KahanSum::value).collect()))
            .collect();
        (total, margs)
    }

    /// Scaled total and the unnormalised weight of extending the history with
    /// `X_time = k` for every `k` in `1..=m` (index `k - 1`), both without the
    /// shared scale.
    ///
    /// Axes of length one (no base state since the last real `k`) reduce to
    /// `total * kernel`, the generalized Markov closed form.
    pub fn extension_weights(&self, time: u64) -> Result<(T, Vec<T>), EngineError> {
        self.check_time(time)?;
        let (total, margs) = self.marginals();
        let ext = (1..=self.params.m())
            .map(|k| {
                let row = self.kernel_row(k, time);
                match &margs[k - 1] {
                    None => total * row[0],
                    Some(marg) => marg
                        .iter()
                        .zip(&row)
                        .map(|(&s, &r)| s * r)
                        .collect::<KahanSum<T>>()
                        .value(),
                }
            })
            .collect();
        Ok((total, ext))
    }

    /// `P(X_time = s | history)` for `s` in `0..=m`, with `time` beyond the
    /// horizon. Also reports which non-base states used the closed form.
    pub fn conditional(&self, time: u64) -> Result<(Vec<T>, Vec<bool>), EngineError> {
        let (total, ext) = self.extension_weights(time)?;
        let floor = T::of(1e-300).max(T::min_positive_value());
        let absolute = if self.config.rescale { total } else { total * self.ln_scale.exp() };
        if !(total > T::zero()) || (!self.config.rescale && absolute < floor) {
            return Err(EngineError::ZeroDenominator {
                value: absolute.as_f64(),
            });
        }
        let mut probs = Vec::with_capacity(ext.len() + 1);
        let rest: KahanSum<T> = std::iter::once(total)
            .chain(ext.iter().map(|&e| -e))
            .collect();
        probs.push(rest.value() / total);
        probs.extend(ext.iter().map(|&e| e / total));
        let closed = self.candidates.iter().map(|c| c.len() == 1).collect();
        Ok((probs, closed))
    }
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for a in (0..dims.len().saturating_sub(1)).rev() {
        s[a] = s[a + 1] * dims[a + 1];
    }
    s
}

#[inline]
fn advance(coords: &mut [usize], dims: &[usize]) {
    for a in (0..dims.len()).rev() {
        coords[a] += 1;
        if coords[a] < dims[a] {
            return;
        }
        coords[a] = 0;
    }
}

/// Visits every slot of a row-major tensor with shape `dims`, passing its
/// coordinates, weight and its offset under `new_strides`.
#[inline]
fn remap<T: Copy, F: FnMut(&[usize], T, usize)>(
    weights: &[T],
    dims: &[usize],
    new_strides: &[usize],
    mut f: F,
) {
    let n = dims.len();
    let mut coords = vec![0usize; n];
    let mut off = 0usize;
    for &w in weights {
        f(&coords, w, off);
        for a in (0..n).rev() {
            coords[a] += 1;
            off += new_strides[a];
            if coords[a] < dims[a] {
                break;
            }
            off -= dims[a] * new_strides[a];
            coords[a] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn canonical() -> ModelParams<f64> {
        ModelParams::new(vec![0.8, 0.6], vec![0.2, 0.3], vec![0.1, 0.1]).unwrap()
    }

    #[test]
    fn strides_are_row_major() {
        assert_eq!(strides(&[2, 3, 4]), vec![12, 4, 1]);
        assert_eq!(strides(&[5]), vec![1]);
    }

    #[test]
    fn remap_offsets_follow_new_layout() {
        let dims = [2, 3];
        let new_strides = strides(&[3, 4]);
        let weights: Vec<usize> = (0..6).collect();
        let mut seen = Vec::new();
        remap(&weights, &dims, &new_strides, |c, w, off| seen.push((c.to_vec(), w, off)));
        assert_eq!(seen[4], (vec![1, 1], 4, 5));
        assert_eq!(seen[5], (vec![1, 2], 5, 6));
    }

    #[test]
    fn single_point_base_state() {
        let p = canonical();
        let mut f = DpFrontier::new(&p, EngineConfig::default());
        f.observe(1, 1).unwrap();
        f.observe(2, 0).unwrap();
        assert_relative_eq!(f.total(), 0.08, max_relative = 1e-14);
        assert_eq!(f.dims(), vec![2, 2]);
        // sent-to-2 branch keeps last_1 = 1; sent-to-1 branch moves it
        let entries = f.entries();
        assert_eq!(entries.len(), 3);
    }

    #[test]
    fn collapse_after_real_occurrence() {
        let p = canonical();
        let mut f = DpFrontier::new(&p, EngineConfig::default());
        for (t, s) in [(1, 0), (2, 0), (3, 2), (4, 0)] {
            f.observe(t, s).unwrap();
        }
        // state 1 never seen: never + three zeros; state 2: real last + one zero
        assert_eq!(f.dims(), vec![4, 2]);
        assert_eq!(f.zeros_seen(), 3);
        assert!(f.work() > 0);
    }

    #[test]
    fn rejects_out_of_order_and_horizon() {
        let p = canonical();
        let cfg = EngineConfig {
            horizon: 5,
            ..EngineConfig::default()
        };
        let mut f = DpFrontier::new(&p, cfg);
        f.observe(3, 1).unwrap();
        assert!(matches!(f.observe(3, 0), Err(EngineError::OutOfOrder { .. })));
        assert!(matches!(f.observe(6, 0), Err(EngineError::HorizonExceeded { .. })));
    }

    #[test]
    fn frontier_cap_is_enforced() {
        let p = canonical();
        let cfg = EngineConfig {
            frontier_cap: 20,
            ..EngineConfig::default()
        };
        let mut f = DpFrontier::new(&p, cfg);
        let mut t = 1;
        let err = loop {
            match f.observe(t, 0) {
                Ok(()) => t += 1,
                Err(e) => break e,
            }
        };
        assert!(matches!(err, EngineError::FrontierOverflow { entries: 25, cap: 20 }));
    }

    #[test]
    fn rescaled_mode_tracks_log_probability() {
        let p = canonical();
        let path: Vec<usize> = (0..3000).map(|i| [0, 1, 0, 2, 2, 0, 1][i % 7]).collect();
        let mut plain = DpFrontier::new(&p, EngineConfig::default());
        let mut scaled = DpFrontier::new(
            &p,
            EngineConfig {
                rescale: true,
                ..EngineConfig::default()
            },
        );
        let mut ln_chain = 0.0;
        for (i, &s) in path.iter().enumerate() {
            let t = i as u64 + 1;
            let (cond, _) = scaled.conditional(t).unwrap();
            ln_chain += cond[s].ln();
            plain.observe(t, s).unwrap();
            scaled.observe(t, s).unwrap();
        }
        assert_eq!(plain.total(), 0.0);
        assert!(plain.conditional(3001).is_err());
        assert!(scaled.ln_total().is_finite());
        assert_relative_eq!(scaled.ln_total(), ln_chain, max_relative = 1e-9);
        let (cond, _) = scaled.conditional(3001).unwrap();
        assert_relative_eq!(cond.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }
}
