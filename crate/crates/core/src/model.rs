//! Model parameters, occupancy patterns and the elementary `L*` weight.
//!
//! A model has `m` non-base states `1..=m`, each carrying a Hurst index
//! `H_k`, a marginal probability `p_k` and a coupling constant `c_k`. The base
//! state `0` receives the remaining mass `p_0 = 1 - sum(p_k)`.
//!
//! The single-state weight of an ascending index set `A = {i_0 < ... < i_n}`
//! is
//!
//! ```text
//! L*_k(A) = p_k * prod_j (p_k + c_k * (i_j - i_{j-1})^(2 H_k - 2))
//! ```
//!
//! with `L*_k({}) = 1`. It is the probability that state `k` is observed at
//! every time in `A`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::scalar::Scalar;

/// Gaps `1..=DEFAULT_GAP_MEMO` have their kernel values tabulated per state.
pub const DEFAULT_GAP_MEMO: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("model needs at least one non-base state")]
    EmptyModel,

    #[error("parameter vectors disagree in length: m={m}, H has {h}, p has {p}, c has {c}")]
    LengthMismatch { m: usize, h: usize, p: usize, c: usize },

    #[error("{name}_{state} = {value} is outside (0, 1)")]
    RangeViolation {
        name: &'static str,
        state: usize,
        value: f64,
    },

    #[error("sum of p_k is {sum}, leaving no mass for state 0")]
    SimplexViolation { sum: f64 },

    #[error("adjacent-gap positivity sum is {sum}, must be < 1")]
    AssumptionViolation { sum: f64 },

    #[error("non-finite value in {name}")]
    NonFinite { name: &'static str },

    #[error("parameter file: {0}")]
    Parse(String),
}

/// Immutable parameter set `(H, p, c)` plus derived `p_0`.
///
/// Construct with [`ModelParams::new`], which enforces the positivity
/// conditions, or [`ModelParams::new_unchecked`] for experiments outside the
/// admissible region. Results computed from unchecked parameters are flagged
/// as tainted.
#[derive(Debug, Clone)]
pub struct ModelParams<T: Scalar> {
    hurst: Vec<T>,
    prob: Vec<T>,
    coupling: Vec<T>,
    p0: T,
    validated: bool,
    // kernel[k - 1][g - 1] = p_k + c_k g^(2H_k - 2)
    kernel: Vec<Vec<T>>,
}

impl<T: Scalar> ModelParams<T> {
    /// Validates and builds a parameter set.
    pub fn new(hurst: Vec<T>, prob: Vec<T>, coupling: Vec<T>) -> Result<Self, ParamError> {
        Self::check_shape(&hurst, &prob, &coupling)?;
        for (name, values) in [("H", &hurst), ("p", &prob), ("c", &coupling)] {
            for (i, &v) in values.iter().enumerate() {
                if !(v > T::zero() && v < T::one()) {
                    return Err(ParamError::RangeViolation {
                        name,
                        state: i + 1,
                        value: v.as_f64(),
                    });
                }
            }
        }
        let psum: T = prob.iter().copied().sum();
        if psum >= T::one() {
            return Err(ParamError::SimplexViolation { sum: psum.as_f64() });
        }
        let mut params = Self::build(hurst, prob, coupling, true);
        let sum = params.validation_sum();
        if !(sum < T::one()) {
            return Err(ParamError::AssumptionViolation { sum: sum.as_f64() });
        }
        params.validated = true;
        Ok(params)
    }

    /// Builds a parameter set without the range, simplex or positivity checks.
    ///
    /// Only the vector shapes and finiteness are checked. Everything derived
    /// from the result reports `tainted = true`.
    pub fn new_unchecked(
        hurst: Vec<T>,
        prob: Vec<T>,
        coupling: Vec<T>,
    ) -> Result<Self, ParamError> {
        Self::check_shape(&hurst, &prob, &coupling)?;
        Ok(Self::build(hurst, prob, coupling, false))
    }

    fn check_shape(hurst: &[T], prob: &[T], coupling: &[T]) -> Result<(), ParamError> {
        let m = hurst.len();
        if m == 0 {
            return Err(ParamError::EmptyModel);
        }
        if prob.len() != m || coupling.len() != m {
            return Err(ParamError::LengthMismatch {
                m,
                h: hurst.len(),
                p: prob.len(),
                c: coupling.len(),
            });
        }
        for (name, values) in [("H", hurst), ("p", prob), ("c", coupling)] {
            if values.iter().any(|v| !v.is_finite()) {
                return Err(ParamError::NonFinite { name });
            }
        }
        Ok(())
    }

    fn build(hurst: Vec<T>, prob: Vec<T>, coupling: Vec<T>, validated: bool) -> Self {
        let p0 = T::one() - prob.iter().copied().sum::<T>();
        let kernel = (0..hurst.len())
            .map(|i| {
                (1..=DEFAULT_GAP_MEMO as u64)
                    .map(|g| kernel_value(hurst[i], prob[i], coupling[i], g))
                    .collect()
            })
            .collect();
        Self {
            hurst,
            prob,
            coupling,
            p0,
            validated,
            kernel,
        }
    }

    /// Number of non-base states.
    pub fn m(&self) -> usize {
        self.hurst.len()
    }

    /// Hurst index of state `k` in `1..=m`.
    pub fn hurst(&self, k: usize) -> T {
        self.hurst[k - 1]
    }

    /// Marginal probability of state `k` in `0..=m`.
    pub fn prob(&self, k: usize) -> T {
        if k == 0 {
            self.p0
        } else {
            self.prob[k - 1]
        }
    }

    pub fn coupling(&self, k: usize) -> T {
        self.coupling[k - 1]
    }

    pub fn p0(&self) -> T {
        self.p0
    }

    pub fn hurst_vec(&self) -> &[T] {
        &self.hurst
    }

    pub fn prob_vec(&self) -> &[T] {
        &self.prob
    }

    pub fn coupling_vec(&self) -> &[T] {
        &self.coupling
    }

    /// `false` when built through [`ModelParams::new_unchecked`].
    pub fn is_validated(&self) -> bool {
        self.validated
    }

    /// `p_k + c_k * gap^(2 H_k - 2)` for `gap >= 1`.
    #[inline]
    pub fn kernel(&self, k: usize, gap: u64) -> T {
        debug_assert!(gap >= 1);
        let table = &self.kernel[k - 1];
        match table.get(gap as usize - 1) {
            Some(&v) => v,
            None => kernel_value(self.hurst[k - 1], self.prob[k - 1], self.coupling[k - 1], gap),
        }
    }

    /// Per-state terms `(p_k + c_k)^2 / (p_k + c_k 2^(2H_k - 2))`.
    pub fn validation_terms(&self) -> Vec<T> {
        (1..=self.m())
            .map(|k| {
                let a = self.kernel(k, 1);
                a * a / self.kernel(k, 2)
            })
            .collect()
    }

    /// Adjacent-integer worst case of the three-point ratio sum; the model is
    /// admissible iff this is below one.
    pub fn validation_sum(&self) -> T {
        self.validation_terms().into_iter().sum()
    }

    /// Three-point ratio sum for `i0 < i1 < i2`.
    pub fn triple_ratio_sum(&self, i0: u64, i1: u64, i2: u64) -> T {
        assert!(i0 < i1 && i1 < i2, "triple must be strictly ascending");
        (1..=self.m())
            .map(|k| self.kernel(k, i1 - i0) * self.kernel(k, i2 - i1) / self.kernel(k, i2 - i0))
            .sum()
    }

    /// Exhaustive scan of all triples `0 <= i0 < i1 < i2 <= horizon`.
    ///
    /// Debug utility corroborating that the adjacent triple is the maximiser.
    /// Returns the largest sum together with the gaps `(i1 - i0, i2 - i1)` at
    /// which it occurs.
    pub fn scan_triples(&self, horizon: u64) -> (T, (u64, u64)) {
        let mut best = (T::neg_infinity(), (0, 0));
        // The sum depends only on the two gaps.
        for g1 in 1..horizon {
            for g2 in 1..=(horizon - g1) {
                let s = self.triple_ratio_sum(0, g1, g1 + g2);
                if s > best.0 {
                    best = (s, (g1, g2));
                }
            }
        }
        best
    }

    /// Short hex digest of the exact binary parameter values.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.m() as u64).to_le_bytes());
        for values in [&self.hurst, &self.prob, &self.coupling] {
            for v in values.iter() {
                hasher.update(v.as_f64().to_bits().to_le_bytes());
            }
        }
        let bytes = hasher.finalize();
        let mut out = String::with_capacity(16);
        for b in &bytes[..8] {
            let _ = write!(out, "{b:02x}");
        }
        out
    }

    /// Converts to another scalar type, keeping the validation status.
    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        let conv = |v: &[T]| v.iter().map(|x| U::of(x.as_f64())).collect::<Vec<U>>();
        ModelParams::build(
            conv(&self.hurst),
            conv(&self.prob),
            conv(&self.coupling),
            self.validated,
        )
    }

    /// Parses the key-value parameter format:
    ///
    /// ```text
    /// m = 2
    /// H = [0.8, 0.6]
    /// p = [0.2, 0.3]
    /// c = [0.1, 0.1]
    /// # optional, bypasses validation
    /// unchecked = false
    /// ```
    pub fn from_toml_str(text: &str) -> Result<Self, ParamError> {
        let (h, p, c, unchecked) = Self::parse_fields(text)?;
        if unchecked {
            Self::new_unchecked(h, p, c)
        } else {
            Self::new(h, p, c)
        }
    }

    /// Parses the same format but never validates, whatever the
    /// `unchecked` key says. Used to report on rejected parameter sets.
    pub fn from_toml_str_unchecked(text: &str) -> Result<Self, ParamError> {
        let (h, p, c, _) = Self::parse_fields(text)?;
        Self::new_unchecked(h, p, c)
    }

    fn parse_fields(text: &str) -> Result<(Vec<T>, Vec<T>, Vec<T>, bool), ParamError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ParamError::Parse(e.message().to_string()))?;
        let m = table
            .get("m")
            .and_then(|v| v.as_integer())
            .ok_or_else(|| ParamError::Parse("missing integer key `m`".into()))?;
        let list = |key: &str| -> Result<Vec<T>, ParamError> {
            let arr = table
                .get(key)
                .and_then(|v| v.as_array())
                .ok_or_else(|| ParamError::Parse(format!("missing list key `{key}`")))?;
            arr.iter()
                .map(|v| {
                    v.as_float()
                        .or_else(|| v.as_integer().map(|i| i as f64))
                        .map(T::of)
                        .ok_or_else(|| ParamError::Parse(format!("non-numeric entry in `{key}`")))
                })
                .collect()
        };
        let (h, p, c) = (list("H")?, list("p")?, list("c")?);
        if m < 1 {
            return Err(ParamError::EmptyModel);
        }
        if h.len() as i64 != m || p.len() as i64 != m || c.len() as i64 != m {
            return Err(ParamError::LengthMismatch {
                m: m as usize,
                h: h.len(),
                p: p.len(),
                c: c.len(),
            });
        }
        let unchecked = table
            .get("unchecked")
            .and_then(|v| v.as_bool())
            .unwrap_or(false);
        Ok((h, p, c, unchecked))
    }

    /// Inverse of [`ModelParams::from_toml_str`]; values use shortest
    /// round-trip decimal form.
    pub fn to_toml_string(&self) -> String {
        let fmt = |v: &[T]| {
            v.iter()
                .map(|x| format!("{:?}", x.as_f64()))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let mut s = format!(
            "m = {}\nH = [{}]\np = [{}]\nc = [{}]\n",
            self.m(),
            fmt(&self.hurst),
            fmt(&self.prob),
            fmt(&self.coupling)
        );
        if !self.validated {
            s.push_str("unchecked = true\n");
        }
        s
    }
}

fn kernel_value<T: Scalar>(hurst: T, prob: T, coupling: T, gap: u64) -> T {
    let exponent = T::of(2.0) * hurst - T::of(2.0);
    prob + coupling * (exponent * T::of_u64(gap).ln()).exp()
}

/// `L*_k(A)` for an ascending index set.
pub fn l_star<T: Scalar>(params: &ModelParams<T>, k: usize, set: &[u64]) -> T {
    debug_assert!(set.windows(2).all(|w| w[0] < w[1]), "index set must be ascending");
    match set.first() {
        None => T::one(),
        Some(_) => set
            .windows(2)
            .fold(params.prob(k), |acc, w| acc * params.kernel(k, w[1] - w[0])),
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatternError {
    #[error("time indices start at 1")]
    ZeroIndex,

    #[error("time {0} assigned twice")]
    Duplicate(u64),

    #[error("time {index} has state {state}, model only has states 0..={m}")]
    StateOutOfRange { index: u64, state: usize, m: usize },

    #[error("pattern line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Assignment of time points to states; the sets `A_0, ..., A_m`.
///
/// Stored as an ordered map from time index to state, so the sets are
/// disjoint by construction and iterate in ascending order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct OccupancyPattern {
    assignments: BTreeMap<u64, usize>,
}

impl OccupancyPattern {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assign(&mut self, index: u64, state: usize) -> Result<(), PatternError> {
        if index == 0 {
            return Err(PatternError::ZeroIndex);
        }
        if self.assignments.insert(index, state).is_some() {
            return Err(PatternError::Duplicate(index));
        }
        Ok(())
    }

    /// Builder form of [`OccupancyPattern::assign`]; panics on invalid input.
    pub fn with(mut self, index: u64, state: usize) -> Self {
        self.assign(index, state).expect("valid assignment");
        self
    }

    /// `sets[k]` lists the times assigned to state `k`.
    pub fn from_sets(sets: &[Vec<u64>]) -> Result<Self, PatternError> {
        let mut pattern = Self::new();
        for (state, times) in sets.iter().enumerate() {
            for &t in times {
                pattern.assign(t, state)?;
            }
        }
        Ok(pattern)
    }

    /// Total assignment `X_1 = path[0], X_2 = path[1], ...`.
    pub fn from_path<S: Copy + Into<usize>>(path: &[S]) -> Self {
        Self {
            assignments: path
                .iter()
                .enumerate()
                .map(|(i, &s)| (i as u64 + 1, s.into()))
                .collect(),
        }
    }

    /// Parses `index state` lines. Blank lines and `#` comments are skipped,
    /// and `/` also separates entries so `"1 1 / 2 0"` is accepted.
    pub fn parse_lines(text: &str) -> Result<Self, PatternError> {
        let mut pattern = Self::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("");
            for entry in line.split('/') {
                let fields: Vec<&str> = entry.split_whitespace().collect();
                if fields.is_empty() {
                    continue;
                }
                let err = |message: String| PatternError::Parse {
                    line: lineno + 1,
                    message,
                };
                if fields.len() != 2 {
                    return Err(err(format!("expected `index state`, got `{}`", entry.trim())));
                }
                let index = fields[0]
                    .parse::<u64>()
                    .map_err(|e| err(format!("bad index `{}`: {e}", fields[0])))?;
                let state = fields[1]
                    .parse::<usize>()
                    .map_err(|e| err(format!("bad state `{}`: {e}", fields[1])))?;
                pattern.assign(index, state).map_err(|e| match e {
                    PatternError::Parse { .. } => e,
                    other => err(other.to_string()),
                })?;
            }
        }
        Ok(pattern)
    }

    /// Parses either format: a single token is a compact total assignment,
    /// anything else is read as `index state` lines.
    pub fn parse(text: &str) -> Result<Self, PatternError> {
        let body: Vec<&str> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .collect();
        match body.as_slice() {
            [token] if !token.contains(char::is_whitespace) && !token.contains('/') => Self::parse_compact(token),
            _ => Self::parse_lines(text),
        }
    }

    /// Parses a compact digit string as a total assignment from time 1.
    pub fn parse_compact(text: &str) -> Result<Self, PatternError> {
        let path = parse_compact_states(text)?;
        Ok(Self::from_path(&path))
    }

    pub fn state_at(&self, index: u64) -> Option<usize> {
        self.assignments.get(&index).copied()
    }

    /// Ascending times assigned to `state`.
    pub fn set(&self, state: usize) -> Vec<u64> {
        self.assignments
            .iter()
            .filter(|&(_, &s)| s == state)
            .map(|(&t, _)| t)
            .collect()
    }

    /// All sets `A_0..=A_m`.
    pub fn sets(&self, m: usize) -> Vec<Vec<u64>> {
        let mut sets = vec![Vec::new(); m + 1];
        for (&t, &s) in &self.assignments {
            if s <= m {
                sets[s].push(t);
            }
        }
        sets
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn max_index(&self) -> Option<u64> {
        self.assignments.keys().next_back().copied()
    }

    pub fn count(&self, state: usize) -> usize {
        self.assignments.values().filter(|&&s| s == state).count()
    }

    /// `(time, state)` pairs in ascending time order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, usize)> + '_ {
        self.assignments.iter().map(|(&t, &s)| (t, s))
    }

    /// Every time moved forward by `t`.
    pub fn shifted(&self, t: u64) -> Self {
        Self {
            assignments: self.assignments.iter().map(|(&i, &s)| (i + t, s)).collect(),
        }
    }

    /// True when every time in `1..=n` is assigned and nothing else is.
    pub fn is_total_on(&self, n: u64) -> bool {
        self.assignments.len() as u64 == n && self.max_index().map_or(n == 0, |mx| mx == n)
    }

    pub fn check_states(&self, m: usize) -> Result<(), PatternError> {
        match self.assignments.iter().find(|&(_, &s)| s > m) {
            Some((&index, &state)) => Err(PatternError::StateOutOfRange { index, state, m }),
            None => Ok(()),
        }
    }
}

impl std::fmt::Display for OccupancyPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.iter().map(|(t, s)| format!("{t} {s}")).collect();
        f.write_str(&parts.join(" / "))
    }
}

/// Decodes a compact state string such as `"1020"`.
pub fn parse_compact_states(text: &str) -> Result<Vec<u8>, PatternError> {
    text.trim()
        .chars()
        .enumerate()
        .map(|(i, ch)| {
            ch.to_digit(10).map(|d| d as u8).ok_or(PatternError::Parse {
                line: 1,
                message: format!("character {} (`{ch}`) is not a state digit", i + 1),
            })
        })
        .collect()
}
