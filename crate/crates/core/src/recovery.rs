//! Recovery level functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A non-decreasing map from recovery fractions in [0, 1] to probability levels.
pub trait LevelFunction {
    fn level(&self, lambda: f64) -> f64;

    /// Left limit at `lambda`; differs from `level` only at jumps.
    fn level_left(&self, lambda: f64) -> f64 {
        self.level(lambda)
    }

    /// Jump locations inside (0, 1).
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// True when the function is constant between its breakpoints.
    fn is_piecewise_constant(&self) -> bool {
        false
    }
}

impl<F: Fn(f64) -> f64> LevelFunction for F {
    fn level(&self, lambda: f64) -> f64 {
        self(lambda)
    }
}

/// Piecewise-constant level function: `levels[i]` on `[r_i, r_{i+1})` with
/// `r_0 = 0`, and the last level on `[r_n, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RecoveryFunctionRaw", into = "RecoveryFunctionRaw")]
pub struct RecoveryFunction {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RecoveryFunctionRaw {
    #[serde(default)]
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

impl TryFrom<RecoveryFunctionRaw> for RecoveryFunction {
    type Error = Error;
    fn try_from(raw: RecoveryFunctionRaw) -> Result<Self> {
        RecoveryFunction::new(raw.breakpoints, raw.levels)
    }
}

impl From<RecoveryFunction> for RecoveryFunctionRaw {
    fn from(g: RecoveryFunction) -> Self {
        Self { breakpoints: g.breakpoints, levels: g.levels }
    }
}

/// One term of the finite reduction: recovery fraction r and level alpha.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub fraction: f64,
    pub level: f64,
}

impl RecoveryFunction {
    pub fn new(breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if levels.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidRecoveryFunction(format!(
                "{} breakpoints need {} levels, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                levels.len()
            )));
        }
        check_open_increasing(&breakpoints, "breakpoints")?;
        check_open_increasing(&levels, "levels")?;
        Ok(Self { breakpoints, levels })
    }

    pub fn constant(level: f64) -> Result<Self> {
        Self::new(Vec::new(), vec![level])
    }

    /// Level `beta` below recovery fraction `r` and `alpha` from `r` on.
    pub fn two_level(beta: f64, r: f64, alpha: f64) -> Result<Self> {
        Self::new(vec![r], vec![beta, alpha])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Number of breakpoints n; there are n + 1 pieces.
    pub fn n(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        let i = self.breakpoints.partition_point(|&r| r <= lambda);
        self.levels[i]
    }

    /// Right endpoints r_1, …, r_n, 1 paired with the level on each piece.
    pub fn pieces(&self) -> impl Iterator<Item = Piece> + '_ {
        self.levels
            .iter()
            .enumerate()
            .map(move |(i, &level)| Piece { fraction: self.breakpoints.get(i).copied().unwrap_or(1.0), level })
    }
}

impl LevelFunction for RecoveryFunction {
    fn level(&self, lambda: f64) -> f64 {
        self.eval(lambda)
    }

    fn level_left(&self, lambda: f64) -> f64 {
        let i = self.breakpoints.partition_point(|&r| r < lambda);
        self.levels[i]
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }

    fn is_piecewise_constant(&self) -> bool {
        true
    }
}

fn check_open_increasing(values: &[f64], what: &str) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::InvalidRecoveryFunction(format!("{what}[{i}] = {v} is not in (0, 1)")));
        }
        if i > 0 && values[i - 1] >= v {
            return Err(Error::InvalidRecoveryFunction(format!("{what} must be strictly increasing")));
        }
    }
    Ok(())
}
