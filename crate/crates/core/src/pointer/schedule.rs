use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-linear function of time given by `[t, value]` knots, held
/// constant before the first and after the last knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub knots: Vec<[f64; 2]>,
}

impl Schedule {
    pub fn new(knots: Vec<[f64; 2]>) -> Result<Self> {
        let s = Schedule { knots };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(value: f64) -> Self {
        Schedule { knots: vec![[0.0, value]] }
    }

    /// Zero until `start`, linear up to `target` at `end`, then flat.
    pub fn ramp(start: f64, end: f64, target: f64) -> Result<Self> {
        Schedule::new(vec![[start, 0.0], [end, target]])
    }

    /// `value0 + rate·t` on `[0, end]`, then flat.
    pub fn drift(value0: f64, rate: f64, end: f64) -> Result<Self> {
        Schedule::new(vec![[0.0, value0], [end, value0 + rate * end]])
    }

    pub fn validate(&self) -> Result<()> {
        if self.knots.is_empty() {
            return Err(Error::invalid("a schedule needs at least one knot"));
        }
        if self.knots.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("schedule knots must be finite"));
        }
        if self.knots.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return Err(Error::invalid("schedule knot times must be strictly increasing"));
        }
        Ok(())
    }

    /// Index of the segment `[t_k, t_{k+1})` containing `t`, or `None`
    /// outside the knot span.
    fn segment(&self, t: f64) -> Option<usize> {
        let k = self.knots.partition_point(|kn| kn[0] <= t);
        (k >= 1 && k < self.knots.len()).then(|| k - 1)
    }

    pub fn value(&self, t: f64) -> f64 {
        let first = self.knots[0];
        let last = self.knots[self.knots.len() - 1];
        if t <= first[0] {
            return first[1];
        }
        if t >= last[0] {
            return last[1];
        }
        let k = self.segment(t).expect("t lies inside the knot span");
        let ([t0, v0], [t1, v1]) = (self.knots[k], self.knots[k + 1]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Slope at `t`; at a knot the slope of the segment to the right.
    pub fn rate(&self, t: f64) -> f64 {
        match self.segment(t) {
            Some(k) => {
                let ([t0, v0], [t1, v1]) = (self.knots[k], self.knots[k + 1]);
                (v1 - v0) / (t1 - t0)
            }
            None => 0.0,
        }
    }

    /// Slope at `t` taken from the left; zero at and before the first knot.
    pub fn rate_before(&self, t: f64) -> f64 {
        let k = self.knots.partition_point(|kn| kn[0] < t);
        if k == 0 || k >= self.knots.len() {
            return 0.0;
        }
        let ([t0, v0], [t1, v1]) = (self.knots[k - 1], self.knots[k]);
        (v1 - v0) / (t1 - t0)
    }

    pub fn knot_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.knots.iter().map(|k| k[0])
    }

    pub fn is_identically_zero(&self) -> bool {
        self.knots.iter().all(|k| k[1] == 0.0)
    }
}
