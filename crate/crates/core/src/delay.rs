//! Fixed-length dead-time element: the output at step `i` is the input of
//! step `i - k`.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DelayLine<T> {
    buffer: VecDeque<T>,
    k: usize,
}

impl<T: Clone> DelayLine<T> {
    /// A `k`-step delay whose first `k` outputs are `fill`.
    pub fn new(k: usize, fill: T) -> Self {
        Self {
            buffer: std::iter::repeat_n(fill, k).collect(),
            k,
        }
    }

    /// A delay primed with an explicit pre-history, oldest first. The
    /// history length fixes `k`.
    pub fn from_history(history: impl IntoIterator<Item = T>) -> Self {
        let buffer: VecDeque<T> = history.into_iter().collect();
        let k = buffer.len();
        Self { buffer, k }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Enqueues `value` and returns the value pushed `k` steps ago.
    pub fn push(&mut self, value: T) -> T {
        if self.k == 0 {
            return value;
        }
        self.buffer.push_back(value);
        self.buffer
            .pop_front()
            .expect("delay buffer holds k + 1 elements after push")
    }

    /// Contents oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.buffer.iter()
    }
}

/// Converts a delay in seconds into a whole number of steps, rejecting
/// durations that are not integer multiples of `dt`.
pub fn delay_steps(duration: f64, dt: f64, field: &str) -> Result<usize> {
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(Error::config(field, "delay must be a non-negative number of seconds"));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::config("dt_s", "must be positive"));
    }
    let ratio = duration / dt;
    let k = ratio.round();
    if (ratio - k).abs() > 1e-9 * k.max(1.0) {
        return Err(Error::config(
            field,
            format!("delay {duration} s is not an integer multiple of dt = {dt} s (ratio {ratio})"),
        ));
    }
    Ok(k as usize)
}
