//! Time signals driving the boundaries and sources.
//!
//! A signal is either a constant, a closed-form function of dimensionless
//! time, or a uniformly sampled series with linear interpolation.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};

#[derive(Clone)]
pub enum Signal {
    Constant(f64),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    Sampled(SampledSignal),
}

impl fmt::Debug for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Signal::Constant(v) => write!(f, "Constant({v})"),
            Signal::Function(_) => write!(f, "Function(..)"),
            Signal::Sampled(s) => write!(f, "Sampled({} samples, step {})", s.values.len(), s.step),
        }
    }
}

impl Signal {
    pub fn function(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Signal::Function(Arc::new(f))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Signal::Constant(v) => *v,
            Signal::Function(f) => f(t),
            Signal::Sampled(s) => s.eval(t),
        }
    }

    /// True when the signal is defined on the whole of [0, t_max].
    pub fn covers(&self, t_max: f64) -> bool {
        match self {
            Signal::Sampled(s) => s.t0 <= 1e-12 && s.end() >= t_max - 1e-9 * t_max.max(1.0),
            _ => true,
        }
    }

    /// Same signal with its values multiplied by `a` and shifted by `b`.
    pub fn affine(&self, a: f64, b: f64) -> Signal {
        match self {
            Signal::Constant(v) => Signal::Constant(a * v + b),
            Signal::Sampled(s) => Signal::Sampled(SampledSignal {
                t0: s.t0,
                step: s.step,
                values: s.values.iter().map(|v| a * v + b).collect(),
            }),
            Signal::Function(f) => {
                let f = f.clone();
                Signal::function(move |t| a * f(t) + b)
            }
        }
    }
}

/// Uniformly sampled series, linearly interpolated, clamped outside its span.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    pub t0: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl SampledSignal {
    pub fn new(t0: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return invalid(format!("sampling step must be positive, got {step}"));
        }
        if values.is_empty() {
            return invalid("sampled signal needs at least one value");
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("non-finite sample at index {i}"));
        }
        Ok(Self { t0, step, values })
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.step * (self.values.len() - 1) as f64
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.values.len();
        let s = (t - self.t0) / self.step;
        if s <= 0.0 || n == 1 {
            return self.values[0];
        }
        let i = s.floor() as usize;
        if i >= n - 1 {
            return self.values[n - 1];
        }
        let w = s - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_interpolates_linearly() {
        let s = SampledSignal::new(0.0, 2.0, vec![0.0, 4.0, 2.0]).unwrap();
        assert_eq!(s.eval(1.0), 2.0);
        assert_eq!(s.eval(3.0), 3.0);
        assert_eq!(s.eval(10.0), 2.0);
        assert_eq!(s.eval(-1.0), 0.0);
    }

    #[test]
    fn coverage() {
        let s = Signal::Sampled(SampledSignal::new(0.0, 1.0, vec![0.0; 5]).unwrap());
        assert!(s.covers(4.0));
        assert!(!s.covers(4.5));
        assert!(Signal::Constant(1.0).covers(1e9));
    }

    #[test]
    fn affine_map() {
        let s = Signal::function(|t| t).affine(2.0, 1.0);
        assert_eq!(s.eval(3.0), 7.0);
    }
}
