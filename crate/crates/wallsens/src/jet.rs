//! Truncated bivariate jets: value, two first partials and the mixed partial.
//! Enough to carry exact stencil-coefficient derivatives.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Jet2 {
    pub v: f64,
    pub p: f64,
    pub q: f64,
    pub pq: f64,
}

impl Jet2 {
    pub fn constant(v: f64) -> Self {
        Self {
            v,
            p: 0.0,
            q: 0.0,
            pq: 0.0,
        }
    }

    /// Independent variable with seed derivatives along p and q.
    pub fn var(v: f64, dp: bool, dq: bool) -> Self {
        Self {
            v,
            p: f64::from(u8::from(dp)),
            q: f64::from(u8::from(dq)),
            pq: 0.0,
        }
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        let r2 = r * r;
        Self {
            v: r,
            p: -self.p * r2,
            q: -self.q * r2,
            pq: -self.pq * r2 + 2.0 * self.p * self.q * r2 * r,
        }
    }

    /// Component selected by (order in p, order in q).
    pub fn part(&self, which: Part) -> f64 {
        match which {
            Part::Value => self.v,
            Part::P => self.p,
            Part::Q => self.q,
            Part::PQ => self.pq,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Part {
    Value,
    P,
    Q,
    PQ,
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v + o.v,
            p: self.p + o.p,
            q: self.q + o.q,
            pq: self.pq + o.pq,
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v - o.v,
            p: self.p - o.p,
            q: self.q - o.q,
            pq: self.pq - o.pq,
        }
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Jet2 {
            v: -self.v,
            p: -self.p,
            q: -self.q,
            pq: -self.pq,
        }
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v * o.v,
            p: self.p * o.v + self.v * o.p,
            q: self.q * o.v + self.v * o.q,
            pq: self.pq * o.v + self.p * o.q + self.q * o.p + self.v * o.pq,
        }
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet2) -> Jet2 {
        self * o.recip()
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, s: f64) -> Jet2 {
        Jet2 {
            v: self.v * s,
            p: self.p * s,
            q: self.q * s,
            pq: self.pq * s,
        }
    }
}

impl Add<f64> for Jet2 {
    type Output = Jet2;
    fn add(self, s: f64) -> Jet2 {
        Jet2 {
            v: self.v + s,
            ..self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotient_derivatives() {
        // f(p, q) = p / (1 + p q) at (2, 3)
        let p = Jet2::var(2.0, true, false);
        let q = Jet2::var(3.0, false, true);
        let f = p / (p * q + 1.0);
        let d: f64 = 7.0;
        assert!((f.v - 2.0 / d).abs() < 1e-15);
        assert!((f.p - 1.0 / (d * d)).abs() < 1e-15);
        assert!((f.q - (-4.0 / (d * d))).abs() < 1e-15);
        // ∂²/∂p∂q = -2p/(1+pq)^3 ... computed: d/dq (1/(1+pq)^2) = -2p/(1+pq)^3
        assert!((f.pq - (-4.0 / (d * d * d))).abs() < 1e-15);
    }

    #[test]
    fn same_variable_twice_gives_second_derivative() {
        // f = 1/x, both seeds on x: f_xx = 2/x^3
        let x = Jet2::var(2.0, true, true);
        let f = x.recip();
        assert!((f.pq - 0.25).abs() < 1e-15);
    }
}
