//! Real cubic polynomials and their real roots.

use std::f64::consts::PI;

/// `c3·τ³ + c2·τ² + c1·τ + c0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicPoly {
    pub c3: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl CubicPoly {
    pub fn eval(&self, t: f64) -> f64 {
        ((self.c3 * t + self.c2) * t + self.c1) * t + self.c0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        (3.0 * self.c3 * t + 2.0 * self.c2) * t + self.c1
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        6.0 * self.c3 * t + 2.0 * self.c2
    }

    /// Sum of the absolute monomial magnitudes at `t`; the rounding scale of `eval(t)`.
    pub fn magnitude(&self, t: f64) -> f64 {
        let a = t.abs();
        self.c3.abs() * a * a * a + self.c2.abs() * a * a + self.c1.abs() * a + self.c0.abs()
    }

    /// Real roots in ascending order, repeated roots listed once.
    ///
    /// Closed form (Cardano for one real root, the trigonometric form for
    /// three) followed by two Newton steps that are kept only when they
    /// reduce `|P|`. Requires `c3 != 0`.
    pub fn real_roots(&self) -> Vec<f64> {
        debug_assert!(self.c3 != 0.0);
        let a = self.c2 / self.c3;
        let b = self.c1 / self.c3;
        let c = self.c0 / self.c3;
        // τ = y - a/3 gives y³ + p y + q = 0.
        let shift = a / 3.0;
        let p = b - a * a / 3.0;
        let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
        let half_q = 0.5 * q;
        let third_p = p / 3.0;
        let disc = half_q * half_q + third_p * third_p * third_p;

        let mut roots: Vec<f64> = if p == 0.0 && q == 0.0 {
            vec![0.0]
        } else if disc > 0.0 {
            // One real root; choose the cube-root branch that avoids cancellation.
            let s = -half_q - half_q.signum() * disc.sqrt();
            let u = s.cbrt();
            let y = if u == 0.0 { 0.0 } else { u - third_p / u };
            vec![y]
        } else {
            let r = 2.0 * (-third_p).sqrt();
            let cos_arg = ((3.0 * q) / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
            let phi = cos_arg.acos() / 3.0;
            (0..3).map(|k| r * (phi - 2.0 * PI * k as f64 / 3.0).cos()).collect()
        }
        .into_iter()
        .map(|y| self.polish(y - shift))
        .collect();

        roots.sort_by(|x, y| x.partial_cmp(y).expect("finite roots"));
        roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1e-300));
        roots
    }

    fn polish(&self, mut t: f64) -> f64 {
        for _ in 0..2 {
            let d = self.derivative(t);
            if d == 0.0 {
                break;
            }
            let next = t - self.eval(t) / d;
            if next.is_finite() && self.eval(next).abs() < self.eval(t).abs() {
                t = next;
            } else {
                break;
            }
        }
        t
    }
}
