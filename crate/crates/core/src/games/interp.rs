//! Shape-preserving cubic interpolation on a uniform grid over [0,1].
//!
//! Fritsch–Carlson tangent limiting: the interpolant is monotone on every
//! interval where the data is monotone, and reproduces linear and constant
//! runs exactly. Endpoint tangents use the one-sided three-point formula,
//! clipped to preserve shape.

use alloc::vec::Vec;

use crate::math;

#[derive(Debug, Clone)]
pub(crate) struct MonotoneCubic {
    y: Vec<f64>,
    /// Tangents in per-interval units (already scaled by the grid step).
    m: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(y: Vec<f64>) -> Self {
        assert!(y.len() >= 2, "need at least two grid values");
        let m = tangents(&y);
        MonotoneCubic { y, m }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    #[allow(dead_code)]
    pub fn values(&self) -> &[f64] {
        &self.y
    }

    /// Evaluate at `x ∈ [0,1]` (clamped).
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.y.len();
        let t = x.clamp(0.0, 1.0) * (n - 1) as f64;
        let i = (t as usize).min(n - 2);
        let s = t - i as f64;
        if s == 0.0 {
            return self.y[i];
        }
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * self.m[i] + h01 * self.y[i + 1] + h11 * self.m[i + 1]
    }
}

fn tangents(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    if n == 2 {
        let d = y[1] - y[0];
        return alloc::vec![d, d];
    }
    let d: Vec<f64> = (0..n - 1).map(|i| y[i + 1] - y[i]).collect();
    let mut m = alloc::vec![0.0; n];
    m[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / 2.0;
    m[n - 1] = (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / 2.0;
    for i in 1..n - 1 {
        m[i] = if d[i - 1] * d[i] <= 0.0 {
            0.0
        } else {
            0.5 * (d[i - 1] + d[i])
        };
    }
    // endpoint shape preservation
    if m[0] * d[0] <= 0.0 {
        m[0] = 0.0;
    } else if math::abs(m[0]) > 3.0 * math::abs(d[0]) {
        m[0] = 3.0 * d[0];
    }
    if m[n - 1] * d[n - 2] <= 0.0 {
        m[n - 1] = 0.0;
    } else if math::abs(m[n - 1]) > 3.0 * math::abs(d[n - 2]) {
        m[n - 1] = 3.0 * d[n - 2];
    }
    // Fritsch-Carlson limiter
    for i in 0..n - 1 {
        if d[i] == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
        } else {
            let a = m[i] / d[i];
            let b = m[i + 1] / d[i];
            let s = a * a + b * b;
            if s > 9.0 {
                let tau = 3.0 / math::sqrt(s);
                m[i] = tau * a * d[i];
                m[i + 1] = tau * b * d[i];
            }
        }
    }
    m
}
