//! Kernels `K(x, y)` of the double integrals `∫∫ |f(x) - f(y)|^2 K(x, y)`.
//!
//! Every kernel has a leading singularity `c / |x - y|^p` on the diagonal.
//! The cell-pair engine integrates that part in closed form on the linear
//! interpolant and applies Gauss–Legendre only to the bounded remainder.

/// Integral kernel on an edge parameter range.
pub trait Kernel: Sync {
    /// Exponent `p` of the diagonal singularity, `2 <= p < 3`.
    fn exponent(&self) -> f64;

    /// Coefficient `c` of the diagonal singularity.
    fn singular_coeff(&self) -> f64 {
        1.0
    }

    /// Full kernel, `x != y`.
    fn eval(&self, x: f64, y: f64) -> f64;

    /// `K(x, y) - c / |x - y|^p`, bounded near the diagonal.
    fn remainder(&self, _x: f64, _y: f64) -> f64 {
        0.0
    }

    /// Whether [`Kernel::remainder`] is identically zero.
    fn has_remainder(&self) -> bool {
        false
    }

    /// The kernel vanishes for `|x - y| > band`.
    fn band(&self) -> Option<f64> {
        None
    }

    /// `K(x, y)` depends only on `x - y`.
    fn translation_invariant(&self) -> bool {
        true
    }
}

/// `|x - y|^(-p)`.
#[derive(Debug, Clone, Copy)]
pub struct Power {
    pub p: f64,
}

impl Kernel for Power {
    fn exponent(&self) -> f64 {
        self.p
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let u = (x - y).abs();
        if self.p == 2.0 {
            1.0 / (u * u)
        } else {
            u.powf(-self.p)
        }
    }
}

/// `|x - y|^(-2)` restricted to `|x - y| <= width`.
#[derive(Debug, Clone, Copy)]
pub struct Banded {
    pub width: f64,
}

impl Kernel for Banded {
    fn exponent(&self) -> f64 {
        2.0
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let u = (x - y).abs();
        if u <= self.width {
            1.0 / (u * u)
        } else {
            0.0
        }
    }

    fn band(&self) -> Option<f64> {
        Some(self.width)
    }
}

/// Inverse square chordal distance on a circle of radius `r`, in arclength:
/// `1 / (2 r sin((x - y) / 2r))^2`.
#[derive(Debug, Clone, Copy)]
pub struct Chordal {
    pub radius: f64,
}

impl Kernel for Chordal {
    fn exponent(&self) -> f64 {
        2.0
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let c = 2.0 * self.radius * ((x - y) / (2.0 * self.radius)).sin();
        1.0 / (c * c)
    }

    fn remainder(&self, x: f64, y: f64) -> f64 {
        let r = self.radius;
        let period = 2.0 * std::f64::consts::PI * r;
        let mut u = x - y;
        u -= period * (u / period).round();
        let z = u / r;
        if z.abs() < 0.05 {
            let z2 = z * z;
            (1.0 / 12.0 + z2 / 240.0 + z2 * z2 / 6048.0) / (r * r)
        } else {
            self.eval(x, y) - 1.0 / (u * u)
        }
    }

    fn has_remainder(&self) -> bool {
        true
    }
}

/// `1 / (4 sinh^2((x - y) / 2))`, the strip kernel.
#[derive(Debug, Clone, Copy)]
pub struct Sinh;

impl Kernel for Sinh {
    fn exponent(&self) -> f64 {
        2.0
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let s = ((x - y) / 2.0).sinh();
        0.25 / (s * s)
    }

    fn remainder(&self, x: f64, y: f64) -> f64 {
        let u = x - y;
        if u.abs() < 0.05 {
            let u2 = u * u;
            -1.0 / 12.0 + u2 / 240.0 - u2 * u2 / 6048.0
        } else {
            self.eval(x, y) - 1.0 / (u * u)
        }
    }

    fn has_remainder(&self) -> bool {
        true
    }
}

/// `x y / ((x + y)^2 (x - y)^2)` on the half-line, from the quadrant map.
#[derive(Debug, Clone, Copy)]
pub struct Quadrant;

impl Kernel for Quadrant {
    fn exponent(&self) -> f64 {
        2.0
    }

    fn singular_coeff(&self) -> f64 {
        0.25
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let (s, d) = (x + y, x - y);
        x * y / (s * s * d * d)
    }

    fn remainder(&self, x: f64, y: f64) -> f64 {
        let s = x + y;
        -0.25 / (s * s)
    }

    fn has_remainder(&self) -> bool {
        true
    }

    fn translation_invariant(&self) -> bool {
        false
    }
}
