//! Fourier-side evaluation of the line seminorms.
//!
//! The continuum transform `f̂(ξ) = ∫ f(x) e^{-2πiξx} dx` is approximated on
//! the window by the trapezoid rule, which makes the discrete transform of the
//! samples (times the spacing) exact for periodic data. With this convention
//! `∫∫ |f(x) - f(y)|^2 / |x - y|^2 = 4π^2 ∫ |f̂(ξ)|^2 |ξ| dξ`.

use std::io::Write;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functions::{fmt_f64, EdgeFunction};
use crate::graphs::Embedding;
use crate::quadrature::GaussLegendre;

/// Samples of `f̂` on the uniform grid `ξ_j = j / L`, sorted by frequency.
#[derive(Debug, Clone)]
pub struct LineSpectrum {
    pub xi: Vec<f64>,
    pub amplitude: Vec<Complex64>,
    /// Index of `ξ = 0`, kept in the data but left out of every norm.
    pub zero: usize,
    /// Frequency spacing `1 / L`.
    pub dxi: f64,
    /// Sample spacing and window `[x0, x0 + L]` of the underlying data.
    pub spacing: f64,
    pub x0: f64,
    pub length: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralSummary {
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub half_norm: f64,
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub tilde_norm: f64,
    pub frequencies: usize,
    pub dxi: f64,
}

/// Transform of a function on a single straight edge.
pub fn line_spectrum(f: &EdgeFunction) -> Result<LineSpectrum> {
    let g = &*f.graph;
    let (start, dir) = match (g.edges.len(), g.edges.first().map(|e| e.embedding)) {
        (1, Some(Embedding::Segment { start, dir })) => (start, dir),
        _ => {
            return Err(Error::IncompatibleKind {
                kind: "spectrum".into(),
                reason: "needs a graph with a single straight edge".into(),
            })
        }
    };
    let s = &f.samples[0];
    let n = s.len() - 1;
    if n < 2 {
        return Err(crate::error::invalid("resolution", "a spectrum needs at least 2 cells"));
    }
    let h = f.spacing(0);
    let x0 = start[0] * dir[0] + start[1] * dir[1];
    let length = n as f64 * h;
    // periodic trapezoid: the end samples share one slot
    let mut buf: Vec<Complex64> = s[..n].iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf[0] = Complex64::new(0.5 * (s[0] + s[n]), 0.0);
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let lo = -((n / 2) as i64);
    let hi = lo + n as i64;
    let mut xi = Vec::with_capacity(n);
    let mut amplitude = Vec::with_capacity(n);
    for j in lo..hi {
        let k = j.rem_euclid(n as i64) as usize;
        let freq = j as f64 / length;
        let phase = Complex64::from_polar(h, -2.0 * std::f64::consts::PI * freq * x0);
        xi.push(freq);
        amplitude.push(buf[k] * phase);
    }
    Ok(LineSpectrum {
        xi,
        amplitude,
        zero: (-lo) as usize,
        dxi: 1.0 / length,
        spacing: h,
        x0,
        length,
    })
}

impl LineSpectrum {
    fn weighted(&self, w: impl Fn(f64) -> f64) -> f64 {
        let terms: Vec<f64> = (0..self.xi.len())
            .filter(|&j| j != self.zero)
            .map(|j| self.amplitude[j].norm_sqr() * w(self.xi[j].abs()))
            .collect();
        crate::reduce::pairwise_sum(&terms) * self.dxi
    }

    /// `Σ |f̂|^2 Δξ`, the Parseval counterpart of `Σ |f|^2 h`.
    pub fn energy(&self) -> f64 {
        let terms: Vec<f64> = self.amplitude.iter().map(|a| a.norm_sqr()).collect();
        crate::reduce::pairwise_sum(&terms) * self.dxi
    }

    pub fn summary(&self) -> SpectralSummary {
        SpectralSummary {
            half_norm: spectral_half_norm(self),
            tilde_norm: spectral_tilde_norm(self),
            frequencies: self.xi.len(),
            dxi: self.dxi,
        }
    }

    /// Rows `xi,re,im`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["xi", "re", "im"])?;
        for (x, a) in self.xi.iter().zip(&self.amplitude) {
            w.write_record([fmt_f64(*x), fmt_f64(a.re), fmt_f64(a.im)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `∫ |f̂(ξ)|^2 |ξ| dξ` over the nonzero frequencies.
pub fn spectral_half_norm(s: &LineSpectrum) -> f64 {
    s.weighted(|a| a)
}

/// The same integral with weight `ξ^2` on `|ξ| <= 1`.
pub fn spectral_tilde_norm(s: &LineSpectrum) -> f64 {
    s.weighted(|a| if a <= 1.0 { a * a } else { a })
}

/// `c = ∫ |e^{2πit} - 1|^2 / t^2 dt`, the constant linking the kernel and
/// Fourier forms of the half-order seminorm.
pub fn kernel_constant() -> f64 {
    kernel_constant_with(64, false)
}

/// [`kernel_constant`] on `[-T, T]` (or `[0, T]` doubled) plus the
/// asymptotic tail `2/T - 1/(π^2 T^3)` of each side.
pub fn kernel_constant_with(t_max: u32, two_sided: bool) -> f64 {
    use std::f64::consts::PI;
    let rule = GaussLegendre::new(16);
    let g = |t: f64| {
        if t == 0.0 {
            4.0 * PI * PI
        } else {
            let s = (PI * t).sin();
            4.0 * s * s / (t * t)
        }
    };
    let t = t_max as f64;
    let tail = 2.0 / t - 1.0 / (PI * PI * t * t * t);
    // the integrand vanishes at the integers, so unit pieces are natural
    let side = |sign: f64| -> f64 {
        let pieces: Vec<f64> = (0..t_max)
            .map(|k| rule.integrate(k as f64, k as f64 + 1.0, |u| g(sign * u)))
            .collect();
        crate::reduce::pairwise_sum(&pieces) + tail
    };
    if two_sided {
        side(1.0) + side(-1.0)
    } else {
        2.0 * side(1.0)
    }
}
