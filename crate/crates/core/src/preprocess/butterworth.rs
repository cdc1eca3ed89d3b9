//! Digital Butterworth design (bilinear transform) as cascaded biquads, plus
//! forward-backward application with odd-reflection padding.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
struct Complex {
    re: f64,
    im: f64,
}

impl Complex {
    fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.im + o.im)
    }
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.im - o.im)
    }
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
    fn scale(self, k: f64) -> Self {
        Self::new(self.re * k, self.im * k)
    }
    fn div(self, o: Self) -> Self {
        let d = o.re * o.re + o.im * o.im;
        Self::new(
            (self.re * o.re + self.im * o.im) / d,
            (self.im * o.re - self.re * o.im) / d,
        )
    }
    fn norm(self) -> f64 {
        self.re.hypot(self.im)
    }
    fn sqrt(self) -> Self {
        let r = self.norm();
        let re = ((r + self.re) / 2.0).max(0.0).sqrt();
        let im = ((r - self.re) / 2.0).max(0.0).sqrt();
        Self::new(re, if self.im < 0.0 { -im } else { im })
    }
}

/// One second-order section, `a0` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

/// Cascade of biquads.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
    /// Largest pole radius; sets how long the impulse response takes to die out.
    pub max_pole_radius: f64,
}

fn prewarp(f: f64, fs: f64) -> f64 {
    2.0 * fs * (PI * f / fs).tan()
}

fn bilinear(s: Complex, fs: f64) -> Complex {
    let k = 2.0 * fs;
    Complex::new(k + s.re, s.im).div(Complex::new(k - s.re, -s.im))
}

/// Denominator of a section built from a digital pole pair. Conjugate pairs and
/// pairs of real poles both give real coefficients.
fn pole_pair(p1: Complex, p2: Complex) -> [f64; 3] {
    let sum = p1.add(p2);
    let prod = p1.mul(p2);
    [1.0, -sum.re, prod.re]
}

fn eval(sections: &[Biquad], w: f64) -> f64 {
    let z1 = Complex::new(w.cos(), -w.sin());
    let z2 = z1.mul(z1);
    sections
        .iter()
        .map(|s| {
            let num = Complex::new(s.b[0], 0.0)
                .add(z1.scale(s.b[1]))
                .add(z2.scale(s.b[2]));
            let den = Complex::new(s.a[0], 0.0)
                .add(z1.scale(s.a[1]))
                .add(z2.scale(s.a[2]));
            num.div(den).norm()
        })
        .product()
}

impl SosFilter {
    /// Butterworth bandpass with `order` prototype poles (`2 * order` poles total).
    pub fn bandpass(order: usize, low: f64, high: f64, fs: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidConfig("filter order must be >= 1".into()));
        }
        if !(low > 0.0 && low < high && high < fs / 2.0) {
            return Err(Error::InvalidConfig(format!(
                "band [{low}, {high}] Hz invalid for sampling rate {fs} Hz"
            )));
        }
        let w1 = prewarp(low, fs);
        let w2 = prewarp(high, fs);
        let bw = w2 - w1;
        let w0sq = w1 * w2;

        let mut sections = Vec::new();
        let mut max_r: f64 = 0.0;
        let mut push = |p1: Complex, p2: Complex, sections: &mut Vec<Biquad>| {
            let z1 = bilinear(p1, fs);
            let z2 = bilinear(p2, fs);
            max_r = max_r.max(z1.norm()).max(z2.norm());
            // one zero at z = 1 (DC) and one at z = -1 (Nyquist) per section
            sections.push(Biquad {
                b: [1.0, 0.0, -1.0],
                a: pole_pair(z1, z2),
            });
        };

        for k in 0..order {
            let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            let p = Complex::new(theta.cos(), theta.sin());
            if p.im < -1e-12 {
                continue; // covered by its conjugate
            }
            // s^2 - p*bw*s + w0^2 = 0
            let pb = p.scale(bw);
            let disc = pb.mul(pb).sub(Complex::new(4.0 * w0sq, 0.0)).sqrt();
            let r1 = pb.add(disc).scale(0.5);
            let r2 = pb.sub(disc).scale(0.5);
            if p.im.abs() <= 1e-12 {
                push(r1, r2, &mut sections);
            } else {
                push(r1, Complex::new(r1.re, -r1.im), &mut sections);
                push(r2, Complex::new(r2.re, -r2.im), &mut sections);
            }
        }

        let center = 2.0 * ((w0sq.sqrt()) / (2.0 * fs)).atan();
        let gain = eval(&sections, center);
        let per = gain.powf(1.0 / sections.len() as f64);
        for s in &mut sections {
            for b in &mut s.b {
                *b /= per;
            }
        }
        Ok(Self {
            sections,
            max_pole_radius: max_r,
        })
    }

    /// Butterworth lowpass, unit gain at DC.
    pub fn lowpass(order: usize, cutoff: f64, fs: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidConfig("filter order must be >= 1".into()));
        }
        if !(cutoff > 0.0 && cutoff < fs / 2.0) {
            return Err(Error::InvalidConfig(format!(
                "cutoff {cutoff} Hz invalid for sampling rate {fs} Hz"
            )));
        }
        let wc = prewarp(cutoff, fs);
        let mut sections = Vec::new();
        let mut max_r: f64 = 0.0;
        let mut real_pole = None;
        for k in 0..order {
            let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            let p = Complex::new(theta.cos(), theta.sin()).scale(wc);
            if p.im < -1e-9 {
                continue;
            }
            let z = bilinear(p, fs);
            max_r = max_r.max(z.norm());
            if p.im.abs() <= 1e-9 {
                real_pole = Some(z);
            } else {
                sections.push(Biquad {
                    b: [1.0, 2.0, 1.0],
                    a: pole_pair(z, Complex::new(z.re, -z.im)),
                });
            }
        }
        if let Some(z) = real_pole {
            sections.push(Biquad {
                b: [1.0, 1.0, 0.0],
                a: [1.0, -z.re, 0.0],
            });
        }
        for s in &mut sections {
            let g = (s.b.iter().sum::<f64>()) / (s.a.iter().sum::<f64>());
            for b in &mut s.b {
                *b /= g;
            }
        }
        Ok(Self {
            sections,
            max_pole_radius: max_r,
        })
    }

    /// Magnitude response at `freq` Hz.
    pub fn magnitude(&self, freq: f64, fs: f64) -> f64 {
        eval(&self.sections, 2.0 * PI * freq / fs)
    }

    /// Samples for the slowest pole to decay by 60 dB.
    pub fn settling_span(&self) -> usize {
        let r = self.max_pole_radius;
        if r <= 0.0 {
            return 1;
        }
        if r >= 1.0 {
            return usize::MAX / 4;
        }
        ((1e-3f64).ln() / r.ln()).ceil().max(1.0) as usize
    }

    /// Steady-state section states for a unit step input (transposed direct form II).
    fn step_states(&self) -> Vec<[f64; 2]> {
        let mut gain_in = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let g = s.b.iter().sum::<f64>() / s.a.iter().sum::<f64>();
                let y = g * gain_in;
                let x = gain_in;
                let z2 = s.b[2] * x - s.a[2] * y;
                let z1 = s.b[1] * x - s.a[1] * y + z2;
                gain_in = y;
                [z1, z2]
            })
            .collect()
    }

    fn run(&self, x: &mut [f64], init: &[[f64; 2]], scale: f64) {
        for (s, z0) in self.sections.iter().zip(init) {
            let mut z1 = z0[0] * scale;
            let mut z2 = z0[1] * scale;
            for v in x.iter_mut() {
                let xin = *v;
                let y = s.b[0] * xin + z1;
                z1 = s.b[1] * xin - s.a[1] * y + z2;
                z2 = s.b[2] * xin - s.a[2] * y;
                *v = y;
            }
        }
    }

    /// Causal single-pass filtering from rest.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        let zeros = vec![[0.0; 2]; self.sections.len()];
        self.run(&mut y, &zeros, 0.0);
        y
    }

    /// Zero-phase forward-backward filtering. The signal is extended by odd
    /// reflection of `min(3 * settling_span, n - 1)` samples at each end and
    /// both passes start from step-response steady state.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n < 2 {
            return x.to_vec();
        }
        let pad = self.settling_span().saturating_mul(3).min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        let (first, last) = (x[0], x[n - 1]);
        for i in (1..=pad).rev() {
            ext.push(2.0 * first - x[i]);
        }
        ext.extend_from_slice(x);
        for i in 1..=pad {
            ext.push(2.0 * last - x[n - 1 - i]);
        }

        let zi = self.step_states();
        let x0 = ext[0];
        self.run(&mut ext, &zi, x0);
        ext.reverse();
        let y0 = ext[0];
        self.run(&mut ext, &zi, y0);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}
