//! Temporal advanced waves in a single spatial mode per path: wave packets
//! on a z = c·t axis, the Hong–Ou–Mandel coincidence dip, pulsed-pump
//! gating, and the nondegenerate beat.

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HomError {
    #[error("packet invalid: {0}")]
    Invalid(&'static str),
    #[error("window clipping: packet support shifted by z₁ ± d leaves the sampled axis")]
    WindowClipped,
    #[error("pulsed gating requires a pulsed pump envelope")]
    NotPulsed,
}

/// Uniformly sampled complex amplitude on a 1-D z axis.
#[derive(Debug, Clone)]
pub struct Samples1D {
    pub z_min: f64,
    pub dz: f64,
    pub v: Vec<Complex64>,
}

impl Samples1D {
    pub fn z(&self, i: usize) -> f64 {
        self.z_min + i as f64 * self.dz
    }

    /// Linear interpolation; zero outside the sampled axis.
    pub fn sample(&self, z: f64) -> Complex64 {
        let u = (z - self.z_min) / self.dz;
        if u < 0.0 || u > (self.v.len() - 1) as f64 {
            return Complex64::ZERO;
        }
        let i = (u as usize).min(self.v.len() - 2);
        let t = u - i as f64;
        self.v[i] * (1.0 - t) + self.v[i + 1] * t
    }

    /// ∫|v|² dz by the trapezoid rule.
    pub fn energy(&self) -> f64 {
        let n = self.v.len();
        let mut s = 0.5 * (self.v[0].norm_sqr() + self.v[n - 1].norm_sqr());
        for a in &self.v[1..n - 1] {
            s += a.norm_sqr();
        }
        s * self.dz
    }
}

/// An even temporal wave packet f(z) with positive energy, z = c·t.
#[derive(Debug, Clone)]
pub struct TemporalPacket {
    pub samples: Samples1D,
}

impl TemporalPacket {
    /// Sample f on a symmetric axis [−half_width, half_width] with an odd
    /// number of points so z = 0 is a sample.
    pub fn from_fn(
        half_width: f64,
        n: usize,
        f: impl Fn(f64) -> Complex64,
    ) -> Result<Self, HomError> {
        if half_width <= 0.0 || n < 3 || n % 2 == 0 {
            return Err(HomError::Invalid("need an odd n ≥ 3 and positive half width"));
        }
        let dz = 2.0 * half_width / (n - 1) as f64;
        let v: Vec<Complex64> = (0..n).map(|i| f(-half_width + i as f64 * dz)).collect();
        Self::new(Samples1D { z_min: -half_width, dz, v })
    }

    pub fn new(samples: Samples1D) -> Result<Self, HomError> {
        let n = samples.v.len();
        if n < 3 || n % 2 == 0 {
            return Err(HomError::Invalid("need an odd sample count ≥ 3"));
        }
        if (samples.z_min + samples.z(n - 1)).abs() > 1e-9 * samples.dz * n as f64 {
            return Err(HomError::Invalid("axis must be symmetric about z = 0"));
        }
        let peak = samples.v.iter().map(|a| a.norm()).fold(0.0, f64::max);
        for i in 0..n {
            if (samples.v[i] - samples.v[n - 1 - i]).norm() > 1e-9 * peak {
                return Err(HomError::Invalid("packet must be even: f(−z) = f(z)"));
            }
        }
        if samples.energy() <= 0.0 {
            return Err(HomError::Invalid("packet energy must be positive"));
        }
        Ok(Self { samples })
    }

    pub fn energy(&self) -> f64 {
        self.samples.energy()
    }

    /// Half-width of the numerically significant support.
    pub fn support_half_width(&self) -> f64 {
        let peak = self.samples.v.iter().map(|a| a.norm()).fold(0.0, f64::max);
        self.samples
            .v
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > 1e-12 * peak)
            .map(|(i, _)| self.samples.z(i).abs())
            .fold(0.0, f64::max)
    }
}

/// Pump drive in time: a monochromatic pump gates nothing; a pulsed pump
/// multiplies the advanced amplitude by its envelope inside the emission
/// window and suppresses everything outside.
#[derive(Debug, Clone)]
pub enum PumpEnvelope {
    Monochromatic,
    Pulsed { envelope: Samples1D, window: (f64, f64) },
}

#[derive(Debug, Clone)]
pub struct HomConfig {
    pub packet: TemporalPacket,
    pub d: f64,
    pub pump: PumpEnvelope,
}

impl HomConfig {
    pub fn new(packet: TemporalPacket, d: f64, pump: PumpEnvelope) -> Result<Self, HomError> {
        if d < 0.0 {
            return Err(HomError::Invalid("path difference d must be ≥ 0 by symmetry"));
        }
        Ok(Self { packet, d, pump })
    }
}

/// Advanced-wave amplitudes behind the beam splitter for a detection at z₁:
/// upper path i·[f(z−z₁−d) + f(z−z₁+d)]/2, lower path
/// [−f(z−z₁−d) + f(z−z₁+d)]/2.
pub fn hom_amplitudes(cfg: &HomConfig, z1: f64) -> Result<(Samples1D, Samples1D), HomError> {
    let f = &cfg.packet.samples;
    let half = -f.z_min;
    if z1.abs() + cfg.d + cfg.packet.support_half_width() > half {
        return Err(HomError::WindowClipped);
    }
    let n = f.v.len();
    let mut upper = Vec::with_capacity(n);
    let mut lower = Vec::with_capacity(n);
    for i in 0..n {
        let z = f.z(i);
        let a = f.sample(z - z1 - cfg.d);
        let b = f.sample(z - z1 + cfg.d);
        upper.push(Complex64::new(0.0, 0.5) * (a + b));
        lower.push((b - a) * 0.5);
    }
    Ok((
        Samples1D { z_min: f.z_min, dz: f.dz, v: upper },
        Samples1D { z_min: f.z_min, dz: f.dz, v: lower },
    ))
}

/// Re ∫ f*(z−d)·f(z+d) dz, the packet overlap after a relative delay 2d.
pub fn overlap(packet: &TemporalPacket, d: f64) -> f64 {
    let f = &packet.samples;
    let n = f.v.len();
    let mut s = Complex64::ZERO;
    for i in 0..n {
        let z = f.z(i);
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        s += f.sample(z - d).conj() * f.sample(z + d) * w;
    }
    (s * f.dz).re
}

/// Coincidence probability of the HOM experiment:
/// P(d) = (E − Re∫f*(z−d)f(z+d)dz)/(2E); 0 at d = 0, 1/2 as d → ∞.
pub fn coincidence_probability(cfg: &HomConfig) -> f64 {
    let e = cfg.packet.energy();
    (e - overlap(&cfg.packet, cfg.d)) / (2.0 * e)
}

/// Gate the advanced amplitudes by a pulsed pump: only emission times where
/// the pump envelope is present produce retarded waves.
pub fn pulsed_gate(cfg: &HomConfig, z1: f64) -> Result<(Samples1D, Samples1D), HomError> {
    let (mut upper, mut lower) = hom_amplitudes(cfg, z1)?;
    let PumpEnvelope::Pulsed { envelope, window } = &cfg.pump else {
        return Err(HomError::NotPulsed);
    };
    // emission window disjoint from both shifted packet supports: nothing
    // is emitted at all, not even tails
    let shw = cfg.packet.support_half_width();
    if window.1 < z1 - cfg.d - shw || window.0 > z1 + cfg.d + shw {
        upper.v.fill(Complex64::ZERO);
        lower.v.fill(Complex64::ZERO);
        return Ok((upper, lower));
    }
    for i in 0..upper.v.len() {
        let z = upper.z(i);
        let gate = if z >= window.0 && z <= window.1 {
            envelope.sample(z)
        } else {
            Complex64::ZERO
        };
        upper.v[i] *= gate;
        lower.v[i] *= gate;
    }
    Ok((upper, lower))
}

/// Coincidence for distinguishable wave numbers: the interference term beats
/// at k_s − k_i: P(d) = (1 − cos((k_s−k_i)d)·O(d)/E)/2.
pub fn nondegenerate_beat(cfg: &HomConfig, k_s: f64, k_i: f64) -> f64 {
    let e = cfg.packet.energy();
    let o = overlap(&cfg.packet, cfg.d);
    (1.0 - ((k_s - k_i) * cfg.d).cos() * o / e) / 2.0
}

/// Scan the dip over a list of path differences.
pub fn coincidence_scan(packet: &TemporalPacket, ds: &[f64]) -> Vec<(f64, f64)> {
    ds.iter()
        .map(|&d| {
            let e = packet.energy();
            (d, (e - overlap(packet, d)) / (2.0 * e))
        })
        .collect()
}

/// Render a (d, P) scan as CSV with a header line.
pub fn scan_to_csv(scan: &[(f64, f64)]) -> String {
    let mut out = String::from("d_meters,coincidence_probability\n");
    for (d, p) in scan {
        out.push_str(&format!("{d:.12e},{p:.12e}\n"));
    }
    out
}

/// Ideal rectangular band limit: zero every Fourier component with
/// |k| > k_max. A projection, so applying it twice equals applying it once.
pub fn band_limit(packet: &TemporalPacket, k_max: f64) -> Result<TemporalPacket, HomError> {
    if k_max <= 0.0 {
        return Err(HomError::Invalid("band limit must be positive"));
    }
    let f = &packet.samples;
    let n = f.v.len();
    let mut buf = f.v.clone();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let dk = 2.0 * std::f64::consts::PI / (n as f64 * f.dz);
    for (i, a) in buf.iter_mut().enumerate() {
        let m = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
        if (m * dk).abs() > k_max {
            *a = Complex64::ZERO;
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    for a in &mut buf {
        *a *= scale;
    }
    // band limiting preserves evenness but can leave roundoff asymmetry;
    // symmetrize before revalidating
    for i in 0..n / 2 {
        let avg = (buf[i] + buf[n - 1 - i]) * 0.5;
        buf[i] = avg;
        buf[n - 1 - i] = avg;
    }
    TemporalPacket::new(Samples1D { z_min: f.z_min, dz: f.dz, v: buf })
}
