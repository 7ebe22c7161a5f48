//! Vertical gust velocity signals.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gust velocity as a function of time.
pub trait GustSignal: Send + Sync {
    fn kind(&self) -> &'static str;
    fn value(&self, t: f64) -> f64;
}

/// `(wg_max / 2) (1 - cos(2 pi t / t_g))` on `[0, t_g]`, zero elsewhere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OneMinusCosine {
    pub wg_max: f64,
    pub t_g: f64,
}

impl GustSignal for OneMinusCosine {
    fn kind(&self) -> &'static str {
        "one-minus-cosine"
    }

    fn value(&self, t: f64) -> f64 {
        if (0.0..=self.t_g).contains(&t) {
            0.5 * self.wg_max * (1.0 - (2.0 * PI * t / self.t_g).cos())
        } else {
            0.0
        }
    }
}

/// Step of height `wg_max` at `t = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SharpEdge {
    pub wg_max: f64,
}

impl GustSignal for SharpEdge {
    fn kind(&self) -> &'static str {
        "sharp-edge"
    }

    fn value(&self, t: f64) -> f64 {
        if t >= 0.0 {
            self.wg_max
        } else {
            0.0
        }
    }
}

/// Seeded spectral realization of von Kármán transverse turbulence: a sum of
/// cosines at log-spaced frequencies with random phases, amplitudes rescaled
/// so the ensemble variance is exactly `sigma^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct VonKarman {
    pub sigma: f64,
    pub length_scale: f64,
    pub speed: f64,
    pub seed: u64,
    /// Temporal angular frequencies (rad/s).
    omegas: Vec<f64>,
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
}

impl VonKarman {
    pub const DEFAULT_COMPONENTS: usize = 1024;

    /// One-sided transverse PSD in spatial frequency `big_omega` (rad/m).
    pub fn psd(sigma: f64, length_scale: f64, big_omega: f64) -> f64 {
        let x = 1.339 * length_scale * big_omega;
        sigma * sigma * length_scale / PI * (1.0 + 8.0 / 3.0 * x * x) / (1.0 + x * x).powf(11.0 / 6.0)
    }

    pub fn new(sigma: f64, length_scale: f64, speed: f64, seed: u64, components: usize) -> Result<Self> {
        for (name, v) in [("sigma", sigma), ("length_scale", length_scale), ("U", speed)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    name: name.into(),
                    reason: "must be positive".into(),
                });
            }
        }
        if components < 512 {
            return Err(Error::InvalidParameter {
                name: "components".into(),
                reason: "at least 512 cosine components are required".into(),
            });
        }
        // Spatial band spans x = 1.339 L Omega from 1e-3 to 1e4.
        let lo = (1e-3 / (1.339 * length_scale)).ln();
        let hi = (1e4 / (1.339 * length_scale)).ln();
        let step = (hi - lo) / components as f64;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut omegas = Vec::with_capacity(components);
        let mut amplitudes = Vec::with_capacity(components);
        let mut phases = Vec::with_capacity(components);
        for i in 0..components {
            let (a, b) = ((lo + step * i as f64).exp(), (lo + step * (i + 1) as f64).exp());
            let mid = (a * b).sqrt();
            omegas.push(mid * speed);
            amplitudes.push((2.0 * Self::psd(sigma, length_scale, mid) * (b - a)).sqrt());
            phases.push(rng.random_range(0.0..2.0 * PI));
        }
        let var: f64 = amplitudes.iter().map(|a| 0.5 * a * a).sum();
        let k = sigma / var.sqrt();
        amplitudes.iter_mut().for_each(|a| *a *= k);
        Ok(Self {
            sigma,
            length_scale,
            speed,
            seed,
            omegas,
            amplitudes,
            phases,
        })
    }

    pub fn components(&self) -> usize {
        self.omegas.len()
    }
}

impl GustSignal for VonKarman {
    fn kind(&self) -> &'static str {
        "von-karman"
    }

    fn value(&self, t: f64) -> f64 {
        self.omegas
            .iter()
            .zip(&self.amplitudes)
            .zip(&self.phases)
            .map(|((w, a), p)| a * (w * t + p).cos())
            .sum()
    }
}

/// Configuration of a gust, resolved by [`GustSpec::build`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GustSpec {
    pub kind: String,
    /// Peak velocity, or RMS intensity for von Kármán.
    pub wg_max: f64,
    /// Duration for one-minus-cosine.
    #[serde(default)]
    pub t_g: f64,
    /// Turbulence length scale for von Kármán.
    #[serde(default = "default_length_scale")]
    pub length_scale: f64,
    #[serde(default)]
    pub seed: u64,
    /// Convection speed for von Kármán; defaults to the model airspeed.
    #[serde(default)]
    pub speed: Option<f64>,
}

fn default_length_scale() -> f64 {
    750.0
}

impl GustSpec {
    pub fn one_minus_cosine(wg_max: f64, t_g: f64) -> Self {
        Self {
            kind: "one-minus-cosine".into(),
            wg_max,
            t_g,
            length_scale: default_length_scale(),
            seed: 0,
            speed: None,
        }
    }

    pub fn build(&self, default_speed: f64) -> Result<Arc<dyn GustSignal>> {
        GUSTS.create(&self.kind, self, default_speed)
    }
}

type GustCtor = fn(&GustSpec, f64) -> Result<Arc<dyn GustSignal>>;

/// Gust constructors selectable by name.
pub struct GustRegistry {
    entries: &'static [(&'static str, GustCtor)],
}

impl GustRegistry {
    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn create(&self, name: &str, spec: &GustSpec, default_speed: f64) -> Result<Arc<dyn GustSignal>> {
        let ctor = self
            .entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, c)| c)
            .ok_or_else(|| Error::Unknown {
                kind: "gust",
                name: name.into(),
                known: self.names().join(", "),
            })?;
        ctor(spec, default_speed)
    }
}

fn make_one_minus_cosine(s: &GustSpec, _: f64) -> Result<Arc<dyn GustSignal>> {
    if !(s.t_g > 0.0 && s.t_g.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "t_g".into(),
            reason: "one-minus-cosine gusts need a positive duration".into(),
        });
    }
    Ok(Arc::new(OneMinusCosine {
        wg_max: s.wg_max,
        t_g: s.t_g,
    }))
}

fn make_sharp_edge(s: &GustSpec, _: f64) -> Result<Arc<dyn GustSignal>> {
    Ok(Arc::new(SharpEdge { wg_max: s.wg_max }))
}

fn make_von_karman(s: &GustSpec, speed: f64) -> Result<Arc<dyn GustSignal>> {
    Ok(Arc::new(VonKarman::new(
        s.wg_max,
        s.length_scale,
        s.speed.unwrap_or(speed),
        s.seed,
        VonKarman::DEFAULT_COMPONENTS,
    )?))
}

pub static GUSTS: GustRegistry = GustRegistry {
    entries: &[
        ("one-minus-cosine", make_one_minus_cosine),
        ("sharp-edge", make_sharp_edge),
        ("von-karman", make_von_karman),
    ],
};
