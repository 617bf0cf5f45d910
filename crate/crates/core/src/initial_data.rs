use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Preset families for the interior datum `u0` on `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant {
        c: f64,
    },
    /// `a + b r`
    Linear {
        a: f64,
        b: f64,
    },
    /// 1 on `(lo, hi)`, 0 elsewhere.
    Indicator {
        lo: f64,
        hi: f64,
    },
    /// `offset + sum_k sine[k-1] sin(k pi r) + sum_k cosine[k-1] cos(k pi r)`
    Fourier {
        #[serde(default)]
        offset: f64,
        #[serde(default)]
        sine: Vec<f64>,
        #[serde(default)]
        cosine: Vec<f64>,
    },
}

impl Profile {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Profile::Constant { c } => *c,
            Profile::Linear { a, b } => a + b * r,
            Profile::Indicator { lo, hi } => {
                if r > *lo && r < *hi {
                    1.0
                } else {
                    0.0
                }
            }
            Profile::Fourier {
                offset,
                sine,
                cosine,
            } => {
                let mut v = *offset;
                for (k, s) in sine.iter().enumerate() {
                    v += s * ((k + 1) as f64 * PI * r).sin();
                }
                for (k, c) in cosine.iter().enumerate() {
                    v += c * ((k + 1) as f64 * PI * r).cos();
                }
                v
            }
        }
    }

    /// Interior points where the profile is discontinuous.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Profile::Indicator { lo, hi } => [*lo, *hi]
                .into_iter()
                .filter(|x| *x > 0.0 && *x < 1.0)
                .collect(),
            _ => Vec::new(),
        }
    }

    /// The profile of `r -> u0(1 - r)`.
    pub fn mirrored(&self) -> Profile {
        match self {
            Profile::Constant { c } => Profile::Constant { c: *c },
            Profile::Linear { a, b } => Profile::Linear { a: a + b, b: -b },
            Profile::Indicator { lo, hi } => Profile::Indicator {
                lo: 1.0 - hi,
                hi: 1.0 - lo,
            },
            Profile::Fourier {
                offset,
                sine,
                cosine,
            } => {
                let sign = |k: usize| if (k + 1).is_multiple_of(2) { 1.0 } else { -1.0 };
                Profile::Fourier {
                    offset: *offset,
                    sine: sine.iter().enumerate().map(|(k, s)| -sign(k) * s).collect(),
                    cosine: cosine.iter().enumerate().map(|(k, c)| sign(k) * c).collect(),
                }
            }
        }
    }
}

/// Interior datum plus the initial reservoir values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub profile: Profile,
    pub v0_minus: f64,
    pub v0_plus: f64,
}

impl InitialData {
    pub fn new(profile: Profile, v0_minus: f64, v0_plus: f64) -> Result<Self> {
        let d = InitialData {
            profile,
            v0_minus,
            v0_plus,
        };
        d.validate()?;
        Ok(d)
    }

    /// `u0 = c`, `v0 = (c, c)`: the constant solution of every regime.
    pub fn constant(c: f64) -> Self {
        InitialData {
            profile: Profile::Constant { c },
            v0_minus: c,
            v0_plus: c,
        }
    }

    /// `u0(r) = r`, `v0 = (0, 1)`: the reference datum.
    pub fn reference() -> Self {
        InitialData {
            profile: Profile::Linear { a: 0.0, b: 1.0 },
            v0_minus: 0.0,
            v0_plus: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("v0_minus", self.v0_minus), ("v0_plus", self.v0_plus)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        if let Profile::Indicator { lo, hi } = self.profile {
            if !(0.0 <= lo && lo < hi && hi <= 1.0) {
                return Err(Error::config(format!(
                    "indicator bounds ({lo}, {hi}) must satisfy 0 <= lo < hi <= 1"
                )));
            }
        }
        const CHECK_POINTS: usize = 1000;
        for i in 0..CHECK_POINTS {
            let r = (i as f64 + 0.5) / CHECK_POINTS as f64;
            let v = self.u0(r);
            if !(-1e-12..=1.0 + 1e-12).contains(&v) || !v.is_finite() {
                return Err(Error::config(format!(
                    "u0({r:.4}) = {v} is outside [0, 1]"
                )));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn u0(&self, r: f64) -> f64 {
        self.profile.eval(r)
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.profile.breakpoints()
    }

    /// `Some(c)` when the datum is the constant state `c` everywhere.
    pub fn as_constant(&self) -> Option<f64> {
        match self.profile {
            Profile::Constant { c } if c == self.v0_minus && c == self.v0_plus => Some(c),
            _ => None,
        }
    }

    /// Mirror image under `r -> 1 - r` (reservoirs swap sides).
    pub fn mirrored(&self) -> Self {
        InitialData {
            profile: self.profile.mirrored(),
            v0_minus: self.v0_plus,
            v0_plus: self.v0_minus,
        }
    }

    /// Lower and upper bounds of all data, for maximum-principle checks.
    pub fn data_range(&self) -> (f64, f64) {
        let mut lo = self.v0_minus.min(self.v0_plus);
        let mut hi = self.v0_minus.max(self.v0_plus);
        for i in 0..=1000 {
            let v = self.u0(i as f64 / 1000.0);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Total initial mass `int u0 + v0_minus + v0_plus`.
    pub fn total_mass(&self) -> f64 {
        let interior = match &self.profile {
            Profile::Constant { c } => *c,
            Profile::Linear { a, b } => a + 0.5 * b,
            Profile::Indicator { lo, hi } => hi - lo,
            Profile::Fourier { offset, sine, .. } => {
                // int_0^1 sin(k pi r) = (1 - (-1)^k) / (k pi); cosines integrate to 0
                offset
                    + sine
                        .iter()
                        .enumerate()
                        .map(|(k, s)| {
                            let k = (k + 1) as f64;
                            s * (1.0 - (-1f64).powf(k)) / (k * PI)
                        })
                        .sum::<f64>()
            }
        };
        interior + self.v0_minus + self.v0_plus
    }
}
