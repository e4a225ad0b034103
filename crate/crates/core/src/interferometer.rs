//! Amplitude algebra of the looped Mach-Zehnder interferometer.
//!
//! The particle state is a real two-component vector over the (Zeno,
//! orthogonal) channels. One loop applies `V = B A B`, where `B` is the
//! beam-splitter rotation by `pi / 4L` and `A = diag(1, tau)` is the
//! semitransparent pixel in the lower arm. After `L` loops the first column
//! of `V^L` holds the output amplitudes; whatever norm is missing has been
//! absorbed.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::ops::Mul;

use twofloat::TwoFloat;

use crate::error::{Error, Result};

/// Largest tolerated drift of an exact probability triple from unit sum.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-12;

/// Number of loops and transmission amplitude of the pixel under test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApparatusConfig {
    loops: u32,
    tau: f64,
}

impl ApparatusConfig {
    pub fn new(loops: u32, tau: f64) -> Result<Self> {
        if loops == 0 {
            return Err(Error::ZeroLoops);
        }
        check_tau(tau)?;
        Ok(Self { loops, tau })
    }

    pub fn loops(&self) -> u32 {
        self.loops
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Beam-splitter angle `pi / 4L`.
    pub fn theta(&self) -> f64 {
        FRAC_PI_4 / f64::from(self.loops)
    }

    /// `(cos theta, sin theta)`, the mirror transmission and reflection amplitudes.
    pub fn mirror_coefficients(&self) -> (f64, f64) {
        let theta = self.theta();
        (theta.cos(), theta.sin())
    }

    /// True when `tau` lies strictly below the Zeno threshold for this `L`.
    pub fn in_zeno_regime(&self) -> bool {
        self.tau < zeno_threshold(self.loops)
    }
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if (0.0..=1.0).contains(&tau) {
        Ok(())
    } else {
        Err(Error::TauOutOfRange(tau))
    }
}

/// Real 2x2 matrix acting on (Zeno, orthogonal) amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl TransferMatrix {
    pub const IDENTITY: Self = Self::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Self { m11, m12, m21, m22 }
    }

    pub fn determinant(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m11, self.m21, self.m12, self.m22)
    }

    /// Applies the matrix to a column vector.
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.m11 * v[0] + self.m12 * v[1],
            self.m21 * v[0] + self.m22 * v[1],
        ]
    }

    /// Integer power by repeated squaring.
    pub fn pow(&self, mut exponent: u64) -> Self {
        let mut base = *self;
        let mut acc = Self::IDENTITY;
        while exponent > 0 {
            if exponent & 1 == 1 {
                acc = acc * base;
            }
            exponent >>= 1;
            if exponent > 0 {
                base = base * base;
            }
        }
        acc
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [
            self.m11 - other.m11,
            self.m12 - other.m12,
            self.m21 - other.m21,
            self.m22 - other.m22,
        ]
        .iter()
        .fold(0.0_f64, |acc, d| acc.max(d.abs()))
    }
}

impl Mul for TransferMatrix {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.m11 * rhs.m11 + self.m12 * rhs.m21,
            self.m11 * rhs.m12 + self.m12 * rhs.m22,
            self.m21 * rhs.m11 + self.m22 * rhs.m21,
            self.m21 * rhs.m12 + self.m22 * rhs.m22,
        )
    }
}

/// Beam splitter `B = exp(-i theta sigma_2) = ((c, -s), (s, c))` with `theta = pi / 4L`.
pub fn beam_splitter(loops: u32) -> Result<TransferMatrix> {
    if loops == 0 {
        return Err(Error::ZeroLoops);
    }
    let theta = FRAC_PI_4 / f64::from(loops);
    let (s, c) = theta.sin_cos();
    Ok(TransferMatrix::new(c, -s, s, c))
}

/// The pixel in the lower arm, `diag(1, tau)`.
pub fn absorber(tau: f64) -> Result<TransferMatrix> {
    check_tau(tau)?;
    Ok(TransferMatrix::new(1.0, 0.0, 0.0, tau))
}

/// One loop `V = B A B`, written out entry by entry.
pub fn loop_matrix(cfg: &ApparatusConfig) -> TransferMatrix {
    let (c, s) = cfg.mirror_coefficients();
    let t = cfg.tau;
    TransferMatrix::new(
        (1.0 + t) * c * c - t,
        -s * c * (1.0 + t),
        s * c * (1.0 + t),
        t - (1.0 + t) * s * s,
    )
}

/// Signed output amplitudes after `L` loops for a particle injected in the
/// Zeno channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitudes {
    pub zeno: f64,
    pub orthogonal: f64,
}

/// First column of `V^L`, computed by repeated squaring.
pub fn evolve(cfg: &ApparatusConfig) -> Amplitudes {
    let [zeno, orthogonal] = evolve_compensated(cfg);
    Amplitudes {
        zeno: zeno.into(),
        orthogonal: orthogonal.into(),
    }
}

type Compensated = [TwoFloat; 4];

fn compensated_mul(a: &Compensated, b: &Compensated) -> Compensated {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

/// Squaring in double-double arithmetic. Rounding drift of plain doubles
/// grows like `L * eps`, which breaks unit norm at `tau = 1` for `L ~ 10^4`.
fn evolve_compensated(cfg: &ApparatusConfig) -> [TwoFloat; 2] {
    let (c, s) = cfg.mirror_coefficients();
    let (c, s) = (TwoFloat::from(c), TwoFloat::from(s));
    // Rescale so that c^2 + s^2 = 1 holds to double-double accuracy.
    let delta = c * c + s * s - 1.0;
    let rescale = TwoFloat::from(1.0) - delta * 0.5;
    let (c, s) = (c * rescale, s * rescale);
    let t = TwoFloat::from(cfg.tau);
    let one_t = t + 1.0;
    let sc = s * c * one_t;
    let mut base: Compensated = [one_t * c * c - t, -sc, sc, t - one_t * s * s];
    let (zero, one) = (TwoFloat::from(0.0), TwoFloat::from(1.0));
    let mut acc: Compensated = [one, zero, zero, one];
    let mut exponent = cfg.loops;
    while exponent > 0 {
        if exponent & 1 == 1 {
            acc = compensated_mul(&acc, &base);
        }
        exponent >>= 1;
        if exponent > 0 {
            base = compensated_mul(&base, &base);
        }
    }
    [acc[0], acc[2]]
}

/// Per-particle outcome law: Zeno channel, orthogonal channel, absorbed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelProbabilities {
    pub p_z: f64,
    pub p_o: f64,
    pub p_a: f64,
}

impl ChannelProbabilities {
    pub fn new(p_z: f64, p_o: f64, p_a: f64) -> Result<Self> {
        for (name, value) in [("p_z", p_z), ("p_o", p_o), ("p_a", p_a)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::ProbabilityOutOfRange { name, value });
            }
        }
        let sum = p_z + p_o + p_a;
        if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
            return Err(Error::InconsistentProbabilities { sum });
        }
        Ok(Self { p_z, p_o, p_a })
    }

    /// The one-pass transmission experiment viewed as a trinomial law whose
    /// orthogonal channel is always empty: detected counts go to `p_z`.
    pub fn standard(tau: f64) -> Result<Self> {
        let std = standard_probabilities(tau)?;
        Ok(Self {
            p_z: std.detected,
            p_o: 0.0,
            p_a: std.absorbed,
        })
    }

    /// Merges both output ports into one detector: `(p_z + p_o, p_a)`.
    pub fn detected(&self) -> f64 {
        self.p_z + self.p_o
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.p_z, self.p_o, self.p_a]
    }
}

/// Exact channel probabilities from the `L`-th power of the loop matrix.
pub fn zeno_probabilities(cfg: &ApparatusConfig) -> Result<ChannelProbabilities> {
    let [zeno, orthogonal] = evolve_compensated(cfg);
    let (p_z, p_o) = (zeno * zeno, orthogonal * orthogonal);
    let transmitted = p_z + p_o;
    let overshoot: f64 = (transmitted - 1.0).into();
    if overshoot > PROBABILITY_SUM_TOLERANCE {
        return Err(Error::InconsistentProbabilities {
            sum: 1.0 + overshoot,
        });
    }
    if overshoot > 0.0 {
        return Ok(ChannelProbabilities {
            p_z: (p_z / transmitted).into(),
            p_o: (p_o / transmitted).into(),
            p_a: 0.0,
        });
    }
    Ok(ChannelProbabilities {
        p_z: p_z.into(),
        p_o: p_o.into(),
        p_a: (TwoFloat::from(1.0) - transmitted).into(),
    })
}

/// Leading-order law valid in the Zeno regime:
/// `p_a = (pi^2 / 4L) (1 + tau) / (1 - tau)`, `p_o = 0`, `p_z = 1 - p_a`.
pub fn zeno_probabilities_asymptotic(cfg: &ApparatusConfig) -> Result<ChannelProbabilities> {
    if !cfg.in_zeno_regime() {
        return Err(Error::OutsideZenoRegime {
            tau: cfg.tau,
            loops: cfg.loops,
            threshold: zeno_threshold(cfg.loops),
        });
    }
    let p_a = asymptotic_absorption(cfg.tau, cfg.loops).clamp(0.0, 1.0);
    Ok(ChannelProbabilities {
        p_z: 1.0 - p_a,
        p_o: 0.0,
        p_a,
    })
}

/// Unclamped leading-order absorption probability. Callers check the regime.
pub(crate) fn asymptotic_absorption(tau: f64, loops: u32) -> f64 {
    PI * PI / (4.0 * f64::from(loops)) * (1.0 + tau) / (1.0 - tau)
}

/// `tau_L^Z = (1 - sin(pi/2L)) / (1 + sin(pi/2L))`: below it the loop matrix
/// has real eigenvalues and the Zeno asymptotics hold.
pub fn zeno_threshold(loops: u32) -> f64 {
    let s = (FRAC_PI_2 / f64::from(loops.max(1))).sin();
    (1.0 - s) / (1.0 + s)
}

/// Dual form of [`zeno_threshold`]: the loop count
/// `L_tau^Z = pi / (2 arcsin((1 - tau) / (1 + tau)))` above which `tau`
/// is in the Zeno regime. Infinite for `tau = 1`.
pub fn zeno_threshold_loops(tau: f64) -> Result<f64> {
    check_tau(tau)?;
    if tau == 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(PI / (2.0 * ((1.0 - tau) / (1.0 + tau)).asin()))
}

/// Single-pass transmission experiment: detection and absorption probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardProbabilities {
    pub detected: f64,
    pub absorbed: f64,
}

/// `p'_d = tau^2`, `p'_a = 1 - tau^2`.
pub fn standard_probabilities(tau: f64) -> Result<StandardProbabilities> {
    check_tau(tau)?;
    let detected = tau * tau;
    Ok(StandardProbabilities {
        detected,
        absorbed: 1.0 - detected,
    })
}

/// `sqrt(1 - p_a)` with the exact Zeno absorption probability: the
/// transmission a standard setup would need to absorb equally often.
pub fn effective_transmission(cfg: &ApparatusConfig) -> Result<f64> {
    let probs = zeno_probabilities(cfg)?;
    Ok((1.0 - probs.p_a).sqrt())
}
