//! Rician fading channels and secrecy-rate evaluation.
//!
//! Channel vectors hold only the normalized small-scale fading; all
//! large-scale effects (reference path gain, distance powers, transmit and
//! noise power) enter through [`LinkBudget`] and the link distances at rate
//! evaluation time. That split lets one fading draw be re-priced at many
//! candidate RIS positions, which is what makes paired Monte-Carlo
//! comparisons across placement schemes cheap.
//!
//! The reflection configuration `q` is a row vector of per-unit responses
//! with `|q_n| <= 1`; received amplitudes are plain bilinear products
//! `q . h` with no conjugation.

use crate::cmat::{bilinear, CMat, C64};
use crate::geometry::{distance, Scene, Vec3};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("link distance {which} is zero; SNR is undefined at a node position")]
    ZeroDistance { which: &'static str },
    #[error("invalid link budget: {0}")]
    InvalidBudget(String),
    #[error("invalid fading parameters: {0}")]
    InvalidFading(String),
    #[error("reflection coefficient {index} has modulus {modulus} > 1")]
    ModulusBound { index: usize, modulus: f64 },
    #[error("vector lengths disagree: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("malformed channel fixture: {0}")]
    FixtureFormat(String),
}

/// Per-link Rician fading parameters: K-factor (power ratio of the
/// deterministic component to the scattered component) and total per-entry
/// power, for each of the three links, plus the base RNG seed experiments
/// derive their streams from.
#[derive(Clone, Copy, Debug)]
pub struct FadingParams {
    pub k_si: f64,
    pub k_id: f64,
    pub k_ie: f64,
    pub var_si: f64,
    pub var_id: f64,
    pub var_ie: f64,
    pub seed: u64,
}

impl FadingParams {
    /// K = 1 and unit entry power on every link.
    pub fn reference() -> FadingParams {
        FadingParams {
            k_si: 1.0,
            k_id: 1.0,
            k_ie: 1.0,
            var_si: 1.0,
            var_id: 1.0,
            var_ie: 1.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        for (name, k) in [("k_si", self.k_si), ("k_id", self.k_id), ("k_ie", self.k_ie)] {
            if !(k >= 0.0) {
                return Err(ChannelError::InvalidFading(format!("{name} = {k} must be >= 0")));
            }
        }
        for (name, v) in [
            ("var_si", self.var_si),
            ("var_id", self.var_id),
            ("var_ie", self.var_ie),
        ] {
            if !(v > 0.0) {
                return Err(ChannelError::InvalidFading(format!("{name} = {v} must be > 0")));
            }
        }
        Ok(())
    }
}

/// Large-scale link budget: reference path gain, per-link path-loss
/// exponents, and the radio powers. All powers are in watts; dBm exists
/// only at the CLI/config boundary.
#[derive(Clone, Copy, Debug)]
pub struct LinkBudget {
    /// Path gain at the 1 m reference distance (dimensionless power ratio).
    pub path_gain_ref: f64,
    /// Path-loss exponent of the source-RIS link.
    pub alpha_si: f64,
    /// Path-loss exponent of the RIS-destination link.
    pub alpha_id: f64,
    /// Path-loss exponent of the RIS-eavesdropper link.
    pub alpha_ie: f64,
    /// Receiver noise power in watts.
    pub noise_power: f64,
    /// Transmit power in watts.
    pub tx_power: f64,
}

impl LinkBudget {
    /// Indoor reference budget: -30 dB gain at 1 m, exponent 2.2 on every
    /// link, -40 dBm noise, 10 dBm transmit power.
    pub fn reference() -> LinkBudget {
        LinkBudget {
            path_gain_ref: 1e-3,
            alpha_si: 2.2,
            alpha_id: 2.2,
            alpha_ie: 2.2,
            noise_power: 1e-7,
            tx_power: dbm_to_watts(10.0),
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        for (name, v) in [
            ("path_gain_ref", self.path_gain_ref),
            ("alpha_si", self.alpha_si),
            ("alpha_id", self.alpha_id),
            ("alpha_ie", self.alpha_ie),
            ("noise_power", self.noise_power),
            ("tx_power", self.tx_power),
        ] {
            if !(v > 0.0) {
                return Err(ChannelError::InvalidBudget(format!("{name} = {v} must be > 0")));
            }
        }
        Ok(())
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Power gain of one hop of length `d` with exponent `alpha`: `xi0 / d^alpha`.
/// Equals `xi0` at the 1 m reference distance for any exponent.
pub fn path_gain(xi0: f64, d: f64, alpha: f64) -> f64 {
    xi0 / d.powf(alpha)
}

/// Draws `n` normalized Rician fading coefficients: deterministic phase-0
/// mean plus a circular complex Gaussian scatter term, two standard normal
/// variates per entry.
pub fn sample_rician(n: usize, k: f64, var: f64, rng: &mut impl Rng) -> Vec<C64> {
    let los = (var * k / (k + 1.0)).sqrt();
    let scatter = (var / (k + 1.0)).sqrt();
    let half = std::f64::consts::FRAC_1_SQRT_2;
    (0..n)
        .map(|_| {
            let g1: f64 = rng.sample(StandardNormal);
            let g2: f64 = rng.sample(StandardNormal);
            C64::new(los + scatter * g1 * half, scatter * g2 * half)
        })
        .collect()
}

/// Elementwise product of two hop vectors; equivalent to multiplying by the
/// diagonal matrix of the first.
pub fn cascade(h_a: &[C64], h_b: &[C64]) -> Vec<C64> {
    assert_eq!(h_a.len(), h_b.len());
    h_a.iter().zip(h_b).map(|(a, b)| a * b).collect()
}

/// One joint draw of the three normalized fading vectors, with the two
/// cascaded end-to-end vectors precomputed.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    /// Source to RIS.
    pub h_si: Vec<C64>,
    /// RIS to destination.
    pub h_id: Vec<C64>,
    /// RIS to eavesdropper.
    pub h_ie: Vec<C64>,
    /// Cascaded source-RIS-destination vector (elementwise `h_si * h_id`).
    pub h_sid: Vec<C64>,
    /// Cascaded source-RIS-eavesdropper vector (elementwise `h_si * h_ie`).
    pub h_sie: Vec<C64>,
}

impl ChannelSet {
    /// Draws the three vectors in a fixed order (`h_si`, `h_id`, `h_ie`,
    /// each entry consuming two normal variates) so a seeded generator
    /// reproduces the set exactly.
    pub fn draw(n: usize, fading: &FadingParams, rng: &mut impl Rng) -> ChannelSet {
        let h_si = sample_rician(n, fading.k_si, fading.var_si, rng);
        let h_id = sample_rician(n, fading.k_id, fading.var_id, rng);
        let h_ie = sample_rician(n, fading.k_ie, fading.var_ie, rng);
        ChannelSet::from_links(h_si, h_id, h_ie)
    }

    /// Builds a set from explicit hop vectors, computing the cascades.
    pub fn from_links(h_si: Vec<C64>, h_id: Vec<C64>, h_ie: Vec<C64>) -> ChannelSet {
        assert_eq!(h_si.len(), h_id.len());
        assert_eq!(h_si.len(), h_ie.len());
        let h_sid = cascade(&h_si, &h_id);
        let h_sie = cascade(&h_si, &h_ie);
        ChannelSet {
            h_si,
            h_id,
            h_ie,
            h_sid,
            h_sie,
        }
    }

    pub fn n_units(&self) -> usize {
        self.h_si.len()
    }

    /// Writes the five vectors in a columnar text fixture format: a count
    /// line, then per vector a name line followed by one `re im` pair per
    /// element.
    pub fn write_columnar(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "n {}", self.n_units())?;
        for (name, v) in self.columns() {
            writeln!(out, "{name}")?;
            for x in v {
                writeln!(out, "{:.17e} {:.17e}", x.re, x.im)?;
            }
        }
        Ok(())
    }

    /// Parses the format written by [`Self::write_columnar`]; the cascade
    /// columns are cross-checked against the hop products.
    pub fn read_columnar(text: &str) -> Result<ChannelSet, ChannelError> {
        let bad = |m: &str| ChannelError::FixtureFormat(m.to_string());
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let head = lines.next().ok_or_else(|| bad("empty fixture"))?;
        let n: usize = head
            .strip_prefix("n ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad("first line must be `n <count>`"))?;
        let mut column = |expected: &str| -> Result<Vec<C64>, ChannelError> {
            let name = lines.next().ok_or_else(|| bad("missing column header"))?;
            if name.trim() != expected {
                return Err(bad(&format!("expected column {expected}, got {name}")));
            }
            (0..n)
                .map(|_| {
                    let line = lines.next().ok_or_else(|| bad("truncated column"))?;
                    let mut parts = line.split_whitespace();
                    let re: f64 = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| bad("bad real part"))?;
                    let im: f64 = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| bad("bad imaginary part"))?;
                    Ok(C64::new(re, im))
                })
                .collect()
        };
        let h_si = column("h_si")?;
        let h_id = column("h_id")?;
        let h_ie = column("h_ie")?;
        let h_sid = column("h_sid")?;
        let h_sie = column("h_sie")?;
        let set = ChannelSet::from_links(h_si, h_id, h_ie);
        if set.h_sid != h_sid || set.h_sie != h_sie {
            return Err(bad("cascade columns do not match hop products"));
        }
        Ok(set)
    }

    fn columns(&self) -> [(&'static str, &Vec<C64>); 5] {
        [
            ("h_si", &self.h_si),
            ("h_id", &self.h_id),
            ("h_ie", &self.h_ie),
            ("h_sid", &self.h_sid),
            ("h_sie", &self.h_sie),
        ]
    }
}

/// The RIS reflection row vector; every entry has modulus at most one
/// (tolerance 1e-8 for round-off from recovery arithmetic).
#[derive(Clone, Debug, PartialEq)]
pub struct ReflectVector {
    q: Vec<C64>,
}

impl ReflectVector {
    pub fn new(q: Vec<C64>) -> Result<ReflectVector, ChannelError> {
        for (index, x) in q.iter().enumerate() {
            let modulus = x.norm();
            if modulus > 1.0 + 1e-8 {
                return Err(ChannelError::ModulusBound { index, modulus });
            }
        }
        Ok(ReflectVector { q })
    }

    /// The all-off configuration; always feasible with unit rate ratio.
    pub fn zero(n: usize) -> ReflectVector {
        ReflectVector {
            q: vec![C64::new(0.0, 0.0); n],
        }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }
}

impl std::ops::Deref for ReflectVector {
    type Target = [C64];
    fn deref(&self) -> &[C64] {
        &self.q
    }
}

/// RIS-relative distances of the three links.
#[derive(Clone, Copy, Debug)]
pub struct LinkDistances {
    pub d_si: f64,
    pub d_id: f64,
    pub d_ie: f64,
}

impl LinkDistances {
    pub fn from_position(p: Vec3, scene: &Scene) -> LinkDistances {
        LinkDistances {
            d_si: distance(scene.source, p),
            d_id: distance(p, scene.destination),
            d_ie: distance(p, scene.eavesdropper),
        }
    }

    fn check_nonzero(&self) -> Result<(), ChannelError> {
        for (which, d) in [
            ("source-RIS", self.d_si),
            ("RIS-destination", self.d_id),
            ("RIS-eavesdropper", self.d_ie),
        ] {
            if d == 0.0 {
                return Err(ChannelError::ZeroDistance { which });
            }
        }
        Ok(())
    }
}

/// Precomputed large-scale coefficients of the rate ratio.
///
/// With noise power `nv`, the ratio of received-plus-noise powers at the
/// destination and the eavesdropper is
/// `(nv*f1 + f2*|q.h_sid|^2) / (nv*f1 + f3*|q.h_sie|^2)`.
#[derive(Clone, Copy, Debug)]
pub struct RateFactors {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

impl RateFactors {
    pub fn new(d: &LinkDistances, b: &LinkBudget) -> RateFactors {
        let p_si = d.d_si.powf(b.alpha_si);
        let p_id = d.d_id.powf(b.alpha_id);
        let p_ie = d.d_ie.powf(b.alpha_ie);
        let gain = b.tx_power * b.path_gain_ref * b.path_gain_ref;
        RateFactors {
            f1: p_id * p_si * p_ie,
            f2: gain * p_ie,
            f3: gain * p_id,
        }
    }

    /// Destination-to-eavesdropper distance-power ratio `f3 / f2`
    /// (`d_id^alpha_id / d_ie^alpha_ie`); the weight on the eavesdropper
    /// quadratic in the channel difference matrix.
    pub fn eavesdropper_weight(&self) -> f64 {
        self.f3 / self.f2
    }
}

/// The three distance-power factors at a candidate RIS position.
pub fn f_factors(p: Vec3, lb: &LinkBudget, scene: &Scene) -> Result<RateFactors, ChannelError> {
    let d = LinkDistances::from_position(p, scene);
    d.check_nonzero()?;
    Ok(RateFactors::new(&d, lb))
}

/// Destination and eavesdropper SNRs at precomputed link distances.
pub fn snr_pair_at(q: &[C64], ch: &ChannelSet, d: &LinkDistances, b: &LinkBudget) -> (f64, f64) {
    let gain = b.tx_power * b.path_gain_ref * b.path_gain_ref;
    let amp_d = bilinear(q, &ch.h_sid).norm_sqr();
    let amp_e = bilinear(q, &ch.h_sie).norm_sqr();
    let common = d.d_si.powf(b.alpha_si) * b.noise_power;
    (
        gain * amp_d / (d.d_id.powf(b.alpha_id) * common),
        gain * amp_e / (d.d_ie.powf(b.alpha_ie) * common),
    )
}

/// Destination and eavesdropper SNRs for a reflection row at a RIS position.
pub fn snr_pair(
    q: &ReflectVector,
    p: Vec3,
    ch: &ChannelSet,
    lb: &LinkBudget,
    scene: &Scene,
) -> Result<(f64, f64), ChannelError> {
    let d = LinkDistances::from_position(p, scene);
    d.check_nonzero()?;
    Ok(snr_pair_at(q, ch, &d, lb))
}

/// The destination-to-eavesdropper rate ratio `(1 + snr_d) / (1 + snr_e)`
/// in its cleared-denominator form; the quantity the beamforming stage
/// maximizes. The secrecy rate is `log2` of this ratio clamped at zero.
pub fn rate_ratio_at(q: &[C64], ch: &ChannelSet, d: &LinkDistances, b: &LinkBudget) -> f64 {
    let f = RateFactors::new(d, b);
    let num = b.noise_power * f.f1 + f.f2 * bilinear(q, &ch.h_sid).norm_sqr();
    let den = b.noise_power * f.f1 + f.f3 * bilinear(q, &ch.h_sie).norm_sqr();
    num / den
}

/// Position-based form of [`rate_ratio_at`].
pub fn rate_ratio(
    q: &ReflectVector,
    p: Vec3,
    ch: &ChannelSet,
    lb: &LinkBudget,
    scene: &Scene,
) -> Result<f64, ChannelError> {
    let d = LinkDistances::from_position(p, scene);
    d.check_nonzero()?;
    Ok(rate_ratio_at(q, ch, &d, lb))
}

/// Achievable secrecy rate in bit/s/Hz at precomputed distances.
pub fn secrecy_rate_at(q: &[C64], ch: &ChannelSet, d: &LinkDistances, b: &LinkBudget) -> f64 {
    rate_ratio_at(q, ch, d, b).log2().max(0.0)
}

/// Achievable secrecy rate in bit/s/Hz:
/// `max(0, log2(1 + snr_d) - log2(1 + snr_e))`.
pub fn secrecy_rate(
    q: &ReflectVector,
    p: Vec3,
    ch: &ChannelSet,
    lb: &LinkBudget,
    scene: &Scene,
) -> Result<f64, ChannelError> {
    let d = LinkDistances::from_position(p, scene);
    d.check_nonzero()?;
    Ok(secrecy_rate_at(q, ch, &d, lb))
}

/// Effective cascaded channel when the source is a multi-antenna
/// transmitter with a fixed beamforming vector: the RIS-facing hop becomes
/// `H_si * b_s`, and the cascade with the destination hop is elementwise as
/// in the single-antenna case.
pub fn effective_miso_channel(h_si: &CMat, b_s: &[C64], h_id: &[C64]) -> Vec<C64> {
    assert_eq!(h_si.n_cols(), b_s.len());
    assert_eq!(h_si.n_rows(), h_id.len());
    cascade(&h_si.matvec(b_s), h_id)
}
