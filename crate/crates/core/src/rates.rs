//! SINR, secrecy-rate and ergodic backscatter-rate computations.

use std::f64::consts::LOG2_E;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::scenario::{Node, ScenarioConfig};
use crate::{CVector, C64};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Received primary amplitude `Σ_m h_{m,ξ}^H w_m`.
pub fn direct_amplitude(ch: &ChannelSet, w: &CVector, node: Node) -> C64 {
    let n = ch.antennas_per_ap();
    (0..ch.num_aps())
        .map(|m| ch.direct(m, node).dotc(&w.rows(m * n, n)))
        .sum()
}

/// Backscattered amplitude `Σ_m g_{b,ξ}^H H_m^H w_m` (before the √α factor).
pub fn backscatter_amplitude(ch: &ChannelSet, w: &CVector, node: Node) -> C64 {
    let n = ch.antennas_per_ap();
    let g = ch.backscatter(node);
    (0..ch.num_aps())
        .map(|m| g.dotc(&(&ch.ap_to_bd[m] * w.rows(m * n, n))))
        .sum()
}

/// Primary-symbol SINR at `node`; the backscatter term counts as interference.
pub fn sinr_primary(ch: &ChannelSet, w: &CVector, node: Node, cfg: &ScenarioConfig) -> f64 {
    let signal = direct_amplitude(ch, w, node).norm_sqr();
    let interference = cfg.reflection_coeff * backscatter_amplitude(ch, w, node).norm_sqr();
    signal / (interference + cfg.noise_w(node))
}

/// SNR of the backscatter link after the primary signal has been cancelled.
pub fn snr_secondary(ch: &ChannelSet, w: &CVector, cfg: &ScenarioConfig) -> f64 {
    cfg.reflection_coeff * backscatter_amplitude(ch, w, Node::Su).norm_sqr() / cfg.noise_w(Node::Su)
}

/// `[log2(1+γ_p) − log2(1+γ_e)]^+` in bits/s/Hz.
pub fn secrecy_spectral_efficiency(gamma_p: f64, gamma_e: f64) -> f64 {
    (gamma_p.ln_1p() - gamma_e.ln_1p()).max(0.0) * LOG2_E
}

/// Secrecy rate in bits/s.
pub fn secrecy_rate(ch: &ChannelSet, w: &CVector, cfg: &ScenarioConfig) -> f64 {
    let gp = sinr_primary(ch, w, Node::Pu, cfg);
    let ge = sinr_primary(ch, w, Node::Eve, cfg);
    cfg.bandwidth_hz * secrecy_spectral_efficiency(gp, ge)
}

/// `e^z E1(z)` for `z > 0`.
///
/// Power series below 1, modified-Lentz continued fraction from 1 upward. The
/// scaled form stays finite for large `z` where `E1` alone underflows.
pub fn scaled_e1(z: f64) -> f64 {
    debug_assert!(z > 0.0);
    if z < 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -z / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        (-EULER_GAMMA - z.ln() - sum) * z.exp()
    } else {
        const TINY: f64 = 1e-300;
        let mut b = z + 1.0;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h
    }
}

/// Exponential integral `Ei(x) = ∫_{-∞}^x e^u/u du`, defined here for `x < 0`.
pub fn exponential_integral_ei(x: f64) -> Result<f64> {
    if !(x < 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("Ei({x}) is only evaluated for finite x < 0")));
    }
    let z = -x;
    Ok(-scaled_e1(z) * (-z).exp())
}

/// Ergodic backscatter rate per Hz: `E[log2(1 + β|s|²)]` with `|s|² ~ Exp(1)`,
/// i.e. `-e^{1/β} Ei(-1/β) log2 e`.
pub fn ergodic_spectral_efficiency(beta: f64) -> f64 {
    if beta <= 0.0 {
        return 0.0;
    }
    scaled_e1(1.0 / beta) * LOG2_E
}

/// Ergodic backscatter rate in bits/s.
pub fn ergodic_secondary_rate(beta: f64, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * ergodic_spectral_efficiency(beta)
}

/// Smallest SNR whose ergodic rate reaches `rate_bps`, by bisection.
///
/// The bracket doubles until the rate at the upper end exceeds the target; the
/// search stops once the rate residual is within `tol` relative.
pub fn bisect_beta_star(rate_bps: f64, bandwidth_hz: f64, tol: f64) -> f64 {
    if rate_bps <= 0.0 {
        return 0.0;
    }
    let target = rate_bps / bandwidth_hz;
    let f = |b: f64| ergodic_spectral_efficiency(b) - target;
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..2000 {
        mid = 0.5 * (lo + hi);
        let r = f(mid);
        if r.abs() <= tol * target || hi - lo <= f64::EPSILON * hi {
            break;
        }
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    mid
}

/// Every rate quantity for one (channels, beamformer) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    pub gamma_p: f64,
    pub gamma_e: f64,
    pub gamma_s: f64,
    pub beta_c: f64,
    pub rate_p_bps: f64,
    pub rate_e_bps: f64,
    pub rate_s_bps: f64,
    pub rate_c_bps: f64,
    pub secrecy_bps: f64,
}

impl RateReport {
    pub fn evaluate(ch: &ChannelSet, w: &CVector, cfg: &ScenarioConfig) -> Self {
        let b = cfg.bandwidth_hz;
        let gamma_p = sinr_primary(ch, w, Node::Pu, cfg);
        let gamma_e = sinr_primary(ch, w, Node::Eve, cfg);
        let gamma_s = sinr_primary(ch, w, Node::Su, cfg);
        let beta_c = snr_secondary(ch, w, cfg);
        let rate_p_bps = b * gamma_p.ln_1p() * LOG2_E;
        let rate_e_bps = b * gamma_e.ln_1p() * LOG2_E;
        RateReport {
            gamma_p,
            gamma_e,
            gamma_s,
            beta_c,
            rate_p_bps,
            rate_e_bps,
            rate_s_bps: b * gamma_s.ln_1p() * LOG2_E,
            rate_c_bps: ergodic_secondary_rate(beta_c, b),
            secrecy_bps: (rate_p_bps - rate_e_bps).max(0.0),
        }
    }

    pub fn secrecy_bits_per_hz(&self, cfg: &ScenarioConfig) -> f64 {
        self.secrecy_bps / cfg.bandwidth_hz
    }
}
