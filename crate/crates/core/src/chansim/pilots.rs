use ndarray::{Array3, Array4};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::channel::ChannelRealization;
use super::config::SimConfig;
use crate::linalg::{hermitian_eigen, CMat, CVec};
use crate::seed::{self, stream};
use crate::{Error, Result};

/// Pilot power and noise covariance of one transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    pub pilot_power: f64,
    pub noise_covariance: CMat,
}

impl LinkBudget {
    pub fn from_config(cfg: &SimConfig) -> Self {
        LinkBudget {
            pilot_power: cfg.pilot_power(),
            noise_covariance: cfg.noise_covariance(),
        }
    }

    /// Same pilot power, no noise.
    pub fn noiseless(cfg: &SimConfig) -> Self {
        LinkBudget {
            pilot_power: cfg.pilot_power(),
            noise_covariance: CMat::zeros(cfg.n_rx, cfg.n_rx),
        }
    }
}

/// Received pilot and zero-power subcarriers of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotObservation {
    /// `[j, m, l, i]`: Tx antenna, subcarrier group, pilot symbol, Rx antenna.
    pub h_tilde: Array4<Complex64>,
    /// `[k, l, i]`: noise-only sample index, pilot symbol, Rx antenna.
    pub z_tilde: Array3<Complex64>,
    pub config: SimConfig,
    pub slot_index: usize,
}

impl PilotObservation {
    pub fn n_tx(&self) -> usize {
        self.h_tilde.shape()[0]
    }
    pub fn n_groups(&self) -> usize {
        self.h_tilde.shape()[1]
    }
    pub fn n_symbols(&self) -> usize {
        self.h_tilde.shape()[2]
    }
    pub fn n_rx(&self) -> usize {
        self.h_tilde.shape()[3]
    }
}

/// 1-based subcarrier carrying noise-only sample `k` (1-based): the `N_Z`
/// zero-power subcarriers follow the `N_T` pilot subcarriers in every group.
pub fn noise_subcarrier(k: usize, group_size: usize, n_tx: usize, n_zero: usize) -> usize {
    group_size * ((k - 1) / n_zero) + n_tx + (k - 1) % n_zero + 1
}

pub fn transmit_pilots(
    cfg: &SimConfig,
    chan: &ChannelRealization,
    slot: usize,
    rng_seed: u64,
) -> Result<PilotObservation> {
    transmit_pilots_with(cfg, chan, slot, &LinkBudget::from_config(cfg), rng_seed)
}

/// Pilot transmission with an explicit link budget.
///
/// `h_tilde[j, m, l] = sqrt(P) h_j[M m + j, l] + z`, and `z_tilde` collects the
/// noise on the zero-power subcarriers, with `z ~ CN(0, C_n)` i.i.d.
pub fn transmit_pilots_with(
    cfg: &SimConfig,
    chan: &ChannelRealization,
    slot: usize,
    budget: &LinkBudget,
    rng_seed: u64,
) -> Result<PilotObservation> {
    let n_rx = cfg.n_rx;
    if budget.noise_covariance.shape() != (n_rx, n_rx) {
        return Err(Error::Shape("noise covariance must be N_R x N_R".into()));
    }
    if budget.pilot_power < 0.0 {
        return Err(Error::InvalidArgument("negative pilot power".into()));
    }
    let channel = chan.pilot_channel(cfg, slot)?;
    let amplitude = budget.pilot_power.sqrt();
    let mut h_tilde = channel.mapv(|h| h * amplitude);

    let n_sym = cfg.n_pilot_symbols();
    let mut z_tilde = Array3::zeros((cfg.n_groups * cfg.n_zero(), n_sym, n_rx));
    let colouring = covariance_sqrt(&budget.noise_covariance);
    if let Some(colouring) = colouring {
        let mut rng = seed::rng(seed::derive(rng_seed, &[stream::NOISE, slot as u64]));
        let mut white = CVec::zeros(n_rx);
        let mut draw = |rng: &mut rand_chacha::ChaCha8Rng| {
            for w in white.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *w = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
            }
            &colouring * &white
        };
        for mut lane in h_tilde.lanes_mut(ndarray::Axis(3)) {
            let z = draw(&mut rng);
            for (h, z) in lane.iter_mut().zip(z.iter()) {
                *h += z;
            }
        }
        for mut lane in z_tilde.lanes_mut(ndarray::Axis(2)) {
            let z = draw(&mut rng);
            for (dst, z) in lane.iter_mut().zip(z.iter()) {
                *dst = *z;
            }
        }
    }

    Ok(PilotObservation {
        h_tilde,
        z_tilde,
        config: cfg.clone(),
        slot_index: slot,
    })
}

/// Hermitian square root of a PSD covariance, `None` for the zero matrix.
fn covariance_sqrt(c: &CMat) -> Option<CMat> {
    if c.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return None;
    }
    let (vals, vecs) = hermitian_eigen(c);
    let root = vals.map(|v| Complex64::new(v.max(0.0).sqrt(), 0.0));
    Some(&vecs * CMat::from_diagonal(&root) * vecs.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chansim::generate_channel;

    #[test]
    fn noise_subcarrier_mapping() {
        // M = 12, N_T = 4, N_Z = 8: group m holds noise on subcarriers 12m+5 ..= 12m+12.
        let mapped: Vec<usize> = (1..=16).map(|k| noise_subcarrier(k, 12, 4, 8)).collect();
        let expected: Vec<usize> = (5..=12).chain(17..=24).collect();
        assert_eq!(mapped, expected);
    }

    #[test]
    fn noiseless_unit_power_is_identity() {
        let cfg = SimConfig { n_groups: 25, ..SimConfig::reference() };
        let chan = generate_channel(&cfg, 2, 3).unwrap();
        let budget = LinkBudget { pilot_power: 1.0, noise_covariance: CMat::zeros(2, 2) };
        let obs = transmit_pilots_with(&cfg, &chan, 1, &budget, 1).unwrap();
        let h = chan.pilot_channel(&cfg, 1).unwrap();
        assert_eq!(obs.h_tilde, h);
        assert!(obs.z_tilde.iter().all(|z| z.norm() == 0.0));
        assert_eq!(obs.z_tilde.shape(), &[25 * 8, 4, 2]);
    }

    #[test]
    fn slot_out_of_range() {
        let cfg = SimConfig::reference();
        let chan = generate_channel(&cfg, 2, 3).unwrap();
        assert!(matches!(
            transmit_pilots(&cfg, &chan, 2, 0),
            Err(Error::SlotOutOfRange { slot: 2, n_slots: 2 })
        ));
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = SimConfig { n_groups: 25, ..SimConfig::reference() };
        let chan = generate_channel(&cfg, 1, 3).unwrap();
        let a = transmit_pilots(&cfg, &chan, 0, 42).unwrap();
        let b = transmit_pilots(&cfg, &chan, 0, 42).unwrap();
        let c = transmit_pilots(&cfg, &chan, 0, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
