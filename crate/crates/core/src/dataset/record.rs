use num_complex::{Complex32, Complex64};
use serde::{Deserialize, Serialize};

use crate::chansim::ChannelType;
use crate::linalg::CMat;
use crate::{Error, Result};

/// Slots per sequence.
pub const SEQUENCE_LEN: usize = 5;

/// Row-major single-precision complex matrix, the storage form of matrix features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex32>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix { rows, cols, data: vec![Complex32::new(0.0, 0.0); rows * cols] }
    }

    pub fn from_cmat(m: &CMat) -> Self {
        let (rows, cols) = m.shape();
        let data = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| (r, c)))
            .map(|(r, c)| Complex32::new(m[(r, c)].re as f32, m[(r, c)].im as f32))
            .collect();
        ComplexMatrix { rows, cols, data }
    }

    pub fn to_cmat(&self) -> CMat {
        CMat::from_fn(self.rows, self.cols, |r, c| {
            let z = self.get(r, c);
            Complex64::new(z.re as f64, z.im as f64)
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, r: usize, c: usize) -> Complex32 {
        self.data[r * self.cols + c]
    }

    pub fn data(&self) -> &[Complex32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex32] {
        &mut self.data
    }
}

/// The per-slot feature bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub channel_type: ChannelType,
    /// `K`, subcarriers per OFDM symbol.
    pub n_subcarriers: u32,
    /// `N_R x N_R`.
    pub noise_covariance: ComplexMatrix,
    /// `B x B`, averaged over receive antennas.
    pub freq_correlation: ComplexMatrix,
    /// `|S| x |S|`, averaged over receive antennas.
    pub time_covariance: ComplexMatrix,
    /// `|S| x |S|`, averaged over receive antennas.
    pub time_correlation: ComplexMatrix,
    /// Delay-profile center, seconds.
    pub delay_center: f64,
    /// Delay-profile length, seconds.
    pub delay_length: f64,
    /// Doppler spectrum width, Hz.
    pub doppler_width: f64,
    /// `N_T x rank`.
    pub precoder: ComplexMatrix,
    pub rank: u8,
    /// Spectral efficiency of the reported rank and precoder, nats.
    pub spectral_efficiency: f64,
    pub slot_index: u16,
    pub config_id: u64,
}

impl FeatureRecord {
    pub fn n_rx(&self) -> usize {
        self.noise_covariance.rows()
    }

    pub fn n_tx(&self) -> usize {
        self.precoder.rows()
    }

    pub fn n_groups(&self) -> usize {
        self.freq_correlation.rows()
    }

    pub fn n_pilot_symbols(&self) -> usize {
        self.time_covariance.rows()
    }

    /// Checks that every matrix dimension agrees with the others.
    pub fn validate(&self) -> Result<()> {
        let square = |m: &ComplexMatrix, name: &str| {
            if m.rows() == m.cols() && m.rows() > 0 {
                Ok(())
            } else {
                Err(Error::Malformed(format!("{name} is {}x{}", m.rows(), m.cols())))
            }
        };
        square(&self.noise_covariance, "noise covariance")?;
        square(&self.freq_correlation, "frequency correlation")?;
        square(&self.time_covariance, "time covariance")?;
        square(&self.time_correlation, "time correlation")?;
        if self.time_correlation.rows() != self.time_covariance.rows() {
            return Err(Error::Malformed("time covariance and correlation differ in size".into()));
        }
        if self.rank == 0 || self.precoder.cols() != self.rank as usize || self.rank as usize > self.n_rx() {
            return Err(Error::Malformed(format!(
                "rank {} with a {}x{} precoder and {} receive antennas",
                self.rank,
                self.precoder.rows(),
                self.precoder.cols(),
                self.n_rx()
            )));
        }
        if !(self.n_subcarriers as usize).is_multiple_of(self.n_groups()) {
            return Err(Error::Malformed("K is not a multiple of B".into()));
        }
        Ok(())
    }
}

/// Five consecutive slots of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub run_id: u64,
    pub start_slot: u16,
    records: Vec<FeatureRecord>,
}

impl SequenceRecord {
    pub fn new(run_id: u64, start_slot: u16, records: Vec<FeatureRecord>) -> Result<Self> {
        if records.len() != SEQUENCE_LEN {
            return Err(Error::Malformed(format!("sequence of {} records", records.len())));
        }
        for (k, r) in records.iter().enumerate() {
            r.validate()?;
            if r.slot_index as usize != start_slot as usize + k {
                return Err(Error::Malformed(format!(
                    "record {k} has slot {} but the sequence starts at {start_slot}",
                    r.slot_index
                )));
            }
            if r.config_id != records[0].config_id {
                return Err(Error::Malformed("records from different configurations".into()));
            }
        }
        Ok(SequenceRecord { run_id, start_slot, records })
    }

    pub fn records(&self) -> &[FeatureRecord] {
        &self.records
    }

    pub fn config_id(&self) -> u64 {
        self.records[0].config_id
    }
}
