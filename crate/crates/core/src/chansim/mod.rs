//! Channel simulation: configuration sampling, synthetic WSS tap channels and
//! comb-type pilot transmission.

mod channel;
mod config;
mod pilots;

pub use channel::{generate_channel, generate_channel_with, ChannelModel, ChannelRealization, DelayWindow};
pub use config::{
    sample_config, ChannelType, ConfigTable, SimConfig, SLOT_SYMBOLS, SPEED_OF_LIGHT,
};
pub use pilots::{noise_subcarrier, transmit_pilots, transmit_pilots_with, LinkBudget, PilotObservation};
