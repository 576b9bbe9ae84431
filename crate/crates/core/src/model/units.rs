//! Unit conventions. Power in dB is always `10 log10`; everything inside the
//! crate is linear power and natural-log rates.

use std::f64::consts::LN_2;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn nats_to_bits(nats: f64) -> f64 {
    nats / LN_2
}

/// Unit used when rates leave the crate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RateUnit {
    #[default]
    Bits,
    Nats,
}

impl RateUnit {
    pub fn convert(self, nats: f64) -> f64 {
        match self {
            RateUnit::Bits => nats_to_bits(nats),
            RateUnit::Nats => nats,
        }
    }

    pub fn suffix(self) -> &'static str {
        match self {
            RateUnit::Bits => "bits",
            RateUnit::Nats => "nats",
        }
    }
}
