//! Augment UJIIndoorLoc-style Wi-Fi RSSI fingerprint datasets with
//! coregionalized GP regression and evaluate the effect with a k-NN
//! localizer. The `fpaug` binary wires these modules into reproducible
//! batch runs; `fpaug-core` carries the numerics.

pub mod augment;
pub mod checkpoint;
pub mod cli;
pub mod dataset;
pub mod evaluate;
pub mod provenance;
