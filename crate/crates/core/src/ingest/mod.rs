//! File formats: an EPANET INP subset and CSV sensor/measurement files.

mod inp;
mod sensors;

pub use inp::{parse_inp, write_inp, GraphOptions, InpNetwork, InpPipe, UnitSystem};
pub use sensors::{load_measurements, load_sensor_config, write_measurements, write_sensor_config, SensorKind};
