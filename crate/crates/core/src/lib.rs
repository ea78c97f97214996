//! Temperature uncertainty modelling and day-ahead scheduling of an electric
//! boiler with thermal storage feeding a district heating network.

pub mod special;
pub mod copula;
pub mod weather_data;
pub mod scenario_gen;
pub mod seed;
pub mod ebts_model;
pub mod config;
pub mod evaluation;
pub mod synthetic;
