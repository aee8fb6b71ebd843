//! Day-ahead electricity price forecasting for two coupled markets:
//! data handling, lag-feature construction, feedforward forecasters,
//! model-based feature/hyperparameter search, variance-based feature
//! importance and forecast-accuracy testing.

pub mod cli;
pub mod experiment;
pub mod fanova;
pub mod feature_space;
pub mod market_data;
pub mod neural_net;
pub mod stats;
pub mod tpe;

pub(crate) mod kv;
pub mod linalg;
