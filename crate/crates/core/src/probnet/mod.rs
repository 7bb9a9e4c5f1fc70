//! Global autoregressive LSTM forecaster with a Student's t output layer.
//!
//! One parameter set is shared by every series in the panel. Training is
//! teacher-forced maximum likelihood over sliding windows; forecasting draws
//! sample paths by feeding each draw back as the next input, and quantile
//! fans are read off the empirical distribution of those paths.

pub mod adam;
pub mod artifact;
pub mod forecast;
pub mod lstm;
pub mod network;
pub mod student_t;
pub mod train;

pub use adam::AdamState;
pub use artifact::{load_model, save_model, ModelArtifact, TrainedModel};

pub use forecast::{
    extract_quantiles, forecast_mean_path, forecast_samples, ForecastDistribution, History,
    DEFAULT_TAU_GRID,
};
pub use lstm::{lstm_cell_forward, HiddenState, LayerState, LayerWeights};
pub use network::{backward, distribution_head, forward_loss, HeadType, NetConfig, NetworkParams, Tape};
pub use student_t::{student_t_nll, DistParams};
pub use train::{fit, train_network, TrainConfig, WindowModel};
