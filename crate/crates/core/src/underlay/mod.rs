//! The simulated 802.11 underlay: scenario generation, link model, SSF baseline and
//! airtime-fair throughput.

mod association;
mod deployment;
mod export;
mod radio;
mod throughput;

use thiserror::Error;

pub use association::{ssf_associate, ssf_choice, AssociationMap};
pub use deployment::{
    generate_deployment, generate_deployment_with, AccessPoint, DensityClass, Deployment, Position, Station,
    MAX_PLACEMENT_RETRIES,
};
pub use export::{write_rows_csv, ThroughputRow};
pub use radio::{path_loss_db, LinkMeasurement, RadioConfig};
pub use throughput::{available_airtime, compute_throughput, compute_throughput_partial, water_fill, ThroughputReport};

#[derive(Debug, Error)]
pub enum UnderlayError {
    #[error("scenario side must be positive and finite, got {0}")]
    InvalidSide(f64),
    #[error("unknown density class `{0}`")]
    UnknownDensity(String),
    #[error("infeasible scenario: STA {sta_id} hears no AP after {retries} draws")]
    InfeasibleScenario { sta_id: u32, retries: usize },
    #[error("invalid deployment: {0}")]
    InvalidDeployment(String),
    #[error("STA {0} hears no AP above sensitivity")]
    NoCoverage(u32),
    #[error("unknown STA {0}")]
    UnknownSta(u32),
    #[error("unknown AP {0}")]
    UnknownAp(u32),
    #[error("STA {0} is not associated")]
    Unassigned(u32),
    #[error("AP {ap_id} holds {count} STAs, cap is {cap}")]
    CapExceeded { ap_id: u32, count: u32, cap: u32 },
    #[error("csv export failed: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
