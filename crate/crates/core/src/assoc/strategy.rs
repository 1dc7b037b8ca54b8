use super::associate::{nn_associate_detailed, DEFAULT_INDIFFERENCE_MBPS};
use super::predictor::ThroughputPredictor;
use super::AssocError;
use crate::pipeline::PolicyRule;
use crate::underlay::{ssf_associate, AssociationMap, Deployment};

/// Anything that maps a deployment to an association.
pub trait AssociationStrategy {
    fn name(&self) -> &str;
    fn associate(&self, deployment: &Deployment, order_seed: u64) -> Result<AssociationMap, AssocError>;
}

pub struct SsfStrategy;

impl AssociationStrategy for SsfStrategy {
    fn name(&self) -> &str {
        "ssf"
    }

    fn associate(&self, deployment: &Deployment, _order_seed: u64) -> Result<AssociationMap, AssocError> {
        Ok(ssf_associate(deployment)?)
    }
}

/// Greedy placement driven by a throughput predictor.
pub struct NnStrategy<'a, P: ?Sized> {
    pub predictor: &'a P,
    pub policies: &'a [PolicyRule],
    pub indifference_mbps: f64,
}

impl<'a, P: ThroughputPredictor + ?Sized> NnStrategy<'a, P> {
    pub fn new(predictor: &'a P, policies: &'a [PolicyRule]) -> Self {
        Self {
            predictor,
            policies,
            indifference_mbps: DEFAULT_INDIFFERENCE_MBPS,
        }
    }

    pub fn with_indifference(mut self, mbps: f64) -> Self {
        self.indifference_mbps = mbps;
        self
    }
}

impl<P: ThroughputPredictor + ?Sized> AssociationStrategy for NnStrategy<'_, P> {
    fn name(&self) -> &str {
        "nn"
    }

    fn associate(&self, deployment: &Deployment, order_seed: u64) -> Result<AssociationMap, AssocError> {
        Ok(nn_associate_detailed(
            deployment,
            self.predictor,
            self.policies,
            order_seed,
            self.indifference_mbps,
        )?
        .map)
    }
}
