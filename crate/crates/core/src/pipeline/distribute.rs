//! Distributor and Sink entities: ship the model artifact to edge sinks and apply
//! association decisions to the live network.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::policy::Decision;
use super::transport::{decode_frame, encode_frame, SimTransport};
use super::PipelineError;
use crate::nn::MlpModel;
use crate::underlay::{AssociationMap, Deployment};

/// Hex SHA-256 of the artifact bytes.
pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Message carrying a model artifact to a sink.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelUpdate {
    pub content_hash: String,
    /// The model file, verbatim.
    pub artifact: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveModel {
    pub hash: String,
    pub bytes: Vec<u8>,
    pub model: MlpModel,
}

/// An edge server's sink: holds the active model and applies decisions for its APs.
#[derive(Debug, Clone)]
pub struct EdgeSink {
    pub id: String,
    /// APs this edge serves; empty means all.
    pub ap_ids: Vec<u32>,
    active: Option<ActiveModel>,
    applied: usize,
}

impl EdgeSink {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            ap_ids: Vec::new(),
            active: None,
            applied: 0,
        }
    }

    pub fn active(&self) -> Option<&ActiveModel> {
        self.active.as_ref()
    }

    pub fn active_hash(&self) -> Option<&str> {
        self.active.as_ref().map(|m| m.hash.as_str())
    }

    /// Number of decisions that changed the association table.
    pub fn applied_changes(&self) -> usize {
        self.applied
    }

    pub fn serves(&self, ap_id: u32) -> bool {
        self.ap_ids.is_empty() || self.ap_ids.contains(&ap_id)
    }

    /// Installs the model carried by `frame`. The new model is decoded, hash-checked and parsed
    /// in full before it replaces the active one; any failure leaves the old model in place.
    pub fn receive(&mut self, frame: &[u8]) -> Result<String, PipelineError> {
        let update: ModelUpdate = decode_frame(frame)?;
        let bytes = update.artifact.into_bytes();
        let hash = content_hash(&bytes);
        if hash != update.content_hash {
            return Err(PipelineError::HashMismatch {
                expected: update.content_hash,
                got: hash,
            });
        }
        let model = MlpModel::from_json(&bytes)?;
        self.active = Some(ActiveModel {
            hash: hash.clone(),
            bytes,
            model,
        });
        Ok(hash)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "reason")]
pub enum DeliveryStatus {
    Delivered,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliveryReceipt {
    pub sink_id: String,
    pub content_hash: String,
    pub status: DeliveryStatus,
}

impl DeliveryReceipt {
    pub fn ok(&self) -> bool {
        self.status == DeliveryStatus::Delivered
    }
}

/// Broadcasts `artifact` to every sink over `transport`; one receipt per sink, in order.
pub fn distribute(
    artifact: &[u8],
    sinks: &mut [EdgeSink],
    transport: &mut SimTransport,
) -> Result<Vec<DeliveryReceipt>, PipelineError> {
    if sinks.is_empty() {
        return Err(PipelineError::NoSinks);
    }
    let hash = content_hash(artifact);
    let artifact = std::str::from_utf8(artifact)
        .map_err(|_| PipelineError::Frame("model artifact is not UTF-8 JSON".into()))?
        .to_string();
    let frame = encode_frame(&ModelUpdate {
        content_hash: hash.clone(),
        artifact,
    })?;
    let receipts = sinks
        .iter_mut()
        .map(|sink| {
            let status = match transport.send(&sink.id, &frame).and_then(|bytes| sink.receive(&bytes)) {
                Ok(_) => DeliveryStatus::Delivered,
                Err(e) => {
                    log::warn!("delivery to {} failed: {e}", sink.id);
                    DeliveryStatus::Failed(e.to_string())
                }
            };
            DeliveryReceipt {
                sink_id: sink.id.clone(),
                content_hash: hash.clone(),
                status,
            }
        })
        .collect();
    Ok(receipts)
}

/// The live production network a sink acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct LiveNetwork {
    pub deployment: Deployment,
    pub association: AssociationMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Acknowledgment {
    pub sta_id: u32,
    pub ap_id: u32,
    /// False when the decision was already in effect.
    pub changed: bool,
}

/// Applies an association decision to the network. Re-applying the same decision is a no-op
/// that is still acknowledged.
pub fn sink_apply(
    sink: &mut EdgeSink,
    network: &mut LiveNetwork,
    decision: &Decision,
) -> Result<Acknowledgment, PipelineError> {
    if network.deployment.sta(decision.sta_id).is_none() {
        return Err(PipelineError::UnknownSta(decision.sta_id));
    }
    if network.deployment.ap(decision.ap_id).is_none() || !sink.serves(decision.ap_id) {
        return Err(PipelineError::UnknownAp(decision.ap_id));
    }
    let previous = network.association.assign(decision.sta_id, decision.ap_id);
    let changed = previous != Some(decision.ap_id);
    if changed {
        sink.applied += 1;
    }
    Ok(Acknowledgment {
        sta_id: decision.sta_id,
        ap_id: decision.ap_id,
        changed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::NormSchema;
    use crate::pipeline::transport::FailureMode;
    use crate::underlay::{compute_throughput, generate_deployment, ssf_associate, DensityClass};

    fn artifact(bias: f64) -> Vec<u8> {
        let names: Vec<String> = (0..5).map(|i| format!("f{i}")).collect();
        let mut m = MlpModel::zeros(&[5, 1], NormSchema::unit(&names)).unwrap();
        m.biases[0][0] = bias;
        m.to_json().unwrap()
    }

    fn sinks(n: usize) -> Vec<EdgeSink> {
        (0..n).map(|i| EdgeSink::new(format!("edge-{i}"))).collect()
    }

    #[test]
    fn broadcast_identical_hashes() {
        let mut s = sinks(3);
        let bytes = artifact(0.5);
        let receipts = distribute(&bytes, &mut s, &mut SimTransport::new()).unwrap();
        assert_eq!(receipts.len(), 3);
        assert!(receipts
            .iter()
            .all(|r| r.ok() && r.content_hash == content_hash(&bytes)));
        assert!(s.iter().all(|k| k.active().unwrap().bytes == bytes));
    }

    #[test]
    fn failed_sink_keeps_old_model() {
        let mut s = sinks(3);
        let old = artifact(0.1);
        distribute(&old, &mut s, &mut SimTransport::new()).unwrap();
        let mut transport = SimTransport::new();
        transport.inject("edge-1", FailureMode::Truncate(40));
        let new = artifact(0.9);
        let receipts = distribute(&new, &mut s, &mut transport).unwrap();
        assert_eq!(receipts.iter().filter(|r| r.ok()).count(), 2);
        assert!(!receipts[1].ok());
        assert_eq!(s[1].active_hash(), Some(content_hash(&old).as_str()));
        assert_eq!(s[1].active().unwrap().model.forward(&[0.0; 5]).unwrap(), 0.1);
        assert_eq!(s[0].active_hash(), Some(content_hash(&new).as_str()));
    }

    #[test]
    fn tampered_update_rejected() {
        let mut sink = EdgeSink::new("edge-0");
        let frame = encode_frame(&ModelUpdate {
            content_hash: "00".into(),
            artifact: String::from_utf8(artifact(0.2)).unwrap(),
        })
        .unwrap();
        assert!(matches!(sink.receive(&frame), Err(PipelineError::HashMismatch { .. })));
        assert!(sink.active().is_none());
    }

    #[test]
    fn needs_a_sink() {
        assert!(matches!(
            distribute(&artifact(0.0), &mut [], &mut SimTransport::new()),
            Err(PipelineError::NoSinks)
        ));
    }

    #[test]
    fn apply_is_idempotent_and_visible_to_the_underlay() {
        let deployment = generate_deployment(DensityClass::Medium, 100.0, 4).unwrap();
        let association = ssf_associate(&deployment).unwrap();
        let mut net = LiveNetwork {
            deployment,
            association,
        };
        let mut sink = EdgeSink::new("edge-0");
        let sta = net.deployment.stas[3].id;
        let target = net
            .deployment
            .aps
            .iter()
            .map(|a| a.id)
            .find(|&a| Some(a) != net.association.ap_of(sta))
            .unwrap();
        let decision = Decision {
            sta_id: sta,
            ap_id: target,
            predicted_mbps: 1.0,
        };
        let first = sink_apply(&mut sink, &mut net, &decision).unwrap();
        let second = sink_apply(&mut sink, &mut net, &decision).unwrap();
        assert!(first.changed && !second.changed);
        assert_eq!(sink.applied_changes(), 1);

        let mut expected = ssf_associate(&net.deployment).unwrap();
        expected.assign(sta, target);
        assert_eq!(
            compute_throughput(&net.deployment, &net.association).unwrap(),
            compute_throughput(&net.deployment, &expected).unwrap()
        );

        let unknown = Decision {
            sta_id: 9999,
            ..decision
        };
        assert!(matches!(
            sink_apply(&mut sink, &mut net, &unknown),
            Err(PipelineError::UnknownSta(9999))
        ));
    }
}
