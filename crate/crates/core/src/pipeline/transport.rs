//! In-process simulated transport between hosts, with length-prefixed JSON frames and
//! injectable failures.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::PipelineError;

/// 4-byte big-endian length followed by the JSON body.
pub fn encode_frame<T: Serialize>(message: &T) -> Result<Vec<u8>, PipelineError> {
    let body = serde_json::to_vec(message)?;
    let len = u32::try_from(body.len()).map_err(|_| PipelineError::Frame("message too large".into()))?;
    let mut frame = Vec::with_capacity(4 + body.len());
    frame.extend_from_slice(&len.to_be_bytes());
    frame.extend_from_slice(&body);
    Ok(frame)
}

pub fn decode_frame<T: DeserializeOwned>(frame: &[u8]) -> Result<T, PipelineError> {
    let Some((head, body)) = frame.split_first_chunk::<4>() else {
        return Err(PipelineError::Frame("frame shorter than its length prefix".into()));
    };
    let len = u32::from_be_bytes(*head) as usize;
    if body.len() != len {
        return Err(PipelineError::Frame(format!(
            "expected {len} body bytes, got {}",
            body.len()
        )));
    }
    Ok(serde_json::from_slice(body)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureMode {
    /// Nothing arrives.
    Unreachable,
    /// Only the first `n` bytes arrive.
    Truncate(usize),
}

/// Delivers frames between named hosts. Hosts without an injected failure always succeed.
#[derive(Debug, Clone, Default)]
pub struct SimTransport {
    failures: BTreeMap<String, FailureMode>,
    delivered: usize,
}

impl SimTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn inject(&mut self, host: impl Into<String>, mode: FailureMode) {
        self.failures.insert(host.into(), mode);
    }

    pub fn heal(&mut self, host: &str) {
        self.failures.remove(host);
    }

    pub fn delivered(&self) -> usize {
        self.delivered
    }

    /// Bytes that reach `host` when `frame` is sent to it.
    pub fn send(&mut self, host: &str, frame: &[u8]) -> Result<Vec<u8>, PipelineError> {
        match self.failures.get(host) {
            Some(FailureMode::Unreachable) => Err(PipelineError::Unreachable(host.to_string())),
            Some(FailureMode::Truncate(n)) => Ok(frame[..(*n).min(frame.len())].to_vec()),
            None => {
                self.delivered += 1;
                Ok(frame.to_vec())
            }
        }
    }
}
