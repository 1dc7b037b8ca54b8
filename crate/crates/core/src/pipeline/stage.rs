//! Stage kinds, host roles, the typed stage contract and the wiring graph.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::PipelineError;

/// The seven logical entities, in their legal pipeline order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StageKind {
    Source,
    Collector,
    PreProcessor,
    Model,
    Policy,
    Distributor,
    Sink,
}

impl StageKind {
    pub const ALL: [StageKind; 7] = [
        StageKind::Source,
        StageKind::Collector,
        StageKind::PreProcessor,
        StageKind::Model,
        StageKind::Policy,
        StageKind::Distributor,
        StageKind::Sink,
    ];

    pub fn rank(self) -> usize {
        self as usize
    }
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Cloud,
    Edge,
    Sandbox,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Cloud => "cloud",
            Role::Edge => "edge",
            Role::Sandbox => "sandbox",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HostRole {
    pub role: Role,
    pub host_id: String,
}

impl HostRole {
    pub fn new(role: Role, host_id: impl Into<String>) -> Self {
        Self {
            role,
            host_id: host_id.into(),
        }
    }
}

/// Exactly one cloud host and at least one edge host.
pub fn check_hosts(hosts: &[HostRole]) -> Result<(), PipelineError> {
    let clouds = hosts.iter().filter(|h| h.role == Role::Cloud).count();
    if clouds != 1 {
        return Err(PipelineError::Hosts(format!(
            "expected exactly one cloud host, found {clouds}"
        )));
    }
    if !hosts.iter().any(|h| h.role == Role::Edge) {
        return Err(PipelineError::Hosts("at least one edge host is required".into()));
    }
    let mut ids: Vec<&str> = hosts.iter().map(|h| h.host_id.as_str()).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(PipelineError::Hosts("duplicate host id".into()));
    }
    Ok(())
}

/// A stage kind placed on every host of one role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSpec {
    pub kind: StageKind,
    pub role: Role,
}

/// Checks that the listed stages follow the legal order and that every kind is present.
pub fn check_order(stages: &[StageSpec]) -> Result<(), PipelineError> {
    for pair in stages.windows(2) {
        if pair[1].kind < pair[0].kind {
            return Err(PipelineError::IllegalWiring(format!(
                "{} may not follow {}",
                pair[1].kind, pair[0].kind
            )));
        }
    }
    for kind in StageKind::ALL {
        if !stages.iter().any(|s| s.kind == kind) {
            return Err(PipelineError::IllegalWiring(format!("missing {kind} stage")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageNode {
    pub kind: StageKind,
    pub host: HostRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    /// Output batch of one stage is the input batch of the next.
    Data,
    /// Policy constraining a model on the same host.
    Constraint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Link {
    pub from: usize,
    pub to: usize,
    pub kind: LinkKind,
}

/// Stage instances on concrete hosts and the links between them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WiringGraph {
    pub nodes: Vec<StageNode>,
    pub links: Vec<Link>,
}

impl WiringGraph {
    /// Expands `stages` over `hosts` and links them.
    ///
    /// On one host, each stage feeds the next stage kind present on that host. Across hosts,
    /// data only flows to or from the cloud, between a stage and the kind that directly
    /// follows it in the stage list. Each Policy additionally constrains the Model on its host.
    pub fn build(stages: &[StageSpec], hosts: &[HostRole]) -> Result<Self, PipelineError> {
        check_order(stages)?;
        check_hosts(hosts)?;
        let mut nodes = Vec::new();
        for spec in stages {
            let placed: Vec<&HostRole> = hosts.iter().filter(|h| h.role == spec.role).collect();
            if placed.is_empty() {
                return Err(PipelineError::Hosts(format!(
                    "no {} host for the {} stage",
                    spec.role, spec.kind
                )));
            }
            nodes.extend(placed.into_iter().map(|h| StageNode {
                kind: spec.kind,
                host: h.clone(),
            }));
        }

        let mut kinds: Vec<StageKind> = stages.iter().map(|s| s.kind).collect();
        kinds.dedup();
        let next_kind = |k: StageKind| kinds.iter().copied().find(|&n| n > k);

        let mut links = Vec::new();
        for (i, a) in nodes.iter().enumerate() {
            let local_next = nodes
                .iter()
                .filter(|b| b.host == a.host && b.kind > a.kind)
                .map(|b| b.kind)
                .min();
            for (j, b) in nodes.iter().enumerate() {
                let same_host = a.host == b.host;
                let data = if same_host {
                    Some(b.kind) == local_next
                } else {
                    (a.host.role == Role::Cloud || b.host.role == Role::Cloud) && Some(b.kind) == next_kind(a.kind)
                };
                if data {
                    links.push(Link {
                        from: i,
                        to: j,
                        kind: LinkKind::Data,
                    });
                }
                if same_host && a.kind == StageKind::Policy && b.kind == StageKind::Model {
                    links.push(Link {
                        from: i,
                        to: j,
                        kind: LinkKind::Constraint,
                    });
                }
            }
        }
        Ok(Self { nodes, links })
    }

    pub fn on_host<'a>(&'a self, host_id: &'a str) -> impl Iterator<Item = &'a StageNode> + 'a {
        self.nodes.iter().filter(move |n| n.host.host_id == host_id)
    }

    pub fn kinds_on(&self, host_id: &str) -> Vec<StageKind> {
        self.on_host(host_id).map(|n| n.kind).collect()
    }

    /// Every data link goes forward in the legal order.
    pub fn is_legal(&self) -> bool {
        self.links.iter().all(|l| match l.kind {
            LinkKind::Data => self.nodes[l.from].kind < self.nodes[l.to].kind,
            LinkKind::Constraint => {
                self.nodes[l.from].kind == StageKind::Policy && self.nodes[l.to].kind == StageKind::Model
            }
        })
    }
}

/// A pipeline stage: one typed input batch in, one typed output batch out.
pub trait Stage {
    type Input;
    type Output;
    const KIND: StageKind;

    fn process(&mut self, input: Self::Input) -> Result<Self::Output, PipelineError>;
}

/// Two stages run back to back. Only constructible when `B` legally follows `A`.
pub struct Chain<A, B> {
    first: A,
    second: B,
}

impl<A, B> Chain<A, B>
where
    A: Stage,
    B: Stage<Input = A::Output>,
{
    pub fn new(first: A, second: B) -> Result<Self, PipelineError> {
        if B::KIND <= A::KIND {
            return Err(PipelineError::IllegalWiring(format!(
                "{} may not follow {}",
                B::KIND,
                A::KIND
            )));
        }
        Ok(Self { first, second })
    }

    pub fn run(&mut self, input: A::Input) -> Result<B::Output, PipelineError> {
        let mid = self.first.process(input)?;
        self.second.process(mid)
    }

    pub fn into_parts(self) -> (A, B) {
        (self.first, self.second)
    }
}
