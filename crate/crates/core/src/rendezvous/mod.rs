//! In-process simulation of rendezvous coupling between two partitioned applications.
//!
//! Ranks are indexed contexts that only talk through [`exchange`]. A structured grid over
//! the coupled domain, the [`RdvPartition`], tells every rank where to send an entity from
//! its coordinates alone, so no rank needs a global communication graph.

mod coupled;
mod partition;
mod routing;

use std::fmt::Write as _;

pub use coupled::{coupled_transfer, CoupledMethod, CoupledResult};
pub use partition::{
    build_rdv_partition, classification_partition, rcb_partition, AppPartition, PartitionKind, RdvPartition,
};
pub use routing::{exchange, plan_forward, plan_reverse, Mailboxes, Message, Payload, Route, RoutingPlan, Traffic, ID_BYTES};

use crate::conservative::ConservativeError;
use crate::mesh::{MeshError, Point2};
use crate::pointwise::FitError;

#[derive(Debug, thiserror::Error)]
pub enum RdvError {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("recursive bisection needs a power-of-two rank count, got {0}")]
    NotPowerOfTwo(usize),
    #[error("model face {0} has no rank assigned")]
    UnmappedFace(u32),
    #[error("point ({}, {}) lies outside the rendezvous box", .0.x, .0.y)]
    OutsideRendezvous(Point2),
    #[error("expected payloads for {expected} ranks, found {found}")]
    RankCountMismatch { expected: usize, found: usize },
    #[error("rank {rank}: payload has {found} values, plan expects {expected}")]
    PayloadMismatch { rank: usize, expected: usize, found: usize },
    #[error("plan leaves receive slots unfilled")]
    IncompletePlan,
    #[error("unsupported in coupled mode: {0}")]
    Unsupported(String),
    #[error("target {target}: {source}")]
    Fit { target: usize, source: FitError },
    #[error(transparent)]
    Conservative(#[from] ConservativeError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    AppA,
    AppB,
    Rdv,
}

impl Role {
    pub fn name(&self) -> &'static str {
        match self {
            Role::AppA => "app_a",
            Role::AppB => "app_b",
            Role::Rdv => "rdv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StatsRow {
    pub round: usize,
    pub rank: usize,
    pub role: Role,
    pub traffic: Traffic,
}

pub const STATS_HEADER: &str = "round,rank,role,msgs_sent,msgs_recv,bytes_sent,bytes_recv";

/// Message statistics of a coupled transfer: one row per round, role and rank.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CouplingStats {
    pub rows: Vec<StatsRow>,
}

impl CouplingStats {
    pub fn n_rounds(&self) -> usize {
        self.rows.iter().map(|r| r.round + 1).max().unwrap_or(0)
    }

    pub fn total(&self, role: Role, f: impl Fn(&Traffic) -> usize) -> usize {
        self.rows.iter().filter(|r| r.role == role).map(|r| f(&r.traffic)).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(STATS_HEADER);
        s.push('\n');
        for r in &self.rows {
            let t = r.traffic;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.round,
                r.rank,
                r.role.name(),
                t.msgs_sent,
                t.msgs_recv,
                t.bytes_sent,
                t.bytes_recv
            );
        }
        s
    }
}
