//! Dual-socket server topology, DPU rank allocation policies, and the
//! host<->PIM transfer throughput model.
//!
//! Throughput composes per-rank, per-channel, per-socket, and host-level
//! caps. Writes ride fast asynchronous stores; reads go through slow
//! synchronous loads, so every read-side cap sits below its write-side
//! counterpart. A channel feeding both of its DIMMs loses efficiency to
//! rank interleaving, which is what punishes allocations that pile ranks
//! onto few channels. Traffic that crosses the socket interconnect (buffer
//! on one NUMA node, ranks on the other) is scaled by a penalty factor.
//!
//! The default calibration reproduces the measured policy ratios; the
//! absolute plateau values are configuration, not ground truth.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Physical shape of the PIM server.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerTopology {
    pub sockets: usize,
    pub pim_channels_per_socket: usize,
    pub dimms_per_channel: usize,
    pub ranks_per_dimm: usize,
    pub dpus_per_rank: usize,
    /// Faulty DPUs excluded from the usable total.
    pub disabled_dpus: usize,
}

impl Default for ServerTopology {
    fn default() -> Self {
        ServerTopology {
            sockets: 2,
            pim_channels_per_socket: 5,
            dimms_per_channel: 2,
            ranks_per_dimm: 2,
            dpus_per_rank: 64,
            disabled_dpus: 9,
        }
    }
}

impl ServerTopology {
    pub fn ranks_per_channel(&self) -> usize {
        self.dimms_per_channel * self.ranks_per_dimm
    }

    pub fn ranks_per_socket(&self) -> usize {
        self.pim_channels_per_socket * self.ranks_per_channel()
    }

    pub fn total_ranks(&self) -> usize {
        self.sockets * self.ranks_per_socket()
    }

    /// Usable DPU count after disabling faulty units.
    pub fn total_dpus(&self) -> usize {
        self.total_ranks() * self.dpus_per_rank - self.disabled_dpus
    }
}

/// Position of one rank in the topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RankCoord {
    pub socket: usize,
    pub channel: usize,
    pub dimm: usize,
    pub rank: usize,
}

/// The outcome of an allocation: a duplicate-free set of rank coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankSet {
    ranks: Vec<RankCoord>,
}

impl RankSet {
    pub fn new(ranks: Vec<RankCoord>, topo: &ServerTopology) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for r in &ranks {
            if r.socket >= topo.sockets
                || r.channel >= topo.pim_channels_per_socket
                || r.dimm >= topo.dimms_per_channel
                || r.rank >= topo.ranks_per_dimm
            {
                return Err(Error::Config(format!(
                    "rank coordinate out of range: {r:?}"
                )));
            }
            if !seen.insert(*r) {
                return Err(Error::Config(format!("duplicate rank coordinate: {r:?}")));
            }
        }
        Ok(RankSet { ranks })
    }

    pub fn ranks(&self) -> &[RankCoord] {
        &self.ranks
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn dpu_capacity(&self, topo: &ServerTopology) -> usize {
        self.ranks.len() * topo.dpus_per_rank
    }
}

/// How `allocate_ranks` picks rank coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PolicyKind {
    /// Walk the fixed device list: socket-, channel-, DIMM-major. Early
    /// allocations pile onto one or two channels of socket 0.
    #[default]
    BaselineSequential,
    /// Spread ranks evenly over sockets and channels, DIMMs first within a
    /// channel.
    NumaChannelBalanced,
}

/// Allocation request: policy plus optional socket and channel constraints.
/// The baseline policy ignores both constraints.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AllocationPolicy {
    pub kind: PolicyKind,
    pub node_constraint: Option<usize>,
    /// Per-channel rank counts for the balanced policy, when the caller
    /// wants explicit control instead of the equal split.
    pub channel_distribution: Option<Vec<usize>>,
}

impl AllocationPolicy {
    pub fn baseline() -> Self {
        AllocationPolicy {
            kind: PolicyKind::BaselineSequential,
            ..Default::default()
        }
    }

    pub fn balanced() -> Self {
        AllocationPolicy {
            kind: PolicyKind::NumaChannelBalanced,
            ..Default::default()
        }
    }
}

/// Splits `n` ranks evenly over a socket's PIM channels: counts sum to `n`
/// and differ by at most one, larger counts first.
pub fn equal_channel_distribution(n: usize, topo: &ServerTopology) -> Result<Vec<usize>> {
    if n > topo.ranks_per_socket() {
        return Err(Error::RankCountOutOfRange(n, 0, topo.ranks_per_socket()));
    }
    let channels = topo.pim_channels_per_socket;
    let base = n / channels;
    let extra = n % channels;
    Ok((0..channels)
        .map(|c| base + usize::from(c < extra))
        .collect())
}

/// Rank order within one channel: DIMMs first, then second ranks, so small
/// allocations land on separate DIMMs.
fn channel_rank_order(topo: &ServerTopology) -> Vec<(usize, usize)> {
    let mut order = Vec::new();
    for rank in 0..topo.ranks_per_dimm {
        for dimm in 0..topo.dimms_per_channel {
            order.push((dimm, rank));
        }
    }
    order
}

/// Allocates `n` ranks under the given policy.
pub fn allocate_ranks(
    n: usize,
    policy: &AllocationPolicy,
    topo: &ServerTopology,
) -> Result<RankSet> {
    let available = match (policy.kind, policy.node_constraint) {
        (PolicyKind::NumaChannelBalanced, Some(_)) => topo.ranks_per_socket(),
        _ => topo.total_ranks(),
    };
    if n == 0 || n > available {
        return Err(Error::AllocationFailure {
            requested: n,
            available,
        });
    }

    let ranks = match policy.kind {
        PolicyKind::BaselineSequential => {
            // The udev device list is stable across restarts: iterate
            // sockets, channels, DIMMs, then ranks.
            let mut out = Vec::with_capacity(n);
            'fill: for socket in 0..topo.sockets {
                for channel in 0..topo.pim_channels_per_socket {
                    for dimm in 0..topo.dimms_per_channel {
                        for rank in 0..topo.ranks_per_dimm {
                            out.push(RankCoord {
                                socket,
                                channel,
                                dimm,
                                rank,
                            });
                            if out.len() == n {
                                break 'fill;
                            }
                        }
                    }
                }
            }
            out
        }
        PolicyKind::NumaChannelBalanced => {
            let sockets: Vec<usize> = match policy.node_constraint {
                Some(s) if s < topo.sockets => vec![s],
                Some(s) => {
                    return Err(Error::Config(format!("socket {s} out of range")));
                }
                None => (0..topo.sockets).collect(),
            };
            // Split across the chosen sockets, larger shares first.
            let mut shares = vec![n / sockets.len(); sockets.len()];
            for share in shares.iter_mut().take(n % sockets.len()) {
                *share += 1;
            }
            let order = channel_rank_order(topo);
            let mut out = Vec::with_capacity(n);
            for (&socket, &share) in sockets.iter().zip(&shares) {
                let counts = match &policy.channel_distribution {
                    Some(counts) => {
                        if counts.len() != topo.pim_channels_per_socket
                            || counts.iter().sum::<usize>() != share
                            || counts.iter().any(|&c| c > topo.ranks_per_channel())
                        {
                            return Err(Error::Config(format!(
                                "channel distribution {counts:?} does not cover {share} ranks"
                            )));
                        }
                        counts.clone()
                    }
                    None => equal_channel_distribution(share, topo)?,
                };
                for (channel, &count) in counts.iter().enumerate() {
                    for &(dimm, rank) in order.iter().take(count) {
                        out.push(RankCoord {
                            socket,
                            channel,
                            dimm,
                            rank,
                        });
                    }
                }
            }
            out
        }
    };
    RankSet::new(ranks, topo)
}

/// Transfer direction between host DRAM and PIM MRAM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    HostToPim,
    PimToHost,
}

/// Where the host-side staging buffer lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BufferPlacement {
    /// Single buffer pinned to one NUMA node; traffic to the other socket
    /// pays the interconnect penalty.
    Node(usize),
    /// One buffer per NUMA node, each feeding its local ranks.
    PerNode,
}

/// Fitted bandwidth caps. `channel_cap_gbps` is the DDR4-2400 bus limit per
/// PIM channel; the remaining values are calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransferCalibration {
    /// Per-channel cap for writes (DDR4-2400 bus).
    pub channel_cap_gbps: f64,
    /// Per-channel cap for synchronous reads.
    pub channel_read_cap_gbps: f64,
    pub rank_write_cap_gbps: f64,
    pub rank_read_cap_gbps: f64,
    /// Channel efficiency once both of its DIMMs are active.
    pub shared_channel_efficiency: f64,
    /// Host-wide plateau for writes (layout transposition bound).
    pub host_write_agg_cap_gbps: f64,
    /// Host-wide plateau for reads.
    pub host_read_agg_cap_gbps: f64,
    /// Per-socket DRAM channel ceiling (one DDR4-3200 channel each).
    pub dram_channel_cap_gbps: f64,
    /// Multiplier applied to traffic that crosses the socket interconnect.
    pub cross_numa_penalty: f64,
    /// Effective write throughput for cold bulk streams (large matrices)
    /// whose layout transposition cannot ride warm caches.
    pub stream_write_cap_gbps: f64,
    /// Transfers move in whole blocks of this size.
    pub transfer_block_bytes: u64,
}

impl Default for TransferCalibration {
    fn default() -> Self {
        TransferCalibration {
            channel_cap_gbps: 19.2,
            channel_read_cap_gbps: 4.5,
            rank_write_cap_gbps: 12.0,
            rank_read_cap_gbps: 3.5,
            shared_channel_efficiency: 0.67,
            host_write_agg_cap_gbps: 42.0,
            host_read_agg_cap_gbps: 6.35,
            dram_channel_cap_gbps: 25.6,
            cross_numa_penalty: 0.7,
            stream_write_cap_gbps: 32.0,
            transfer_block_bytes: 32 * 1024 * 1024,
        }
    }
}

impl TransferCalibration {
    pub fn validate(&self) -> Result<()> {
        let caps = [
            self.channel_cap_gbps,
            self.channel_read_cap_gbps,
            self.rank_write_cap_gbps,
            self.rank_read_cap_gbps,
            self.host_write_agg_cap_gbps,
            self.host_read_agg_cap_gbps,
            self.dram_channel_cap_gbps,
            self.stream_write_cap_gbps,
        ];
        if caps.iter().any(|&c| c <= 0.0) {
            return Err(Error::Config("all throughput caps must be positive".into()));
        }
        if self.host_write_agg_cap_gbps <= self.host_read_agg_cap_gbps
            || self.channel_cap_gbps <= self.channel_read_cap_gbps
            || self.rank_write_cap_gbps <= self.rank_read_cap_gbps
        {
            return Err(Error::Config(
                "write caps must exceed read caps (asynchronous write, synchronous read)".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.cross_numa_penalty)
            || !(0.0..=1.0).contains(&self.shared_channel_efficiency)
        {
            return Err(Error::Config(
                "penalty and efficiency factors must lie in [0, 1]".into(),
            ));
        }
        if self.transfer_block_bytes == 0 {
            return Err(Error::Config("transfer block size must be positive".into()));
        }
        Ok(())
    }

    fn rank_cap(&self, dir: Direction) -> f64 {
        match dir {
            Direction::HostToPim => self.rank_write_cap_gbps,
            Direction::PimToHost => self.rank_read_cap_gbps,
        }
    }

    fn channel_cap(&self, dir: Direction) -> f64 {
        match dir {
            Direction::HostToPim => self.channel_cap_gbps,
            Direction::PimToHost => self.channel_read_cap_gbps,
        }
    }

    fn host_cap(&self, dir: Direction) -> f64 {
        match dir {
            Direction::HostToPim => self.host_write_agg_cap_gbps,
            Direction::PimToHost => self.host_read_agg_cap_gbps,
        }
    }
}

/// Estimated aggregate throughput in GB/s for a parallel transfer touching
/// every rank in the set.
pub fn estimate_throughput(
    ranks: &RankSet,
    direction: Direction,
    placement: BufferPlacement,
    cal: &TransferCalibration,
    topo: &ServerTopology,
) -> Result<f64> {
    if ranks.is_empty() {
        return Err(Error::EmptyRankSet);
    }
    // (socket, channel) -> (rank count, distinct DIMMs)
    let mut channels: BTreeMap<(usize, usize), (usize, std::collections::BTreeSet<usize>)> =
        BTreeMap::new();
    for r in ranks.ranks() {
        let entry = channels.entry((r.socket, r.channel)).or_default();
        entry.0 += 1;
        entry.1.insert(r.dimm);
    }

    let per_socket_host = cal.host_cap(direction) / topo.sockets as f64;
    let mut total = 0.0;
    for socket in 0..topo.sockets {
        let mut raw = 0.0;
        for ((s, _), (count, dimms)) in channels.iter() {
            if *s != socket {
                continue;
            }
            let efficiency = if dimms.len() > 1 {
                cal.shared_channel_efficiency
            } else {
                1.0
            };
            let demand = *count as f64 * cal.rank_cap(direction);
            raw += demand.min(cal.channel_cap(direction) * efficiency);
        }
        let socket_tput = raw.min(per_socket_host).min(cal.dram_channel_cap_gbps);
        let factor = match placement {
            BufferPlacement::PerNode => 1.0,
            BufferPlacement::Node(node) if node == socket => 1.0,
            BufferPlacement::Node(_) => cal.cross_numa_penalty,
        };
        total += socket_tput * factor;
    }
    Ok(total.min(cal.host_cap(direction)))
}

/// Transfer time in seconds; data moves in whole blocks.
pub fn transfer_time(
    bytes: u64,
    ranks: &RankSet,
    direction: Direction,
    placement: BufferPlacement,
    cal: &TransferCalibration,
    topo: &ServerTopology,
) -> Result<f64> {
    if bytes == 0 {
        return Err(Error::EmptyTransfer);
    }
    let throughput = estimate_throughput(ranks, direction, placement, cal, topo)?;
    let block = cal.transfer_block_bytes;
    let padded = bytes.div_ceil(block) * block;
    Ok(padded as f64 / (throughput * 1e9))
}

/// Throughput of one policy at a rank count, with the buffer placement the
/// policy implies: the baseline allocator leaves a single buffer on node 0,
/// the balanced allocator pairs per-node buffers with its per-node rank
/// split.
pub fn policy_throughput(
    n: usize,
    kind: PolicyKind,
    direction: Direction,
    cal: &TransferCalibration,
    topo: &ServerTopology,
) -> Result<f64> {
    let (policy, placement) = match kind {
        PolicyKind::BaselineSequential => (AllocationPolicy::baseline(), BufferPlacement::Node(0)),
        PolicyKind::NumaChannelBalanced => (AllocationPolicy::balanced(), BufferPlacement::PerNode),
    };
    let ranks = allocate_ranks(n, &policy, topo)?;
    estimate_throughput(&ranks, direction, placement, cal, topo)
}
