//! Inter-satellite link topologies, the message ledger and latency/overhead accounting.
//!
//! Every hop costs one latency unit. Message size is counted in scalar dimensions with
//! complex `F_u` counted once, so one intermediate set per subcarrier is `U^2 + 2U`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::intermediates::Intermediates;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyKind {
    Ring,
    Star,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    pub kind: TopologyKind,
    pub num_sats: usize,
    /// Star centre; 0 for rings.
    pub central: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Topology {
    /// Directed cycle `0 -> 1 -> ... -> S-1 -> 0`.
    pub fn ring(num_sats: usize) -> Self {
        Topology {
            kind: TopologyKind::Ring,
            num_sats,
            central: 0,
            edges: (0..num_sats).map(|s| (s, (s + 1) % num_sats)).collect(),
        }
    }

    /// Centre linked both ways to every other satellite.
    pub fn star(num_sats: usize, central: usize) -> Self {
        let edges = (0..num_sats)
            .filter(|&s| s != central)
            .flat_map(|s| [(s, central), (central, s)])
            .collect();
        Topology {
            kind: TopologyKind::Star,
            num_sats,
            central,
            edges,
        }
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains(&(from, to))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MessageRecord {
    pub iteration: usize,
    pub from: usize,
    pub to: usize,
    pub dims: u64,
    pub latency_units: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MessageLedger {
    pub topology: Topology,
    pub num_uts: usize,
    pub records: Vec<MessageRecord>,
}

/// Whose traffic [`overhead_total`] measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverheadRole {
    /// One hop of the ring.
    RingHop,
    /// One edge satellite, one direction.
    StarEdge,
    /// The star centre, one direction (outbound broadcast).
    StarCenter,
}

impl MessageLedger {
    pub fn new(topology: Topology, num_uts: usize) -> Self {
        MessageLedger {
            topology,
            num_uts,
            records: Vec::new(),
        }
    }

    /// Iterations that produced at least one message.
    pub fn iterations(&self) -> usize {
        self.records.iter().map(|r| r.iteration + 1).max().unwrap_or(0)
    }

    pub fn total_dims(&self) -> u64 {
        self.records.iter().map(|r| r.dims).sum()
    }

    /// Bytes on the wire with `F_u` sent as two scalars of `width` bytes. Not part of the
    /// dimension count above; reported separately.
    pub fn total_bytes(&self, width: u64) -> u64 {
        let u = self.num_uts as u64;
        let per_set = u * u + 3 * u;
        let per_dim = Intermediates::dims(self.num_uts);
        self.records.iter().map(|r| r.dims / per_dim * per_set * width).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,from,to,dims,latency_units\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.iteration, r.from, r.to, r.dims, r.latency_units
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Appends one message carrying `num_subcarriers` intermediate sets.
pub fn record_message(
    ledger: &mut MessageLedger,
    iteration: usize,
    from: usize,
    to: usize,
    num_subcarriers: usize,
) -> Result<()> {
    if !ledger.topology.has_edge(from, to) {
        return Err(Error::NoSuchEdge { from, to });
    }
    ledger.records.push(MessageRecord {
        iteration,
        from,
        to,
        dims: num_subcarriers as u64 * Intermediates::dims(ledger.num_uts),
        latency_units: 1,
    });
    Ok(())
}

/// Latency of the first `loops` iterations. Ring hops are sequential; star uplinks run in
/// parallel, then the broadcast does.
pub fn latency_total(ledger: &MessageLedger, loops: usize) -> u64 {
    (0..loops)
        .map(|it| {
            let recs = ledger.records.iter().filter(|r| r.iteration == it);
            match ledger.topology.kind {
                TopologyKind::Ring => recs.map(|r| r.latency_units).sum(),
                TopologyKind::Star => {
                    let c = ledger.topology.central;
                    let (mut up, mut down) = (0, 0);
                    for r in recs {
                        if r.to == c {
                            up = up.max(r.latency_units);
                        } else {
                            down = down.max(r.latency_units);
                        }
                    }
                    up + down
                }
            }
        })
        .sum()
}

/// Measured dimensions for `role` in each iteration.
pub fn overhead_per_iteration(ledger: &MessageLedger, role: OverheadRole) -> Vec<u64> {
    let topo = &ledger.topology;
    (0..ledger.iterations())
        .map(|it| {
            let recs = ledger.records.iter().filter(|r| r.iteration == it);
            match role {
                OverheadRole::RingHop => recs.filter(|r| r.from == 0).map(|r| r.dims).sum(),
                OverheadRole::StarEdge => {
                    let edge = (0..topo.num_sats).find(|&s| s != topo.central);
                    recs.filter(|r| Some(r.from) == edge && r.to == topo.central)
                        .map(|r| r.dims)
                        .sum()
                }
                OverheadRole::StarCenter => recs.filter(|r| r.from == topo.central).map(|r| r.dims).sum(),
            }
        })
        .collect()
}

/// Measured dimensions for `role` in one iteration (the first).
pub fn overhead_total(ledger: &MessageLedger, role: OverheadRole) -> u64 {
    overhead_per_iteration(ledger, role).first().copied().unwrap_or(0)
}

/// `K (U^2 + 2U)` for a ring hop or star edge, `K (S-1)(U^2 + 2U)` for the star centre.
pub fn overhead_closed_form(role: OverheadRole, num_subcarriers: usize, num_uts: usize, num_sats: usize) -> u64 {
    let per = num_subcarriers as u64 * Intermediates::dims(num_uts);
    match role {
        OverheadRole::RingHop | OverheadRole::StarEdge => per,
        OverheadRole::StarCenter => per * num_sats.saturating_sub(1) as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn payload_sizes() {
        let mut l = MessageLedger::new(Topology::ring(4), 4);
        record_message(&mut l, 0, 0, 1, 1024).unwrap();
        assert_eq!(l.records[0].dims, 24_576);
        let mut l = MessageLedger::new(Topology::ring(4), 16);
        record_message(&mut l, 0, 3, 0, 1).unwrap();
        assert_eq!(l.records[0].dims, 288);
        assert!(matches!(
            record_message(&mut l, 0, 0, 2, 1),
            Err(Error::NoSuchEdge { from: 0, to: 2 })
        ));
        assert_eq!(Intermediates::dims(1), 3);
    }

    #[test]
    fn topology_shapes() {
        assert_eq!(Topology::ring(5).edges.len(), 5);
        let st = Topology::star(5, 2);
        assert_eq!(st.edges.len(), 8);
        assert!(st.has_edge(0, 2) && st.has_edge(2, 0) && !st.has_edge(0, 1));
    }

    #[test]
    fn latency_model() {
        for s in [4usize, 8, 16, 32] {
            let mut star = MessageLedger::new(Topology::star(s, 0), 4);
            let mut ring = MessageLedger::new(Topology::ring(s), 4);
            for it in 0..3 {
                for e in 1..s {
                    record_message(&mut star, it, e, 0, 1).unwrap();
                }
                for e in 1..s {
                    record_message(&mut star, it, 0, e, 1).unwrap();
                }
                for h in 0..s {
                    record_message(&mut ring, it, h, (h + 1) % s, 1).unwrap();
                }
            }
            assert_eq!(latency_total(&star, 3), 6);
            assert_eq!(latency_total(&ring, 3), 3 * s as u64);
            assert_eq!(latency_total(&ring, 0), 0);
        }
    }

    #[test]
    fn csv_and_bytes() {
        let mut l = MessageLedger::new(Topology::ring(2), 2);
        record_message(&mut l, 0, 0, 1, 3).unwrap();
        assert_eq!(l.to_csv(), "iter,from,to,dims,latency_units\n0,0,1,24,1\n");
        // 4 + 2 + 2*2 scalars per set, 3 sets, 8 bytes
        assert_eq!(l.total_bytes(8), 10 * 3 * 8);
    }
}
