//! Per-edge channel policies producing the delivered stamps `D^(t)_{i,j}`.
//!
//! A stamp is the tick whose value of the source block the receiver holds.
//! At tick 1 every receiver holds the initial point, so all stamps start at 1.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::DependencyGraph;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream};

/// Default forced-delivery cap for packet drops.
pub const DEFAULT_MAX_CONSECUTIVE_DROPS: usize = 9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelPolicy {
    /// Every packet arrives in the tick it is sent.
    Zero,
    /// `D^(t) = max(1, t - delay)`.
    FixedDelay { delay: usize },
    /// Each tick's packet is lost with probability `probability`; after
    /// `max_consecutive_drops` losses in a row delivery is forced.
    IidDrop {
        probability: f64,
        max_consecutive_drops: usize,
    },
    /// `D^(t) = max(1, t - delays[(t - 1 + phase) % len])`.
    Periodic { delays: Vec<usize>, phase: usize },
    /// Explicit stamps by tick; ticks without an entry keep the previous stamp.
    Schedule {
        stamps: BTreeMap<usize, usize>,
        cap: Option<usize>,
        allow_non_monotone: bool,
    },
}

impl ChannelPolicy {
    /// The repeating pattern `0, 1, ..., t_d` starting at `phase`.
    pub fn sawtooth(t_d: usize, phase: usize) -> Self {
        Self::Periodic {
            delays: (0..=t_d).collect(),
            phase,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::IidDrop { probability, .. } if !(0.0..=1.0).contains(probability) => Err(Error::InvalidInput(
                format!("drop probability {probability} is not in [0, 1]"),
            )),
            Self::Periodic { delays, .. } => {
                if delays.is_empty() {
                    return Err(Error::InvalidInput("periodic delay pattern is empty".into()));
                }
                // stamps stay nondecreasing iff the delay grows by at most one per tick
                let n = delays.len();
                for k in 0..n {
                    if delays[(k + 1) % n] > delays[k] + 1 {
                        return Err(Error::InvalidInput(format!(
                            "periodic pattern {delays:?} would make stamps decrease"
                        )));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Channel policies for every edge of a graph plus the seed for random drops.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelModel {
    pub default: ChannelPolicy,
    pub overrides: BTreeMap<(usize, usize), ChannelPolicy>,
    pub seed: u64,
}

impl ChannelModel {
    pub fn uniform(policy: ChannelPolicy, seed: u64) -> Self {
        Self {
            default: policy,
            overrides: BTreeMap::new(),
            seed,
        }
    }

    pub fn zero() -> Self {
        Self::uniform(ChannelPolicy::Zero, 0)
    }

    pub fn fixed_delay(delay: usize) -> Self {
        Self::uniform(ChannelPolicy::FixedDelay { delay }, 0)
    }

    pub fn iid_drop(probability: f64, max_consecutive_drops: usize, seed: u64) -> Self {
        Self::uniform(
            ChannelPolicy::IidDrop {
                probability,
                max_consecutive_drops,
            },
            seed,
        )
    }

    /// Sawtooth delays `0..=t_d` on every edge with a seeded phase per edge.
    pub fn sawtooth(graph: &DependencyGraph, t_d: usize, seed: u64) -> Self {
        let mut model = Self::uniform(ChannelPolicy::sawtooth(t_d, 0), seed);
        for &(src, dst) in graph.edges() {
            let phase = (derive_seed(seed, &[0x5048_4153, src as u64, dst as u64]) % (t_d as u64 + 1)) as usize;
            model.overrides.insert((src, dst), ChannelPolicy::sawtooth(t_d, phase));
        }
        model
    }

    /// Periodic patterns by edge direction: `forward` on edges with
    /// `src < dst`, `backward` on the others.
    pub fn periodic_by_direction(
        graph: &DependencyGraph,
        forward: Vec<usize>,
        backward: Vec<usize>,
        phase: usize,
    ) -> Self {
        let mut model = Self::uniform(ChannelPolicy::Zero, 0);
        for &(src, dst) in graph.edges() {
            let delays = if src < dst { forward.clone() } else { backward.clone() };
            model
                .overrides
                .insert((src, dst), ChannelPolicy::Periodic { delays, phase });
        }
        model
    }

    /// Explicit schedules for the edges in `table`; other edges are delay-free.
    pub fn from_schedule(table: &ScheduleTable, cap: Option<usize>, allow_non_monotone: bool) -> Self {
        let mut model = Self::zero();
        for e in &table.entries {
            let policy = model
                .overrides
                .entry((e.src, e.dst))
                .or_insert_with(|| ChannelPolicy::Schedule {
                    stamps: BTreeMap::new(),
                    cap,
                    allow_non_monotone,
                });
            if let ChannelPolicy::Schedule { stamps, .. } = policy {
                stamps.insert(e.t, e.delivered_stamp);
            }
        }
        model
    }

    pub fn with_override(mut self, src: usize, dst: usize, policy: ChannelPolicy) -> Self {
        self.overrides.insert((src, dst), policy);
        self
    }

    pub fn policy(&self, src: usize, dst: usize) -> &ChannelPolicy {
        self.overrides.get(&(src, dst)).unwrap_or(&self.default)
    }

    pub fn validate(&self) -> Result<()> {
        self.default.validate()?;
        self.overrides.values().try_for_each(ChannelPolicy::validate)
    }

    /// True when no edge ever delays or drops.
    pub fn is_zero(&self) -> bool {
        let zero = |p: &ChannelPolicy| matches!(p, ChannelPolicy::Zero | ChannelPolicy::FixedDelay { delay: 0 });
        zero(&self.default) && self.overrides.values().all(zero)
    }
}

#[derive(Clone, Debug)]
struct EdgeState {
    src: usize,
    dst: usize,
    policy: ChannelPolicy,
    rng: ChaCha8Rng,
    last: usize,
    consecutive_drops: usize,
}

/// Mutable channel state of one run; each edge draws from its own seeded
/// stream so results do not depend on the order edges are processed.
#[derive(Clone, Debug)]
pub struct ChannelRuntime {
    edges: Vec<EdgeState>,
    drops: usize,
}

impl ChannelRuntime {
    pub fn new(model: &ChannelModel, graph: &DependencyGraph) -> Result<Self> {
        model.validate()?;
        for &(src, dst) in model.overrides.keys() {
            if !graph.has_edge(src, dst) {
                return Err(Error::InvalidInput(format!(
                    "channel given for ({src}, {dst}), which is not an edge"
                )));
            }
        }
        let edges = graph
            .edges()
            .iter()
            .map(|&(src, dst)| EdgeState {
                src,
                dst,
                policy: model.policy(src, dst).clone(),
                rng: stream(model.seed, &[0x4348_414e, src as u64, dst as u64]),
                last: 1,
                consecutive_drops: 0,
            })
            .collect();
        Ok(Self { edges, drops: 0 })
    }

    /// Number of packets lost so far.
    pub fn drops(&self) -> usize {
        self.drops
    }

    /// Stamps of every edge (in graph edge order) for tick `t`. Must be
    /// called once per tick with `t = 1, 2, ...`.
    pub fn advance(&mut self, t: usize) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(self.edges.len());
        for e in &mut self.edges {
            let stamp = match &e.policy {
                ChannelPolicy::Zero => t,
                ChannelPolicy::FixedDelay { delay } => t.saturating_sub(*delay).max(1),
                ChannelPolicy::Periodic { delays, phase } => {
                    let d = delays[(t - 1 + phase) % delays.len()];
                    t.saturating_sub(d).max(1)
                }
                ChannelPolicy::IidDrop {
                    probability,
                    max_consecutive_drops,
                } => {
                    let u: f64 = e.rng.random();
                    if t > 1 && u < *probability && e.consecutive_drops < *max_consecutive_drops {
                        e.consecutive_drops += 1;
                        self.drops += 1;
                        e.last
                    } else {
                        e.consecutive_drops = 0;
                        t
                    }
                }
                ChannelPolicy::Schedule {
                    stamps,
                    cap,
                    allow_non_monotone,
                } => {
                    let stamp = stamps.get(&t).copied().unwrap_or(e.last);
                    if stamp == 0 || stamp > t {
                        return Err(Error::InvalidInput(format!(
                            "schedule stamp {stamp} for edge ({}, {}) at t={t} is not in 1..={t}",
                            e.src, e.dst
                        )));
                    }
                    if stamp < e.last && !allow_non_monotone {
                        return Err(Error::PreconditionFailed(format!(
                            "schedule stamp for edge ({}, {}) decreases from {} to {stamp} at t={t}",
                            e.src, e.dst, e.last
                        )));
                    }
                    if let Some(cap) = cap {
                        if t - stamp > *cap {
                            return Err(Error::StaleBeyondCap {
                                t,
                                src: e.src,
                                dst: e.dst,
                                delay: t - stamp,
                                cap: *cap,
                            });
                        }
                    }
                    stamp
                }
            };
            e.last = stamp;
            out.push(stamp);
        }
        Ok(out)
    }
}

/// One row of a schedule or channel log.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub t: usize,
    pub src: usize,
    pub dst: usize,
    pub delivered_stamp: usize,
}

/// Explicit stamp table with CSV columns `t,src,dst,delivered_stamp`
/// (agents indexed from 0, ticks from 1).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleTable {
    pub entries: Vec<ScheduleEntry>,
}

impl ScheduleTable {
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let entries = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<ScheduleEntry>, _>>()?;
        Ok(Self { entries })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for e in &self.entries {
            w.serialize(e)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn to_path(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(model: &ChannelModel, graph: &DependencyGraph, ticks: usize) -> Result<Vec<Vec<usize>>> {
        let mut rt = ChannelRuntime::new(model, graph)?;
        (1..=ticks).map(|t| rt.advance(t)).collect()
    }

    #[test]
    fn fixed_delay_stamps() {
        let g = DependencyGraph::chain(2).unwrap();
        let s = run(&ChannelModel::fixed_delay(2), &g, 5).unwrap();
        let col: Vec<usize> = s.iter().map(|v| v[0]).collect();
        assert_eq!(col, vec![1, 1, 1, 2, 3]);
    }

    #[test]
    fn drop_cap_forces_delivery() {
        let g = DependencyGraph::chain(3).unwrap();
        let s = run(&ChannelModel::iid_drop(1.0, 4, 7), &g, 50).unwrap();
        for (k, row) in s.iter().enumerate() {
            let t = k + 1;
            for &d in row {
                assert!(t - d <= 4);
            }
        }
        assert_eq!(s[5][0], 6);
    }

    #[test]
    fn drops_reproducible() {
        let g = DependencyGraph::chain(3).unwrap();
        let m = ChannelModel::iid_drop(0.3, 9, 11);
        assert_eq!(run(&m, &g, 200).unwrap(), run(&m, &g, 200).unwrap());
    }

    #[test]
    fn periodic_validation() {
        assert!(ChannelPolicy::sawtooth(3, 1).validate().is_ok());
        assert!(ChannelPolicy::Periodic {
            delays: vec![0, 2],
            phase: 0
        }
        .validate()
        .is_err());
        assert!(ChannelPolicy::Periodic {
            delays: vec![0, 1, 2, 0],
            phase: 0
        }
        .validate()
        .is_ok());
        assert!(ChannelPolicy::Periodic {
            delays: vec![2, 0, 0, 1],
            phase: 0
        }
        .validate()
        .is_ok());
    }

    #[test]
    fn schedule_carries_and_caps() {
        let g = DependencyGraph::chain(2).unwrap();
        let table = ScheduleTable {
            entries: vec![
                ScheduleEntry {
                    t: 2,
                    src: 0,
                    dst: 1,
                    delivered_stamp: 2,
                },
                ScheduleEntry {
                    t: 6,
                    src: 0,
                    dst: 1,
                    delivered_stamp: 6,
                },
            ],
        };
        let s = run(&ChannelModel::from_schedule(&table, None, false), &g, 6).unwrap();
        let e = g.edge_index(0, 1).unwrap();
        let col: Vec<usize> = s.iter().map(|v| v[e]).collect();
        assert_eq!(col, vec![1, 2, 2, 2, 2, 6]);
        let err = run(&ChannelModel::from_schedule(&table, Some(2), false), &g, 6).unwrap_err();
        assert!(matches!(
            err,
            Error::StaleBeyondCap {
                t: 5,
                delay: 3,
                cap: 2,
                ..
            }
        ));
    }

    #[test]
    fn schedule_rejects_decreasing_stamps_unless_flagged() {
        let g = DependencyGraph::chain(2).unwrap();
        let table = ScheduleTable {
            entries: vec![
                ScheduleEntry {
                    t: 3,
                    src: 0,
                    dst: 1,
                    delivered_stamp: 3,
                },
                ScheduleEntry {
                    t: 4,
                    src: 0,
                    dst: 1,
                    delivered_stamp: 2,
                },
            ],
        };
        assert!(run(&ChannelModel::from_schedule(&table, None, false), &g, 4).is_err());
        assert!(run(&ChannelModel::from_schedule(&table, None, true), &g, 4).is_ok());
    }

    #[test]
    fn schedule_csv_roundtrip() {
        let table = ScheduleTable {
            entries: vec![
                ScheduleEntry {
                    t: 1,
                    src: 0,
                    dst: 1,
                    delivered_stamp: 1,
                },
                ScheduleEntry {
                    t: 2,
                    src: 1,
                    dst: 0,
                    delivered_stamp: 1,
                },
            ],
        };
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone())
            .unwrap()
            .starts_with("t,src,dst,delivered_stamp\n"));
        assert_eq!(ScheduleTable::read_csv(buf.as_slice()).unwrap(), table);
    }

    #[test]
    fn override_on_missing_edge_is_rejected() {
        let g = DependencyGraph::chain(2).unwrap();
        let m = ChannelModel::zero().with_override(0, 0, ChannelPolicy::Zero);
        assert!(ChannelRuntime::new(&m, &g).is_err());
    }
}
