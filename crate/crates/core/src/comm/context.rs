// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

use std::cell::{Cell, RefCell};
use std::net::{SocketAddr, TcpListener};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use super::frame::{deserialize_table, serialize_table};
use super::tcp::TcpTransport;
use super::transport::{InProcessHub, Transport};
use crate::error::{Error, Result};
use crate::table::{concat, Table};

pub const DEFAULT_CONNECT_TIMEOUT: Duration = Duration::from_secs(30);
pub const DEFAULT_RECV_TIMEOUT: Duration = Duration::from_secs(300);

pub enum TransportKind {
    /// Worker threads of one process sharing a hub.
    InProcess(Arc<InProcessHub>),
    /// One worker per process; `peers[r]` is rank `r`'s `host:port`.
    Tcp { peers: Vec<String> },
    /// TCP with this rank's listener already bound (peers given as resolved
    /// addresses).
    TcpListener {
        peers: Vec<SocketAddr>,
        listener: TcpListener,
    },
}

pub struct ContextConfig {
    pub world_size: usize,
    pub rank: usize,
    pub transport: TransportKind,
    pub connect_timeout: Duration,
    pub recv_timeout: Duration,
}

impl ContextConfig {
    pub fn new(world_size: usize, rank: usize, transport: TransportKind) -> Self {
        ContextConfig {
            world_size,
            rank,
            transport,
            connect_timeout: DEFAULT_CONNECT_TIMEOUT,
            recv_timeout: DEFAULT_RECV_TIMEOUT,
        }
    }

    pub fn in_process(hub: Arc<InProcessHub>, rank: usize) -> Self {
        Self::new(hub.world_size(), rank, TransportKind::InProcess(hub))
    }

    pub fn tcp(peers: Vec<String>, rank: usize) -> Self {
        Self::new(peers.len(), rank, TransportKind::Tcp { peers })
    }
}

/// Per-context communication counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CommStats {
    pub frames_sent: u64,
    pub bytes_sent: u64,
    pub frames_received: u64,
    pub bytes_received: u64,
    pub rows_sent: u64,
    pub rows_received: u64,
    pub barriers: u64,
}

/// The execution identity of one worker: its rank, the world size and the
/// transport to its peers. Owned by exactly one worker; not `Sync`.
pub struct WorkerContext {
    rank: usize,
    world_size: usize,
    transport: RefCell<Box<dyn Transport>>,
    stats: Cell<CommStats>,
}

/// Connects this worker's transport and passes one barrier.
pub fn init_context(config: ContextConfig) -> Result<WorkerContext> {
    let ContextConfig {
        world_size,
        rank,
        transport,
        connect_timeout,
        recv_timeout,
    } = config;
    if world_size == 0 {
        return Err(Error::InvalidArgument("world_size must be at least 1".into()));
    }
    if rank >= world_size {
        return Err(Error::IndexOutOfRange {
            what: "rank",
            index: rank,
            len: world_size,
        });
    }
    let transport: Box<dyn Transport> = match transport {
        TransportKind::InProcess(hub) => {
            if hub.world_size() != world_size {
                return Err(Error::InvalidArgument(format!(
                    "hub world size {} differs from configured {world_size}",
                    hub.world_size()
                )));
            }
            Box::new(hub.claim(rank, recv_timeout)?)
        }
        TransportKind::Tcp { peers } => {
            check_peer_count(peers.len(), world_size)?;
            Box::new(TcpTransport::connect(rank, &peers, connect_timeout, recv_timeout)?)
        }
        TransportKind::TcpListener { peers, listener } => {
            check_peer_count(peers.len(), world_size)?;
            Box::new(TcpTransport::connect_with_listener(
                rank,
                &peers,
                listener,
                connect_timeout,
                recv_timeout,
            )?)
        }
    };
    let ctx = WorkerContext::from_transport(transport);
    ctx.barrier()?;
    Ok(ctx)
}

fn check_peer_count(peers: usize, world_size: usize) -> Result<()> {
    if peers != world_size {
        return Err(Error::InvalidArgument(format!(
            "{peers} peer addresses for world size {world_size}"
        )));
    }
    Ok(())
}

/// Runs `worker` on `world_size` threads, each with its own in-process
/// context. Returns the per-rank results in rank order, or the error of the
/// lowest failing rank.
pub fn run_in_process<T, F>(world_size: usize, worker: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&WorkerContext) -> Result<T> + Sync,
{
    run_in_process_with_timeout(world_size, DEFAULT_RECV_TIMEOUT, worker)
}

pub fn run_in_process_with_timeout<T, F>(world_size: usize, recv_timeout: Duration, worker: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&WorkerContext) -> Result<T> + Sync,
{
    if world_size == 0 {
        return Err(Error::InvalidArgument("world_size must be at least 1".into()));
    }
    let hub = Arc::new(InProcessHub::new(world_size));
    let results: Vec<Result<T>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..world_size)
            .map(|rank| {
                let hub = Arc::clone(&hub);
                let worker = &worker;
                thread::Builder::new()
                    .name(format!("worker-{rank}"))
                    .spawn_scoped(scope, move || {
                        let mut config = ContextConfig::in_process(hub, rank);
                        config.recv_timeout = recv_timeout;
                        let ctx = init_context(config)?;
                        worker(&ctx)
                    })
                    .expect("spawn worker thread")
            })
            .collect();
        handles
            .into_iter()
            .enumerate()
            .map(|(rank, h)| {
                h.join().unwrap_or_else(|_| {
                    Err(Error::Peer {
                        peer: rank,
                        message: "worker panicked".into(),
                    })
                })
            })
            .collect()
    });
    results.into_iter().collect()
}

impl WorkerContext {
    pub fn from_transport(transport: Box<dyn Transport>) -> Self {
        WorkerContext {
            rank: transport.rank(),
            world_size: transport.world_size(),
            transport: RefCell::new(transport),
            stats: Cell::new(CommStats::default()),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn world_size(&self) -> usize {
        self.world_size
    }

    pub fn stats(&self) -> CommStats {
        self.stats.get()
    }

    fn update_stats(&self, f: impl FnOnce(&mut CommStats)) {
        let mut s = self.stats.get();
        f(&mut s);
        self.stats.set(s);
    }

    pub fn barrier(&self) -> Result<()> {
        if self.world_size > 1 {
            self.transport.borrow_mut().barrier()?;
        }
        self.update_stats(|s| s.barriers += 1);
        Ok(())
    }

    pub fn close(self) -> Result<()> {
        let mut t = self.transport.into_inner();
        t.close()
    }

    fn send_table(&self, dest: usize, table: &Table) -> Result<()> {
        let frame = serialize_table(table);
        let len = frame.len() as u64;
        self.transport.borrow_mut().send_frame(dest, frame)?;
        self.update_stats(|s| {
            s.frames_sent += 1;
            s.bytes_sent += len;
            s.rows_sent += table.num_rows() as u64;
        });
        Ok(())
    }

    fn recv_table(&self, src: usize) -> Result<Table> {
        let frame = self.transport.borrow_mut().recv_frame(src)?;
        let table = deserialize_table(&frame).map_err(|e| Error::Peer {
            peer: src,
            message: e.to_string(),
        })?;
        self.update_stats(|s| {
            s.frames_received += 1;
            s.bytes_received += frame.len() as u64;
            s.rows_received += table.num_rows() as u64;
        });
        Ok(table)
    }

    /// Bulk-synchronous exchange. `outgoing[d]` goes to rank `d`; the result is
    /// the concatenation of what every rank addressed to this one, in ascending
    /// source-rank order. The self-addressed table is moved without
    /// serialization.
    pub fn all_to_all(&self, outgoing: Vec<Table>) -> Result<Table> {
        if outgoing.len() != self.world_size {
            return Err(Error::InvalidArgument(format!(
                "all_to_all needs {} outgoing tables, got {}",
                self.world_size,
                outgoing.len()
            )));
        }
        let reference = outgoing[0].schema().clone();
        if let Some(bad) = outgoing.iter().position(|t| !t.schema().same_types(&reference)) {
            return Err(Error::SchemaMismatch(format!(
                "outgoing table for rank {bad} has dtypes {:?}, expected {:?}",
                outgoing[bad].schema().dtypes(),
                reference.dtypes()
            )));
        }
        let mut own = None;
        for (dest, table) in outgoing.into_iter().enumerate() {
            if dest == self.rank {
                own = Some(table);
            } else {
                self.send_table(dest, &table)?;
            }
        }
        let mut incoming = Vec::with_capacity(self.world_size);
        for src in 0..self.world_size {
            let table = if src == self.rank {
                own.take().expect("own partition")
            } else {
                self.recv_table(src)?
            };
            if !table.schema().same_types(&reference) {
                return Err(Error::Peer {
                    peer: src,
                    message: format!(
                        "schema mismatch: received dtypes {:?}, expected {:?}",
                        table.schema().dtypes(),
                        reference.dtypes()
                    ),
                });
            }
            incoming.push(table);
        }
        concat(&incoming)
    }

    /// Collects every rank's table on `root` in ascending rank order. Other
    /// ranks get `None`.
    pub fn gather(&self, table: &Table, root: usize) -> Result<Option<Table>> {
        if root >= self.world_size {
            return Err(Error::IndexOutOfRange {
                what: "root rank",
                index: root,
                len: self.world_size,
            });
        }
        if self.rank != root {
            self.send_table(root, table)?;
            return Ok(None);
        }
        let mut parts = Vec::with_capacity(self.world_size);
        for src in 0..self.world_size {
            let part = if src == root { table.clone() } else { self.recv_table(src)? };
            if !part.schema().same_types(table.schema()) {
                return Err(Error::Peer {
                    peer: src,
                    message: "schema mismatch in gather".into(),
                });
            }
            parts.push(part);
        }
        concat(&parts).map(Some)
    }

    /// Gathers `table` on every rank (gather to root 0, then each rank
    /// receives the full result).
    pub fn all_gather(&self, table: &Table) -> Result<Table> {
        let gathered = self.gather(table, 0)?;
        if self.rank == 0 {
            let full = gathered.expect("root holds gather result");
            for dest in 1..self.world_size {
                self.send_table(dest, &full)?;
            }
            Ok(full)
        } else {
            self.recv_table(0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{Column, Value};

    fn one_row(v: i64) -> Table {
        Table::from_columns(vec![("v", Column::from_i64(vec![v]))]).unwrap()
    }

    #[test]
    fn single_worker_all_to_all_is_identity() {
        let out = run_in_process(1, |ctx| {
            let t = one_row(5);
            let r = ctx.all_to_all(vec![t.clone()])?;
            assert_eq!(ctx.stats().frames_sent, 0);
            Ok(r == t)
        })
        .unwrap();
        assert_eq!(out, vec![true]);
    }

    #[test]
    fn two_workers_swap_rows_in_rank_order() {
        let out = run_in_process(2, |ctx| {
            let mine = one_row(ctx.rank() as i64);
            ctx.all_to_all(vec![mine.clone(), mine])
        })
        .unwrap();
        for t in out {
            assert_eq!(t.num_rows(), 2);
            assert_eq!(t.row(0).get(0), Value::Int64(0));
            assert_eq!(t.row(1).get(0), Value::Int64(1));
        }
    }

    #[test]
    fn gather_in_rank_order() {
        let out = run_in_process(3, |ctx| ctx.gather(&one_row(ctx.rank() as i64 * 10), 0)).unwrap();
        let root = out[0].as_ref().unwrap();
        let vals: Vec<Value> = root.rows().map(|r| r.get(0)).collect();
        assert_eq!(vals, vec![Value::Int64(0), Value::Int64(10), Value::Int64(20)]);
        assert!(out[1].is_none() && out[2].is_none());
    }

    #[test]
    fn wrong_outgoing_count_is_rejected() {
        let err = run_in_process(1, |ctx| ctx.all_to_all(vec![one_row(1), one_row(2)]));
        assert!(err.is_err());
    }

    #[test]
    fn mismatched_schema_names_the_peer() {
        let err = run_in_process(2, |ctx| {
            let t = if ctx.rank() == 0 {
                one_row(1)
            } else {
                Table::from_columns(vec![("v", Column::from_f64(vec![1.0]))]).unwrap()
            };
            ctx.all_to_all(vec![t.clone(), t])
        })
        .unwrap_err();
        assert!(matches!(err, Error::Peer { .. }), "{err}");
    }

    #[test]
    fn failing_worker_does_not_hang_the_others() {
        let err = run_in_process_with_timeout(3, Duration::from_secs(20), |ctx| {
            if ctx.rank() == 1 {
                return Err(Error::InvalidArgument("worker 1 gives up".into()));
            }
            ctx.all_to_all(vec![one_row(0), one_row(1), one_row(2)])
        })
        .unwrap_err();
        assert!(matches!(err, Error::Peer { peer: 1, .. } | Error::InvalidArgument(_)), "{err}");
    }

    #[test]
    fn init_rejects_bad_configs() {
        let hub = Arc::new(InProcessHub::new(2));
        assert!(init_context(ContextConfig::new(0, 0, TransportKind::InProcess(hub.clone()))).is_err());
        assert!(init_context(ContextConfig::new(2, 2, TransportKind::InProcess(hub.clone()))).is_err());
        assert!(init_context(ContextConfig::new(3, 0, TransportKind::InProcess(hub))).is_err());
        let tcp = ContextConfig::new(2, 0, TransportKind::Tcp { peers: vec!["nohost".into(), "x:1".into()] });
        assert!(matches!(init_context(tcp), Err(Error::Address(_))));
    }
}
