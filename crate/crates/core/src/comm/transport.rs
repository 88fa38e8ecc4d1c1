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

//! Point-to-point frame transports.

use std::sync::mpsc::{channel, Receiver, RecvTimeoutError, Sender};
use std::sync::Mutex;
use std::time::Duration;

use crate::error::{Error, Result};

/// Reliable, ordered frame delivery between the ranks of one run.
///
/// Frames between a fixed (source, destination) pair arrive in order and
/// uncorrupted. `barrier` returns only after every rank has entered it.
pub trait Transport: Send {
    fn rank(&self) -> usize;
    fn world_size(&self) -> usize;
    fn send_frame(&mut self, dest: usize, frame: Vec<u8>) -> Result<()>;
    fn recv_frame(&mut self, src: usize) -> Result<Vec<u8>>;
    fn barrier(&mut self) -> Result<()>;
    fn close(&mut self) -> Result<()>;
}

#[derive(Debug)]
pub(crate) enum Message {
    Frame(Vec<u8>),
    Barrier,
    Closed(String),
}

/// Receives `src`'s next message, mapping channel failures to peer errors.
pub(crate) fn recv_message(rx: &Receiver<Message>, src: usize, timeout: Duration) -> Result<Message> {
    match rx.recv_timeout(timeout) {
        Ok(Message::Closed(reason)) => Err(Error::Peer {
            peer: src,
            message: format!("connection closed: {reason}"),
        }),
        Ok(m) => Ok(m),
        Err(RecvTimeoutError::Timeout) => Err(Error::Timeout {
            peer: src,
            what: format!("no message within {timeout:?}"),
        }),
        Err(RecvTimeoutError::Disconnected) => Err(Error::Peer {
            peer: src,
            message: "worker disconnected".into(),
        }),
    }
}

pub(crate) fn expect_frame(msg: Message, src: usize) -> Result<Vec<u8>> {
    match msg {
        Message::Frame(f) => Ok(f),
        other => Err(Error::Peer {
            peer: src,
            message: format!("expected a data frame, got {other:?}"),
        }),
    }
}

pub(crate) fn expect_barrier(msg: Message, src: usize) -> Result<()> {
    match msg {
        Message::Barrier => Ok(()),
        Message::Frame(f) => Err(Error::Peer {
            peer: src,
            message: format!("expected a barrier token, got a {}-byte frame", f.len()),
        }),
        Message::Closed(reason) => Err(Error::Peer {
            peer: src,
            message: reason,
        }),
    }
}

struct Endpoints {
    senders: Vec<Sender<Message>>,
    receivers: Vec<Receiver<Message>>,
}

/// Shared rendezvous for worker threads in one process. Each rank claims its
/// endpoints exactly once.
pub struct InProcessHub {
    world_size: usize,
    slots: Mutex<Vec<Option<Endpoints>>>,
}

impl InProcessHub {
    pub fn new(world_size: usize) -> Self {
        let mut senders: Vec<Vec<Sender<Message>>> = (0..world_size).map(|_| Vec::new()).collect();
        let mut receivers: Vec<Vec<Receiver<Message>>> = (0..world_size).map(|_| Vec::new()).collect();
        // channel (src -> dest): sender kept by src, receiver by dest, both
        // indexed by the other rank.
        for sender_list in senders.iter_mut() {
            for receiver_list in receivers.iter_mut() {
                let (tx, rx) = channel();
                sender_list.push(tx);
                receiver_list.push(rx);
            }
        }
        let slots = senders
            .into_iter()
            .zip(receivers)
            .map(|(senders, receivers)| Some(Endpoints { senders, receivers }))
            .collect();
        InProcessHub {
            world_size,
            slots: Mutex::new(slots),
        }
    }

    pub fn world_size(&self) -> usize {
        self.world_size
    }

    pub fn claim(&self, rank: usize, recv_timeout: Duration) -> Result<InProcessTransport> {
        if rank >= self.world_size {
            return Err(Error::IndexOutOfRange {
                what: "rank",
                index: rank,
                len: self.world_size,
            });
        }
        let mut slots = self.slots.lock().expect("hub lock poisoned");
        let ep = slots[rank].take().ok_or(Error::RankCollision(rank))?;
        Ok(InProcessTransport {
            rank,
            world_size: self.world_size,
            senders: ep.senders.into_iter().map(Some).collect(),
            receivers: ep.receivers,
            recv_timeout,
        })
    }
}

/// Transport between threads of one process over unbounded channels.
pub struct InProcessTransport {
    rank: usize,
    world_size: usize,
    senders: Vec<Option<Sender<Message>>>,
    receivers: Vec<Receiver<Message>>,
    recv_timeout: Duration,
}

impl InProcessTransport {
    fn sender(&self, dest: usize) -> Result<&Sender<Message>> {
        self.senders
            .get(dest)
            .ok_or(Error::IndexOutOfRange {
                what: "rank",
                index: dest,
                len: self.world_size,
            })?
            .as_ref()
            .ok_or_else(|| Error::Peer {
                peer: dest,
                message: "transport closed".into(),
            })
    }

    fn send(&self, dest: usize, msg: Message) -> Result<()> {
        self.sender(dest)?.send(msg).map_err(|_| Error::Peer {
            peer: dest,
            message: "worker disconnected".into(),
        })
    }
}

impl Transport for InProcessTransport {
    fn rank(&self) -> usize {
        self.rank
    }

    fn world_size(&self) -> usize {
        self.world_size
    }

    fn send_frame(&mut self, dest: usize, frame: Vec<u8>) -> Result<()> {
        self.send(dest, Message::Frame(frame))
    }

    fn recv_frame(&mut self, src: usize) -> Result<Vec<u8>> {
        let rx = self.receivers.get(src).ok_or(Error::IndexOutOfRange {
            what: "rank",
            index: src,
            len: self.world_size,
        })?;
        expect_frame(recv_message(rx, src, self.recv_timeout)?, src)
    }

    fn barrier(&mut self) -> Result<()> {
        for peer in (0..self.world_size).filter(|&p| p != self.rank) {
            self.send(peer, Message::Barrier)?;
        }
        for peer in (0..self.world_size).filter(|&p| p != self.rank) {
            expect_barrier(recv_message(&self.receivers[peer], peer, self.recv_timeout)?, peer)?;
        }
        Ok(())
    }

    fn close(&mut self) -> Result<()> {
        self.senders.iter_mut().for_each(|s| *s = None);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn claim_twice_is_a_collision() {
        let hub = InProcessHub::new(2);
        let _a = hub.claim(0, Duration::from_secs(1)).unwrap();
        assert!(matches!(hub.claim(0, Duration::from_secs(1)), Err(Error::RankCollision(0))));
        assert!(hub.claim(2, Duration::from_secs(1)).is_err());
    }

    #[test]
    fn frames_arrive_in_order() {
        let hub = InProcessHub::new(2);
        let mut a = hub.claim(0, Duration::from_secs(1)).unwrap();
        let mut b = hub.claim(1, Duration::from_secs(1)).unwrap();
        for i in 0..10u8 {
            a.send_frame(1, vec![i]).unwrap();
        }
        for i in 0..10u8 {
            assert_eq!(b.recv_frame(0).unwrap(), vec![i]);
        }
    }

    #[test]
    fn dropped_peer_is_reported() {
        let hub = InProcessHub::new(2);
        let a = hub.claim(0, Duration::from_secs(5)).unwrap();
        let mut b = hub.claim(1, Duration::from_secs(5)).unwrap();
        drop(a);
        assert!(matches!(b.recv_frame(0), Err(Error::Peer { peer: 0, .. })));
    }

    #[test]
    fn receive_times_out() {
        let hub = InProcessHub::new(2);
        let _a = hub.claim(0, Duration::from_millis(10)).unwrap();
        let mut b = hub.claim(1, Duration::from_millis(10)).unwrap();
        assert!(matches!(b.recv_frame(0), Err(Error::Timeout { peer: 0, .. })));
    }
}
