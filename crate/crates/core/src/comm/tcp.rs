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

//! Full-mesh TCP transport, one worker per process.
//!
//! Rank `r` listens on its own address, dials every rank below it and accepts
//! a connection from every rank above it. Each side of a new connection sends
//! a 16-byte handshake:
//!
//! ```text
//! "CYHS" | version u16 = 1 | sender rank u32 | world size u32 | reserved u16
//! ```
//!
//! After the handshake, every message is a u64 little-endian payload length
//! followed by the payload. A length of `u64::MAX` carries no payload and is a
//! barrier token. A reader thread per peer drains its socket into a channel,
//! so concurrent sends never deadlock on full socket buffers.

use std::io::{self, BufReader, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::thread;
use std::time::{Duration, Instant};

use super::transport::{expect_barrier, expect_frame, recv_message, Message, Transport};
use crate::error::{Error, Result};

pub const HANDSHAKE_MAGIC: [u8; 4] = *b"CYHS";
pub const HANDSHAKE_VERSION: u16 = 1;
const BARRIER_TOKEN: u64 = u64::MAX;
/// Largest frame a reader will accept before treating the stream as corrupt.
const MAX_FRAME_LEN: u64 = 1 << 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Handshake {
    pub rank: u32,
    pub world_size: u32,
}

impl Handshake {
    pub fn encode(&self) -> [u8; 16] {
        let mut b = [0u8; 16];
        b[0..4].copy_from_slice(&HANDSHAKE_MAGIC);
        b[4..6].copy_from_slice(&HANDSHAKE_VERSION.to_le_bytes());
        b[6..10].copy_from_slice(&self.rank.to_le_bytes());
        b[10..14].copy_from_slice(&self.world_size.to_le_bytes());
        b
    }

    pub fn decode(b: &[u8; 16]) -> Result<Handshake> {
        if b[0..4] != HANDSHAKE_MAGIC {
            return Err(Error::Handshake(format!("bad magic {:02x?}", &b[0..4])));
        }
        let version = u16::from_le_bytes([b[4], b[5]]);
        if version != HANDSHAKE_VERSION {
            return Err(Error::Handshake(format!("unsupported version {version}")));
        }
        Ok(Handshake {
            rank: u32::from_le_bytes(b[6..10].try_into().unwrap()),
            world_size: u32::from_le_bytes(b[10..14].try_into().unwrap()),
        })
    }
}

/// Resolves a `host:port` string.
pub fn parse_address(addr: &str) -> Result<SocketAddr> {
    let trimmed = addr.trim();
    if !trimmed.contains(':') {
        return Err(Error::Address(addr.to_owned()));
    }
    trimmed
        .to_socket_addrs()
        .ok()
        .and_then(|mut it| it.next())
        .ok_or_else(|| Error::Address(addr.to_owned()))
}

/// Parses a hosts file: one `host:port` per line, line number = rank.
/// Trailing blank lines are ignored.
pub fn parse_hosts(contents: &str) -> Result<Vec<String>> {
    let mut lines: Vec<&str> = contents.lines().map(str::trim).collect();
    while lines.last() == Some(&"") {
        lines.pop();
    }
    lines
        .into_iter()
        .map(|l| parse_address(l).map(|_| l.to_owned()))
        .collect()
}

pub struct TcpTransport {
    rank: usize,
    world_size: usize,
    writers: Vec<Option<TcpStream>>,
    receivers: Vec<Option<Receiver<Message>>>,
    recv_timeout: Duration,
}

impl TcpTransport {
    /// Binds this rank's listener and connects the full mesh.
    pub fn connect(
        rank: usize,
        peers: &[String],
        connect_timeout: Duration,
        recv_timeout: Duration,
    ) -> Result<Self> {
        if rank >= peers.len() {
            return Err(Error::IndexOutOfRange {
                what: "rank",
                index: rank,
                len: peers.len(),
            });
        }
        let addrs = peers.iter().map(|p| parse_address(p)).collect::<Result<Vec<_>>>()?;
        let listener = TcpListener::bind(addrs[rank])?;
        Self::connect_with_listener(rank, &addrs, listener, connect_timeout, recv_timeout)
    }

    /// Like [`TcpTransport::connect`] with an already bound listener.
    pub fn connect_with_listener(
        rank: usize,
        peers: &[SocketAddr],
        listener: TcpListener,
        connect_timeout: Duration,
        recv_timeout: Duration,
    ) -> Result<Self> {
        let world_size = peers.len();
        let me = Handshake {
            rank: rank as u32,
            world_size: world_size as u32,
        };
        let deadline = Instant::now() + connect_timeout;
        let mut streams: Vec<Option<TcpStream>> = (0..world_size).map(|_| None).collect();

        for (peer, addr) in peers.iter().enumerate().take(rank) {
            let mut stream = dial(*addr, peer, deadline)?;
            stream.write_all(&me.encode())?;
            let theirs = read_handshake(&mut stream, peer, deadline)?;
            if theirs.rank as usize != peer || theirs.world_size as usize != world_size {
                return Err(Error::Handshake(format!(
                    "dialed rank {peer} at {addr} but it answered as rank {} of {}",
                    theirs.rank, theirs.world_size
                )));
            }
            streams[peer] = Some(stream);
        }

        listener.set_nonblocking(true)?;
        let mut pending = world_size - rank - 1;
        while pending > 0 {
            match listener.accept() {
                Ok((mut stream, from)) => {
                    stream.set_nonblocking(false)?;
                    let theirs = read_handshake(&mut stream, usize::MAX, deadline)?;
                    let peer = theirs.rank as usize;
                    if theirs.world_size as usize != world_size {
                        return Err(Error::Handshake(format!(
                            "peer {from} reports world size {}, expected {world_size}",
                            theirs.world_size
                        )));
                    }
                    if peer <= rank || peer >= world_size {
                        return Err(Error::Handshake(format!(
                            "unexpected connection from rank {peer} at {from}"
                        )));
                    }
                    if streams[peer].is_some() {
                        return Err(Error::RankCollision(peer));
                    }
                    stream.write_all(&me.encode())?;
                    streams[peer] = Some(stream);
                    pending -= 1;
                }
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                    if Instant::now() >= deadline {
                        let missing = (rank + 1..world_size).find(|&p| streams[p].is_none()).unwrap();
                        return Err(Error::Timeout {
                            peer: missing,
                            what: "accepting connection".into(),
                        });
                    }
                    thread::sleep(Duration::from_millis(5));
                }
                Err(e) => return Err(e.into()),
            }
        }

        let mut writers = Vec::with_capacity(world_size);
        let mut receivers = Vec::with_capacity(world_size);
        for (peer, stream) in streams.into_iter().enumerate() {
            match stream {
                Some(stream) => {
                    stream.set_nodelay(true)?;
                    stream.set_read_timeout(None)?;
                    let (tx, rx) = channel();
                    let reader = stream.try_clone()?;
                    thread::Builder::new()
                        .name(format!("tcp-rx-{rank}<-{peer}"))
                        .spawn(move || read_loop(reader, tx))?;
                    writers.push(Some(stream));
                    receivers.push(Some(rx));
                }
                None => {
                    writers.push(None);
                    receivers.push(None);
                }
            }
        }
        Ok(TcpTransport {
            rank,
            world_size,
            writers,
            receivers,
            recv_timeout,
        })
    }

    fn writer(&mut self, dest: usize) -> Result<&mut TcpStream> {
        if dest >= self.world_size || dest == self.rank {
            return Err(Error::InvalidArgument(format!(
                "rank {} cannot send to rank {dest} over tcp",
                self.rank
            )));
        }
        self.writers[dest].as_mut().ok_or_else(|| Error::Peer {
            peer: dest,
            message: "transport closed".into(),
        })
    }

    fn receiver(&self, src: usize) -> Result<&Receiver<Message>> {
        self.receivers
            .get(src)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::InvalidArgument(format!("rank {} has no link from {src}", self.rank)))
    }

    fn write_message(&mut self, dest: usize, header: u64, payload: &[u8]) -> Result<()> {
        let stream = self.writer(dest)?;
        let io_err = |e: io::Error| Error::Peer {
            peer: dest,
            message: format!("send failed: {e}"),
        };
        stream.write_all(&header.to_le_bytes()).map_err(io_err)?;
        stream.write_all(payload).map_err(io_err)
    }
}

fn dial(addr: SocketAddr, peer: usize, deadline: Instant) -> Result<TcpStream> {
    let mut backoff = Duration::from_millis(10);
    loop {
        match TcpStream::connect_timeout(&addr, Duration::from_secs(1)) {
            Ok(s) => return Ok(s),
            Err(e) => {
                if Instant::now() + backoff >= deadline {
                    return Err(Error::Timeout {
                        peer,
                        what: format!("connecting to {addr}: {e}"),
                    });
                }
                thread::sleep(backoff);
                backoff = (backoff * 2).min(Duration::from_millis(500));
            }
        }
    }
}

fn read_handshake(stream: &mut TcpStream, peer: usize, deadline: Instant) -> Result<Handshake> {
    let remaining = deadline.saturating_duration_since(Instant::now()).max(Duration::from_millis(1));
    stream.set_read_timeout(Some(remaining))?;
    let mut buf = [0u8; 16];
    stream.read_exact(&mut buf).map_err(|e| match e.kind() {
        io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut => Error::Timeout {
            peer,
            what: "reading handshake".into(),
        },
        _ => Error::Handshake(format!("reading handshake: {e}")),
    })?;
    Handshake::decode(&buf)
}

fn read_loop(stream: TcpStream, tx: Sender<Message>) {
    let mut reader = BufReader::with_capacity(1 << 16, stream);
    loop {
        let mut len = [0u8; 8];
        if let Err(e) = reader.read_exact(&mut len) {
            let reason = if e.kind() == io::ErrorKind::UnexpectedEof {
                "peer closed the connection".to_owned()
            } else {
                e.to_string()
            };
            let _ = tx.send(Message::Closed(reason));
            return;
        }
        let len = u64::from_le_bytes(len);
        let msg = if len == BARRIER_TOKEN {
            Message::Barrier
        } else if len > MAX_FRAME_LEN {
            Message::Closed(format!("frame length {len} exceeds limit"))
        } else {
            let mut payload = vec![0u8; len as usize];
            match reader.read_exact(&mut payload) {
                Ok(()) => Message::Frame(payload),
                Err(e) => Message::Closed(format!("truncated frame: {e}")),
            }
        };
        let stop = matches!(msg, Message::Closed(_));
        if tx.send(msg).is_err() || stop {
            return;
        }
    }
}

impl Transport for TcpTransport {
    fn rank(&self) -> usize {
        self.rank
    }

    fn world_size(&self) -> usize {
        self.world_size
    }

    fn send_frame(&mut self, dest: usize, frame: Vec<u8>) -> Result<()> {
        self.write_message(dest, frame.len() as u64, &frame)
    }

    fn recv_frame(&mut self, src: usize) -> Result<Vec<u8>> {
        let msg = recv_message(self.receiver(src)?, src, self.recv_timeout)?;
        expect_frame(msg, src)
    }

    fn barrier(&mut self) -> Result<()> {
        let rank = self.rank;
        for peer in (0..self.world_size).filter(|&p| p != rank) {
            self.write_message(peer, BARRIER_TOKEN, &[])?;
        }
        for peer in (0..self.world_size).filter(|&p| p != self.rank) {
            let msg = recv_message(self.receiver(peer)?, peer, self.recv_timeout)?;
            expect_barrier(msg, peer)?;
        }
        Ok(())
    }

    fn close(&mut self) -> Result<()> {
        for w in self.writers.iter_mut() {
            if let Some(s) = w.take() {
                let _ = s.shutdown(Shutdown::Write);
            }
        }
        Ok(())
    }
}

impl Drop for TcpTransport {
    fn drop(&mut self) {
        let _ = self.close();
    }
}
