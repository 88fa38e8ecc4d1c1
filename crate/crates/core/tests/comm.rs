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

mod common;

use std::net::TcpListener;
use std::thread;
use std::time::{Duration, Instant};

use common::*;
use rand::Rng;
use tessera::comm::*;
use tessera::table::{Column, ColumnBuilder, DType, Field, Schema, Table};
use tessera::{concat, Error};

#[test]
fn frame_round_trip_over_random_tables() {
    let mut rng = rng(31);
    let mut zero_rows = 0;
    let mut all_null = 0;
    for i in 0..600 {
        let t = match i % 50 {
            0 => random_table_with(&random_schema(&mut rng, 5), 0, &mut rng, 0.0, 7),
            1 => random_table_with(&random_schema(&mut rng, 5), 17, &mut rng, 1.0, 7),
            _ => random_table(&mut rng, 100),
        };
        zero_rows += usize::from(t.num_rows() == 0);
        all_null += usize::from(t.columns().all(|c| c.null_count() == c.len()) && t.num_rows() > 0);
        let frame = serialize_table(&t);
        let back = deserialize_table(&frame).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.schema(), t.schema());
        for c in 0..t.num_columns() {
            for r in 0..t.num_rows() {
                assert_eq!(back.column(c).is_valid(r), t.column(c).is_valid(r));
            }
        }
        // Re-encoding is byte-identical.
        assert_eq!(serialize_table(&back), frame);
    }
    assert!(zero_rows >= 12 && all_null >= 12);
}

#[test]
fn float_bits_survive_the_frame() {
    let values = vec![f64::NAN, -0.0, 0.0, f64::NEG_INFINITY, f64::MIN_POSITIVE, 5e-324];
    let t = Table::from_columns(vec![("f", Column::from_f64(values.clone()))]).unwrap();
    let back = deserialize_table(&serialize_table(&t)).unwrap();
    let got = back.column(0).f64_values().unwrap();
    for (a, b) in values.iter().zip(got) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn bit_flipped_frames_never_crash_decoder() {
    let mut rng = rng(32);
    let mut rejected = 0usize;
    let mut total = 0usize;
    for _ in 0..300 {
        let t = random_table(&mut rng, 30);
        let frame = serialize_table(&t);
        for _ in 0..20 {
            let mut bad = frame.clone();
            for _ in 0..rng.gen_range(1..4) {
                let bit = rng.gen_range(0..bad.len() * 8);
                bad[bit / 8] ^= 1 << (bit % 8);
            }
            if rng.gen_bool(0.2) {
                bad.truncate(rng.gen_range(0..bad.len()));
            }
            total += 1;
            // Either outcome is fine; a decoded table must be internally valid.
            match deserialize_table(&bad) {
                Ok(t) => {
                    for c in 0..t.num_columns() {
                        assert_eq!(t.column(c).len(), t.num_rows());
                    }
                    let _ = serialize_table(&t);
                }
                Err(_) => rejected += 1,
            }
        }
    }
    assert!(rejected > total / 4, "{rejected}/{total}");
}

#[test]
fn decoder_rejects_garbage_prefixes() {
    assert!(deserialize_table(&[]).is_err());
    assert!(deserialize_table(b"CYT").is_err());
    assert!(deserialize_table(b"XXXX\x01\x00").is_err());
    let t = Table::from_columns(vec![("x", Column::from_i64(vec![1, 2]))]).unwrap();
    let mut frame = serialize_table(&t);
    frame.push(0);
    assert!(deserialize_table(&frame).is_err());
}

/// Table that rank `src` addresses to rank `dest` in superstep `step`.
fn payload(src: usize, dest: usize, step: usize, rows: usize) -> Table {
    let mut v = ColumnBuilder::with_capacity(DType::Int64, rows);
    let mut s = ColumnBuilder::with_capacity(DType::Utf8, rows);
    for i in 0..rows {
        v.push_i64((src * 1_000_000 + dest * 10_000 + step * 100 + i) as i64);
        if i % 5 == 0 {
            s.push_null();
        } else {
            s.push_str(&format!("{src}->{dest}#{i}"));
        }
    }
    Table::try_new(
        Schema::new(vec![Field::new("v", DType::Int64), Field::new("s", DType::Utf8)]),
        vec![v.finish(), s.finish()],
    )
    .unwrap()
}

fn rows_for(src: usize, dest: usize) -> usize {
    (src * 7 + dest * 3) % 11
}

fn simulated_all_to_all(world: usize, dest: usize) -> Table {
    let parts: Vec<Table> = (0..world).map(|src| payload(src, dest, 0, rows_for(src, dest))).collect();
    concat(&parts).unwrap()
}

fn exchange(ctx: &WorkerContext) -> tessera::Result<(Table, CommStats)> {
    let w = ctx.world_size();
    let out = (0..w).map(|d| payload(ctx.rank(), d, 0, rows_for(ctx.rank(), d))).collect();
    let got = ctx.all_to_all(out)?;
    Ok((got, ctx.stats()))
}

#[test]
fn all_to_all_matches_sequential_simulation() {
    for world in [1, 2, 4] {
        let results = run_in_process(world, exchange).unwrap();
        let mut sent = 0;
        let mut received = 0;
        for (rank, (got, stats)) in results.iter().enumerate() {
            assert_eq!(*got, simulated_all_to_all(world, rank));
            sent += stats.rows_sent;
            received += stats.rows_received;
            // Self-addressed rows are moved, never framed.
            assert_eq!(stats.frames_sent as usize, world - 1);
        }
        assert_eq!(sent, received);
    }
}

fn run_tcp<T: Send>(world: usize, f: impl Fn(&WorkerContext) -> tessera::Result<T> + Sync) -> Vec<T> {
    let listeners: Vec<TcpListener> = (0..world).map(|_| TcpListener::bind("127.0.0.1:0").unwrap()).collect();
    let addrs: Vec<_> = listeners.iter().map(|l| l.local_addr().unwrap()).collect();
    thread::scope(|s| {
        let handles: Vec<_> = listeners
            .into_iter()
            .enumerate()
            .map(|(rank, listener)| {
                let peers = addrs.clone();
                let f = &f;
                s.spawn(move || {
                    let mut cfg = ContextConfig::new(world, rank, TransportKind::TcpListener { peers, listener });
                    cfg.recv_timeout = Duration::from_secs(60);
                    let ctx = init_context(cfg)?;
                    let out = f(&ctx)?;
                    ctx.close()?;
                    Ok::<_, Error>(out)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap().unwrap()).collect()
    })
}

#[test]
fn tcp_and_in_process_give_identical_results() {
    let tcp: Vec<Table> = run_tcp(4, |ctx| exchange(ctx).map(|r| r.0));
    let local: Vec<Table> = run_in_process(4, |ctx| exchange(ctx).map(|r| r.0)).unwrap();
    assert_eq!(tcp, local);
}

#[test]
fn tcp_carries_large_frames() {
    let rows = 200_000;
    let results = run_tcp(3, |ctx| {
        let out = (0..3).map(|d| payload(ctx.rank(), d, 1, if d == ctx.rank() { 0 } else { rows })).collect();
        let got = ctx.all_to_all(out)?;
        ctx.barrier()?;
        Ok(got.num_rows())
    });
    assert_eq!(results, vec![2 * rows; 3]);
}

#[test]
fn gather_and_all_gather_collect_in_rank_order() {
    let results = run_in_process(4, |ctx| {
        let mine = payload(ctx.rank(), 0, 0, ctx.rank() + 1);
        let g = ctx.gather(&mine, 2)?;
        let all = ctx.all_gather(&mine)?;
        Ok((g, all))
    })
    .unwrap();
    let expected = concat(&(0..4).map(|r| payload(r, 0, 0, r + 1)).collect::<Vec<_>>()).unwrap();
    for (rank, (g, all)) in results.into_iter().enumerate() {
        assert_eq!(g.is_some(), rank == 2);
        if let Some(g) = g {
            assert_eq!(g, expected);
        }
        assert_eq!(all, expected);
    }
}

#[test]
fn many_supersteps_with_random_sizes_do_not_deadlock() {
    let start = Instant::now();
    let world = 8;
    let steps = 100;
    let results = run_in_process_with_timeout(world, Duration::from_secs(120), |ctx| {
        let mut rng = rng(1000 + ctx.rank() as u64);
        let mut sent_keys = Vec::new();
        let mut received_keys = Vec::new();
        for step in 0..steps {
            // Log-uniform total in [1, 10^5], spread unevenly over destinations.
            let total = 10f64.powf(rng.gen_range(0.0..5.0)) as usize;
            let mut out = Vec::with_capacity(world);
            let mut left = total;
            for d in 0..world {
                let n = if d + 1 == world { left } else { rng.gen_range(0..=left) };
                left -= n;
                out.push(Table::from_columns(vec![(
                    "v",
                    Column::from_i64((0..n).map(|i| ((ctx.rank() * steps + step) * 1_000_000 + d * 100_000 + i) as i64).collect()),
                )])?);
            }
            sent_keys.extend(out.iter().flat_map(|t| t.column(0).i64_values().unwrap().to_vec()));
            let got = ctx.all_to_all(out)?;
            for &k in got.column(0).i64_values().unwrap() {
                // Every received row was addressed to this rank.
                assert_eq!((k as usize / 100_000) % 10, ctx.rank());
                received_keys.push(k);
            }
        }
        Ok((ctx.stats(), sent_keys, received_keys))
    })
    .unwrap();
    let mut sent: Vec<i64> = results.iter().flat_map(|r| r.1.clone()).collect();
    let mut received: Vec<i64> = results.iter().flat_map(|r| r.2.clone()).collect();
    sent.sort_unstable();
    received.sort_unstable();
    assert_eq!(sent, received);
    let rows_sent: u64 = results.iter().map(|r| r.0.rows_sent).sum();
    let rows_received: u64 = results.iter().map(|r| r.0.rows_received).sum();
    assert_eq!(rows_sent, rows_received);
    assert!(start.elapsed() < Duration::from_secs(300));
}

#[test]
fn failing_worker_surfaces_as_error_not_hang() {
    let start = Instant::now();
    let err = run_in_process_with_timeout(3, Duration::from_secs(20), |ctx| {
        if ctx.rank() == 1 {
            return Err(Error::InvalidArgument("worker 1 gives up".into()));
        }
        ctx.all_to_all((0..3).map(|_| payload(0, 0, 0, 1)).collect())?;
        Ok(())
    })
    .unwrap_err();
    assert!(start.elapsed() < Duration::from_secs(15), "{err}");
}

#[test]
fn all_to_all_rejects_wrong_fanout_and_mixed_schemas() {
    let results = run_in_process(2, |ctx| {
        let wrong = ctx.all_to_all(vec![payload(0, 0, 0, 1)]).is_err();
        let t = Table::from_columns(vec![("x", Column::from_f64(vec![1.0]))])?;
        let mixed = ctx.all_to_all(vec![payload(0, 0, 0, 1), t]).is_err();
        Ok((wrong, mixed))
    })
    .unwrap();
    assert!(results.iter().all(|&(a, b)| a && b));
}

#[test]
fn rank_can_be_claimed_once() {
    let hub = InProcessHub::new(2);
    let _a = hub.claim(0, Duration::from_secs(1)).unwrap();
    assert!(matches!(hub.claim(0, Duration::from_secs(1)), Err(Error::RankCollision(0))));
}

#[test]
fn handshake_round_trips() {
    let h = Handshake { rank: 3, world_size: 8 };
    assert_eq!(Handshake::decode(&h.encode()).unwrap(), h);
    let mut bad = h.encode();
    bad[0] = b'X';
    assert!(Handshake::decode(&bad).is_err());
}
