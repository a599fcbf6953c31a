//! Discrete-event replay of a tile stream on one or two cores.
//!
//! One programming controller serves the cores in FIFO order. A core that
//! goes idle takes the next tile and queues its programming. The optical
//! engine computes tiles strictly in stream order, each on the core holding
//! it. Times are integers in an arbitrary unit.

#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Ev {
    Idle(usize),
    ProgDone(usize, usize),
    ComputeDone(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Replay {
    pub total: u64,
    pub compute: u64,
}

impl Replay {
    pub fn exposed(&self) -> u64 {
        self.total - self.compute
    }
}

/// `tiles` are `(compute_time, needs_program)`.
pub fn replay(tiles: &[(u64, bool)], cores: usize, t_prog: u64) -> Replay {
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut push = |heap: &mut BinaryHeap<_>, t: u64, ev: Ev| {
        heap.push(Reverse((t, seq, ev)));
        seq += 1;
    };
    for c in 0..cores {
        push(&mut heap, 0, Ev::Idle(c));
    }
    let mut next_assign = 0;
    let mut next_compute = 0;
    let mut ready: Vec<Option<usize>> = vec![None; cores];
    let mut prog_queue: VecDeque<(usize, usize)> = VecDeque::new();
    let mut controller_busy = false;
    let mut engine_busy = false;
    let mut end = 0;

    while let Some(Reverse((now, _, ev))) = heap.pop() {
        match ev {
            Ev::Idle(core) => {
                if next_assign < tiles.len() {
                    let tile = next_assign;
                    next_assign += 1;
                    if tiles[tile].1 {
                        prog_queue.push_back((core, tile));
                    } else {
                        ready[core] = Some(tile);
                    }
                }
            }
            Ev::ProgDone(core, tile) => {
                controller_busy = false;
                ready[core] = Some(tile);
            }
            Ev::ComputeDone(core, _) => {
                engine_busy = false;
                next_compute += 1;
                end = now;
                push(&mut heap, now, Ev::Idle(core));
            }
        }
        if !controller_busy {
            if let Some((core, tile)) = prog_queue.pop_front() {
                controller_busy = true;
                push(&mut heap, now + t_prog, Ev::ProgDone(core, tile));
            }
        }
        if !engine_busy {
            if let Some(core) = ready.iter().position(|r| *r == Some(next_compute)) {
                ready[core] = None;
                engine_busy = true;
                push(
                    &mut heap,
                    now + tiles[next_compute].0,
                    Ev::ComputeDone(core, next_compute),
                );
            }
        }
    }
    assert_eq!(next_compute, tiles.len(), "replay stalled");
    Replay {
        total: end,
        compute: tiles.iter().map(|t| t.0).sum(),
    }
}
