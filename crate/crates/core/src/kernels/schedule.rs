//! MAC-and-load schedules for a block of up to 4 pixels x 2 output channels.
//!
//! Iteration `k` issues the MACs channel-major, `(p, 0)` for every pixel then
//! `(p, 1)`. Activation word `k+1` of pixel `p` is fetched by the last MAC that
//! reads slot `a_p`. With two channels, `W1(k)` is fetched during the channel-0
//! MACs and `W0(k+1)` after the last channel-0 MAC. A single channel
//! double-buffers its weight word across `w0`/`w1`. Loads that find no free MAC
//! in their window get an extra MAL with `rd = x0`.

use crate::isa::{Load, MalSelect, ACT_SLOTS, WEIGHT_SLOTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MalStep {
    /// Accumulator `(pixel, channel)` the MAC adds into; `None` discards it.
    pub acc: Option<(usize, usize)>,
    pub sel: MalSelect,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub pixels: usize,
    pub channels: usize,
    pub words: usize,
    pub steps: Vec<MalStep>,
    /// `(pixel, word)` in the order the activation stream delivers them.
    pub act_order: Vec<(usize, usize)>,
    /// `(channel, word)` in weight-stream order.
    pub weight_order: Vec<(usize, usize)>,
}

impl Schedule {
    pub fn mac_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.acc.is_some()).count()
    }

    pub fn load_only_steps(&self) -> usize {
        self.steps.len() - self.mac_steps()
    }
}

#[derive(Clone, Copy)]
enum Want {
    Act(usize, usize),
    Weight { slot: usize, ch: usize, word: usize },
}

pub fn build(pixels: usize, channels: usize, words: usize) -> Schedule {
    assert!((1..=ACT_SLOTS).contains(&pixels) && (1..=WEIGHT_SLOTS).contains(&channels));
    let wslot = |ch: usize, k: usize| if channels == 2 { ch } else { k % 2 };
    let mut s = Schedule {
        pixels,
        channels,
        words,
        steps: Vec::new(),
        act_order: Vec::new(),
        weight_order: Vec::new(),
    };
    if words == 0 {
        return s;
    }
    let emit =
        |s: &mut Schedule, acc: Option<(usize, usize)>, a: usize, w: usize, want: Option<Want>| {
            let load = want.map(|x| match x {
                Want::Act(p, k) => {
                    s.act_order.push((p, k));
                    Load::Act
                }
                Want::Weight { slot, ch, word } => {
                    s.weight_order.push((ch, word));
                    Load::Weight(slot as u8)
                }
            });
            let sel = MalSelect {
                act_slot: a as u8,
                weight_slot: w as u8,
                load,
            };
            s.steps.push(MalStep { acc, sel });
        };

    for p in 0..pixels {
        emit(&mut s, None, p, 0, Some(Want::Act(p, 0)));
    }
    emit(
        &mut s,
        None,
        0,
        0,
        Some(Want::Weight {
            slot: wslot(0, 0),
            ch: 0,
            word: 0,
        }),
    );

    let n = pixels * channels;
    for k in 0..words {
        let mut loads: Vec<Option<Want>> = vec![None; n];
        let mut extra: Vec<Vec<Want>> = vec![Vec::new(); n];
        let next = k + 1 < words;
        if next {
            for p in 0..pixels {
                loads[(channels - 1) * pixels + p] = Some(Want::Act(p, k + 1));
            }
        }
        let mut windows = Vec::new();
        if channels == 2 {
            windows.push((
                Want::Weight {
                    slot: 1,
                    ch: 1,
                    word: k,
                },
                0,
                pixels - 1,
            ));
            if next {
                windows.push((
                    Want::Weight {
                        slot: 0,
                        ch: 0,
                        word: k + 1,
                    },
                    pixels - 1,
                    n - 1,
                ));
            }
        } else if next {
            windows.push((
                Want::Weight {
                    slot: wslot(0, k + 1),
                    ch: 0,
                    word: k + 1,
                },
                0,
                n - 1,
            ));
        }
        for (want, lo, hi) in windows {
            match (lo..=hi).find(|&i| loads[i].is_none()) {
                Some(i) => loads[i] = Some(want),
                None => extra[hi].push(want),
            }
        }
        for i in 0..n {
            let (ch, p) = (i / pixels, i % pixels);
            emit(&mut s, Some((p, ch)), p, wslot(ch, k), loads[i]);
            for &want in &extra[i] {
                let a = match want {
                    Want::Act(p, _) => p,
                    Want::Weight { .. } => 0,
                };
                emit(&mut s, None, a, 0, Some(want));
            }
        }
    }
    s
}
