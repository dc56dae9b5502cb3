//! Initial stores (and, when sampling, final needs) for the checker.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::ast::{ExtNat, NeedState, State, Universe};
use crate::predicate::Domain;

/// Every store over the domain's values, at every sampled time.
pub(super) fn exhaustive<'a>(u: &'a Universe, d: &'a Domain) -> impl Iterator<Item = State> + 'a {
    let locs = u.locations();
    let radix = d.scalar_values.len();
    let mut digits = vec![0usize; locs.len()];
    let mut time = 0usize;
    let mut done = false;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let mut s = State::zeroed(u);
        for (loc, &k) in locs.iter().zip(&digits) {
            s.set(loc, d.scalar_values[k]);
        }
        s.time = d.time_samples[time];
        // Advance the mixed-radix counter.
        done = true;
        for k in digits.iter_mut() {
            *k += 1;
            if *k < radix {
                done = false;
                break;
            }
            *k = 0;
        }
        if done {
            time += 1;
            done = time == d.time_samples.len();
        }
        Some(s)
    })
}

/// A point of the enumerated part of a sampled check.
#[derive(Debug, Clone)]
struct GridPoint {
    scalars: BTreeMap<String, i64>,
    time: ExtNat,
    need: Option<NeedState>,
}

fn grid(u: &Universe, d: &Domain, needs: bool) -> Vec<GridPoint> {
    let scalar_u = Universe::new(&u.scalars.iter().map(String::as_str).collect::<Vec<_>>(), &[], 1);
    let mut out = Vec::new();
    let locs = u.locations();
    let vectors: Vec<Option<NeedState>> = if needs {
        (0..1u64 << locs.len())
            .map(|bits| {
                let mut n = NeedState::uniform(u, false);
                for (k, loc) in locs.iter().enumerate() {
                    n.set(loc, bits >> k & 1 == 1);
                }
                Some(n)
            })
            .collect()
    } else {
        vec![None]
    };
    for s in exhaustive(&scalar_u, d) {
        for v in &vectors {
            out.push(GridPoint {
                scalars: s.scalars.clone(),
                time: s.time,
                need: v.clone(),
            });
        }
    }
    out
}

/// Size of the enumerated part of a sampled check; zero when the
/// combinations do not fit in `samples` and everything is drawn.
pub(super) fn grid_size(u: &Universe, d: &Domain, samples: u64, needs: bool) -> u64 {
    let combos = (d.scalar_values.len() as u64)
        .checked_pow(u.scalars.len() as u32)
        .and_then(|n| n.checked_mul(d.time_samples.len() as u64))
        .and_then(|n| {
            if needs {
                n.checked_mul(1u64.checked_shl(u.location_count() as u32)?)
            } else {
                Some(n)
            }
        });
    match combos {
        Some(c) if c <= samples => c,
        _ => 0,
    }
}

/// An endless stream of (initial store, final needs) pairs.
///
/// When every combination of scalar values, times and (if `needs`) final
/// need vectors fits in `samples`, draws cycle through the combinations,
/// each getting freshly drawn array contents; a universe without arrays
/// visits each combination once. Otherwise everything is drawn.
pub(super) fn sampled<'a>(
    u: &'a Universe,
    d: &'a Domain,
    samples: u64,
    needs: bool,
    mut rng: ChaCha8Rng,
) -> impl Iterator<Item = (State, Option<NeedState>)> + 'a {
    let points = if grid_size(u, d, samples, needs) > 0 {
        grid(u, d, needs)
    } else {
        Vec::new()
    };
    let once = u.arrays.is_empty();
    let locs = u.locations();
    let mut k = 0usize;
    std::iter::from_fn(move || {
        let mut s = State::zeroed(u);
        let need = if points.is_empty() {
            for v in s.scalars.values_mut() {
                *v = *d.scalar_values.choose(&mut rng)?;
            }
            s.time = *d.time_samples.choose(&mut rng)?;
            needs.then(|| {
                let mut n = NeedState::uniform(u, false);
                for loc in &locs {
                    n.set(loc, rng.gen_bool(0.5));
                }
                n
            })
        } else {
            if once && k == points.len() {
                return None;
            }
            let p = &points[k % points.len()];
            k += 1;
            s.scalars = p.scalars.clone();
            s.time = p.time;
            p.need.clone()
        };
        draw_arrays(&mut s, u, d, &mut rng);
        Some((s, need))
    })
}

fn factorial(n: i64) -> i64 {
    (1..=n).product()
}

/// Half the draws are factorial-shaped from a start index taken from a
/// scalar (`a(j) = c × j! / i0!` for `j ≥ i0`), with an occasional
/// perturbed cell; the rest are uniform over the domain's values.
fn draw_arrays(s: &mut State, u: &Universe, d: &Domain, rng: &mut ChaCha8Rng) {
    let n = u.bound as i64;
    let starts: Vec<i64> = s.scalars.values().copied().filter(|v| (0..n).contains(v)).collect();
    for cells in s.arrays.values_mut() {
        if rng.gen_bool(0.5) {
            let i0 = match starts.choose(rng) {
                Some(&i) if rng.gen_bool(0.75) => i,
                _ => rng.gen_range(0..n),
            };
            let c = rng.gen_range(1..=3);
            for (j, cell) in cells.iter_mut().enumerate() {
                let j = j as i64;
                *cell = if j >= i0 {
                    c * (factorial(j) / factorial(i0))
                } else {
                    *d.scalar_values.choose(rng).unwrap_or(&0)
                };
            }
            if rng.gen_bool(0.25) {
                let k = rng.gen_range(0..cells.len());
                cells[k] += if rng.gen_bool(0.5) { 1 } else { -1 };
            }
        } else {
            for cell in cells.iter_mut() {
                *cell = *d.scalar_values.choose(rng).unwrap_or(&0);
            }
        }
    }
}
