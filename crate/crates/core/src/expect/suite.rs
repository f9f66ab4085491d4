use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::lang::ast::{is_generated_name, VarKind};
use crate::state::{Layout, MachineState, QVec};

/// Largest state space sampled with fully Haar-random vectors.
pub const HAAR_DIM_CAP: u64 = 4096;
/// Range of generated integer values.
pub const INT_RANGE: (i64, i64) = (-2, 10);

/// States on which pointwise inequalities are checked.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSuite {
    #[serde(skip)]
    pub states: Vec<MachineState>,
    pub fixtures: usize,
    pub seed: u64,
}

impl StateSuite {
    /// The fixtures followed by `random` generated states. Deterministic in `seed`.
    pub fn generate(layout: &Layout, fixtures: Vec<MachineState>, random: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_fix = fixtures.len();
        let mut states = fixtures;
        states.extend((0..random).map(|_| random_state(layout, &mut rng)));
        StateSuite {
            states,
            fixtures: n_fix,
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Random normalized vector with independent complex Gaussian entries
/// (Haar-distributed after normalization).
pub fn haar_vector(dim: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-6 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

/// Random store (Booleans uniform, integers uniform in [`INT_RANGE`],
/// generated names zero) and a random quantum state: Haar-random when the
/// space is small, otherwise a random basis state with up to three
/// registers put in a random joint superposition.
pub fn random_state(layout: &Layout, rng: &mut impl Rng) -> MachineState {
    let store = layout
        .vars()
        .iter()
        .map(|(name, kind)| {
            if is_generated_name(name) {
                return 0;
            }
            match kind {
                VarKind::Bool => rng.gen_range(0..=1),
                _ => rng.gen_range(INT_RANGE.0..=INT_RANGE.1),
            }
        })
        .collect();
    let qvec = if layout.dim() <= HAAR_DIM_CAP {
        QVec::from_dense(&haar_vector(layout.dim() as usize, rng))
    } else {
        sparse_random_qvec(layout, 3, rng)
    };
    MachineState { store, qvec }
}

/// A random basis state with up to `max_regs` registers put in a
/// Haar-random joint superposition.
pub fn sparse_random_qvec(layout: &Layout, max_regs: usize, rng: &mut impl Rng) -> QVec {
    let nregs = layout.regs().len();
    let base: u64 = (0..nregs)
        .map(|r| rng.gen_range(0..layout.reg_dim(r) as u64) * layout.stride(r))
        .sum();
    let mut order: Vec<usize> = (0..nregs).collect();
    order.shuffle(rng);
    let mut chosen = Vec::new();
    let mut sub = 1u64;
    for r in order {
        if chosen.len() == max_regs {
            break;
        }
        let d = layout.reg_dim(r) as u64;
        if sub * d <= HAAR_DIM_CAP {
            sub *= d;
            chosen.push(r);
        }
    }
    let cleared = chosen
        .iter()
        .fold(base, |acc, r| acc - layout.digit(base, *r) * layout.stride(*r));
    let amps = haar_vector(sub as usize, rng);
    let entries = amps
        .into_iter()
        .enumerate()
        .map(|(k, a)| {
            let mut k = k as u64;
            let mut idx = cleared;
            for r in chosen.iter().rev() {
                let d = layout.reg_dim(*r) as u64;
                idx += (k % d) * layout.stride(*r);
                k /= d;
            }
            (idx, a)
        })
        .collect();
    QVec::from_entries(entries)
}
