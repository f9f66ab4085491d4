//! Machine states and the measurement maps.

use std::hash::{Hash, Hasher};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::layout::Layout;
use super::qvec::QVec;
use crate::error::{Error, Result};
use crate::lang::ast::VarKind;

/// Measurement branches below this probability are dropped.
pub const MIN_BRANCH_PROB: f64 = 1e-12;
/// Amplitude resolution used when comparing states for merging and memoization.
pub const QUANTUM: f64 = 1e-12;

/// A classical store (one slot per declared classical variable) paired
/// with a normalized quantum state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineState {
    pub store: Vec<i64>,
    pub qvec: QVec,
}

/// Hashable identity of a state with amplitudes quantized at [`QUANTUM`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey {
    pub store: Vec<i64>,
    pub amps: Vec<(u64, i64, i64)>,
}

impl MachineState {
    /// All-zero store and the basis state |0…0⟩.
    pub fn zero(layout: &Layout) -> Self {
        MachineState {
            store: vec![0; layout.vars().len()],
            qvec: QVec::basis(0),
        }
    }

    pub fn key(&self) -> StateKey {
        StateKey {
            store: self.store.clone(),
            amps: quantize(&self.qvec),
        }
    }

    /// Hash of the quantized state, for cheap bucketing.
    pub fn key_hash(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.key().hash(&mut h);
        h.finish()
    }

    pub fn with_var(&self, slot: usize, v: i64) -> Self {
        let mut s = self.clone();
        s.store[slot] = v;
        s
    }

    pub fn check(&self, layout: &Layout) -> Result<()> {
        if self.store.len() != layout.vars().len() {
            return Err(Error::State(format!(
                "store has {} slots, layout declares {}",
                self.store.len(),
                layout.vars().len()
            )));
        }
        for (i, (name, k)) in layout.vars().iter().enumerate() {
            if *k == VarKind::Bool && !(0..=1).contains(&self.store[i]) {
                return Err(Error::State(format!("bool `{name}` holds {}", self.store[i])));
            }
        }
        self.qvec.check_layout(layout)?;
        let n = self.qvec.norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::State(format!("state vector has norm {n}")));
        }
        Ok(())
    }
}

/// Quantized amplitudes with the global phase removed: the first entry of
/// magnitude above `1e-6` is rotated onto the positive real axis, so states
/// equal up to phase share a key.
pub fn quantize(v: &QVec) -> Vec<(u64, i64, i64)> {
    let phase = v
        .entries()
        .iter()
        .find(|(_, a)| a.norm() > 1e-6)
        .map_or(Complex64::new(1.0, 0.0), |(_, a)| a.conj() / a.norm());
    v.entries()
        .iter()
        .map(|(i, a)| {
            let a = a * phase;
            (*i, (a.re / QUANTUM).round() as i64, (a.im / QUANTUM).round() as i64)
        })
        .filter(|(_, r, m)| *r != 0 || *m != 0)
        .collect()
}

/// One measurement branch: outcome bit, probability and post-state.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub outcome: bool,
    pub prob: f64,
    pub state: MachineState,
}

/// Measures register `reg` into slot `var`. With `zero_test` the outcome
/// is 0 iff the register reads 0 (any dimension); otherwise the register
/// must be two-dimensional and the outcome is its value.
pub fn measure(layout: &Layout, reg: usize, var: usize, zero_test: bool, s: &MachineState) -> Result<Vec<Branch>> {
    if !zero_test && layout.reg_dim(reg) != 2 {
        return Err(Error::Dimension(format!(
            "meas on register `{}` of dimension {}",
            layout.regs()[reg].0,
            layout.reg_dim(reg)
        )));
    }
    let (zero, one) = s.qvec.split(|i| layout.digit(i, reg) == 0);
    let total = s.qvec.norm_sqr();
    let mut out = Vec::with_capacity(2);
    for (bit, part) in [(false, zero), (true, one)] {
        let p = part.norm_sqr() / total;
        if p < MIN_BRANCH_PROB {
            continue;
        }
        out.push(Branch {
            outcome: bit,
            prob: p,
            state: MachineState {
                store: {
                    let mut st = s.store.clone();
                    st[var] = bit as i64;
                    st
                },
                qvec: part.normalized(),
            },
        });
    }
    // Renormalize after dropping a negligible branch.
    let kept: f64 = out.iter().map(|b| b.prob).sum();
    for b in &mut out {
        b.prob /= kept;
    }
    Ok(out)
}

/// Parses a state literal `{"store": {...}, "amps": [[re, im], ...]}`.
/// Instead of `amps`, `"basis": k` or `"preset": "zero" | "plus"` may be given.
pub fn state_from_json(v: &Value, layout: &Layout) -> Result<MachineState> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::State("state literal must be a JSON object".into()))?;
    let mut st = MachineState::zero(layout);
    if let Some(store) = obj.get("store") {
        let store = store
            .as_object()
            .ok_or_else(|| Error::State("`store` must be an object".into()))?;
        for (name, val) in store {
            let slot = layout
                .var_slot(name)
                .ok_or_else(|| Error::State(format!("unknown classical variable `{name}`")))?;
            let n = match val {
                Value::Bool(b) => *b as i64,
                Value::Number(n) => n
                    .as_i64()
                    .ok_or_else(|| Error::State(format!("`{name}` must be an integer")))?,
                _ => return Err(Error::State(format!("bad value for `{name}`"))),
            };
            st.store[slot] = n;
        }
    }
    if let Some(amps) = obj.get("amps") {
        let arr = amps
            .as_array()
            .ok_or_else(|| Error::State("`amps` must be an array".into()))?;
        if arr.len() as u64 != layout.dim() {
            return Err(Error::State(format!(
                "`amps` has {} entries, the registers span {}",
                arr.len(),
                layout.dim()
            )));
        }
        let dense = arr
            .iter()
            .map(|p| match p.as_array().map(|x| x.as_slice()) {
                Some([re, im]) => match (re.as_f64(), im.as_f64()) {
                    (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
                    _ => Err(Error::State("amplitude entries must be numbers".into())),
                },
                _ => Err(Error::State("amplitudes are [re, im] pairs".into())),
            })
            .collect::<Result<Vec<_>>>()?;
        st.qvec = QVec::from_dense(&dense);
    } else if let Some(b) = obj.get("basis") {
        let b = b
            .as_u64()
            .ok_or_else(|| Error::State("`basis` must be a non-negative integer".into()))?;
        st.qvec = QVec::basis(b);
    } else if let Some(p) = obj.get("preset") {
        st.qvec = match p.as_str() {
            Some("zero") => QVec::basis(0),
            Some("plus") => uniform(layout)?,
            _ => return Err(Error::State("`preset` must be \"zero\" or \"plus\"".into())),
        };
    }
    st.check(layout)?;
    Ok(st)
}

fn uniform(layout: &Layout) -> Result<QVec> {
    if layout.dim() > 1 << 20 {
        return Err(Error::Dimension("uniform preset limited to dimension 2^20".into()));
    }
    let a = Complex64::new(1.0 / (layout.dim() as f64).sqrt(), 0.0);
    Ok(QVec::from_entries((0..layout.dim()).map(|i| (i, a)).collect()))
}

pub fn state_to_json(s: &MachineState, layout: &Layout) -> Value {
    let mut store = Map::new();
    for (i, (name, k)) in layout.vars().iter().enumerate() {
        let v = match k {
            VarKind::Bool => Value::Bool(s.store[i] != 0),
            _ => json!(s.store[i]),
        };
        store.insert(name.clone(), v);
    }
    let amps: Vec<Value> = s
        .qvec
        .entries()
        .iter()
        .map(|(i, a)| json!([i, a.re, a.im]))
        .collect();
    json!({ "store": store, "sparse_amps": amps })
}
