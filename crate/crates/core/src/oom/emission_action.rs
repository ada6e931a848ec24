use nalgebra::{DMatrix, DVector};

use crate::pomdp::{forward::weight_by_emission, TabularPomdp};
use crate::{Error, Result};

/// The m-step emission-action matrix `M_h` of shape `(A^{m-1} O^m) x S`:
/// entry `((a, o), s)` is `P(o_{h:h+m-1} = o | s_h = s, a_{h:h+m-2} = a)`.
///
/// Row encoding: `row = action_index * O^m + obs_index`, where both indices
/// are mixed-radix with the earliest element most significant. Actions are
/// the outer digits, observations the inner ones.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionActionMatrix {
    pub step: usize,
    pub window: usize,
    pub actions: usize,
    pub observations: usize,
    pub matrix: DMatrix<f64>,
}

impl EmissionActionMatrix {
    /// Number of observation windows `O^m` (rows per action block).
    pub fn block_rows(&self) -> usize {
        self.observations.pow(self.window as u32)
    }

    /// Number of action windows `A^{m-1}`.
    pub fn action_blocks(&self) -> usize {
        self.actions.pow(self.window as u32 - 1)
    }

    /// Row for the action window `acts` (length `m-1`) and observation
    /// window `obs` (length `m`).
    pub fn row_index(&self, acts: &[usize], obs: &[usize]) -> usize {
        window_row(self.actions, self.observations, acts, obs)
    }

    /// `M_{h,a}`: the `O^m x S` block of rows sharing action window index `a`.
    pub fn action_block(&self, action_index: usize) -> DMatrix<f64> {
        let n = self.block_rows();
        self.matrix.rows(action_index * n, n).into_owned()
    }
}

pub(crate) fn window_row(actions: usize, observations: usize, acts: &[usize], obs: &[usize]) -> usize {
    let a_idx = acts.iter().fold(0, |acc, &a| acc * actions + a);
    let o_idx = obs.iter().fold(0, |acc, &o| acc * observations + o);
    a_idx * observations.pow(obs.len() as u32) + o_idx
}

/// Decodes a mixed-radix index into `len` digits, most significant first.
pub(crate) fn decode_digits(mut idx: usize, radix: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for d in out.iter_mut().rev() {
        *d = idx % radix;
        idx /= radix;
    }
    out
}

/// Exact `M_h` for a window of `m` steps starting at (0-based) step `h`.
pub fn build_m_step_matrix(model: &TabularPomdp, h: usize, m: usize) -> Result<EmissionActionMatrix> {
    let dims = model.dims();
    if m == 0 || h + m > dims.horizon {
        return Err(Error::WindowOverflow {
            step: h,
            window: m,
            horizon: dims.horizon,
        });
    }
    let (s, a, o) = (dims.states, dims.actions, dims.observations);
    let matrix = if m == 1 {
        model.emis(h).clone()
    } else {
        let block = o.pow(m as u32);
        let blocks = a.pow(m as u32 - 1);
        let mut matrix = DMatrix::zeros(blocks * block, s);
        for a_idx in 0..blocks {
            let acts = decode_digits(a_idx, a, m - 1);
            for state in 0..s {
                let start = DVector::from_fn(s, |i, _| if i == state { 1.0 } else { 0.0 });
                let mut col = vec![0.0; block];
                fill_window(model, h, &acts, 0, start, 0, &mut col);
                for (r, v) in col.into_iter().enumerate() {
                    matrix[(a_idx * block + r, state)] = v;
                }
            }
        }
        matrix
    };
    Ok(EmissionActionMatrix {
        step: h,
        window: m,
        actions: a,
        observations: o,
        matrix,
    })
}

fn fill_window(
    model: &TabularPomdp,
    h: usize,
    acts: &[usize],
    j: usize,
    weight: DVector<f64>,
    code: usize,
    out: &mut [f64],
) {
    let o = model.dims().observations;
    for obs in 0..o {
        let mut w = weight.clone();
        weight_by_emission(model, h + j, obs, &mut w);
        let c = code * o + obs;
        if j == acts.len() {
            out[c] = w.sum();
        } else {
            let next = model.trans(h + j, acts[j]) * &w;
            fill_window(model, h, acts, j + 1, next, c, out);
        }
    }
}
