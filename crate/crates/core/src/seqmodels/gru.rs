//! GRU cell and masked sequence encoding.
//!
//! Convention: `z = σ(xW_z + hU_z + b_z)`, `r = σ(xW_r + hU_r + b_r)`,
//! `h̃ = tanh(xW_h + (r∘h)U_h + b_h)`, `h' = (1 − z)∘h + z∘h̃`.

use crate::nncore::{gemm_a_bt_acc, gemm_acc, gemm_at_b_acc, Parameter, Tensor};
use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GruCell {
    pub w_z: Parameter,
    pub u_z: Parameter,
    pub b_z: Parameter,
    pub w_r: Parameter,
    pub u_r: Parameter,
    pub b_r: Parameter,
    pub w_h: Parameter,
    pub u_h: Parameter,
    pub b_h: Parameter,
}

/// Everything [`GruCell::step_backward`] needs from one forward step.
#[derive(Debug, Clone)]
pub struct GruStepCache {
    rows: usize,
    x: Vec<f64>,
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    rh: Vec<f64>,
    hh: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn broadcast(bias: &Parameter, rows: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows * bias.value.len());
    for _ in 0..rows {
        out.extend_from_slice(bias.value.data());
    }
    out
}

fn add_row_sums(grad: &mut Parameter, d: &[f64], k: usize) {
    for row in d.chunks(k) {
        for (g, v) in grad.grad.data_mut().iter_mut().zip(row) {
            *g += v;
        }
    }
}

impl GruCell {
    /// Glorot-initialized weights and zero biases.
    pub fn new(name: &str, n: usize, k: usize, rng: &mut Rng) -> Self {
        let w_z = Parameter::glorot(format!("{name}.W_z"), &[n, k], n, k, rng);
        let u_z = Parameter::glorot(format!("{name}.U_z"), &[k, k], k, k, rng);
        let w_r = Parameter::glorot(format!("{name}.W_r"), &[n, k], n, k, rng);
        let u_r = Parameter::glorot(format!("{name}.U_r"), &[k, k], k, k, rng);
        let w_h = Parameter::glorot(format!("{name}.W_h"), &[n, k], n, k, rng);
        let u_h = Parameter::glorot(format!("{name}.U_h"), &[k, k], k, k, rng);
        GruCell {
            w_z,
            u_z,
            b_z: Parameter::zeros(format!("{name}.b_z"), &[k]),
            w_r,
            u_r,
            b_r: Parameter::zeros(format!("{name}.b_r"), &[k]),
            w_h,
            u_h,
            b_h: Parameter::zeros(format!("{name}.b_h"), &[k]),
        }
    }

    pub fn zeros(name: &str, n: usize, k: usize) -> Self {
        GruCell {
            w_z: Parameter::zeros(format!("{name}.W_z"), &[n, k]),
            u_z: Parameter::zeros(format!("{name}.U_z"), &[k, k]),
            b_z: Parameter::zeros(format!("{name}.b_z"), &[k]),
            w_r: Parameter::zeros(format!("{name}.W_r"), &[n, k]),
            u_r: Parameter::zeros(format!("{name}.U_r"), &[k, k]),
            b_r: Parameter::zeros(format!("{name}.b_r"), &[k]),
            w_h: Parameter::zeros(format!("{name}.W_h"), &[n, k]),
            u_h: Parameter::zeros(format!("{name}.U_h"), &[k, k]),
            b_h: Parameter::zeros(format!("{name}.b_h"), &[k]),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_z.shape()[0]
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_z.shape()[1]
    }

    pub fn parameters(&self) -> Vec<&Parameter> {
        vec![&self.w_z, &self.u_z, &self.b_z, &self.w_r, &self.u_r, &self.b_r, &self.w_h, &self.u_h, &self.b_h]
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        vec![
            &mut self.w_z,
            &mut self.u_z,
            &mut self.b_z,
            &mut self.w_r,
            &mut self.u_r,
            &mut self.b_r,
            &mut self.w_h,
            &mut self.u_h,
            &mut self.b_h,
        ]
    }

    fn check(&self, x: &Tensor, h_prev: &Tensor) -> Result<usize> {
        let (rows, n) = x.expect_rank2("gru_step")?;
        let (hrows, k) = h_prev.expect_rank2("gru_step")?;
        if n != self.input_dim() || k != self.hidden_dim() || hrows != rows {
            return Err(Error::ShapeMismatch {
                op: "gru_step",
                left: x.shape().to_vec(),
                right: h_prev.shape().to_vec(),
            });
        }
        Ok(rows)
    }

    fn pre(&self, x: &[f64], w: &Parameter, h: &[f64], u: &Parameter, b: &Parameter, rows: usize) -> Vec<f64> {
        let (n, k) = (self.input_dim(), self.hidden_dim());
        let mut a = broadcast(b, rows);
        gemm_acc(x, w.value.data(), &mut a, rows, n, k);
        gemm_acc(h, u.value.data(), &mut a, rows, k, k);
        a
    }

    /// One step for a batch: `x: B×n`, `h_prev: B×k` → `B×k`.
    pub fn step(&self, x: &Tensor, h_prev: &Tensor) -> Result<(Tensor, GruStepCache)> {
        let rows = self.check(x, h_prev)?;
        let k = self.hidden_dim();
        let (xd, hp) = (x.data(), h_prev.data());
        let mut z = self.pre(xd, &self.w_z, hp, &self.u_z, &self.b_z, rows);
        z.iter_mut().for_each(|v| *v = sigmoid(*v));
        let mut r = self.pre(xd, &self.w_r, hp, &self.u_r, &self.b_r, rows);
        r.iter_mut().for_each(|v| *v = sigmoid(*v));
        let rh: Vec<f64> = r.iter().zip(hp).map(|(a, b)| a * b).collect();
        let mut hh = self.pre(xd, &self.w_h, &rh, &self.u_h, &self.b_h, rows);
        hh.iter_mut().for_each(|v| *v = v.tanh());
        let h: Vec<f64> = (0..rows * k).map(|i| (1.0 - z[i]) * hp[i] + z[i] * hh[i]).collect();
        let cache = GruStepCache {
            rows,
            x: xd.to_vec(),
            h_prev: hp.to_vec(),
            z,
            r,
            rh,
            hh,
        };
        Ok((Tensor::from_vec(&[rows, k], h)?, cache))
    }

    /// Accumulates parameter gradients for one step given `dh = ∂L/∂h'` and
    /// returns `(∂L/∂x, ∂L/∂h_prev)`; `∂L/∂x` only when `need_dx`.
    pub fn step_backward(&mut self, c: &GruStepCache, dh: &[f64], need_dx: bool) -> (Option<Vec<f64>>, Vec<f64>) {
        let (n, k, rows) = (self.input_dim(), self.hidden_dim(), c.rows);
        let len = rows * k;
        let mut dh_prev = vec![0.0; len];
        let mut da_z = vec![0.0; len];
        let mut da_r = vec![0.0; len];
        let mut da_h = vec![0.0; len];
        for i in 0..len {
            let d = dh[i];
            dh_prev[i] = d * (1.0 - c.z[i]);
            da_z[i] = d * (c.hh[i] - c.h_prev[i]) * c.z[i] * (1.0 - c.z[i]);
            da_h[i] = d * c.z[i] * (1.0 - c.hh[i] * c.hh[i]);
        }
        gemm_at_b_acc(&c.rh, &da_h, self.u_h.grad.data_mut(), rows, k, k);
        let mut drh = vec![0.0; len];
        gemm_a_bt_acc(&da_h, self.u_h.value.data(), &mut drh, rows, k, k);
        for i in 0..len {
            dh_prev[i] += drh[i] * c.r[i];
            da_r[i] = drh[i] * c.h_prev[i] * c.r[i] * (1.0 - c.r[i]);
        }

        for (da, w, u, b) in [
            (&da_z, &mut self.w_z, Some(&mut self.u_z), &mut self.b_z),
            (&da_r, &mut self.w_r, Some(&mut self.u_r), &mut self.b_r),
            (&da_h, &mut self.w_h, None, &mut self.b_h),
        ] {
            gemm_at_b_acc(&c.x, da, w.grad.data_mut(), rows, n, k);
            add_row_sums(b, da, k);
            if let Some(u) = u {
                gemm_at_b_acc(&c.h_prev, da, u.grad.data_mut(), rows, k, k);
                gemm_a_bt_acc(da, u.value.data(), &mut dh_prev, rows, k, k);
            }
        }
        let dx = need_dx.then(|| {
            let mut dx = vec![0.0; rows * n];
            for (da, w) in [(&da_z, &self.w_z), (&da_r, &self.w_r), (&da_h, &self.w_h)] {
                gemm_a_bt_acc(da, w.value.data(), &mut dx, rows, k, n);
            }
            dx
        });
        (dx, dh_prev)
    }
}

/// Forward-only convenience wrapper around [`GruCell::step`].
pub fn gru_step(cell: &GruCell, x: &Tensor, h_prev: &Tensor) -> Result<Tensor> {
    cell.step(x, h_prev).map(|(h, _)| h)
}

/// Per-time-step row mask: `mask[t][row]` is true for real (unpadded) steps.
pub type StepMask = Vec<Vec<bool>>;

#[derive(Debug, Clone)]
pub struct EncodedSequence {
    /// One `B×k` (or `B×2k` when bidirectional) tensor per time step.
    pub outputs: Vec<Tensor>,
    /// Forward state after the last step, concatenated with the backward
    /// state after the first step when bidirectional.
    pub final_state: Tensor,
}

#[derive(Debug, Clone)]
struct DirectionCache {
    /// Step caches in processing order, `None` for fully masked steps.
    steps: Vec<Option<GruStepCache>>,
}

#[derive(Debug, Clone)]
pub struct SequenceCache {
    rows: usize,
    mask: StepMask,
    forward: DirectionCache,
    backward: Option<DirectionCache>,
}

fn check_sequence(cell: &GruCell, inputs: &[Tensor], mask: &[Vec<bool>]) -> Result<usize> {
    if inputs.len() != mask.len() {
        return Err(Error::ShapeMismatch {
            op: "encode_sequence mask",
            left: vec![inputs.len()],
            right: vec![mask.len()],
        });
    }
    let rows = match inputs.first() {
        Some(x) => x.expect_rank2("encode_sequence")?.0,
        None => return Err(Error::invalid("encode_sequence needs at least one step")),
    };
    for (x, m) in inputs.iter().zip(mask) {
        if x.shape() != [rows, cell.input_dim()] || m.len() != rows {
            return Err(Error::ShapeMismatch {
                op: "encode_sequence",
                left: vec![rows, cell.input_dim()],
                right: x.shape().to_vec(),
            });
        }
    }
    Ok(rows)
}

/// Runs one direction; returns the state after each step, indexed by time.
fn run_direction(cell: &GruCell, inputs: &[Tensor], mask: &[Vec<bool>], reverse: bool) -> Result<(Vec<Tensor>, Tensor, DirectionCache)> {
    let rows = inputs[0].rows();
    let k = cell.hidden_dim();
    let steps = inputs.len();
    let mut h = Tensor::zeros(&[rows, k]);
    let mut states = vec![Tensor::zeros(&[rows, k]); steps];
    let mut caches = Vec::with_capacity(steps);
    for i in 0..steps {
        let t = if reverse { steps - 1 - i } else { i };
        if mask[t].iter().any(|&m| m) {
            let (h_new, cache) = cell.step(&inputs[t], &h)?;
            for (row, &m) in mask[t].iter().enumerate() {
                if m {
                    h.row_mut(row).copy_from_slice(h_new.row(row));
                }
            }
            caches.push(Some(cache));
        } else {
            caches.push(None);
        }
        states[t] = h.clone();
    }
    Ok((states, h, DirectionCache { steps: caches }))
}

/// Encodes `inputs` (one `B×n` tensor per step). Masked steps leave the
/// state unchanged; a fully padded row yields zero outputs.
pub fn encode_sequence(
    forward: &GruCell,
    backward: Option<&GruCell>,
    inputs: &[Tensor],
    mask: &[Vec<bool>],
) -> Result<(EncodedSequence, SequenceCache)> {
    let rows = check_sequence(forward, inputs, mask)?;
    let (fwd_states, fwd_final, fwd_cache) = run_direction(forward, inputs, mask, false)?;
    let Some(bcell) = backward else {
        return Ok((
            EncodedSequence {
                outputs: fwd_states,
                final_state: fwd_final,
            },
            SequenceCache {
                rows,
                mask: mask.to_vec(),
                forward: fwd_cache,
                backward: None,
            },
        ));
    };
    check_sequence(bcell, inputs, mask)?;
    let (bwd_states, bwd_final, bwd_cache) = run_direction(bcell, inputs, mask, true)?;
    let outputs = fwd_states
        .iter()
        .zip(&bwd_states)
        .map(|(f, b)| concat_cols(&[f, b]))
        .collect();
    Ok((
        EncodedSequence {
            outputs,
            final_state: concat_cols(&[&fwd_final, &bwd_final]),
        },
        SequenceCache {
            rows,
            mask: mask.to_vec(),
            forward: fwd_cache,
            backward: Some(bwd_cache),
        },
    ))
}

/// Column-wise concatenation of rank-2 tensors with equal row counts.
pub fn concat_cols(parts: &[&Tensor]) -> Tensor {
    let rows = parts.first().map_or(0, |p| p.rows());
    let width: usize = parts.iter().map(|p| p.cols()).sum();
    let mut data = Vec::with_capacity(rows * width);
    for r in 0..rows {
        for p in parts {
            data.extend_from_slice(p.row(r));
        }
    }
    Tensor::from_vec(&[rows, width], data).expect("consistent shape")
}

/// Splits the columns of `t` into consecutive blocks of the given widths.
pub fn split_cols(t: &Tensor, widths: &[usize]) -> Vec<Tensor> {
    let rows = t.rows();
    let mut out: Vec<Vec<f64>> = widths.iter().map(|w| Vec::with_capacity(rows * w)).collect();
    for r in 0..rows {
        let mut offset = 0;
        for (o, &w) in out.iter_mut().zip(widths) {
            o.extend_from_slice(&t.row(r)[offset..offset + w]);
            offset += w;
        }
    }
    out.into_iter()
        .zip(widths)
        .map(|(d, &w)| Tensor::from_vec(&[rows, w], d).expect("consistent shape"))
        .collect()
}

fn backprop_direction(
    cell: &mut GruCell,
    cache: &DirectionCache,
    mask: &[Vec<bool>],
    d_states: Option<&[Tensor]>,
    d_final: Option<&Tensor>,
    rows: usize,
    reverse: bool,
    need_dx: bool,
) -> Option<Vec<Tensor>> {
    let (n, k) = (cell.input_dim(), cell.hidden_dim());
    let steps = mask.len();
    let mut carry = match d_final {
        Some(d) => d.data().to_vec(),
        None => vec![0.0; rows * k],
    };
    let mut dxs: Vec<Tensor> = if need_dx {
        vec![Tensor::zeros(&[rows, n]); steps]
    } else {
        Vec::new()
    };
    for i in (0..steps).rev() {
        let t = if reverse { steps - 1 - i } else { i };
        if let Some(d) = d_states {
            for (c, v) in carry.iter_mut().zip(d[t].data()) {
                *c += v;
            }
        }
        let Some(step) = &cache.steps[i] else { continue };
        let mut d_new = vec![0.0; rows * k];
        for (row, &m) in mask[t].iter().enumerate() {
            if m {
                let range = row * k..(row + 1) * k;
                d_new[range.clone()].copy_from_slice(&carry[range.clone()]);
                carry[range].iter_mut().for_each(|v| *v = 0.0);
            }
        }
        let (dx, dh_prev) = cell.step_backward(step, &d_new, need_dx);
        for (c, v) in carry.iter_mut().zip(&dh_prev) {
            *c += v;
        }
        if let Some(dx) = dx {
            dxs[t] = Tensor::from_vec(&[rows, n], dx).expect("consistent shape");
        }
    }
    need_dx.then_some(dxs)
}

/// Backward pass of [`encode_sequence`]. `d_outputs` and `d_final` have the
/// shapes of the corresponding forward results; returns per-step input
/// gradients when `need_dx`.
pub fn encode_sequence_backward(
    forward: &mut GruCell,
    backward: Option<&mut GruCell>,
    cache: &SequenceCache,
    d_outputs: Option<&[Tensor]>,
    d_final: Option<&Tensor>,
    need_dx: bool,
) -> Result<Option<Vec<Tensor>>> {
    let rows = cache.rows;
    let k = forward.hidden_dim();
    match (backward, &cache.backward) {
        (None, None) => Ok(backprop_direction(forward, &cache.forward, &cache.mask, d_outputs, d_final, rows, false, need_dx)),
        (Some(bcell), Some(bcache)) => {
            let kb = bcell.hidden_dim();
            let (df_out, db_out): (Option<Vec<Tensor>>, Option<Vec<Tensor>>) = match d_outputs {
                Some(d) => {
                    let (f, b) = d
                        .iter()
                        .map(|t| {
                            let mut parts = split_cols(t, &[k, kb]).into_iter();
                            (parts.next().expect("two parts"), parts.next().expect("two parts"))
                        })
                        .unzip();
                    (Some(f), Some(b))
                }
                None => (None, None),
            };
            let (df_fin, db_fin) = match d_final {
                Some(d) => {
                    let mut parts = split_cols(d, &[k, kb]).into_iter();
                    (Some(parts.next().expect("two parts")), Some(parts.next().expect("two parts")))
                }
                None => (None, None),
            };
            let dx_f = backprop_direction(forward, &cache.forward, &cache.mask, df_out.as_deref(), df_fin.as_ref(), rows, false, need_dx);
            let dx_b = backprop_direction(bcell, bcache, &cache.mask, db_out.as_deref(), db_fin.as_ref(), rows, true, need_dx);
            Ok(match (dx_f, dx_b) {
                (Some(mut f), Some(b)) => {
                    for (a, b) in f.iter_mut().zip(&b) {
                        a.add_assign(b)?;
                    }
                    Some(f)
                }
                _ => None,
            })
        }
        _ => Err(Error::invalid("encode_sequence_backward: direction mismatch with the forward pass")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_inputs(steps: usize, rows: usize, n: usize, rng: &mut Rng) -> Vec<Tensor> {
        (0..steps).map(|_| Tensor::uniform(&[rows, n], 1.0, rng)).collect()
    }

    #[test]
    fn zero_weights_halve_the_state() {
        let cell = GruCell::zeros("g", 3, 2);
        let x = Tensor::from_rows(&[vec![1.0, -2.0, 0.5]]).unwrap();
        let h = Tensor::from_rows(&[vec![0.8, -0.4]]).unwrap();
        let out = gru_step(&cell, &x, &h).unwrap();
        assert_eq!(out.data(), &[0.4, -0.2]);
        let zero = gru_step(&cell, &x, &Tensor::zeros(&[1, 2])).unwrap();
        assert_eq!(zero.data(), &[0.0, 0.0]);
    }

    #[test]
    fn step_matches_scalar_oracle() {
        let mut rng = Rng::new(4);
        let cell = GruCell::new("g", 2, 2, &mut rng);
        let x = [0.3, -0.7];
        let h = [0.1, 0.5];
        let get = |p: &Parameter, i: usize, j: usize| p.value.data()[i * 2 + j];
        let mut expect = [0.0; 2];
        let sig = |w: &Parameter, u: &Parameter, j: usize| sigmoid((0..2).map(|i| x[i] * get(w, i, j) + h[i] * get(u, i, j)).sum::<f64>());
        let r = [sig(&cell.w_r, &cell.u_r, 0), sig(&cell.w_r, &cell.u_r, 1)];
        let rh = [r[0] * h[0], r[1] * h[1]];
        for (j, e) in expect.iter_mut().enumerate() {
            let z = sig(&cell.w_z, &cell.u_z, j);
            let hh = (0..2).map(|i| x[i] * get(&cell.w_h, i, j) + rh[i] * get(&cell.u_h, i, j)).sum::<f64>().tanh();
            *e = (1.0 - z) * h[j] + z * hh;
        }
        let out = gru_step(&cell, &Tensor::from_vec(&[1, 2], x.to_vec()).unwrap(), &Tensor::from_vec(&[1, 2], h.to_vec()).unwrap()).unwrap();
        for (a, b) in out.data().iter().zip(&expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn shape_errors() {
        let cell = GruCell::zeros("g", 3, 2);
        assert!(gru_step(&cell, &Tensor::zeros(&[1, 2]), &Tensor::zeros(&[1, 2])).is_err());
        assert!(gru_step(&cell, &Tensor::zeros(&[2, 3]), &Tensor::zeros(&[1, 2])).is_err());
    }

    #[test]
    fn single_step_sequence_equals_step() {
        let mut rng = Rng::new(1);
        let cell = GruCell::new("g", 3, 4, &mut rng);
        let inputs = random_inputs(1, 2, 3, &mut rng);
        let (enc, _) = encode_sequence(&cell, None, &inputs, &[vec![true, true]]).unwrap();
        let direct = gru_step(&cell, &inputs[0], &Tensor::zeros(&[2, 4])).unwrap();
        assert_eq!(enc.outputs[0], direct);
        assert_eq!(enc.final_state, direct);
    }

    #[test]
    fn padding_freezes_state() {
        let mut rng = Rng::new(2);
        let f = GruCell::new("f", 3, 4, &mut rng);
        let b = GruCell::new("b", 3, 4, &mut rng);
        let inputs = random_inputs(5, 2, 3, &mut rng);
        let short_mask = vec![vec![true, true]; 3];
        let (short, _) = encode_sequence(&f, Some(&b), &inputs[..3], &short_mask).unwrap();
        let mut long_mask = short_mask.clone();
        long_mask.extend(vec![vec![false, false]; 2]);
        let (long, _) = encode_sequence(&f, Some(&b), &inputs, &long_mask).unwrap();
        assert_eq!(short.final_state, long.final_state);
        assert_eq!(long.final_state.cols(), 8);
        for t in 0..3 {
            assert_eq!(short.outputs[t], long.outputs[t]);
        }
    }

    #[test]
    fn fully_padded_row_is_zero() {
        let mut rng = Rng::new(3);
        let f = GruCell::new("f", 2, 3, &mut rng);
        let inputs = random_inputs(3, 2, 2, &mut rng);
        let mask = vec![vec![true, false]; 3];
        let (enc, _) = encode_sequence(&f, None, &inputs, &mask).unwrap();
        for out in &enc.outputs {
            assert!(out.row(1).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn concat_split_round_trip() {
        let a = Tensor::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let b = Tensor::from_rows(&[vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let c = concat_cols(&[&a, &b]);
        assert_eq!(c.data(), &[1.0, 3.0, 4.0, 2.0, 5.0, 6.0]);
        let parts = split_cols(&c, &[1, 2]);
        assert_eq!(parts[0], a);
        assert_eq!(parts[1], b);
    }
}
