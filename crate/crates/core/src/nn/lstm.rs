//! Long short-term memory layer with backpropagation through time.
//!
//! Gates are stacked row-wise in the order input, forget, cell candidate, output:
//! rows `[0, h)` are the input gate, `[h, 2h)` forget, `[2h, 3h)` candidate and
//! `[3h, 4h)` output. With `z = W x_t + U h_{t-1} + b`:
//!
//! ```text
//! i = σ(z_i)   f = σ(z_f)   g = tanh(z_g)   o = σ(z_o)
//! c_t = f ⊙ c_{t-1} + i ⊙ g
//! h_t = o ⊙ tanh(c_t)
//! ```

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::init::glorot_uniform;
use crate::nn::param::Param;
use crate::nn::tensor::{affine, affine_transpose_acc, outer_acc, sigmoid, Real, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lstm<F> {
    pub w_input: Param<F>,
    pub w_recurrent: Param<F>,
    pub bias: Param<F>,
    pub direction: Direction,
}

/// Per-step activations needed by the backward pass, stored in processing order.
#[derive(Clone, Debug)]
pub struct LstmCache<F> {
    gates: Vec<Vec<F>>,
    cells: Vec<Vec<F>>,
    tanh_cells: Vec<Vec<F>>,
}

impl<F: Real> Lstm<F> {
    /// Fresh layer with fan-based uniform weights, zero biases and the forget-gate
    /// bias set to one.
    pub fn new<R: Rng>(
        prefix: &str,
        input_dim: usize,
        hidden: usize,
        direction: Direction,
        rng: &mut R,
    ) -> Self {
        let w = glorot_uniform(&[4 * hidden, input_dim], input_dim, 4 * hidden, rng);
        let u = glorot_uniform(&[4 * hidden, hidden], hidden, 4 * hidden, rng);
        let mut b = Tensor::zeros(&[4 * hidden]);
        b.data_mut()[hidden..2 * hidden].fill(F::one());
        Self::from_parts(prefix, w, u, b, direction).expect("consistent shapes")
    }

    pub fn from_parts(
        prefix: &str,
        w_input: Tensor<F>,
        w_recurrent: Tensor<F>,
        bias: Tensor<F>,
        direction: Direction,
    ) -> Result<Self> {
        let four_h = w_input.rows();
        if !four_h.is_multiple_of(4)
            || w_recurrent.rows() != four_h
            || w_recurrent.cols() * 4 != four_h
            || bias.len() != four_h
        {
            return Err(Error::shape(
                "lstm",
                format!(
                    "W {:?}, U {:?}, b {:?} do not describe a stacked 4-gate cell",
                    w_input.shape(),
                    w_recurrent.shape(),
                    bias.shape()
                ),
            ));
        }
        Ok(Self {
            w_input: Param::new(format!("{prefix}.w_input"), w_input),
            w_recurrent: Param::new(format!("{prefix}.w_recurrent"), w_recurrent),
            bias: Param::new(format!("{prefix}.bias"), bias),
            direction,
        })
    }

    pub fn hidden(&self) -> usize {
        self.w_recurrent.value.cols()
    }

    pub fn input_dim(&self) -> usize {
        self.w_input.value.cols()
    }

    fn order(&self, steps: usize) -> Box<dyn Iterator<Item = usize>> {
        match self.direction {
            Direction::Forward => Box::new(0..steps),
            Direction::Backward => Box::new((0..steps).rev()),
        }
    }

    /// Hidden state at every time step, `[T, h]`, in original time order.
    pub fn forward(&self, x: &Tensor<F>) -> Result<(Tensor<F>, LstmCache<F>)> {
        let (steps, d) = (x.rows(), x.cols());
        let h = self.hidden();
        if d != self.input_dim() {
            return Err(Error::shape("lstm", format!("input width {d} != {}", self.input_dim())));
        }
        if steps == 0 {
            return Err(Error::shape("lstm", "empty sequence"));
        }
        let mut out = Tensor::zeros(&[steps, h]);
        let mut cache = LstmCache {
            gates: Vec::with_capacity(steps),
            cells: Vec::with_capacity(steps),
            tanh_cells: Vec::with_capacity(steps),
        };
        let mut h_prev = vec![F::zero(); h];
        let mut c_prev = vec![F::zero(); h];
        let mut z = vec![F::zero(); 4 * h];
        let mut rec = vec![F::zero(); 4 * h];
        for t in self.order(steps) {
            affine(self.w_input.value.data(), x.row(t), Some(self.bias.value.data()), &mut z);
            affine(self.w_recurrent.value.data(), &h_prev, None, &mut rec);
            let mut gates = vec![F::zero(); 4 * h];
            for j in 0..4 * h {
                let pre = z[j] + rec[j];
                gates[j] = if (2 * h..3 * h).contains(&j) {
                    pre.tanh()
                } else {
                    sigmoid(pre)
                };
            }
            let mut c = vec![F::zero(); h];
            let mut tc = vec![F::zero(); h];
            let row = out.row_mut(t);
            for k in 0..h {
                let (i, f, g, o) = (gates[k], gates[h + k], gates[2 * h + k], gates[3 * h + k]);
                c[k] = f * c_prev[k] + i * g;
                tc[k] = c[k].tanh();
                row[k] = o * tc[k];
            }
            h_prev.copy_from_slice(row);
            c_prev.copy_from_slice(&c);
            cache.gates.push(gates);
            cache.cells.push(c);
            cache.tanh_cells.push(tc);
        }
        Ok((out, cache))
    }

    /// Backpropagation through time. `grad_out` is `[T, h]` in original time order;
    /// returns the input gradient `[T, d]` and accumulates parameter gradients.
    pub fn backward(
        &mut self,
        x: &Tensor<F>,
        out: &Tensor<F>,
        cache: &LstmCache<F>,
        grad_out: &Tensor<F>,
    ) -> Tensor<F> {
        let steps = x.rows();
        let h = self.hidden();
        let mut gx = Tensor::zeros(x.shape());
        let mut dh_next = vec![F::zero(); h];
        let mut dc_next = vec![F::zero(); h];
        let mut dz = vec![F::zero(); 4 * h];
        let zero = vec![F::zero(); h];
        let one = F::one();

        let order: Vec<usize> = self.order(steps).collect();
        for s in (0..steps).rev() {
            let t = order[s];
            let gates = &cache.gates[s];
            let tc = &cache.tanh_cells[s];
            let c_prev: &[F] = if s == 0 { &zero } else { &cache.cells[s - 1] };
            let h_prev: &[F] = if s == 0 { &zero } else { out.row(order[s - 1]) };
            let go = grad_out.row(t);
            for k in 0..h {
                let (i, f, g, o) = (gates[k], gates[h + k], gates[2 * h + k], gates[3 * h + k]);
                let dh = go[k] + dh_next[k];
                let d_o = dh * tc[k];
                let dc = dh * o * (one - tc[k] * tc[k]) + dc_next[k];
                let di = dc * g;
                let dg = dc * i;
                let df = dc * c_prev[k];
                dc_next[k] = dc * f;
                dz[k] = di * i * (one - i);
                dz[h + k] = df * f * (one - f);
                dz[2 * h + k] = dg * (one - g * g);
                dz[3 * h + k] = d_o * o * (one - o);
            }
            outer_acc(self.w_input.grad.data_mut(), &dz, x.row(t));
            outer_acc(self.w_recurrent.grad.data_mut(), &dz, h_prev);
            for (b, &d) in self.bias.grad.data_mut().iter_mut().zip(&dz) {
                *b += d;
            }
            affine_transpose_acc(self.w_input.value.data(), &dz, gx.row_mut(t));
            dh_next.fill(F::zero());
            affine_transpose_acc(self.w_recurrent.value.data(), &dz, &mut dh_next);
        }
        gx
    }

    pub fn params(&self) -> Vec<&Param<F>> {
        vec![&self.w_input, &self.w_recurrent, &self.bias]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<F>> {
        vec![&mut self.w_input, &mut self.w_recurrent, &mut self.bias]
    }
}

/// Bidirectional LSTM: per-step concatenation `[h_fwd_t ; h_bwd_t]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Blstm<F> {
    pub forward: Lstm<F>,
    pub backward: Lstm<F>,
}

#[derive(Clone, Debug)]
pub struct BlstmCache<F> {
    fwd_out: Tensor<F>,
    bwd_out: Tensor<F>,
    fwd: LstmCache<F>,
    bwd: LstmCache<F>,
}

impl<F: Real> Blstm<F> {
    pub fn new<R: Rng>(input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        Self {
            forward: Lstm::new("lstm_fwd", input_dim, hidden, Direction::Forward, rng),
            backward: Lstm::new("lstm_bwd", input_dim, hidden, Direction::Backward, rng),
        }
    }

    pub fn hidden(&self) -> usize {
        self.forward.hidden()
    }

    pub fn forward(&self, x: &Tensor<F>) -> Result<(Tensor<F>, BlstmCache<F>)> {
        if self.forward.hidden() != self.backward.hidden() {
            return Err(Error::shape("blstm", "direction hidden sizes differ"));
        }
        let (fo, fc) = self.forward.forward(x)?;
        let (bo, bc) = self.backward.forward(x)?;
        let h = self.hidden();
        let steps = x.rows();
        let mut out = Tensor::zeros(&[steps, 2 * h]);
        for t in 0..steps {
            let row = out.row_mut(t);
            row[..h].copy_from_slice(fo.row(t));
            row[h..].copy_from_slice(bo.row(t));
        }
        Ok((
            out,
            BlstmCache {
                fwd_out: fo,
                bwd_out: bo,
                fwd: fc,
                bwd: bc,
            },
        ))
    }

    pub fn backward(&mut self, x: &Tensor<F>, cache: &BlstmCache<F>, grad_out: &Tensor<F>) -> Tensor<F> {
        let h = self.hidden();
        let steps = x.rows();
        let mut gf = Tensor::zeros(&[steps, h]);
        let mut gb = Tensor::zeros(&[steps, h]);
        for t in 0..steps {
            let g = grad_out.row(t);
            gf.row_mut(t).copy_from_slice(&g[..h]);
            gb.row_mut(t).copy_from_slice(&g[h..]);
        }
        let mut gx = self.forward.backward(x, &cache.fwd_out, &cache.fwd, &gf);
        let gx_b = self.backward.backward(x, &cache.bwd_out, &cache.bwd, &gb);
        for (a, b) in gx.data_mut().iter_mut().zip(gx_b.data()) {
            *a += *b;
        }
        gx
    }

    pub fn params(&self) -> Vec<&Param<F>> {
        let mut p = self.forward.params();
        p.extend(self.backward.params());
        p
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<F>> {
        let mut p = self.forward.params_mut();
        p.extend(self.backward.params_mut());
        p
    }
}
