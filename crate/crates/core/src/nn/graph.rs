use super::conv::{conv_backward, conv_forward, ConvGeometry};
use super::tensor::{concat_channels, Tensor};
use super::{shape_err, NnError};

/// Clamp applied to predictions before taking logarithms in the loss.
pub const BCE_EPS: f64 = 1e-7;

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

enum Op {
    Leaf,
    Conv2d {
        input: Var,
        weight: Var,
        bias: Var,
        geom: ConvGeometry,
    },
    Relu(Var),
    Sigmoid(Var),
    Upsample2x(Var),
    Concat(Var, Var),
    GlobalAvgPool(Var),
    BroadcastSpatial(Var),
    Linear {
        x: Var,
        weight: Var,
        bias: Var,
    },
    Add(Var, Var),
    Mul(Var, Var),
    Sum(Var),
    Bce {
        pred: Var,
        target: Vec<f32>,
        mask: Vec<bool>,
        count: usize,
    },
}

struct Node {
    value: Tensor,
    grad: Option<Vec<f32>>,
    requires_grad: bool,
    op: Op,
}

/// Define-by-run computation graph. Nodes are appended in evaluation
/// order, so reverse creation order is a reverse topological order.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, requires_grad: bool, op: Op) -> Var {
        self.nodes.push(Node {
            value,
            grad: None,
            requires_grad,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, true, Op::Leaf)
    }

    /// Leaf that receives no gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, false, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Accumulated gradient; zeros when nothing flowed into `v`.
    pub fn grad(&self, v: Var) -> Tensor {
        let node = &self.nodes[v.0];
        match &node.grad {
            Some(g) => Tensor::new(node.value.shape().to_vec(), g.clone())
                .expect("gradient matches value shape"),
            None => Tensor::zeros(node.value.shape().to_vec()),
        }
    }

    /// Sign of every ReLU input, in node order. Two evaluations with equal
    /// patterns lie on the same smooth piece of the function.
    pub fn relu_pattern(&self) -> Vec<bool> {
        let mut out = Vec::new();
        for node in &self.nodes {
            if let Op::Relu(x) = node.op {
                out.extend(self.nodes[x.0].value.data().iter().map(|&v| v > 0.0));
            }
        }
        out
    }

    fn rg(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    pub fn conv2d(
        &mut self,
        input: Var,
        weight: Var,
        bias: Var,
        stride: usize,
        padding: usize,
    ) -> Result<Var, NnError> {
        let x = self.value(input);
        let w = self.value(weight);
        let b = self.value(bias);
        let geom = ConvGeometry::new(x.dims4("conv2d")?, w.dims4("conv2d")?, stride, padding)?;
        if b.shape() != [geom.out_channels] {
            return Err(shape_err(
                "conv2d",
                format!("bias {:?} for {} output channels", b.shape(), geom.out_channels),
            ));
        }
        let out = conv_forward(&geom, x.data(), w.data(), b.data());
        let value = Tensor::new(
            vec![geom.batch, geom.out_channels, geom.out_h, geom.out_w],
            out,
        )?;
        let rg = self.rg(&[input, weight, bias]);
        Ok(self.push(
            value,
            rg,
            Op::Conv2d {
                input,
                weight,
                bias,
                geom,
            },
        ))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let data = t.data().iter().map(|&v| v.max(0.0)).collect();
        let value = Tensor::new(t.shape().to_vec(), data).expect("same shape");
        let rg = self.rg(&[x]);
        self.push(value, rg, Op::Relu(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let data = t.data().iter().map(|&v| sigmoid(v)).collect();
        let value = Tensor::new(t.shape().to_vec(), data).expect("same shape");
        let rg = self.rg(&[x]);
        self.push(value, rg, Op::Sigmoid(x))
    }

    /// Nearest-neighbour 2× upsampling of an N×C×H×W tensor.
    pub fn upsample_nearest2x(&mut self, x: Var) -> Result<Var, NnError> {
        let t = self.value(x);
        let [n, c, h, w] = t.dims4("upsample_nearest2x")?;
        let (h2, w2) = (2 * h, 2 * w);
        let src = t.data();
        let mut out = vec![0.0f32; n * c * h2 * w2];
        for plane in 0..n * c {
            let s = &src[plane * h * w..(plane + 1) * h * w];
            let d = &mut out[plane * h2 * w2..(plane + 1) * h2 * w2];
            for y in 0..h2 {
                let row = &s[(y / 2) * w..(y / 2 + 1) * w];
                for (xx, v) in d[y * w2..(y + 1) * w2].iter_mut().enumerate() {
                    *v = row[xx / 2];
                }
            }
        }
        let value = Tensor::new(vec![n, c, h2, w2], out)?;
        let rg = self.rg(&[x]);
        Ok(self.push(value, rg, Op::Upsample2x(x)))
    }

    pub fn concat_channels(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        let value = concat_channels(self.value(a), self.value(b))?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, rg, Op::Concat(a, b)))
    }

    /// N×C×H×W → N×C spatial mean.
    pub fn global_avg_pool(&mut self, x: Var) -> Result<Var, NnError> {
        let t = self.value(x);
        let [n, c, h, w] = t.dims4("global_avg_pool")?;
        let plane = h * w;
        let data = t
            .data()
            .chunks(plane)
            .map(|p| (p.iter().map(|&v| v as f64).sum::<f64>() / plane as f64) as f32)
            .collect();
        let value = Tensor::new(vec![n, c], data)?;
        let rg = self.rg(&[x]);
        Ok(self.push(value, rg, Op::GlobalAvgPool(x)))
    }

    /// N×C → N×C×H×W by copying each vector to every spatial location.
    pub fn broadcast_spatial(&mut self, v: Var, h: usize, w: usize) -> Result<Var, NnError> {
        let t = self.value(v);
        let [n, c] = match t.shape()[..] {
            [n, c] => [n, c],
            _ => return Err(shape_err("broadcast_spatial", format!("expected N×C, got {:?}", t.shape()))),
        };
        let mut out = Vec::with_capacity(n * c * h * w);
        for &val in t.data() {
            out.extend(std::iter::repeat_n(val, h * w));
        }
        let value = Tensor::new(vec![n, c, h, w], out)?;
        let rg = self.rg(&[v]);
        Ok(self.push(value, rg, Op::BroadcastSpatial(v)))
    }

    /// `y = x·Wᵀ + b` for x: N×in, W: out×in, b: out.
    pub fn linear(&mut self, x: Var, weight: Var, bias: Var) -> Result<Var, NnError> {
        let (xt, wt, bt) = (self.value(x), self.value(weight), self.value(bias));
        let (n, fin, fout) = match (xt.shape(), wt.shape(), bt.shape()) {
            ([n, fin], [fout, wi], [bo]) if wi == fin && bo == fout => (*n, *fin, *fout),
            _ => {
                return Err(shape_err(
                    "linear",
                    format!("x {:?}, weight {:?}, bias {:?}", xt.shape(), wt.shape(), bt.shape()),
                ))
            }
        };
        let mut out = vec![0.0f32; n * fout];
        for i in 0..n {
            let xi = &xt.data()[i * fin..(i + 1) * fin];
            for o in 0..fout {
                let wo = &wt.data()[o * fin..(o + 1) * fin];
                let dot: f64 = xi.iter().zip(wo).map(|(&a, &b)| a as f64 * b as f64).sum();
                out[i * fout + o] = (dot + bt.data()[o] as f64) as f32;
            }
        }
        let value = Tensor::new(vec![n, fout], out)?;
        let rg = self.rg(&[x, weight, bias]);
        Ok(self.push(value, rg, Op::Linear { x, weight, bias }))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        let value = self.zip(a, b, "add", |x, y| x + y)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, rg, Op::Add(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        let value = self.zip(a, b, "mul", |x, y| x * y)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, rg, Op::Mul(a, b)))
    }

    fn zip(&self, a: Var, b: Var, op: &'static str, f: impl Fn(f32, f32) -> f32) -> Result<Tensor, NnError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(shape_err(op, format!("{:?} vs {:?}", ta.shape(), tb.shape())));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::new(ta.shape().to_vec(), data)
    }

    /// Sum of all elements as a scalar.
    pub fn sum(&mut self, x: Var) -> Var {
        let s: f64 = self.value(x).data().iter().map(|&v| v as f64).sum();
        let rg = self.rg(&[x]);
        self.push(Tensor::scalar(s as f32), rg, Op::Sum(x))
    }

    /// Masked mean binary cross-entropy between `pred` and a fixed target.
    pub fn bce_per_pixel(&mut self, pred: Var, target: &[f32], mask: &[bool]) -> Result<Var, NnError> {
        let p = self.value(pred);
        if p.numel() != target.len() || p.numel() != mask.len() {
            return Err(shape_err(
                "bce_per_pixel",
                format!("pred {} values, target {}, mask {}", p.numel(), target.len(), mask.len()),
            ));
        }
        let loss = bce_per_pixel_value(p.data(), target, mask)?;
        let count = mask.iter().filter(|&&m| m).count();
        let rg = self.rg(&[pred]);
        Ok(self.push(
            Tensor::scalar(loss as f32),
            rg,
            Op::Bce {
                pred,
                target: target.to_vec(),
                mask: mask.to_vec(),
                count,
            },
        ))
    }

    /// Reverse sweep from a scalar loss. Every node is visited once.
    pub fn backward(&mut self, loss: Var) -> Result<(), NnError> {
        let shape = self.value(loss).shape().to_vec();
        if self.value(loss).numel() != 1 {
            return Err(NnError::NotScalar(shape));
        }
        if !self.requires_grad(loss) {
            return Ok(());
        }
        self.nodes[loss.0].grad = Some(vec![1.0]);
        for idx in (0..=loss.0).rev() {
            let (before, rest) = self.nodes.split_at_mut(idx);
            let node = &rest[0];
            let Some(grad) = node.grad.as_deref() else {
                continue;
            };
            if !node.requires_grad {
                continue;
            }
            for (target, contribution) in local_grads(before, node, grad) {
                let input = &mut before[target.0];
                if !input.requires_grad {
                    continue;
                }
                match input.grad.as_mut() {
                    Some(acc) => acc.iter_mut().zip(&contribution).for_each(|(a, c)| *a += c),
                    None => input.grad = Some(contribution),
                }
            }
        }
        Ok(())
    }
}

#[inline]
fn sigmoid(v: f32) -> f32 {
    (1.0 / (1.0 + (-(v as f64)).exp())) as f32
}

/// Value of the masked per-pixel BCE, accumulated in `f64`.
pub fn bce_per_pixel_value(pred: &[f32], target: &[f32], mask: &[bool]) -> Result<f64, NnError> {
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for ((&p, &t), &m) in pred.iter().zip(target).zip(mask) {
        if !m {
            continue;
        }
        let p = (p as f64).clamp(BCE_EPS, 1.0 - BCE_EPS);
        let t = t as f64;
        sum += t * p.ln() + (1.0 - t) * (1.0 - p).ln();
        count += 1;
    }
    if count == 0 {
        return Err(NnError::EmptyMask);
    }
    Ok(-sum / count as f64)
}

/// Gradient contributions of one node to its inputs.
fn local_grads(nodes: &[Node], node: &Node, grad: &[f32]) -> Vec<(Var, Vec<f32>)> {
    let val = |v: Var| &nodes[v.0].value;
    let needs = |v: Var| nodes[v.0].requires_grad;
    match &node.op {
        Op::Leaf => vec![],
        Op::Conv2d {
            input,
            weight,
            bias,
            geom,
        } => {
            let g = conv_backward(
                geom,
                grad,
                val(*input).data(),
                val(*weight).data(),
                (needs(*input), needs(*weight), needs(*bias)),
            );
            let mut out = Vec::with_capacity(3);
            if let Some(gx) = g.input {
                out.push((*input, gx));
            }
            if let Some(gw) = g.weight {
                out.push((*weight, gw));
            }
            if let Some(gb) = g.bias {
                out.push((*bias, gb));
            }
            out
        }
        Op::Relu(x) => {
            let gx = val(*x)
                .data()
                .iter()
                .zip(grad)
                .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
                .collect();
            vec![(*x, gx)]
        }
        Op::Sigmoid(x) => {
            let gx = node
                .value
                .data()
                .iter()
                .zip(grad)
                .map(|(&y, &g)| g * y * (1.0 - y))
                .collect();
            vec![(*x, gx)]
        }
        Op::Upsample2x(x) => {
            let [n, c, h, w] = val(*x).dims4("upsample_nearest2x").expect("checked in forward");
            let w2 = 2 * w;
            let mut gx = vec![0.0f32; n * c * h * w];
            for plane in 0..n * c {
                let src = &grad[plane * 4 * h * w..(plane + 1) * 4 * h * w];
                let dst = &mut gx[plane * h * w..(plane + 1) * h * w];
                for y in 0..h {
                    for xx in 0..w {
                        let top = 2 * y * w2 + 2 * xx;
                        let bottom = top + w2;
                        dst[y * w + xx] = src[top] + src[top + 1] + src[bottom] + src[bottom + 1];
                    }
                }
            }
            vec![(*x, gx)]
        }
        Op::Concat(a, b) => {
            let [n, ca, h, w] = val(*a).dims4("concat_channels").expect("checked in forward");
            let cb = val(*b).shape()[1];
            let plane = h * w;
            let mut ga = Vec::with_capacity(n * ca * plane);
            let mut gb = Vec::with_capacity(n * cb * plane);
            for i in 0..n {
                let base = i * (ca + cb) * plane;
                ga.extend_from_slice(&grad[base..base + ca * plane]);
                gb.extend_from_slice(&grad[base + ca * plane..base + (ca + cb) * plane]);
            }
            vec![(*a, ga), (*b, gb)]
        }
        Op::GlobalAvgPool(x) => {
            let [_, _, h, w] = val(*x).dims4("global_avg_pool").expect("checked in forward");
            let plane = h * w;
            let scale = 1.0 / plane as f32;
            let gx = grad
                .iter()
                .flat_map(|&g| std::iter::repeat_n(g * scale, plane))
                .collect();
            vec![(*x, gx)]
        }
        Op::BroadcastSpatial(v) => {
            let plane = node.value.shape()[2] * node.value.shape()[3];
            let gv = grad
                .chunks(plane)
                .map(|c| c.iter().map(|&g| g as f64).sum::<f64>() as f32)
                .collect();
            vec![(*v, gv)]
        }
        Op::Linear { x, weight, bias } => {
            let (xt, wt) = (val(*x), val(*weight));
            let (n, fin) = (xt.shape()[0], xt.shape()[1]);
            let fout = wt.shape()[0];
            let mut out = Vec::with_capacity(3);
            if needs(*x) {
                let mut gx = vec![0.0f32; n * fin];
                for i in 0..n {
                    for j in 0..fin {
                        let s: f64 = (0..fout)
                            .map(|o| grad[i * fout + o] as f64 * wt.data()[o * fin + j] as f64)
                            .sum();
                        gx[i * fin + j] = s as f32;
                    }
                }
                out.push((*x, gx));
            }
            if needs(*weight) {
                let mut gw = vec![0.0f32; fout * fin];
                for o in 0..fout {
                    for j in 0..fin {
                        let s: f64 = (0..n)
                            .map(|i| grad[i * fout + o] as f64 * xt.data()[i * fin + j] as f64)
                            .sum();
                        gw[o * fin + j] = s as f32;
                    }
                }
                out.push((*weight, gw));
            }
            if needs(*bias) {
                let gb = (0..fout)
                    .map(|o| (0..n).map(|i| grad[i * fout + o] as f64).sum::<f64>() as f32)
                    .collect();
                out.push((*bias, gb));
            }
            out
        }
        Op::Add(a, b) => vec![(*a, grad.to_vec()), (*b, grad.to_vec())],
        Op::Mul(a, b) => {
            let ga = grad.iter().zip(val(*b).data()).map(|(&g, &y)| g * y).collect();
            let gb = grad.iter().zip(val(*a).data()).map(|(&g, &x)| g * x).collect();
            vec![(*a, ga), (*b, gb)]
        }
        Op::Sum(x) => vec![(*x, vec![grad[0]; val(*x).numel()])],
        Op::Bce {
            pred,
            target,
            mask,
            count,
        } => {
            let scale = grad[0] as f64 / *count as f64;
            // Straight-through at the clamp: the derivative is evaluated at
            // the clamped prediction so saturated outputs keep a gradient.
            let gp = val(*pred)
                .data()
                .iter()
                .zip(target)
                .zip(mask)
                .map(|((&p, &t), &m)| {
                    if !m {
                        return 0.0;
                    }
                    let p = (p as f64).clamp(BCE_EPS, 1.0 - BCE_EPS);
                    let t = t as f64;
                    (-(t / p - (1.0 - t) / (1.0 - p)) * scale) as f32
                })
                .collect();
            vec![(*pred, gp)]
        }
    }
}
