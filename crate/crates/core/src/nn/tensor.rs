use super::{shape_err, NnError};

/// Dense row-major `f32` array.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self, NnError> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(shape_err(
                "tensor",
                format!("shape {shape:?} needs {numel} values, got {}", data.len()),
            ));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn full(shape: Vec<usize>, value: f32) -> Self {
        let numel = shape.iter().product();
        Self {
            shape,
            data: vec![value; numel],
        }
    }

    pub fn scalar(value: f32) -> Self {
        Self {
            shape: vec![],
            data: vec![value],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn reshape(self, shape: Vec<usize>) -> Result<Self, NnError> {
        Self::new(shape, self.data)
    }

    /// The single value of a one-element tensor.
    pub fn item(&self) -> f32 {
        self.data[0]
    }

    pub(crate) fn dims4(&self, op: &'static str) -> Result<[usize; 4], NnError> {
        match self.shape[..] {
            [n, c, h, w] => Ok([n, c, h, w]),
            _ => Err(shape_err(op, format!("expected N×C×H×W, got {:?}", self.shape))),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Stacks two N×C×H×W tensors along the channel axis.
pub fn concat_channels(a: &Tensor, b: &Tensor) -> Result<Tensor, NnError> {
    let [n, ca, h, w] = a.dims4("concat_channels")?;
    let [nb, cb, hb, wb] = b.dims4("concat_channels")?;
    if (n, h, w) != (nb, hb, wb) {
        return Err(shape_err(
            "concat_channels",
            format!("{:?} vs {:?}", a.shape(), b.shape()),
        ));
    }
    let plane = h * w;
    let mut out = Vec::with_capacity(n * (ca + cb) * plane);
    for i in 0..n {
        out.extend_from_slice(&a.data[i * ca * plane..(i + 1) * ca * plane]);
        out.extend_from_slice(&b.data[i * cb * plane..(i + 1) * cb * plane]);
    }
    Tensor::new(vec![n, ca + cb, h, w], out)
}

/// Inverse of [`concat_channels`]: the first `first` channels and the rest.
pub fn split_channels(t: &Tensor, first: usize) -> Result<(Tensor, Tensor), NnError> {
    let [n, c, h, w] = t.dims4("split_channels")?;
    if first > c {
        return Err(shape_err(
            "split_channels",
            format!("cannot take {first} of {c} channels"),
        ));
    }
    let plane = h * w;
    let rest = c - first;
    let mut a = Vec::with_capacity(n * first * plane);
    let mut b = Vec::with_capacity(n * rest * plane);
    for i in 0..n {
        let base = i * c * plane;
        a.extend_from_slice(&t.data[base..base + first * plane]);
        b.extend_from_slice(&t.data[base + first * plane..base + c * plane]);
    }
    Ok((
        Tensor::new(vec![n, first, h, w], a)?,
        Tensor::new(vec![n, rest, h, w], b)?,
    ))
}
