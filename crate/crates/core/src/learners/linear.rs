//! Linear classification heads: dot-product or scaled-cosine logits over raw
//! or adapter-mapped features, masked cross-entropy losses, analytic
//! gradients, and the SGD step.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{dot, norm, normalize, Scalar};

/// Keeps cosine logits defined for zero-norm vectors.
const COSINE_EPS: f64 = 1e-12;

/// Dense row-major matrix; just enough linear algebra for heads and adapters.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> Mat<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    /// A truncated identity: ones on the leading diagonal.
    pub fn identity(rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows.min(cols) {
            m.data[i * cols + i] = F::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[F] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [F] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub fn matvec(&self, x: &[F]) -> Vec<F> {
        (0..self.rows).map(|r| dot(self.row(r), x)).collect()
    }
}

/// How logits are formed from class weights and the (adapted) feature vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeadMode<F> {
    /// `z_c = w_c . u + b_c`
    Dot,
    /// `z_c = scale * (w_c . u) / ((|w_c| + eps)(|u| + eps))`; bounded by the
    /// scale, no bias.
    Cosine { scale: F },
}

/// A trainable linear classifier over feature vectors, optionally composed
/// with a trainable linear feature adapter (the desk-scale stand-in for
/// training the representation as well as the classifier).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead<F> {
    /// Class weights, `num_classes x head_dim`.
    pub weights: Mat<F>,
    /// Per-class bias; present in `Dot` mode only.
    pub bias: Option<Vec<F>>,
    pub mode: HeadMode<F>,
    /// Optional `head_dim x feature_dim` map applied to inputs before the
    /// head; when present it is trained jointly with the head.
    pub adapter: Option<Mat<F>>,
}

impl<F: Scalar> LinearHead<F> {
    /// Zero-initialized dot-product head with bias. `adapter_rank = Some(m)`
    /// inserts an identity-initialized `m x feature_dim` adapter.
    pub fn dot(num_classes: usize, feature_dim: usize, adapter_rank: Option<usize>) -> Result<Self> {
        let m = Self::head_dim(feature_dim, adapter_rank)?;
        Ok(Self {
            weights: Mat::zeros(num_classes, m),
            bias: Some(vec![F::zero(); num_classes]),
            mode: HeadMode::Dot,
            adapter: adapter_rank.map(|r| Mat::identity(r, feature_dim)),
        })
    }

    /// Cosine head with the given logit scale. Rows start as random unit
    /// vectors: the cosine gradient is singular at zero weights.
    pub fn cosine<R: Rng + ?Sized>(
        num_classes: usize,
        feature_dim: usize,
        scale: f64,
        adapter_rank: Option<usize>,
        rng: &mut R,
    ) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Config(format!(
                "cosine scale must be positive, got {scale}"
            )));
        }
        let m = Self::head_dim(feature_dim, adapter_rank)?;
        let mut weights = Mat::zeros(num_classes, m);
        for r in 0..num_classes {
            let row = weights.row_mut(r);
            loop {
                for x in row.iter_mut() {
                    // Box-Muller-free: sum of uniforms is plenty for an
                    // init direction; draws stay in the seeded rng stream.
                    *x = F::of_f64(rng.random_range(-1.0f64..1.0));
                }
                if normalize(row) {
                    break;
                }
            }
        }
        Ok(Self {
            weights,
            bias: None,
            mode: HeadMode::Cosine {
                scale: F::of_f64(scale),
            },
            adapter: adapter_rank.map(|r| Mat::identity(r, feature_dim)),
        })
    }

    fn head_dim(feature_dim: usize, adapter_rank: Option<usize>) -> Result<usize> {
        match adapter_rank {
            None => Ok(feature_dim),
            Some(0) => Err(Error::Config("adapter rank must be >= 1".into())),
            Some(m) if m > feature_dim => Err(Error::Config(format!(
                "adapter rank {m} exceeds feature dim {feature_dim}"
            ))),
            Some(m) => Ok(m),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.weights.rows()
    }

    /// Dimension of raw inputs this head accepts.
    pub fn input_dim(&self) -> usize {
        self.adapter
            .as_ref()
            .map_or(self.weights.cols(), |a| a.cols())
    }

    fn check_input(&self, x: &[F]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Contract(format!(
                "input has {} components, head expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    fn logits_from_mapped(&self, u: &[F]) -> Vec<F> {
        match self.mode {
            HeadMode::Dot => {
                let mut z = self.weights.matvec(u);
                if let Some(b) = &self.bias {
                    for (zi, bi) in z.iter_mut().zip(b) {
                        *zi += *bi;
                    }
                }
                z
            }
            HeadMode::Cosine { scale } => {
                let eps = F::of_f64(COSINE_EPS);
                let nu = norm(u) + eps;
                (0..self.num_classes())
                    .map(|c| {
                        let w = self.weights.row(c);
                        scale * dot(w, u) / ((norm(w) + eps) * nu)
                    })
                    .collect()
            }
        }
    }

    /// Class logits for one input.
    pub fn forward(&self, x: &[F]) -> Result<Vec<F>> {
        self.check_input(x)?;
        match &self.adapter {
            Some(a) => Ok(self.logits_from_mapped(&a.matvec(x))),
            None => Ok(self.logits_from_mapped(x)),
        }
    }
}

/// Which loss a gradient learner trains with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    CrossEntropy,
    /// Cross-entropy restricted to the classes present in the newest
    /// incoming batch; absent classes receive no gradient.
    Ace,
}

fn check_mask<F: Scalar>(logits: &[F], mask: &[bool]) -> Result<()> {
    if mask.len() != logits.len() {
        return Err(Error::Contract(format!(
            "class mask has {} entries for {} logits",
            mask.len(),
            logits.len()
        )));
    }
    Ok(())
}

/// Max-shifted cross-entropy over the active classes. `mask = None` means
/// all classes are active; a full `Some` mask walks the identical arithmetic
/// path, so the two agree bit for bit.
fn masked_ce<F: Scalar>(logits: &[F], y: usize, mask: Option<&[bool]>) -> Result<F> {
    let c = logits.len();
    if y >= c {
        return Err(Error::Contract(format!(
            "label {y} out of range for {c} classes"
        )));
    }
    let active = |i: usize| mask.is_none_or(|m| m[i]);
    if !active(y) {
        return Err(Error::Contract(format!("true label {y} is masked out")));
    }
    let mut zmax = F::neg_infinity();
    for (i, &z) in logits.iter().enumerate() {
        if active(i) && z > zmax {
            zmax = z;
        }
    }
    let mut sum = F::zero();
    for (i, &z) in logits.iter().enumerate() {
        if active(i) {
            sum += (z - zmax).exp();
        }
    }
    Ok(sum.ln() + zmax - logits[y])
}

/// Loss gradient w.r.t. the logits: softmax minus one-hot over the active
/// classes, zero elsewhere. Returns (loss, dL/dz).
fn masked_ce_backward<F: Scalar>(
    logits: &[F],
    y: usize,
    mask: Option<&[bool]>,
) -> Result<(F, Vec<F>)> {
    let loss = masked_ce(logits, y, mask)?;
    let active = |i: usize| mask.is_none_or(|m| m[i]);
    let mut zmax = F::neg_infinity();
    for (i, &z) in logits.iter().enumerate() {
        if active(i) && z > zmax {
            zmax = z;
        }
    }
    let mut sum = F::zero();
    for (i, &z) in logits.iter().enumerate() {
        if active(i) {
            sum += (z - zmax).exp();
        }
    }
    let mut dz = vec![F::zero(); logits.len()];
    for (i, (&z, slot)) in logits.iter().zip(dz.iter_mut()).enumerate() {
        if active(i) {
            *slot = (z - zmax).exp() / sum;
        }
    }
    dz[y] -= F::one();
    Ok((loss, dz))
}

/// Stable softmax cross-entropy of `logits` against label `y`.
pub fn softmax_ce<F: Scalar>(logits: &[F], y: usize) -> Result<F> {
    masked_ce(logits, y, None)
}

/// Cross-entropy over the restricted logit vector of present classes.
pub fn ace_ce<F: Scalar>(logits: &[F], y: usize, present: &[bool]) -> Result<F> {
    check_mask(logits, present)?;
    masked_ce(logits, y, Some(present))
}

/// Gradient of a loss w.r.t. every trainable parameter of a head.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadGradient<F> {
    pub d_weights: Mat<F>,
    pub d_bias: Option<Vec<F>>,
    pub d_adapter: Option<Mat<F>>,
}

impl<F: Scalar> HeadGradient<F> {
    pub fn zeros_like(head: &LinearHead<F>) -> Self {
        Self {
            d_weights: Mat::zeros(head.weights.rows(), head.weights.cols()),
            d_bias: head.bias.as_ref().map(|b| vec![F::zero(); b.len()]),
            d_adapter: head
                .adapter
                .as_ref()
                .map(|a| Mat::zeros(a.rows(), a.cols())),
        }
    }

    /// Elementwise accumulation for batch averaging.
    pub fn accumulate(&mut self, other: &Self) -> Result<()> {
        if !self.d_weights.same_shape(&other.d_weights) {
            return Err(Error::Contract("gradient shapes differ".into()));
        }
        for (a, b) in self.d_weights.data_mut().iter_mut().zip(other.d_weights.data()) {
            *a += *b;
        }
        match (&mut self.d_bias, &other.d_bias) {
            (Some(a), Some(b)) => {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += *y;
                }
            }
            (None, None) => {}
            _ => return Err(Error::Contract("bias gradient presence differs".into())),
        }
        match (&mut self.d_adapter, &other.d_adapter) {
            (Some(a), Some(b)) => {
                if !a.same_shape(b) {
                    return Err(Error::Contract("adapter gradient shapes differ".into()));
                }
                for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
                    *x += *y;
                }
            }
            (None, None) => {}
            _ => return Err(Error::Contract("adapter gradient presence differs".into())),
        }
        Ok(())
    }

    pub fn scale(&mut self, s: F) {
        for x in self.d_weights.data_mut() {
            *x *= s;
        }
        if let Some(b) = &mut self.d_bias {
            for x in b.iter_mut() {
                *x *= s;
            }
        }
        if let Some(a) = &mut self.d_adapter {
            for x in a.data_mut() {
                *x *= s;
            }
        }
    }
}

/// Loss and exact gradient of the selected loss for one sample.
///
/// `present` is consulted only under [`LossKind::Ace`]; masked classes get a
/// zero weight-gradient row. Verified against central finite differences in
/// the test suite.
pub fn grad_ce<F: Scalar>(
    head: &LinearHead<F>,
    x: &[F],
    y: usize,
    loss: LossKind,
    present: Option<&[bool]>,
) -> Result<(F, HeadGradient<F>)> {
    head.check_input(x)?;
    let mask = match loss {
        LossKind::CrossEntropy => None,
        LossKind::Ace => {
            let m = present.ok_or_else(|| {
                Error::Contract("ACE loss requires the present-class mask".into())
            })?;
            if m.len() != head.num_classes() {
                return Err(Error::Contract(format!(
                    "class mask has {} entries for {} classes",
                    m.len(),
                    head.num_classes()
                )));
            }
            Some(m)
        }
    };

    let mapped;
    let u: &[F] = match &head.adapter {
        Some(a) => {
            mapped = a.matvec(x);
            &mapped
        }
        None => x,
    };
    let logits = head.logits_from_mapped(u);
    let (loss_val, dz) = masked_ce_backward(&logits, y, mask)?;

    let m = head.weights.cols();
    let mut grad = HeadGradient::zeros_like(head);
    let want_du = head.adapter.is_some();
    let mut d_u = vec![F::zero(); m];

    match head.mode {
        HeadMode::Dot => {
            for (cls, &g) in dz.iter().enumerate() {
                if g == F::zero() {
                    continue;
                }
                let row = grad.d_weights.row_mut(cls);
                for (rj, &uj) in row.iter_mut().zip(u) {
                    *rj = g * uj;
                }
                if want_du {
                    let w = head.weights.row(cls);
                    for (duj, &wj) in d_u.iter_mut().zip(w) {
                        *duj += g * wj;
                    }
                }
            }
            if let Some(db) = &mut grad.d_bias {
                db.copy_from_slice(&dz);
            }
        }
        HeadMode::Cosine { scale } => {
            let eps = F::of_f64(COSINE_EPS);
            let nu = norm(u) + eps;
            for (cls, &g) in dz.iter().enumerate() {
                if g == F::zero() {
                    continue;
                }
                let w = head.weights.row(cls);
                let nw = norm(w) + eps;
                let a = dot(w, u);
                let coef = scale / (nw * nu);
                let aw = a / (nw * nw);
                let row = grad.d_weights.row_mut(cls);
                for ((rj, &uj), &wj) in row.iter_mut().zip(u).zip(w) {
                    *rj = g * coef * (uj - aw * wj);
                }
                if want_du {
                    let au = a / (nu * nu);
                    for ((duj, &wj), &uj) in d_u.iter_mut().zip(w).zip(u) {
                        *duj += g * coef * (wj - au * uj);
                    }
                }
            }
        }
    }

    if let (Some(da), Some(_)) = (&mut grad.d_adapter, &head.adapter) {
        for (i, &g) in d_u.iter().enumerate() {
            let row = da.row_mut(i);
            for (rj, &xj) in row.iter_mut().zip(x) {
                *rj = g * xj;
            }
        }
    }

    Ok((loss_val, grad))
}

/// Learning rate and decoupled-from-bias weight decay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig<F> {
    pub learning_rate: F,
    pub weight_decay: F,
}

/// One SGD step: `w <- w - lr * (g + wd * w)`; biases are excluded from
/// weight decay; the adapter, when present, is updated like a weight matrix.
pub fn sgd_step<F: Scalar>(
    head: &mut LinearHead<F>,
    grad: &HeadGradient<F>,
    cfg: &SgdConfig<F>,
) -> Result<()> {
    if !head.weights.same_shape(&grad.d_weights) {
        return Err(Error::Contract("weight gradient shape mismatch".into()));
    }
    let lr = cfg.learning_rate;
    let wd = cfg.weight_decay;
    for (w, &g) in head.weights.data_mut().iter_mut().zip(grad.d_weights.data()) {
        *w -= lr * (g + wd * *w);
    }
    match (&mut head.bias, &grad.d_bias) {
        (Some(b), Some(gb)) => {
            if b.len() != gb.len() {
                return Err(Error::Contract("bias gradient shape mismatch".into()));
            }
            for (x, &g) in b.iter_mut().zip(gb) {
                *x -= lr * g;
            }
        }
        (None, None) => {}
        _ => return Err(Error::Contract("bias gradient presence mismatch".into())),
    }
    match (&mut head.adapter, &grad.d_adapter) {
        (Some(a), Some(ga)) => {
            if !a.same_shape(ga) {
                return Err(Error::Contract("adapter gradient shape mismatch".into()));
            }
            for (x, &g) in a.data_mut().iter_mut().zip(ga.data()) {
                *x -= lr * (g + wd * *x);
            }
        }
        (None, None) => {}
        _ => return Err(Error::Contract("adapter gradient presence mismatch".into())),
    }
    Ok(())
}

/// Index of the largest logit; ties go to the smaller class id.
pub fn argmax<F: Scalar>(logits: &[F]) -> usize {
    let mut best = 0usize;
    for i in 1..logits.len() {
        if logits[i] > logits[best] {
            best = i;
        }
    }
    best
}
