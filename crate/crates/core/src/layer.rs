//! Layer descriptors and per-layer mode selection.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mode::supported_kernels;
use crate::split::SplitShape;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Conv,
    MaxPool,
    AvgPool,
    EltwiseAdd,
    FullyConnected,
    Relu,
}

impl LayerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LayerKind::Conv => "conv",
            LayerKind::MaxPool => "maxpool",
            LayerKind::AvgPool => "avgpool",
            LayerKind::EltwiseAdd => "eltwise",
            LayerKind::FullyConnected => "fc",
            LayerKind::Relu => "relu",
        }
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LayerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "conv" => LayerKind::Conv,
            "maxpool" => LayerKind::MaxPool,
            "avgpool" => LayerKind::AvgPool,
            "eltwise" | "add" => LayerKind::EltwiseAdd,
            "fc" => LayerKind::FullyConnected,
            "relu" => LayerKind::Relu,
            other => return Err(Error::Unsupported(format!("unknown layer kind `{other}`"))),
        })
    }
}

/// Channels, height, width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Shape3 {
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Shape3 {
    pub fn new(c: usize, h: usize, w: usize) -> Self {
        Shape3 { c, h, w }
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.c, self.h, self.w]
    }

    pub fn volume(&self) -> usize {
        self.c * self.h * self.w
    }
}

impl fmt::Display for Shape3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.c, self.h, self.w)
    }
}

/// Mode and split grid chosen for a convolution layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ModeChoice {
    pub omega: usize,
    pub k: usize,
    pub m: usize,
    pub split: SplitShape,
}

impl ModeChoice {
    pub fn splits(&self) -> usize {
        self.split.count()
    }
}

/// Pick the supported kernel size for an `H_t × W_t` kernel.
///
/// The choice maximises useful work per multiplier, `m² / splits`; ties go to
/// fewer splits and then to the larger kernel.
pub fn select_mode(omega: usize, kh: usize, kw: usize) -> Result<ModeChoice> {
    if kh == 0 || kw == 0 {
        return Err(Error::Shape("kernel dimensions must be positive".into()));
    }
    let ks = supported_kernels(omega);
    if ks.is_empty() {
        return Err(Error::Config(format!("omega must be 4 or 6, got {omega}")));
    }
    let choice = ks
        .iter()
        .map(|&k| {
            let m = omega + 1 - k;
            ModeChoice { omega, k, m, split: SplitShape::new(kh, kw, k) }
        })
        .max_by(|a, b| {
            let lhs = (a.m * a.m) * b.splits();
            let rhs = (b.m * b.m) * a.splits();
            lhs.cmp(&rhs).then(b.splits().cmp(&a.splits())).then(a.k.cmp(&b.k))
        })
        .expect("at least one kernel");
    Ok(choice)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LayerDescriptor {
    pub name: String,
    pub kind: LayerKind,
    pub input: Shape3,
    pub output: Shape3,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub padding: usize,
    pub stride: usize,
    pub batch: usize,
    /// Second operand of an element-wise add.
    pub from: Option<String>,
    pub mode: Option<ModeChoice>,
}

impl LayerDescriptor {
    /// Stride-1 convolution with output shape derived from the input.
    pub fn conv(name: &str, input: Shape3, od: usize, kernel: (usize, usize), padding: usize) -> Result<Self> {
        let (kh, kw) = kernel;
        let oh = (input.h + 2 * padding + 1).checked_sub(kh).filter(|&v| v > 0);
        let ow = (input.w + 2 * padding + 1).checked_sub(kw).filter(|&v| v > 0);
        let (Some(oh), Some(ow)) = (oh, ow) else {
            return Err(Error::Shape(format!("{name}: kernel {kh}x{kw} larger than padded input {input}")));
        };
        let layer = LayerDescriptor {
            name: name.into(),
            kind: LayerKind::Conv,
            input,
            output: Shape3::new(od, oh, ow),
            kernel_h: kh,
            kernel_w: kw,
            padding,
            stride: 1,
            batch: 1,
            from: None,
            mode: None,
        };
        layer.validate()?;
        Ok(layer)
    }

    pub fn pool(name: &str, kind: LayerKind, input: Shape3, window: usize, stride: usize) -> Result<Self> {
        Self::pool_padded(name, kind, input, window, stride, 0)
    }

    pub fn pool_padded(
        name: &str,
        kind: LayerKind,
        input: Shape3,
        window: usize,
        stride: usize,
        padding: usize,
    ) -> Result<Self> {
        let (h, w) = (input.h + 2 * padding, input.w + 2 * padding);
        if window == 0 || stride == 0 || window > h || window > w {
            return Err(Error::Shape(format!(
                "{name}: pool window {window}/{stride} does not fit {input} padded by {padding}"
            )));
        }
        let layer = LayerDescriptor {
            name: name.into(),
            kind,
            input,
            output: Shape3::new(input.c, (h - window) / stride + 1, (w - window) / stride + 1),
            kernel_h: window,
            kernel_w: window,
            padding,
            stride,
            batch: 1,
            from: None,
            mode: None,
        };
        layer.validate()?;
        Ok(layer)
    }

    pub fn fully_connected(name: &str, input: Shape3, outputs: usize) -> Result<Self> {
        let layer = LayerDescriptor {
            name: name.into(),
            kind: LayerKind::FullyConnected,
            input,
            output: Shape3::new(outputs, 1, 1),
            kernel_h: 1,
            kernel_w: 1,
            padding: 0,
            stride: 1,
            batch: 1,
            from: None,
            mode: None,
        };
        layer.validate()?;
        Ok(layer)
    }

    pub fn relu(name: &str, input: Shape3) -> Self {
        LayerDescriptor {
            name: name.into(),
            kind: LayerKind::Relu,
            input,
            output: input,
            kernel_h: 1,
            kernel_w: 1,
            padding: 0,
            stride: 1,
            batch: 1,
            from: None,
            mode: None,
        }
    }

    pub fn eltwise_add(name: &str, input: Shape3, from: &str) -> Self {
        LayerDescriptor { from: Some(from.into()), kind: LayerKind::EltwiseAdd, ..Self::relu(name, input) }
    }

    /// Assign the best mode for this layer's kernel under filter size `omega`.
    pub fn with_mode(mut self, omega: usize) -> Result<Self> {
        if self.kind == LayerKind::Conv {
            self.mode = Some(select_mode(omega, self.kernel_h, self.kernel_w)?);
        }
        Ok(self)
    }

    /// A convolution with its spatial input divided by `s` (kept large enough
    /// for the kernel); channels, kernel, padding and mode are unchanged.
    /// Other layers are returned as they are.
    pub fn shrunk(&self, s: usize) -> Result<Self> {
        if self.kind != LayerKind::Conv || s <= 1 {
            return Ok(self.clone());
        }
        let fit = |x: usize, k: usize| (x / s).max(k.saturating_sub(2 * self.padding)).max(1);
        let input = Shape3::new(self.id(), fit(self.ih(), self.kernel_h), fit(self.iw(), self.kernel_w));
        let mut out = Self::conv(&self.name, input, self.od(), (self.kernel_h, self.kernel_w), self.padding)?;
        out.batch = self.batch;
        out.mode = self.mode;
        Ok(out)
    }

    /// Rebuild `self` on a new input shape, keeping kernel, padding, stride,
    /// channel counts and mode.
    pub fn rebased(&self, input: Shape3) -> Result<Self> {
        let mut out = match self.kind {
            LayerKind::Conv => Self::conv(&self.name, input, self.od(), (self.kernel_h, self.kernel_w), self.padding)?,
            LayerKind::MaxPool | LayerKind::AvgPool => {
                Self::pool_padded(&self.name, self.kind, input, self.kernel_h, self.stride, self.padding)?
            }
            LayerKind::FullyConnected => Self::fully_connected(&self.name, input, self.od())?,
            LayerKind::Relu | LayerKind::EltwiseAdd => LayerDescriptor { input, output: input, ..self.clone() },
        };
        out.batch = self.batch;
        out.mode = self.mode;
        Ok(out)
    }

    pub fn with_batch(mut self, batch: usize) -> Self {
        self.batch = batch;
        self
    }

    pub fn id(&self) -> usize {
        self.input.c
    }
    pub fn ih(&self) -> usize {
        self.input.h
    }
    pub fn iw(&self) -> usize {
        self.input.w
    }
    pub fn od(&self) -> usize {
        self.output.c
    }
    pub fn oh(&self) -> usize {
        self.output.h
    }
    pub fn ow(&self) -> usize {
        self.output.w
    }

    pub fn is_conv(&self) -> bool {
        self.kind == LayerKind::Conv
    }

    pub fn mode_choice(&self) -> Result<ModeChoice> {
        self.mode.ok_or_else(|| Error::Config(format!("{}: no Winograd mode assigned", self.name)))
    }

    /// Multiply and add operations for one image, counting a MAC as two.
    pub fn ops(&self) -> u64 {
        match self.kind {
            LayerKind::Conv => {
                2 * (self.od() * self.oh() * self.ow() * self.id() * self.kernel_h * self.kernel_w) as u64
            }
            LayerKind::FullyConnected => 2 * (self.input.volume() * self.od()) as u64,
            _ => 0,
        }
    }

    /// Weight tensor dims, if the layer has weights.
    pub fn weight_dims(&self) -> Option<[usize; 4]> {
        match self.kind {
            LayerKind::Conv => Some([self.id(), self.od(), self.kernel_h, self.kernel_w]),
            LayerKind::FullyConnected => Some([self.input.volume(), self.od(), 1, 1]),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = &self.name;
        if self.input.volume() == 0 || self.output.volume() == 0 {
            return Err(Error::Shape(format!("{n}: zero-size layer {} -> {}", self.input, self.output)));
        }
        if self.batch == 0 {
            return Err(Error::Shape(format!("{n}: batch must be positive")));
        }
        match self.kind {
            LayerKind::Conv => {
                if self.stride != 1 {
                    return Err(Error::Unsupported(format!(
                        "{n}: convolution stride {} (only 1 is supported)",
                        self.stride
                    )));
                }
                let oh = (self.ih() + 2 * self.padding + 1).checked_sub(self.kernel_h);
                let ow = (self.iw() + 2 * self.padding + 1).checked_sub(self.kernel_w);
                if oh != Some(self.oh()) || ow != Some(self.ow()) {
                    return Err(Error::Shape(format!(
                        "{n}: output {} inconsistent with input {}, kernel {}x{}, padding {}",
                        self.output, self.input, self.kernel_h, self.kernel_w, self.padding
                    )));
                }
                if let Some(mc) = self.mode {
                    if mc.split != SplitShape::new(self.kernel_h, self.kernel_w, mc.k) {
                        return Err(Error::Config(format!("{n}: split plan does not match kernel")));
                    }
                }
            }
            LayerKind::MaxPool | LayerKind::AvgPool => {
                let ok = self.output.c == self.input.c
                    && self.stride > 0
                    && self.output.h == (self.ih() + 2 * self.padding).saturating_sub(self.kernel_h) / self.stride + 1
                    && self.output.w == (self.iw() + 2 * self.padding).saturating_sub(self.kernel_w) / self.stride + 1;
                if !ok {
                    return Err(Error::Shape(format!(
                        "{n}: pool output {} inconsistent with input {}",
                        self.output, self.input
                    )));
                }
            }
            LayerKind::FullyConnected => {
                if self.output.h != 1 || self.output.w != 1 {
                    return Err(Error::Shape(format!("{n}: fully-connected output must be Cx1x1")));
                }
            }
            LayerKind::Relu | LayerKind::EltwiseAdd => {
                if self.input != self.output {
                    return Err(Error::Shape(format!("{n}: {} must preserve shape", self.kind)));
                }
                if self.kind == LayerKind::EltwiseAdd && self.from.is_none() {
                    return Err(Error::Config(format!("{n}: element-wise add needs a `from` layer")));
                }
            }
        }
        Ok(())
    }
}

/// Divide the network input's spatial size by `s` and re-derive every shape
/// down the chain.
pub fn shrink_chain(layers: &[LayerDescriptor], s: usize) -> Result<Vec<LayerDescriptor>> {
    let Some(first) = layers.first() else { return Ok(Vec::new()) };
    let s = s.max(1);
    let mut x = Shape3::new(first.id(), (first.ih() / s).max(1), (first.iw() / s).max(1));
    let mut out = Vec::with_capacity(layers.len());
    for l in layers {
        let r = l.rebased(x).map_err(|e| Error::Shape(format!("shrinking by {s}: {e}")))?;
        x = r.output;
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k_of(omega: usize, h: usize, w: usize) -> (usize, usize) {
        let c = select_mode(omega, h, w).unwrap();
        (c.k, c.splits())
    }

    #[test]
    fn mode_selection_table() {
        assert_eq!(k_of(4, 1, 1), (1, 1));
        assert_eq!(k_of(4, 3, 3), (3, 1));
        assert_eq!(k_of(4, 5, 5), (3, 4));
        assert_eq!(k_of(4, 7, 7), (3, 9));
        assert_eq!(k_of(4, 1, 3), (1, 3));
        assert_eq!(k_of(6, 1, 3), (3, 1));
        assert_eq!(k_of(6, 5, 5), (5, 1));
        assert_eq!(k_of(6, 7, 7), (3, 9));
        assert_eq!(k_of(6, 1, 7), (3, 3));
        assert_eq!(k_of(6, 9, 9), (3, 9));
        assert!(select_mode(5, 3, 3).is_err());
    }

    #[test]
    fn conv_shapes() {
        let l = LayerDescriptor::conv("c", Shape3::new(3, 5, 5), 2, (3, 3), 1).unwrap();
        assert_eq!(l.output, Shape3::new(2, 5, 5));
        let l = LayerDescriptor::conv("c", Shape3::new(3, 8, 8), 2, (1, 7), 0).unwrap();
        assert_eq!(l.output, Shape3::new(2, 8, 2));
        assert!(LayerDescriptor::conv("c", Shape3::new(3, 2, 2), 2, (5, 5), 0).is_err());
    }

    #[test]
    fn stride_is_rejected_for_conv() {
        let mut l = LayerDescriptor::conv("c", Shape3::new(3, 5, 5), 2, (3, 3), 1).unwrap();
        l.stride = 2;
        assert!(matches!(l.validate(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn zero_size_is_rejected() {
        assert!(LayerDescriptor::conv("c", Shape3::new(0, 5, 5), 2, (3, 3), 1).is_err());
        assert!(LayerDescriptor::conv("c", Shape3::new(1, 5, 5), 0, (3, 3), 1).is_err());
    }

    #[test]
    fn kind_round_trips_through_text() {
        for k in [
            LayerKind::Conv,
            LayerKind::MaxPool,
            LayerKind::AvgPool,
            LayerKind::EltwiseAdd,
            LayerKind::FullyConnected,
            LayerKind::Relu,
        ] {
            assert_eq!(k.as_str().parse::<LayerKind>().unwrap(), k);
        }
        assert!("lstm".parse::<LayerKind>().is_err());
    }

    #[test]
    fn shrink_chain_rederives_shapes() {
        let c1 = LayerDescriptor::conv("c1", Shape3::new(3, 32, 32), 8, (3, 3), 1).unwrap().with_mode(4).unwrap();
        let r = LayerDescriptor::relu("r", c1.output);
        let p = LayerDescriptor::pool("p", LayerKind::MaxPool, r.output, 2, 2).unwrap();
        let fc = LayerDescriptor::fully_connected("fc", p.output, 10).unwrap();
        let small = shrink_chain(&[c1, r, p, fc], 4).unwrap();
        let shapes: Vec<String> = small.iter().map(|l| format!("{} -> {}", l.input, l.output)).collect();
        assert_eq!(shapes, ["3x8x8 -> 8x8x8", "8x8x8 -> 8x8x8", "8x8x8 -> 8x4x4", "8x4x4 -> 10x1x1"]);
        assert!(small[0].mode.is_some());
        assert!(shrink_chain(&small, 16).is_err());
    }
}
