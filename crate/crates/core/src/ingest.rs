//! Text formats for network models and accelerator configs, and tensor files.
//!
//! Models and configs are `key: value` lines grouped into blocks separated by
//! `---`. `#` starts a comment. A model may open with a header block (no
//! `name` key) carrying `batch` and `omega`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::config::{default_h_b, default_w_b, AcceleratorConfig, DEFAULT_BATCH, ULTRA96, ZCU102_F4, ZCU102_F6};
use crate::error::{Error, Result};
use crate::layer::{LayerDescriptor, LayerKind, Shape3};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Eq)]
struct Entry {
    key: String,
    value: String,
    line: usize,
    /// 1-based column of the value.
    column: usize,
}

#[derive(Clone, Debug, Default)]
struct Block {
    line: usize,
    entries: Vec<Entry>,
}

impl Block {
    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }
}

fn syntax(line: usize, column: usize, msg: impl Into<String>) -> Error {
    Error::Syntax { line, column, msg: msg.into() }
}

fn attr(e: &Entry, msg: impl Into<String>) -> Error {
    Error::Attribute { line: e.line, key: e.key.clone(), msg: msg.into() }
}

fn blocks(text: &str) -> Result<Vec<Block>> {
    let mut out = Vec::new();
    let mut cur = Block::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed == "---" {
            if !cur.entries.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        let Some(colon) = content.find(':') else {
            return Err(syntax(line, content.trim_end().len() + 1, "expected `key: value`"));
        };
        let key = content[..colon].trim();
        if key.is_empty() {
            return Err(syntax(line, indent + 1, "missing key before `:`"));
        }
        if let Some(pos) = key.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')) {
            return Err(syntax(line, indent + pos + 1, format!("invalid character in key `{key}`")));
        }
        let rest = &content[colon + 1..];
        let value = rest.trim();
        let column = colon + 2 + (rest.len() - rest.trim_start().len());
        if value.is_empty() {
            return Err(syntax(line, column, format!("missing value for `{key}`")));
        }
        let key = key.to_ascii_lowercase();
        if cur.entries.iter().any(|e| e.key == key) {
            return Err(syntax(line, indent + 1, format!("duplicate key `{key}`")));
        }
        if cur.entries.is_empty() {
            cur.line = line;
        }
        cur.entries.push(Entry { key, value: value.to_string(), line, column });
    }
    if !cur.entries.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

fn parse_usize(e: &Entry) -> Result<usize> {
    let v = e.value.as_str();
    if let Some(rest) = v.strip_prefix('-') {
        if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
            return Err(attr(e, format!("must be non-negative, got {v}")));
        }
    }
    match v.bytes().position(|b| !b.is_ascii_digit()) {
        None => v.parse().map_err(|_| syntax(e.line, e.column, format!("integer `{v}` out of range"))),
        Some(p) => Err(syntax(e.line, e.column + p, format!("expected an integer, got `{v}`"))),
    }
}

fn parse_f64(e: &Entry) -> Result<f64> {
    e.value.parse().map_err(|_| syntax(e.line, e.column, format!("expected a number, got `{}`", e.value)))
}

/// `AxBx…`, exactly `n` parts.
fn parse_dims(e: &Entry, n: usize) -> Result<Vec<usize>> {
    let mut dims = Vec::new();
    let mut col = e.column;
    for part in e.value.split(['x', 'X']) {
        let sub = Entry { value: part.trim().to_string(), column: col, ..e.clone() };
        dims.push(parse_usize(&sub)?);
        col += part.len() + 1;
    }
    if dims.len() != n {
        return Err(syntax(e.line, e.column, format!("expected {n} dimensions separated by `x`, got `{}`", e.value)));
    }
    Ok(dims)
}

fn parse_shape(e: &Entry) -> Result<Shape3> {
    let d = parse_dims(e, 3)?;
    Ok(Shape3::new(d[0], d[1], d[2]))
}

/// `KxK` or a single `K`.
fn parse_kernel(e: &Entry) -> Result<(usize, usize)> {
    if e.value.contains(['x', 'X']) {
        let d = parse_dims(e, 2)?;
        Ok((d[0], d[1]))
    } else {
        let k = parse_usize(e)?;
        Ok((k, k))
    }
}

/// Parsed network description.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkModel {
    pub batch: usize,
    pub omega: usize,
    pub layers: Vec<LayerDescriptor>,
}

pub const DEFAULT_OMEGA: usize = 4;

const LAYER_KEYS: [&str; 8] = ["name", "kind", "input", "output", "kernel", "padding", "stride", "from"];

/// Parse a model; `omega` overrides the header's filter size.
pub fn parse_model_str(text: &str, omega: Option<usize>) -> Result<NetworkModel> {
    let mut blocks = blocks(text)?.into_iter().peekable();
    let mut batch = DEFAULT_BATCH;
    let mut header_omega = DEFAULT_OMEGA;
    if let Some(h) = blocks.next_if(|b| b.get("name").is_none()) {
        for e in &h.entries {
            match e.key.as_str() {
                "batch" => batch = parse_usize(e)?,
                "omega" => header_omega = parse_usize(e)?,
                _ => return Err(attr(e, "unknown header key (expected batch or omega)")),
            }
        }
        if batch == 0 {
            return Err(attr(h.get("batch").expect("batch was read"), "must be positive"));
        }
    }
    let omega = omega.unwrap_or(header_omega);
    let mut layers: Vec<LayerDescriptor> = Vec::new();
    for b in blocks {
        let layer = parse_layer(&b, layers.last().map(|l| l.output), &layers)?;
        let layer = layer.with_batch(batch).with_mode(omega).map_err(|err| Error::Attribute {
            line: b.line,
            key: "kernel".into(),
            msg: err.to_string(),
        })?;
        layers.push(layer);
    }
    if layers.is_empty() {
        return Err(Error::EmptyModel);
    }
    Ok(NetworkModel { batch, omega, layers })
}

fn parse_layer(b: &Block, prev: Option<Shape3>, earlier: &[LayerDescriptor]) -> Result<LayerDescriptor> {
    for e in &b.entries {
        if !LAYER_KEYS.contains(&e.key.as_str()) {
            return Err(attr(e, "unknown layer key"));
        }
    }
    let Some(name_e) = b.get("name") else {
        return Err(Error::Attribute { line: b.line, key: "name".into(), msg: "layer block has no name".into() });
    };
    let name = name_e.value.clone();
    if earlier.iter().any(|l| l.name == name) {
        return Err(attr(name_e, format!("duplicate layer name `{name}`")));
    }
    let Some(kind_e) = b.get("kind") else {
        return Err(Error::Attribute { line: b.line, key: "kind".into(), msg: format!("layer `{name}` has no kind") });
    };
    let kind: LayerKind = kind_e.value.parse().map_err(|err: Error| attr(kind_e, err.to_string()))?;

    let input = match (b.get("input"), prev) {
        (Some(e), prev) => {
            let s = parse_shape(e)?;
            if let Some(p) = prev {
                if p != s {
                    return Err(Error::ShapeChain {
                        line: e.line,
                        layer: name,
                        expected: s.to_string(),
                        found: p.to_string(),
                    });
                }
            }
            s
        }
        (None, Some(p)) => p,
        (None, None) => {
            return Err(Error::Attribute {
                line: b.line,
                key: "input".into(),
                msg: "the first layer needs an input shape".into(),
            })
        }
    };
    let output = b.get("output").map(parse_shape).transpose()?;
    let kernel = b.get("kernel").map(parse_kernel).transpose()?;
    let padding = b.get("padding").map(parse_usize).transpose()?.unwrap_or(0);
    let stride = b.get("stride").map(parse_usize).transpose()?;
    let need = |key: &str| Error::Attribute {
        line: b.line,
        key: key.into(),
        msg: format!("{kind} layer `{name}` needs `{key}`"),
    };
    let reject = |key: &str| -> Result<()> {
        match b.get(key) {
            Some(e) => Err(attr(e, format!("not allowed on a {kind} layer"))),
            None => Ok(()),
        }
    };
    let wrap = |err: Error| Error::Attribute { line: b.line, key: kind_e.key.clone(), msg: err.to_string() };

    let layer = match kind {
        LayerKind::Conv => {
            reject("from")?;
            if let Some(s) = stride.filter(|&s| s != 1) {
                return Err(attr(b.get("stride").unwrap(), format!("convolution stride must be 1, got {s}")));
            }
            let out = output.ok_or_else(|| need("output"))?;
            let k = kernel.ok_or_else(|| need("kernel"))?;
            LayerDescriptor::conv(&name, input, out.c, k, padding).map_err(wrap)?
        }
        LayerKind::MaxPool | LayerKind::AvgPool => {
            reject("from")?;
            let (kh, kw) = kernel.ok_or_else(|| need("kernel"))?;
            if kh != kw {
                return Err(attr(b.get("kernel").unwrap(), "pool windows must be square"));
            }
            LayerDescriptor::pool_padded(&name, kind, input, kh, stride.unwrap_or(kh), padding).map_err(wrap)?
        }
        LayerKind::FullyConnected => {
            for k in ["kernel", "padding", "stride", "from"] {
                reject(k)?;
            }
            let out = output.ok_or_else(|| need("output"))?;
            LayerDescriptor::fully_connected(&name, input, out.c).map_err(wrap)?
        }
        LayerKind::Relu => {
            for k in ["kernel", "padding", "stride", "from"] {
                reject(k)?;
            }
            LayerDescriptor::relu(&name, input)
        }
        LayerKind::EltwiseAdd => {
            for k in ["kernel", "padding", "stride"] {
                reject(k)?;
            }
            let e = b.get("from").ok_or_else(|| need("from"))?;
            let Some(src) = earlier.iter().find(|l| l.name == e.value) else {
                return Err(attr(e, format!("no earlier layer named `{}`", e.value)));
            };
            if src.output != input {
                return Err(Error::ShapeChain {
                    line: e.line,
                    layer: name,
                    expected: input.to_string(),
                    found: src.output.to_string(),
                });
            }
            LayerDescriptor::eltwise_add(&name, input, &e.value)
        }
    };
    if let (Some(out), Some(e)) = (output, b.get("output")) {
        if out != layer.output {
            return Err(attr(e, format!("declared {out}, computed {}", layer.output)));
        }
    }
    Ok(layer)
}

pub fn parse_model(path: impl AsRef<Path>, omega: Option<usize>) -> Result<NetworkModel> {
    parse_model_str(&read_text(path.as_ref())?, omega)
}

pub fn serialize_model(model: &NetworkModel) -> String {
    let mut s = format!("batch: {}\nomega: {}\n", model.batch, model.omega);
    for l in &model.layers {
        let _ = write!(s, "---\nname: {}\nkind: {}\ninput: {}\noutput: {}\n", l.name, l.kind, l.input, l.output);
        match l.kind {
            LayerKind::Conv => {
                let _ = writeln!(s, "kernel: {}x{}\npadding: {}", l.kernel_h, l.kernel_w, l.padding);
            }
            LayerKind::MaxPool | LayerKind::AvgPool => {
                let _ = writeln!(s, "kernel: {}\nstride: {}\npadding: {}", l.kernel_h, l.stride, l.padding);
            }
            LayerKind::EltwiseAdd => {
                let _ = writeln!(s, "from: {}", l.from.as_deref().unwrap_or_default());
            }
            LayerKind::FullyConnected | LayerKind::Relu => {}
        }
    }
    s
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

const CONFIG_KEYS: [&str; 17] = [
    "platform",
    "omega",
    "m",
    "n",
    "q",
    "batch",
    "h_b",
    "w_b",
    "d_in",
    "d_out",
    "freq_hz",
    "bandwidth",
    "dsp_total",
    "bram_total",
    "dsp_slack",
    "bram_slack",
    "l_pipe",
];

fn parse_budget(e: &Entry) -> Result<usize> {
    if e.value == "unlimited" {
        Ok(usize::MAX)
    } else {
        parse_usize(e)
    }
}

/// Parse a single-block accelerator config.
pub fn parse_config_str(text: &str) -> Result<AcceleratorConfig> {
    let bs = blocks(text)?;
    if bs.len() != 1 {
        return Err(Error::Config(format!("a config file holds one block, found {}", bs.len())));
    }
    let b = &bs[0];
    let mut map = BTreeMap::new();
    for e in &b.entries {
        if !CONFIG_KEYS.contains(&e.key.as_str()) {
            return Err(attr(e, "unknown config key"));
        }
        map.insert(e.key.as_str(), e);
    }
    let required = |k: &str| -> Result<usize> {
        match map.get(k) {
            Some(e) => parse_usize(e),
            None => Err(Error::Attribute { line: b.line, key: k.into(), msg: "required".into() }),
        }
    };
    let omega = required("omega")?;
    let mut c = AcceleratorConfig::new(
        omega,
        required("m")?,
        required("n")?,
        required("q")?,
        required("d_in")?,
        required("d_out")?,
    );
    if let Some(e) = map.get("platform") {
        let p = match e.value.as_str() {
            "ultra96" => ULTRA96,
            "zcu102-f4" => ZCU102_F4,
            "zcu102-f6" => ZCU102_F6,
            other => return Err(attr(e, format!("unknown platform `{other}`"))),
        };
        c = c.on_platform(&p);
    }
    c.h_b = map.get("h_b").map(|e| parse_usize(e)).transpose()?.unwrap_or(default_h_b(omega));
    c.w_b = map.get("w_b").map(|e| parse_usize(e)).transpose()?.unwrap_or(default_w_b(omega));
    for (key, slot) in [("batch", &mut c.batch), ("dsp_slack", &mut c.dsp_slack), ("bram_slack", &mut c.bram_slack)] {
        if let Some(e) = map.get(key) {
            *slot = parse_usize(e)?;
        }
    }
    for (key, slot) in [("dsp_total", &mut c.dsp_total), ("bram_total", &mut c.bram_total)] {
        if let Some(e) = map.get(key) {
            *slot = parse_budget(e)?;
        }
    }
    for (key, slot) in [("freq_hz", &mut c.freq_hz), ("bandwidth", &mut c.bandwidth)] {
        if let Some(e) = map.get(key) {
            *slot = parse_f64(e)?;
        }
    }
    if let Some(e) = map.get("l_pipe") {
        c.l_pipe = parse_usize(e)? as u64;
    }
    c.validate()?;
    Ok(c)
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<AcceleratorConfig> {
    parse_config_str(&read_text(path.as_ref())?)
}

pub fn serialize_config(c: &AcceleratorConfig) -> String {
    let budget = |v: usize| if v == usize::MAX { "unlimited".to_string() } else { v.to_string() };
    format!(
        "omega: {}\nm: {}\nn: {}\nq: {}\nbatch: {}\nh_b: {}\nw_b: {}\nd_in: {}\nd_out: {}\nfreq_hz: {:e}\nbandwidth: {:e}\n\
         dsp_total: {}\nbram_total: {}\ndsp_slack: {}\nbram_slack: {}\nl_pipe: {}\n",
        c.omega,
        c.pe_rows,
        c.pe_cols,
        c.q,
        c.batch,
        c.h_b,
        c.w_b,
        c.d_in,
        c.d_out,
        c.freq_hz,
        c.bandwidth,
        budget(c.dsp_total),
        budget(c.bram_total),
        c.dsp_slack,
        c.bram_slack,
        c.l_pipe
    )
}

/// Magic of the binary tensor format.
pub const TENSOR_MAGIC: [u8; 4] = *b"WTNS";
pub const TENSOR_HEADER_LEN: usize = 16;
pub const MAX_RANK: usize = 5;

/// 16-byte header (magic, rank `u16`, five `u16` dims) and `i32` data, all
/// little-endian.
pub fn encode_tensor(t: &Tensor) -> Result<Vec<u8>> {
    let dims = t.dims();
    if dims.is_empty() || dims.len() > MAX_RANK {
        return Err(Error::Shape(format!("rank {} not storable (1..={MAX_RANK})", dims.len())));
    }
    let mut out = Vec::with_capacity(TENSOR_HEADER_LEN + 4 * t.len());
    out.extend_from_slice(&TENSOR_MAGIC);
    out.extend_from_slice(&(dims.len() as u16).to_le_bytes());
    for i in 0..MAX_RANK {
        let d = dims.get(i).copied().unwrap_or(0);
        let d = u16::try_from(d).map_err(|_| Error::Shape(format!("dimension {d} exceeds 65535")))?;
        out.extend_from_slice(&d.to_le_bytes());
    }
    for v in t.data() {
        let i = v
            .to_i64()
            .and_then(|x| i32::try_from(x).ok())
            .ok_or_else(|| Error::Shape(format!("value {v} is not a 32-bit integer")))?;
        out.extend_from_slice(&i.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_tensor(bytes: &[u8]) -> Result<Tensor> {
    if bytes.len() < TENSOR_HEADER_LEN || bytes[..4] != TENSOR_MAGIC {
        return Err(Error::Io("not a binary tensor (bad magic)".into()));
    }
    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]) as usize;
    let rank = u16_at(4);
    if rank == 0 || rank > MAX_RANK {
        return Err(Error::Io(format!("bad tensor rank {rank}")));
    }
    let dims: Vec<usize> = (0..rank).map(|i| u16_at(6 + 2 * i)).collect();
    let n: usize = dims.iter().product();
    let body = &bytes[TENSOR_HEADER_LEN..];
    if body.len() != 4 * n {
        return Err(Error::Io(format!("tensor {dims:?} needs {} data bytes, file has {}", 4 * n, body.len())));
    }
    let data =
        body.chunks_exact(4).map(|c| Scalar::from_int(i32::from_le_bytes([c[0], c[1], c[2], c[3]]) as i64)).collect();
    Tensor::from_vec(&dims, data)
}

/// `dims: AxBx…` followed by whitespace-separated values (integers or `n/d`).
pub fn tensor_to_text(t: &Tensor) -> String {
    let dims: Vec<String> = t.dims().iter().map(|d| d.to_string()).collect();
    let mut s = format!("dims: {}\n", dims.join("x"));
    let row = *t.dims().last().unwrap_or(&1);
    for chunk in t.data().chunks(row.max(1)) {
        let vals: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
        s.push_str(&vals.join(" "));
        s.push('\n');
    }
    s
}

pub fn tensor_from_text(text: &str) -> Result<Tensor> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let Some((i, head)) = lines.next() else {
        return Err(Error::Io("empty tensor file".into()));
    };
    let Some(spec) = head.trim().strip_prefix("dims:") else {
        return Err(syntax(i + 1, 1, "expected `dims: AxBx...`"));
    };
    let dims: Vec<usize> = spec
        .split('x')
        .map(|d| d.trim().parse().map_err(|_| syntax(i + 1, 7, format!("bad dimension `{}`", d.trim()))))
        .collect::<Result<_>>()?;
    let mut data = Vec::new();
    for (i, l) in lines {
        for tok in l.split_whitespace() {
            let v: Scalar =
                tok.parse().map_err(|_| syntax(i + 1, l.find(tok).unwrap_or(0) + 1, format!("bad value `{tok}`")))?;
            data.push(v);
        }
    }
    Tensor::from_vec(&dims, data)
}

/// Read a tensor file, binary or text by content.
pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    if bytes.starts_with(&TENSOR_MAGIC) {
        decode_tensor(&bytes)
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::Io(format!("{}: neither binary nor text tensor", path.display())))?;
        tensor_from_text(&text)
    }
}

/// Write a tensor; paths ending in `.txt` get the text format.
pub fn write_tensor(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    let path = path.as_ref();
    let bytes =
        if path.extension().is_some_and(|e| e == "txt") { tensor_to_text(t).into_bytes() } else { encode_tensor(t)? };
    std::fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "\
# two layers
batch: 2
---
name: c1
kind: conv
input: 3x8x8
output: 4x8x8
kernel: 3x3
padding: 1
---
name: p1
kind: maxpool
kernel: 2
stride: 2
";

    #[test]
    fn parses_and_chains() {
        let m = parse_model_str(SMALL, None).unwrap();
        assert_eq!(m.layers.len(), 2);
        assert_eq!(m.layers[1].input, Shape3::new(4, 8, 8));
        assert_eq!(m.layers[1].output, Shape3::new(4, 4, 4));
        assert_eq!(m.layers[0].mode.unwrap().k, 3);
    }

    #[test]
    fn round_trip() {
        let m = parse_model_str(SMALL, Some(6)).unwrap();
        let again = parse_model_str(&serialize_model(&m), None).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn distinct_diagnostics() {
        assert_eq!(parse_model_str("# nothing\n", None), Err(Error::EmptyModel));
        let bad = SMALL.replace("padding: 1", "padding: -1");
        assert!(matches!(parse_model_str(&bad, None), Err(Error::Attribute { line: 9, .. })));
        let bad = SMALL.replace("kernel: 3x3", "kernel 3x3");
        assert!(matches!(parse_model_str(&bad, None), Err(Error::Syntax { line: 8, column: 11, .. })));
        let bad = SMALL.replace("stride: 2\n", "stride: 2\ninput: 5x8x8\n");
        assert!(matches!(parse_model_str(&bad, None), Err(Error::ShapeChain { line: 15, .. })));
        let bad = SMALL.replace("padding: 1", "padding: 1\ndilation: 2");
        assert!(matches!(parse_model_str(&bad, None), Err(Error::Attribute { .. })));
        let bad = SMALL.replace("name: p1\n", "");
        assert!(matches!(parse_model_str(&bad, None), Err(Error::Attribute { line: 11, .. })));
        let bad = SMALL.replace("kernel: 3x3", "kernel: 3xq");
        assert!(matches!(parse_model_str(&bad, None), Err(Error::Syntax { line: 8, column: 11, .. })));
    }

    #[test]
    fn config_round_trip() {
        for c in [AcceleratorConfig::ultra96_f4(), AcceleratorConfig::new(6, 3, 2, 8, 2048, 4096)] {
            assert_eq!(parse_config_str(&serialize_config(&c)).unwrap(), c);
        }
        let c = parse_config_str("platform: ultra96\nomega: 4\nm: 2\nn: 1\nq: 4\nd_in: 4096\nd_out: 1024\n").unwrap();
        assert_eq!(c, AcceleratorConfig::ultra96_f4());
    }

    #[test]
    fn tensor_formats() {
        let t = Tensor::from_i64(&[2, 1, 3], &[1, -2, 3, i32::MAX as i64, 0, i32::MIN as i64]).unwrap();
        let bytes = encode_tensor(&t).unwrap();
        assert_eq!(bytes.len(), 16 + 24);
        assert_eq!(decode_tensor(&bytes).unwrap(), t);
        assert_eq!(tensor_from_text(&tensor_to_text(&t)).unwrap(), t);
        let half = Tensor::from_vec(&[1], vec![Scalar::ratio(1, 2)]).unwrap();
        assert!(encode_tensor(&half).is_err());
        assert_eq!(tensor_from_text(&tensor_to_text(&half)).unwrap(), half);
    }
}
