//! Textual architecture descriptors.
//!
//! ```text
//! arch   := "in(" C "," H "," W ")" layer*
//! layer  := "conv(" out "," kh "," kw "," stride ["," pad] ")"
//!         | "pool(" size "," stride ")"
//!         | "dense(" units ")"
//!         | "relu" | "softmax"
//!         | "res[" layer* "]"        identity shortcut
//!         | "resp[" layer* "]"       1×1 projection shortcut when shapes differ
//! ```

use std::fmt;
use std::str::FromStr;

use crate::error::{NnError, Result};
use crate::tensor::Shape;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerSpec {
    Conv {
        out_channels: usize,
        kernel_h: usize,
        kernel_w: usize,
        stride: usize,
        padding: usize,
    },
    MaxPool {
        size: usize,
        stride: usize,
    },
    Dense {
        units: usize,
    },
    Relu,
    Softmax,
    Residual {
        inner: Vec<LayerSpec>,
        projection: bool,
    },
}

impl LayerSpec {
    pub fn conv(out_channels: usize, kernel: usize) -> Self {
        Self::Conv {
            out_channels,
            kernel_h: kernel,
            kernel_w: kernel,
            stride: 1,
            padding: 0,
        }
    }

    pub fn pool2() -> Self {
        Self::MaxPool { size: 2, stride: 2 }
    }

    pub fn dense(units: usize) -> Self {
        Self::Dense { units }
    }

    /// Output shape for the given input, or an error if the layer cannot
    /// accept it.
    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        let mismatch = |what: String| Err(NnError::ShapeMismatch(what));
        match *self {
            Self::Conv {
                out_channels,
                kernel_h,
                kernel_w,
                stride,
                padding,
            } => {
                if out_channels == 0 || kernel_h == 0 || kernel_w == 0 || stride == 0 {
                    return Err(NnError::InvalidSpec(format!("{self}: dimensions must be positive")));
                }
                let (h, w) = (input.h + 2 * padding, input.w + 2 * padding);
                if h < kernel_h || w < kernel_w {
                    return mismatch(format!("{self} needs at least {kernel_h}x{kernel_w}, got {input}"));
                }
                Ok(Shape::new(out_channels, (h - kernel_h) / stride + 1, (w - kernel_w) / stride + 1))
            }
            Self::MaxPool { size, stride } => {
                if size == 0 || stride == 0 {
                    return Err(NnError::InvalidSpec(format!("{self}: dimensions must be positive")));
                }
                if input.h < size || input.w < size {
                    return mismatch(format!("{self} needs at least {size}x{size}, got {input}"));
                }
                Ok(Shape::new(input.c, (input.h - size) / stride + 1, (input.w - size) / stride + 1))
            }
            Self::Dense { units } => {
                if units == 0 {
                    return Err(NnError::InvalidSpec("dense(0)".into()));
                }
                Ok(Shape::flat(units))
            }
            Self::Relu | Self::Softmax => Ok(input),
            Self::Residual { ref inner, projection } => {
                let out = inner.iter().try_fold(input, |s, l| l.output_shape(s))?;
                if out != input && !projection {
                    return mismatch(format!(
                        "residual inner stack maps {input} to {out} and no projection is configured"
                    ));
                }
                if out != input && projection_stride(input, out).is_none() {
                    return mismatch(format!("no 1x1 projection maps {input} to {out}"));
                }
                Ok(out)
            }
        }
    }
}

/// Stride of a 1×1 convolution that maps `input`'s spatial size onto `out`'s.
pub(crate) fn projection_stride(input: Shape, out: Shape) -> Option<usize> {
    (1..=input.h.max(input.w).max(1))
        .find(|&s| (input.h - 1) / s + 1 == out.h && (input.w - 1) / s + 1 == out.w)
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Conv {
                out_channels,
                kernel_h,
                kernel_w,
                stride,
                padding,
            } => {
                write!(f, "conv({out_channels},{kernel_h},{kernel_w},{stride}")?;
                if *padding > 0 {
                    write!(f, ",{padding}")?;
                }
                write!(f, ")")
            }
            Self::MaxPool { size, stride } => write!(f, "pool({size},{stride})"),
            Self::Dense { units } => write!(f, "dense({units})"),
            Self::Relu => write!(f, "relu"),
            Self::Softmax => write!(f, "softmax"),
            Self::Residual { inner, projection } => {
                write!(f, "{}[", if *projection { "resp" } else { "res" })?;
                for (i, l) in inner.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{l}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// Input shape plus an ordered layer list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub input: Shape,
    pub layers: Vec<LayerSpec>,
}

/// Shipped architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Two 5×5 conv + 2×2 max-pool stages, dense(1000), dense(K).
    PaperInitial,
    /// Three 5×5 conv stages with 32/128/128 filters, dense(1000), dense(K).
    PaperBest,
}

impl Preset {
    pub const PAPER_INITIAL_FILTERS: [usize; 2] = [16, 32];
    pub const PAPER_BEST_FILTERS: [usize; 3] = [32, 128, 128];

    pub fn name(self) -> &'static str {
        match self {
            Preset::PaperInitial => "paper-initial",
            Preset::PaperBest => "paper-best",
        }
    }

    pub fn filters(self) -> &'static [usize] {
        match self {
            Preset::PaperInitial => &Self::PAPER_INITIAL_FILTERS,
            Preset::PaperBest => &Self::PAPER_BEST_FILTERS,
        }
    }

    pub fn build(self, input: Shape, n_classes: usize) -> Architecture {
        Architecture::cnn(input, self.filters(), 5, &[1000], n_classes)
    }
}

impl FromStr for Preset {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-initial" => Ok(Preset::PaperInitial),
            "paper-best" => Ok(Preset::PaperBest),
            other => Err(NnError::InvalidSpec(format!(
                "unknown preset `{other}` (paper-initial|paper-best)"
            ))),
        }
    }
}

impl Architecture {
    /// `[conv(f, k) relu pool(2,2)]* [dense(u) relu]* dense(K) softmax`.
    pub fn cnn(input: Shape, filters: &[usize], kernel: usize, hidden: &[usize], n_classes: usize) -> Self {
        let mut layers = Vec::new();
        for &f in filters {
            layers.extend([LayerSpec::conv(f, kernel), LayerSpec::Relu, LayerSpec::pool2()]);
        }
        for &u in hidden {
            layers.extend([LayerSpec::dense(u), LayerSpec::Relu]);
        }
        layers.extend([LayerSpec::dense(n_classes), LayerSpec::Softmax]);
        Self { input, layers }
    }

    /// Shapes after every top-level layer (first entry is the input).
    pub fn shapes(&self) -> Result<Vec<Shape>> {
        let mut shapes = vec![self.input];
        for l in &self.layers {
            let next = l.output_shape(*shapes.last().unwrap())?;
            shapes.push(next);
        }
        Ok(shapes)
    }

    /// Checks shapes and that the network ends in `softmax` with no other
    /// softmax layer.
    pub fn validate(&self) -> Result<Shape> {
        if self.input.is_empty() {
            return Err(NnError::InvalidSpec(format!("empty input shape {}", self.input)));
        }
        let out = *self.shapes()?.last().unwrap();
        if self.layers.last() != Some(&LayerSpec::Softmax) {
            return Err(NnError::InvalidSpec("network must end with softmax".into()));
        }
        fn count_softmax(ls: &[LayerSpec]) -> usize {
            ls.iter()
                .map(|l| match l {
                    LayerSpec::Softmax => 1,
                    LayerSpec::Residual { inner, .. } => count_softmax(inner),
                    _ => 0,
                })
                .sum()
        }
        if count_softmax(&self.layers) != 1 {
            return Err(NnError::InvalidSpec("softmax allowed only as the final layer".into()));
        }
        Ok(out)
    }

    pub fn n_classes(&self) -> Result<usize> {
        Ok(self.validate()?.len())
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.input;
        write!(f, "in({},{},{})", s.c, s.h, s.w)?;
        for l in &self.layers {
            write!(f, " {l}")?;
        }
        Ok(())
    }
}

impl FromStr for Architecture {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { src: s, pos: 0 };
        let (name, args) = match p.next()? {
            Some(Token::Call(n, a)) => (n, a),
            _ => return Err(p.error("expected in(C,H,W)")),
        };
        if name != "in" || args.len() != 3 {
            return Err(p.error("expected in(C,H,W)"));
        }
        let input = Shape::new(args[0], args[1], args[2]);
        let layers = p.layers(false)?;
        Ok(Self { input, layers })
    }
}

enum Token<'a> {
    Call(&'a str, Vec<usize>),
    Open(&'a str),
    Close,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, msg: &str) -> NnError {
        NnError::InvalidSpec(format!("{msg} at byte {} of `{}`", self.pos, self.src))
    }

    fn next(&mut self) -> Result<Option<Token<'a>>> {
        let rest = &self.src[self.pos..];
        let trimmed = rest.trim_start();
        self.pos += rest.len() - trimmed.len();
        if trimmed.is_empty() {
            return Ok(None);
        }
        if let Some(after) = trimmed.strip_prefix(']') {
            self.pos = self.src.len() - after.len();
            return Ok(Some(Token::Close));
        }
        let name_len = trimmed
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '-'))
            .unwrap_or(trimmed.len());
        if name_len == 0 {
            return Err(self.error("expected a layer name"));
        }
        let name = &trimmed[..name_len];
        self.pos += name_len;
        let rest = &self.src[self.pos..];
        if let Some(after) = rest.strip_prefix('[') {
            self.pos = self.src.len() - after.len();
            return Ok(Some(Token::Open(name)));
        }
        if let Some(after) = rest.strip_prefix('(') {
            let close = after.find(')').ok_or_else(|| self.error("unclosed `(`"))?;
            let args = after[..close]
                .split(',')
                .map(|a| a.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| self.error("arguments must be non-negative integers"))?;
            self.pos = self.src.len() - after.len() + close + 1;
            return Ok(Some(Token::Call(name, args)));
        }
        Ok(Some(Token::Call(name, Vec::new())))
    }

    fn layers(&mut self, nested: bool) -> Result<Vec<LayerSpec>> {
        let mut out = Vec::new();
        loop {
            let tok = match self.next()? {
                None if nested => return Err(self.error("unclosed `[`")),
                None => return Ok(out),
                Some(t) => t,
            };
            let layer = match tok {
                Token::Close if nested => return Ok(out),
                Token::Close => return Err(self.error("unexpected `]`")),
                Token::Open(name) => {
                    let projection = match name {
                        "res" => false,
                        "resp" => true,
                        _ => return Err(self.error("expected res[ or resp[")),
                    };
                    LayerSpec::Residual {
                        inner: self.layers(true)?,
                        projection,
                    }
                }
                Token::Call(name, args) => match (name, args.as_slice()) {
                    ("conv", &[o, kh, kw, s]) => LayerSpec::Conv {
                        out_channels: o,
                        kernel_h: kh,
                        kernel_w: kw,
                        stride: s,
                        padding: 0,
                    },
                    ("conv", &[o, kh, kw, s, p]) => LayerSpec::Conv {
                        out_channels: o,
                        kernel_h: kh,
                        kernel_w: kw,
                        stride: s,
                        padding: p,
                    },
                    ("pool", &[size, stride]) => LayerSpec::MaxPool { size, stride },
                    ("dense", &[units]) => LayerSpec::Dense { units },
                    ("relu", &[]) => LayerSpec::Relu,
                    ("softmax", &[]) => LayerSpec::Softmax,
                    _ => return Err(self.error(&format!("unknown layer `{name}` with {} args", args.len()))),
                },
            };
            out.push(layer);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar_round_trip() {
        let s = "in(3,64,128) conv(16,5,5,1) relu pool(2,2) res[conv(16,3,3,1,1) relu conv(16,3,3,1,1)] \
                 resp[conv(8,1,1,2)] dense(1000) relu dense(17) softmax";
        let a: Architecture = s.parse().unwrap();
        assert_eq!(a.input, Shape::new(3, 64, 128));
        assert_eq!(a.layers.len(), 9);
        assert_eq!(a.to_string().parse::<Architecture>().unwrap(), a);
        assert_eq!(a.n_classes().unwrap(), 17);
    }

    #[test]
    fn grammar_errors() {
        for bad in [
            "",
            "conv(1,1,1,1)",
            "in(1,2) relu",
            "in(1,4,4) conv(1,1) softmax",
            "in(1,4,4) res[relu softmax",
            "in(1,4,4) relu ] softmax",
            "in(1,4,4) foo softmax",
            "in(1,4,4) dense(-1) softmax",
        ] {
            assert!(bad.parse::<Architecture>().is_err(), "{bad}");
        }
    }

    #[test]
    fn conv_output_dims_valid_mode() {
        let conv = LayerSpec::conv(8, 5);
        assert_eq!(conv.output_shape(Shape::new(3, 64, 128)).unwrap(), Shape::new(8, 60, 124));
        let strided = LayerSpec::Conv {
            out_channels: 2,
            kernel_h: 3,
            kernel_w: 3,
            stride: 2,
            padding: 0,
        };
        assert_eq!(strided.output_shape(Shape::new(1, 9, 11)).unwrap(), Shape::new(2, 4, 5));
        assert!(conv.output_shape(Shape::new(1, 4, 10)).is_err());
    }

    #[test]
    fn presets_produce_17_logits_on_64x128x3() {
        for p in [Preset::PaperInitial, Preset::PaperBest] {
            let a = p.build(Shape::new(3, 64, 128), 17);
            assert_eq!(a.n_classes().unwrap(), 17, "{}", p.name());
            assert_eq!(a.to_string().parse::<Architecture>().unwrap(), a);
        }
        assert!("paper-huge".parse::<Preset>().is_err());
    }

    #[test]
    fn softmax_placement() {
        assert!("in(1,2,2) dense(3)".parse::<Architecture>().unwrap().validate().is_err());
        assert!("in(1,2,2) softmax dense(3) softmax"
            .parse::<Architecture>()
            .unwrap()
            .validate()
            .is_err());
    }

    #[test]
    fn residual_shape_rules() {
        let block = LayerSpec::Residual {
            inner: vec![LayerSpec::conv(4, 3)],
            projection: false,
        };
        assert!(matches!(
            block.output_shape(Shape::new(2, 8, 8)),
            Err(NnError::ShapeMismatch(_))
        ));
        let projected = LayerSpec::Residual {
            inner: vec![LayerSpec::Conv {
                out_channels: 4,
                kernel_h: 1,
                kernel_w: 1,
                stride: 2,
                padding: 0,
            }],
            projection: true,
        };
        assert_eq!(projected.output_shape(Shape::new(2, 8, 8)).unwrap(), Shape::new(4, 4, 4));
    }
}
