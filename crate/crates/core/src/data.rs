//! Dataset ingestion and preprocessing.
//!
//! Raw images are 8-bit (any channel count); preprocessing converts to
//! grayscale by channel mean, average-pools to `out_side × out_side`, and
//! normalizes pixel means into `[0, π]` feature angles (`v / 255 · π`,
//! flattened row-major). Non-divisible sides use adaptive windows whose
//! boundaries are `⌊i·side/out⌋`, so e.g. 28 → 8 mixes 3- and 4-pixel
//! windows.
//!
//! Two raw container formats are supported:
//! * QDS binary — magic `QDS1`, little-endian u32 header
//!   `(n_samples, height, width, channels, n_classes)`, then per sample a
//!   label byte, `height·width·channels` pixel bytes, and a split byte
//!   (0 = train, 1 = test);
//! * CSV — one sample per row, pixel values then the label, optional header
//!   row, single-channel square images only.
//!
//! Prepared features use the same container shape with magic `QDF1`:
//! little-endian u32 header `(n_samples, out_side, n_classes, src_height,
//! src_width)`, then per sample a label byte, `out_side²` little-endian f32
//! features, and a split byte.

use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::circuit::FeatureVector;
use crate::error::{Error, Result};
use crate::seed::rng_for;

pub const QDS_MAGIC: &[u8; 4] = b"QDS1";
pub const QDF_MAGIC: &[u8; 4] = b"QDF1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawSample {
    pub pixels: Vec<u8>,
    pub label: usize,
    pub split: Split,
}

/// 8-bit image dataset with uniform dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub n_classes: usize,
    pub samples: Vec<RawSample>,
}

impl RawDataset {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(Error::Validation(format!(
                "dataset needs at least 2 classes, got {}",
                self.n_classes
            )));
        }
        let stride = self.height * self.width * self.channels;
        for (i, s) in self.samples.iter().enumerate() {
            if s.pixels.len() != stride {
                return Err(Error::Validation(format!(
                    "sample {i} has {} pixel bytes, expected {stride}",
                    s.pixels.len()
                )));
            }
            if s.label >= self.n_classes {
                return Err(Error::Validation(format!(
                    "sample {i} label {} >= n_classes {}",
                    s.label, self.n_classes
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSample {
    pub features: FeatureVector,
    pub label: usize,
    pub split: Split,
}

/// Pooled and normalized features ready for angle encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDataset {
    pub out_side: usize,
    pub n_classes: usize,
    /// Source image resolution the features were pooled from.
    pub src_height: usize,
    pub src_width: usize,
    pub samples: Vec<PreparedSample>,
}

impl PreparedDataset {
    pub fn n_features(&self) -> usize {
        self.out_side * self.out_side
    }

    pub fn train_samples(&self) -> impl Iterator<Item = &PreparedSample> {
        self.samples.iter().filter(|s| s.split == Split::Train)
    }

    pub fn test_samples(&self) -> impl Iterator<Item = &PreparedSample> {
        self.samples.iter().filter(|s| s.split == Split::Test)
    }

    /// Stratified pick: the first `per_class` training samples of each class
    /// under a seeded shuffle. Errors name the first class that runs short.
    pub fn stratified_train_indices(&self, per_class: usize, seed: u64) -> Result<Vec<usize>> {
        let train: Vec<usize> = self
            .samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.split == Split::Train)
            .map(|(i, _)| i)
            .collect();
        let mut shuffled = train;
        shuffled.shuffle(&mut rng_for(seed, 0));
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); self.n_classes];
        for &i in &shuffled {
            let class = self.samples[i].label;
            if by_class[class].len() < per_class {
                by_class[class].push(i);
            }
        }
        for (class, picked) in by_class.iter().enumerate() {
            if picked.len() < per_class {
                return Err(Error::Validation(format!(
                    "class {class} has only {} training samples, need {per_class}",
                    picked.len()
                )));
            }
        }
        Ok(by_class.into_iter().flatten().collect())
    }
}

/// Grayscale conversion (channel mean) followed by adaptive average pooling.
/// Returns the `out_side × out_side` matrix of window means, row-major.
pub fn average_pool(
    pixels: &[u8],
    height: usize,
    width: usize,
    channels: usize,
    out_side: usize,
) -> Result<Vec<f64>> {
    if out_side == 0 {
        return Err(Error::Validation("out_side must be >= 1".into()));
    }
    if out_side > height || out_side > width {
        return Err(Error::Validation(format!(
            "out_side {out_side} exceeds image side {height}x{width}"
        )));
    }
    if pixels.len() != height * width * channels {
        return Err(Error::Validation(format!(
            "pixel buffer length {} does not match {height}x{width}x{channels}",
            pixels.len()
        )));
    }
    let gray = |r: usize, c: usize| -> f64 {
        let base = (r * width + c) * channels;
        let sum: u32 = pixels[base..base + channels].iter().map(|&p| u32::from(p)).sum();
        f64::from(sum) / channels as f64
    };
    let bound = |i: usize, side: usize| i * side / out_side;
    let mut out = Vec::with_capacity(out_side * out_side);
    for r in 0..out_side {
        let (r0, r1) = (bound(r, height), bound(r + 1, height));
        for c in 0..out_side {
            let (c0, c1) = (bound(c, width), bound(c + 1, width));
            let mut acc = 0.0;
            for rr in r0..r1 {
                for cc in c0..c1 {
                    acc += gray(rr, cc);
                }
            }
            out.push(acc / ((r1 - r0) * (c1 - c0)) as f64);
        }
    }
    Ok(out)
}

/// Map pooled pixel means into `[0, π]` rotation angles.
pub fn normalize(pooled: &[f64]) -> Result<FeatureVector> {
    FeatureVector::new(
        pooled
            .iter()
            .map(|&v| v / 255.0 * std::f64::consts::PI)
            .collect(),
    )
}

/// Pool and normalize every sample of a raw dataset.
pub fn prepare(raw: &RawDataset, out_side: usize) -> Result<PreparedDataset> {
    raw.validate()?;
    let samples = raw
        .samples
        .iter()
        .map(|s| {
            let pooled = average_pool(&s.pixels, raw.height, raw.width, raw.channels, out_side)?;
            Ok(PreparedSample {
                features: normalize(&pooled)?,
                label: s.label,
                split: s.split,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PreparedDataset {
        out_side,
        n_classes: raw.n_classes,
        src_height: raw.height,
        src_width: raw.width,
        samples,
    })
}

// ---------------------------------------------------------------------------
// Synthetic fixtures
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// Two classes: bright left half vs bright right half.
    TwoBlob,
    /// Four classes: one bright quadrant each.
    FourCorner,
    /// Two classes: bright ring vs filled disc.
    Ring,
}

impl SynthKind {
    pub fn n_classes(self) -> usize {
        match self {
            SynthKind::TwoBlob | SynthKind::Ring => 2,
            SynthKind::FourCorner => 4,
        }
    }

    pub fn from_name(name: &str) -> Option<SynthKind> {
        match name {
            "two-blob" => Some(SynthKind::TwoBlob),
            "four-corner" => Some(SynthKind::FourCorner),
            "ring" => Some(SynthKind::Ring),
            _ => None,
        }
    }
}

const SYNTH_BRIGHT: f64 = 215.0;
const SYNTH_DARK: f64 = 40.0;

/// Deterministic synthetic grayscale dataset with class-dependent intensity
/// structure. Per class, every third sample is tagged as test (2:1 split).
pub fn synth_dataset(
    kind: SynthKind,
    n_per_class: usize,
    side: usize,
    seed: u64,
) -> RawDataset {
    let n_classes = kind.n_classes();
    let mut samples = Vec::with_capacity(n_classes * n_per_class);
    for class in 0..n_classes {
        for i in 0..n_per_class {
            let mut rng = rng_for(seed, (class * n_per_class + i) as u64);
            let brightness_jitter: f64 = rng.gen_range(-15.0..15.0);
            let mut pixels = Vec::with_capacity(side * side);
            for r in 0..side {
                for c in 0..side {
                    let base = synth_intensity(kind, class, r, c, side);
                    let noise: f64 = rng.gen_range(-12.0..12.0);
                    let v = (base + brightness_jitter + noise).clamp(0.0, 255.0);
                    pixels.push(v.round() as u8);
                }
            }
            let split = if i % 3 == 2 { Split::Test } else { Split::Train };
            samples.push(RawSample { pixels, label: class, split });
        }
    }
    RawDataset {
        height: side,
        width: side,
        channels: 1,
        n_classes,
        samples,
    }
}

fn synth_intensity(kind: SynthKind, class: usize, r: usize, c: usize, side: usize) -> f64 {
    let half = side / 2;
    match kind {
        SynthKind::TwoBlob => {
            let bright_left = class == 0;
            if (c < half) == bright_left {
                SYNTH_BRIGHT
            } else {
                SYNTH_DARK
            }
        }
        SynthKind::FourCorner => {
            let quadrant = usize::from(r >= half) * 2 + usize::from(c >= half);
            if quadrant == class {
                SYNTH_BRIGHT
            } else {
                SYNTH_DARK
            }
        }
        SynthKind::Ring => {
            let fr = r as f64 + 0.5 - side as f64 / 2.0;
            let fc = c as f64 + 0.5 - side as f64 / 2.0;
            let radius = (fr * fr + fc * fc).sqrt();
            let outer = side as f64 / 2.2;
            let inner = side as f64 / 4.5;
            let lit = if class == 0 {
                radius <= outer && radius >= inner
            } else {
                radius <= outer
            };
            if lit {
                SYNTH_BRIGHT
            } else {
                SYNTH_DARK
            }
        }
    }
}

// ---------------------------------------------------------------------------
// QDS binary container
// ---------------------------------------------------------------------------

fn push_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    origin: String,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Validation(format!(
                "{}: truncated while reading {what} (offset {})",
                self.origin, self.pos
            )));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }
}

fn split_byte(split: Split) -> u8 {
    match split {
        Split::Train => 0,
        Split::Test => 1,
    }
}

fn split_from_byte(b: u8, origin: &str) -> Result<Split> {
    match b {
        0 => Ok(Split::Train),
        1 => Ok(Split::Test),
        other => Err(Error::Validation(format!(
            "{origin}: invalid split byte {other}"
        ))),
    }
}

/// Encode a raw dataset into the QDS binary container.
pub fn write_qds_bytes(ds: &RawDataset) -> Result<Vec<u8>> {
    ds.validate()?;
    let mut buf = Vec::new();
    buf.extend_from_slice(QDS_MAGIC);
    push_u32(&mut buf, ds.samples.len() as u32);
    push_u32(&mut buf, ds.height as u32);
    push_u32(&mut buf, ds.width as u32);
    push_u32(&mut buf, ds.channels as u32);
    push_u32(&mut buf, ds.n_classes as u32);
    for s in &ds.samples {
        buf.push(s.label as u8);
        buf.extend_from_slice(&s.pixels);
        buf.push(split_byte(s.split));
    }
    Ok(buf)
}

pub fn read_qds_bytes(bytes: &[u8], origin: &str) -> Result<RawDataset> {
    let mut r = ByteReader { bytes, pos: 0, origin: origin.to_string() };
    let magic = r.take(4, "magic")?;
    if magic != QDS_MAGIC {
        return Err(Error::Validation(format!(
            "{origin}: bad magic {magic:?}, expected \"QDS1\""
        )));
    }
    let n_samples = r.u32("n_samples")? as usize;
    let height = r.u32("height")? as usize;
    let width = r.u32("width")? as usize;
    let channels = r.u32("channels")? as usize;
    let n_classes = r.u32("n_classes")? as usize;
    if height == 0 || width == 0 || channels == 0 {
        return Err(Error::Validation(format!(
            "{origin}: zero image dimension in header"
        )));
    }
    let stride = height * width * channels;
    let mut samples = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let label = r.u8("label")? as usize;
        if label >= n_classes {
            return Err(Error::Validation(format!(
                "{origin}: sample {i} label {label} >= n_classes {n_classes}"
            )));
        }
        let pixels = r.take(stride, "pixels")?.to_vec();
        let split = split_from_byte(r.u8("split")?, origin)?;
        samples.push(RawSample { pixels, label, split });
    }
    if r.pos != bytes.len() {
        return Err(Error::Validation(format!(
            "{origin}: {} trailing bytes after last sample",
            bytes.len() - r.pos
        )));
    }
    let ds = RawDataset { height, width, channels, n_classes, samples };
    ds.validate()?;
    Ok(ds)
}

pub fn write_qds_file(path: &Path, ds: &RawDataset) -> Result<()> {
    std::fs::write(path, write_qds_bytes(ds)?)
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_qds_file(path: &Path) -> Result<RawDataset> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    read_qds_bytes(&bytes, &path.display().to_string())
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

/// Parse CSV rows of `pixel…, label`. Images are single-channel and square;
/// the side is inferred from the row length. All samples are tagged as
/// training data; pair with a second file (or QDS) for test samples.
pub fn read_csv(text: &str, origin: &str) -> Result<RawDataset> {
    let mut rows: Vec<(usize, Vec<u8>, usize)> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let numeric = fields
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>();
        let values = match numeric {
            Ok(v) => v,
            Err(_) if rows.is_empty() && width.is_none() => continue, // header row
            Err(_) => {
                return Err(Error::parse(origin, idx + 1, "non-numeric field"));
            }
        };
        if values.len() < 2 {
            return Err(Error::parse(origin, idx + 1, "rows need pixels plus a label"));
        }
        let n_pixels = values.len() - 1;
        let side = (n_pixels as f64).sqrt().round() as usize;
        if side * side != n_pixels {
            return Err(Error::parse(
                origin,
                idx + 1,
                format!("{n_pixels} pixels is not a square image"),
            ));
        }
        match width {
            None => width = Some(side),
            Some(w) if w != side => {
                return Err(Error::parse(origin, idx + 1, "inconsistent row lengths"));
            }
            _ => {}
        }
        let label = values[n_pixels];
        if label < 0.0 || label.fract() != 0.0 {
            return Err(Error::parse(origin, idx + 1, "label must be a non-negative integer"));
        }
        let pixels: Vec<u8> = values[..n_pixels]
            .iter()
            .map(|&v| v.clamp(0.0, 255.0).round() as u8)
            .collect();
        rows.push((idx, pixels, label as usize));
    }
    let side = width.ok_or_else(|| Error::parse(origin, 0, "no data rows"))?;
    let n_classes = rows.iter().map(|(_, _, l)| l + 1).max().unwrap_or(0).max(2);
    let samples = rows
        .into_iter()
        .map(|(_, pixels, label)| RawSample { pixels, label, split: Split::Train })
        .collect();
    let ds = RawDataset {
        height: side,
        width: side,
        channels: 1,
        n_classes,
        samples,
    };
    ds.validate()?;
    Ok(ds)
}

pub fn read_csv_file(path: &Path) -> Result<RawDataset> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    read_csv(&text, &path.display().to_string())
}

/// Raw-data format selector for loaders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawFormat {
    QdsBinary,
    Csv,
}

/// Load a raw dataset, inferring the format from the extension when not
/// forced (`.csv` → CSV, anything else → QDS binary).
pub fn load(path: &Path, format: Option<RawFormat>) -> Result<RawDataset> {
    let fmt = format.unwrap_or_else(|| {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => RawFormat::Csv,
            _ => RawFormat::QdsBinary,
        }
    });
    match fmt {
        RawFormat::QdsBinary => read_qds_file(path),
        RawFormat::Csv => read_csv_file(path),
    }
}

// ---------------------------------------------------------------------------
// QDF prepared-feature container
// ---------------------------------------------------------------------------

pub fn write_qdf_bytes(ds: &PreparedDataset) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(QDF_MAGIC);
    push_u32(&mut buf, ds.samples.len() as u32);
    push_u32(&mut buf, ds.out_side as u32);
    push_u32(&mut buf, ds.n_classes as u32);
    push_u32(&mut buf, ds.src_height as u32);
    push_u32(&mut buf, ds.src_width as u32);
    for s in &ds.samples {
        buf.push(s.label as u8);
        for &v in s.features.values() {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        buf.push(split_byte(s.split));
    }
    buf
}

pub fn read_qdf_bytes(bytes: &[u8], origin: &str) -> Result<PreparedDataset> {
    let mut r = ByteReader { bytes, pos: 0, origin: origin.to_string() };
    let magic = r.take(4, "magic")?;
    if magic != QDF_MAGIC {
        return Err(Error::Validation(format!(
            "{origin}: bad magic {magic:?}, expected \"QDF1\""
        )));
    }
    let n_samples = r.u32("n_samples")? as usize;
    let out_side = r.u32("out_side")? as usize;
    let n_classes = r.u32("n_classes")? as usize;
    let src_height = r.u32("src_height")? as usize;
    let src_width = r.u32("src_width")? as usize;
    let n_features = out_side * out_side;
    let mut samples = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let label = r.u8("label")? as usize;
        if label >= n_classes {
            return Err(Error::Validation(format!(
                "{origin}: sample {i} label {label} >= n_classes {n_classes}"
            )));
        }
        let raw = r.take(4 * n_features, "features")?;
        // f32 storage can overshoot the [0, π] bounds by one ulp; snap
        // values within 1e-6 back into range before validating.
        let snap = |v: f64| {
            if (-1e-6..=0.0).contains(&v) {
                0.0
            } else if v > std::f64::consts::PI && v <= std::f64::consts::PI + 1e-6 {
                std::f64::consts::PI
            } else {
                v
            }
        };
        let values: Vec<f64> = raw
            .chunks_exact(4)
            .map(|c| snap(f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]]))))
            .collect();
        let features = FeatureVector::new(values).map_err(|e| {
            Error::Validation(format!("{origin}: sample {i}: {e}"))
        })?;
        let split = split_from_byte(r.u8("split")?, origin)?;
        samples.push(PreparedSample { features, label, split });
    }
    if r.pos != bytes.len() {
        return Err(Error::Validation(format!(
            "{origin}: {} trailing bytes after last sample",
            bytes.len() - r.pos
        )));
    }
    Ok(PreparedDataset {
        out_side,
        n_classes,
        src_height,
        src_width,
        samples,
    })
}

pub fn write_qdf_file(path: &Path, ds: &PreparedDataset) -> Result<()> {
    std::fs::write(path, write_qdf_bytes(ds))
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_qdf_file(path: &Path) -> Result<PreparedDataset> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    read_qdf_bytes(&bytes, &path.display().to_string())
}
