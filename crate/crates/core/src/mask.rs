//! Binary raster masks and the pixel-level mathematics built on them:
//! overlap metrics, error decomposition, connected components, exact
//! Euclidean distance transforms and disc morphology.
//!
//! Every function here is pure. Argmax-style queries break ties in raster
//! order (smallest `y`, then smallest `x`) so results are reproducible.

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MaskError {
    #[error("mask dimensions differ: {0}x{1} vs {2}x{3}", .left.0, .left.1, .right.0, .right.1)]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("operation requires a nonempty mask")]
    Empty,
    #[error("mask must have nonzero width and height")]
    ZeroArea,
    #[error("expected {expected} pixels for the grid, got {got}")]
    BitCount { expected: usize, got: usize },
    #[error("pixel ({x}, {y}) is outside the {width}x{height} grid")]
    OutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
}

/// Column/row index of a pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PixelCoord {
    pub x: usize,
    pub y: usize,
}

impl PixelCoord {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    fn sq_dist(self, other: PixelCoord) -> u64 {
        let dx = self.x.abs_diff(other.x) as u64;
        let dy = self.y.abs_diff(other.y) as u64;
        dx * dx + dy * dy
    }
}

/// Axis-aligned box with inclusive pixel bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelBox {
    pub x1: usize,
    pub y1: usize,
    pub x2: usize,
    pub y2: usize,
}

impl PixelBox {
    /// Builds a box from two arbitrary corners, ordering them.
    pub fn from_corners(a: PixelCoord, b: PixelCoord) -> Self {
        Self {
            x1: a.x.min(b.x),
            y1: a.y.min(b.y),
            x2: a.x.max(b.x),
            y2: a.y.max(b.y),
        }
    }

    pub fn contains(&self, p: PixelCoord) -> bool {
        (self.x1..=self.x2).contains(&p.x) && (self.y1..=self.y2).contains(&p.y)
    }

    pub fn width(&self) -> usize {
        self.x2 - self.x1 + 1
    }

    pub fn height(&self) -> usize {
        self.y2 - self.y1 + 1
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }
}

/// A binary mask over a `width × height` grid, stored row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl fmt::Debug for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Mask({}x{}, {} foreground)",
            self.width,
            self.height,
            self.count()
        )
    }
}

impl Mask {
    /// An all-background mask.
    pub fn new(width: usize, height: usize) -> Result<Self, MaskError> {
        if width == 0 || height == 0 {
            return Err(MaskError::ZeroArea);
        }
        Ok(Self {
            width,
            height,
            bits: vec![false; width * height],
        })
    }

    pub fn full(width: usize, height: usize) -> Result<Self, MaskError> {
        let mut m = Self::new(width, height)?;
        m.bits.fill(true);
        Ok(m)
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, MaskError> {
        if width == 0 || height == 0 {
            return Err(MaskError::ZeroArea);
        }
        if bits.len() != width * height {
            return Err(MaskError::BitCount {
                expected: width * height,
                got: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        f: impl Fn(usize, usize) -> bool,
    ) -> Result<Self, MaskError> {
        let mut m = Self::new(width, height)?;
        for y in 0..height {
            for x in 0..width {
                m.bits[y * width + x] = f(x, y);
            }
        }
        Ok(m)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Panics if `(x, y)` is outside the grid.
    pub fn get(&self, x: usize, y: usize) -> bool {
        assert!(x < self.width && y < self.height, "pixel out of bounds");
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        assert!(x < self.width && y < self.height, "pixel out of bounds");
        self.bits[y * self.width + x] = value;
    }

    /// Membership test that treats out-of-grid pixels as background.
    pub fn contains(&self, p: PixelCoord) -> bool {
        self.in_bounds(p) && self.bits[p.y * self.width + p.x]
    }

    pub fn in_bounds(&self, p: PixelCoord) -> bool {
        p.x < self.width && p.y < self.height
    }

    pub fn check_bounds(&self, p: PixelCoord) -> Result<(), MaskError> {
        if self.in_bounds(p) {
            Ok(())
        } else {
            Err(MaskError::OutOfBounds {
                x: p.x,
                y: p.y,
                width: self.width,
                height: self.height,
            })
        }
    }

    /// Number of foreground pixels.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn ensure_same_dims(&self, other: &Mask) -> Result<(), MaskError> {
        if self.dims() == other.dims() {
            Ok(())
        } else {
            Err(MaskError::DimensionMismatch {
                left: self.dims(),
                right: other.dims(),
            })
        }
    }

    fn zip_with(&self, other: &Mask, op: impl Fn(bool, bool) -> bool) -> Result<Mask, MaskError> {
        self.ensure_same_dims(other)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(&a, &b)| op(a, b))
            .collect();
        Ok(Mask {
            width: self.width,
            height: self.height,
            bits,
        })
    }

    pub fn intersection(&self, other: &Mask) -> Result<Mask, MaskError> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn union(&self, other: &Mask) -> Result<Mask, MaskError> {
        self.zip_with(other, |a, b| a || b)
    }

    /// Pixels of `self` that are not in `other`.
    pub fn difference(&self, other: &Mask) -> Result<Mask, MaskError> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|&b| !b).collect(),
        }
    }

    pub fn is_subset_of(&self, other: &Mask) -> Result<bool, MaskError> {
        self.ensure_same_dims(other)?;
        Ok(self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b))
    }

    pub fn transpose(&self) -> Mask {
        let mut bits = vec![false; self.bits.len()];
        for y in 0..self.height {
            for x in 0..self.width {
                bits[x * self.height + y] = self.bits[y * self.width + x];
            }
        }
        Mask {
            width: self.height,
            height: self.width,
            bits,
        }
    }

    /// Foreground pixels in raster order.
    pub fn foreground(&self) -> impl Iterator<Item = PixelCoord> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| PixelCoord::new(i % w, i / w))
    }

    /// Nearest foreground pixel to `p` (Euclidean, raster-order ties).
    pub fn nearest_foreground(&self, p: PixelCoord) -> Option<PixelCoord> {
        if self.contains(p) {
            return Some(p);
        }
        let mut best: Option<(u64, PixelCoord)> = None;
        for q in self.foreground() {
            let d = q.sq_dist(p);
            if best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, q));
            }
        }
        best.map(|(_, q)| q)
    }
}

fn overlap_counts(a: &Mask, b: &Mask) -> Result<(usize, usize, usize), MaskError> {
    a.ensure_same_dims(b)?;
    let (mut inter, mut na, mut nb) = (0usize, 0usize, 0usize);
    for (&x, &y) in a.bits.iter().zip(&b.bits) {
        na += x as usize;
        nb += y as usize;
        inter += (x && y) as usize;
    }
    Ok((inter, na, nb))
}

/// Intersection over union. Two empty masks score 1.0.
pub fn iou(a: &Mask, b: &Mask) -> Result<f64, MaskError> {
    let (inter, na, nb) = overlap_counts(a, b)?;
    let union = na + nb - inter;
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

/// Dice coefficient. Two empty masks score 1.0.
pub fn dice(a: &Mask, b: &Mask) -> Result<f64, MaskError> {
    let (inter, na, nb) = overlap_counts(a, b)?;
    if na + nb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / (na + nb) as f64)
}

/// Missed ground truth and spurious prediction, as two disjoint masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorDecomposition {
    pub fn_mask: Mask,
    pub fp_mask: Mask,
}

impl ErrorDecomposition {
    pub fn is_empty(&self) -> bool {
        self.fn_mask.is_empty() && self.fp_mask.is_empty()
    }
}

pub fn error_decompose(pred: &Mask, gt: &Mask) -> Result<ErrorDecomposition, MaskError> {
    Ok(ErrorDecomposition {
        fn_mask: gt.difference(pred)?,
        fp_mask: pred.difference(gt)?,
    })
}

/// 8-connected component labelling of a mask.
///
/// Label 0 is background; labels `1..=count` are assigned in raster order of
/// each component's first pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentSet {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    areas: Vec<usize>,
}

impl ComponentSet {
    pub fn count(&self) -> usize {
        self.areas.len()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Area of component `label` (1-based).
    pub fn area(&self, label: u32) -> usize {
        self.areas[label as usize - 1]
    }

    pub fn areas(&self) -> &[usize] {
        &self.areas
    }

    pub fn label_at(&self, p: PixelCoord) -> u32 {
        if p.x < self.width && p.y < self.height {
            self.labels[p.y * self.width + p.x]
        } else {
            0
        }
    }

    pub fn component_mask(&self, label: u32) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            bits: self.labels.iter().map(|&l| l == label).collect(),
        }
    }

    /// Labels sorted by decreasing area, ties by increasing label.
    pub fn by_area_desc(&self) -> Vec<u32> {
        let mut order: Vec<u32> = (1..=self.areas.len() as u32).collect();
        order.sort_by(|&a, &b| self.area(b).cmp(&self.area(a)).then(a.cmp(&b)));
        order
    }
}

pub fn connected_components(m: &Mask) -> ComponentSet {
    let (w, h) = m.dims();
    let mut labels = vec![0u32; w * h];
    let mut areas = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !m.bits[start] || labels[start] != 0 {
            continue;
        }
        let label = areas.len() as u32 + 1;
        labels[start] = label;
        queue.push_back(start);
        let mut area = 0usize;
        while let Some(i) = queue.pop_front() {
            area += 1;
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if m.bits[j] && labels[j] == 0 {
                        labels[j] = label;
                        queue.push_back(j);
                    }
                }
            }
        }
        areas.push(area);
    }
    ComponentSet {
        width: w,
        height: h,
        labels,
        areas,
    }
}

/// Per-pixel squared Euclidean distances, exact in integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceField {
    width: usize,
    height: usize,
    squared: Vec<u64>,
}

impl DistanceField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn squared(&self, x: usize, y: usize) -> u64 {
        self.squared[y * self.width + x]
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        (self.squared(x, y) as f64).sqrt()
    }

    pub fn squared_values(&self) -> &[u64] {
        &self.squared
    }

    /// Raster-order-first pixel with the largest distance.
    pub fn argmax(&self) -> PixelCoord {
        let mut best = 0usize;
        for (i, &d) in self.squared.iter().enumerate() {
            if d > self.squared[best] {
                best = i;
            }
        }
        PixelCoord::new(best % self.width, best / self.width)
    }
}

/// Squared distance to the nearest site, or `None` when there is no site.
///
/// Lower envelope of parabolas, one pass per axis. Only finite samples enter
/// the envelope, so arithmetic stays on small exact integers.
fn squared_edt(is_site: &[bool], width: usize, height: usize) -> Vec<Option<u64>> {
    let mut rows: Vec<Option<u64>> = vec![None; width * height];
    let mut scratch = Envelope::with_capacity(width.max(height));

    let mut line_in = vec![None; width.max(height)];
    let mut line_out = vec![None; width.max(height)];
    for y in 0..height {
        for x in 0..width {
            line_in[x] = is_site[y * width + x].then_some(0u64);
        }
        scratch.transform(&line_in[..width], &mut line_out[..width]);
        rows[y * width..(y + 1) * width].copy_from_slice(&line_out[..width]);
    }
    let mut out = vec![None; width * height];
    for x in 0..width {
        for y in 0..height {
            line_in[y] = rows[y * width + x];
        }
        scratch.transform(&line_in[..height], &mut line_out[..height]);
        for y in 0..height {
            out[y * width + x] = line_out[y];
        }
    }
    out
}

struct Envelope {
    vertices: Vec<usize>,
    bounds: Vec<f64>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Self {
            vertices: Vec::with_capacity(n),
            bounds: Vec::with_capacity(n + 1),
        }
    }

    fn transform(&mut self, f: &[Option<u64>], out: &mut [Option<u64>]) {
        self.vertices.clear();
        self.bounds.clear();
        let height = |q: usize| f[q].map(|v| v as f64 + (q * q) as f64);
        for q in 0..f.len() {
            let Some(hq) = height(q) else { continue };
            loop {
                let Some(&v) = self.vertices.last() else {
                    self.vertices.push(q);
                    self.bounds.push(f64::NEG_INFINITY);
                    break;
                };
                let hv = height(v).expect("envelope holds finite samples only");
                let s = (hq - hv) / (2.0 * (q - v) as f64);
                if s <= *self.bounds.last().unwrap() {
                    self.vertices.pop();
                    self.bounds.pop();
                } else {
                    self.vertices.push(q);
                    self.bounds.push(s);
                    break;
                }
            }
        }
        if self.vertices.is_empty() {
            out.fill(None);
            return;
        }
        let mut k = 0usize;
        for (q, slot) in out.iter_mut().enumerate() {
            while k + 1 < self.vertices.len() && self.bounds[k + 1] < q as f64 {
                k += 1;
            }
            let v = self.vertices[k];
            let d = q.abs_diff(v) as u64;
            *slot = Some(d * d + f[v].unwrap());
        }
    }
}

/// Distance from each foreground pixel to the nearest background pixel,
/// where everything outside the grid counts as background. Zero on
/// background.
pub fn distance_transform(m: &Mask) -> DistanceField {
    let (w, h) = m.dims();
    let (pw, ph) = (w + 2, h + 2);
    let mut sites = vec![true; pw * ph];
    for y in 0..h {
        for x in 0..w {
            sites[(y + 1) * pw + x + 1] = !m.bits[y * w + x];
        }
    }
    let padded = squared_edt(&sites, pw, ph);
    let mut squared = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            squared.push(padded[(y + 1) * pw + x + 1].expect("padding ring is all sites"));
        }
    }
    DistanceField {
        width: w,
        height: h,
        squared,
    }
}

/// The deepest interior pixel: argmax of the distance transform.
pub fn interior_peak(m: &Mask) -> Result<PixelCoord, MaskError> {
    if m.is_empty() {
        return Err(MaskError::Empty);
    }
    Ok(distance_transform(m).argmax())
}

pub fn bounding_box(m: &Mask) -> Result<PixelBox, MaskError> {
    let mut it = m.foreground();
    let first = it.next().ok_or(MaskError::Empty)?;
    let mut b = PixelBox::from_corners(first, first);
    for p in it {
        b.x1 = b.x1.min(p.x);
        b.x2 = b.x2.max(p.x);
        b.y1 = b.y1.min(p.y);
        b.y2 = b.y2.max(p.y);
    }
    Ok(b)
}

/// Rounded arithmetic mean of the foreground coordinates. The result may lie
/// outside the mask for concave shapes.
pub fn centroid(m: &Mask) -> Result<PixelCoord, MaskError> {
    let (mut sx, mut sy, mut n) = (0u64, 0u64, 0u64);
    for p in m.foreground() {
        sx += p.x as u64;
        sy += p.y as u64;
        n += 1;
    }
    if n == 0 {
        return Err(MaskError::Empty);
    }
    let mean = |s: u64| (s as f64 / n as f64).round() as usize;
    Ok(PixelCoord::new(mean(sx), mean(sy)))
}

/// Dilation by a Euclidean disc of radius `r`.
pub fn dilate(m: &Mask, r: u32) -> Mask {
    if r == 0 {
        return m.clone();
    }
    let r2 = u64::from(r) * u64::from(r);
    let d = squared_edt(&m.bits, m.width, m.height);
    Mask {
        width: m.width,
        height: m.height,
        bits: d.into_iter().map(|v| v.is_some_and(|v| v <= r2)).collect(),
    }
}

/// Erosion by a Euclidean disc of radius `r`. The structuring element is
/// clipped to the grid, so erosion is the exact dual of [`dilate`].
pub fn erode(m: &Mask, r: u32) -> Mask {
    if r == 0 {
        return m.clone();
    }
    dilate(&m.complement(), r).complement()
}

/// Pixels within Euclidean distance `r` of `center`, clipped to the grid.
pub fn disc(center: PixelCoord, r: u32, width: usize, height: usize) -> Result<Mask, MaskError> {
    let mut m = Mask::new(width, height)?;
    let r = r as usize;
    let r2 = (r * r) as u64;
    let y_lo = center.y.saturating_sub(r);
    let y_hi = (center.y + r).min(height - 1);
    let x_lo = center.x.saturating_sub(r);
    let x_hi = (center.x + r).min(width - 1);
    if y_lo > y_hi || x_lo > x_hi {
        return Ok(m);
    }
    for y in y_lo..=y_hi {
        for x in x_lo..=x_hi {
            if PixelCoord::new(x, y).sq_dist(center) <= r2 {
                m.bits[y * width + x] = true;
            }
        }
    }
    Ok(m)
}

pub fn clip_to_box(m: &Mask, b: PixelBox) -> Mask {
    let mut out = m.clone();
    for y in 0..m.height {
        for x in 0..m.width {
            if !b.contains(PixelCoord::new(x, y)) {
                out.bits[y * m.width + x] = false;
            }
        }
    }
    out
}

pub fn box_mask(b: PixelBox, width: usize, height: usize) -> Result<Mask, MaskError> {
    Mask::from_fn(width, height, |x, y| b.contains(PixelCoord::new(x, y)))
}
