//! Point-cloud CSV and density-histogram (plain PGM + counts CSV) formats.
//!
//! Cloud rows are `dim,weight,c0_re,c0_im,…` with every float written as
//! `{:.16e}` (17 significant digits), which round-trips binary64 exactly.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::green::Cloud;
use crate::projective::{ProjPoint, C64};

pub const CLOUD_HEADER_PREFIX: &str = "dim,weight";

/// Largest histogram side accepted.
pub const MAX_RESOLUTION: usize = 4096;

fn header(dim: usize) -> String {
    let mut h = String::from(CLOUD_HEADER_PREFIX);
    for i in 0..=dim {
        h.push_str(&format!(",c{i}_re,c{i}_im"));
    }
    h
}

pub fn write_cloud_csv<W: Write>(cloud: &Cloud, mut out: W) -> Result<()> {
    writeln!(out, "{}", header(cloud.dim()))?;
    let mut line = String::new();
    for (p, w) in cloud.points().iter().zip(cloud.weights()) {
        line.clear();
        line.push_str(&format!("{},{:.16e}", p.dim(), w));
        for c in p.coords() {
            line.push_str(&format!(",{:.16e},{:.16e}", c.re, c.im));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn malformed(line: usize, reason: impl Into<String>) -> Error {
    Error::MalformedRow { line, reason: reason.into() }
}

fn parse_row(line_no: usize, line: &str) -> Result<(ProjPoint, f64)> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() < 6 {
        return Err(malformed(line_no, format!("{} fields, need at least 6", fields.len())));
    }
    let dim: usize = fields[0].parse().map_err(|_| malformed(line_no, format!("bad dim {:?}", fields[0])))?;
    if fields.len() != 2 + 2 * (dim + 1) {
        return Err(malformed(line_no, format!("{} fields for dimension {dim}", fields.len())));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| malformed(line_no, format!("bad number {s:?}")));
    let weight = num(fields[1])?;
    let mut coords = Vec::with_capacity(dim + 1);
    for pair in fields[2..].chunks(2) {
        coords.push(C64::new(num(pair[0])?, num(pair[1])?));
    }
    if coords.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(malformed(line_no, "non-finite coordinate"));
    }
    let p = ProjPoint::new(coords).map_err(|e| malformed(line_no, e.to_string()))?;
    Ok((p, weight))
}

/// Reads a cloud written by [`write_cloud_csv`]. Line numbers in errors are
/// one-based and count the header.
pub fn read_cloud_csv<R: BufRead>(input: R) -> Result<Cloud> {
    let mut lines = input.lines();
    let head = lines.next().ok_or_else(|| malformed(1, "empty file"))??;
    if !head.starts_with(CLOUD_HEADER_PREFIX) {
        return Err(malformed(1, "missing header"));
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (p, w) = parse_row(i + 2, &line)?;
        if let Some(first) = points.first().map(ProjPoint::dim) {
            if p.dim() != first {
                return Err(malformed(i + 2, format!("dimension {} after {first}", p.dim())));
            }
        }
        if !(w.is_finite() && w > 0.0) {
            return Err(malformed(i + 2, format!("weight {w} is not positive")));
        }
        points.push(p);
        weights.push(w);
    }
    Cloud::weighted(points, weights)
}

pub fn save_cloud(cloud: &Cloud, path: &std::path::Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_cloud_csv(cloud, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_cloud(path: &std::path::Path) -> Result<Cloud> {
    read_cloud_csv(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Real part or imaginary part of a chart coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Re,
    Im,
}

/// A histogram axis: `part(x_coord / x_chart)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub coord: usize,
    pub part: Part,
    pub min: f64,
    pub max: f64,
}

impl Axis {
    fn value(&self, p: &ProjPoint, chart: usize) -> Option<f64> {
        let d = p.coord(chart);
        if d.norm() == 0.0 {
            return None;
        }
        let c = p.coord(self.coord) / d;
        Some(match self.part {
            Part::Re => c.re,
            Part::Im => c.im,
        })
    }

    /// Bin index, or `None` outside `[min, max)`.
    fn bin(&self, v: f64, n: usize) -> Option<usize> {
        if !(v >= self.min && v < self.max) {
            return None;
        }
        Some((((v - self.min) / (self.max - self.min)) * n as f64).floor().min((n - 1) as f64) as usize)
    }
}

/// Window of a 2D slice in the affine chart `x_chart = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistogramSpec {
    pub chart: usize,
    pub x: Axis,
    pub y: Axis,
    pub width: usize,
    pub height: usize,
}

impl HistogramSpec {
    /// The `(Re u, Re s)` slice with `u = z/w`, `s = t/w` used for the
    /// attractor on P^2.
    pub fn attractor_slice(width: usize, height: usize) -> Self {
        HistogramSpec {
            chart: 1,
            x: Axis { coord: 0, part: Part::Re, min: -3.0, max: 5.0 },
            y: Axis { coord: 2, part: Part::Re, min: -0.02, max: 0.04 },
            width,
            height,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub width: usize,
    pub height: usize,
    /// Row-major, row 0 at the top (largest y).
    pub counts: Vec<u64>,
    pub outside: usize,
    /// More than 99% of the samples fell outside the window.
    pub empty_window: bool,
}

impl Histogram {
    pub fn inside(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Counts every point of `cloud` into the grid; points outside the window
/// (or where the chart is singular) are counted in `outside`.
pub fn histogram(cloud: &Cloud, spec: &HistogramSpec) -> Result<Histogram> {
    let (w, h) = (spec.width, spec.height);
    if w == 0 || h == 0 || w > MAX_RESOLUTION || h > MAX_RESOLUTION {
        return Err(Error::InvalidParams(format!("resolution {w}x{h} outside 1..={MAX_RESOLUTION}")));
    }
    let m = cloud.dim();
    for c in [spec.chart, spec.x.coord, spec.y.coord] {
        if c > m {
            return Err(Error::InvalidParams(format!("coordinate {c} does not exist on P^{m}")));
        }
    }
    if !(spec.x.min < spec.x.max && spec.y.min < spec.y.max) {
        return Err(Error::InvalidParams("empty window".into()));
    }
    let mut counts = vec![0u64; w * h];
    let mut outside = 0;
    for p in cloud.points() {
        let cell = spec
            .x
            .value(p, spec.chart)
            .zip(spec.y.value(p, spec.chart))
            .and_then(|(x, y)| Some((spec.x.bin(x, w)?, spec.y.bin(y, h)?)));
        match cell {
            Some((i, j)) => counts[(h - 1 - j) * w + i] += 1,
            None => outside += 1,
        }
    }
    let empty_window = outside as f64 > 0.99 * cloud.len() as f64;
    Ok(Histogram { width: w, height: h, counts, outside, empty_window })
}

/// Plain (P2) graymap, max value 255, gray level `255 log(1+c) / log(1+max)`.
pub fn write_pgm<W: Write>(hist: &Histogram, mut out: W) -> Result<()> {
    writeln!(out, "P2\n{} {}\n255", hist.width, hist.height)?;
    let top = hist.counts.iter().copied().max().unwrap_or(0);
    let scale = if top > 0 { 255.0 / (top as f64).ln_1p() } else { 0.0 };
    for row in hist.counts.chunks(hist.width) {
        let line: Vec<String> = row.iter().map(|&c| ((c as f64).ln_1p() * scale).round().to_string()).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Raw counts, one CSV row per image row.
pub fn write_counts_csv<W: Write>(hist: &Histogram, mut out: W) -> Result<()> {
    for row in hist.counts.chunks(hist.width) {
        let line: Vec<String> = row.iter().map(u64::to_string).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_round_trip() {
        let p = ProjPoint::from_reals(&[1.0, 1.0, 0.01]).unwrap();
        let cloud = Cloud::uniform(vec![p]).unwrap();
        let mut buf = Vec::new();
        write_cloud_csv(&cloud, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("dim,weight,c0_re,c0_im,c1_re,c1_im,c2_re,c2_im\n2,1.0000000000000000e0,"));
        assert_eq!(read_cloud_csv(&buf[..]).unwrap(), cloud);
    }

    #[test]
    fn zero_row_is_malformed() {
        let text = "dim,weight,c0_re,c0_im,c1_re,c1_im\n1,1,1,0,1,0\n1,1,0,0,0,0\n";
        assert!(matches!(read_cloud_csv(text.as_bytes()), Err(Error::MalformedRow { line: 3, .. })));
    }

    #[test]
    fn short_and_garbled_rows() {
        let bad = ["dim,weight\n1,1,1,0\n", "dim,weight\n1,1,x,0,1,0\n", "dim,weight\n2,1,1,0,1,0\n"];
        for t in bad {
            assert!(matches!(read_cloud_csv(t.as_bytes()), Err(Error::MalformedRow { line: 2, .. })), "{t}");
        }
        assert!(matches!(read_cloud_csv("x,y\n".as_bytes()), Err(Error::MalformedRow { line: 1, .. })));
    }

    #[test]
    fn atom_fills_one_cell() {
        let p = ProjPoint::new([C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.01, 0.0)]).unwrap();
        let cloud = Cloud::uniform(vec![p; 7]).unwrap();
        let spec = HistogramSpec::attractor_slice(16, 8);
        let h = histogram(&cloud, &spec).unwrap();
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(h.inside(), 7);
        let mut pgm = Vec::new();
        write_pgm(&h, &mut pgm).unwrap();
        let text = String::from_utf8(pgm).unwrap();
        assert!(text.starts_with("P2\n16 8\n255\n"));
        assert_eq!(text.split_whitespace().filter(|s| *s == "255").count(), 2);
    }

    #[test]
    fn outside_and_resolution() {
        let p = ProjPoint::from_reals(&[9.0, 1.0, 0.0]).unwrap();
        let cloud = Cloud::uniform(vec![p]).unwrap();
        let h = histogram(&cloud, &HistogramSpec::attractor_slice(4, 4)).unwrap();
        assert_eq!((h.outside, h.empty_window), (1, true));
        assert!(histogram(&cloud, &HistogramSpec::attractor_slice(5000, 4)).is_err());
    }
}
