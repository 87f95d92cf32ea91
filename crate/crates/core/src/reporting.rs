//! Summary statistics, normalization and SVG/GeoJSON/CSV exports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::graph::UcsGraph;
use crate::ordering::Ordering;

/// Floor applied before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotStats {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub lower_whisker: f64,
    pub upper_whisker: f64,
    pub outliers: Vec<f64>,
}

impl BoxplotStats {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }

    /// Scalar statistics in report order.
    pub fn scalars(&self) -> [(&'static str, f64); 10] {
        [
            ("count", self.count as f64),
            ("mean", self.mean),
            ("min", self.min),
            ("q1", self.q1),
            ("median", self.median),
            ("q3", self.q3),
            ("max", self.max),
            ("lower_whisker", self.lower_whisker),
            ("upper_whisker", self.upper_whisker),
            ("n_outliers", self.outliers.len() as f64),
        ]
    }
}

/// Quantile of ascending `sorted` by linear interpolation between order
/// statistics at position `p · (len − 1)`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Five-number summary with Tukey whiskers (furthest points within
/// 1.5·IQR of the quartiles).
pub fn summarize(values: &[f64]) -> Result<BoxplotStats> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("cannot summarize an empty series".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("summary input"));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&s, 0.25);
    let median = quantile_sorted(&s, 0.5);
    let q3 = quantile_sorted(&s, 0.75);
    let iqr = q3 - q1;
    let lo_fence = q1 - 1.5 * iqr;
    let hi_fence = q3 + 1.5 * iqr;
    let lower_whisker = s.iter().copied().find(|&v| v >= lo_fence).unwrap_or(q1).min(q1);
    let upper_whisker = s.iter().rev().copied().find(|&v| v <= hi_fence).unwrap_or(q3).max(q3);
    let outliers = s
        .iter()
        .copied()
        .filter(|&v| v < lower_whisker || v > upper_whisker)
        .collect();
    // sorted summation keeps the mean independent of input order
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    Ok(BoxplotStats {
        count: s.len(),
        mean,
        min: s[0],
        q1,
        median,
        q3,
        max: s[s.len() - 1],
        lower_whisker,
        upper_whisker,
        outliers,
    })
}

/// Identifies one metric series within a multi-city comparison.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SeriesKey {
    pub city: String,
    pub method: String,
    pub metric: String,
}

/// Divides every value by the maximum over its (city, metric) group, across
/// all methods. Groups whose maximum is zero are returned unchanged.
pub fn normalize_per_city(series: &BTreeMap<SeriesKey, Vec<f64>>) -> BTreeMap<SeriesKey, Vec<f64>> {
    let mut group_max: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for (k, vals) in series {
        let m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e = group_max.entry((&k.city, &k.metric)).or_insert(f64::NEG_INFINITY);
        *e = e.max(m);
    }
    series
        .iter()
        .map(|(k, vals)| {
            let m = group_max[&(k.city.as_str(), k.metric.as_str())];
            let out = if m > 0.0 {
                vals.iter().map(|v| v / m).collect()
            } else {
                vals.clone()
            };
            (k.clone(), out)
        })
        .collect()
}

/// `log10(max(v, 1e-9))`.
pub fn log_scale(values: &[f64]) -> Result<Vec<f64>> {
    values
        .iter()
        .map(|&v| {
            if v < 0.0 || v.is_nan() {
                Err(Error::InvalidParameter(format!("log scale of negative value {v}")))
            } else {
                Ok(v.max(LOG_FLOOR).log10())
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleName {
    Order,
    Error,
}

impl FromStr for ScaleName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "order" => Ok(ScaleName::Order),
            "error" => Ok(ScaleName::Error),
            other => Err(Error::InvalidParameter(format!("unknown color scale {other:?}"))),
        }
    }
}

/// Piecewise-linear RGB color ramp.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorScale {
    pub name: ScaleName,
    pub anchors: Vec<(f64, [u8; 3])>,
}

fn parse_hex(s: &str) -> [u8; 3] {
    let v = u32::from_str_radix(s.trim_start_matches('#'), 16).expect("valid hex color");
    [(v >> 16) as u8, (v >> 8) as u8, v as u8]
}

impl ColorScale {
    /// Dark blue → sky blue → sea green → gold → red.
    pub fn order() -> Self {
        let hex = ["#00008B", "#87CEEB", "#2E8B57", "#FFD700", "#FF0000"];
        ColorScale {
            name: ScaleName::Order,
            anchors: hex
                .iter()
                .enumerate()
                .map(|(i, h)| (i as f64 / 4.0, parse_hex(h)))
                .collect(),
        }
    }

    /// Beige → red.
    pub fn error() -> Self {
        ColorScale {
            name: ScaleName::Error,
            anchors: vec![(0.0, parse_hex("#F5F5DC")), (1.0, parse_hex("#FF0000"))],
        }
    }

    pub fn by_name(name: ScaleName) -> Self {
        match name {
            ScaleName::Order => ColorScale::order(),
            ScaleName::Error => ColorScale::error(),
        }
    }

    /// Color at `t`, clamped to `[0, 1]`.
    pub fn color(&self, t: f64) -> [u8; 3] {
        let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
        let seg = self
            .anchors
            .windows(2)
            .find(|w| t <= w[1].0)
            .unwrap_or(&self.anchors[self.anchors.len() - 2..]);
        let (p0, c0) = seg[0];
        let (p1, c1) = seg[1];
        let f = (t - p0) / (p1 - p0);
        let mix = |a: u8, b: u8| (a as f64 + f * (b as f64 - a as f64)).round() as u8;
        [mix(c0[0], c1[0]), mix(c0[1], c1[1]), mix(c0[2], c1[2])]
    }

    pub fn hex(&self, t: f64) -> String {
        let [r, g, b] = self.color(t);
        format!("#{r:02X}{g:02X}{b:02X}")
    }
}

/// Min–max normalization to `[0, 1]`; constant input maps to 0.
pub fn unit_interval(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        values.iter().map(|v| (v - lo) / (hi - lo)).collect()
    } else {
        vec![0.0; values.len()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapFormat {
    Svg,
    Geojson,
}

impl MapFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MapFormat::Svg => "svg",
            MapFormat::Geojson => "geojson",
        }
    }
}

impl FromStr for MapFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svg" => Ok(MapFormat::Svg),
            "geojson" => Ok(MapFormat::Geojson),
            other => Err(Error::InvalidParameter(format!("unknown map format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MapOptions {
    pub width_px: f64,
    pub radius_px: f64,
    pub draw_edges: bool,
}

impl Default for MapOptions {
    fn default() -> Self {
        MapOptions {
            width_px: 800.0,
            radius_px: 2.0,
            draw_edges: false,
        }
    }
}

/// Writes `bytes` to `<path>.partial`, then renames it to `path`. Parent
/// directories are created as needed.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut partial = path.as_os_str().to_owned();
    partial.push(".partial");
    let partial = std::path::PathBuf::from(partial);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(&partial, bytes).map_err(|e| Error::io(&partial, e))?;
    std::fs::rename(&partial, path).map_err(|e| Error::io(path, e))
}

fn check_values(g: &UcsGraph, values: &[f64]) -> Result<()> {
    if values.len() != g.n() {
        return Err(Error::InvalidParameter(format!(
            "{} values for {} vertices",
            values.len(),
            g.n()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("map values"));
    }
    Ok(())
}

/// SVG point map: one circle per vertex, colored by the min–max normalized
/// value.
pub fn map_svg(g: &UcsGraph, values: &[f64], scale: &ColorScale, opts: &MapOptions) -> Result<String> {
    check_values(g, values)?;
    let coords = g.coords();
    let bbox = crate::metrics::BoundingBox::of(coords.iter().copied()).ok_or(Error::EmptyGraph)?;
    let span_x = (bbox.max[0] - bbox.min[0]).max(1e-9);
    let span_y = (bbox.max[1] - bbox.min[1]).max(1e-9);
    let margin = 2.0 * opts.radius_px + 2.0;
    let s = (opts.width_px - 2.0 * margin) / span_x.max(span_y);
    let width = span_x * s + 2.0 * margin;
    let height = span_y * s + 2.0 * margin;
    let px = |p: [f64; 2]| (margin + (p[0] - bbox.min[0]) * s, margin + (bbox.max[1] - p[1]) * s);

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.2}" height="{height:.2}" viewBox="0 0 {width:.2} {height:.2}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if opts.draw_edges {
        let _ = writeln!(out, r##"<g stroke="#BBBBBB" stroke-width="0.5">"##);
        for (u, v, _) in g.edges() {
            let (x1, y1) = px(coords[u]);
            let (x2, y2) = px(coords[v]);
            let _ = writeln!(out, r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}"/>"#);
        }
        let _ = writeln!(out, "</g>");
    }
    let t = unit_interval(values);
    let _ = writeln!(out, r#"<g stroke="none">"#);
    for (v, &c) in coords.iter().enumerate() {
        let (x, y) = px(c);
        let _ = writeln!(
            out,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="{fill}"/>"#,
            r = opts.radius_px,
            fill = scale.hex(t[v])
        );
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, "</svg>");
    Ok(out)
}

/// GeoJSON FeatureCollection of vertex points `[lon, lat]` with properties
/// `{id, value, rank}`; `rank` is 1-based, or null without an ordering.
pub fn map_geojson(g: &UcsGraph, values: &[f64], ordering: Option<&Ordering>) -> Result<String> {
    check_values(g, values)?;
    if let Some(o) = ordering {
        if o.n() != g.n() {
            return Err(Error::InvalidParameter("ordering size does not match graph".into()));
        }
    }
    let features: Vec<Value> = (0..g.n())
        .map(|v| {
            let [lat, lon] = g.raw_coords()[v];
            let rank = ordering.map(|o| o.rank(v) + 1);
            json!({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [lon, lat]},
                "properties": {"id": g.vertex_id(v), "value": values[v], "rank": rank},
            })
        })
        .collect();
    let fc = json!({"type": "FeatureCollection", "features": features});
    let mut s = serde_json::to_string_pretty(&fc).expect("serializable");
    s.push('\n');
    Ok(s)
}

pub fn export_map(
    g: &UcsGraph,
    values: &[f64],
    ordering: Option<&Ordering>,
    scale: &ColorScale,
    format: MapFormat,
    out: &Path,
) -> Result<()> {
    let body = match format {
        MapFormat::Svg => map_svg(g, values, scale, &MapOptions::default())?,
        MapFormat::Geojson => map_geojson(g, values, ordering)?,
    };
    write_atomic(out, body.as_bytes())
}

#[derive(Debug, Clone)]
pub struct BoxplotOptions {
    pub with_outliers: bool,
    pub title: String,
    pub y_label: String,
}

impl Default for BoxplotOptions {
    fn default() -> Self {
        BoxplotOptions {
            with_outliers: true,
            title: String::new(),
            y_label: String::new(),
        }
    }
}

/// Vertical value axis of a boxplot chart.
#[derive(Debug, Clone, Copy)]
pub struct ValueAxis {
    pub lo: f64,
    pub hi: f64,
    pub top_px: f64,
    pub bottom_px: f64,
}

impl ValueAxis {
    pub fn y(&self, v: f64) -> f64 {
        if self.hi > self.lo {
            self.bottom_px - (v - self.lo) / (self.hi - self.lo) * (self.bottom_px - self.top_px)
        } else {
            0.5 * (self.top_px + self.bottom_px)
        }
    }
}

const BOX_TOP: f64 = 40.0;
const BOX_BOTTOM: f64 = 360.0;
const GROUP_WIDTH: f64 = 80.0;
const LEFT: f64 = 70.0;

pub fn boxplot_axis(groups: &[(String, BoxplotStats)], with_outliers: bool) -> ValueAxis {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, s) in groups {
        let (a, b) = if with_outliers {
            (s.min, s.max)
        } else {
            (s.lower_whisker, s.upper_whisker)
        };
        lo = lo.min(a);
        hi = hi.max(b);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 };
    ValueAxis {
        lo: lo - pad,
        hi: hi + pad,
        top_px: BOX_TOP,
        bottom_px: BOX_BOTTOM,
    }
}

/// Box-and-whisker chart, one group per entry in the given order. Values
/// are drawn as given; apply [`log_scale`] first for a logarithmic axis.
pub fn boxplot_svg(groups: &[(String, BoxplotStats)], opts: &BoxplotOptions) -> Result<String> {
    if groups.is_empty() {
        return Err(Error::InvalidParameter("boxplot needs at least one group".into()));
    }
    let axis = boxplot_axis(groups, opts.with_outliers);
    let width = LEFT + GROUP_WIDTH * groups.len() as f64 + 20.0;
    let height = BOX_BOTTOM + 50.0;
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if !opts.title.is_empty() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="20" text-anchor="middle">{}</text>"#,
            width / 2.0,
            xml_escape(&opts.title)
        );
    }
    let _ = writeln!(
        out,
        r#"<line class="axis" x1="{LEFT}" y1="{BOX_TOP}" x2="{LEFT}" y2="{BOX_BOTTOM}" stroke="black"/>"#
    );
    for i in 0..=4 {
        let v = axis.lo + (axis.hi - axis.lo) * i as f64 / 4.0;
        let y = axis.y(v);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 4.0,
            y + 4.0,
            fmt_tick(v)
        );
    }
    if !opts.y_label.is_empty() {
        let _ = writeln!(
            out,
            r#"<text transform="translate(14 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
            (BOX_TOP + BOX_BOTTOM) / 2.0,
            xml_escape(&opts.y_label)
        );
    }
    for (i, (name, s)) in groups.iter().enumerate() {
        let cx = LEFT + GROUP_WIDTH * (i as f64 + 0.5);
        let half = GROUP_WIDTH * 0.3;
        let (yq1, yq3, ymed) = (axis.y(s.q1), axis.y(s.q3), axis.y(s.median));
        let (ylo, yhi) = (axis.y(s.lower_whisker), axis.y(s.upper_whisker));
        let _ = writeln!(
            out,
            r#"<g class="box" data-method="{}" data-q1="{}" data-median="{}" data-q3="{}" data-lower-whisker="{}" data-upper-whisker="{}">"#,
            xml_escape(name),
            s.q1,
            s.median,
            s.q3,
            s.lower_whisker,
            s.upper_whisker
        );
        let _ = writeln!(
            out,
            r#"<line class="whisker" x1="{cx:.2}" y1="{yhi:.2}" x2="{cx:.2}" y2="{yq3:.2}" stroke="black"/>"#
        );
        let _ = writeln!(
            out,
            r#"<line class="whisker" x1="{cx:.2}" y1="{yq1:.2}" x2="{cx:.2}" y2="{ylo:.2}" stroke="black"/>"#
        );
        let _ = writeln!(
            out,
            r##"<rect class="iqr" x="{:.2}" y="{yq3:.2}" width="{:.2}" height="{:.2}" fill="#ADD8E6" stroke="black"/>"##,
            cx - half,
            2.0 * half,
            yq1 - yq3
        );
        let _ = writeln!(
            out,
            r#"<line class="median" x1="{:.2}" y1="{ymed:.2}" x2="{:.2}" y2="{ymed:.2}" stroke="black" stroke-width="2"/>"#,
            cx - half,
            cx + half
        );
        if opts.with_outliers {
            for &o in &s.outliers {
                let _ = writeln!(
                    out,
                    r#"<circle class="outlier" cx="{cx:.2}" cy="{:.2}" r="2" fill="none" stroke="black"/>"#,
                    axis.y(o)
                );
            }
        }
        let _ = writeln!(
            out,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            BOX_BOTTOM + 20.0,
            xml_escape(name)
        );
        let _ = writeln!(out, "</g>");
    }
    let _ = writeln!(out, "</svg>");
    Ok(out)
}

pub fn export_boxplot_svg(groups: &[(String, BoxplotStats)], opts: &BoxplotOptions, out: &Path) -> Result<()> {
    write_atomic(out, boxplot_svg(groups, opts)?.as_bytes())
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// One summarized (city, method, metric) cell of a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub city: String,
    pub method: String,
    pub metric: String,
    pub stats: BoxplotStats,
    /// Ordering and metric parameters the values came from.
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
}

pub fn report_csv(entries: &[ReportEntry]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Artifact {
        path: "report.csv".into(),
        message: e.to_string(),
    };
    w.write_record(["city", "method", "metric", "stat", "value"])
        .map_err(io)?;
    for e in entries {
        for (stat, value) in e.stats.scalars() {
            w.write_record([&e.city, &e.method, &e.metric, stat, &value.to_string()])
                .map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Artifact {
        path: "report.csv".into(),
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn report_json(entries: &[ReportEntry]) -> String {
    let mut s = serde_json::to_string_pretty(&json!({ "entries": entries })).expect("serializable");
    s.push('\n');
    s
}

/// Writes `<stem>.csv` and `<stem>.json` next to each other.
pub fn export_report(entries: &[ReportEntry], csv_path: &Path, json_path: &Path) -> Result<()> {
    write_atomic(csv_path, report_csv(entries)?.as_bytes())?;
    write_atomic(json_path, report_json(entries).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_numbers() {
        let s = summarize(&[5.0, 3.0, 1.0, 4.0, 2.0]).unwrap();
        assert_eq!((s.q1, s.median, s.q3), (2.0, 3.0, 4.0));
        assert_eq!((s.min, s.max, s.mean), (1.0, 5.0, 3.0));
        assert!(s.outliers.is_empty());
        assert_eq!((s.lower_whisker, s.upper_whisker), (1.0, 5.0));
    }

    #[test]
    fn constant_series() {
        let s = summarize(&[1.0; 4]).unwrap();
        assert_eq!((s.q1, s.median, s.q3, s.iqr()), (1.0, 1.0, 1.0, 0.0));
        assert!(s.outliers.is_empty());
    }

    #[test]
    fn frozen_quantiles() {
        // numpy.quantile(..., method="linear")
        let x = [0.3, 7.1, 2.2, 9.9, 4.4, 4.4, 100.0, 0.0];
        let s = summarize(&x).unwrap();
        assert!((s.q1 - 1.725).abs() < 1e-12);
        assert!((s.median - 4.4).abs() < 1e-12);
        assert!((s.q3 - 7.8).abs() < 1e-12);
        assert_eq!(s.outliers, vec![100.0]);
        assert_eq!(s.upper_whisker, 9.9);
        assert_eq!(s.lower_whisker, 0.0);
    }

    #[test]
    fn empty_is_error() {
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn log_floor() {
        assert_eq!(log_scale(&[1.0, 100.0, 0.0]).unwrap(), vec![0.0, 2.0, -9.0]);
        assert!(log_scale(&[-1.0]).is_err());
    }

    #[test]
    fn per_city_max() {
        let key = |m: &str| SeriesKey {
            city: "c".into(),
            method: m.into(),
            metric: "geo_fwd".into(),
        };
        let mut s = BTreeMap::new();
        s.insert(key("a"), vec![4.0, 2.0]);
        s.insert(key("b"), vec![10.0, 1.0]);
        let n = normalize_per_city(&s);
        assert_eq!(n[&key("a")], vec![0.4, 0.2]);
        assert_eq!(n[&key("b")], vec![1.0, 0.1]);

        let mut z = BTreeMap::new();
        z.insert(key("a"), vec![0.0, 0.0]);
        assert_eq!(normalize_per_city(&z)[&key("a")], vec![0.0, 0.0]);
    }

    #[test]
    fn palette_endpoints() {
        let o = ColorScale::order();
        assert_eq!(o.hex(0.0), "#00008B");
        assert_eq!(o.hex(0.25), "#87CEEB");
        assert_eq!(o.hex(1.0), "#FF0000");
        assert_eq!(ColorScale::error().hex(0.0), "#F5F5DC");
        assert_eq!(ColorScale::error().hex(1.0), "#FF0000");
        for s in [ColorScale::order(), ColorScale::error()] {
            assert_eq!(s.anchors[0].0, 0.0);
            assert_eq!(s.anchors.last().unwrap().0, 1.0);
            assert!(s.anchors.windows(2).all(|w| w[0].0 < w[1].0));
        }
    }

    #[test]
    fn boxplot_geometry() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let groups = vec![("m".to_string(), s)];
        let svg = boxplot_svg(&groups, &BoxplotOptions::default()).unwrap();
        let axis = boxplot_axis(&groups, true);
        assert!(svg.contains(r#"data-q1="2" data-median="3" data-q3="4""#));
        assert!(svg.contains(&format!(r#"y="{:.2}" "#, axis.y(4.0))));
        assert!(svg.contains(&format!(r#"height="{:.2}""#, axis.y(2.0) - axis.y(4.0))));
        assert!(svg.contains(&format!(r#"y1="{:.2}" x2"#, axis.y(3.0))));
    }

    #[test]
    fn outlier_toggle() {
        let s = summarize(&[1.0, 2.0, 2.0, 3.0, 50.0]).unwrap();
        assert_eq!(s.outliers, vec![50.0]);
        let g = vec![("m".to_string(), s)];
        let with = boxplot_svg(&g, &BoxplotOptions::default()).unwrap();
        let without = boxplot_svg(
            &g,
            &BoxplotOptions {
                with_outliers: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(with.matches(r#"class="outlier""#).count(), 1);
        assert_eq!(without.matches(r#"class="outlier""#).count(), 0);
    }

    #[test]
    fn report_rows() {
        assert_eq!(report_csv(&[]).unwrap(), "city,method,metric,stat,value\n");
        let e = ReportEntry {
            city: "x".into(),
            method: "fiedler".into(),
            metric: "geo_fwd".into(),
            stats: summarize(&[1.0]).unwrap(),
            params: BTreeMap::new(),
        };
        let csv = report_csv(&[e]).unwrap();
        assert_eq!(csv.lines().count(), 1 + 10);
        assert!(csv.contains("x,fiedler,geo_fwd,median,1\n"));
    }
}
