use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::Deserialize;

use super::{GraphBuilder, UcsGraph};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphFormat {
    OsmXml,
    CsvPair,
}

impl FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "osm-xml" => Ok(GraphFormat::OsmXml),
            "csv-pair" => Ok(GraphFormat::CsvPair),
            other => Err(Error::InvalidParameter(format!("unknown graph format {other:?}"))),
        }
    }
}

/// Loads and cleans a graph.
///
/// For `csv-pair`, `path` is either a directory holding `nodes.csv` and
/// `edges.csv` or the path of `nodes.csv` itself.
pub fn load_graph(path: &Path, format: GraphFormat) -> Result<UcsGraph> {
    match format {
        GraphFormat::OsmXml => load_osm_xml(path),
        GraphFormat::CsvPair => {
            let (nodes, edges) = csv_pair_paths(path);
            load_csv_pair(&nodes, &edges)
        }
    }
}

fn csv_pair_paths(path: &Path) -> (PathBuf, PathBuf) {
    if path.is_dir() {
        (path.join("nodes.csv"), path.join("edges.csv"))
    } else {
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        (path.to_path_buf(), dir.join("edges.csv"))
    }
}

#[derive(Debug, Deserialize)]
struct NodeRow {
    id: String,
    lat: f64,
    lon: f64,
}

#[derive(Debug, Deserialize)]
struct EdgeRow {
    u: String,
    v: String,
    #[serde(default)]
    length_m: Option<f64>,
}

fn load_csv_pair(nodes: &Path, edges: &Path) -> Result<UcsGraph> {
    let mut b = GraphBuilder::geographic();

    let mut rdr = csv::Reader::from_path(nodes).map_err(|e| csv_err(nodes, e))?;
    for row in rdr.deserialize::<NodeRow>() {
        let row = row.map_err(|e| csv_err(nodes, e))?;
        b.add_node(row.id, [row.lat, row.lon])?;
    }

    let mut rdr = csv::Reader::from_path(edges).map_err(|e| csv_err(edges, e))?;
    for row in rdr.deserialize::<EdgeRow>() {
        let row = row.map_err(|e| csv_err(edges, e))?;
        let (Some(u), Some(v)) = (b.node_index(&row.u), b.node_index(&row.v)) else {
            return Err(Error::parse(
                edges,
                format!("edge ({}, {}) references an unknown node", row.u, row.v),
            ));
        };
        b.add_edge(u, v, row.length_m)?;
    }
    b.build()
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, format!("{other:?}")),
    }
}

/// Writes `nodes.csv` and `edges.csv` into `dir`. Node rows follow storage
/// order; each edge is written once with its length in meters.
pub fn write_csv_pair(g: &UcsGraph, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let nodes = dir.join("nodes.csv");
    let edges = dir.join("edges.csv");
    let (node_bytes, edge_bytes) = csv_pair_bytes(g);
    std::fs::write(&nodes, node_bytes).map_err(|e| Error::io(&nodes, e))?;
    std::fs::write(&edges, edge_bytes).map_err(|e| Error::io(&edges, e))?;
    Ok((nodes, edges))
}

/// The `(nodes.csv, edges.csv)` contents for a graph.
pub fn csv_pair_bytes(g: &UcsGraph) -> (Vec<u8>, Vec<u8>) {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "lat", "lon"]).expect("in-memory write");
    for (id, ll) in g.vertex_ids().iter().zip(g.raw_coords()) {
        w.write_record([id.as_str(), &ll[0].to_string(), &ll[1].to_string()])
            .expect("in-memory write");
    }
    let nodes = w.into_inner().expect("in-memory flush");

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["u", "v", "length_m"]).expect("in-memory write");
    for (u, v, l) in g.edges() {
        w.write_record([g.vertex_id(u), g.vertex_id(v), &l.to_string()])
            .expect("in-memory write");
    }
    let edges = w.into_inner().expect("in-memory flush");
    (nodes, edges)
}

fn attr(e: &BytesStart<'_>, key: &str, path: &Path) -> Result<Option<String>> {
    for a in e.attributes() {
        let a = a.map_err(|err| Error::parse(path, err.to_string()))?;
        if a.key.as_ref() == key {
            let v = a
                .normalized_value(quick_xml::XmlVersion::Implicit1_0)
                .map_err(|err| Error::parse(path, err.to_string()))?;
            return Ok(Some(v.into_owned()));
        }
    }
    Ok(None)
}

fn required(e: &BytesStart<'_>, key: &str, path: &Path) -> Result<String> {
    attr(e, key, path)?.ok_or_else(|| {
        Error::parse(
            path,
            format!("<{}> missing attribute {}", e.name().as_ref() as &str, key),
        )
    })
}

fn parse_coord(s: &str, path: &Path) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(path, format!("bad coordinate {s:?}")))
}

#[derive(Default)]
struct WayState {
    refs: Vec<String>,
    highway: bool,
}

/// Street graph from OSM XML: every `<way>` carrying a `highway` tag
/// contributes an edge per consecutive pair of `<nd ref>`. Only nodes used
/// by such ways become vertices, in `<node>` element order. Segments that
/// reference nodes absent from the file are skipped.
fn load_osm_xml(path: &Path) -> Result<UcsGraph> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = Reader::from_reader(BufReader::new(file));
    reader.config_mut().trim_text(true);

    let mut nodes: Vec<(String, [f64; 2])> = Vec::new();
    let mut ways: Vec<Vec<String>> = Vec::new();
    let mut current: Option<WayState> = None;
    let mut depth_in_node = false;
    let mut buf = Vec::new();

    loop {
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| Error::parse(path, format!("at byte {}: {e}", reader.buffer_position())))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let empty = matches!(event, Event::Empty(_));
                match e.name().as_ref() {
                    "node" => {
                        let id = required(e, "id", path)?;
                        let lat = parse_coord(&required(e, "lat", path)?, path)?;
                        let lon = parse_coord(&required(e, "lon", path)?, path)?;
                        nodes.push((id, [lat, lon]));
                        depth_in_node = !empty;
                    }
                    "way" => {
                        let state = WayState::default();
                        if empty {
                            continue;
                        }
                        current = Some(state);
                    }
                    "nd" => {
                        if let Some(w) = current.as_mut() {
                            w.refs.push(required(e, "ref", path)?);
                        }
                    }
                    "tag" => {
                        if let Some(w) = current.as_mut() {
                            if attr(e, "k", path)?.as_deref() == Some("highway") {
                                w.highway = true;
                            }
                        }
                    }
                    _ => {}
                }
            }
            Event::End(ref e) => match e.name().as_ref() {
                "way" => {
                    if let Some(w) = current.take() {
                        if w.highway {
                            ways.push(w.refs);
                        }
                    }
                }
                "node" => depth_in_node = false,
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if current.is_some() || depth_in_node {
        return Err(Error::parse(path, "unexpected end of document"));
    }

    let known: HashMap<&str, usize> = nodes.iter().enumerate().map(|(i, (id, _))| (id.as_str(), i)).collect();
    let mut used = vec![false; nodes.len()];
    let mut segments: Vec<(usize, usize)> = Vec::new();
    let mut skipped = 0usize;
    for refs in &ways {
        for pair in refs.windows(2) {
            match (known.get(pair[0].as_str()), known.get(pair[1].as_str())) {
                (Some(&a), Some(&b)) => {
                    used[a] = true;
                    used[b] = true;
                    segments.push((a, b));
                }
                _ => skipped += 1,
            }
        }
    }
    if skipped > 0 {
        log::warn!("{}: skipped {skipped} way segments with missing nodes", path.display());
    }

    let mut b = GraphBuilder::geographic();
    let mut builder_index = vec![usize::MAX; nodes.len()];
    for (i, (id, ll)) in nodes.iter().enumerate() {
        if used[i] {
            builder_index[i] = b.add_node(id.clone(), *ll)?;
        }
    }
    for (a, c) in segments {
        b.add_edge(builder_index[a], builder_index[c], None)?;
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        let mut f = File::create(&p).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn osm_keeps_largest_component_and_file_order() {
        let dir = tempfile::tempdir().unwrap();
        let mut xml = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<osm version=\"0.6\">\n");
        // component of 5 (ids 10..14) and of 3 (ids 20..22); node 99 untagged
        for (i, id) in [12, 20, 10, 21, 11, 13, 22, 14, 99].iter().enumerate() {
            xml += &format!(
                "  <node id=\"{id}\" lat=\"{}\" lon=\"{}\"/>\n",
                0.001 * i as f64,
                0.002 * (*id as f64 % 7.0)
            );
        }
        xml += "  <node id=\"500\" lat=\"0.5\" lon=\"0.5\"><tag k=\"amenity\" v=\"x\"/></node>\n";
        xml += "  <way id=\"1\"><nd ref=\"10\"/><nd ref=\"11\"/><nd ref=\"12\"/><nd ref=\"13\"/><nd ref=\"14\"/><tag k=\"highway\" v=\"residential\"/></way>\n";
        xml += "  <way id=\"2\"><nd ref=\"20\"/><nd ref=\"21\"/><nd ref=\"22\"/><tag k=\"highway\" v=\"service\"/></way>\n";
        xml += "  <way id=\"3\"><nd ref=\"14\"/><nd ref=\"99\"/><tag k=\"building\" v=\"yes\"/></way>\n";
        xml += "  <way id=\"4\"><nd ref=\"14\"/><nd ref=\"777\"/><tag k=\"highway\" v=\"path\"/></way>\n";
        xml += "</osm>\n";
        let p = write(dir.path(), "city.osm", &xml);
        let g = load_graph(&p, GraphFormat::OsmXml).unwrap();
        assert_eq!(g.n(), 5);
        assert_eq!(g.vertex_ids(), &["12", "10", "11", "13", "14"]);
        assert_eq!(g.edge_count(), 4);
    }

    #[test]
    fn osm_malformed_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "bad.osm", "<osm><node id=\"1\" lat=\"x\" lon=\"0\"/></osm>");
        assert!(matches!(load_graph(&p, GraphFormat::OsmXml), Err(Error::Parse { .. })));
        let p = write(dir.path(), "bad2.osm", "<osm><way id=\"1\"><nd ref=\"1\"/>");
        assert!(matches!(load_graph(&p, GraphFormat::OsmXml), Err(Error::Parse { .. })));
    }

    #[test]
    fn csv_pair_blank_length_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "nodes.csv", "id,lat,lon\nB,0,0.001\nA,0,0\nC,0,0.002\n");
        write(dir.path(), "edges.csv", "u,v,length_m\nA,B,\nB,C,10\nC,B,7\n");
        let g = load_graph(dir.path(), GraphFormat::CsvPair).unwrap();
        assert_eq!(g.vertex_ids(), &["B", "A", "C"]);
        let ab = g.neighbors(0).iter().find(|x| x.0 == 1).unwrap().1;
        assert!((ab - 111.195).abs() < 1e-3);
        assert_eq!(g.neighbors(2), &[(0, 7.0)]);
    }

    #[test]
    fn csv_pair_errors() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "nodes.csv", "id,lat,lon\nA,0,zero\n");
        write(dir.path(), "edges.csv", "u,v,length_m\n");
        assert!(matches!(
            load_graph(dir.path(), GraphFormat::CsvPair),
            Err(Error::Parse { .. })
        ));
        write(dir.path(), "nodes.csv", "id,lat,lon\nA,0,0\n");
        write(dir.path(), "edges.csv", "u,v,length_m\nA,Q,\n");
        assert!(matches!(
            load_graph(dir.path(), GraphFormat::CsvPair),
            Err(Error::Parse { .. })
        ));
        write(dir.path(), "nodes.csv", "id,lat,lon\nA,0,inf\n");
        assert!(matches!(
            load_graph(dir.path(), GraphFormat::CsvPair),
            Err(Error::NonFiniteCoordinate { .. })
        ));
        write(dir.path(), "nodes.csv", "id,lat,lon\n");
        write(dir.path(), "edges.csv", "u,v,length_m\n");
        assert!(matches!(
            load_graph(dir.path(), GraphFormat::CsvPair),
            Err(Error::EmptyGraph)
        ));
        assert!(matches!(
            load_graph(&dir.path().join("missing"), GraphFormat::CsvPair),
            Err(Error::Io { .. })
        ));
    }
}
