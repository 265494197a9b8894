//! Plain-text formats: whitespace edge lists, feature CSVs and the CSV/JSON
//! outputs of the samplers.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::ReducedFeatureSet;
use crate::error::{Error, Result};
use crate::graph::{FeatureMatrix, LabelledNetwork};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

type Edge = (usize, usize, u64);

/// Reads a file, naming it in the error.
pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Lines `u v [m]`, 0-based ids, `#` starts a comment.
pub fn parse_edge_list_str(text: &str, source: &str) -> Result<Vec<Edge>> {
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = || format!("{source}:{}", lineno + 1);
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if !(2..=3).contains(&tokens.len()) {
            return Err(Error::parse(at(), format!("expected `u v [m]`, got {line:?}")));
        }
        let id = |tok: &str| -> Result<usize> {
            let v: i64 = tok
                .parse()
                .map_err(|_| Error::parse(at(), format!("vertex id {tok:?} is not an integer")))?;
            usize::try_from(v).map_err(|_| Error::parse(at(), format!("vertex id {v} is negative")))
        };
        let (u, v) = (id(tokens[0])?, id(tokens[1])?);
        let m = match tokens.get(2) {
            None => 1,
            Some(tok) => {
                let m: i64 = tok
                    .parse()
                    .map_err(|_| Error::parse(at(), format!("multiplicity {tok:?} is not an integer")))?;
                if m <= 0 {
                    return Err(Error::parse(at(), format!("multiplicity must be positive, got {m}")));
                }
                m as u64
            }
        };
        edges.push((u, v, m));
    }
    Ok(edges)
}

pub fn parse_edge_list(path: &Path) -> Result<Vec<Edge>> {
    parse_edge_list_str(&read_text(path)?, &path.display().to_string())
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

fn csv_error(source: &str, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::parse(format!("{source}:{line}"), e.to_string())
}

/// Reads `vertex,c1,...` rows; returns the value columns' names and one row of
/// strings per vertex in `0..N`.
fn read_vertex_table(text: &str, num_vertices: Option<usize>, source: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv_reader(text);
    let header = reader.headers().map_err(|e| csv_error(source, e))?.clone();
    if header.get(0) != Some("vertex") {
        return Err(Error::parse(format!("{source}:1"), "header must start with `vertex`"));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut by_vertex: HashMap<usize, Vec<String>> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(source, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let at = format!("{source}:{line}");
        let tok = record.get(0).unwrap_or("");
        let v: usize = tok
            .parse()
            .map_err(|_| Error::parse(at.clone(), format!("vertex id {tok:?} is not a nonnegative integer")))?;
        if record.len() != names.len() + 1 {
            return Err(Error::parse(at, format!("expected {} fields, got {}", names.len() + 1, record.len())));
        }
        let values = record.iter().skip(1).map(str::to_owned).collect();
        if by_vertex.insert(v, values).is_some() {
            return Err(Error::parse(at, format!("vertex {v} appears twice")));
        }
    }
    let n = num_vertices.unwrap_or(by_vertex.len());
    if let Some(&v) = by_vertex.keys().find(|&&v| v >= n) {
        return Err(Error::parse(source, format!("vertex {v} out of range for {n} vertices")));
    }
    let mut rows = Vec::with_capacity(n);
    for v in 0..n {
        rows.push(
            by_vertex
                .remove(&v)
                .ok_or_else(|| Error::parse(source, format!("vertex {v} is missing")))?,
        );
    }
    Ok((names, rows))
}

/// Binary feature CSV with header `vertex,<name1>,...`; every vertex in `0..N`
/// must appear exactly once. With `num_vertices = None`, `N` is the row count.
pub fn parse_features_str(text: &str, num_vertices: Option<usize>, source: &str) -> Result<FeatureMatrix> {
    let (names, rows) = read_vertex_table(text, num_vertices, source)?;
    let mut active = Vec::with_capacity(rows.len());
    for (v, row) in rows.iter().enumerate() {
        let mut on = Vec::new();
        for (d, value) in row.iter().enumerate() {
            match value.as_str() {
                "0" => {}
                "1" => on.push(d),
                other => {
                    return Err(Error::parse(
                        source,
                        format!("vertex {v}, column {:?}: entry {other:?} is not 0 or 1", names[d]),
                    ))
                }
            }
        }
        active.push(on);
    }
    FeatureMatrix::from_active(names, active)
}

pub fn parse_features(path: &Path, num_vertices: Option<usize>) -> Result<FeatureMatrix> {
    parse_features_str(&read_text(path)?, num_vertices, &path.display().to_string())
}

/// Categorical CSV `vertex,<column>,...`, expanded into one flag per
/// (column, value) pair named `column-value`. Values are ordered by first
/// appearance; an empty cell sets no flag.
pub fn parse_categorical_str(text: &str, num_vertices: Option<usize>, source: &str) -> Result<FeatureMatrix> {
    let (columns, rows) = read_vertex_table(text, num_vertices, source)?;
    let mut flags: Vec<(usize, String)> = Vec::new();
    let mut index: HashMap<(usize, String), usize> = HashMap::new();
    for c in 0..columns.len() {
        for row in &rows {
            let value = &row[c];
            if !value.is_empty() && !index.contains_key(&(c, value.clone())) {
                index.insert((c, value.clone()), flags.len());
                flags.push((c, value.clone()));
            }
        }
    }
    let names = flags.iter().map(|(c, v)| format!("{}-{v}", columns[*c])).collect();
    let active = rows
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, v)| !v.is_empty())
                .map(|(c, v)| index[&(c, v.clone())])
                .collect()
        })
        .collect();
    FeatureMatrix::from_active(names, active)
}

pub fn parse_categorical(path: &Path, num_vertices: Option<usize>) -> Result<FeatureMatrix> {
    parse_categorical_str(&read_text(path)?, num_vertices, &path.display().to_string())
}

/// Edge list plus optional binary and categorical feature files. The vertex
/// count comes from the feature files when present, otherwise from the
/// largest id in the edge list.
pub fn load_network(edges: &Path, features: Option<&Path>, categorical: Option<&Path>) -> Result<LabelledNetwork> {
    let list = parse_edge_list(edges)?;
    let mut x: Option<FeatureMatrix> = None;
    if let Some(p) = features {
        x = Some(parse_features(p, None)?);
    }
    if let Some(p) = categorical {
        let n = x.as_ref().map(FeatureMatrix::num_rows);
        let cat = parse_categorical(p, n)?;
        x = Some(match x {
            Some(base) => base.concat_columns(&cat)?,
            None => cat,
        });
    }
    let n = match &x {
        Some(x) => x.num_rows(),
        None => list.iter().map(|&(u, v, _)| u.max(v) + 1).max().unwrap_or(0),
    };
    LabelledNetwork::new(n, list, x.unwrap_or_else(|| FeatureMatrix::empty(n)))
}

pub fn write_edge_list<W: Write>(net: &LabelledNetwork, mut w: W) -> Result<()> {
    writeln!(w, "# {} vertices, {} edges", net.num_vertices(), net.num_edges())?;
    for &(u, v, m) in net.edges() {
        if m == 1 {
            writeln!(w, "{u} {v}")?;
        } else {
            writeln!(w, "{u} {v} {m}")?;
        }
    }
    Ok(())
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(w)
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush()?;
    Ok(())
}

fn io_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub fn write_features<W: Write>(x: &FeatureMatrix, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    let mut header = vec!["vertex".to_owned()];
    header.extend(x.names().iter().cloned());
    out.write_record(&header).map_err(io_err)?;
    for i in 0..x.num_rows() {
        let mut row = vec![i.to_string()];
        row.extend((0..x.num_cols()).map(|d| if x.get(i, d) { "1" } else { "0" }.to_owned()));
        out.write_record(&row).map_err(io_err)?;
    }
    finish(out)
}

/// One row per retained partition: `t` then the block of every vertex.
pub fn write_partition_samples<W: Write>(indices: &[usize], samples: &[Vec<usize>], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    let n = samples.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_owned()];
    header.extend((0..n).map(|i| i.to_string()));
    out.write_record(&header).map_err(io_err)?;
    for (t, s) in indices.iter().zip(samples) {
        let mut row = vec![t.to_string()];
        row.extend(s.iter().map(usize::to_string));
        out.write_record(&row).map_err(io_err)?;
    }
    finish(out)
}

/// `t,<name>` rows for `t = 0..`.
pub fn write_trace<F: Scalar, W: Write>(name: &str, values: &[F], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["t", name]).map_err(io_err)?;
    for (t, v) in values.iter().enumerate() {
        out.write_record([t.to_string(), v.to_string()]).map_err(io_err)?;
    }
    finish(out)
}

/// `t,U,accepted`; the initial state has an empty acceptance cell.
pub fn write_objective_trace<F: Scalar, W: Write>(u: &[F], accepted: &[bool], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["t", "U", "accepted"]).map_err(io_err)?;
    for (t, v) in u.iter().enumerate() {
        let acc = if t == 0 {
            String::new()
        } else {
            u8::from(accepted[t - 1]).to_string()
        };
        out.write_record([t.to_string(), v.to_string(), acc]).map_err(io_err)?;
    }
    finish(out)
}

pub fn write_matrix<F: Scalar, W: Write>(first: &str, row_names: &[String], col_names: &[String], m: &Matrix<F>, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    let mut header = vec![first.to_owned()];
    header.extend(col_names.iter().cloned());
    out.write_record(&header).map_err(io_err)?;
    for (i, name) in row_names.iter().enumerate() {
        let mut row = vec![name.clone()];
        row.extend(m.row(i).iter().map(F::to_string));
        out.write_record(&row).map_err(io_err)?;
    }
    finish(out)
}

/// `vertex,0,1,...,B-1`.
pub fn write_responsibilities<F: Scalar, W: Write>(y: &Matrix<F>, w: W) -> Result<()> {
    let rows: Vec<String> = (0..y.rows()).map(|i| i.to_string()).collect();
    let cols: Vec<String> = (0..y.cols()).map(|j| j.to_string()).collect();
    write_matrix("vertex", &rows, &cols, y, w)
}

/// Column names `block.feature` for a flattened `B x D` weight matrix.
pub fn weight_column_names(num_blocks: usize, feature_names: &[String]) -> Vec<String> {
    (0..num_blocks)
        .flat_map(|k| feature_names.iter().map(move |f| format!("{k}.{f}")))
        .collect()
}

/// One row per retained weight sample, flattened row-major.
pub fn write_weight_samples<F: Scalar, W: Write>(
    indices: &[usize],
    samples: &[Matrix<F>],
    feature_names: &[String],
    w: W,
) -> Result<()> {
    let mut out = csv_writer(w);
    let b = samples.first().map_or(0, Matrix::rows);
    let mut header = vec!["t".to_owned()];
    header.extend(weight_column_names(b, feature_names));
    out.write_record(&header).map_err(io_err)?;
    for (t, s) in indices.iter().zip(samples) {
        let mut row = vec![t.to_string()];
        row.extend(s.as_slice().iter().map(F::to_string));
        out.write_record(&row).map_err(io_err)?;
    }
    finish(out)
}

/// `feature,name,score,kept`.
pub fn write_feature_scores<F: Scalar, W: Write>(reduced: &ReducedFeatureSet<F>, names: &[String], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["feature", "name", "score", "kept"]).map_err(io_err)?;
    for (d, score) in reduced.scores.iter().enumerate() {
        let kept = reduced.kept.binary_search(&d).is_ok();
        out.write_record([d.to_string(), names[d].clone(), score.to_string(), u8::from(kept).to_string()])
            .map_err(io_err)?;
    }
    finish(out)
}

/// Planted partition and weights of a generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub labels: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub feature_names: Vec<String>,
}

impl GroundTruth {
    pub fn new(labels: &[usize], weights: &Matrix<f64>, feature_names: &[String]) -> Self {
        Self {
            labels: labels.to_vec(),
            weights: (0..weights.rows()).map(|k| weights.row(k).to_vec()).collect(),
            feature_names: feature_names.to_vec(),
        }
    }
}

/// Reads the retained partitions written by [`write_partition_samples`].
pub fn parse_partition_samples_str(text: &str, source: &str) -> Result<(Vec<usize>, Vec<Vec<usize>>)> {
    let mut reader = csv_reader(text);
    let mut indices = Vec::new();
    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(source, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let mut values = Vec::with_capacity(record.len());
        for tok in record.iter() {
            values.push(
                tok.parse::<usize>()
                    .map_err(|_| Error::parse(format!("{source}:{line}"), format!("{tok:?} is not a label")))?,
            );
        }
        if values.is_empty() {
            continue;
        }
        indices.push(values[0]);
        samples.push(values[1..].to_vec());
    }
    Ok((indices, samples))
}

/// Reads retained weights written by [`write_weight_samples`] as `B x D` matrices.
pub fn parse_weight_samples_str(
    text: &str,
    num_blocks: usize,
    source: &str,
) -> Result<(Vec<usize>, Vec<Matrix<f64>>, Vec<String>)> {
    let mut reader = csv_reader(text);
    let header = reader.headers().map_err(|e| csv_error(source, e))?.clone();
    let cols = header.len().saturating_sub(1);
    if num_blocks == 0 || cols % num_blocks != 0 {
        return Err(Error::parse(source, format!("{cols} weight columns do not split into {num_blocks} blocks")));
    }
    let d = cols / num_blocks;
    let names = header
        .iter()
        .skip(1)
        .take(d)
        .map(|h| h.split_once('.').map_or(h, |(_, f)| f).to_owned())
        .collect();
    let mut indices = Vec::new();
    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(source, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let at = || format!("{source}:{line}");
        let t = record
            .get(0)
            .unwrap_or("")
            .parse::<usize>()
            .map_err(|_| Error::parse(at(), "bad iteration index"))?;
        let mut values = Vec::with_capacity(cols);
        for tok in record.iter().skip(1) {
            values.push(tok.parse::<f64>().map_err(|_| Error::parse(at(), format!("{tok:?} is not a number")))?);
        }
        if values.len() != cols {
            return Err(Error::parse(at(), "wrong number of weight columns"));
        }
        indices.push(t);
        samples.push(Matrix::from_vec(num_blocks, d, values));
    }
    Ok((indices, samples, names))
}

/// Reads a `vertex,0,...` responsibilities table.
pub fn parse_responsibilities_str(text: &str, source: &str) -> Result<Matrix<f64>> {
    let (names, rows) = read_vertex_table(text, None, source)?;
    let b = names.len();
    let mut data = Vec::with_capacity(rows.len() * b);
    for row in rows {
        for tok in row {
            data.push(tok.parse::<f64>().map_err(|_| Error::parse(source, format!("{tok:?} is not a number")))?);
        }
    }
    Ok(Matrix::from_vec(data.len() / b.max(1), b, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_examples() {
        assert_eq!(parse_edge_list_str("0 1\n1 2\n", "t").unwrap(), vec![(0, 1, 1), (1, 2, 1)]);
        let net = LabelledNetwork::unlabelled(2, parse_edge_list_str("0 1\n# c\n\n1 0\n", "t").unwrap()).unwrap();
        assert_eq!(net.edges(), &[(0, 1, 2)]);
        let net = LabelledNetwork::unlabelled(1, parse_edge_list_str("0 0", "t").unwrap()).unwrap();
        assert_eq!(net.degree(0), 2);
        assert_eq!(parse_edge_list_str("3 4 5 # tail", "t").unwrap(), vec![(3, 4, 5)]);
    }

    #[test]
    fn edge_list_errors() {
        for bad in ["0 x", "-1 2", "0 1 0", "0 1 -2", "0", "0 1 2 3", "0.5 1"] {
            let err = parse_edge_list_str(bad, "g.txt").unwrap_err();
            assert!(matches!(err, Error::Parse { .. }), "{bad}");
        }
    }

    #[test]
    fn feature_examples() {
        let x = parse_features_str("vertex,lib,con,neu\n0,1,0,0\n1,0,1,0\n", None, "x").unwrap();
        assert_eq!(x.num_cols(), 3);
        assert_eq!(x.names(), &["lib", "con", "neu"]);
        assert_eq!(x.active(1), &[1]);
        // row order does not matter
        let y = parse_features_str("vertex,a\n1,1\n0,0\n", None, "x").unwrap();
        assert_eq!(y.active(0), &[] as &[usize]);
        assert_eq!(y.active(1), &[0]);
    }

    #[test]
    fn feature_errors() {
        assert!(parse_features_str("vertex,a\n0,2\n", None, "x").is_err());
        assert!(parse_features_str("vertex,a\n0,1\n0,0\n", None, "x").is_err());
        assert!(parse_features_str("vertex,a\n0,1\n2,0\n", None, "x").is_err());
        assert!(parse_features_str("vertex,a\n0,1\n", Some(2), "x").is_err());
        assert!(parse_features_str("id,a\n0,1\n", None, "x").is_err());
        assert!(parse_features_str("vertex,a\n0,1,1\n", None, "x").is_err());
    }

    #[test]
    fn categorical_expansion() {
        let x = parse_categorical_str("vertex,gender,grade\n0,m,1\n1,f,\n2,m,2\n", None, "c").unwrap();
        assert_eq!(x.names(), &["gender-m", "gender-f", "grade-1", "grade-2"]);
        assert_eq!(x.active(0), &[0, 2]);
        assert_eq!(x.active(1), &[1]);
        assert_eq!(x.active(2), &[0, 3]);
    }

    #[test]
    fn round_trip_of_network_and_features() {
        let x = FeatureMatrix::from_dense(4, vec!["a".into(), "b".into()], &[1, 0, 0, 1, 1, 1, 0, 0]).unwrap();
        let net = LabelledNetwork::new(4, [(0, 1, 1), (1, 1, 2), (2, 0, 3)], x).unwrap();
        let mut e = Vec::new();
        write_edge_list(&net, &mut e).unwrap();
        let mut f = Vec::new();
        write_features(net.features(), &mut f).unwrap();
        let edges = parse_edge_list_str(std::str::from_utf8(&e).unwrap(), "e").unwrap();
        let feats = parse_features_str(std::str::from_utf8(&f).unwrap(), None, "f").unwrap();
        let back = LabelledNetwork::new(feats.num_rows(), edges, feats).unwrap();
        assert_eq!(back.num_vertices(), 4);
        assert_eq!(back.edges(), net.edges());
        assert_eq!(back.features(), net.features());
    }

    #[test]
    fn sample_files_round_trip() {
        let mut buf = Vec::new();
        write_partition_samples(&[3, 8], &[vec![0, 1, 1], vec![1, 1, 0]], &mut buf).unwrap();
        let (t, s) = parse_partition_samples_str(std::str::from_utf8(&buf).unwrap(), "s").unwrap();
        assert_eq!(t, vec![3, 8]);
        assert_eq!(s, vec![vec![0, 1, 1], vec![1, 1, 0]]);

        let names = vec!["x".to_owned(), "y".to_owned()];
        let w = Matrix::from_vec(2, 2, vec![0.5, -1.25, 3.0, 1e-300]);
        let mut buf = Vec::new();
        write_weight_samples(&[7], &[w.clone()], &names, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,0.x,0.y,1.x,1.y\n"));
        let (t, s, n) = parse_weight_samples_str(&text, 2, "w").unwrap();
        assert_eq!((t, n), (vec![7], names));
        assert_eq!(s[0], w);
    }
}
