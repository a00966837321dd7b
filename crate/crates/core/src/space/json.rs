//! The space JSON format.

use std::path::Path;

use serde_json::{json, Value};

use super::{CoarseSpace, Label, MedianRule};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn field<'a>(obj: &'a Value, key: &str, ctx: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::invalid(format!("{ctx}: missing \"{key}\"")))
}

fn index(v: &Value, ctx: &str) -> Result<usize> {
    v.as_u64()
        .map(|i| i as usize)
        .ok_or_else(|| Error::invalid(format!("{ctx}: expected a point index, got {v}")))
}

fn scalar<S: Scalar>(v: &Value, ctx: &str) -> Result<S> {
    S::from_json(v).ok_or_else(|| Error::invalid(format!("{ctx}: expected a number, got {v}")))
}

fn array<'a>(v: &'a Value, ctx: &str) -> Result<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| Error::invalid(format!("{ctx}: expected an array")))
}

fn parse_rule(median: &Value, labels: &[Label], metric_edges: Option<&[(usize, usize)]>) -> Result<MedianRule> {
    let kind = field(median, "type", "median")?
        .as_str()
        .ok_or_else(|| Error::invalid("median: \"type\" must be a string"))?;
    match kind {
        "table" => {
            let data = array(field(median, "data", "median")?, "median data")?
                .iter()
                .map(|v| index(v, "median data").map(|i| i as u32))
                .collect::<Result<Vec<_>>>()?;
            MedianRule::table(labels.len(), data)
        }
        "coordinatewise" => MedianRule::coordinatewise(labels),
        "floor-coordinatewise" => MedianRule::floor(labels),
        "tree" => {
            let edges = match median.get("edges") {
                Some(e) => array(e, "median edges")?
                    .iter()
                    .map(|pair| {
                        let p = array(pair, "median edge")?;
                        if p.len() != 2 {
                            return Err(Error::invalid("median edge: expected [i, j]"));
                        }
                        Ok((index(&p[0], "median edge")?, index(&p[1], "median edge")?))
                    })
                    .collect::<Result<Vec<_>>>()?,
                None => metric_edges
                    .ok_or_else(|| Error::invalid("tree median needs \"edges\" or a graph metric"))?
                    .to_vec(),
            };
            MedianRule::tree(labels.len(), &edges)
        }
        other => Err(Error::invalid(format!("unknown median type \"{other}\""))),
    }
}

impl<S: Scalar> CoarseSpace<S> {
    pub fn from_json(value: &Value) -> Result<Self> {
        let labels: Vec<Label> = serde_json::from_value(field(value, "points", "space")?.clone())?;
        let n = labels.len();
        let metric = field(value, "metric", "space")?;
        let median = field(value, "median", "space")?;
        match field(metric, "type", "metric")?.as_str() {
            Some("matrix") => {
                let data = array(field(metric, "data", "metric")?, "metric data")?;
                let mut dist = Vec::with_capacity(n * n);
                for v in data {
                    match v {
                        Value::Array(row) => {
                            if row.len() != n {
                                return Err(Error::invalid(format!("metric row has {} entries, expected {n}", row.len())));
                            }
                            for x in row {
                                dist.push(scalar(x, "metric data")?);
                            }
                        }
                        x => dist.push(scalar(x, "metric data")?),
                    }
                }
                let rule = parse_rule(median, &labels, None)?;
                Self::from_matrix(labels, dist, rule)
            }
            Some("graph") => {
                let mut edges = Vec::new();
                for e in array(field(metric, "edges", "metric")?, "metric edges")? {
                    let e = array(e, "metric edge")?;
                    if e.len() != 3 {
                        return Err(Error::invalid("metric edge: expected [i, j, w]"));
                    }
                    edges.push((index(&e[0], "metric edge")?, index(&e[1], "metric edge")?, scalar(&e[2], "metric edge")?));
                }
                let pairs: Vec<(usize, usize)> = edges.iter().map(|&(u, v, _)| (u, v)).collect();
                let rule = parse_rule(median, &labels, Some(&pairs))?;
                Self::from_graph(labels, edges, rule)
            }
            _ => Err(Error::invalid("metric: \"type\" must be \"matrix\" or \"graph\"")),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_json(&serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Graph metrics are written as their edge list, everything else as a
    /// flat matrix.
    pub fn to_json(&self) -> Value {
        let metric = match &self.edges {
            Some(edges) => json!({
                "type": "graph",
                "edges": edges.iter().map(|&(u, v, w)| json!([u, v, w.to_json()])).collect::<Vec<_>>(),
            }),
            None => json!({
                "type": "matrix",
                "data": self.dist.iter().map(|d| d.to_json()).collect::<Vec<_>>(),
            }),
        };
        let median = match &self.rule {
            MedianRule::Table(t) => json!({"type": "table", "data": t.data()}),
            MedianRule::Tree(t) => json!({"type": "tree", "edges": t.edges()}),
            rule => json!({"type": rule.kind()}),
        };
        json!({
            "points": self.labels,
            "metric": metric,
            "median": median,
        })
    }
}
