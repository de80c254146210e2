//! All nine quality measures at once, and comparison tables.
//!
//! Internally each measure keeps its natural orientation. Exported values
//! (CSV rows, tables) are lower-is-better throughout: NP, AR, ANR, VR and GB
//! are reported as `1 - Q`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::criteria::{self, default_resolution, Kind};
use crate::error::{Error, Result};
use crate::geometry::{all_crossings, Layout};
use crate::graph::{all_pairs_shortest_paths, DistanceMatrix, Graph};

/// Constants used by the measures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QualityParams {
    pub ideal_length: f64,
    /// Vertex resolution target; `None` means `1 / sqrt(n)`.
    pub resolution: Option<f64>,
    pub rotations: usize,
}

impl Default for QualityParams {
    fn default() -> Self {
        QualityParams {
            ideal_length: 1.0,
            resolution: None,
            rotations: criteria::DEFAULT_ROTATIONS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub stress: f64,
    pub edge_length: f64,
    pub neighborhood: f64,
    pub crossings: usize,
    pub crossing_angle: f64,
    pub aspect_ratio: f64,
    pub angular_resolution: f64,
    pub vertex_resolution: f64,
    pub gabriel: f64,
}

impl QualityReport {
    /// Internal value of one measure (crossings as a count).
    pub fn get(&self, kind: Kind) -> f64 {
        match kind {
            Kind::Stress => self.stress,
            Kind::IdealEdgeLength => self.edge_length,
            Kind::NeighborhoodPreservation => self.neighborhood,
            Kind::Crossings => self.crossings as f64,
            Kind::CrossingAngle => self.crossing_angle,
            Kind::AspectRatio => self.aspect_ratio,
            Kind::AngularResolution => self.angular_resolution,
            Kind::VertexResolution => self.vertex_resolution,
            Kind::Gabriel => self.gabriel,
        }
    }

    /// Value in the lower-is-better convention.
    pub fn exported(&self, kind: Kind) -> f64 {
        let q = self.get(kind);
        if is_inverted(kind) {
            1.0 - q
        } else {
            q
        }
    }

    /// All nine exported values in column order.
    pub fn exported_row(&self) -> [f64; 9] {
        Kind::ALL.map(|k| self.exported(k))
    }
}

/// Measures whose natural orientation is higher-is-better.
pub fn is_inverted(kind: Kind) -> bool {
    matches!(
        kind,
        Kind::NeighborhoodPreservation
            | Kind::AspectRatio
            | Kind::AngularResolution
            | Kind::VertexResolution
            | Kind::Gabriel
    )
}

/// Every measure with default constants. The graph must be connected.
pub fn evaluate_all(g: &Graph, layout: &Layout) -> Result<QualityReport> {
    let d = all_pairs_shortest_paths(g)?;
    evaluate_with(g, layout, &d, &QualityParams::default())
}

pub fn evaluate_with(g: &Graph, layout: &Layout, d: &DistanceMatrix, params: &QualityParams) -> Result<QualityReport> {
    layout.check(g.n())?;
    if d.n() != g.n() {
        return Err(Error::Invalid(format!(
            "distance matrix has {} rows for a graph with {} nodes",
            d.n(),
            g.n()
        )));
    }
    let crossings = all_crossings(layout, g);
    let r = params.resolution.unwrap_or_else(|| default_resolution(g.n()));
    Ok(QualityReport {
        stress: criteria::stress_quality(layout, d),
        edge_length: criteria::ideal_edge_length_quality(layout, g, params.ideal_length),
        neighborhood: criteria::neighborhood_quality(layout, g),
        crossings: crossings.len(),
        crossing_angle: criteria::crossing_angle_quality_of(layout, g, &crossings),
        aspect_ratio: criteria::aspect_ratio_quality(layout, params.rotations),
        angular_resolution: criteria::angular_resolution_quality(layout, g),
        vertex_resolution: criteria::vertex_resolution_quality(layout, r),
        gabriel: criteria::gabriel_quality(layout, g),
    })
}

/// One labelled evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityRow {
    pub method: String,
    pub graph: String,
    pub report: QualityReport,
}

pub const CSV_HEADER: &str = "method,graph,ST,IL,NP,CR,CAM,AR,ANR,VR,GB";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Header plus one exported row per evaluation.
pub fn quality_csv(rows: &[QualityRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&csv_field(&row.method));
        out.push(',');
        out.push_str(&csv_field(&row.graph));
        for v in row.report.exported_row() {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Methods by graphs for one measure, with the lowest exported value in
/// each column flagged.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub kind: Kind,
    pub methods: Vec<String>,
    pub graphs: Vec<String>,
    /// `values[method][graph]`, `None` when that combination was not run.
    pub values: Vec<Vec<Option<f64>>>,
    /// Row index of the best entry per column.
    pub best: Vec<Option<usize>>,
}

pub fn report_table(rows: &[QualityRow], kind: Kind) -> Result<Table> {
    if rows.is_empty() {
        return Err(Error::Empty("report table".into()));
    }
    let mut methods: Vec<String> = Vec::new();
    let mut graphs: Vec<String> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method) {
            methods.push(r.method.clone());
        }
        if !graphs.contains(&r.graph) {
            graphs.push(r.graph.clone());
        }
    }
    let mut values = vec![vec![None; graphs.len()]; methods.len()];
    for r in rows {
        let m = methods.iter().position(|x| *x == r.method).unwrap();
        let g = graphs.iter().position(|x| *x == r.graph).unwrap();
        values[m][g] = Some(r.report.exported(kind));
    }
    let best = (0..graphs.len())
        .map(|g| {
            (0..methods.len())
                .filter_map(|m| values[m][g].map(|v| (m, v)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(m, _)| m)
        })
        .collect();
    Ok(Table {
        kind,
        methods,
        graphs,
        values,
        best,
    })
}

impl Table {
    fn cell(&self, m: usize, g: usize) -> String {
        match self.values[m][g] {
            None => "-".into(),
            Some(v) if self.kind == Kind::Crossings => format!("{v:.0}"),
            Some(v) => format!("{v:.3}"),
        }
    }

    /// `method,<graph>...` with full-precision values; missing cells empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method");
        for g in &self.graphs {
            out.push(',');
            out.push_str(&csv_field(g));
        }
        out.push('\n');
        for (m, name) in self.methods.iter().enumerate() {
            out.push_str(&csv_field(name));
            for v in &self.values[m] {
                out.push(',');
                if let Some(v) = v {
                    let _ = write!(out, "{v}");
                }
            }
            out.push('\n');
        }
        out
    }

    /// Aligned columns; the best entry of each column carries a `*`.
    pub fn to_text(&self) -> String {
        let mut cells: Vec<Vec<String>> = Vec::with_capacity(self.methods.len() + 1);
        let mut head = vec![self.kind.code().to_string()];
        head.extend(self.graphs.iter().cloned());
        cells.push(head);
        for (m, name) in self.methods.iter().enumerate() {
            let mut row = vec![name.clone()];
            for g in 0..self.graphs.len() {
                let mark = if self.best[g] == Some(m) { "*" } else { " " };
                row.push(format!("{}{mark}", self.cell(m, g)));
            }
            cells.push(row);
        }
        let cols = self.graphs.len() + 1;
        let widths: Vec<usize> = (0..cols)
            .map(|c| cells.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &cells {
            let mut line = format!("{:<w$}", row[0], w = widths[0]);
            for c in 1..cols {
                let _ = write!(line, "  {:>w$}", row[c], w = widths[c]);
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }
}
