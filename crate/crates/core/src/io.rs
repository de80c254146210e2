//! Run configuration, layout files, SVG rendering and named generators.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Layout, Point};
use crate::graph::{load_edge_list, load_matrix_market, Graph};
use crate::optimizer::{CriterionConfig, OptimizerConfig};

pub const CONFIG_VERSION: u32 = 1;
pub const LAYOUT_VERSION: u32 = 1;
/// Environment variable that supplies the seed when a config sets none.
pub const SEED_ENV: &str = "SGDRAW_SEED";

/// Generator names accepted by [`generate`], with their arguments.
pub const GENERATORS: [(&str, &str); 8] = [
    ("grid", "ROWS COLS"),
    ("tree", "BRANCHING DEPTH"),
    ("dodecahedron", ""),
    ("path", "N"),
    ("cycle", "N"),
    ("complete", "N"),
    ("star", "LEAVES"),
    ("random", "N EXTRA_EDGES [SEED]"),
];

fn generator_list() -> String {
    GENERATORS
        .iter()
        .map(|(name, args)| {
            if args.is_empty() {
                name.to_string()
            } else {
                format!("{name} {args}")
            }
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Build a named graph.
pub fn generate(name: &str, args: &[u64]) -> Result<Graph> {
    let arity = |lo: usize, hi: usize| -> Result<()> {
        if args.len() < lo || args.len() > hi {
            let usage = GENERATORS.iter().find(|g| g.0 == name).map_or("", |g| g.1);
            return Err(Error::Config(format!("generator {name} expects arguments: {usage}")));
        }
        Ok(())
    };
    let a = |i: usize| args[i] as usize;
    match name {
        "grid" => arity(2, 2).map(|_| Graph::grid(a(0), a(1))),
        "tree" => arity(2, 2).map(|_| Graph::balanced_tree(a(0), a(1))),
        "dodecahedron" => arity(0, 0).map(|_| Graph::dodecahedron()),
        "path" => arity(1, 1).map(|_| Graph::path(a(0))),
        "cycle" => arity(1, 1).map(|_| Graph::cycle(a(0))),
        "complete" => arity(1, 1).map(|_| Graph::complete(a(0))),
        "star" => arity(1, 1).map(|_| Graph::star(a(0))),
        "random" => arity(2, 3).map(|_| Graph::random_connected(a(0), a(1), args.get(2).copied().unwrap_or(0))),
        _ => Err(Error::Config(format!(
            "unknown generator {name:?}; available: {}",
            generator_list()
        ))),
    }
}

/// Parse a generator spec such as `"grid 12 24"`.
pub fn generate_from_spec(spec: &str) -> Result<Graph> {
    let mut words = spec.split_whitespace();
    let name = words
        .next()
        .ok_or_else(|| Error::Config(format!("empty generator spec; available: {}", generator_list())))?;
    let args = words
        .map(|w| {
            w.parse::<u64>()
                .map_err(|_| Error::Config(format!("generator argument {w:?} is not a non-negative integer")))
        })
        .collect::<Result<Vec<_>>>()?;
    generate(name, &args)
}

/// Read a graph file: Matrix Market when the header says so, otherwise an
/// edge list.
pub fn load_graph(path: &Path) -> Result<Graph> {
    let text = std::fs::read_to_string(path)?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("graph").to_string();
    let g = if text.starts_with("%%MatrixMarket") {
        load_matrix_market(&text)?
    } else {
        let loaded = load_edge_list(&text)?;
        if loaded.dropped.self_loops + loaded.dropped.duplicates > 0 {
            log::warn!(
                "{}: dropped {} self-loops and {} duplicate edges",
                path.display(),
                loaded.dropped.self_loops,
                loaded.dropped.duplicates
            );
        }
        loaded.graph
    };
    if g.name().is_empty() || g.name() == "graph" {
        Ok(g.with_name(stem))
    } else {
        Ok(g)
    }
}

/// Where the graph of a run comes from; exactly one field is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl GraphSource {
    pub fn generator(spec: impl Into<String>) -> GraphSource {
        GraphSource {
            generator: Some(spec.into()),
            file: None,
        }
    }

    /// Files are resolved against `base` when relative.
    pub fn load(&self, base: Option<&Path>) -> Result<Graph> {
        match (&self.generator, &self.file) {
            (Some(spec), None) => generate_from_spec(spec),
            (None, Some(file)) => {
                let path = match base {
                    Some(b) if file.is_relative() => b.join(file),
                    _ => file.clone(),
                };
                load_graph(&path)
            }
            _ => Err(Error::Config("graph needs exactly one of `generator` or `file`".into())),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
}

/// Everything needed to reproduce a layout run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub graph: GraphSource,
    pub criteria: Vec<CriterionConfig>,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub output: OutputPaths,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        RunConfig::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.criteria.is_empty() {
            return Err(Error::Config("no criteria configured".into()));
        }
        for c in &self.criteria {
            c.validate()?;
        }
        // Zero iterations is a valid run: the output is the initial layout.
        let mut opt = self.optimizer.clone();
        opt.max_iter = opt.max_iter.max(1);
        opt.validate()
    }

    /// The configured seed, else `SGDRAW_SEED`, else 0.
    pub fn resolved_seed(&self) -> Result<u64> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        env_seed().map(|s| s.unwrap_or(0))
    }
}

/// Seed from the environment, if set.
pub fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// On-disk layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutFile {
    pub nodes: Vec<[f64; 2]>,
    pub graph: String,
    pub seed: Option<u64>,
    pub version: u32,
}

impl LayoutFile {
    pub fn new(layout: &Layout, graph: &str, seed: Option<u64>) -> LayoutFile {
        LayoutFile {
            nodes: layout.points().iter().map(|p| [p.x, p.y]).collect(),
            graph: graph.to_string(),
            seed,
            version: LAYOUT_VERSION,
        }
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self.nodes.iter().map(|&[x, y]| Point::new(x, y)).collect())
    }

    /// Compact JSON with shortest round-trip float formatting.
    pub fn to_json(&self) -> Result<String> {
        if self.nodes.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("layout coordinates".into()));
        }
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<LayoutFile> {
        let f: LayoutFile = serde_json::from_str(text)?;
        if f.version != LAYOUT_VERSION {
            return Err(Error::Config(format!(
                "unsupported layout version {} (expected {LAYOUT_VERSION})",
                f.version
            )));
        }
        Ok(f)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_json()? + "\n")?)
    }

    pub fn load(path: &Path) -> Result<LayoutFile> {
        LayoutFile::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvgStyle {
    /// Output width in pixels; height follows the drawing's proportions.
    pub width: f64,
    /// Node radius as a fraction of the longer drawing side.
    pub node_radius: f64,
    /// Edge width as a fraction of the longer drawing side.
    pub edge_width: f64,
    pub node_fill: &'static str,
    pub edge_stroke: &'static str,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle {
            width: 800.0,
            node_radius: 0.008,
            edge_width: 0.002,
            node_fill: "#1f77b4",
            edge_stroke: "#555555",
        }
    }
}

/// One `line` per edge and one `circle` per node; the view box is the
/// bounding box grown by 5% on every side.
pub fn render_svg(g: &Graph, layout: &Layout, style: &SvgStyle) -> Result<String> {
    layout.check(g.n())?;
    let pts = layout.points();
    let (mut lo, mut hi) = (Point::new(0.0, 0.0), Point::new(0.0, 0.0));
    if let Some(first) = pts.first() {
        lo = *first;
        hi = *first;
        for p in pts {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
    }
    let mut w = hi.x - lo.x;
    let mut h = hi.y - lo.y;
    if w <= 0.0 {
        w = h.max(1.0);
        lo.x -= w / 2.0;
    }
    if h <= 0.0 {
        h = w;
        lo.y -= h / 2.0;
    }
    let (mx, my) = (0.05 * w, 0.05 * h);
    let (vx, vy, vw, vh) = (lo.x - mx, lo.y - my, w + 2.0 * mx, h + 2.0 * my);
    let side = vw.max(vh);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="{vx} {vy} {vw} {vh}">"#,
        style.width,
        style.width * vh / vw
    );
    let _ = writeln!(
        out,
        r#"<g stroke="{}" stroke-width="{}">"#,
        style.edge_stroke,
        style.edge_width * side
    );
    for &(i, j) in g.edges() {
        let (a, b) = (pts[i], pts[j]);
        let _ = writeln!(out, r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#, a.x, a.y, b.x, b.y);
    }
    out.push_str("</g>\n");
    let _ = writeln!(out, r#"<g fill="{}">"#, style.node_fill);
    for p in pts {
        let _ = writeln!(
            out,
            r#"<circle cx="{}" cy="{}" r="{}"/>"#,
            p.x,
            p.y,
            style.node_radius * side
        );
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::Kind;
    use crate::optimizer::{Guard, Schedule, Segment};

    #[test]
    fn generators() {
        assert_eq!(generate_from_spec("grid 6 10").unwrap().n(), 60);
        assert_eq!(generate_from_spec("tree 2 5").unwrap().n(), 63);
        assert_eq!(generate_from_spec("dodecahedron").unwrap().n(), 20);
        let err = generate_from_spec("hypercube 3").unwrap_err().to_string();
        assert!(err.contains("grid ROWS COLS") && err.contains("dodecahedron"), "{err}");
        assert!(generate_from_spec("grid 6").is_err());
        assert!(generate_from_spec("grid six 6").is_err());
    }

    fn sample_config() -> RunConfig {
        let mut cr = CriterionConfig::new(
            Kind::Crossings,
            Schedule::new(
                0.0,
                vec![Segment {
                    start: 500,
                    stop: 750,
                    from: 0.0,
                    to: 0.25,
                }],
            )
            .unwrap(),
        );
        cr.sample_size = Some(64);
        let mut optimizer = OptimizerConfig::default();
        optimizer.safe_update = Some(Guard::Crossings);
        optimizer.max_iter = 1000;
        optimizer.lr = Some(Schedule::constant(0.1).unwrap());
        RunConfig {
            version: CONFIG_VERSION,
            seed: Some(7),
            graph: GraphSource::generator("grid 4 4"),
            criteria: vec![CriterionConfig::constant(Kind::Stress, 1.0).unwrap(), cr],
            optimizer,
            output: OutputPaths {
                layout: Some("out.json".into()),
                svg: None,
                trace: Some("trace.csv".into()),
            },
        }
    }

    #[test]
    fn config_round_trip() {
        let cfg = sample_config();
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
        let mut bad = text.clone();
        bad.push_str("\nunexpected = 1\n");
        assert!(RunConfig::from_toml(&bad).is_err());
        let wrong_version = text.replace("version = 1", "version = 2");
        assert!(RunConfig::from_toml(&wrong_version).is_err());
    }

    #[test]
    fn minimal_config() {
        let cfg = RunConfig::from_toml(
            r#"
version = 1
graph = { generator = "dodecahedron" }
[[criteria]]
kind = "ST"
"#,
        )
        .unwrap();
        assert_eq!(cfg.criteria[0].weight, Schedule::constant(1.0).unwrap());
        assert_eq!(cfg.optimizer, OptimizerConfig::default());
        assert!(RunConfig::from_toml("version = 1\ngraph = { generator = \"x\" }\ncriteria = []\n").is_err());
        let both = GraphSource {
            generator: Some("path 3".into()),
            file: Some("g.txt".into()),
        };
        assert!(both.load(None).is_err());
    }

    #[test]
    fn layout_json_is_bit_exact() {
        let mut rng = crate::rng::seeded(11);
        let mut layout = Layout::random_normal(30, &mut rng);
        layout[0] = Point::new(0.1 + 0.2, -1e-300);
        layout[1] = Point::new(f64::MAX, f64::MIN_POSITIVE);
        let file = LayoutFile::new(&layout, "g", Some(3));
        let text = file.to_json().unwrap();
        assert!(text.starts_with(r#"{"nodes":[["#));
        assert!(text.ends_with(r#""graph":"g","seed":3,"version":1}"#));
        let back = LayoutFile::from_json(&text).unwrap().layout();
        for (a, b) in layout.points().iter().zip(back.points()) {
            assert_eq!(a.x.to_bits(), b.x.to_bits());
            assert_eq!(a.y.to_bits(), b.y.to_bits());
        }
        assert!(LayoutFile::from_json(r#"{"nodes":[[1,2]],"graph":"g","seed":null,"version":9}"#).is_err());
        assert!(LayoutFile::from_json(r#"{"nodes":[[1]],"graph":"g","seed":null,"version":1}"#).is_err());
        layout[2] = Point::new(f64::NAN, 0.0);
        assert!(LayoutFile::new(&layout, "g", None).to_json().is_err());
    }

    #[test]
    fn svg_elements() {
        let g = Graph::path(2);
        let l = Layout::new(vec![Point::new(0.0, 0.0), Point::new(10.0, 0.0)]);
        let svg = render_svg(&g, &l, &SvgStyle::default()).unwrap();
        assert_eq!(svg.matches("<line").count(), 1);
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains(r#"viewBox="-0.5 -5.5 11 11""#), "{svg}");
        assert_eq!(svg, render_svg(&g, &l, &SvgStyle::default()).unwrap());
        let lonely = Graph::from_edges(3, [], "dots").0;
        let l3 = Layout::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 2.0), Point::new(3.0, 1.0)]);
        let svg = render_svg(&lonely, &l3, &SvgStyle::default()).unwrap();
        assert_eq!(svg.matches("<line").count(), 0);
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(render_svg(&g, &l3, &SvgStyle::default()).is_err());
    }
}
