//! Line-oriented text formats.
//!
//! Every document opens with a `<kind> <version>` line, tokens are
//! whitespace-delimited, blank lines and `#` comments are skipped, and
//! numbers are printed with 9 significant digits so values already on that
//! grid survive a write/read cycle bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;

use crate::baselines::CategoryActivityMap;
use crate::dataset::{Dataset, SceneData};
use crate::error::{Error, Result};
use crate::evaluation::{GridReport, ImagePose, SceneEvaluation, Summary};
use crate::experiments::{ElapsePoint, TransferReport};
use crate::localization::DiscrepancyCurve;
use crate::numfmt::fmt9;
use crate::rwnmf::{ActionMap, FactorPair};
use crate::scene::{ActivityVocabulary, Cell, Demonstration, SceneGrid};
use crate::side_info::FeatureTable;

pub const SCHEMA_VERSION: &str = "1";
pub const SCENE_KIND: &str = "action-maps-scene";
pub const DATASET_KIND: &str = "action-maps-dataset";
pub const CATEGORY_MAP_KIND: &str = "action-maps-category-map";
pub const FACTORS_KIND: &str = "action-maps-factors";

pub const MANIFEST_FILE: &str = "dataset.txt";
pub const CATEGORY_MAP_FILE: &str = "category_map.txt";
pub const SCENES_DIR: &str = "scenes";

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Tokenized non-blank, non-comment lines with their 1-based numbers.
struct Reader<'a> {
    path: String,
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str, path: &str) -> Self {
        Reader {
            path: path.to_string(),
            lines: text.lines().enumerate().peekable(),
            last: 0,
        }
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    fn next(&mut self) -> Result<(usize, Vec<&'a str>)> {
        for (i, line) in self.lines.by_ref() {
            self.last = i + 1;
            let body = line.split('#').next().unwrap_or("");
            let toks: Vec<&str> = body.split_whitespace().collect();
            if !toks.is_empty() {
                return Ok((i + 1, toks));
            }
        }
        Err(self.err(self.last + 1, "unexpected end of file"))
    }

    /// Next line, which must start with `key`; returns the other tokens.
    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (line, toks) = self.next()?;
        if toks[0] != key {
            return Err(self.err(line, format!("expected `{key}`, found `{}`", toks[0])));
        }
        Ok((line, toks[1..].to_vec()))
    }

    fn header(&mut self, kind: &str) -> Result<()> {
        let (line, toks) = self.next()?;
        if toks[0] != kind {
            return Err(self.err(line, format!("not a {kind} document (starts with `{}`)", toks[0])));
        }
        let found = toks.get(1).copied().unwrap_or("");
        if found != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                path: self.path.clone(),
                found: found.to_string(),
                expected: SCHEMA_VERSION.to_string(),
            });
        }
        Ok(())
    }

    fn num<T: FromStr>(&self, line: usize, tok: &str, what: &str) -> Result<T> {
        tok.parse()
            .map_err(|_| self.err(line, format!("cannot parse {what} from `{tok}`")))
    }

    fn value<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let (line, rest) = self.keyed(key)?;
        if rest.len() != 1 {
            return Err(self.err(line, format!("`{key}` takes one value")));
        }
        self.num(line, rest[0], key)
    }

    /// `key n name_1 .. name_n`.
    fn names(&mut self, key: &str) -> Result<Vec<String>> {
        let (line, rest) = self.keyed(key)?;
        let n: usize = self.num(line, rest.first().copied().unwrap_or(""), "count")?;
        if rest.len() != n + 1 {
            return Err(self.err(line, format!("`{key}` declares {n} names but lists {}", rest.len().saturating_sub(1))));
        }
        Ok(rest[1..].iter().map(|s| s.to_string()).collect())
    }

    fn floats(&self, line: usize, toks: &[&str], n: usize, what: &str) -> Result<Vec<f64>> {
        if toks.len() != n {
            return Err(self.err(line, format!("{what}: expected {n} values, found {}", toks.len())));
        }
        toks.iter().map(|t| self.num(line, t, what)).collect()
    }

    fn end(&mut self) -> Result<()> {
        let (line, toks) = self.next()?;
        if toks != ["end"] {
            return Err(self.err(line, "expected `end`"));
        }
        if let Ok((line, _)) = self.next() {
            return Err(self.err(line, "content after `end`"));
        }
        Ok(())
    }

    fn wrap<T>(&self, line: usize, r: Result<T>) -> Result<T> {
        r.map_err(|e| match e {
            e @ (Error::Parse { .. } | Error::Io { .. }) => e,
            other => self.err(line, other.to_string()),
        })
    }
}

fn join9(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(fmt9).collect::<Vec<_>>().join(" ")
}

/// Scene document.
pub fn write_scene(scene: &SceneData) -> String {
    let g = &scene.grid;
    let f = &scene.features;
    let mut s = String::new();
    let _ = writeln!(s, "{SCENE_KIND} {SCHEMA_VERSION}");
    let _ = writeln!(s, "scene_id {}", g.scene_id());
    let _ = writeln!(s, "width {}", g.width());
    let _ = writeln!(s, "height {}", g.height());
    let _ = writeln!(s, "cell_size_m {}", fmt9(g.cell_size_m()));
    let _ = writeln!(s, "scene_classes {}", f.num_scene_classes());
    let _ = writeln!(s, "object_categories {}", f.num_object_categories());
    let names = g.vocabulary().names();
    let _ = writeln!(s, "activities {} {}", names.len(), names.join(" "));
    let _ = writeln!(s, "explored");
    for row in g.explored_mask().chunks(g.width()) {
        let line: String = row.iter().map(|&e| if e { '1' } else { '0' }).collect();
        let _ = writeln!(s, "{line}");
    }
    let labelled: Vec<Cell> = g.cells().filter(|&c| !g.labels(c).is_empty()).collect();
    let _ = writeln!(s, "gt_labels {}", labelled.len());
    for c in labelled {
        let acts: Vec<String> = g.labels(c).iter().map(usize::to_string).collect();
        let _ = writeln!(s, "{} {} {}", c.x, c.y, acts.join(" "));
    }
    let _ = writeln!(s, "demonstrations {}", g.demonstrations().len());
    for d in g.demonstrations() {
        let _ = writeln!(s, "{} {} {} {}", d.cell.x, d.cell.y, d.activity, fmt9(d.value));
    }
    let _ = writeln!(s, "camera_poses {}", scene.poses.len());
    for p in &scene.poses {
        let _ = writeln!(s, "{}", join9([p.position[0], p.position[1], p.heading[0], p.heading[1]]));
    }
    let _ = writeln!(s, "features {}", f.num_cells());
    for (i, c) in g.cells().enumerate() {
        let (ps, os) = (f.scene_scores.row(i), f.object_scores.row(i));
        let _ = writeln!(s, "{} {} {}", c.x, c.y, join9(ps.iter().chain(os.iter()).copied()));
    }
    let _ = writeln!(s, "end");
    s
}

pub fn read_scene(text: &str, path: &str) -> Result<SceneData> {
    let mut r = Reader::new(text, path);
    r.header(SCENE_KIND)?;
    let (line, id) = r.keyed("scene_id")?;
    if id.len() != 1 {
        return Err(r.err(line, "scene_id takes one token"));
    }
    let id = id[0].to_string();
    let width: usize = r.value("width")?;
    let height: usize = r.value("height")?;
    let cell_size: f64 = r.value("cell_size_m")?;
    let classes: usize = r.value("scene_classes")?;
    let categories: usize = r.value("object_categories")?;
    let vline = r.last + 1;
    let names = r.names("activities")?;
    let vocab = r.wrap(vline, ActivityVocabulary::new(names))?;
    let mut grid = r.wrap(line, SceneGrid::new(id, width, height, cell_size, vocab))?;

    r.keyed("explored")?;
    for y in 0..height {
        let (line, toks) = r.next()?;
        if toks.len() != 1 || toks[0].len() != width || !toks[0].bytes().all(|b| b == b'0' || b == b'1') {
            return Err(r.err(line, format!("explored row {y} must be {width} characters of 0/1")));
        }
        for (x, b) in toks[0].bytes().enumerate() {
            if b == b'1' {
                grid.mark_explored(Cell::new(x, y))?;
            }
        }
    }

    let (line, rest) = r.keyed("gt_labels")?;
    let n: usize = r.num(line, rest.first().copied().unwrap_or(""), "label count")?;
    for _ in 0..n {
        let (line, toks) = r.next()?;
        if toks.len() < 3 {
            return Err(r.err(line, "label line needs x, y and at least one activity"));
        }
        let cell = Cell::new(r.num(line, toks[0], "x")?, r.num(line, toks[1], "y")?);
        for t in &toks[2..] {
            let a = r.num(line, t, "activity")?;
            r.wrap(line, grid.add_label(cell, a))?;
        }
    }

    let (line, rest) = r.keyed("demonstrations")?;
    let n: usize = r.num(line, rest.first().copied().unwrap_or(""), "demonstration count")?;
    for _ in 0..n {
        let (line, toks) = r.next()?;
        if toks.len() != 4 {
            return Err(r.err(line, "demonstration line is `x y activity value`"));
        }
        let demo = Demonstration {
            cell: Cell::new(r.num(line, toks[0], "x")?, r.num(line, toks[1], "y")?),
            activity: r.num(line, toks[2], "activity")?,
            value: r.num(line, toks[3], "value")?,
        };
        r.wrap(line, grid.add_demonstration(demo))?;
    }

    let (line, rest) = r.keyed("camera_poses")?;
    let n: usize = r.num(line, rest.first().copied().unwrap_or(""), "pose count")?;
    let mut poses = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, toks) = r.next()?;
        let v = r.floats(line, &toks, 4, "camera pose")?;
        poses.push(r.wrap(line, ImagePose::new([v[0], v[1]], [v[2], v[3]]))?);
    }

    let (line, rest) = r.keyed("features")?;
    let n: usize = r.num(line, rest.first().copied().unwrap_or(""), "feature count")?;
    if n != width * height {
        return Err(r.err(line, format!("features list {n} cells, grid has {}", width * height)));
    }
    let mut features = FeatureTable::zeros(n, classes, categories);
    for (i, cell) in grid.cells().collect::<Vec<_>>().into_iter().enumerate() {
        let (line, toks) = r.next()?;
        if toks.len() != 2 + classes + categories {
            return Err(r.err(line, format!("feature line needs x, y and {} scores", classes + categories)));
        }
        let (x, y): (usize, usize) = (r.num(line, toks[0], "x")?, r.num(line, toks[1], "y")?);
        if (x, y) != (cell.x, cell.y) {
            return Err(r.err(line, format!("expected cell ({}, {}), found ({x}, {y})", cell.x, cell.y)));
        }
        let v = r.floats(line, &toks[2..], classes + categories, "feature scores")?;
        for (k, &val) in v.iter().enumerate() {
            if k < classes {
                features.scene_scores[[i, k]] = val;
            } else {
                features.object_scores[[i, k - classes]] = val;
            }
        }
    }
    r.end()?;
    let end = r.last;
    r.wrap(end, SceneData::new(grid, features, poses))
}

pub fn write_category_map(map: &CategoryActivityMap, categories: &[String], vocab: &ActivityVocabulary) -> String {
    let mut s = format!("{CATEGORY_MAP_KIND} {SCHEMA_VERSION}\n");
    for (f, name) in categories.iter().enumerate() {
        let acts: Vec<&str> = map.activities_of(f).iter().filter_map(|&a| vocab.name(a)).collect();
        if acts.is_empty() {
            let _ = writeln!(s, "{name}");
        } else {
            let _ = writeln!(s, "{name} {}", acts.join(" "));
        }
    }
    s
}

/// Category map by names; categories not listed afford nothing.
pub fn read_category_map(text: &str, path: &str, categories: &[String], vocab: &ActivityVocabulary) -> Result<CategoryActivityMap> {
    let mut r = Reader::new(text, path);
    r.header(CATEGORY_MAP_KIND)?;
    let mut by_category = vec![Vec::new(); categories.len()];
    let mut seen = vec![false; categories.len()];
    while let Ok((line, toks)) = r.next() {
        let f = categories
            .iter()
            .position(|c| c == toks[0])
            .ok_or_else(|| r.err(line, format!("unknown object category `{}`", toks[0])))?;
        if seen[f] {
            return Err(r.err(line, format!("category `{}` listed twice", toks[0])));
        }
        seen[f] = true;
        for name in &toks[1..] {
            let a = vocab
                .index_of(name)
                .ok_or_else(|| r.err(line, format!("unknown activity `{name}`")))?;
            by_category[f].push(a);
        }
    }
    CategoryActivityMap::new(vocab.len(), by_category)
}

pub fn write_manifest(dataset: &Dataset) -> String {
    let mut s = format!("{DATASET_KIND} {SCHEMA_VERSION}\n");
    let names = |v: &[String]| format!("{} {}", v.len(), v.join(" "));
    let _ = writeln!(s, "activities {}", names(dataset.vocabulary().names()));
    let _ = writeln!(s, "scene_classes {}", names(&dataset.scene_classes));
    let _ = writeln!(s, "object_categories {}", names(&dataset.object_categories));
    let ids: Vec<String> = dataset.scenes.iter().map(|s| s.id().to_string()).collect();
    let _ = writeln!(s, "scenes {}", names(&ids));
    let _ = writeln!(s, "end");
    s
}

pub fn scene_path(dir: &Path, id: &str) -> std::path::PathBuf {
    dir.join(SCENES_DIR).join(format!("{id}.txt"))
}

/// Writes a dataset directory: manifest, category map, one file per scene.
pub fn write_dataset(dir: &Path, dataset: &Dataset) -> Result<()> {
    write_text(&dir.join(MANIFEST_FILE), &write_manifest(dataset))?;
    write_text(
        &dir.join(CATEGORY_MAP_FILE),
        &write_category_map(&dataset.category_map, &dataset.object_categories, dataset.vocabulary()),
    )?;
    for scene in &dataset.scenes {
        write_text(&scene_path(dir, scene.id()), &write_scene(scene))?;
    }
    Ok(())
}

pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = read_text(&manifest_path)?;
    let shown = manifest_path.display().to_string();
    let mut r = Reader::new(&text, &shown);
    r.header(DATASET_KIND)?;
    let line = r.last + 1;
    let activities = r.names("activities")?;
    let vocab = r.wrap(line, ActivityVocabulary::new(activities))?;
    let classes = r.names("scene_classes")?;
    let categories = r.names("object_categories")?;
    let ids = r.names("scenes")?;
    r.end()?;
    let map_path = dir.join(CATEGORY_MAP_FILE);
    let map = read_category_map(&read_text(&map_path)?, &map_path.display().to_string(), &categories, &vocab)?;
    let scenes = ids
        .iter()
        .map(|id| {
            let p = scene_path(dir, id);
            let scene = read_scene(&read_text(&p)?, &p.display().to_string())?;
            if scene.id() != id {
                return Err(Error::Parse {
                    path: p.display().to_string(),
                    line: 2,
                    message: format!("scene id {} does not match manifest entry {id}", scene.id()),
                });
            }
            Ok(scene)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(classes, categories, map, scenes)
}

/// Factor checkpoint: the stacked scene ids, then `U` and `V` row by row.
pub fn write_factors(factors: &FactorPair, scene_ids: &[String]) -> String {
    let mut s = format!("{FACTORS_KIND} {SCHEMA_VERSION}\n");
    let _ = writeln!(s, "scenes {} {}", scene_ids.len(), scene_ids.join(" "));
    let _ = writeln!(s, "rows {}", factors.u.nrows());
    let _ = writeln!(s, "activities {}", factors.v.nrows());
    let _ = writeln!(s, "rank {}", factors.rank());
    let _ = writeln!(s, "U");
    for row in factors.u.rows() {
        let _ = writeln!(s, "{}", join9(row.iter().copied()));
    }
    let _ = writeln!(s, "V");
    for row in factors.v.rows() {
        let _ = writeln!(s, "{}", join9(row.iter().copied()));
    }
    let _ = writeln!(s, "end");
    s
}

pub fn read_factors(text: &str, path: &str) -> Result<(FactorPair, Vec<String>)> {
    let mut r = Reader::new(text, path);
    r.header(FACTORS_KIND)?;
    let ids = r.names("scenes")?;
    let rows: usize = r.value("rows")?;
    let cols: usize = r.value("activities")?;
    let rank: usize = r.value("rank")?;
    let read_block = |r: &mut Reader, key: &str, n: usize| -> Result<Array2<f64>> {
        r.keyed(key)?;
        let mut m = Array2::zeros((n, rank));
        for i in 0..n {
            let (line, toks) = r.next()?;
            let v = r.floats(line, &toks, rank, key)?;
            for (k, x) in v.into_iter().enumerate() {
                m[[i, k]] = x;
            }
        }
        Ok(m)
    };
    let u = read_block(&mut r, "U", rows)?;
    let v = read_block(&mut r, "V", cols)?;
    r.end()?;
    let line = r.last;
    let pair = r.wrap(line, FactorPair::new(u, v))?;
    Ok((pair, ids))
}

/// `iteration objective` per line, iteration 0 being the start.
pub fn write_trace(trace: &[f64]) -> String {
    let mut s = String::from("iteration\tobjective\n");
    for (i, j) in trace.iter().enumerate() {
        let _ = writeln!(s, "{i}\t{}", fmt9(*j));
    }
    s
}

/// Action maps of several scenes, one row per cell.
pub fn write_action_maps(maps: &[(&SceneGrid, &ActionMap)]) -> String {
    let mut s = String::new();
    if let Some((g, _)) = maps.first() {
        let _ = writeln!(s, "scene\tx\ty\t{}", g.vocabulary().names().join("\t"));
    }
    for (g, am) in maps {
        for (i, c) in g.cells().enumerate() {
            let vals: Vec<String> = am.values().row(i).iter().map(|&v| fmt9(v)).collect();
            let _ = writeln!(s, "{}\t{}\t{}\t{}", g.scene_id(), c.x, c.y, vals.join("\t"));
        }
    }
    s
}

/// Reads maps written by [`write_action_maps`], checking them against the
/// dataset's scenes; returns `(scene position, map)` in file order.
pub fn read_action_maps(text: &str, path: &str, dataset: &Dataset) -> Result<Vec<(usize, ActionMap)>> {
    let err = |line: usize, message: String| Error::Parse { path: path.to_string(), line, message };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty action map file".into()))?;
    let cols: Vec<&str> = header.split('\t').collect();
    let names = dataset.vocabulary().names();
    if cols.len() != 3 + names.len() || cols[..3] != ["scene", "x", "y"] || cols[3..].iter().zip(names).any(|(a, b)| a != b) {
        return Err(err(1, "header must be `scene x y` followed by the dataset's activities".into()));
    }
    let a = names.len();
    let mut out: Vec<(usize, Vec<f64>, usize)> = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        let toks: Vec<&str> = line.split('\t').collect();
        if toks.len() != 3 + a {
            return Err(err(n, format!("expected {} columns, found {}", 3 + a, toks.len())));
        }
        let scene = dataset
            .scene_index(toks[0])
            .ok_or_else(|| err(n, format!("unknown scene `{}`", toks[0])))?;
        if out.last().is_none_or(|(s, _, _)| *s != scene) {
            if out.iter().any(|(s, _, _)| *s == scene) {
                return Err(err(n, format!("rows of scene `{}` are not contiguous", toks[0])));
            }
            out.push((scene, Vec::new(), 0));
        }
        let entry = out.last_mut().expect("pushed above");
        let grid = &dataset.scenes[scene].grid;
        let expect = grid.cells().nth(entry.2).ok_or_else(|| err(n, format!("too many rows for scene `{}`", toks[0])))?;
        let parse_idx = |t: &str| t.parse::<usize>().map_err(|_| err(n, format!("bad coordinate `{t}`")));
        if (parse_idx(toks[1])?, parse_idx(toks[2])?) != (expect.x, expect.y) {
            return Err(err(n, format!("expected cell ({}, {})", expect.x, expect.y)));
        }
        for t in &toks[3..] {
            let v: f64 = t.parse().map_err(|_| err(n, format!("bad score `{t}`")))?;
            entry.1.push(v);
        }
        entry.2 += 1;
    }
    out.into_iter()
        .map(|(scene, values, rows)| {
            let grid = &dataset.scenes[scene].grid;
            if rows != grid.num_cells() {
                return Err(err(0, format!("scene `{}` has {rows} rows, expected {}", grid.scene_id(), grid.num_cells())));
            }
            let values = Array2::from_shape_vec((rows, a), values).expect("row lengths checked");
            Ok((scene, ActionMap::new(values)?))
        })
        .collect()
}

fn summary_cells(s: &Summary) -> String {
    s.as_array().iter().map(|&v| fmt9(v)).collect::<Vec<_>>().join("\t")
}

/// Per-scene summaries followed by their mean.
pub fn write_report(evals: &[SceneEvaluation], mean: &Summary) -> String {
    let mut s = format!("scene\timages\t{}\n", Summary::COLUMNS.join("\t"));
    for e in evals {
        let _ = writeln!(s, "{}\t{}\t{}", e.scene_id, e.images, summary_cells(&e.summary));
    }
    let images: usize = evals.iter().map(|e| e.images).sum();
    let _ = writeln!(s, "mean\t{images}\t{}", summary_cells(mean));
    s
}

pub fn write_activity_report(evals: &[SceneEvaluation], vocab: &ActivityVocabulary) -> String {
    let mut s = String::from("scene\tactivity\tgt_images\tmax_f1\tmean_f1\n");
    for e in evals {
        for (a, name) in vocab.names().iter().enumerate() {
            let _ = writeln!(
                s,
                "{}\t{name}\t{}\t{}\t{}",
                e.scene_id,
                e.gt_counts[a],
                fmt9(e.max_f1[a]),
                fmt9(e.mean_f1[a])
            );
        }
    }
    s
}

/// Human-readable four-column table.
pub fn format_summary_table(rows: &[(String, Summary)]) -> String {
    let mut s = format!("{:<10} {:>10} {:>10} {:>10} {:>10}\n", "", "W.Max F1", "W.Mean F1", "Max F1", "Mean F1");
    for (name, sum) in rows {
        let v = sum.as_array();
        let _ = writeln!(s, "{:<10} {:>10.4} {:>10.4} {:>10.4} {:>10.4}", name, v[0], v[1], v[2], v[3]);
    }
    s
}

pub fn write_grid_runs(report: &GridReport) -> String {
    let mut s = format!("variant\talpha\tlambda\tgamma\titerations\t{}\n", Summary::COLUMNS.join("\t"));
    for r in &report.runs {
        let head = format!("{}\t{}\t{}\t{}", r.variant, fmt9(r.alpha), fmt9(r.lambda), fmt9(r.gamma));
        match &r.outcome {
            Ok(o) => {
                let _ = writeln!(s, "{head}\t{}\t{}", o.iterations, summary_cells(&o.summary));
            }
            Err(e) => {
                let _ = writeln!(s, "{head}\tfailed\t{}", e.replace(['\t', '\n'], " "));
            }
        }
    }
    s
}

pub fn write_grid_summary(report: &GridReport) -> String {
    let mut s = String::from("variant\tcompleted\tfailed");
    for c in Summary::COLUMNS {
        let _ = write!(s, "\t{c}_max\t{c}_mean\t{c}_std");
    }
    s.push('\n');
    for v in &report.variants {
        let _ = write!(s, "{}\t{}\t{}", v.variant, v.completed, v.failed);
        for m in &v.metrics {
            let _ = write!(s, "\t{}\t{}\t{}", fmt9(m.max), fmt9(m.mean), fmt9(m.std));
        }
        s.push('\n');
    }
    s
}

pub fn write_transfer(report: &TransferReport) -> String {
    let mut s = format!("method\t{}\n", Summary::COLUMNS.join("\t"));
    for r in &report.rows {
        let _ = writeln!(s, "{}\t{}", r.method, summary_cells(&r.summary));
    }
    s
}

pub fn write_elapse(points: &[ElapsePoint]) -> String {
    let mut s = format!("fraction\tdemonstrations\t{}\n", Summary::COLUMNS.join("\t"));
    for p in points {
        let _ = writeln!(s, "{}\t{}\t{}", fmt9(p.fraction), p.demonstrations, summary_cells(&p.summary));
    }
    s
}

/// `k activity mean_discrepancy`; `all` rows carry the aggregate curve.
pub fn write_discrepancy(curve: &DiscrepancyCurve, vocab: &ActivityVocabulary) -> String {
    let mut s = String::from("k\tactivity\tmean_discrepancy\n");
    for k in 0..curve.k_max {
        let _ = writeln!(s, "{}\tall\t{}", k + 1, fmt9(curve.aggregate[k]));
        for (a, c) in curve.per_activity.iter().enumerate() {
            if let Some(c) = c {
                let _ = writeln!(s, "{}\t{}\t{}", k + 1, vocab.name(a).unwrap_or("?"), fmt9(c[k]));
            }
        }
    }
    s
}

/// Grey level of a normalized score.
pub fn grey_level(v: f64) -> u8 {
    (255.0 * v.clamp(0.0, 1.0)).round() as u8
}

/// Plain (ASCII) portable greymap; pixel `(x, y)` is cell `(x, y)`.
pub fn write_pgm(values: &[f64], width: usize, height: usize) -> String {
    let mut s = format!("P2\n{width} {height}\n255\n");
    for row in values.chunks(width).take(height) {
        let px: Vec<String> = row.iter().map(|&v| grey_level(v).to_string()).collect();
        let _ = writeln!(s, "{}", px.join(" "));
    }
    s
}
