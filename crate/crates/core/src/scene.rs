//! Discretized floor grids, activity demonstrations and the global row
//! index that stacks several scenes into one location-by-activity matrix.

use std::collections::HashMap;
use std::ops::Range;

use crate::error::{Error, Result};

/// Default edge length of a grid cell in meters.
pub const DEFAULT_CELL_SIZE_M: f64 = 0.25;

/// Integer cell coordinates; `x` is the column, `y` the row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }

    /// Continuous coordinates of the cell center in grid units.
    pub fn center(&self) -> [f64; 2] {
        [self.x as f64 + 0.5, self.y as f64 + 0.5]
    }

    pub fn distance(&self, other: &Cell) -> f64 {
        let dx = self.x as f64 - other.x as f64;
        let dy = self.y as f64 - other.y as f64;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Ordered activity labels; column `a` of an action map refers to `names[a]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActivityVocabulary {
    names: Vec<String>,
}

impl ActivityVocabulary {
    pub const DEFAULT_NAMES: [&'static str; 6] =
        ["sit", "type", "open-door", "read", "write-whiteboard", "wash"];

    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::InvalidVocabulary("no activities".into()));
        }
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() || name.chars().any(char::is_whitespace) {
                return Err(Error::InvalidVocabulary(format!(
                    "activity name {name:?} must be non-empty without whitespace"
                )));
            }
            if names[..i].contains(name) {
                return Err(Error::InvalidVocabulary(format!("duplicate activity {name:?}")));
            }
        }
        Ok(ActivityVocabulary { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

impl Default for ActivityVocabulary {
    fn default() -> Self {
        ActivityVocabulary::new(Self::DEFAULT_NAMES).expect("default vocabulary is valid")
    }
}

/// One localized activity observation. `value` is 1.0 for labelled
/// demonstrations and the detector confidence for detected ones.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Demonstration {
    pub cell: Cell,
    pub activity: usize,
    pub value: f64,
}

impl Demonstration {
    pub fn labelled(cell: Cell, activity: usize) -> Self {
        Demonstration {
            cell,
            activity,
            value: 1.0,
        }
    }
}

/// Sparsity statistics of a scene.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SceneStats {
    /// Fraction of cells explored.
    pub r_e: f64,
    /// Fraction of cells carrying at least one demonstration.
    pub r_a: f64,
    pub demo_count: usize,
}

/// A discretized floor with its exploration mask, ground-truth affordance
/// labels and registered demonstrations.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneGrid {
    scene_id: String,
    cell_size_m: f64,
    width: usize,
    height: usize,
    vocabulary: ActivityVocabulary,
    explored: Vec<bool>,
    gt_labels: Vec<Vec<usize>>,
    demos: Vec<Demonstration>,
    demo_slot: HashMap<(Cell, usize), usize>,
    demos_per_cell: Vec<u32>,
    explored_count: usize,
    action_cells: usize,
}

impl SceneGrid {
    /// Empty grid: nothing explored, no labels, no demonstrations.
    pub fn new(
        scene_id: impl Into<String>,
        width: usize,
        height: usize,
        cell_size_m: f64,
        vocabulary: ActivityVocabulary,
    ) -> Result<Self> {
        let scene_id = scene_id.into();
        if width == 0 || height == 0 || !(cell_size_m > 0.0) || !cell_size_m.is_finite() {
            return Err(Error::InvalidDimensions {
                width,
                height,
                cell_size_m,
            });
        }
        if scene_id.is_empty() || scene_id.chars().any(char::is_whitespace) {
            return Err(Error::InvalidParameter(format!(
                "scene id {scene_id:?} must be non-empty without whitespace"
            )));
        }
        let n = width * height;
        Ok(SceneGrid {
            scene_id,
            cell_size_m,
            width,
            height,
            vocabulary,
            explored: vec![false; n],
            gt_labels: vec![Vec::new(); n],
            demos: Vec::new(),
            demo_slot: HashMap::new(),
            demos_per_cell: vec![0; n],
            explored_count: 0,
            action_cells: 0,
        })
    }

    /// Grid with ground-truth labels given as `(cell, activity)` pairs.
    pub fn create(
        scene_id: impl Into<String>,
        width: usize,
        height: usize,
        cell_size_m: f64,
        vocabulary: ActivityVocabulary,
        labels: impl IntoIterator<Item = (Cell, usize)>,
    ) -> Result<Self> {
        let mut grid = SceneGrid::new(scene_id, width, height, cell_size_m, vocabulary)?;
        for (cell, activity) in labels {
            grid.add_label(cell, activity)?;
        }
        Ok(grid)
    }

    pub fn scene_id(&self) -> &str {
        &self.scene_id
    }

    pub fn cell_size_m(&self) -> f64 {
        self.cell_size_m
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn vocabulary(&self) -> &ActivityVocabulary {
        &self.vocabulary
    }

    pub fn num_activities(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height
    }

    /// Row-major position of `cell` within this scene.
    pub fn linear(&self, cell: Cell) -> usize {
        cell.y * self.width + cell.x
    }

    pub fn cell_at(&self, linear: usize) -> Cell {
        Cell::new(linear % self.width, linear / self.width)
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.num_cells()).map(move |i| self.cell_at(i))
    }

    fn check_cell(&self, cell: Cell) -> Result<()> {
        if self.contains(cell) {
            Ok(())
        } else {
            Err(Error::CellOutOfBounds {
                x: cell.x as i64,
                y: cell.y as i64,
                width: self.width,
                height: self.height,
            })
        }
    }

    fn check_activity(&self, activity: usize) -> Result<()> {
        if activity < self.num_activities() {
            Ok(())
        } else {
            Err(Error::ActivityOutOfRange {
                index: activity,
                len: self.num_activities(),
            })
        }
    }

    pub fn add_label(&mut self, cell: Cell, activity: usize) -> Result<()> {
        self.check_cell(cell)?;
        self.check_activity(activity)?;
        let i = self.linear(cell);
        let labels = &mut self.gt_labels[i];
        if let Err(pos) = labels.binary_search(&activity) {
            labels.insert(pos, activity);
        }
        Ok(())
    }

    /// Sorted ground-truth activities at `cell`.
    pub fn labels(&self, cell: Cell) -> &[usize] {
        &self.gt_labels[self.linear(cell)]
    }

    pub fn has_label(&self, cell: Cell, activity: usize) -> bool {
        self.labels(cell).binary_search(&activity).is_ok()
    }

    pub fn labelled_cell_count(&self) -> usize {
        self.gt_labels.iter().filter(|l| !l.is_empty()).count()
    }

    pub fn is_explored(&self, cell: Cell) -> bool {
        self.explored[self.linear(cell)]
    }

    pub fn explored_mask(&self) -> &[bool] {
        &self.explored
    }

    pub fn mark_explored(&mut self, cell: Cell) -> Result<()> {
        self.check_cell(cell)?;
        let i = self.linear(cell);
        if !self.explored[i] {
            self.explored[i] = true;
            self.explored_count += 1;
        }
        Ok(())
    }

    /// Registers a demonstration. The cell becomes explored; a repeated
    /// `(cell, activity)` pair keeps the larger value.
    pub fn add_demonstration(&mut self, demo: Demonstration) -> Result<()> {
        self.check_cell(demo.cell)?;
        self.check_activity(demo.activity)?;
        if !(demo.value >= 0.0) || !demo.value.is_finite() {
            return Err(Error::invalid(demo.value, "demonstration value must be finite and >= 0"));
        }
        self.mark_explored(demo.cell)?;
        match self.demo_slot.get(&(demo.cell, demo.activity)) {
            Some(&slot) => {
                let stored = &mut self.demos[slot];
                stored.value = stored.value.max(demo.value);
            }
            None => {
                self.demo_slot.insert((demo.cell, demo.activity), self.demos.len());
                self.demos.push(demo);
                let i = self.linear(demo.cell);
                if self.demos_per_cell[i] == 0 {
                    self.action_cells += 1;
                }
                self.demos_per_cell[i] += 1;
            }
        }
        Ok(())
    }

    /// Demonstrations in registration order, one per `(cell, activity)`.
    pub fn demonstrations(&self) -> &[Demonstration] {
        &self.demos
    }

    pub fn demonstration_value(&self, cell: Cell, activity: usize) -> Option<f64> {
        self.demo_slot
            .get(&(cell, activity))
            .map(|&slot| self.demos[slot].value)
    }

    pub fn has_demonstration_at(&self, cell: Cell) -> bool {
        self.demos_per_cell[self.linear(cell)] > 0
    }

    pub fn stats(&self) -> SceneStats {
        let n = self.num_cells() as f64;
        SceneStats {
            r_e: self.explored_count as f64 / n,
            r_a: self.action_cells as f64 / n,
            demo_count: self.demos.len(),
        }
    }

    /// Statistics recomputed from the mask and demonstration list.
    pub fn recompute_stats(&self) -> SceneStats {
        let n = self.num_cells() as f64;
        let explored = self.explored.iter().filter(|&&e| e).count();
        let mut with_action = vec![false; self.num_cells()];
        for d in &self.demos {
            with_action[self.linear(d.cell)] = true;
        }
        let action = with_action.iter().filter(|&&a| a).count();
        SceneStats {
            r_e: explored as f64 / n,
            r_a: action as f64 / n,
            demo_count: self.demos.len(),
        }
    }

    /// Copy of this scene that keeps only `keep` out of its demonstrations.
    ///
    /// Cells whose demonstrations were all dropped revert to unexplored, so
    /// they are not mistaken for observed-empty locations; every other
    /// explored cell stays explored.
    pub fn restrict_demonstrations(&self, keep: &[Demonstration]) -> Result<SceneGrid> {
        let mut out = SceneGrid::new(
            self.scene_id.clone(),
            self.width,
            self.height,
            self.cell_size_m,
            self.vocabulary.clone(),
        )?;
        out.gt_labels = self.gt_labels.clone();
        for cell in self.cells() {
            if self.is_explored(cell) && !self.has_demonstration_at(cell) {
                out.mark_explored(cell)?;
            }
        }
        for d in keep {
            if self.demonstration_value(d.cell, d.activity).is_none() {
                return Err(Error::InvalidParameter(format!(
                    "demonstration {:?} is not registered in scene {}",
                    d, self.scene_id
                )));
            }
            out.add_demonstration(*d)?;
        }
        Ok(out)
    }

    /// Copy with every demonstration removed but the exploration mask kept.
    pub fn without_demonstrations(&self) -> SceneGrid {
        let mut out = self.clone();
        out.demos.clear();
        out.demo_slot.clear();
        out.demos_per_cell.iter_mut().for_each(|c| *c = 0);
        out.action_cells = 0;
        out
    }
}

/// Bijection between global matrix rows and `(scene, cell)` pairs.
///
/// Scenes appear in the order given; cells within a scene are row-major
/// (`y` outer, `x` inner). Every cell of every scene owns a row, explored or
/// not.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalIndex {
    scene_ids: Vec<String>,
    widths: Vec<usize>,
    offsets: Vec<usize>,
    total: usize,
}

impl GlobalIndex {
    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn num_scenes(&self) -> usize {
        self.scene_ids.len()
    }

    pub fn scene_ids(&self) -> &[String] {
        &self.scene_ids
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn scene_rows(&self, scene: usize) -> Range<usize> {
        let end = self
            .offsets
            .get(scene + 1)
            .copied()
            .unwrap_or(self.total);
        self.offsets[scene]..end
    }

    pub fn row(&self, scene: usize, cell: Cell) -> Option<usize> {
        let rows = self.scene_rows(scene);
        let width = self.widths[scene];
        if cell.x >= width {
            return None;
        }
        let row = rows.start + cell.y * width + cell.x;
        (row < rows.end).then_some(row)
    }

    pub fn locate(&self, row: usize) -> Option<(usize, Cell)> {
        if row >= self.total {
            return None;
        }
        let scene = self.offsets.partition_point(|&o| o <= row) - 1;
        let local = row - self.offsets[scene];
        let width = self.widths[scene];
        Some((scene, Cell::new(local % width, local / width)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Cell)> + '_ {
        (0..self.total).map(move |r| self.locate(r).expect("row in range"))
    }
}

/// Stacks scenes into one global row index.
pub fn stack_scenes<'a>(scenes: impl IntoIterator<Item = &'a SceneGrid>) -> Result<GlobalIndex> {
    let mut scene_ids = Vec::new();
    let mut widths = Vec::new();
    let mut offsets = Vec::new();
    let mut total = 0;
    let mut vocabulary: Option<&ActivityVocabulary> = None;
    for scene in scenes {
        match vocabulary {
            None => vocabulary = Some(scene.vocabulary()),
            Some(v) if v != scene.vocabulary() => {
                return Err(Error::VocabularyMismatch {
                    first: v.names().join(","),
                    other: scene.vocabulary().names().join(","),
                })
            }
            Some(_) => {}
        }
        scene_ids.push(scene.scene_id().to_string());
        widths.push(scene.width());
        offsets.push(total);
        total += scene.num_cells();
    }
    if scene_ids.is_empty() {
        return Err(Error::Empty("no scenes to stack"));
    }
    Ok(GlobalIndex {
        scene_ids,
        widths,
        offsets,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(w: usize, h: usize) -> SceneGrid {
        SceneGrid::new("s", w, h, DEFAULT_CELL_SIZE_M, ActivityVocabulary::default()).unwrap()
    }

    #[test]
    fn default_vocabulary_has_six_activities() {
        let v = ActivityVocabulary::default();
        assert_eq!(v.len(), 6);
        assert_eq!(v.index_of("wash"), Some(5));
        assert!(ActivityVocabulary::new(["a", "a"]).is_err());
        assert!(ActivityVocabulary::new(Vec::<String>::new()).is_err());
    }

    #[test]
    fn empty_grid() {
        let g = grid(4, 4);
        assert_eq!(g.num_cells(), 16);
        let s = g.stats();
        assert_eq!(s.r_a, 0.0);
        assert_eq!(s.r_e, 0.0);
        assert_eq!(s.demo_count, 0);
    }

    #[test]
    fn counts_labelled_cells() {
        let labels = [(Cell::new(0, 0), 0), (Cell::new(1, 2), 3), (Cell::new(3, 3), 5), (Cell::new(0, 0), 1)];
        let g = SceneGrid::create("s", 4, 4, 0.25, ActivityVocabulary::default(), labels).unwrap();
        assert_eq!(g.labelled_cell_count(), 3);
        assert_eq!(g.labels(Cell::new(0, 0)), &[0, 1]);
    }

    #[test]
    fn rejects_bad_dimensions_and_labels() {
        assert!(SceneGrid::new("s", 0, 3, 0.25, ActivityVocabulary::default()).is_err());
        assert!(SceneGrid::new("s", 3, 3, 0.0, ActivityVocabulary::default()).is_err());
        let mut g = grid(2, 2);
        assert!(matches!(
            g.add_label(Cell::new(0, 0), 6),
            Err(Error::ActivityOutOfRange { index: 6, len: 6 })
        ));
        assert!(g.add_label(Cell::new(2, 0), 0).is_err());
    }

    #[test]
    fn demonstration_marks_cell_explored() {
        let mut g = grid(5, 5);
        g.add_demonstration(Demonstration::labelled(Cell::new(2, 3), 0)).unwrap();
        assert_eq!(g.stats().demo_count, 1);
        assert!(g.is_explored(Cell::new(2, 3)));
    }

    #[test]
    fn duplicate_demonstration_keeps_maximum() {
        let mut g = grid(5, 5);
        let c = Cell::new(1, 1);
        for value in [0.4, 0.9, 0.5] {
            g.add_demonstration(Demonstration { cell: c, activity: 2, value }).unwrap();
        }
        assert_eq!(g.demonstrations().len(), 1);
        assert_eq!(g.demonstration_value(c, 2), Some(0.9));
    }

    #[test]
    fn rejects_bad_demonstrations() {
        let mut g = grid(3, 3);
        let out = Demonstration::labelled(Cell::new(3, 0), 0);
        assert!(matches!(g.add_demonstration(out), Err(Error::CellOutOfBounds { .. })));
        let neg = Demonstration { cell: Cell::new(0, 0), activity: 0, value: -0.1 };
        assert!(matches!(g.add_demonstration(neg), Err(Error::InvalidValue { .. })));
        assert_eq!(g.stats().r_e, 0.0);
    }

    #[test]
    fn incremental_stats_match_recomputed() {
        let mut g = grid(6, 4);
        g.mark_explored(Cell::new(0, 0)).unwrap();
        g.mark_explored(Cell::new(0, 0)).unwrap();
        for (x, y, a) in [(1, 1, 0), (1, 1, 1), (2, 3, 4), (5, 0, 5), (2, 3, 4)] {
            g.add_demonstration(Demonstration::labelled(Cell::new(x, y), a)).unwrap();
        }
        assert_eq!(g.stats(), g.recompute_stats());
        let s = g.stats();
        assert_eq!(s.demo_count, 4);
        assert_eq!(s.r_a, 3.0 / 24.0);
        assert_eq!(s.r_e, 4.0 / 24.0);
    }

    #[test]
    fn restricting_demonstrations_unexplores_dropped_cells() {
        let mut g = grid(4, 1);
        g.mark_explored(Cell::new(3, 0)).unwrap();
        let a = Demonstration::labelled(Cell::new(0, 0), 0);
        let b = Demonstration::labelled(Cell::new(1, 0), 1);
        g.add_demonstration(a).unwrap();
        g.add_demonstration(b).unwrap();
        let r = g.restrict_demonstrations(&[b]).unwrap();
        assert!(!r.is_explored(Cell::new(0, 0)));
        assert!(r.is_explored(Cell::new(1, 0)));
        assert!(r.is_explored(Cell::new(3, 0)));
        assert_eq!(r.stats(), r.recompute_stats());
        assert!(g.restrict_demonstrations(&[Demonstration::labelled(Cell::new(2, 0), 0)]).is_err());
    }

    #[test]
    fn stacking_single_scene_is_row_major() {
        let g = grid(2, 2);
        let idx = stack_scenes([&g]).unwrap();
        assert_eq!(idx.len(), 4);
        let rows: Vec<(usize, usize)> = idx.iter().map(|(_, c)| (c.y, c.x)).collect();
        assert_eq!(rows, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn stacking_two_scenes_offsets() {
        let a = grid(2, 2);
        let b = SceneGrid::new("t", 3, 2, 0.25, ActivityVocabulary::default()).unwrap();
        let idx = stack_scenes([&a, &b]).unwrap();
        assert_eq!(idx.offsets(), &[0, 4]);
        assert_eq!(idx.len(), 10);
        assert_eq!(idx.scene_rows(1), 4..10);
        assert_eq!(idx.row(1, Cell::new(2, 1)), Some(9));
        assert_eq!(idx.row(1, Cell::new(3, 0)), None);
    }

    #[test]
    fn global_index_round_trip_is_identity() {
        let scenes = [grid(3, 5), grid(1, 1), grid(7, 2)];
        let idx = stack_scenes(scenes.iter()).unwrap();
        assert_eq!(idx.len(), 15 + 1 + 14);
        for row in 0..idx.len() {
            let (s, c) = idx.locate(row).unwrap();
            assert!(scenes[s].contains(c));
            assert_eq!(idx.row(s, c), Some(row));
        }
        assert_eq!(idx.locate(idx.len()), None);
    }

    #[test]
    fn stacking_rejects_vocabulary_mismatch() {
        let a = grid(2, 2);
        let b = SceneGrid::new("t", 2, 2, 0.25, ActivityVocabulary::new(["sit", "wash"]).unwrap()).unwrap();
        assert!(matches!(stack_scenes([&a, &b]), Err(Error::VocabularyMismatch { .. })));
    }
}
