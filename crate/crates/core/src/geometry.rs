//! No-slip patterns inside the unit periodic cell.
//!
//! All lengths are fractions of the cell period and every pattern is centered
//! at `(1/2, 1/2)`. Grids index cells as `i * n + j`, with `i` running along
//! direction 1 and `j` along direction 2; cell `(i, j)` has its center at
//! `((i + 1/2)/n, (j + 1/2)/n)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::wall_operator::TopCondition;

/// Point-in-set predicate on the unit cell, `(x1, x2) ∈ [0,1)²`.
pub type Indicator = Arc<dyn Fn(f64, f64) -> bool + Send + Sync>;

#[derive(Clone)]
pub struct CustomPattern {
    pub name: String,
    pub indicator: Indicator,
    /// Radius of a disk centered at `(1/2, 1/2)` contained in the pattern.
    /// Needed only by the Poincaré diagnostic.
    pub inscribed_radius: Option<f64>,
}

impl fmt::Debug for CustomPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPattern")
            .field("name", &self.name)
            .field("inscribed_radius", &self.inscribed_radius)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum PatternKind {
    Disk {
        radius: f64,
    },
    Square {
        side: f64,
    },
    Rectangle {
        len1: f64,
        len2: f64,
    },
    /// Stripe of width `width` across direction 2, invariant along direction 1.
    RibletAcross2 {
        width: f64,
    },
    /// Stripe of width `width` across direction 1, invariant along direction 2.
    RibletAcross1 {
        width: f64,
    },
    Custom(CustomPattern),
}

/// A validated no-slip pattern.
#[derive(Debug, Clone)]
pub struct Pattern {
    kind: PatternKind,
}

fn check_length(name: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::InvalidPattern(format!(
            "{name} must be a finite non-negative fraction of the period, got {value}"
        )));
    }
    Ok(())
}

fn check_inside(name: &str, extent: f64) -> Result<()> {
    if extent >= 1.0 {
        return Err(Error::InvalidPattern(format!(
            "{name} = {extent} touches the cell boundary; patches must lie strictly inside the cell"
        )));
    }
    Ok(())
}

impl Pattern {
    pub fn disk(radius: f64) -> Result<Self> {
        check_length("disk radius", radius)?;
        check_inside("disk diameter", 2.0 * radius)?;
        Ok(Self {
            kind: PatternKind::Disk { radius },
        })
    }

    pub fn square(side: f64) -> Result<Self> {
        check_length("square side", side)?;
        check_inside("square side", side)?;
        Ok(Self {
            kind: PatternKind::Square { side },
        })
    }

    pub fn rectangle(len1: f64, len2: f64) -> Result<Self> {
        check_length("rectangle length along direction 1", len1)?;
        check_length("rectangle length along direction 2", len2)?;
        check_inside("rectangle length along direction 1", len1)?;
        check_inside("rectangle length along direction 2", len2)?;
        Ok(Self {
            kind: PatternKind::Rectangle { len1, len2 },
        })
    }

    pub fn riblet_across2(width: f64) -> Result<Self> {
        Self::check_riblet(width)?;
        Ok(Self {
            kind: PatternKind::RibletAcross2 { width },
        })
    }

    pub fn riblet_across1(width: f64) -> Result<Self> {
        Self::check_riblet(width)?;
        Ok(Self {
            kind: PatternKind::RibletAcross1 { width },
        })
    }

    fn check_riblet(width: f64) -> Result<()> {
        if !(width.is_finite() && width > 0.0 && width < 1.0) {
            return Err(Error::InvalidPattern(format!(
                "riblet width must lie in (0, 1), got {width}"
            )));
        }
        Ok(())
    }

    pub fn custom(
        name: impl Into<String>,
        indicator: Indicator,
        inscribed_radius: Option<f64>,
    ) -> Result<Self> {
        if let Some(r) = inscribed_radius {
            if !(r.is_finite() && r > 0.0 && r < 0.5) {
                return Err(Error::InvalidPattern(format!(
                    "inscribed radius must lie in (0, 1/2), got {r}"
                )));
            }
        }
        Ok(Self {
            kind: PatternKind::Custom(CustomPattern {
                name: name.into(),
                indicator,
                inscribed_radius,
            }),
        })
    }

    pub fn kind(&self) -> &PatternKind {
        &self.kind
    }

    pub fn is_riblet(&self) -> bool {
        matches!(
            self.kind,
            PatternKind::RibletAcross1 { .. } | PatternKind::RibletAcross2 { .. }
        )
    }

    pub fn is_patch(&self) -> bool {
        !self.is_riblet()
    }

    /// Same shape with every length multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        match &self.kind {
            PatternKind::Disk { radius } => Self::disk(radius * factor),
            PatternKind::Square { side } => Self::square(side * factor),
            PatternKind::Rectangle { len1, len2 } => Self::rectangle(len1 * factor, len2 * factor),
            PatternKind::RibletAcross2 { width } => Self::riblet_across2(width * factor),
            PatternKind::RibletAcross1 { width } => Self::riblet_across1(width * factor),
            PatternKind::Custom(_) => Err(Error::Unsupported(
                "custom patterns cannot be rescaled".into(),
            )),
        }
    }

    /// Whether the point `(x1, x2)` of the unit cell lies in the open pattern.
    pub fn contains(&self, x1: f64, x2: f64) -> bool {
        let d1 = (x1 - 0.5).abs();
        let d2 = (x2 - 0.5).abs();
        match &self.kind {
            PatternKind::Disk { radius } => d1 * d1 + d2 * d2 < radius * radius,
            PatternKind::Square { side } => d1 < 0.5 * side && d2 < 0.5 * side,
            PatternKind::Rectangle { len1, len2 } => d1 < 0.5 * len1 && d2 < 0.5 * len2,
            PatternKind::RibletAcross2 { width } => d2 < 0.5 * width,
            PatternKind::RibletAcross1 { width } => d1 < 0.5 * width,
            PatternKind::Custom(c) => (c.indicator)(x1, x2),
        }
    }

    /// Radius of the largest centered disk contained in the pattern, for
    /// patch kinds. Riblets and custom patterns without a declared radius
    /// return `None`.
    pub fn inscribed_radius(&self) -> Option<f64> {
        match &self.kind {
            PatternKind::Disk { radius } => Some(*radius),
            PatternKind::Square { side } => Some(0.5 * side),
            PatternKind::Rectangle { len1, len2 } => Some(0.5 * len1.min(*len2)),
            PatternKind::RibletAcross1 { .. } | PatternKind::RibletAcross2 { .. } => None,
            PatternKind::Custom(c) => c.inscribed_radius,
        }
    }

    /// Analytic area fraction, or `None` for custom patterns.
    pub fn exact_area(&self) -> Option<f64> {
        match &self.kind {
            PatternKind::Disk { radius } => Some(PI * radius * radius),
            PatternKind::Square { side } => Some(side * side),
            PatternKind::Rectangle { len1, len2 } => Some(len1 * len2),
            PatternKind::RibletAcross2 { width } | PatternKind::RibletAcross1 { width } => {
                Some(*width)
            }
            PatternKind::Custom(_) => None,
        }
    }

    /// Short identifier, also accepted back by [`Pattern::from_str`] for the
    /// analytic kinds.
    pub fn id(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            PatternKind::Disk { radius } => write!(f, "disk:{radius}"),
            PatternKind::Square { side } => write!(f, "square:{side}"),
            PatternKind::Rectangle { len1, len2 } => write!(f, "rect:{len1},{len2}"),
            PatternKind::RibletAcross2 { width } => write!(f, "riblet2:{width}"),
            PatternKind::RibletAcross1 { width } => write!(f, "riblet1:{width}"),
            PatternKind::Custom(c) => write!(f, "custom:{}", c.name),
        }
    }
}

/// Parses `disk:ρ`, `square:s`, `rect:L1,L2`, `riblet1:w` and `riblet2:w`.
impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, params) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidPattern(format!("expected kind:params, got '{s}'")))?;
        let values = params
            .split(',')
            .map(|p| {
                p.trim().parse::<f64>().map_err(|_| {
                    Error::InvalidPattern(format!("'{p}' is not a decimal fraction in '{s}'"))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let want = |count: usize| -> Result<()> {
            if values.len() != count {
                return Err(Error::InvalidPattern(format!(
                    "pattern '{kind}' takes {count} parameter(s), got {}",
                    values.len()
                )));
            }
            Ok(())
        };
        match kind.trim() {
            "disk" => {
                want(1)?;
                Self::disk(values[0])
            }
            "square" => {
                want(1)?;
                Self::square(values[0])
            }
            "rect" => {
                want(2)?;
                Self::rectangle(values[0], values[1])
            }
            "riblet1" => {
                want(1)?;
                Self::riblet_across1(values[0])
            }
            "riblet2" => {
                want(1)?;
                Self::riblet_across2(values[0])
            }
            other => Err(Error::InvalidPattern(format!(
                "unknown pattern kind '{other}' (expected disk|square|rect|riblet1|riblet2)"
            ))),
        }
    }
}

/// Discretization of the unit cell; `n` cells per side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitCellGrid {
    pub n: usize,
    pub top: TopCondition,
}

impl UnitCellGrid {
    pub fn new(n: usize, top: TopCondition) -> Result<Self> {
        check_grid_size(n)?;
        top.validate()?;
        Ok(Self { n, top })
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.n as f64
    }
}

pub fn check_grid_size(n: usize) -> Result<()> {
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::InvalidGrid(format!(
            "cells per side must be a power of two and at least 8, got {n}"
        )));
    }
    Ok(())
}

/// Boolean no-slip mask on an `n × n` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternMask {
    n: usize,
    solid: Vec<bool>,
    pub solid_fraction_raster: f64,
    pub solid_fraction_exact: Option<f64>,
}

impl PatternMask {
    /// Builds a mask from raw cell flags (`i * n + j` layout).
    pub fn from_cells(n: usize, solid: Vec<bool>) -> Result<Self> {
        if solid.len() != n * n {
            return Err(Error::InvalidGrid(format!(
                "mask has {} cells, expected {}",
                solid.len(),
                n * n
            )));
        }
        let count = solid.iter().filter(|&&s| s).count();
        Ok(Self {
            n,
            solid,
            solid_fraction_raster: count as f64 / (n * n) as f64,
            solid_fraction_exact: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cells(&self) -> &[bool] {
        &self.solid
    }

    pub fn is_solid(&self, i: usize, j: usize) -> bool {
        self.solid[i * self.n + j]
    }

    pub fn solid_count(&self) -> usize {
        self.solid.iter().filter(|&&s| s).count()
    }

    pub fn fluid_count(&self) -> usize {
        self.solid.len() - self.solid_count()
    }

    pub fn solid_indices(&self) -> Vec<usize> {
        self.solid
            .iter()
            .enumerate()
            .filter_map(|(idx, &s)| s.then_some(idx))
            .collect()
    }

    /// Smallest number of grid lines spanned by the solid set in either
    /// direction.
    pub fn cells_across(&self) -> usize {
        let n = self.n;
        let mut rows = vec![false; n];
        let mut cols = vec![false; n];
        for i in 0..n {
            for j in 0..n {
                if self.solid[i * n + j] {
                    rows[i] = true;
                    cols[j] = true;
                }
            }
        }
        let r = rows.iter().filter(|&&x| x).count();
        let c = cols.iter().filter(|&&x| x).count();
        r.min(c)
    }
}

fn validate_for_raster(pattern: &Pattern) -> Result<()> {
    // Constructors enforce the invariants; re-check so hand-built kinds
    // cannot slip through.
    match pattern.kind() {
        PatternKind::Disk { radius } => check_inside("disk diameter", 2.0 * radius),
        PatternKind::Square { side } => check_inside("square side", *side),
        PatternKind::Rectangle { len1, len2 } => {
            check_inside("rectangle length along direction 1", *len1)?;
            check_inside("rectangle length along direction 2", *len2)
        }
        PatternKind::RibletAcross1 { width } | PatternKind::RibletAcross2 { width } => {
            Pattern::check_riblet(*width)
        }
        PatternKind::Custom(_) => Ok(()),
    }
}

/// Center-point rasterization: a cell is solid iff its center lies in the
/// pattern.
pub fn rasterize(pattern: &Pattern, grid: &UnitCellGrid) -> Result<PatternMask> {
    rasterize_supersampled(pattern, grid, 1)
}

/// Rasterization with `k × k` sub-samples per cell; a cell is solid when a
/// strict majority of its sub-samples lies in the pattern. `k = 1` is plain
/// center-point rasterization.
pub fn rasterize_supersampled(
    pattern: &Pattern,
    grid: &UnitCellGrid,
    k: usize,
) -> Result<PatternMask> {
    check_grid_size(grid.n)?;
    validate_for_raster(pattern)?;
    if k == 0 {
        return Err(Error::InvalidArgument(
            "supersampling factor must be >= 1".into(),
        ));
    }
    let n = grid.n;
    let h = 1.0 / n as f64;
    let offsets: Vec<f64> = (0..k).map(|s| (s as f64 + 0.5) / k as f64).collect();
    let mut solid = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            let inside = if k == 1 {
                usize::from(pattern.contains(grid.center(i), grid.center(j)))
            } else {
                let mut count = 0;
                for &a in &offsets {
                    for &b in &offsets {
                        if pattern.contains((i as f64 + a) * h, (j as f64 + b) * h) {
                            count += 1;
                        }
                    }
                }
                count
            };
            solid[i * n + j] = 2 * inside > k * k;
        }
    }
    let mut mask = PatternMask::from_cells(n, solid)?;
    mask.solid_fraction_exact = pattern.exact_area();
    Ok(mask)
}

/// Centered stripe of width `width` on a periodic 1-D grid of `n` cells.
pub fn rasterize_stripe(width: f64, n: usize) -> Result<Vec<bool>> {
    Pattern::check_riblet(width)?;
    if n < 8 {
        return Err(Error::InvalidGrid(format!(
            "1-D grid needs at least 8 cells, got {n}"
        )));
    }
    Ok((0..n)
        .map(|i| (((i as f64 + 0.5) / n as f64) - 0.5).abs() < 0.5 * width)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolidFraction {
    pub value: f64,
    /// Zero for analytic kinds.
    pub error_bound: f64,
    pub exact: bool,
}

/// Area fraction of the pattern. Custom patterns get a midpoint-rule
/// estimate with an error bound from two refinement levels.
pub fn solid_fraction(pattern: &Pattern) -> SolidFraction {
    if let Some(value) = pattern.exact_area() {
        return SolidFraction {
            value,
            error_bound: 0.0,
            exact: true,
        };
    }
    let estimate = |n: usize| -> f64 {
        let h = 1.0 / n as f64;
        let mut count = 0usize;
        for i in 0..n {
            for j in 0..n {
                if pattern.contains((i as f64 + 0.5) * h, (j as f64 + 0.5) * h) {
                    count += 1;
                }
            }
        }
        count as f64 * h * h
    };
    let coarse = estimate(512);
    let fine = estimate(1024);
    SolidFraction {
        value: fine,
        error_bound: 2.0 * (fine - coarse).abs() + 1.0 / (1024.0 * 1024.0),
        exact: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SymmetryFlags {
    /// Invariant under `x1 → 1 − x1`.
    pub reflect_1: bool,
    /// Invariant under `x2 → 1 − x2`.
    pub reflect_2: bool,
    /// Invariant under rotation by π/2 about the cell center.
    pub rotate_90: bool,
}

impl SymmetryFlags {
    pub fn any_reflection(&self) -> bool {
        self.reflect_1 || self.reflect_2
    }
}

pub fn symmetry_flags(pattern: &Pattern) -> SymmetryFlags {
    match pattern.kind() {
        PatternKind::Disk { .. } | PatternKind::Square { .. } => SymmetryFlags {
            reflect_1: true,
            reflect_2: true,
            rotate_90: true,
        },
        PatternKind::Rectangle { len1, len2 } => SymmetryFlags {
            reflect_1: true,
            reflect_2: true,
            rotate_90: len1 == len2,
        },
        PatternKind::RibletAcross1 { .. } | PatternKind::RibletAcross2 { .. } => SymmetryFlags {
            reflect_1: true,
            reflect_2: true,
            rotate_90: false,
        },
        PatternKind::Custom(_) => SymmetryFlags {
            reflect_1: false,
            reflect_2: false,
            rotate_90: false,
        },
    }
}
