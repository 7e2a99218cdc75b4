//! From cell solutions to homogenized statements: pattern sweeps, the
//! affine `1/√φ` fit for patches, regime classification, the isolated
//! pattern drag matrix and the rectangle anisotropy study.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::cell_solver::{
    fraction_matched_slip_length, fraction_matched_slip_matrix, refine_and_extrapolate, richardson,
    DirectionalSlip, SlipMatrix, SolverOptions,
};
use crate::error::{Error, Result};
use crate::geometry::{rasterize, Pattern, PatternKind, UnitCellGrid};
use crate::krylov::{conjugate_gradient, KrylovOptions, LinearOperator};
use crate::riblet::{extrapolate_riblet, solve_riblet_1d, Orientation, RibletCase};
use crate::wall_operator::{ApplyWorkspace, BoundaryField, TopCondition, WallOperator};

/// One-parameter pattern families indexed by solid fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternFamily {
    Disk,
    Square,
    /// Rectangles with `len1 / len2 = aspect`.
    Rectangle {
        aspect: f64,
    },
    /// Stripes along direction 1, so `V₁₁` is the parallel slip.
    Riblet,
}

impl PatternFamily {
    pub fn is_riblet(&self) -> bool {
        matches!(self, PatternFamily::Riblet)
    }

    pub fn pattern(&self, phi: f64) -> Result<Pattern> {
        if !(phi > 0.0 && phi < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "solid fraction must lie in (0, 1), got {phi}"
            )));
        }
        match *self {
            PatternFamily::Disk => Pattern::disk((phi / PI).sqrt()),
            PatternFamily::Square => Pattern::square(phi.sqrt()),
            PatternFamily::Rectangle { aspect } => {
                if !(aspect > 0.0 && aspect.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "aspect must be positive, got {aspect}"
                    )));
                }
                Pattern::rectangle((phi * aspect).sqrt(), (phi / aspect).sqrt())
            }
            PatternFamily::Riblet => Pattern::riblet_across2(phi),
        }
    }
}

impl fmt::Display for PatternFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternFamily::Disk => f.write_str("disk"),
            PatternFamily::Square => f.write_str("square"),
            PatternFamily::Rectangle { aspect } => write!(f, "rect:{aspect}"),
            PatternFamily::Riblet => f.write_str("riblet"),
        }
    }
}

impl FromStr for PatternFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "disk" => return Ok(PatternFamily::Disk),
            "square" => return Ok(PatternFamily::Square),
            "riblet" => return Ok(PatternFamily::Riblet),
            _ => {}
        }
        if let Some(a) = s.strip_prefix("rect:") {
            let aspect = a
                .parse()
                .map_err(|_| Error::InvalidPattern(format!("bad rectangle aspect '{a}'")))?;
            return Ok(PatternFamily::Rectangle { aspect });
        }
        Err(Error::InvalidPattern(format!(
            "unknown pattern family '{s}' (expected disk, square, riblet or rect:ASPECT)"
        )))
    }
}

/// One row of a sweep; failed rows keep their error and the sweep goes on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub solid_fraction: f64,
    pub matrix: Option<SlipMatrix>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn v11(&self) -> Option<f64> {
        self.matrix.as_ref().map(|m| m.v[0][0])
    }
}

/// Slip matrix for every fraction: fraction-matched at a single `n`, or
/// extrapolated when three or more grid sizes are given.
pub fn sweep(
    family: PatternFamily,
    phis: &[f64],
    top: TopCondition,
    ns: &[usize],
    options: SolverOptions,
) -> Vec<SweepRow> {
    phis.par_iter()
        .map(|&phi| {
            let result = family
                .pattern(phi)
                .and_then(|p| solve_levels(&p, top, ns, options));
            match result {
                Ok(m) => SweepRow {
                    solid_fraction: phi,
                    matrix: Some(m),
                    error: None,
                },
                Err(e) => SweepRow {
                    solid_fraction: phi,
                    matrix: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

fn solve_levels(
    pattern: &Pattern,
    top: TopCondition,
    ns: &[usize],
    options: SolverOptions,
) -> Result<SlipMatrix> {
    match ns {
        [] => Err(Error::InvalidArgument("no grid size given".into())),
        [n] => fraction_matched_slip_matrix(pattern, &UnitCellGrid::new(*n, top)?, options),
        [_, _] => Err(Error::InvalidArgument(
            "extrapolation needs at least 3 grid sizes".into(),
        )),
        _ => Ok(refine_and_extrapolate(pattern, ns, top, options)?.limit),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    /// `V₁₁ ≈ α/√φ + β`.
    pub alpha: f64,
    pub beta: f64,
    /// Largest absolute deviation from the fitted line.
    pub max_residual: f64,
    pub rms_residual: f64,
    pub data_range: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub samples: usize,
    pub family: String,
}

impl ScalingFit {
    /// `max_residual / data_range`.
    pub fn relative_residual(&self) -> f64 {
        self.max_residual / self.data_range
    }

    pub fn predict(&self, phi: f64) -> f64 {
        self.alpha / phi.sqrt() + self.beta
    }
}

pub const MIN_FIT_SAMPLES: usize = 5;

/// Unweighted least squares of `V₁₁` against `1/√φ`.
pub fn fit_patch_scaling(family: PatternFamily, rows: &[(f64, f64)]) -> Result<ScalingFit> {
    if family.is_riblet() {
        return Err(Error::Unsupported(
            "riblet slip grows like ln(1/φ), not like 1/√φ; fit rejected".into(),
        ));
    }
    if rows.len() < MIN_FIT_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "scaling fit needs at least {MIN_FIT_SAMPLES} rows, got {}",
            rows.len()
        )));
    }
    if rows
        .iter()
        .any(|&(phi, v)| !(phi > 0.0 && phi < 1.0) || !v.is_finite())
    {
        return Err(Error::InvalidArgument(
            "fit rows need 0 < φ < 1 and finite V".into(),
        ));
    }
    let xs: Vec<f64> = rows.iter().map(|&(phi, _)| 1.0 / phi.sqrt()).collect();
    let ys: Vec<f64> = rows.iter().map(|&(_, v)| v).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidArgument(
            "fit needs at least two distinct fractions".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let alpha = sxy / sxx;
    let beta = my - alpha * mx;
    let res: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - (alpha * x + beta))
        .collect();
    let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(ScalingFit {
        alpha,
        beta,
        max_residual: res.iter().map(|r| r.abs()).fold(0.0, f64::max),
        rms_residual: (res.iter().map(|r| r * r).sum::<f64>() / m).sqrt(),
        data_range: (hi - lo).max(f64::MIN_POSITIVE),
        phi_min: rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min),
        phi_max: rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max),
        samples: rows.len(),
        family: family.to_string(),
    })
}

/// Convenience: fit the successful rows of a sweep.
pub fn fit_sweep(family: PatternFamily, rows: &[SweepRow]) -> Result<ScalingFit> {
    let data: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.v11().map(|v| (r.solid_fraction, v)))
        .collect();
    fit_patch_scaling(family, &data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternClass {
    Patch,
    Riblet,
}

/// Size law of the no-slip zone as the period `ε → 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum AreaLaw {
    /// `a_ε = c·ε^p`.
    PowerLaw { c: f64, p: f64 },
    /// `−ε ln a_ε → C0`.
    LogLaw { c0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeLaw {
    pub class: PatternClass,
    pub law: AreaLaw,
}

/// Effective wall condition in the limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
    /// Perfect slip, `M = 0`.
    Sub,
    /// Navier condition with the given matrix (`c·M₀` for patches keeps
    /// the factor even when `M₀` is not supplied).
    Critical {
        factor: Option<f64>,
        matrix: Option<[[f64; 2]; 2]>,
    },
    /// No slip.
    Super,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::Sub => "sub",
            Regime::Critical { .. } => "critical",
            Regime::Super => "super",
        }
    }

    pub fn limit(&self) -> &'static str {
        match self {
            Regime::Sub => "perfect slip",
            Regime::Critical { .. } => "navier",
            Regime::Super => "no slip",
        }
    }
}

const CRITICAL_EXPONENT: f64 = 2.0;

/// Classifies the limit wall law. `m0` supplies the patch matrix used in
/// the critical patch case.
pub fn classify_regime(law: &RegimeLaw, m0: Option<[[f64; 2]; 2]>) -> Result<Regime> {
    match law.law {
        AreaLaw::PowerLaw { c, p } => {
            if !(c > 0.0 && c.is_finite() && p > 0.0 && p.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "power law needs c, p > 0, got c={c}, p={p}"
                )));
            }
        }
        AreaLaw::LogLaw { c0 } => {
            if !(c0 > 0.0 && c0.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "log law needs C0 > 0, got {c0}"
                )));
            }
        }
    }
    Ok(match (law.class, law.law) {
        (PatternClass::Patch, AreaLaw::PowerLaw { c, p }) => {
            if p > CRITICAL_EXPONENT {
                Regime::Sub
            } else if p < CRITICAL_EXPONENT {
                Regime::Super
            } else {
                Regime::Critical {
                    factor: Some(c),
                    matrix: m0.map(|m| scale(m, c)),
                }
            }
        }
        // Exponentially small patches: far below ε².
        (PatternClass::Patch, AreaLaw::LogLaw { .. }) => Regime::Sub,
        (PatternClass::Riblet, AreaLaw::LogLaw { c0 }) => Regime::Critical {
            factor: None,
            matrix: Some(crate::riblet::riblet_limit_matrix(c0)?),
        },
        // −ε ln(c ε^p) → 0: the slip length vanishes.
        (PatternClass::Riblet, AreaLaw::PowerLaw { .. }) => Regime::Super,
    })
}

fn scale(m: [[f64; 2]; 2], c: f64) -> [[f64; 2]; 2] {
    [[c * m[0][0], c * m[0][1]], [c * m[1][0], c * m[1][1]]]
}

/// Drag of one period `L`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DragLevel {
    pub period: f64,
    pub f: [[f64; 2]; 2],
    /// `2L` times the dissipation of each column, a cross-check of the
    /// diagonal.
    pub energy_diagonal: [f64; 2],
    pub iterations: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DragMatrix {
    pub pattern: String,
    pub n: usize,
    pub levels: Vec<DragLevel>,
    /// Period-extrapolated drag.
    pub f: [[f64; 2]; 2],
    /// `F / 8`.
    pub m0: [[f64; 2]; 2],
    pub extrapolated: bool,
    /// Whether every diagonal entry changes monotonically with `L`.
    pub monotone: bool,
    /// Common diagonal of `M₀` for isotropic patterns.
    pub lambda0: Option<f64>,
    /// Largest relative gap between trace and energy forms.
    pub energy_check: f64,
    /// Area of the pattern in the units of the periods.
    pub area: Option<f64>,
}

impl DragMatrix {
    pub fn min_eigenvalue(&self) -> f64 {
        let f = self.f;
        let s = 0.5 * (f[0][1] + f[1][0]);
        0.5 * (f[0][0] + f[1][1]) - (0.25 * (f[0][0] - f[1][1]).powi(2) + s * s).sqrt()
    }

    pub fn asymmetry(&self) -> f64 {
        (self.f[0][1] - self.f[1][0]).abs()
    }

    pub fn is_isotropic(&self, rel: f64) -> bool {
        let scale = self.f[0][0].abs().max(self.f[1][1].abs());
        (self.f[0][0] - self.f[1][1]).abs() <= rel * scale
            && self.f[0][1].abs().max(self.f[1][0].abs()) <= rel * scale
    }
}

/// `−P A Pᵀ` on the pattern cells, both components.
struct DragOperator<'a> {
    op: &'a WallOperator,
    solid: &'a [usize],
    ws: ApplyWorkspace,
    s1: Vec<f64>,
    s2: Vec<f64>,
    o1: Vec<f64>,
    o2: Vec<f64>,
}

impl LinearOperator for DragOperator<'_> {
    fn dim(&self) -> usize {
        2 * self.solid.len()
    }

    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        let ns = self.solid.len();
        for (k, &idx) in self.solid.iter().enumerate() {
            self.s1[idx] = x[k];
            self.s2[idx] = x[ns + k];
        }
        self.op
            .apply_raw(&self.s1, &self.s2, &mut self.o1, &mut self.o2, &mut self.ws);
        for (k, &idx) in self.solid.iter().enumerate() {
            y[k] = -self.o1[idx];
            y[ns + k] = -self.o2[idx];
        }
    }
}

/// Drag of an isolated pattern: the pattern, given in units where the
/// period is `L`, is shrunk by `1/L` into the unit cell; the wall velocity
/// equals `e_j` on it and the shear vanishes elsewhere. The result is
/// extrapolated to `L → ∞` with the mobility law `1/F(L) = 1/F∞ + b/L`.
pub fn drag_matrix(
    pattern: &Pattern,
    periods: &[f64],
    n: usize,
    options: SolverOptions,
) -> Result<DragMatrix> {
    options.validate()?;
    if !pattern.is_patch() {
        return Err(Error::Unsupported(
            "drag matrix is defined for compact patches only".into(),
        ));
    }
    if periods.len() < 3 {
        return Err(Error::InvalidArgument(
            "drag extrapolation needs at least 3 periods".into(),
        ));
    }
    if periods.iter().any(|&l| !(l >= 1.0 && l.is_finite()))
        || periods.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::InvalidArgument(
            "periods must be increasing and at least 1".into(),
        ));
    }
    let top = TopCondition::HalfSpace;
    let op = WallOperator::new(n, top)?;
    let grid = UnitCellGrid::new(n, top)?;
    let mut levels = Vec::with_capacity(periods.len());
    let mut energy_check: f64 = 0.0;
    for &period in periods {
        let mask = rasterize(&pattern.scaled(1.0 / period)?, &grid)?;
        let solid = mask.solid_indices();
        if solid.is_empty() {
            return Err(Error::InvalidGrid(format!(
                "pattern not resolved at n = {n}, L = {period}"
            )));
        }
        let ns = solid.len();
        let mut f = [[0.0; 2]; 2];
        let mut energy_diagonal = [0.0; 2];
        let mut iterations = [0; 2];
        for j in 0..2 {
            let mut system = DragOperator {
                op: &op,
                solid: &solid,
                ws: op.workspace(),
                s1: vec![0.0; n * n],
                s2: vec![0.0; n * n],
                o1: vec![0.0; n * n],
                o2: vec![0.0; n * n],
            };
            let mut rhs = vec![0.0; 2 * ns];
            rhs[j * ns..(j + 1) * ns].iter_mut().for_each(|r| *r = -1.0);
            let out = conjugate_gradient(
                &mut system,
                &rhs,
                None,
                KrylovOptions {
                    tol: options.tol,
                    max_iter: options.max_iter,
                },
            )?;
            iterations[j] = out.iterations;
            let mut shear = BoundaryField::zeros(n);
            for (k, &idx) in solid.iter().enumerate() {
                shear.c1[idx] = out.x[k];
                shear.c2[idx] = out.x[ns + k];
            }
            let mean = shear.mean();
            f[0][j] = -2.0 * period * mean[0];
            f[1][j] = -2.0 * period * mean[1];
            let energy: f64 = op.mode_energies(&shear).iter().sum();
            energy_diagonal[j] = 2.0 * period * energy;
            let scale = f[j][j].abs().max(f64::MIN_POSITIVE);
            energy_check = energy_check.max((energy_diagonal[j] - f[j][j]).abs() / scale);
        }
        levels.push(DragLevel {
            period,
            f,
            energy_diagonal,
            iterations,
        });
    }

    let mut f = [[0.0; 2]; 2];
    let mut monotone = true;
    let mut extrapolated = true;
    for i in 0..2 {
        for j in 0..2 {
            let series: Vec<f64> = levels.iter().map(|l| l.f[i][j]).collect();
            if i == j {
                let diffs: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
                monotone &= diffs.iter().all(|d| *d < 0.0) || diffs.iter().all(|d| *d > 0.0);
                match mobility_limit(periods, &series) {
                    Some(v) => f[i][j] = v,
                    None => {
                        extrapolated = false;
                        f[i][j] = *series.last().unwrap();
                    }
                }
            } else {
                // Off-diagonal entries vanish for symmetric patterns; keep
                // the finest value, which is already at round-off there.
                f[i][j] = *series.last().unwrap();
            }
        }
    }
    let m0 = scale(f, 0.125);
    let mut drag = DragMatrix {
        pattern: pattern.id(),
        n,
        levels,
        f,
        m0,
        extrapolated,
        monotone,
        lambda0: None,
        energy_check,
        area: pattern.exact_area(),
    };
    if drag.is_isotropic(1e-6) {
        drag.lambda0 = Some(0.5 * (m0[0][0] + m0[1][1]));
    }
    Ok(drag)
}

/// Least-squares intercept of `1/F` against `1/L`, inverted.
fn mobility_limit(periods: &[f64], values: &[f64]) -> Option<f64> {
    if values.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = periods.iter().map(|l| 1.0 / l).collect();
    let ys: Vec<f64> = values.iter().map(|v| 1.0 / v).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let intercept = my - sxy / sxx * mx;
    (intercept > 0.0).then(|| 1.0 / intercept)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lambda0Report {
    pub from_fit: f64,
    pub from_drag: f64,
    /// `from_fit / from_drag`.
    pub ratio: f64,
    pub area: f64,
    pub alpha: f64,
}

/// Compares `√|T|/α` from the scaling fit with the drag-based `M₀`
/// diagonal. `area` is `|T|` in the units of the drag periods.
pub fn lambda0_consistency(
    fit: &ScalingFit,
    drag: &DragMatrix,
    area: f64,
) -> Result<Lambda0Report> {
    let from_drag = drag
        .lambda0
        .ok_or_else(|| Error::Unsupported("lambda0 needs an isotropic pattern".into()))?;
    lambda0_from_values(fit.alpha, area, from_drag)
}

pub fn lambda0_from_values(alpha: f64, area: f64, from_drag: f64) -> Result<Lambda0Report> {
    if !(alpha > 0.0 && area > 0.0) {
        return Err(Error::InvalidArgument(
            "lambda0 needs alpha > 0 and |T| > 0".into(),
        ));
    }
    let from_fit = area.sqrt() / alpha;
    Ok(Lambda0Report {
        from_fit,
        from_drag,
        ratio: from_fit / from_drag,
        area,
        alpha,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AnisotropyPoint {
    /// `L₁ = φ`: a stripe across the flow.
    PerpendicularRiblet,
    Rectangle,
    /// `L₁ = 1`: a stripe along the flow.
    ParallelRiblet,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnisotropyRow {
    pub len1: f64,
    pub len2: f64,
    pub v11: f64,
    pub point: AnisotropyPoint,
    pub under_resolved: bool,
    pub energy_check: f64,
}

/// `V₁₁` over rectangles of fixed area `phi` with side `len1` along the
/// flow. The endpoints use the 1-D stripe solver at the same resolution.
pub fn anisotropy_sweep(
    phi: f64,
    len1: &[f64],
    top: TopCondition,
    ns: &[usize],
    options: SolverOptions,
) -> Result<Vec<AnisotropyRow>> {
    if !(phi > 0.0 && phi < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "solid fraction must lie in (0, 1), got {phi}"
        )));
    }
    for &l1 in len1 {
        if !(l1 >= phi * (1.0 - 1e-12) && l1 <= 1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "L1 = {l1} out of range: L2 = phi/L1 must fit in the cell"
            )));
        }
    }
    len1.par_iter()
        .map(|&l1| {
            let l2 = phi / l1;
            let endpoint = if (l1 - 1.0).abs() <= 1e-12 {
                Some((Orientation::Parallel, AnisotropyPoint::ParallelRiblet))
            } else if (l2 - 1.0).abs() <= 1e-12 {
                Some((
                    Orientation::Perpendicular,
                    AnisotropyPoint::PerpendicularRiblet,
                ))
            } else {
                None
            };
            if let Some((o, point)) = endpoint {
                let v11 = riblet_levels(phi, o, top, ns, options)?;
                return Ok(AnisotropyRow {
                    len1: l1.min(1.0),
                    len2: l2.min(1.0),
                    v11,
                    point,
                    under_resolved: false,
                    energy_check: 0.0,
                });
            }
            let pattern = Pattern::rectangle(l1, l2)?;
            let d = directional_levels(&pattern, top, ns, [1.0, 0.0], options)?;
            Ok(AnisotropyRow {
                len1: l1,
                len2: l2,
                v11: d.value,
                point: AnisotropyPoint::Rectangle,
                under_resolved: d.under_resolved,
                energy_check: d.energy_check,
            })
        })
        .collect()
}

/// `c·e` at one or (extrapolated) several resolutions; the flags are those
/// of the finest level and the energy check the worst over all levels.
pub fn directional_levels(
    pattern: &Pattern,
    top: TopCondition,
    ns: &[usize],
    e: [f64; 2],
    options: SolverOptions,
) -> Result<DirectionalSlip> {
    match ns {
        [] => Err(Error::InvalidArgument("no grid size given".into())),
        [_, _] => Err(Error::InvalidArgument(
            "extrapolation needs at least 3 grid sizes".into(),
        )),
        _ => {
            let levels = ns
                .iter()
                .map(|&n| {
                    fraction_matched_slip_length(pattern, &UnitCellGrid::new(n, top)?, e, options)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut out = levels[levels.len() - 1];
            out.energy_check = levels.iter().map(|l| l.energy_check).fold(0.0, f64::max);
            out.iterations = levels.iter().map(|l| l.iterations).sum();
            if levels.len() > 1 {
                let values: Vec<f64> = levels.iter().map(|l| l.value).collect();
                out.value = richardson(ns, &values)?.value;
            }
            Ok(out)
        }
    }
}

fn riblet_levels(
    phi: f64,
    o: Orientation,
    top: TopCondition,
    ns: &[usize],
    options: SolverOptions,
) -> Result<f64> {
    match ns {
        [] => Err(Error::InvalidArgument("no grid size given".into())),
        [n] => Ok(solve_riblet_1d(&RibletCase::new(o, phi, *n, top)?, options)?.matched),
        [_, _] => Err(Error::InvalidArgument(
            "extrapolation needs at least 3 grid sizes".into(),
        )),
        _ => Ok(extrapolate_riblet(phi, o, top, ns, options)?.1.value),
    }
}

/// `L₁` grid from `φ` to 1, geometric in the interior.
pub fn anisotropy_lengths(phi: f64, interior: usize) -> Vec<f64> {
    let mut out = vec![phi];
    let (lo, hi) = (phi.ln(), 0.0f64);
    for k in 1..=interior {
        out.push((lo + (hi - lo) * k as f64 / (interior + 1) as f64).exp());
    }
    out.push(1.0);
    out
}

/// Kind check used by callers that hold a [`Pattern`].
pub fn pattern_class(pattern: &Pattern) -> PatternClass {
    match pattern.kind() {
        PatternKind::RibletAcross1 { .. } | PatternKind::RibletAcross2 { .. } => {
            PatternClass::Riblet
        }
        _ => PatternClass::Patch,
    }
}
