//! Mixed perfect-slip / no-slip cell problem on the periodic wall.
//!
//! The unknowns are the wall shear on the no-slip cells (the shear equals
//! `−e` on every slip cell) and, when the top condition leaves it free, the
//! mean slip `c`. The equations require zero slip on every no-slip cell:
//!
//! ```text
//!   P A Pᵀ t + B c = −P A s_f        (slip vanishes on the solid set)
//!   Bᵀ t          = N_fluid · e       (mean shear vanishes)
//! ```
//!
//! where `A` is the spectral wall operator, `P` restricts to solid cells,
//! `s_f` is the imposed shear on slip cells and `B` sums per component. The
//! system is symmetric and indefinite and is solved by MINRES, each
//! iteration costing one packed forward/inverse FFT pair. Under a no-slip lid
//! the mean slip is tied to the mean shear instead and the block reduces to
//! the symmetric negative definite `P A Pᵀ − (H/n²) B Bᵀ`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{rasterize, Pattern, PatternMask, UnitCellGrid};
use crate::krylov::{minres, KrylovOptions, LinearOperator};
use crate::wall_operator::{
    zero_mode_rule, ApplyWorkspace, BoundaryField, TopCondition, WallOperator, ZeroModeRule,
};

/// Patterns spanning fewer cells than this are flagged as under-resolved.
pub const MIN_CELLS_ACROSS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Block-diagonal scaling from the mode-averaged gain.
    pub preconditioner: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 5000,
            preconditioner: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must lie in (0, 1), got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CellProblem {
    pub mask: PatternMask,
    pub top: TopCondition,
    /// Unit shear direction imposed far from the wall.
    pub direction: [f64; 2],
    pub options: SolverOptions,
}

impl CellProblem {
    pub fn new(mask: PatternMask, top: TopCondition, direction: [f64; 2]) -> Self {
        Self {
            mask,
            top,
            direction,
            options: SolverOptions::default(),
        }
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    fn validate(&self) -> Result<()> {
        self.options.validate()?;
        self.top.validate()?;
        let norm = self.direction[0].hypot(self.direction[1]);
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "direction must be a unit vector, |e| = {norm}"
            )));
        }
        if self.mask.solid_count() == 0 {
            return Err(Error::PerfectSlip);
        }
        if self.mask.fluid_count() == 0 {
            return Err(Error::FullyNoSlip);
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CellSolution {
    pub direction: [f64; 2],
    /// Equals `−e` on slip cells.
    pub shear: BoundaryField,
    /// Wall velocity trace, zero on no-slip cells up to the tolerance.
    pub slip: BoundaryField,
    /// Mean slip vector `c`; `c·e` is the average slip length along `e`.
    pub mean_slip: [f64; 2],
    pub mean_shear: [f64; 2],
    pub residual_norm: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    /// Dissipation per Fourier mode (transposed spectral layout); index 0
    /// holds the mean-mode contribution.
    pub mode_energy: Vec<f64>,
    /// `max |slip|` over the no-slip cells.
    pub constraint_residual: f64,
    pub under_resolved: bool,
}

impl CellSolution {
    pub fn slip_length(&self) -> f64 {
        self.mean_slip[0] * self.direction[0] + self.mean_slip[1] * self.direction[1]
    }

    pub fn total_energy(&self) -> f64 {
        self.mode_energy.iter().sum()
    }

    /// Relative mismatch between `c·e` and the summed mode dissipation.
    pub fn energy_check(&self) -> f64 {
        let ce = self.slip_length();
        let energy = self.total_energy();
        (ce - energy).abs() / ce.abs().max(energy.abs()).max(f64::MIN_POSITIVE)
    }

    /// Squared wall-trace L² norm of the slip field, `(1/n²) Σ |w|²`.
    pub fn trace_norm_sq(&self) -> f64 {
        self.slip.inner(&self.slip)
    }
}

/// Matrix-free block system of the cell problem.
struct CellOperator<'a> {
    op: &'a WallOperator,
    solid: &'a [usize],
    rule: ZeroModeRule,
    /// Weight of the mean-shear rows and the mean-slip unknowns.
    scale: f64,
    ws: ApplyWorkspace,
    s1: Vec<f64>,
    s2: Vec<f64>,
    o1: Vec<f64>,
    o2: Vec<f64>,
}

impl<'a> CellOperator<'a> {
    fn new(op: &'a WallOperator, solid: &'a [usize], rule: ZeroModeRule) -> Self {
        let cells = op.n() * op.n();
        Self {
            op,
            solid,
            rule,
            scale: 1.0,
            ws: op.workspace(),
            s1: vec![0.0; cells],
            s2: vec![0.0; cells],
            o1: vec![0.0; cells],
            o2: vec![0.0; cells],
        }
    }

    fn free_mean(&self) -> bool {
        matches!(self.rule, ZeroModeRule::ZeroMeanShear)
    }
}

impl LinearOperator for CellOperator<'_> {
    fn dim(&self) -> usize {
        2 * self.solid.len() + if self.free_mean() { 2 } else { 0 }
    }

    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        let ns = self.solid.len();
        for (k, &idx) in self.solid.iter().enumerate() {
            self.s1[idx] = x[k];
            self.s2[idx] = x[ns + k];
        }
        self.op
            .apply_raw(&self.s1, &self.s2, &mut self.o1, &mut self.o2, &mut self.ws);
        let (sum1, sum2) = (
            x[..ns].iter().sum::<f64>(),
            x[ns..2 * ns].iter().sum::<f64>(),
        );
        let (c1, c2) = match self.rule {
            ZeroModeRule::ZeroMeanShear => (self.scale * x[2 * ns], self.scale * x[2 * ns + 1]),
            ZeroModeRule::MeanSlipFromShear { height } => {
                let cells = (self.op.n() * self.op.n()) as f64;
                (-height * sum1 / cells, -height * sum2 / cells)
            }
        };
        for (k, &idx) in self.solid.iter().enumerate() {
            y[k] = self.o1[idx] + c1;
            y[ns + k] = self.o2[idx] + c2;
        }
        if self.free_mean() {
            y[2 * ns] = self.scale * sum1;
            y[2 * ns + 1] = self.scale * sum2;
        }
    }
}

struct Assembled<'a> {
    system: CellOperator<'a>,
    rhs: Vec<f64>,
    /// `−e` on slip cells, zero elsewhere.
    shear: BoundaryField,
}

fn assemble<'a>(
    op: &'a WallOperator,
    problem: &CellProblem,
    solid: &'a [usize],
) -> Result<Assembled<'a>> {
    let n = problem.mask.n();
    let e = problem.direction;
    let ns = solid.len();
    let nf = problem.mask.fluid_count() as f64;
    let cells = (n * n) as f64;
    let rule = zero_mode_rule(problem.top);

    let mut shear = BoundaryField::zeros(n);
    for (idx, &is_solid) in problem.mask.cells().iter().enumerate() {
        if !is_solid {
            shear.c1[idx] = -e[0];
            shear.c2[idx] = -e[1];
        }
    }
    let forced = op.apply(&shear)?;

    let mut system = CellOperator::new(op, solid, rule);
    let mut rhs = vec![0.0; system.dim()];
    let base = match rule {
        ZeroModeRule::ZeroMeanShear => [0.0, 0.0],
        // The slip cells contribute −N_f e to the total shear.
        ZeroModeRule::MeanSlipFromShear { height } => {
            [height * nf * e[0] / cells, height * nf * e[1] / cells]
        }
    };
    for (k, &idx) in solid.iter().enumerate() {
        rhs[k] = -forced.c1[idx] - base[0];
        rhs[ns + k] = -forced.c2[idx] - base[1];
    }
    if system.free_mean() {
        let first = rhs[..2 * ns].iter().map(|r| r * r).sum::<f64>().sqrt();
        if first > 0.0 {
            system.scale = first / nf;
        }
        rhs[2 * ns] = system.scale * nf * e[0];
        rhs[2 * ns + 1] = system.scale * nf * e[1];
    }
    Ok(Assembled { system, rhs, shear })
}

/// Solves one cell problem with a freshly built wall operator.
pub fn solve_cell(problem: &CellProblem) -> Result<CellSolution> {
    let op = WallOperator::new(problem.mask.n(), problem.top)?;
    solve_cell_with(&op, problem)
}

/// Solves one cell problem reusing a precomputed operator of matching size
/// and top condition.
pub fn solve_cell_with(op: &WallOperator, problem: &CellProblem) -> Result<CellSolution> {
    problem.validate()?;
    let n = problem.mask.n();
    if op.n() != n || op.top() != problem.top {
        return Err(Error::InvalidArgument(
            "wall operator does not match the problem grid or top condition".into(),
        ));
    }
    let solid = problem.mask.solid_indices();
    let ns = solid.len();
    let rule = zero_mode_rule(problem.top);
    let Assembled {
        mut system,
        rhs,
        mut shear,
    } = assemble(op, problem, &solid)?;

    let diag_inv = problem.options.preconditioner.then(|| {
        let g = op.mean_diagonal_gain().abs().max(f64::MIN_POSITIVE);
        let mut d = vec![1.0 / g; system.dim()];
        if system.free_mean() {
            let schur = g / (ns as f64 * system.scale * system.scale);
            d[2 * ns] = schur;
            d[2 * ns + 1] = schur;
        }
        d
    });
    let outcome = minres(
        &mut system,
        &rhs,
        diag_inv.as_deref(),
        KrylovOptions {
            tol: problem.options.tol,
            max_iter: problem.options.max_iter,
        },
    )?;

    for (k, &idx) in solid.iter().enumerate() {
        shear.c1[idx] = outcome.x[k];
        shear.c2[idx] = outcome.x[ns + k];
    }
    let mean_shear = shear.mean();
    let mean_slip = match rule {
        ZeroModeRule::ZeroMeanShear => [
            system.scale * outcome.x[2 * ns],
            system.scale * outcome.x[2 * ns + 1],
        ],
        ZeroModeRule::MeanSlipFromShear { height } => {
            [-height * mean_shear[0], -height * mean_shear[1]]
        }
    };
    let e = problem.direction;
    let mut slip = op.apply(&shear)?;
    slip.c1.iter_mut().for_each(|v| *v += mean_slip[0]);
    slip.c2.iter_mut().for_each(|v| *v += mean_slip[1]);
    let constraint_residual = solid
        .iter()
        .map(|&idx| slip.c1[idx].abs().max(slip.c2[idx].abs()))
        .fold(0.0, f64::max);

    let mut mode_energy = op.mode_energies(&shear);
    if let ZeroModeRule::MeanSlipFromShear { height } = rule {
        mode_energy[0] = height * (mean_shear[0].powi(2) + mean_shear[1].powi(2));
    }

    Ok(CellSolution {
        direction: e,
        shear,
        slip,
        mean_slip,
        mean_shear,
        residual_norm: outcome.residual,
        iterations: outcome.iterations,
        residual_history: outcome.history,
        mode_energy,
        constraint_residual,
        under_resolved: problem.mask.cells_across() < MIN_CELLS_ACROSS,
    })
}

/// Averaged slip matrix with its symmetry diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlipMatrix {
    /// `v[i][j] = c(e_i)·e_j`.
    pub v: [[f64; 2]; 2],
    pub off_diagonal_norm: f64,
    /// `|V12 − V21|`.
    pub asymmetry: f64,
    pub min_eigenvalue: f64,
    pub n: usize,
    pub pattern: String,
    pub solid_fraction_raster: f64,
    pub extrapolated: bool,
    /// Observed convergence order when extrapolated.
    pub order: Option<f64>,
    /// Largest `|c·e − Σ mode energy|` relative error of the two solves.
    pub energy_check: f64,
    pub iterations: [usize; 2],
    pub under_resolved: bool,
}

impl SlipMatrix {
    fn from_entries(v: [[f64; 2]; 2], n: usize, pattern: String, solid_fraction: f64) -> Self {
        let mut out = Self {
            v,
            off_diagonal_norm: 0.0,
            asymmetry: 0.0,
            min_eigenvalue: 0.0,
            n,
            pattern,
            solid_fraction_raster: solid_fraction,
            extrapolated: false,
            order: None,
            energy_check: 0.0,
            iterations: [0, 0],
            under_resolved: false,
        };
        out.refresh_diagnostics();
        out
    }

    fn refresh_diagnostics(&mut self) {
        let v = self.v;
        self.off_diagonal_norm = v[0][1].abs().max(v[1][0].abs());
        self.asymmetry = (v[0][1] - v[1][0]).abs();
        let sym = 0.5 * (v[0][1] + v[1][0]);
        let mean = 0.5 * (v[0][0] + v[1][1]);
        let half_gap = (0.25 * (v[0][0] - v[1][1]).powi(2) + sym * sym).sqrt();
        self.min_eigenvalue = mean - half_gap;
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.v.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_symmetric(&self, rel: f64) -> bool {
        self.asymmetry <= rel * self.norm()
    }

    pub fn is_diagonal(&self, rel: f64) -> bool {
        self.off_diagonal_norm <= rel * self.norm()
    }

    pub fn is_positive_semidefinite(&self, rel: f64) -> bool {
        self.min_eigenvalue >= -rel * self.norm()
    }
}

/// Two solves (`e₁`, `e₂`) on a fixed mask.
pub fn slip_matrix_for_mask(
    mask: &PatternMask,
    pattern_id: &str,
    top: TopCondition,
    options: SolverOptions,
) -> Result<SlipMatrix> {
    let op = WallOperator::new(mask.n(), top)?;
    let solve = |dir: [f64; 2]| {
        solve_cell_with(
            &op,
            &CellProblem::new(mask.clone(), top, dir).with_options(options),
        )
    };
    let (s1, s2) = rayon::join(|| solve([1.0, 0.0]), || solve([0.0, 1.0]));
    let (s1, s2) = (s1?, s2?);
    let mut m = SlipMatrix::from_entries(
        [s1.mean_slip, s2.mean_slip],
        mask.n(),
        pattern_id.to_string(),
        mask.solid_fraction_raster,
    );
    m.energy_check = s1.energy_check().max(s2.energy_check());
    m.iterations = [s1.iterations, s2.iterations];
    m.under_resolved = s1.under_resolved;
    Ok(m)
}

pub fn slip_matrix(
    pattern: &Pattern,
    grid: &UnitCellGrid,
    options: SolverOptions,
) -> Result<SlipMatrix> {
    let mask = rasterize(pattern, grid)?;
    slip_matrix_for_mask(&mask, &pattern.id(), grid.top, options)
}

/// Slip matrix at the pattern's exact solid fraction: the raster fraction
/// of a centered pattern jumps with `n`, so a second raster of a slightly
/// rescaled pattern brackets the exact area and the two results are
/// interpolated linearly in raster fraction.
pub fn fraction_matched_slip_matrix(
    pattern: &Pattern,
    grid: &UnitCellGrid,
    options: SolverOptions,
) -> Result<SlipMatrix> {
    let base_mask = rasterize(pattern, grid)?;
    let base = slip_matrix_for_mask(&base_mask, &pattern.id(), grid.top, options)?;
    let Some(target) = pattern.exact_area() else {
        return Ok(base);
    };
    let phi0 = base_mask.solid_fraction_raster;
    if (phi0 - target).abs() <= 1e-14 {
        return Ok(base);
    }
    let Some((other_mask, phi1)) = bracketing_mask(pattern, grid, target, phi0) else {
        return Ok(base);
    };
    let other = slip_matrix_for_mask(&other_mask, &pattern.id(), grid.top, options)?;
    let w = (target - phi0) / (phi1 - phi0);
    let mut v = base.v;
    for (row, orow) in v.iter_mut().zip(&other.v) {
        for (x, y) in row.iter_mut().zip(orow) {
            *x += w * (y - *x);
        }
    }
    let mut out = SlipMatrix::from_entries(v, grid.n, pattern.id(), target);
    out.energy_check = base.energy_check.max(other.energy_check);
    out.iterations = [
        base.iterations[0] + other.iterations[0],
        base.iterations[1] + other.iterations[1],
    ];
    out.under_resolved = base.under_resolved;
    Ok(out)
}

/// `c·e` along one direction at the pattern's exact solid fraction, by the
/// same bracketing as [`fraction_matched_slip_matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectionalSlip {
    pub value: f64,
    pub energy_check: f64,
    pub iterations: usize,
    pub under_resolved: bool,
}

pub fn fraction_matched_slip_length(
    pattern: &Pattern,
    grid: &UnitCellGrid,
    direction: [f64; 2],
    options: SolverOptions,
) -> Result<DirectionalSlip> {
    let op = WallOperator::new(grid.n, grid.top)?;
    let solve = |mask: PatternMask| {
        solve_cell_with(
            &op,
            &CellProblem::new(mask, grid.top, direction).with_options(options),
        )
    };
    let base_mask = rasterize(pattern, grid)?;
    let phi0 = base_mask.solid_fraction_raster;
    let base = solve(base_mask)?;
    let mut out = DirectionalSlip {
        value: base.slip_length(),
        energy_check: base.energy_check(),
        iterations: base.iterations,
        under_resolved: base.under_resolved,
    };
    let Some(target) = pattern.exact_area() else {
        return Ok(out);
    };
    if (phi0 - target).abs() <= 1e-14 {
        return Ok(out);
    }
    if let Some((mask, phi1)) = bracketing_mask(pattern, grid, target, phi0) {
        let other = solve(mask)?;
        let w = (target - phi0) / (phi1 - phi0);
        out.value += w * (other.slip_length() - out.value);
        out.energy_check = out.energy_check.max(other.energy_check());
        out.iterations += other.iterations;
    }
    Ok(out)
}

/// Smallest rescaling of `pattern` whose raster fraction lies on the other
/// side of `target` from `phi0`.
fn bracketing_mask(
    pattern: &Pattern,
    grid: &UnitCellGrid,
    target: f64,
    phi0: f64,
) -> Option<(PatternMask, f64)> {
    let size = pattern
        .inscribed_radius()
        .map(|r| 2.0 * r)
        .or_else(|| pattern.exact_area())?;
    if size <= 0.0 {
        return None;
    }
    let dir = if target > phi0 { 1.0 } else { -1.0 };
    let step = 0.25 / (grid.n as f64 * size);
    for m in 1..=64 {
        let scaled = pattern.scaled(1.0 + dir * m as f64 * step).ok()?;
        let mask = rasterize(&scaled, grid).ok()?;
        let phi = mask.solid_fraction_raster;
        if (phi - target) * dir >= 0.0 && phi != phi0 && mask.solid_count() > 0 {
            return Some((mask, phi));
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extrapolation {
    pub value: f64,
    pub order: Option<f64>,
    pub extrapolated: bool,
}

/// Richardson extrapolation of `values` computed on geometrically spaced
/// grids `ns` (ascending), assuming `V(n) = V∞ + C n^{−p}` and using the
/// three finest levels. Non-monotone or stagnant sequences return the
/// finest value unextrapolated.
pub fn richardson(ns: &[usize], values: &[f64]) -> Result<Extrapolation> {
    if ns.len() != values.len() || ns.len() < 3 {
        return Err(Error::InvalidArgument(
            "extrapolation needs at least 3 grid levels with one value each".into(),
        ));
    }
    let m = ns.len();
    let ratio = ns[m - 1] as f64 / ns[m - 2] as f64;
    let prev_ratio = ns[m - 2] as f64 / ns[m - 3] as f64;
    if ratio <= 1.0 || (ratio - prev_ratio).abs() > 1e-12 * ratio {
        return Err(Error::InvalidArgument(
            "grid sizes must be geometrically increasing".into(),
        ));
    }
    let finest = values[m - 1];
    let raw = Extrapolation {
        value: finest,
        order: None,
        extrapolated: false,
    };
    let d1 = values[m - 2] - values[m - 3];
    let d2 = values[m - 1] - values[m - 2];
    let scale = finest.abs().max(f64::MIN_POSITIVE);
    if d2.abs() <= 1e-13 * scale || d1 * d2 <= 0.0 {
        return Ok(raw);
    }
    let p = (d1 / d2).ln() / ratio.ln();
    if !(p.is_finite() && p > 0.0) {
        return Ok(raw);
    }
    Ok(Extrapolation {
        value: finest + d2 / (ratio.powf(p) - 1.0),
        order: Some(p),
        extrapolated: true,
    })
}

/// Slip matrices over a refinement sequence and their extrapolated limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementStudy {
    pub levels: Vec<SlipMatrix>,
    pub limit: SlipMatrix,
}

/// Fraction-matched slip matrices on every grid in `ns` with Richardson
/// extrapolation of each entry. The limit is flagged extrapolated only when
/// both diagonal entries were.
pub fn refine_and_extrapolate(
    pattern: &Pattern,
    ns: &[usize],
    top: TopCondition,
    options: SolverOptions,
) -> Result<RefinementStudy> {
    if ns.len() < 3 {
        return Err(Error::InvalidArgument(
            "refinement needs at least 3 grid sizes".into(),
        ));
    }
    let levels = ns
        .iter()
        .map(|&n| fraction_matched_slip_matrix(pattern, &UnitCellGrid::new(n, top)?, options))
        .collect::<Result<Vec<_>>>()?;
    extrapolate_levels(levels, ns)
}

pub fn extrapolate_levels(levels: Vec<SlipMatrix>, ns: &[usize]) -> Result<RefinementStudy> {
    let finest = levels
        .last()
        .cloned()
        .ok_or_else(|| Error::InvalidArgument("no refinement levels".into()))?;
    let mut v = finest.v;
    let mut diag = [None, None];
    for i in 0..2 {
        for j in 0..2 {
            let series: Vec<f64> = levels.iter().map(|l| l.v[i][j]).collect();
            let ex = richardson(ns, &series)?;
            if i == j {
                diag[i] = ex.extrapolated.then_some(ex.order.unwrap_or(f64::NAN));
                v[i][j] = ex.value;
            } else if ex.extrapolated {
                v[i][j] = ex.value;
            }
        }
    }
    let extrapolated = diag.iter().all(|d| d.is_some());
    if !extrapolated {
        v = finest.v;
    }
    let mut limit = SlipMatrix::from_entries(
        v,
        finest.n,
        finest.pattern.clone(),
        finest.solid_fraction_raster,
    );
    limit.extrapolated = extrapolated;
    limit.order = if extrapolated {
        diag[0].zip(diag[1]).map(|(a, b)| 0.5 * (a + b))
    } else {
        None
    };
    limit.energy_check = levels.iter().map(|l| l.energy_check).fold(0.0, f64::max);
    limit.iterations = finest.iterations;
    limit.under_resolved = finest.under_resolved;
    Ok(RefinementStudy { levels, limit })
}

/// Dense direct solve of the same block system, for cross-checks on small
/// grids (`n ≤ 32`).
pub fn solve_cell_dense(problem: &CellProblem) -> Result<[f64; 2]> {
    problem.validate()?;
    let n = problem.mask.n();
    if n > 32 {
        return Err(Error::InvalidArgument(
            "dense cross-check limited to n <= 32".into(),
        ));
    }
    let op = WallOperator::new(n, problem.top)?;
    let solid = problem.mask.solid_indices();
    let rule = zero_mode_rule(problem.top);
    let Assembled {
        mut system, rhs, ..
    } = assemble(&op, problem, &solid)?;
    let dim = system.dim();
    let mut mat = nalgebra::DMatrix::<f64>::zeros(dim, dim);
    let mut unit = vec![0.0; dim];
    let mut col = vec![0.0; dim];
    for j in 0..dim {
        unit[j] = 1.0;
        system.apply(&unit, &mut col);
        unit[j] = 0.0;
        for i in 0..dim {
            mat[(i, j)] = col[i];
        }
    }
    let e = problem.direction;
    let ns = solid.len();
    let nf = problem.mask.fluid_count() as f64;
    let cells = (n * n) as f64;
    let rhs = nalgebra::DVector::from_vec(rhs);
    let x = mat
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidArgument("singular dense cell system".into()))?;
    Ok(match rule {
        ZeroModeRule::ZeroMeanShear => [system.scale * x[2 * ns], system.scale * x[2 * ns + 1]],
        ZeroModeRule::MeanSlipFromShear { height } => {
            let s1 = (x.rows(0, ns).sum() - nf * e[0]) / cells;
            let s2 = (x.rows(ns, ns).sum() - nf * e[1]) / cells;
            [-height * s1, -height * s2]
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pattern;

    fn mask(p: &str, n: usize) -> PatternMask {
        let pattern: Pattern = p.parse().unwrap();
        rasterize(
            &pattern,
            &UnitCellGrid::new(n, TopCondition::HalfSpace).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn degenerate_masks_rejected() {
        let empty = mask("disk:0", 16);
        assert_eq!(
            solve_cell(&CellProblem::new(
                empty,
                TopCondition::HalfSpace,
                [1.0, 0.0]
            ))
            .unwrap_err(),
            Error::PerfectSlip
        );
        let full = PatternMask::from_cells(16, vec![true; 256]).unwrap();
        assert_eq!(
            solve_cell(&CellProblem::new(full, TopCondition::HalfSpace, [1.0, 0.0])).unwrap_err(),
            Error::FullyNoSlip
        );
    }

    #[test]
    fn solution_invariants_hold() {
        for top in [
            TopCondition::HalfSpace,
            TopCondition::TractionFree { height: 0.5 },
            TopCondition::NoSlip { height: 2.0 },
        ] {
            let m = mask("disk:0.25", 32);
            let sol = solve_cell(&CellProblem::new(m.clone(), top, [0.6, 0.8])).unwrap();
            for (idx, &s) in m.cells().iter().enumerate() {
                if !s {
                    assert_eq!(sol.shear.c1[idx], -0.6);
                    assert_eq!(sol.shear.c2[idx], -0.8);
                }
            }
            assert!(
                sol.constraint_residual < 1e-8,
                "{top}: {}",
                sol.constraint_residual
            );
            if !matches!(top, TopCondition::NoSlip { .. }) {
                assert!(sol.mean_shear[0].abs() < 1e-9 && sol.mean_shear[1].abs() < 1e-9);
            }
            assert!(sol.energy_check() < 1e-8, "{top}: {}", sol.energy_check());
            assert!(sol.slip_length() > 0.0);
        }
    }

    #[test]
    fn iterative_matches_dense_direct() {
        for top in [
            TopCondition::HalfSpace,
            TopCondition::NoSlip { height: 1.5 },
        ] {
            let m = mask("rect:0.3,0.55", 16);
            let p = CellProblem::new(m, top, [1.0, 0.0]);
            let it = solve_cell(&p).unwrap();
            let dense = solve_cell_dense(&p).unwrap();
            assert!(
                (it.mean_slip[0] - dense[0]).abs() < 1e-9 * dense[0].abs(),
                "{top}"
            );
            assert!((it.mean_slip[1] - dense[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn preconditioner_gives_same_answer() {
        let m = mask("square:0.4", 32);
        let plain = solve_cell(&CellProblem::new(
            m.clone(),
            TopCondition::HalfSpace,
            [1.0, 0.0],
        ))
        .unwrap();
        let pre = solve_cell(
            &CellProblem::new(m, TopCondition::HalfSpace, [1.0, 0.0]).with_options(SolverOptions {
                preconditioner: true,
                ..SolverOptions::default()
            }),
        )
        .unwrap();
        assert!((plain.slip_length() - pre.slip_length()).abs() < 1e-9 * plain.slip_length());
    }

    #[test]
    fn nearly_solid_wall_has_small_slip() {
        let mut prev = f64::INFINITY;
        for n in [16, 32, 64] {
            let mut cells = vec![true; n * n];
            cells[(n / 2) * n + n / 2] = false;
            let m = PatternMask::from_cells(n, cells).unwrap();
            let sol =
                solve_cell(&CellProblem::new(m, TopCondition::HalfSpace, [1.0, 0.0])).unwrap();
            let c = sol.slip_length();
            assert!(c > 0.0 && c < prev);
            prev = c;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn richardson_recovers_known_limit() {
        let ns = [64, 128, 256, 512];
        let values: Vec<f64> = ns.iter().map(|&n| 2.0 + 3.0 / n as f64).collect();
        let ex = richardson(&ns, &values).unwrap();
        assert!(ex.extrapolated);
        assert!((ex.value - 2.0).abs() < 1e-12);
        assert!((ex.order.unwrap() - 1.0).abs() < 1e-9);

        let flat = richardson(&ns, &[1.5, 1.5, 1.5, 1.5]).unwrap();
        assert!(!flat.extrapolated && flat.value == 1.5 && flat.order.is_none());

        let zigzag = richardson(&ns, &[1.0, 1.2, 1.1, 1.15]).unwrap();
        assert!(!zigzag.extrapolated && zigzag.value == 1.15);

        assert!(richardson(&[64, 128], &[1.0, 2.0]).is_err());
        assert!(richardson(&[64, 128, 200], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn slip_matrix_of_symmetric_pattern_is_diagonal() {
        let sm = slip_matrix(
            &"disk:0.2".parse().unwrap(),
            &UnitCellGrid::new(32, TopCondition::HalfSpace).unwrap(),
            SolverOptions::default(),
        )
        .unwrap();
        assert!(sm.is_diagonal(1e-8));
        assert!(sm.is_symmetric(1e-8));
        assert!((sm.v[0][0] - sm.v[1][1]).abs() < 1e-8 * sm.v[0][0]);
        assert!(sm.is_positive_semidefinite(1e-10));
    }
}
