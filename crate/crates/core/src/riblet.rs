//! Stripe (riblet) patterns: closed-form slip lengths and a 1-D solver on
//! the periodic wall normal to the stripes.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::cell_solver::{richardson, Extrapolation, SolverOptions};
use crate::error::{Error, Result};
use crate::geometry::check_grid_size;
use crate::krylov::{minres, KrylovOptions, LinearOperator};
use crate::wall_operator::{
    zero_mode_rule, StripeGain, TopCondition, WallOperator1d, ZeroModeRule,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Flow along the stripes.
    Parallel,
    /// Flow across the stripes.
    Perpendicular,
}

impl Orientation {
    pub fn gain(self) -> StripeGain {
        match self {
            Orientation::Parallel => StripeGain::Laplace,
            Orientation::Perpendicular => StripeGain::Longitudinal,
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Parallel => "parallel",
            Orientation::Perpendicular => "perpendicular",
        })
    }
}

impl FromStr for Orientation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "parallel" | "par" => Ok(Orientation::Parallel),
            "perpendicular" | "perp" => Ok(Orientation::Perpendicular),
            _ => Err(Error::InvalidArgument(format!("unknown orientation '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RibletCase {
    pub orientation: Orientation,
    pub solid_fraction: f64,
    pub n: usize,
    pub top: TopCondition,
}

impl RibletCase {
    pub fn new(
        orientation: Orientation,
        solid_fraction: f64,
        n: usize,
        top: TopCondition,
    ) -> Result<Self> {
        let case = Self {
            orientation,
            solid_fraction,
            n,
            top,
        };
        case.validate()?;
        Ok(case)
    }

    fn validate(&self) -> Result<()> {
        if !(self.solid_fraction > 0.0 && self.solid_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "riblet solid fraction must lie in (0, 1), got {}",
                self.solid_fraction
            )));
        }
        check_grid_size(self.n)?;
        self.top.validate()
    }
}

/// Exact half-space slip length of a stripe pattern with solid fraction
/// `phi`, in cell-period units. `phi = 1` gives zero; `phi = 0` has no
/// finite slip length.
pub fn exact_slip(phi: f64, orientation: Orientation) -> Result<f64> {
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::InvalidArgument(format!(
            "solid fraction must lie in [0, 1], got {phi}"
        )));
    }
    if phi == 0.0 {
        return Err(Error::PerfectSlip);
    }
    exact_slip_ln(phi.ln(), orientation)
}

/// [`exact_slip`] from `ln(phi)`, for fractions too small to represent.
pub fn exact_slip_ln(ln_phi: f64, orientation: Orientation) -> Result<f64> {
    if !(ln_phi <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ln(phi) must be non-positive, got {ln_phi}"
        )));
    }
    // cos(π(1−φ)/2) = sin(πφ/2)
    let x = 0.5 * PI * ln_phi.exp();
    let ln_sin = if x < 1e-4 {
        (0.5 * PI).ln() + ln_phi - x * x / 6.0
    } else {
        x.sin().ln()
    };
    let parallel = -ln_sin / PI;
    Ok(match orientation {
        Orientation::Parallel => parallel,
        Orientation::Perpendicular => 0.5 * parallel,
    })
}

/// 1-D solve on one stripe raster.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StripeSolution {
    pub slip: f64,
    pub solid_fraction_raster: f64,
    pub iterations: usize,
    pub residual: f64,
    /// Relative mismatch between the slip length and the dissipation.
    pub energy_check: f64,
    pub constraint_residual: f64,
}

struct StripeOperator<'a> {
    op: &'a WallOperator1d,
    solid: &'a [usize],
    rule: ZeroModeRule,
    scale: f64,
    field: Vec<f64>,
    out: Vec<f64>,
    buf: Vec<Complex64>,
}

impl LinearOperator for StripeOperator<'_> {
    fn dim(&self) -> usize {
        self.solid.len() + usize::from(matches!(self.rule, ZeroModeRule::ZeroMeanShear))
    }

    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        let ns = self.solid.len();
        for (k, &idx) in self.solid.iter().enumerate() {
            self.field[idx] = x[k];
        }
        self.op
            .apply_into(&self.field, &mut self.out, &mut self.buf);
        let sum: f64 = x[..ns].iter().sum();
        let c = match self.rule {
            ZeroModeRule::ZeroMeanShear => self.scale * x[ns],
            ZeroModeRule::MeanSlipFromShear { height } => -height * sum / self.op.n() as f64,
        };
        for (k, &idx) in self.solid.iter().enumerate() {
            y[k] = self.out[idx] + c;
        }
        if matches!(self.rule, ZeroModeRule::ZeroMeanShear) {
            y[ns] = self.scale * sum;
        }
    }
}

/// Slip length for unit shear over an explicit periodic 1-D mask.
pub fn solve_stripe_mask(
    solid: &[bool],
    top: TopCondition,
    orientation: Orientation,
    options: SolverOptions,
) -> Result<StripeSolution> {
    options.validate()?;
    let n = solid.len();
    let op = WallOperator1d::new(n, top, orientation.gain())?;
    let idx: Vec<usize> = (0..n).filter(|&i| solid[i]).collect();
    let ns = idx.len();
    if ns == 0 {
        return Err(Error::PerfectSlip);
    }
    if ns == n {
        return Err(Error::FullyNoSlip);
    }
    let nf = (n - ns) as f64;
    let rule = zero_mode_rule(top);

    let mut shear: Vec<f64> = solid.iter().map(|&s| if s { 0.0 } else { -1.0 }).collect();
    let forced = op.apply(&shear);
    let mut system = StripeOperator {
        op: &op,
        solid: &idx,
        rule,
        scale: 1.0,
        field: vec![0.0; n],
        out: vec![0.0; n],
        buf: Vec::with_capacity(n),
    };
    let mut rhs = vec![0.0; system.dim()];
    let base = match rule {
        ZeroModeRule::ZeroMeanShear => 0.0,
        ZeroModeRule::MeanSlipFromShear { height } => height * nf / n as f64,
    };
    for (k, &i) in idx.iter().enumerate() {
        rhs[k] = -forced[i] - base;
    }
    if matches!(rule, ZeroModeRule::ZeroMeanShear) {
        let first = rhs[..ns].iter().map(|r| r * r).sum::<f64>().sqrt();
        if first > 0.0 {
            system.scale = first / nf;
        }
        rhs[ns] = system.scale * nf;
    }
    let outcome = minres(
        &mut system,
        &rhs,
        None,
        KrylovOptions {
            tol: options.tol,
            max_iter: options.max_iter,
        },
    )?;
    for (k, &i) in idx.iter().enumerate() {
        shear[i] = outcome.x[k];
    }
    let mean_shear = shear.iter().sum::<f64>() / n as f64;
    let (slip, extra) = match rule {
        ZeroModeRule::ZeroMeanShear => (system.scale * outcome.x[ns], 0.0),
        ZeroModeRule::MeanSlipFromShear { height } => {
            (-height * mean_shear, height * mean_shear * mean_shear)
        }
    };
    let trace = op.apply(&shear);
    let constraint_residual = idx
        .iter()
        .map(|&i| (trace[i] + slip).abs())
        .fold(0.0, f64::max);
    let energy = op.energy(&shear) + extra;
    Ok(StripeSolution {
        slip,
        solid_fraction_raster: ns as f64 / n as f64,
        iterations: outcome.iterations,
        residual: outcome.residual,
        energy_check: (slip - energy).abs() / slip.abs().max(energy.abs()).max(f64::MIN_POSITIVE),
        constraint_residual,
    })
}

fn contiguous_mask(n: usize, count: usize) -> Vec<bool> {
    let start = (n - count) / 2;
    (0..n).map(|i| i >= start && i < start + count).collect()
}

/// Raw and fraction-matched 1-D results at one resolution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RibletSolve {
    /// Centered raster of the requested width.
    pub raw: StripeSolution,
    /// Interpolated between the two cell counts bracketing `φ·n`.
    pub matched: f64,
}

pub fn solve_riblet_1d(case: &RibletCase, options: SolverOptions) -> Result<RibletSolve> {
    case.validate()?;
    let n = case.n;
    let stripe = crate::geometry::rasterize_stripe(case.solid_fraction, n)?;
    let raw = solve_stripe_mask(&stripe, case.top, case.orientation, options)?;
    let target = case.solid_fraction * n as f64;
    let lo = (target.floor() as usize).clamp(1, n - 1);
    let hi = (lo + 1).min(n - 1);
    let solve_count = |count: usize| -> Result<f64> {
        if count == raw_count(&stripe) {
            return Ok(raw.slip);
        }
        Ok(solve_stripe_mask(
            &contiguous_mask(n, count),
            case.top,
            case.orientation,
            options,
        )?
        .slip)
    };
    let v_lo = solve_count(lo)?;
    let matched = if hi == lo || (target - lo as f64).abs() < 1e-12 {
        v_lo
    } else {
        let v_hi = solve_count(hi)?;
        v_lo + (target - lo as f64) * (v_hi - v_lo)
    };
    Ok(RibletSolve { raw, matched })
}

fn raw_count(mask: &[bool]) -> usize {
    mask.iter().filter(|&&s| s).count()
}

pub const DEFAULT_RIBLET_LEVELS: [usize; 4] = [256, 512, 1024, 2048];

/// Fraction-matched slip lengths over `ns` and their Richardson limit.
pub fn extrapolate_riblet(
    phi: f64,
    orientation: Orientation,
    top: TopCondition,
    ns: &[usize],
    options: SolverOptions,
) -> Result<(Vec<RibletSolve>, Extrapolation)> {
    let levels = ns
        .iter()
        .map(|&n| solve_riblet_1d(&RibletCase::new(orientation, phi, n, top)?, options))
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = levels.iter().map(|l| l.matched).collect();
    let ex = richardson(ns, &values)?;
    Ok((levels, ex))
}

/// Numeric limit of `ε·V(ε)` along `ε_m = 1/m`, `a_ε = exp(−C0/ε)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RibletLimit {
    pub c0: f64,
    /// `diag(π/C0, 2π/C0)`.
    pub matrix: [[f64; 2]; 2],
    pub ms: Vec<usize>,
    pub scaled_parallel: Vec<f64>,
    pub scaled_perpendicular: Vec<f64>,
    /// Sequence limits from a fit of `L + a ε ln ε + b ε` on the three
    /// finest terms.
    pub limit_parallel: f64,
    pub limit_perpendicular: f64,
    /// Largest `|εV − (−ε/π) ln(a_ε/ε)|` along the sequence (parallel).
    pub log_form_gap: f64,
}

impl RibletLimit {
    pub fn expected_parallel(&self) -> f64 {
        self.c0 / PI
    }

    pub fn expected_perpendicular(&self) -> f64 {
        self.c0 / (2.0 * PI)
    }
}

pub fn riblet_limit_matrix(c0: f64) -> Result<[[f64; 2]; 2]> {
    if !(c0 > 0.0 && c0.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "C0 must be positive, got {c0}"
        )));
    }
    Ok([[PI / c0, 0.0], [0.0, 2.0 * PI / c0]])
}

pub fn riblet_limit_check(c0: f64, ms: &[usize]) -> Result<RibletLimit> {
    let matrix = riblet_limit_matrix(c0)?;
    if ms.len() < 3 || ms.windows(2).any(|w| w[1] <= w[0]) || ms[0] == 0 {
        return Err(Error::InvalidArgument(
            "need at least 3 increasing positive m values".into(),
        ));
    }
    let mut scaled_parallel = Vec::with_capacity(ms.len());
    let mut scaled_perpendicular = Vec::with_capacity(ms.len());
    let mut log_form_gap: f64 = 0.0;
    for &m in ms {
        let eps = 1.0 / m as f64;
        let ln_a = -c0 / eps;
        // φ = a_ε / ε with a stripe of width a_ε per period ε.
        let ln_phi = ln_a - eps.ln();
        if ln_phi >= 0.0 {
            return Err(Error::InvalidArgument(format!("a_eps >= eps at m = {m}")));
        }
        let par = eps * exact_slip_ln(ln_phi, Orientation::Parallel)?;
        let perp = eps * exact_slip_ln(ln_phi, Orientation::Perpendicular)?;
        log_form_gap = log_form_gap.max((par + eps / PI * ln_phi).abs());
        scaled_parallel.push(par);
        scaled_perpendicular.push(perp);
    }
    let limit = |vals: &[f64]| -> Result<f64> {
        let k = ms.len();
        let rows: Vec<[f64; 3]> = ms[k - 3..]
            .iter()
            .map(|&m| {
                let e = 1.0 / m as f64;
                [1.0, e * e.ln(), e]
            })
            .collect();
        let a = nalgebra::Matrix3::from_fn(|i, j| rows[i][j]);
        let b = nalgebra::Vector3::new(vals[k - 3], vals[k - 2], vals[k - 1]);
        a.lu()
            .solve(&b)
            .map(|x| x[0])
            .ok_or_else(|| Error::InvalidArgument("degenerate limit sequence".into()))
    };
    Ok(RibletLimit {
        c0,
        matrix,
        ms: ms.to_vec(),
        limit_parallel: limit(&scaled_parallel)?,
        limit_perpendicular: limit(&scaled_perpendicular)?,
        scaled_parallel,
        scaled_perpendicular,
        log_form_gap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RibletRow {
    pub solid_fraction: f64,
    pub slip_parallel_exact: f64,
    pub slip_perp_exact: f64,
    pub slip_parallel_computed: Option<f64>,
    pub slip_perp_computed: Option<f64>,
}

/// Exact columns for every fraction; computed columns from extrapolated
/// 1-D solves when `ns` is given.
pub fn riblet_table(
    phis: &[f64],
    ns: Option<&[usize]>,
    top: TopCondition,
    options: SolverOptions,
) -> Result<Vec<RibletRow>> {
    phis.iter()
        .map(|&phi| {
            let computed = |o| -> Result<Option<f64>> {
                ns.map(|ns| extrapolate_riblet(phi, o, top, ns, options).map(|(_, e)| e.value))
                    .transpose()
            };
            Ok(RibletRow {
                solid_fraction: phi,
                slip_parallel_exact: exact_slip(phi, Orientation::Parallel)?,
                slip_perp_exact: exact_slip(phi, Orientation::Perpendicular)?,
                slip_parallel_computed: computed(Orientation::Parallel)?,
                slip_perp_computed: computed(Orientation::Perpendicular)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_formula_values() {
        let half = exact_slip(0.5, Orientation::Parallel).unwrap();
        assert!((half - 2f64.sqrt().ln() / PI).abs() < 1e-15);
        assert!((half - 0.110_318).abs() < 1e-6);
        assert_eq!(exact_slip(1.0, Orientation::Parallel).unwrap(), 0.0);
        assert_eq!(
            exact_slip(0.0, Orientation::Parallel),
            Err(Error::PerfectSlip)
        );
        assert!(exact_slip(1.5, Orientation::Parallel).is_err());
        let mut prev = f64::INFINITY;
        for i in 1..1000 {
            let phi = i as f64 / 1000.0;
            let p = exact_slip(phi, Orientation::Parallel).unwrap();
            let q = exact_slip(phi, Orientation::Perpendicular).unwrap();
            assert!(p < prev);
            assert!((p / q - 2.0).abs() < 1e-14);
            prev = p;
        }
    }

    #[test]
    fn log_form_agrees_across_branch() {
        for phi in [1e-3f64, 1e-4, 6.4e-5, 1e-5, 1e-9] {
            let direct = -(0.5 * PI * phi).sin().ln() / PI;
            assert!(
                (exact_slip_ln(phi.ln(), Orientation::Parallel).unwrap() / direct - 1.0).abs()
                    < 1e-13
            );
        }
    }

    #[test]
    fn raw_solve_converges_to_raster_fraction_formula() {
        let s = solve_stripe_mask(
            &crate::geometry::rasterize_stripe(0.3, 512).unwrap(),
            TopCondition::HalfSpace,
            Orientation::Parallel,
            SolverOptions::default(),
        )
        .unwrap();
        let exact = exact_slip(s.solid_fraction_raster, Orientation::Parallel).unwrap();
        assert!((s.slip / exact - 1.0).abs() < 0.01);
        assert!(s.energy_check < 1e-8);
        assert!(s.constraint_residual < 1e-9);
    }

    #[test]
    fn extrapolated_solve_matches_exact() {
        for o in [Orientation::Parallel, Orientation::Perpendicular] {
            let (_, ex) = extrapolate_riblet(
                0.3,
                o,
                TopCondition::HalfSpace,
                &[128, 256, 512],
                SolverOptions::default(),
            )
            .unwrap();
            let exact = exact_slip(0.3, o).unwrap();
            assert!(
                (ex.value / exact - 1.0).abs() < 5e-3,
                "{o}: {} vs {exact}",
                ex.value
            );
        }
    }

    #[test]
    fn no_slip_lid_reduces_slip() {
        let mask = crate::geometry::rasterize_stripe(0.5, 256).unwrap();
        let half = solve_stripe_mask(
            &mask,
            TopCondition::HalfSpace,
            Orientation::Parallel,
            SolverOptions::default(),
        )
        .unwrap();
        let lid = solve_stripe_mask(
            &mask,
            TopCondition::NoSlip { height: 0.3 },
            Orientation::Parallel,
            SolverOptions::default(),
        )
        .unwrap();
        assert!(lid.slip < half.slip && lid.slip > 0.0);
        assert!(lid.energy_check < 1e-8);
    }

    #[test]
    fn limit_matrix_and_sequence() {
        let m = riblet_limit_matrix(PI).unwrap();
        assert_eq!(m, [[1.0, 0.0], [0.0, 2.0]]);
        assert!(riblet_limit_matrix(0.0).is_err());
        let lim = riblet_limit_check(1.0, &[10, 25, 50, 100]).unwrap();
        assert!((lim.limit_parallel - 1.0 / PI).abs() < 1e-6);
        assert!((lim.limit_perpendicular - 0.5 / PI).abs() < 1e-6);
        assert!(lim.log_form_gap < 0.05);
    }
}
