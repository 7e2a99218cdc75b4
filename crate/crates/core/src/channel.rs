//! Effective channel flows `0 < x₃ < 1` driven by `f = 2e`, the wall law
//! implied by a slip matrix, and the trace/gradient Poincaré diagnostic.

use serde::Serialize;

use crate::cell_solver::{CellSolution, SlipMatrix};
use crate::error::{Error, Result};

type Mat2 = [[f64; 2]; 2];

fn mat_vec(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn inverse(m: &Mat2) -> Option<Mat2> {
    let d = det(m);
    let scale = m.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
    if !(d.abs() > 1e-14 * scale * scale) || !d.is_finite() {
        return None;
    }
    Some([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
}

fn sym_eigs(m: &Mat2) -> [f64; 2] {
    let s = 0.5 * (m[0][1] + m[1][0]);
    let mean = 0.5 * (m[0][0] + m[1][1]);
    let r = (0.25 * (m[0][0] - m[1][1]).powi(2) + s * s).sqrt();
    [mean - r, mean + r]
}

/// Condition imposed at `x₃ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum WallLaw {
    Dirichlet,
    PerfectSlip,
    /// `∂₃u_h = M u_h`.
    Navier {
        m: Mat2,
    },
}

impl WallLaw {
    pub fn navier(m: Mat2) -> Result<Self> {
        let law = WallLaw::Navier { m };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        if let WallLaw::Navier { m } = self {
            if m.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("Navier matrix"));
            }
            let scale = m.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
            if (m[0][1] - m[1][0]).abs() > 1e-12 * scale {
                return Err(Error::InvalidArgument(
                    "Navier matrix must be symmetric".into(),
                ));
            }
            if sym_eigs(m)[0] < -1e-12 * scale {
                return Err(Error::InvalidArgument(
                    "Navier matrix must be non-negative".into(),
                ));
            }
        }
        Ok(())
    }
}

/// `u(x₃) = −x₃² e + a x₃ + b` (vector coefficients).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelProfile {
    pub direction: [f64; 2],
    pub a: [f64; 2],
    pub b: [f64; 2],
    /// `e·u(0) / e·u'(0)` along the forcing, `inf` for perfect slip.
    pub slip_length: f64,
}

impl ChannelProfile {
    pub fn velocity(&self, x3: f64) -> [f64; 2] {
        let e = self.direction;
        [
            -x3 * x3 * e[0] + self.a[0] * x3 + self.b[0],
            -x3 * x3 * e[1] + self.a[1] * x3 + self.b[1],
        ]
    }

    pub fn shear(&self, x3: f64) -> [f64; 2] {
        let e = self.direction;
        [-2.0 * x3 * e[0] + self.a[0], -2.0 * x3 * e[1] + self.a[1]]
    }

    /// Component along the forcing direction.
    pub fn along(&self, x3: f64) -> f64 {
        let u = self.velocity(x3);
        u[0] * self.direction[0] + u[1] * self.direction[1]
    }

    /// `∫₀¹ u·e`.
    pub fn flow_rate(&self) -> f64 {
        let e = self.direction;
        let dot = |v: [f64; 2]| v[0] * e[0] + v[1] * e[1];
        -1.0 / 3.0 + 0.5 * dot(self.a) + dot(self.b)
    }

    /// `(x₃, u·e)` at `points` uniformly spaced heights including both walls.
    pub fn sample(&self, points: usize) -> Vec<(f64, f64)> {
        let m = points.max(2) - 1;
        (0..=m)
            .map(|i| {
                let x = i as f64 / m as f64;
                (x, self.along(x))
            })
            .collect()
    }
}

fn unit(e: [f64; 2]) -> Result<[f64; 2]> {
    let norm = e[0].hypot(e[1]);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::InvalidArgument(
            "forcing direction must be a nonzero vector".into(),
        ));
    }
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "forcing direction must be a unit vector, |e| = {norm}"
        )));
    }
    Ok(e)
}

/// Scalar slip length `ℓ ∈ [0, ∞]`: `−u'' = 2`, `u(1) = 0`, `ℓ u'(0) = u(0)`.
pub fn navier_profile(slip_length: f64, e: [f64; 2]) -> Result<ChannelProfile> {
    let e = unit(e)?;
    if slip_length.is_nan() || slip_length < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "slip length must be in [0, inf], got {slip_length}"
        )));
    }
    let (a, b) = if slip_length.is_infinite() {
        (0.0, 1.0)
    } else {
        (1.0 / (1.0 + slip_length), slip_length / (1.0 + slip_length))
    };
    Ok(ChannelProfile {
        direction: e,
        a: [a * e[0], a * e[1]],
        b: [b * e[0], b * e[1]],
        slip_length,
    })
}

/// Profile under a general wall law; with `∂₃u = M u` at the wall,
/// `a = (I + M)⁻¹ M e` and `b = (I + M)⁻¹ e`.
pub fn channel_profile(law: &WallLaw, e: [f64; 2]) -> Result<ChannelProfile> {
    law.validate()?;
    let e = unit(e)?;
    match law {
        WallLaw::Dirichlet => navier_profile(0.0, e),
        WallLaw::PerfectSlip => navier_profile(f64::INFINITY, e),
        WallLaw::Navier { m } => {
            let ipm = [[1.0 + m[0][0], m[0][1]], [m[1][0], 1.0 + m[1][1]]];
            let inv =
                inverse(&ipm).ok_or_else(|| Error::InvalidArgument("I + M is singular".into()))?;
            let b = mat_vec(&inv, e);
            let a = [e[0] - b[0], e[1] - b[1]];
            let ua = a[0] * e[0] + a[1] * e[1];
            let ub = b[0] * e[0] + b[1] * e[1];
            let slip_length = if ua == 0.0 { f64::INFINITY } else { ub / ua };
            Ok(ChannelProfile {
                direction: e,
                a,
                b,
                slip_length,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WallLimit {
    Navier,
    /// `εV → 0`: adherence.
    Dirichlet,
    /// `εV` unbounded: infinite slip length.
    PerfectSlip,
}

/// Effective wall data built from a slip matrix at period `ε`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reconstruction {
    pub eps: f64,
    /// `u_h = εV ∂₃u_h` at the wall.
    pub slip_matrix: Mat2,
    /// Averaged slip velocity `εVe` for unit shear `e`.
    pub predicted_slip: [f64; 2],
    pub predicted_shear: [f64; 2],
    /// `M ≈ (εV)⁻¹` when `εV` is invertible.
    pub navier_matrix: Option<Mat2>,
    pub limit: WallLimit,
}

impl Reconstruction {
    pub fn wall_law(&self) -> WallLaw {
        match (self.limit, self.navier_matrix) {
            (WallLimit::Navier, Some(m)) => WallLaw::Navier { m: symmetrize(m) },
            (WallLimit::PerfectSlip, _) => WallLaw::PerfectSlip,
            _ => WallLaw::Dirichlet,
        }
    }
}

fn symmetrize(m: Mat2) -> Mat2 {
    let s = 0.5 * (m[0][1] + m[1][0]);
    [[m[0][0], s], [s, m[1][1]]]
}

pub fn reconstruct(v: &SlipMatrix, eps: f64, e: [f64; 2]) -> Result<Reconstruction> {
    reconstruct_matrix(&v.v, eps, e)
}

pub fn reconstruct_matrix(v: &Mat2, eps: f64, e: [f64; 2]) -> Result<Reconstruction> {
    let e = unit(e)?;
    if !(eps > 0.0) || eps.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "period must be positive, got {eps}"
        )));
    }
    let ev = [
        [eps * v[0][0], eps * v[0][1]],
        [eps * v[1][0], eps * v[1][1]],
    ];
    if ev.iter().flatten().any(|x| x.is_infinite()) {
        return Ok(Reconstruction {
            eps,
            slip_matrix: ev,
            predicted_slip: [f64::INFINITY * e[0].signum(), f64::INFINITY * e[1].signum()],
            predicted_shear: [0.0, 0.0],
            navier_matrix: Some([[0.0; 2]; 2]),
            limit: WallLimit::PerfectSlip,
        });
    }
    if ev.iter().flatten().any(|x| x.is_nan()) {
        return Err(Error::NonFinite("slip matrix"));
    }
    let navier_matrix = inverse(&ev);
    Ok(Reconstruction {
        eps,
        slip_matrix: ev,
        predicted_slip: mat_vec(&ev, e),
        predicted_shear: e,
        limit: if navier_matrix.is_some() {
            WallLimit::Navier
        } else {
            WallLimit::Dirichlet
        },
        navier_matrix,
    })
}

/// `η(ε)` without and with the constant `C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoincareBound {
    pub eps: f64,
    pub a_eps: f64,
    pub alpha: f64,
    pub c: f64,
    /// `[ε, a²α²/ε, 27√3 ε²/(aα)]`.
    pub terms: [f64; 3],
    /// `C` times the sum of the terms.
    pub eta: f64,
    /// False when `a_ε ≤ ε²`, where the last term does not vanish.
    pub applicable: bool,
}

impl PoincareBound {
    pub fn scaling(&self) -> f64 {
        self.terms.iter().sum()
    }
}

pub fn poincare_eta(eps: f64, a_eps: f64, alpha: f64, c: f64) -> Result<PoincareBound> {
    if !(eps > 0.0 && a_eps > 0.0 && alpha > 0.0 && c >= 0.0) || !(eps.is_finite() && c.is_finite())
    {
        return Err(Error::InvalidArgument(
            "Poincare bound needs eps, a_eps, alpha > 0 and C >= 0".into(),
        ));
    }
    if a_eps >= eps {
        return Err(Error::InvalidArgument(format!(
            "a_eps = {a_eps} must be smaller than eps = {eps}"
        )));
    }
    let terms = [
        eps,
        a_eps * a_eps * alpha * alpha / eps,
        27.0 * 3f64.sqrt() * eps * eps / (a_eps * alpha),
    ];
    Ok(PoincareBound {
        eps,
        a_eps,
        alpha,
        c,
        terms,
        eta: c * terms.iter().sum::<f64>(),
        applicable: a_eps > eps * eps,
    })
}

/// Trace-to-gradient ratio of the boundary-layer velocity at period `ε`:
/// `ε·⟨|w|²⟩_wall / (c·e)`, with `w` the cell wall velocity (zero on the
/// no-slip cells) and `c·e` its dissipation per cell.
pub fn poincare_ratio(solution: &CellSolution, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "period must be positive, got {eps}"
        )));
    }
    let energy = solution.total_energy();
    if !(energy > 0.0) {
        return Err(Error::InvalidArgument(
            "cell solution has no dissipation".into(),
        ));
    }
    Ok(eps * solution.trace_norm_sq() / energy)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Second-order finite differences with a ghost node at the wall.
    fn fd_profile(slip_length: f64, m: usize) -> Vec<f64> {
        let h = 1.0 / m as f64;
        let mut mat = nalgebra::DMatrix::<f64>::zeros(m, m);
        let mut rhs = nalgebra::DVector::<f64>::from_element(m, 2.0 * h * h);
        for i in 0..m {
            mat[(i, i)] = 2.0;
            if i + 1 < m {
                mat[(i, i + 1)] = -1.0;
            }
            if i > 0 {
                mat[(i, i - 1)] = -1.0;
            }
        }
        // u_{-1} = u_1 − 2h u_0 / ℓ ; perfect slip when ℓ = ∞.
        if slip_length == 0.0 {
            mat[(0, 0)] = 1.0;
            mat[(0, 1)] = 0.0;
            rhs[0] = 0.0;
        } else {
            let robin = if slip_length.is_infinite() {
                0.0
            } else {
                2.0 * h / slip_length
            };
            mat[(0, 0)] = 2.0 + robin;
            mat[(0, 1)] = -2.0;
        }
        mat.lu().solve(&rhs).unwrap().iter().copied().collect()
    }

    #[test]
    fn profile_matches_finite_differences() {
        for l in [0.0, 0.1, 1.0, 7.5, f64::INFINITY] {
            let p = navier_profile(l, [1.0, 0.0]).unwrap();
            let m = 200;
            let fd = fd_profile(l, m);
            for (i, u) in fd.iter().enumerate() {
                let x = i as f64 / m as f64;
                assert!((p.along(x) - u).abs() < 1e-10, "l={l} x={x}");
            }
        }
    }

    #[test]
    fn profile_endpoints_and_bcs() {
        let poiseuille = navier_profile(0.0, [0.0, 1.0]).unwrap();
        for x in [0.0, 0.3, 0.7, 1.0] {
            assert!((poiseuille.along(x) + x * (x - 1.0)).abs() < 1e-15);
        }
        let free = navier_profile(f64::INFINITY, [1.0, 0.0]).unwrap();
        assert_eq!(free.shear(0.0), [0.0, 0.0]);
        assert!((free.along(0.5) - 0.75).abs() < 1e-15);
        let half = navier_profile(1.0, [1.0, 0.0]).unwrap();
        assert_eq!(half.along(0.0), 0.5);
        for l in [0.0, 0.2, 1.0, 3.0, 1e6] {
            let p = navier_profile(l, [0.6, 0.8]).unwrap();
            assert!(p.along(1.0).abs() < 1e-14);
            let s = p.shear(0.0);
            let u = p.velocity(0.0);
            assert!(
                (l * (s[0] * 0.6 + s[1] * 0.8) - (u[0] * 0.6 + u[1] * 0.8)).abs()
                    < 1e-14 * (1.0 + l)
            );
        }
        assert!(navier_profile(-1.0, [1.0, 0.0]).is_err());
    }

    #[test]
    fn flow_rate_increases_with_slip() {
        let mut prev = f64::NEG_INFINITY;
        for i in 0..200 {
            let q = navier_profile(i as f64 * 0.05, [1.0, 0.0])
                .unwrap()
                .flow_rate();
            assert!(q > prev);
            prev = q;
        }
        assert!((navier_profile(0.0, [1.0, 0.0]).unwrap().flow_rate() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn navier_law_with_matrix() {
        assert!(WallLaw::navier([[1.0, 0.5], [0.4, 1.0]]).is_err());
        assert!(WallLaw::navier([[-1.0, 0.0], [0.0, 1.0]]).is_err());
        let law = WallLaw::navier([[2.0, 0.0], [0.0, 4.0]]).unwrap();
        let p = channel_profile(&law, [1.0, 0.0]).unwrap();
        let q = navier_profile(0.5, [1.0, 0.0]).unwrap();
        assert!((p.a[0] - q.a[0]).abs() < 1e-15 && (p.b[0] - q.b[0]).abs() < 1e-15);
        assert!((p.slip_length - 0.5).abs() < 1e-15);
    }

    #[test]
    fn reconstruction_limits() {
        let r = reconstruct_matrix(&[[0.2, 0.0], [0.0, 0.1]], 0.5, [1.0, 0.0]).unwrap();
        assert_eq!(r.limit, WallLimit::Navier);
        let m = r.navier_matrix.unwrap();
        assert!((m[0][0] - 10.0).abs() < 1e-12 && (m[1][1] - 20.0).abs() < 1e-12);
        assert!((r.predicted_slip[0] - 0.1).abs() < 1e-15);

        let stuck = reconstruct_matrix(&[[0.0, 0.0], [0.0, 0.0]], 0.1, [1.0, 0.0]).unwrap();
        assert_eq!(stuck.limit, WallLimit::Dirichlet);
        let p = channel_profile(&stuck.wall_law(), [1.0, 0.0]).unwrap();
        assert_eq!(p.along(0.0), 0.0);

        let free = reconstruct_matrix(
            &[[f64::INFINITY, 0.0], [0.0, f64::INFINITY]],
            0.1,
            [1.0, 0.0],
        )
        .unwrap();
        assert_eq!(free.limit, WallLimit::PerfectSlip);
        let p = channel_profile(&free.wall_law(), [1.0, 0.0]).unwrap();
        assert_eq!(p.along(0.0), 1.0);

        // Large and small Navier slip approach the two limits.
        let big = channel_profile(
            &reconstruct_matrix(&[[1e9, 0.0], [0.0, 1e9]], 1.0, [1.0, 0.0])
                .unwrap()
                .wall_law(),
            [1.0, 0.0],
        )
        .unwrap();
        assert!((big.along(0.0) - 1.0).abs() < 1e-8);
        let small = channel_profile(
            &reconstruct_matrix(&[[1e-9, 0.0], [0.0, 1e-9]], 1.0, [1.0, 0.0])
                .unwrap()
                .wall_law(),
            [1.0, 0.0],
        )
        .unwrap();
        assert!(small.along(0.0).abs() < 1e-8);
    }

    #[test]
    fn eta_formula() {
        let eps: f64 = 0.01;
        let b = poincare_eta(eps, eps.powf(1.5), 1.0, 1.0).unwrap();
        let expect = eps + eps * eps + 27.0 * 3f64.sqrt() * eps.sqrt();
        assert!((b.eta - expect).abs() < 1e-14 * expect);
        assert!(b.applicable);
        let b3 = poincare_eta(eps, eps.powf(1.5), 1.0, 3.0).unwrap();
        assert!((b3.eta - 3.0 * b.eta).abs() < 1e-14 * b.eta);
        let sub = poincare_eta(eps, eps.powi(3), 1.0, 1.0).unwrap();
        assert!(!sub.applicable);
        assert!((sub.terms[2] - 27.0 * 3f64.sqrt() / eps).abs() < 1e-9);
        assert!(poincare_eta(0.1, 0.2, 1.0, 1.0).is_err());
    }
}
