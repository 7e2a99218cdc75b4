//! Independent check of the wall gains: the mode-wise Stokes system is
//! solved numerically in the wall-normal variable, with no use of the
//! closed forms.
//!
//! After scaling `y₃` by `κ`, a horizontal mode of wavenumber `κ` carries
//! the longitudinal velocity `u`, the transverse velocity `t`, and the
//! vertical velocity and pressure through real amplitudes `V = −i w₃`,
//! `P = −i q`. Momentum and incompressibility read
//!
//! ```text
//!   u'' = u − P,   t'' = t,   V' = −u,   P' = −u' − V,
//! ```
//!
//! written as a first-order system in `(u, u', t, t', V, P)` and collocated
//! on Chebyshev points of `[0, Λ]`, `Λ = κH`. Each boundary condition
//! replaces the collocated equation of one component at its endpoint.

use nalgebra::{DMatrix, DVector};

use super::{wavenumber, TopCondition, WallSymbol};
use crate::error::{Error, Result};

/// Depth (in units of `1/κ`) beyond which the slab is truncated; the
/// neglected coupling is `O(Λ² e^{−2Λ})`.
const TRUNCATION_DEPTH: f64 = 40.0;

/// Chebyshev points for a scaled depth `lam`. Few points suffice for thin
/// layers, and conditioning degrades if more are used there.
pub fn default_points(lam: f64) -> usize {
    (24.0 + 3.0 * lam).ceil().clamp(24.0, 160.0) as usize
}

/// Chebyshev–Gauss–Lobatto differentiation matrix on `x_j = cos(πj/(N−1))`.
fn cheb_diff(points: usize) -> (DMatrix<f64>, Vec<f64>) {
    let m = points - 1;
    let x: Vec<f64> = (0..points)
        .map(|j| (std::f64::consts::PI * j as f64 / m as f64).cos())
        .collect();
    let c: Vec<f64> = (0..points)
        .map(|j| {
            let base = if j == 0 || j == m { 2.0 } else { 1.0 };
            if j % 2 == 0 {
                base
            } else {
                -base
            }
        })
        .collect();
    let mut d = DMatrix::zeros(points, points);
    for i in 0..points {
        for j in 0..points {
            if i != j {
                d[(i, j)] = c[i] / c[j] / (x[i] - x[j]);
            }
        }
    }
    for i in 0..points {
        let row_sum: f64 = (0..points).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -row_sum;
    }
    (d, x)
}

#[derive(Clone, Copy)]
enum End {
    Wall,
    Top,
}

struct Bc {
    /// Component whose collocated equation is replaced.
    replaces: usize,
    at: End,
    coeffs: &'static [(usize, f64)],
    value: f64,
}

/// Solves `X' = A X` on `[0, lam]` with the given boundary conditions and
/// returns the state at the wall.
fn collocate(a: &[&[f64]], bcs: &[Bc], lam: f64, points: usize) -> Result<Vec<f64>> {
    let m = a.len();
    let (d, _) = cheb_diff(points);
    // x = 1 ↦ wall (y = 0), x = −1 ↦ top (y = lam); d/dy = −(2/lam) d/dx.
    let dy = d * (-2.0 / lam);
    let size = m * points;
    let mut mat = DMatrix::<f64>::zeros(size, size);
    let mut rhs = DVector::<f64>::zeros(size);
    for comp in 0..m {
        for i in 0..points {
            let row = comp * points + i;
            for j in 0..points {
                mat[(row, comp * points + j)] += dy[(i, j)];
            }
            for (other, &coef) in a[comp].iter().enumerate() {
                if coef != 0.0 {
                    mat[(row, other * points + i)] -= coef;
                }
            }
        }
    }
    for bc in bcs {
        let node = match bc.at {
            End::Wall => 0,
            End::Top => points - 1,
        };
        let row = bc.replaces * points + node;
        for col in 0..size {
            mat[(row, col)] = 0.0;
        }
        for &(comp, coef) in bc.coeffs {
            mat[(row, comp * points + node)] += coef;
        }
        rhs[row] = bc.value;
    }
    let sol = mat
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidArgument("singular collocation system".into()))?;
    Ok((0..m).map(|comp| sol[comp * points]).collect())
}

/// Scaled gains `(longitudinal, transverse, laplace)` for depth `lam` with a
/// no-slip (`no_slip = true`) or traction-free top.
fn scaled_gains(lam: f64, no_slip: bool, points: usize) -> Result<(f64, f64, f64)> {
    const U: usize = 0;
    const U1: usize = 1;
    const T: usize = 2;
    const T1: usize = 3;
    const V: usize = 4;
    const P: usize = 5;
    let stokes: [&[f64]; 6] = [
        &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        &[1.0, 0.0, 0.0, 0.0, 0.0, -1.0],
        &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        &[-1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        &[0.0, -1.0, 0.0, 0.0, -1.0, 0.0],
    ];
    let mut bcs = vec![
        Bc {
            replaces: U1,
            at: End::Wall,
            coeffs: &[(U1, 1.0)],
            value: 1.0,
        },
        Bc {
            replaces: T1,
            at: End::Wall,
            coeffs: &[(T1, 1.0)],
            value: 1.0,
        },
        Bc {
            replaces: V,
            at: End::Wall,
            coeffs: &[(V, 1.0)],
            value: 0.0,
        },
    ];
    if no_slip {
        bcs.push(Bc {
            replaces: U,
            at: End::Top,
            coeffs: &[(U, 1.0)],
            value: 0.0,
        });
        bcs.push(Bc {
            replaces: T,
            at: End::Top,
            coeffs: &[(T, 1.0)],
            value: 0.0,
        });
        bcs.push(Bc {
            replaces: V,
            at: End::Top,
            coeffs: &[(V, 1.0)],
            value: 0.0,
        });
    } else {
        // ∂₃w_h = 0 and ∂₃w₃ − q = 0, with ∂₃w₃ = −i u  ⇒  −u − P = 0.
        bcs.push(Bc {
            replaces: U1,
            at: End::Top,
            coeffs: &[(U1, 1.0)],
            value: 0.0,
        });
        bcs.push(Bc {
            replaces: T1,
            at: End::Top,
            coeffs: &[(T1, 1.0)],
            value: 0.0,
        });
        bcs.push(Bc {
            replaces: P,
            at: End::Top,
            coeffs: &[(U, -1.0), (P, -1.0)],
            value: 0.0,
        });
    }
    let wall = collocate(&stokes, &bcs, lam, points)?;

    let laplace: [&[f64]; 2] = [&[0.0, 1.0], &[1.0, 0.0]];
    let top_bc = if no_slip {
        Bc {
            replaces: 0,
            at: End::Top,
            coeffs: &[(0, 1.0)],
            value: 0.0,
        }
    } else {
        Bc {
            replaces: 1,
            at: End::Top,
            coeffs: &[(1, 1.0)],
            value: 0.0,
        }
    };
    let lap = collocate(
        &laplace,
        &[
            Bc {
                replaces: 1,
                at: End::Wall,
                coeffs: &[(1, 1.0)],
                value: 1.0,
            },
            top_bc,
        ],
        lam,
        points,
    )?;
    Ok((wall[U], wall[T], lap[0]))
}

/// Wall gains computed from the mode ODEs, with a resolution picked from
/// the scaled depth.
pub fn ode_oracle(k: (i64, i64), top: TopCondition) -> Result<WallSymbol> {
    ode_oracle_with(k, top, None)
}

/// As [`ode_oracle`] with an explicit number of collocation points.
pub fn ode_oracle_with(
    k: (i64, i64),
    top: TopCondition,
    points: Option<usize>,
) -> Result<WallSymbol> {
    if k == (0, 0) {
        return Err(Error::ZeroWavevector);
    }
    top.validate()?;
    let kappa = wavenumber(k);
    let (lam, no_slip) = match top {
        // Decay at infinity, emulated by a deep no-slip lid.
        TopCondition::HalfSpace => (TRUNCATION_DEPTH, true),
        TopCondition::NoSlip { height } => ((kappa * height).min(TRUNCATION_DEPTH), true),
        TopCondition::TractionFree { height } => ((kappa * height).min(TRUNCATION_DEPTH), false),
    };
    let points = points.unwrap_or_else(|| default_points(lam));
    if points < 4 {
        return Err(Error::InvalidArgument(
            "collocation needs at least 4 points".into(),
        ));
    }
    let (g_long, g_tran, g_laplace) = scaled_gains(lam, no_slip, points)?;
    Ok(WallSymbol {
        k,
        g_long: g_long / kappa,
        g_tran: g_tran / kappa,
        g_laplace: g_laplace / kappa,
    })
}

/// Mean-mode (`k = 0`) slip for unit mean shear under a no-slip lid at
/// `height`, from the ODE `u'' = 0`, `u'(0) = 1`, `u(H) = 0` collocated on
/// `[0, H]`.
pub fn zero_mode_oracle(height: f64) -> Result<f64> {
    if !(height.is_finite() && height > 0.0) {
        return Err(Error::InvalidArgument(format!("bad height {height}")));
    }
    let a: [&[f64]; 2] = [&[0.0, 1.0], &[0.0, 0.0]];
    let wall = collocate(
        &a,
        &[
            Bc {
                replaces: 1,
                at: End::Wall,
                coeffs: &[(1, 1.0)],
                value: 1.0,
            },
            Bc {
                replaces: 0,
                at: End::Top,
                coeffs: &[(0, 1.0)],
                value: 0.0,
            },
        ],
        height,
        16,
    )?;
    Ok(wall[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wall_operator::symbol;
    use std::f64::consts::PI;

    #[test]
    fn differentiation_matrix_is_exact_on_polynomials() {
        let (d, x) = cheb_diff(12);
        for (i, &xi) in x.iter().enumerate() {
            let deriv: f64 = (0..12).map(|j| d[(i, j)] * x[j].powi(5)).sum();
            assert!((deriv - 5.0 * xi.powi(4)).abs() < 1e-11);
        }
    }

    #[test]
    fn laplace_no_slip_matches_tanh() {
        for (k, h) in [((1, 0), 0.3), ((2, 3), 0.1), ((0, 5), 1.0), ((1, 1), 0.01)] {
            let top = TopCondition::NoSlip { height: h };
            let kappa = wavenumber(k);
            let o = ode_oracle(k, top).unwrap();
            let exact = -(kappa * h).tanh() / kappa;
            assert!((o.g_laplace / exact - 1.0).abs() < 1e-8, "k={k:?} h={h}");
        }
    }

    #[test]
    fn deep_lid_tends_to_half_space_longitudinal_gain() {
        let mut prev = f64::INFINITY;
        for h in [0.1, 0.2, 0.4, 0.8, 1.6, 4.0] {
            let o = ode_oracle((1, 0), TopCondition::NoSlip { height: h }).unwrap();
            let err = (o.g_long + 1.0 / (4.0 * PI)).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-12);
    }

    #[test]
    fn transverse_equals_laplace_at_identical_mesh() {
        for top in [
            TopCondition::HalfSpace,
            TopCondition::NoSlip { height: 0.25 },
            TopCondition::TractionFree { height: 0.6 },
        ] {
            let o = ode_oracle_with((2, 1), top, Some(60)).unwrap();
            assert!(
                (o.g_tran - o.g_laplace).abs() <= 1e-12 * o.g_laplace.abs(),
                "{top}"
            );
        }
    }

    #[test]
    fn oracle_agrees_with_closed_forms() {
        for top in [
            TopCondition::HalfSpace,
            TopCondition::NoSlip { height: 0.05 },
            TopCondition::NoSlip { height: 1.3 },
            TopCondition::TractionFree { height: 0.02 },
            TopCondition::TractionFree { height: 0.7 },
        ] {
            for k in [(1, 0), (3, 4), (7, 1)] {
                let o = ode_oracle(k, top).unwrap();
                let s = symbol(k, top).unwrap();
                assert!((o.g_long / s.g_long - 1.0).abs() < 1e-8, "{top} {k:?}");
                assert!((o.g_tran / s.g_tran - 1.0).abs() < 1e-8, "{top} {k:?}");
            }
        }
    }

    #[test]
    fn mean_mode_under_lid() {
        let slip = zero_mode_oracle(10.0).unwrap();
        assert!((slip + 10.0).abs() < 1e-10);
    }
}
