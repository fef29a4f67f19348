//! Conjugate gradients for the implicit diffusion systems
//! `(D - dt sigma Lap) x = b`, `D` a positive diagonal.

use thiserror::Error;

use crate::grid::{apply_laplacian, Grid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgSettings {
    /// Stop once `||b - A x|| <= rel_tol ||b||`.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for CgSettings {
    fn default() -> Self {
        CgSettings {
            rel_tol: 1e-10,
            max_iter: 5000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub rel_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinearSolveError {
    #[error("conjugate gradients did not converge: {iterations} iterations, relative residual {rel_residual:e}")]
    Diverged {
        iterations: usize,
        rel_residual: f64,
    },
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unpreconditioned CG for an SPD operator given as `apply(x, out)`. `x` holds the
/// initial guess on entry and the solution on exit.
pub fn conjugate_gradient<F>(
    mut apply: F,
    b: &[f64],
    x: &mut [f64],
    settings: &CgSettings,
) -> Result<CgStats, LinearSolveError>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = b.len();
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.fill(0.0);
        return Ok(CgStats {
            iterations: 0,
            rel_residual: 0.0,
        });
    }
    let mut ap = vec![0.0; n];
    apply(x, &mut ap);
    let mut r: Vec<f64> = b.iter().zip(&ap).map(|(bi, ai)| bi - ai).collect();
    let mut p = r.clone();
    let mut rs = dot(&r, &r);
    let target = settings.rel_tol * b_norm;
    let mut iterations = 0;
    while rs.sqrt() > target {
        if iterations >= settings.max_iter {
            return Err(LinearSolveError::Diverged {
                iterations,
                rel_residual: rs.sqrt() / b_norm,
            });
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(LinearSolveError::Diverged {
                iterations,
                rel_residual: rs.sqrt() / b_norm,
            });
        }
        let alpha = rs / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new = dot(&r, &r);
        let beta = rs_new / rs;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs = rs_new;
        iterations += 1;
    }
    Ok(CgStats {
        iterations,
        rel_residual: rs.sqrt() / b_norm,
    })
}

/// `(D - dt sigma Lap)` with mirror-ghost Neumann Laplacian. `D = 1` when `diag`
/// is `None`.
#[derive(Debug, Clone, Copy)]
pub struct ImplicitDiffusion<'a> {
    pub grid: &'a Grid,
    pub dt_sigma: f64,
    pub diag: Option<&'a [f64]>,
}

impl ImplicitDiffusion<'_> {
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        apply_laplacian(self.grid, -self.dt_sigma, x, out);
        match self.diag {
            Some(d) => {
                for ((o, xi), di) in out.iter_mut().zip(x).zip(d) {
                    *o += di * xi;
                }
            }
            None => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o += xi;
                }
            }
        }
    }

    /// Solves `A x = b` by CG, then shifts `x` by a constant so that
    /// `sum(A x) = sum(b)` up to rounding. `Lap` annihilates constants, so the
    /// shift only touches the diagonal part; it removes the mass defect the CG
    /// residual would otherwise leave behind.
    pub fn solve(
        &self,
        b: &[f64],
        x: &mut [f64],
        settings: &CgSettings,
    ) -> Result<CgStats, LinearSolveError> {
        let stats = conjugate_gradient(|v, out| self.apply(v, out), b, x, settings)?;
        let mut ax = vec![0.0; x.len()];
        self.apply(x, &mut ax);
        let defect: f64 = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).sum();
        let weight: f64 = match self.diag {
            Some(d) => d.iter().sum(),
            None => x.len() as f64,
        };
        let shift = defect / weight;
        x.iter_mut().for_each(|xi| *xi += shift);
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    #[test]
    fn diagonal_system() {
        let d = [2.0, 3.0, 4.0];
        let b = [2.0, 6.0, 12.0];
        let mut x = [0.0; 3];
        let stats = conjugate_gradient(
            |v, out| {
                for i in 0..3 {
                    out[i] = d[i] * v[i];
                }
            },
            &b,
            &mut x,
            &CgSettings::default(),
        )
        .unwrap();
        assert!(stats.iterations <= 3);
        for (xi, want) in x.iter().zip([1.0, 2.0, 3.0]) {
            assert!((xi - want).abs() < 1e-10);
        }
    }

    #[test]
    fn implicit_diffusion_solve_and_mass() {
        let grid = Grid::new(20, 17).unwrap();
        let mut rng = StdRng::seed_from_u64(3);
        let diag: Vec<f64> = (0..grid.len())
            .map(|_| 1.0 + rng.gen_range(0.0..0.3))
            .collect();
        let b: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let op = ImplicitDiffusion {
            grid: &grid,
            dt_sigma: 0.01,
            diag: Some(&diag),
        };
        let mut x = vec![0.0; grid.len()];
        op.solve(&b, &mut x, &CgSettings::default()).unwrap();
        let mut ax = vec![0.0; grid.len()];
        op.apply(&x, &mut ax);
        let err = ax
            .iter()
            .zip(&b)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-9);
        let mass_defect: f64 = ax.iter().sum::<f64>() - b.iter().sum::<f64>();
        assert!(mass_defect.abs() < 1e-12);
    }

    #[test]
    fn iteration_cap_reports_divergence() {
        let grid = Grid::square(32).unwrap();
        let b: Vec<f64> = (0..grid.len()).map(|i| (i % 7) as f64).collect();
        let op = ImplicitDiffusion {
            grid: &grid,
            dt_sigma: 1.0,
            diag: None,
        };
        let mut x = vec![0.0; grid.len()];
        let settings = CgSettings {
            rel_tol: 1e-14,
            max_iter: 2,
        };
        assert!(matches!(
            op.solve(&b, &mut x, &settings),
            Err(LinearSolveError::Diverged { iterations: 2, .. })
        ));
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let grid = Grid::square(4).unwrap();
        let op = ImplicitDiffusion {
            grid: &grid,
            dt_sigma: 0.1,
            diag: None,
        };
        let mut x = vec![1.0; 16];
        op.solve(&[0.0; 16], &mut x, &CgSettings::default())
            .unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
    }
}
