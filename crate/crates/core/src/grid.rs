//! Uniform Cartesian discretization of the truncated cube `[-R, R]^n`.
//!
//! Unknowns live on interior nodes; boundary nodes carry the homogeneous
//! Dirichlet value and are never stored. Interior fields are row-major with
//! axis 0 varying slowest.
//!
//! Gradients live on faces (segments joining neighbouring nodes). A face
//! gradient has a normal component `(u_up - u_lo)/h` and, in 2-D, a
//! tangential component averaged from the centered differences at both
//! endpoints. σ is sampled at face midpoints, so a coefficient that vanishes
//! at a node is never divided by. The discrete energy
//!
//! ```text
//! E(u) = Σ_faces w_f σ_f |g_f(u)|^p
//! ```
//!
//! with `w_f = h` (1-D) or `h²/2` (2-D, both components) approximates
//! `∫ σ |∇u|^p`.

use alloc::vec::Vec;
use num_traits::Float;

use crate::model::ProblemSpec;
use crate::{Error, Result};

/// Which components enter the face gradient magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientStencil {
    /// Normal difference plus averaged tangential differences.
    #[default]
    Full,
    /// Normal difference only; the p = 2 operator is then the classic 5-point Laplacian.
    NormalOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub axis: usize,
    pub midpoint: [f64; 2],
    pub sigma: f64,
    /// Interior indices of the lower and upper endpoint; `None` is a Dirichlet node.
    pub normal: [Option<u32>; 2],
    /// 2-D only: `[lower + t, lower - t, upper + t, upper - t]` along the other axis.
    pub tangential: [Option<u32>; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n: usize,
    radius: f64,
    m: usize,
    h: f64,
    stencil: GradientStencil,
    coords: Vec<[f64; 2]>,
    beta: Vec<f64>,
    g: Vec<f64>,
    faces: Vec<Face>,
}

/// Discrete solution with its time stamp.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Vec<f64>,
    pub t: f64,
}

impl State {
    pub fn new(u: Vec<f64>, t: f64) -> Self {
        State { u, t }
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.u.iter().position(|v| !v.is_finite()) {
            Some(node) => Err(Error::NonFinite {
                node,
                value: self.u[node],
            }),
            None => Ok(()),
        }
    }
}

impl Grid {
    /// Samples σ at face midpoints and β, g at nodes of `[-radius, radius]^n`.
    pub fn new(spec: &ProblemSpec, radius: f64, m_per_axis: usize) -> Result<Self> {
        Self::with_stencil(spec, radius, m_per_axis, GradientStencil::Full)
    }

    pub fn with_stencil(spec: &ProblemSpec, radius: f64, m_per_axis: usize, stencil: GradientStencil) -> Result<Self> {
        let n = spec.n;
        if !(1..=2).contains(&n) {
            return Err(Error::invalid("grid supports dimensions 1 and 2"));
        }
        if m_per_axis < 3 {
            return Err(Error::invalid("need at least 3 nodes per axis"));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid("truncation radius must be positive"));
        }
        let m = m_per_axis;
        let h = 2.0 * radius / (m - 1) as f64;
        let mi = m - 2;
        let x = |i: usize| -radius + i as f64 * h;

        let count = mi.pow(n as u32);
        let mut coords = Vec::with_capacity(count);
        for idx in 0..count {
            coords.push(match n {
                1 => [x(idx + 1), 0.0],
                _ => [x(idx / mi + 1), x(idx % mi + 1)],
            });
        }
        fn at(c: &[f64; 2], n: usize) -> &[f64] {
            &c[..n]
        }
        let beta: Vec<f64> = coords.iter().map(|c| spec.beta.eval(at(c, n))).collect();
        let g: Vec<f64> = coords.iter().map(|c| spec.source_g.eval(at(c, n))).collect();

        let interior = |i: usize| -> Option<usize> { (i >= 1 && i <= m - 2).then(|| i - 1) };
        let node = |i0: usize, i1: usize| -> Option<u32> {
            match n {
                1 => interior(i0).map(|a| a as u32),
                _ => match (interior(i0), interior(i1)) {
                    (Some(a), Some(b)) => Some((a * mi + b) as u32),
                    _ => None,
                },
            }
        };

        let mut faces = Vec::new();
        if n == 1 {
            for i in 0..m - 1 {
                faces.push(Face {
                    axis: 0,
                    midpoint: [x(i) + 0.5 * h, 0.0],
                    sigma: 0.0,
                    normal: [node(i, 0), node(i + 1, 0)],
                    tangential: [None; 4],
                });
            }
        } else {
            for i in 0..m - 1 {
                for j in 1..m - 1 {
                    faces.push(Face {
                        axis: 0,
                        midpoint: [x(i) + 0.5 * h, x(j)],
                        sigma: 0.0,
                        normal: [node(i, j), node(i + 1, j)],
                        tangential: [node(i, j + 1), node(i, j - 1), node(i + 1, j + 1), node(i + 1, j - 1)],
                    });
                }
            }
            for i in 1..m - 1 {
                for j in 0..m - 1 {
                    faces.push(Face {
                        axis: 1,
                        midpoint: [x(i), x(j) + 0.5 * h],
                        sigma: 0.0,
                        normal: [node(i, j), node(i, j + 1)],
                        tangential: [node(i + 1, j), node(i - 1, j), node(i + 1, j + 1), node(i - 1, j + 1)],
                    });
                }
            }
        }
        for f in &mut faces {
            let s = spec.sigma.eval(&f.midpoint[..n]);
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::invalid(alloc::format!(
                    "σ = {s} at face midpoint {:?} (must be finite and nonnegative)",
                    &f.midpoint[..n]
                )));
            }
            f.sigma = s;
        }
        if let Some(k) = beta.iter().position(|b| !b.is_finite()) {
            return Err(Error::NonFinite {
                node: k,
                value: beta[k],
            });
        }

        Ok(Grid {
            n,
            radius,
            m,
            h,
            stencil,
            coords,
            beta,
            g,
            faces,
        })
    }

    /// Replaces the sampled source by an explicit nodal field (manufactured solutions).
    pub fn with_source_field(mut self, g: Vec<f64>) -> Result<Self> {
        self.check_len(&g)?;
        self.g = g;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn m_per_axis(&self) -> usize {
        self.m
    }
    pub fn spacing(&self) -> f64 {
        self.h
    }
    pub fn stencil(&self) -> GradientStencil {
        self.stencil
    }
    /// `h^n`, the quadrature weight of one node.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.n as i32)
    }
    pub fn len(&self) -> usize {
        self.coords.len()
    }
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
    /// Interior nodes per axis.
    pub fn interior_per_axis(&self) -> usize {
        self.m - 2
    }
    pub fn coord(&self, idx: usize) -> &[f64] {
        &self.coords[idx][..self.n]
    }
    pub fn beta_nodes(&self) -> &[f64] {
        &self.beta
    }
    pub fn g_nodes(&self) -> &[f64] {
        &self.g
    }
    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Quadrature weight of a face in the gradient energy.
    pub fn face_weight(&self) -> f64 {
        match (self.n, self.stencil) {
            (1, _) => self.h,
            (_, GradientStencil::Full) => 0.5 * self.h * self.h,
            (_, GradientStencil::NormalOnly) => self.h * self.h,
        }
    }

    pub fn uses_tangential(&self) -> bool {
        self.n == 2 && self.stencil == GradientStencil::Full
    }

    pub fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// Normal and tangential gradient components on `face`.
    #[inline]
    pub fn face_gradient(&self, u: &[f64], face: &Face) -> (f64, f64) {
        let val = |k: Option<u32>| k.map_or(0.0, |k| u[k as usize]);
        let gn = (val(face.normal[1]) - val(face.normal[0])) / self.h;
        let gt = if self.uses_tangential() {
            let t = &face.tangential;
            (val(t[0]) - val(t[1]) + val(t[2]) - val(t[3])) / (4.0 * self.h)
        } else {
            0.0
        };
        (gn, gt)
    }

    /// Faces whose midpoint lies in `region`.
    fn faces_in<'a>(&'a self, region: impl Fn(&[f64]) -> bool + 'a) -> impl Iterator<Item = &'a Face> + 'a {
        let n = self.n;
        self.faces.iter().filter(move |f| region(&f.midpoint[..n]))
    }

    /// `Σ_faces w_f σ_f^{[weighted]} |g_f|^q` over faces whose midpoint lies in `region`.
    pub fn grad_power_integral(&self, u: &[f64], q: f64, weighted: bool, region: impl Fn(&[f64]) -> bool) -> f64 {
        assert_eq!(u.len(), self.len(), "field does not match grid");
        let w = self.face_weight();
        self.faces_in(region)
            .map(|f| {
                let (gn, gt) = self.face_gradient(u, f);
                let s = if weighted { f.sigma } else { 1.0 };
                w * s * pow_of_square(gn * gn + gt * gt, q)
            })
            .sum()
    }

    /// Discrete `∫ σ |∇u|^p`.
    pub fn grad_p_energy(&self, u: &[f64], p: f64) -> f64 {
        self.grad_power_integral(u, p, true, |_| true)
    }

    /// `Σ_i h^n w(x_i) u_i^2` over nodes in `region`.
    pub fn weighted_square_integral(&self, u: &[f64], weight: Option<&[f64]>, region: impl Fn(&[f64]) -> bool) -> f64 {
        assert_eq!(u.len(), self.len(), "field does not match grid");
        let vol = self.cell_volume();
        u.iter()
            .enumerate()
            .filter(|(i, _)| region(self.coord(*i)))
            .map(|(i, v)| weight.map_or(1.0, |w| w[i]) * v * v)
            .sum::<f64>()
            * vol
    }

    /// Discrete `h^n`-weighted inner product.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        assert_eq!(u.len(), v.len());
        u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() * self.cell_volume()
    }

    /// `Σ_i h^n φ(u_i)`.
    pub fn integrate_nodal(&self, u: &[f64], phi: impl Fn(f64) -> f64) -> f64 {
        u.iter().map(|&v| phi(v)).sum::<f64>() * self.cell_volume()
    }
}

/// `(g²)^{q/2}` without the square root where `q = 2`.
#[inline]
pub(crate) fn pow_of_square(g2: f64, q: f64) -> f64 {
    if q == 2.0 {
        g2
    } else if g2 == 0.0 {
        0.0
    } else {
        g2.powf(0.5 * q)
    }
}

/// `‖u‖_{L²}`.
pub fn l2_norm(grid: &Grid, u: &[f64]) -> f64 {
    grid.weighted_square_integral(u, None, |_| true).sqrt()
}

/// `(∫ σ |∇u|^p)^{1/p}`.
pub fn weighted_grad_p_norm(grid: &Grid, u: &[f64], p: f64) -> f64 {
    grid.grad_p_energy(u, p).powf(1.0 / p)
}

/// `(∫ β u²)^{1/2}`.
pub fn beta_l2_norm(grid: &Grid, u: &[f64]) -> f64 {
    grid.weighted_square_integral(u, Some(grid.beta_nodes()), |_| true)
        .sqrt()
}

/// `‖∇u‖_{L^p_σ} + ‖u‖_{L²_β}`.
pub fn w_norm(grid: &Grid, u: &[f64], p: f64) -> f64 {
    weighted_grad_p_norm(grid, u, p) + beta_l2_norm(grid, u)
}

pub fn sup_norm(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `‖u‖_W + sup |u|`.
pub fn wb_norm(grid: &Grid, u: &[f64], p: f64) -> f64 {
    w_norm(grid, u, p) + sup_norm(u)
}

/// Pointwise clamp to `[-k, k]`.
pub fn truncate_bk(u: &[f64], k: f64) -> Vec<f64> {
    assert!(k > 0.0, "truncation level must be positive");
    u.iter().map(|v| v.clamp(-k, k)).collect()
}
