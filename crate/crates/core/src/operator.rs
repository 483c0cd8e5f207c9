//! The discrete monotone operator `A u = -div(σ|∇u|^{p-2}∇u) + βu`.
//!
//! `A` is assembled as the gradient of the discrete energy: with
//! `E(u) = Σ_f w_f σ_f |g_f(u)|^p` (see [`crate::grid`]),
//!
//! ```text
//! (A u)_i = (1/h^n) Σ_f w_f σ_f |g_f|^{p-2} (G_fᵀ g_f)_i + β_i u_i
//! ```
//!
//! so the `h^n`-weighted pairing satisfies `⟨A u, u⟩_h = E(u) + Σ h^n β u²`
//! exactly (up to rounding), and monotonicity follows from convexity of `E`.
//! Dirichlet ghost values are zero. All pairings `⟨·,·⟩` here are the
//! `h^n`-weighted Euclidean product on interior nodes.

use alloc::vec::Vec;
use num_traits::Float;

use crate::grid::{pow_of_square, Face, Grid};
use crate::nonlinearity::NonlinearityModel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct DiscreteOperator<'g> {
    grid: &'g Grid,
    p: f64,
    epsilon_reg: f64,
}

/// The three sides of the discrete energy identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyTerms {
    /// `∫ σ |∇u|^p`.
    pub grad_p: f64,
    /// `∫ β u²`.
    pub beta: f64,
    /// `⟨A u, u⟩_h`.
    pub pairing: f64,
}

/// How the principal part is linearized around a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Linearization {
    /// Frozen coefficient `σ|∇w|^{p-2}` (Picard).
    Picard,
    /// Exact derivative of the flux with `|∇w|` replaced by `sqrt(|∇w|² + ε²)`.
    Newton { epsilon: f64 },
}

/// Per-face `M_f = a I + b ĝĝᵀ` so that the linearized principal part is
/// `(1/h^n) Σ_f w_f σ_f G_fᵀ M_f G_f`.
#[derive(Debug, Clone)]
pub struct LinearizedOperator<'g> {
    grid: &'g Grid,
    faces: Vec<FaceMatrix>,
}

#[derive(Debug, Clone, Copy)]
struct FaceMatrix {
    scale: f64,
    a: f64,
    b: f64,
    gn: f64,
    gt: f64,
}

impl<'g> DiscreteOperator<'g> {
    pub fn new(grid: &'g Grid, p: f64) -> Result<Self> {
        if !(p >= 2.0) || !p.is_finite() {
            return Err(Error::invalid("p must satisfy p >= 2"));
        }
        Ok(DiscreteOperator {
            grid,
            p,
            epsilon_reg: 0.0,
        })
    }

    /// Regularization used by [`DiscreteOperator::newton_linearization`]; never used for evaluation.
    pub fn with_regularization(mut self, epsilon: f64) -> Self {
        self.epsilon_reg = epsilon.max(0.0);
        self
    }

    pub fn grid(&self) -> &'g Grid {
        self.grid
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn epsilon_reg(&self) -> f64 {
        self.epsilon_reg
    }

    /// `A u`.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.grid.check_len(u)?;
        let mut out = alloc::vec![0.0; u.len()];
        self.add_principal(u, &mut out);
        for ((o, b), v) in out.iter_mut().zip(self.grid.beta_nodes()).zip(u) {
            *o += b * v;
        }
        check_finite(&out)?;
        Ok(out)
    }

    /// Principal part only, `-div(σ|∇u|^{p-2}∇u)`.
    pub fn apply_principal(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.grid.check_len(u)?;
        let mut out = alloc::vec![0.0; u.len()];
        self.add_principal(u, &mut out);
        check_finite(&out)?;
        Ok(out)
    }

    fn add_principal(&self, u: &[f64], out: &mut [f64]) {
        let grid = self.grid;
        let scale = grid.face_weight() / grid.cell_volume();
        let tangential = grid.uses_tangential();
        for face in grid.faces() {
            let (gn, gt) = grid.face_gradient(u, face);
            let k = face.sigma * flux_coefficient(gn * gn + gt * gt, self.p);
            if k == 0.0 {
                continue;
            }
            scatter(
                grid,
                face,
                scale * k * gn,
                if tangential { scale * k * gt } else { 0.0 },
                out,
            );
        }
    }

    /// `(∫σ|∇u|^p, ∫βu², ⟨A u, u⟩_h)`, failing if the pairing does not match the energy.
    pub fn energy_pairing(&self, u: &[f64]) -> Result<EnergyTerms> {
        let au = self.apply(u)?;
        let grad_p = self.grid.grad_p_energy(u, self.p);
        let beta = self
            .grid
            .weighted_square_integral(u, Some(self.grid.beta_nodes()), |_| true);
        let pairing = self.grid.inner(&au, u);
        let energy = grad_p + beta;
        let scale = pairing.abs().max(energy.abs());
        if (pairing - energy).abs() > 1e-10 * scale {
            return Err(Error::Discretization { pairing, energy });
        }
        Ok(EnergyTerms { grad_p, beta, pairing })
    }

    /// `⟨A u - A v, u - v⟩_h`; nonnegative up to rounding.
    pub fn monotonicity_probe(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        let au = self.apply(u)?;
        let av = self.apply(v)?;
        let da: Vec<f64> = au.iter().zip(&av).map(|(a, b)| a - b).collect();
        let dw: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
        Ok(self.grid.inner(&da, &dw))
    }

    /// `g - A u - f(u)`, the time derivative of the semi-discrete flow.
    pub fn full_rhs(&self, u: &[f64], f: &NonlinearityModel) -> Result<Vec<f64>> {
        let mut out = self.apply(u)?;
        for ((o, g), v) in out.iter_mut().zip(self.grid.g_nodes()).zip(u) {
            *o = g - *o - f.try_f(*v)?;
        }
        check_finite(&out)?;
        Ok(out)
    }

    pub fn picard_linearization(&self, w: &[f64]) -> LinearizedOperator<'g> {
        self.linearize(w, Linearization::Picard)
    }

    pub fn newton_linearization(&self, w: &[f64]) -> LinearizedOperator<'g> {
        self.linearize(
            w,
            Linearization::Newton {
                epsilon: self.epsilon_reg,
            },
        )
    }

    pub fn linearize(&self, w: &[f64], mode: Linearization) -> LinearizedOperator<'g> {
        let grid = self.grid;
        let scale = grid.face_weight() / grid.cell_volume();
        let p = self.p;
        let faces = grid
            .faces()
            .iter()
            .map(|face| {
                let (gn, gt) = grid.face_gradient(w, face);
                let g2 = gn * gn + gt * gt;
                let s = scale * face.sigma;
                match mode {
                    Linearization::Picard => FaceMatrix {
                        scale: s,
                        a: flux_coefficient(g2, p),
                        b: 0.0,
                        gn: 0.0,
                        gt: 0.0,
                    },
                    Linearization::Newton { epsilon } => {
                        let rho2 = g2 + epsilon * epsilon;
                        let a = flux_coefficient(rho2, p);
                        if rho2 == 0.0 || p == 2.0 {
                            FaceMatrix {
                                scale: s,
                                a,
                                b: 0.0,
                                gn: 0.0,
                                gt: 0.0,
                            }
                        } else {
                            let rho = rho2.sqrt();
                            FaceMatrix {
                                scale: s,
                                a,
                                b: (p - 2.0) * a,
                                gn: gn / rho,
                                gt: gt / rho,
                            }
                        }
                    }
                }
            })
            .collect();
        LinearizedOperator { grid, faces }
    }
}

impl LinearizedOperator<'_> {
    /// `out += L v` for the linearized principal part.
    pub fn add_apply(&self, v: &[f64], out: &mut [f64]) {
        let grid = self.grid;
        let tangential = grid.uses_tangential();
        for (face, m) in grid.faces().iter().zip(&self.faces) {
            if m.scale == 0.0 || (m.a == 0.0 && m.b == 0.0) {
                continue;
            }
            let (vn, vt) = grid.face_gradient(v, face);
            let proj = m.b * (m.gn * vn + m.gt * vt);
            let qn = m.a * vn + proj * m.gn;
            let qt = if tangential { m.a * vt + proj * m.gt } else { 0.0 };
            scatter(grid, face, m.scale * qn, m.scale * qt, out);
        }
    }

    /// Diagonal of the linearized principal part.
    pub fn diagonal(&self) -> Vec<f64> {
        let grid = self.grid;
        let h = grid.spacing();
        let tangential = grid.uses_tangential();
        let mut d = alloc::vec![0.0; grid.len()];
        for (face, m) in grid.faces().iter().zip(&self.faces) {
            let mnn = m.a + m.b * m.gn * m.gn;
            for k in face.normal.iter().flatten() {
                d[*k as usize] += m.scale * mnn / (h * h);
            }
            if tangential {
                let mtt = m.a + m.b * m.gt * m.gt;
                for k in face.tangential.iter().flatten() {
                    d[*k as usize] += m.scale * mtt / (16.0 * h * h);
                }
            }
        }
        d
    }

    /// Gershgorin row bounds `Σ_j |L_ij|` of the linearized principal part.
    pub fn row_abs_sums(&self) -> Vec<f64> {
        let grid = self.grid;
        let h = grid.spacing();
        let tangential = grid.uses_tangential();
        let mut rows = alloc::vec![0.0; grid.len()];
        for (face, m) in grid.faces().iter().zip(&self.faces) {
            let sn = face.normal.iter().flatten().count() as f64 / h;
            let st = if tangential {
                face.tangential.iter().flatten().count() as f64 / (4.0 * h)
            } else {
                0.0
            };
            let off = (m.b * m.gn * m.gt).abs();
            let tn = (m.a + m.b * m.gn * m.gn).abs() * sn + off * st;
            let tt = (m.a + m.b * m.gt * m.gt).abs() * st + off * sn;
            for k in face.normal.iter().flatten() {
                rows[*k as usize] += m.scale * tn / h;
            }
            if tangential {
                for k in face.tangential.iter().flatten() {
                    rows[*k as usize] += m.scale * tt / (4.0 * h);
                }
            }
        }
        rows
    }
}

/// `|g|^{p-2}` from `|g|²`, with the `p = 2` convention `0^0 = 1`.
#[inline]
fn flux_coefficient(g2: f64, p: f64) -> f64 {
    if p == 2.0 {
        1.0
    } else {
        pow_of_square(g2, p - 2.0)
    }
}

/// `out += G_fᵀ (qn, qt)`.
#[inline]
fn scatter(grid: &Grid, face: &Face, qn: f64, qt: f64, out: &mut [f64]) {
    let h = grid.spacing();
    if let Some(k) = face.normal[0] {
        out[k as usize] -= qn / h;
    }
    if let Some(k) = face.normal[1] {
        out[k as usize] += qn / h;
    }
    if qt != 0.0 {
        let c = qt / (4.0 * h);
        let t = &face.tangential;
        for (slot, sign) in [(t[0], 1.0), (t[1], -1.0), (t[2], 1.0), (t[3], -1.0)] {
            if let Some(k) = slot {
                out[k as usize] += sign * c;
            }
        }
    }
}

fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(node) => Err(Error::NonFinite { node, value: v[node] }),
        None => Ok(()),
    }
}
