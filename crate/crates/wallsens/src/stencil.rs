//! Dufort–Frankel stencil coefficients and their parameter derivatives.
//!
//! Every coefficient is evaluated as a [`Jet2`] seeded on up to two parameters,
//! so the value, both first partials and the mixed partial come out of the
//! same arithmetic.

use serde::Serialize;

use crate::error::Result;
use crate::grid::Grid;
use crate::jet::{Jet2, Part};
use crate::wall::{DimensionlessProblem, ParamId};

/// Per-node coefficients of the interior update
/// u_j^{n+1} = ν₁ u_{j+1}^n + ν₂ u_{j−1}^n + ν₃ u_j^{n−1}.
#[derive(Debug, Clone, Serialize)]
pub struct StencilCoeffs {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub lambda3: Vec<f64>,
    pub nu1: Vec<f64>,
    pub nu2: Vec<f64>,
    pub nu3: Vec<f64>,
}

impl StencilCoeffs {
    /// λ₀ is 1 by construction of the scheme.
    pub const LAMBDA0: f64 = 1.0;
}

/// Everything the march needs, for the value or one derivative component.
#[derive(Debug, Clone)]
pub(crate) struct Coeffs {
    pub nu1: Vec<f64>,
    pub nu2: Vec<f64>,
    pub nu3: Vec<f64>,
    /// Multiplies the source signal in the DF update.
    pub src: Vec<f64>,
    /// Forward-Euler seeding coefficients.
    pub ep: Vec<f64>,
    pub em: Vec<f64>,
    pub esrc: Vec<f64>,
    pub k_left: f64,
    pub k_right: f64,
    /// True when every entry is exactly zero.
    pub zero: bool,
}

struct NodeJets {
    lambda: [Jet2; 3],
    nu: [Jet2; 3],
    src: Jet2,
    ep: Jet2,
    em: Jet2,
    esrc: Jet2,
}

fn seeded(value: f64, me: ParamId, p: Option<ParamId>, q: Option<ParamId>) -> Jet2 {
    Jet2::var(value, p == Some(me), q == Some(me))
}

fn absorbed_jet(problem: &DimensionlessProblem, p: Option<ParamId>, q: Option<ParamId>) -> Jet2 {
    match problem.optics() {
        None => Jet2::constant(1.0),
        Some(o) => {
            let tau = seeded(o.tau, ParamId::TAU, p, q);
            let rho = seeded(o.rho, ParamId::RHO, p, q);
            let one = Jet2::constant(1.0);
            (one - tau) * (one - rho) / (one - rho * tau)
        }
    }
}

struct JetBuilder<'a> {
    problem: &'a DimensionlessProblem,
    grid: Grid,
    p: Option<ParamId>,
    q: Option<ParamId>,
    absorbed: Jet2,
}

impl<'a> JetBuilder<'a> {
    fn new(
        problem: &'a DimensionlessProblem,
        grid: Grid,
        p: Option<ParamId>,
        q: Option<ParamId>,
    ) -> Result<Self> {
        for r in [p, q].into_iter().flatten() {
            problem.check_param(r)?;
        }
        let absorbed = absorbed_jet(problem, p, q);
        Ok(Self {
            problem,
            grid,
            p,
            q,
            absorbed,
        })
    }

    fn k_at(&self, x: f64) -> Result<Jet2> {
        let i = self.problem.layer_at(x)?;
        Ok(seeded(
            self.problem.layers[i].k,
            ParamId::k(i),
            self.p,
            self.q,
        ))
    }

    /// Capacity of node x: mean of c⋆ over its control volume
    /// [x − Δx/2, x + Δx/2]; equals c⋆(x) away from interfaces.
    fn c_at(&self, x: f64) -> Result<Jet2> {
        let half = 0.5 / (self.grid.nx - 1) as f64;
        let (a, b) = (x - half, x + half);
        let mut c = Jet2::constant(0.0);
        for (i, l) in self.problem.layers.iter().enumerate() {
            let w = (b.min(l.end) - a.max(l.start)).max(0.0) / (b - a);
            if w > 0.0 {
                c = c + seeded(l.c, ParamId::c(i), self.p, self.q) * w;
            }
        }
        Ok(c)
    }

    fn node(&self, j: usize) -> Result<NodeJets> {
        let g = &self.grid;
        let r = self.problem.fo * g.dt / (g.dx() * g.dx());
        let half = 0.5 / (g.nx - 1) as f64;
        let x = g.x(j);
        let kp = self.k_at((x + half).min(1.0))?;
        let km = self.k_at((x - half).max(0.0))?;
        let c = self.c_at(x)?;
        let one = Jet2::constant(1.0);
        let l1 = kp * (2.0 * r) / c;
        let l2 = km * (2.0 * r) / c;
        let l3 = (kp + km) * r / c;
        let d = one + l3;
        let prof = match &self.problem.source {
            Some(s) => self.absorbed * s.profile.eval(x),
            None => Jet2::constant(0.0),
        };
        Ok(NodeJets {
            lambda: [l1, l2, l3],
            nu: [l1 / d, l2 / d, (one - l3) / d],
            src: prof * (2.0 * g.dt) / (c * d),
            ep: kp * r / c,
            em: km * r / c,
            esrc: prof * g.dt / c,
        })
    }
}

/// Value and derivative coefficient sets for the pair (p, q).
/// Returns [value, ∂p, ∂q, ∂²pq].
pub(crate) fn coefficient_jets(
    problem: &DimensionlessProblem,
    grid: Grid,
    p: Option<ParamId>,
    q: Option<ParamId>,
) -> Result<[Coeffs; 4]> {
    let b = JetBuilder::new(problem, grid, p, q)?;
    let nx = grid.nx;
    let mut nodes = Vec::with_capacity(nx);
    for j in 0..nx {
        nodes.push(if j == 0 || j == nx - 1 {
            None
        } else {
            Some(b.node(j)?)
        });
    }
    let kl = b.k_at(0.0)?;
    let kr = b.k_at(1.0)?;
    let build = |part: Part| {
        let pick = |f: &dyn Fn(&NodeJets) -> Jet2| -> Vec<f64> {
            nodes
                .iter()
                .map(|n| n.as_ref().map_or(0.0, |n| f(n).part(part)))
                .collect()
        };
        let mut c = Coeffs {
            nu1: pick(&|n| n.nu[0]),
            nu2: pick(&|n| n.nu[1]),
            nu3: pick(&|n| n.nu[2]),
            src: pick(&|n| n.src),
            ep: pick(&|n| n.ep),
            em: pick(&|n| n.em),
            esrc: pick(&|n| n.esrc),
            k_left: kl.part(part),
            k_right: kr.part(part),
            zero: false,
        };
        c.zero = [&c.nu1, &c.nu2, &c.nu3, &c.src, &c.ep, &c.em, &c.esrc]
            .iter()
            .all(|v| v.iter().all(|x| *x == 0.0))
            && c.k_left == 0.0
            && c.k_right == 0.0;
        c
    };
    Ok([
        build(Part::Value),
        build(Part::P),
        build(Part::Q),
        build(Part::PQ),
    ])
}

/// Coefficient table of the interior scheme for inspection and export.
pub fn stencil_coeffs(problem: &DimensionlessProblem, grid: Grid) -> Result<StencilCoeffs> {
    let b = JetBuilder::new(problem, grid, None, None)?;
    let mut s = StencilCoeffs {
        lambda1: vec![0.0; grid.nx],
        lambda2: vec![0.0; grid.nx],
        lambda3: vec![0.0; grid.nx],
        nu1: vec![0.0; grid.nx],
        nu2: vec![0.0; grid.nx],
        nu3: vec![0.0; grid.nx],
    };
    for j in 1..grid.nx - 1 {
        let n = b.node(j)?;
        s.lambda1[j] = n.lambda[0].v;
        s.lambda2[j] = n.lambda[1].v;
        s.lambda3[j] = n.lambda[2].v;
        s.nu1[j] = n.nu[0].v;
        s.nu2[j] = n.nu[1].v;
        s.nu3[j] = n.nu[2].v;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wall::validation_case;

    #[test]
    fn coefficients_match_closed_form() {
        let p = validation_case();
        let g = Grid::new(0.01, 1e-3, 1.0).unwrap();
        let s = stencil_coeffs(&p, g).unwrap();
        let r = 0.02 * 1e-3 / 1e-4;
        // node 30 sits inside layer 1
        let l3 = r * 0.2 / 0.2;
        assert!((s.lambda3[30] - l3).abs() < 1e-15);
        assert!((s.nu3[30] - (1.0 - l3) / (1.0 + l3)).abs() < 1e-15);
        // node 60 is on the interface: capacity averaged over its control volume,
        // k+ from layer 2, k- from layer 1
        let c = 0.5 * (0.2 + 0.5);
        let l1 = 2.0 * r * 0.3 / c;
        let l2 = 2.0 * r * 0.1 / c;
        let l3 = r * 0.4 / c;
        assert!((s.lambda3[60] - l3).abs() < 1e-15);
        assert!((s.nu1[60] - l1 / (1.0 + l3)).abs() < 1e-15);
        assert!((s.nu2[60] - l2 / (1.0 + l3)).abs() < 1e-15);
        for j in 1..100 {
            assert!(s.nu3[j] > -1.0 && s.nu3[j] <= 1.0);
        }
    }

    #[test]
    fn derivative_indicators() {
        let p = validation_case();
        let g = Grid::new(0.01, 1e-3, 1.0).unwrap();
        let [v, dk, _, dkk] =
            coefficient_jets(&p, g, Some(ParamId::k(0)), Some(ParamId::k(0))).unwrap();
        assert_eq!(dk.nu1[80], 0.0);
        assert!(dk.nu1[30] != 0.0);
        assert_eq!(dk.k_left, 1.0);
        assert_eq!(dk.k_right, 0.0);
        // central FD on the coefficient itself
        let h = 1e-6;
        let up = coefficient_jets(
            &p.with_param(ParamId::k(0), 0.1 + h).unwrap(),
            g,
            None,
            None,
        )
        .unwrap();
        let dn = coefficient_jets(
            &p.with_param(ParamId::k(0), 0.1 - h).unwrap(),
            g,
            None,
            None,
        )
        .unwrap();
        for j in [1, 30, 59, 60] {
            let fd = (up[0].nu3[j] - dn[0].nu3[j]) / (2.0 * h);
            assert!((fd - dk.nu3[j]).abs() < 1e-7, "node {j}");
            let fd2 = (up[0].nu3[j] - 2.0 * v.nu3[j] + dn[0].nu3[j]) / (h * h);
            assert!(
                (fd2 - dkk.nu3[j]).abs() < 1e-2 * dkk.nu3[j].abs().max(1.0),
                "node {j}"
            );
        }
    }
}
