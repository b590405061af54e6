//! Finite-difference sensitivities over the parameter axes.
//!
//! Models are closures from a parameter vector to an output vector (a field,
//! a series or a single value). A [`FdSession`] caches evaluations by exact
//! parameter point so stencils sharing a base point reuse it.

use std::collections::{BTreeSet, HashMap};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FdKind {
    Forward,
    Backward,
    Central,
    ThreePointBackward,
    SecondForward,
    SecondCentral,
    MixedCentral,
}

impl FdKind {
    pub fn order(self) -> u8 {
        match self {
            FdKind::Forward | FdKind::Backward | FdKind::Central | FdKind::ThreePointBackward => 1,
            _ => 2,
        }
    }

    /// Stencil as (offset multiples along i, along j, weight); the combination is
    /// divided by h_i (first order), h_i² (second) or h_i h_j (mixed).
    fn stencil(self) -> &'static [(i8, i8, f64)] {
        match self {
            FdKind::Forward => &[(1, 0, 1.0), (0, 0, -1.0)],
            FdKind::Backward => &[(0, 0, 1.0), (-1, 0, -1.0)],
            FdKind::Central => &[(1, 0, 0.5), (-1, 0, -0.5)],
            FdKind::ThreePointBackward => &[(0, 0, 1.5), (-1, 0, -2.0), (-2, 0, 0.5)],
            FdKind::SecondForward => &[(2, 0, 1.0), (1, 0, -2.0), (0, 0, 1.0)],
            FdKind::SecondCentral => &[(1, 0, 1.0), (0, 0, -2.0), (-1, 0, 1.0)],
            FdKind::MixedCentral => &[(1, 1, 0.25), (1, -1, -0.25), (-1, 1, -0.25), (-1, -1, 0.25)],
        }
    }
}

impl std::str::FromStr for FdKind {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "forward" => FdKind::Forward,
            "backward" => FdKind::Backward,
            "central" => FdKind::Central,
            "three_point_backward" | "three-point" => FdKind::ThreePointBackward,
            "second_forward" => FdKind::SecondForward,
            "second_central" => FdKind::SecondCentral,
            "mixed_central" => FdKind::MixedCentral,
            _ => return invalid(format!("unknown finite-difference scheme '{s}'")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdScheme {
    pub kind: FdKind,
    /// Step along the first parameter.
    pub step: f64,
    /// Step along the second parameter (mixed scheme only; defaults to `step`).
    pub step2: Option<f64>,
}

impl FdScheme {
    /// Default step 1e-3.
    pub fn new(kind: FdKind) -> Self {
        Self {
            kind,
            step: 1e-3,
            step2: None,
        }
    }

    pub fn with_step(kind: FdKind, step: f64) -> Self {
        Self {
            kind,
            step,
            step2: None,
        }
    }
}

/// Admissible closed interval for one parameter.
pub type Bounds = (f64, f64);

fn key(p: &[f64]) -> Vec<u64> {
    p.iter().map(|v| v.to_bits()).collect()
}

/// Memoizing evaluator shared by several finite-difference requests.
pub struct FdSession<F> {
    model: F,
    cache: Mutex<HashMap<Vec<u64>, Vec<f64>>>,
}

impl<F> FdSession<F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    pub fn new(model: F) -> Self {
        Self {
            model,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Distinct model evaluations so far.
    pub fn evaluations(&self) -> usize {
        self.cache.lock().unwrap().len()
    }

    fn evaluate_all(&self, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let missing: Vec<&Vec<f64>> = {
            let cache = self.cache.lock().unwrap();
            let mut seen = BTreeSet::new();
            points
                .iter()
                .filter(|p| !cache.contains_key(&key(p)) && seen.insert(key(p)))
                .collect()
        };
        let fresh: Vec<(Vec<u64>, Vec<f64>)> = missing
            .par_iter()
            .map(|p| Ok((key(p), (self.model)(p)?)))
            .collect::<Result<_>>()?;
        let mut cache = self.cache.lock().unwrap();
        cache.extend(fresh);
        Ok(points.iter().map(|p| cache[&key(p)].clone()).collect())
    }

    /// Derivative of the model output at `point` along parameter `i`
    /// (and `j` for the mixed scheme).
    pub fn derivative(
        &self,
        point: &[f64],
        i: usize,
        j: Option<usize>,
        scheme: FdScheme,
        bounds: &[Bounds],
    ) -> Result<Vec<f64>> {
        let n = point.len();
        if i >= n || j.is_some_and(|j| j >= n) || bounds.len() != n {
            return invalid("parameter index or bounds do not match the point");
        }
        if !(scheme.step > 0.0) || scheme.step2.is_some_and(|h| !(h > 0.0)) {
            return invalid("finite-difference steps must be positive");
        }
        let mixed = scheme.kind == FdKind::MixedCentral;
        let j = match (mixed, j) {
            (true, Some(j)) if j != i => j,
            (true, _) => return invalid("mixed scheme needs two distinct parameters"),
            (false, Some(_)) => return invalid("only the mixed scheme takes a second parameter"),
            (false, None) => i,
        };
        let hi = scheme.step;
        let hj = scheme.step2.unwrap_or(hi);
        let stencil = scheme.kind.stencil();
        let mut points = Vec::with_capacity(stencil.len());
        for &(a, b, _) in stencil {
            let mut p = point.to_vec();
            p[i] += f64::from(a) * hi;
            if mixed {
                p[j] += f64::from(b) * hj;
            }
            for (k, (&v, &(lo, up))) in p.iter().zip(bounds).enumerate() {
                if v < lo || v > up {
                    return invalid(format!(
                        "stencil point {p:?} leaves the domain of parameter {k} [{lo}, {up}]"
                    ));
                }
            }
            points.push(p);
        }
        let outs = self.evaluate_all(&points)?;
        let len = outs[0].len();
        if outs.iter().any(|o| o.len() != len) {
            return invalid("model output shape changed between stencil points");
        }
        let scale = match scheme.kind.order() {
            1 => 1.0 / hi,
            _ if mixed => 1.0 / (hi * hj),
            _ => 1.0 / (hi * hi),
        };
        let mut acc = vec![0.0; len];
        for (o, &(_, _, w)) in outs.iter().zip(stencil) {
            for (a, v) in acc.iter_mut().zip(o) {
                *a += w * v;
            }
        }
        acc.iter_mut().for_each(|a| *a *= scale);
        Ok(acc)
    }
}

/// One-shot derivative without a shared cache.
pub fn fd_sensitivity<F>(
    model: F,
    point: &[f64],
    i: usize,
    j: Option<usize>,
    scheme: FdScheme,
    bounds: &[Bounds],
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    FdSession::new(model).derivative(point, i, j, scheme, bounds)
}

/// Distinct evaluations for every coefficient of `n` parameters under a scheme:
/// all first derivatives for first-order kinds, all diagonal second
/// derivatives for second-order kinds, and the full Hessian (central
/// diagonal plus every mixed pair) for the mixed kind. Counted by enumerating
/// the union of stencil points.
pub fn evaluation_count(kind: FdKind, n: usize) -> usize {
    let mut pts: BTreeSet<Vec<i8>> = BTreeSet::new();
    let mut add = |kind: FdKind, i: usize, j: usize| {
        for &(a, b, _) in kind.stencil() {
            let mut p = vec![0i8; n];
            p[i] += a;
            if kind == FdKind::MixedCentral {
                p[j] += b;
            }
            pts.insert(p);
        }
    };
    for i in 0..n {
        if kind == FdKind::MixedCentral {
            add(FdKind::SecondCentral, i, i);
            for j in i + 1..n {
                add(FdKind::MixedCentral, i, j);
            }
        } else {
            add(kind, i, i);
        }
    }
    pts.len()
}
