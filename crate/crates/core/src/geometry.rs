//! Geometries, invariant frames, charts and coordinate expressions of
//! left-invariant metrics.
//!
//! Every geometry carries a coframe `ω_1, ω_2, ω_3` dual to its Milnor frame
//! `F_1, F_2, F_3`; a diagonal metric is `A ω_1² + B ω_2² + C ω_3²`. The
//! coframe rows are expressed in the chart basis (x, y, z) or (x, y, θ).
//!
//! | geometry | chart | ω_1 | ω_2 | ω_3 |
//! |---|---|---|---|---|
//! | Nil | (x,y,z) | dz − x dy | dx | dy |
//! | Sol | (x,y,z) | eᶻdx + e⁻ᶻdy | −dz | eᶻdx − e⁻ᶻdy |
//! | SL̃(2,ℝ) | (x,y,θ) | dx/y − dθ | (cosθ dx − sinθ dy)/y | (sinθ dx + cosθ dy)/y |
//! | Isõm(E²) | (x,y,θ) | sinθ dx + cosθ dy | cosθ dx − sinθ dy | dθ |
//!
//! Limit-only geometries reuse the same machinery with fixed coframes:
//! H²×ℝ uses (dθ, dx/y, dy/y), E³ uses (dx, dy, dθ) and the Sol limit
//! chart uses (dθ − x dy, dx − θ dy, dy).

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Metric components in the chart basis at one point.
pub type CoordinateMetric = Matrix3<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GeometryKind {
    #[serde(rename = "nil")]
    Nil,
    #[serde(rename = "sol")]
    Sol,
    #[serde(rename = "sl2tilde")]
    SL2Tilde,
    #[serde(rename = "isome2tilde")]
    IsomE2Tilde,
    #[serde(rename = "h2xr")]
    H2xR,
    #[serde(rename = "euclidean3")]
    Euclidean3,
    #[serde(rename = "sollimit")]
    SolLimit,
}

impl GeometryKind {
    pub const FLOWABLE: [GeometryKind; 4] = [
        GeometryKind::Nil,
        GeometryKind::Sol,
        GeometryKind::SL2Tilde,
        GeometryKind::IsomE2Tilde,
    ];

    pub fn is_flowable(self) -> bool {
        matches!(
            self,
            GeometryKind::Nil | GeometryKind::Sol | GeometryKind::SL2Tilde | GeometryKind::IsomE2Tilde
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            GeometryKind::Nil => "nil",
            GeometryKind::Sol => "sol",
            GeometryKind::SL2Tilde => "sl2tilde",
            GeometryKind::IsomE2Tilde => "isome2tilde",
            GeometryKind::H2xR => "h2xr",
            GeometryKind::Euclidean3 => "euclidean3",
            GeometryKind::SolLimit => "sollimit",
        }
    }

    /// Errors unless the geometry can be flowed.
    pub fn require_flowable(self) -> Result<()> {
        if self.is_flowable() {
            Ok(())
        } else {
            Err(Error::NotFlowable { kind: self.name().to_string() })
        }
    }

    /// Frame pair `(i, j)` whose coefficient difference `g_i − g_j` is tracked
    /// explicitly by the integrator, plus the remaining index `k`.
    ///
    /// These are the pairs whose difference decays (or vanishes identically
    /// on a symmetric slice), so the curvature is a small difference of large
    /// numbers there.
    pub fn split_pair(self) -> Result<(usize, usize, usize)> {
        match self {
            GeometryKind::Nil | GeometryKind::SL2Tilde => Ok((1, 2, 0)),
            GeometryKind::Sol => Ok((0, 2, 1)),
            GeometryKind::IsomE2Tilde => Ok((0, 1, 2)),
            other => Err(Error::NotFlowable { kind: other.name().to_string() }),
        }
    }

    pub fn needs_positive_y(self) -> bool {
        matches!(self, GeometryKind::SL2Tilde | GeometryKind::H2xR)
    }
}

impl fmt::Display for GeometryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeometryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nil" => Ok(GeometryKind::Nil),
            "sol" => Ok(GeometryKind::Sol),
            "sl2tilde" | "sl2" => Ok(GeometryKind::SL2Tilde),
            "isome2tilde" | "isome2" => Ok(GeometryKind::IsomE2Tilde),
            "h2xr" => Ok(GeometryKind::H2xR),
            "euclidean3" | "e3" => Ok(GeometryKind::Euclidean3),
            "sollimit" => Ok(GeometryKind::SolLimit),
            _ => Err(Error::InvalidInput(format!("unknown geometry '{s}'"))),
        }
    }
}

/// Bracket table `[F_i, F_j] = Σ_k c[i][j][k] F_k` (indices 0-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureConstants {
    pub c: [[[i8; 3]; 3]; 3],
}

impl StructureConstants {
    /// Builds a table from the brackets `[F_i, F_j] = Σ coeff F_k` with i < j.
    pub fn from_brackets(brackets: &[((usize, usize), [i8; 3])]) -> Self {
        let mut c = [[[0i8; 3]; 3]; 3];
        for &((i, j), v) in brackets {
            c[i][j] = v;
            c[j][i] = [-v[0], -v[1], -v[2]];
        }
        StructureConstants { c }
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        f64::from(self.c[i][j][k])
    }

    pub fn is_antisymmetric(&self) -> bool {
        (0..3).all(|i| (0..3).all(|j| (0..3).all(|k| self.c[i][j][k] == -self.c[j][i][k])))
    }

    /// Largest component of Σ_cyc [[F_i,F_j],F_k] over all index triples.
    pub fn jacobi_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for n in 0..3 {
                        let mut s = 0.0;
                        for m in 0..3 {
                            s += self.get(i, j, m) * self.get(m, k, n)
                                + self.get(j, k, m) * self.get(m, i, n)
                                + self.get(k, i, m) * self.get(m, j, n);
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }
}

pub fn structure_constants(kind: GeometryKind) -> Result<StructureConstants> {
    let table = match kind {
        GeometryKind::Nil => StructureConstants::from_brackets(&[((1, 2), [1, 0, 0])]),
        GeometryKind::Sol => {
            StructureConstants::from_brackets(&[((0, 1), [0, 0, -1]), ((1, 2), [1, 0, 0])])
        }
        GeometryKind::SL2Tilde => StructureConstants::from_brackets(&[
            ((0, 1), [0, 0, 1]),
            ((1, 2), [-1, 0, 0]),
            ((0, 2), [0, -1, 0]),
        ]),
        GeometryKind::IsomE2Tilde => {
            StructureConstants::from_brackets(&[((1, 2), [1, 0, 0]), ((0, 2), [0, -1, 0])])
        }
        other => return Err(Error::NotFlowable { kind: other.name().to_string() }),
    };
    Ok(table)
}

/// Left-invariant metric `A ω_1² + B ω_2² + C ω_3²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalMetric {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl DiagonalMetric {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let g = DiagonalMetric { a, b, c };
        g.validate()?;
        Ok(g)
    }

    pub fn from_array(v: [f64; 3]) -> Result<Self> {
        Self::new(v[0], v[1], v[2])
    }

    pub fn validate(&self) -> Result<()> {
        for v in self.as_array() {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidMetric(format!(
                    "coefficients must be positive and finite, got ({}, {}, {})",
                    self.a, self.b, self.c
                )));
            }
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }

    pub fn get(&self, i: usize) -> f64 {
        self.as_array()[i]
    }

    pub fn scaled(&self, s: f64) -> Self {
        DiagonalMetric { a: s * self.a, b: s * self.b, c: s * self.c }
    }
}

/// A point in the chart of some geometry: (x, y, z) or (x, y, θ).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint(pub [f64; 3]);

impl ChartPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        ChartPoint([x, y, z])
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }

    pub fn z(&self) -> f64 {
        self.0[2]
    }

    pub fn validate(&self, kind: GeometryKind) -> Result<()> {
        if self.0.iter().any(|v| !v.is_finite()) || (kind.needs_positive_y() && self.0[1] <= 0.0) {
            return Err(Error::OutOfDomain(self.0));
        }
        Ok(())
    }

    pub fn distance(&self, other: &ChartPoint) -> f64 {
        (0..3).map(|i| (self.0[i] - other.0[i]).powi(2)).sum::<f64>().sqrt()
    }
}

/// Coframe rows `ω_i` in the chart basis at `p`.
pub fn coframe(kind: GeometryKind, p: &ChartPoint) -> Result<Matrix3<f64>> {
    p.validate(kind)?;
    let [x, y, z] = p.0;
    let m = match kind {
        GeometryKind::Nil => Matrix3::new(0.0, -x, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0),
        GeometryKind::Sol => {
            let (e, ei) = (z.exp(), (-z).exp());
            Matrix3::new(e, ei, 0.0, 0.0, 0.0, -1.0, e, -ei, 0.0)
        }
        GeometryKind::SL2Tilde => {
            let (s, c) = z.sin_cos();
            Matrix3::new(1.0 / y, 0.0, -1.0, c / y, -s / y, 0.0, s / y, c / y, 0.0)
        }
        GeometryKind::IsomE2Tilde => {
            let (s, c) = z.sin_cos();
            Matrix3::new(s, c, 0.0, c, -s, 0.0, 0.0, 0.0, 1.0)
        }
        GeometryKind::H2xR => Matrix3::new(0.0, 0.0, 1.0, 1.0 / y, 0.0, 0.0, 0.0, 1.0 / y, 0.0),
        GeometryKind::Euclidean3 => Matrix3::identity(),
        GeometryKind::SolLimit => Matrix3::new(0.0, -x, 1.0, 1.0, -z, 0.0, 0.0, 1.0, 0.0),
    };
    Ok(m)
}

/// Partial derivatives `∂_k Θ` of the coframe matrix, k = 0, 1, 2.
pub fn coframe_partials(kind: GeometryKind, p: &ChartPoint) -> Result<[Matrix3<f64>; 3]> {
    p.validate(kind)?;
    let [_, y, z] = p.0;
    let zero = Matrix3::zeros();
    let out = match kind {
        GeometryKind::Nil => {
            [Matrix3::new(0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0), zero, zero]
        }
        GeometryKind::Sol => {
            let (e, ei) = (z.exp(), (-z).exp());
            [zero, zero, Matrix3::new(e, -ei, 0.0, 0.0, 0.0, 0.0, e, ei, 0.0)]
        }
        GeometryKind::SL2Tilde => {
            let (s, c) = z.sin_cos();
            let y2 = y * y;
            [
                zero,
                Matrix3::new(-1.0 / y2, 0.0, 0.0, -c / y2, s / y2, 0.0, -s / y2, -c / y2, 0.0),
                Matrix3::new(0.0, 0.0, 0.0, -s / y, -c / y, 0.0, c / y, -s / y, 0.0),
            ]
        }
        GeometryKind::IsomE2Tilde => {
            let (s, c) = z.sin_cos();
            [zero, zero, Matrix3::new(c, -s, 0.0, -s, -c, 0.0, 0.0, 0.0, 0.0)]
        }
        GeometryKind::H2xR => {
            let y2 = y * y;
            [zero, Matrix3::new(0.0, 0.0, 0.0, -1.0 / y2, 0.0, 0.0, 0.0, -1.0 / y2, 0.0), zero]
        }
        GeometryKind::Euclidean3 => [zero; 3],
        GeometryKind::SolLimit => [
            Matrix3::new(0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
            zero,
            Matrix3::new(0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0),
        ],
    };
    Ok(out)
}

/// Frame vector fields at `p` as the columns of the inverse coframe.
pub fn frame(kind: GeometryKind, p: &ChartPoint) -> Result<Matrix3<f64>> {
    coframe(kind, p)?
        .try_inverse()
        .ok_or(Error::OutOfDomain(p.0))
}

/// `Σ w_i ω_i ⊗ ω_i` for arbitrary weights (weights need not be positive).
pub fn metric_from_coframe(kind: GeometryKind, w: [f64; 3], p: &ChartPoint) -> Result<CoordinateMetric> {
    let th = coframe(kind, p)?;
    Ok(weighted_gram(&th, w))
}

/// Partial derivatives of `metric_from_coframe` with respect to the chart coordinates.
pub fn metric_partials(kind: GeometryKind, w: [f64; 3], p: &ChartPoint) -> Result<[CoordinateMetric; 3]> {
    let th = coframe(kind, p)?;
    let d = coframe_partials(kind, p)?;
    let wd = Matrix3::from_diagonal(&w.into());
    Ok(d.map(|dk| {
        let half = dk.transpose() * wd * th;
        half + half.transpose()
    }))
}

/// Coordinate expression of a left-invariant metric at `p`.
pub fn coordinate_metric(kind: GeometryKind, g: &DiagonalMetric, p: &ChartPoint) -> Result<CoordinateMetric> {
    kind.require_flowable()?;
    g.validate()?;
    metric_from_coframe(kind, g.as_array(), p)
}

fn weighted_gram(th: &Matrix3<f64>, w: [f64; 3]) -> Matrix3<f64> {
    let m = th.transpose() * Matrix3::from_diagonal(&w.into()) * th;
    (m + m.transpose()) * 0.5
}

/// Sol chart change to the tilde coordinates adapted to `g`:
/// x̃ = √C(eᶻx − e⁻ᶻy), ỹ = √B z, z̃ = √A(eᶻx + e⁻ᶻy).
pub fn sol_to_tilde(g: &DiagonalMetric, p: &ChartPoint) -> ChartPoint {
    let [x, y, z] = p.0;
    let (e, ei) = (z.exp(), (-z).exp());
    ChartPoint([g.c.sqrt() * (e * x - ei * y), g.b.sqrt() * z, g.a.sqrt() * (e * x + ei * y)])
}

pub fn sol_from_tilde(g: &DiagonalMetric, q: &ChartPoint) -> ChartPoint {
    let [xt, yt, zt] = q.0;
    let z = yt / g.b.sqrt();
    let (u, v) = (xt / g.c.sqrt(), zt / g.a.sqrt());
    ChartPoint([0.5 * (-z).exp() * (u + v), 0.5 * z.exp() * (v - u), z])
}

/// The Sol metric in tilde coordinates:
/// (dz̃ − √(A/BC) x̃ dỹ)² + dỹ² + (dx̃ − √(C/AB) z̃ dỹ)².
pub fn sol_tilde_metric(g: &DiagonalMetric, q: &ChartPoint) -> CoordinateMetric {
    let [xt, _, zt] = q.0;
    let ka = (g.a / (g.b * g.c)).sqrt();
    let kc = (g.c / (g.a * g.b)).sqrt();
    let th = Matrix3::new(0.0, -ka * xt, 1.0, 0.0, 1.0, 0.0, 1.0, -kc * zt, 0.0);
    weighted_gram(&th, [1.0; 3])
}

/// Left translation by (a, b, c) written in the tilde coordinates.
pub fn sol_tilde_isometry(g: &DiagonalMetric, gamma: [f64; 3], q: &ChartPoint) -> ChartPoint {
    let [a, b, c] = gamma;
    let [xt, yt, zt] = q.0;
    let ep = (yt / g.b.sqrt() + c).exp();
    let em = (-yt / g.b.sqrt() - c).exp();
    ChartPoint([
        xt + g.c.sqrt() * (ep * a - em * b),
        yt + g.b.sqrt() * c,
        zt + g.a.sqrt() * (ep * a + em * b),
    ])
}
