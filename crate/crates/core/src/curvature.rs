//! Sectional curvatures of the frame planes, Ricci, P and the cross
//! curvature tensor h, all as frame components.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::geometry::{structure_constants, DiagonalMetric, GeometryKind, StructureConstants};
use crate::Result;

/// K(F₂∧F₃), K(F₃∧F₁), K(F₁∧F₂).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionalCurvatures {
    #[serde(rename = "K23")]
    pub k23: f64,
    #[serde(rename = "K31")]
    pub k31: f64,
    #[serde(rename = "K12")]
    pub k12: f64,
}

impl SectionalCurvatures {
    pub fn as_array(&self) -> [f64; 3] {
        [self.k23, self.k31, self.k12]
    }

    pub fn max_abs(&self) -> f64 {
        self.k23.abs().max(self.k31.abs()).max(self.k12.abs())
    }

    /// Sectional curvature of the plane spanned by F_i, F_j (i ≠ j).
    pub fn plane(&self, i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (1, 2) => self.k23,
            (0, 2) => self.k31,
            (0, 1) => self.k12,
            _ => panic!("plane({i},{j}) needs two distinct frame indices"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureTensors {
    pub ricci_diag: [f64; 3],
    pub scalar: f64,
    pub p_diag: [f64; 3],
    pub h_diag: [f64; 3],
}

/// Closed-form sectional curvatures of the four flowable geometries.
pub fn sectional(kind: GeometryKind, g: &DiagonalMetric) -> Result<SectionalCurvatures> {
    let (i, j, _) = kind.split_pair()?;
    g.validate()?;
    sectional_with_gap(kind, g, g.get(i) - g.get(j))
}

/// Same closed forms, written so that the difference `gap = g_i − g_j` of the
/// geometry's split pair enters explicitly.
///
/// When `gap` is carried separately from the coefficients it keeps full
/// relative accuracy even after the coefficients themselves agree to every
/// printed digit, which matters for the long-time asymptotics.
pub fn sectional_with_gap(kind: GeometryKind, g: &DiagonalMetric, gap: f64) -> Result<SectionalCurvatures> {
    let DiagonalMetric { a, b, c } = *g;
    let q = 4.0 * a * b * c;
    let d = gap;
    let k = match kind {
        GeometryKind::Nil => SectionalCurvatures { k23: -3.0 * a * a / q, k31: a * a / q, k12: a * a / q },
        GeometryKind::Sol => SectionalCurvatures {
            k23: (d * d - 4.0 * a * a) / q,
            k31: (a + c) * (a + c) / q,
            k12: (d * d - 4.0 * c * c) / q,
        },
        GeometryKind::SL2Tilde => SectionalCurvatures {
            k23: (-3.0 * a * a + d * d - 2.0 * a * (b + c)) / q,
            k31: (a * a - 2.0 * a * d - (3.0 * b + c) * d) / q,
            k12: (a * a + 2.0 * a * d + (b + 3.0 * c) * d) / q,
        },
        GeometryKind::IsomE2Tilde => SectionalCurvatures {
            k23: -d * (b + 3.0 * a) / q,
            k31: d * (a + 3.0 * b) / q,
            k12: d * d / q,
        },
        other => return Err(crate::Error::NotFlowable { kind: other.name().to_string() }),
    };
    Ok(k)
}

/// Sectional curvatures of the frame planes from the bracket table alone,
/// through the Koszul formula in the orthonormal frame `e_i = F_i/√g_i`.
pub fn sectional_generic(sc: &StructureConstants, g: &DiagonalMetric) -> SectionalCurvatures {
    let s = g.as_array().map(f64::sqrt);
    // [e_i, e_j] = Σ_k cc[i][j][k] e_k
    let mut cc = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                cc[i][j][k] = sc.get(i, j, k) * s[k] / (s[i] * s[j]);
            }
        }
    }
    // ∇_{e_i} e_j = Σ_k gam[i][j][k] e_k
    let mut gam = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                gam[i][j][k] = 0.5 * (cc[i][j][k] - cc[j][k][i] + cc[k][i][j]);
            }
        }
    }
    let nabla = |i: usize, v: [f64; 3]| -> [f64; 3] {
        let mut out = [0.0; 3];
        for (j, vj) in v.iter().enumerate() {
            for k in 0..3 {
                out[k] += vj * gam[i][j][k];
            }
        }
        out
    };
    let sec = |i: usize, j: usize| -> f64 {
        // R(e_i,e_j)e_j = ∇_i∇_j e_j − ∇_j∇_i e_j − ∇_[e_i,e_j] e_j
        let mut ej = [0.0; 3];
        ej[j] = 1.0;
        let a = nabla(i, nabla(j, ej));
        let b = nabla(j, nabla(i, ej));
        let mut c = [0.0; 3];
        for (m, w) in cc[i][j].iter().enumerate() {
            let t = nabla(m, ej);
            for k in 0..3 {
                c[k] += w * t[k];
            }
        }
        a[i] - b[i] - c[i]
    };
    SectionalCurvatures { k23: sec(1, 2), k31: sec(2, 0), k12: sec(0, 1) }
}

pub fn curvature_tensors(kind: GeometryKind, g: &DiagonalMetric) -> Result<CurvatureTensors> {
    Ok(tensors_from_sectional(g, &sectional(kind, g)?))
}

/// Ricci, scalar curvature, P and h from the frame-plane curvatures.
///
/// h is built by the adjugate route: with `P^{ii} = K(F_j∧F_k)/g_ii` the
/// frame components of P with indices raised, `h = det(g)·adj(P^{··})`, which
/// stays defined when P is singular.
pub fn tensors_from_sectional(g: &DiagonalMetric, k: &SectionalCurvatures) -> CurvatureTensors {
    let ga = g.as_array();
    let kk = k.as_array();
    let ricci_diag = [
        ga[0] * (k.k12 + k.k31),
        ga[1] * (k.k12 + k.k23),
        ga[2] * (k.k31 + k.k23),
    ];
    let scalar = 2.0 * (k.k23 + k.k31 + k.k12);
    let p_upper = Matrix3::from_diagonal(&[kk[0] / ga[0], kk[1] / ga[1], kk[2] / ga[2]].into());
    let det_g = ga[0] * ga[1] * ga[2];
    let adj = adjugate(&p_upper);
    CurvatureTensors {
        ricci_diag,
        scalar,
        p_diag: kk,
        h_diag: [det_g * adj[(0, 0)], det_g * adj[(1, 1)], det_g * adj[(2, 2)]],
    }
}

/// h_ii = g_ii · K_ij · K_ik.
pub fn cross_curvature_product(g: &DiagonalMetric, k: &SectionalCurvatures) -> [f64; 3] {
    [g.a * k.k12 * k.k31, g.b * k.k12 * k.k23, g.c * k.k31 * k.k23]
}

pub fn adjugate(m: &Matrix3<f64>) -> Matrix3<f64> {
    let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[(r0, c0)] * m[(r1, c1)] - m[(r0, c1)] * m[(r1, c0)];
    Matrix3::new(
        c(1, 2, 1, 2),
        -c(0, 2, 1, 2),
        c(0, 1, 1, 2),
        -c(1, 2, 0, 2),
        c(0, 2, 0, 2),
        -c(0, 1, 0, 2),
        c(1, 2, 0, 1),
        -c(0, 2, 0, 1),
        c(0, 1, 0, 1),
    )
}

/// Generic oracle for `kind`, convenient for tests and the CLI.
pub fn sectional_oracle(kind: GeometryKind, g: &DiagonalMetric) -> Result<SectionalCurvatures> {
    Ok(sectional_generic(&structure_constants(kind)?, g))
}
