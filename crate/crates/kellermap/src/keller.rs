//! Cubic Keller maps: `phi(x) = x + ((x A_1)^3, ..., (x A_n)^3)` where `A_i`
//! is the i-th column of a rational matrix `A`.
//!
//! Whether the Jacobian determinant is identically 1 splits, for n = 3, into
//! three homogeneous constraint groups E1, E2, E3 with the exact identity
//! `det J - 1 = 3 E1 + 9 E2 + 27 E3`; classification then follows the rank
//! of `A` and the vanishing pattern of the dependency coefficients of its
//! columns. All derivations here are recomputed from the determinant
//! expansion rather than transcribed.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::invariants::{invariant_basis, nearly_invariant_beyond, InvariantError};
use crate::linalg::{LinAlgError, MatrixJson, RationalMatrix};
use crate::map::{
    default_degree_cap, detect_polynomial_inverse, MapError, PhiReport, PolynomialMap,
};
use crate::poly::{Monomial, PolyError, Polynomial};
use crate::rat::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseTag {
    /// Rank at most 1 (the zero matrix is the degenerate sub-case).
    R1,
    /// Rank 2, dependent column proportional to one independent column, and
    /// the relevant off-diagonal entry vanishes after relabeling.
    #[serde(rename = "R2_1_1")]
    R211,
    /// Rank 2, dependent column proportional to one independent column, with
    /// a nonzero feedback entry.
    #[serde(rename = "R2_1_2")]
    R212,
    /// Rank 2 with both dependency coefficients nonzero in every relabeling;
    /// provably empty for unit-Jacobian specs.
    #[serde(rename = "R2_2")]
    R22,
    /// Full rank; impossible for unit-Jacobian specs since E3 forces the
    /// determinant of A to vanish.
    R3,
    #[serde(rename = "NOT_KELLER")]
    NotKeller,
    #[serde(rename = "UNCLASSIFIED")]
    Unclassified,
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CaseTag::R1 => "R1",
            CaseTag::R211 => "R2_1_1",
            CaseTag::R212 => "R2_1_2",
            CaseTag::R22 => "R2_2",
            CaseTag::R3 => "R3",
            CaseTag::NotKeller => "NOT_KELLER",
            CaseTag::Unclassified => "UNCLASSIFIED",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KellerError {
    NonSquare { rows: usize, cols: usize },
    UnsupportedDimension { n: usize },
    NotKeller,
    WrongRank { expected: usize, got: usize },
    /// A verified unit-Jacobian spec in dimension 2 or 3 failed to reach a
    /// vanishing difference within the proven bound. This contradicts the
    /// established result and therefore flags an engine bug.
    TheoremContradiction { case: CaseTag, max_m: usize },
    /// The caller lowered the order bound below the proven one and the
    /// sequence had not vanished yet; no conclusion follows.
    InconclusiveBound { max_m: usize },
    LinAlg(LinAlgError),
    Map(MapError),
    Invariant(InvariantError),
}

impl fmt::Display for KellerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KellerError::NonSquare { rows, cols } => {
                write!(f, "coefficient matrix is {rows}x{cols}, must be square")
            }
            KellerError::UnsupportedDimension { n } => {
                write!(f, "dimension {n} is outside the supported range")
            }
            KellerError::NotKeller => {
                write!(f, "the Jacobian determinant of this map is not identically 1")
            }
            KellerError::WrongRank { expected, got } => {
                write!(f, "operation requires rank {expected}, matrix has rank {got}")
            }
            KellerError::TheoremContradiction { case, max_m } => {
                write!(
                    f,
                    "internal error: a unit-Jacobian spec (case {case}) did not vanish by m={max_m}"
                )
            }
            KellerError::InconclusiveBound { max_m } => {
                write!(
                    f,
                    "no vanishing difference up to m={max_m}; raise the bound to at least {THEOREM_MAX_M}"
                )
            }
            KellerError::LinAlg(e) => write!(f, "{e}"),
            KellerError::Map(e) => write!(f, "{e}"),
            KellerError::Invariant(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for KellerError {}

impl From<LinAlgError> for KellerError {
    fn from(e: LinAlgError) -> Self {
        KellerError::LinAlg(e)
    }
}

impl From<MapError> for KellerError {
    fn from(e: MapError) -> Self {
        KellerError::Map(e)
    }
}

impl From<PolyError> for KellerError {
    fn from(e: PolyError) -> Self {
        KellerError::Map(MapError::Poly(e))
    }
}

impl From<InvariantError> for KellerError {
    fn from(e: InvariantError) -> Self {
        KellerError::Invariant(e)
    }
}

/// How the dependent columns of `A` are expressed through independent ones,
/// after the simultaneous row/column relabeling `permutation`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dependency {
    /// Position `i` of the relabeled matrix holds original index
    /// `permutation[i]`.
    pub permutation: Vec<usize>,
    /// Rank 1: column k (k >= 1) of the relabeled matrix is
    /// `lambda[k-1]` times column 0. Rank 2 (n = 3): column 2 is
    /// `lambda[0]` times column 0 plus `lambda[1]` times column 1.
    pub lambda: Vec<Rational>,
}

/// A cubic Keller map candidate: the coefficient matrix plus derived data.
#[derive(Clone, PartialEq, Eq)]
pub struct CubicKellerSpec {
    n: usize,
    a: RationalMatrix,
    derived_rank: usize,
    keller: bool,
    dependency: Option<Dependency>,
    case_tag: CaseTag,
}

/// Dimensions with a full case analysis.
pub const ANALYZED_DIMS: [usize; 2] = [2, 3];
/// Largest dimension accepted at all; 4 is exploration only.
pub const MAX_DIM: usize = 4;

const PERMS3: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

impl CubicKellerSpec {
    /// Builds a spec from its coefficient matrix, computing rank, the unit-
    /// Jacobian flag, a column dependency in normal form, and the case tag.
    pub fn analyze(a: RationalMatrix) -> Result<Self, KellerError> {
        if a.rows() != a.cols() {
            return Err(KellerError::NonSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let n = a.rows();
        if n < 2 || n > MAX_DIM {
            return Err(KellerError::UnsupportedDimension { n });
        }
        let derived_rank = a.rank();
        let phi = build_cubic_map_from_matrix(&a);
        let keller = phi.jacobian().det()?.is_one();
        let (case_tag, dependency) = classify_inner(&a, n, derived_rank, keller);
        let spec = CubicKellerSpec {
            n,
            a,
            derived_rank,
            keller,
            dependency,
            case_tag,
        };
        debug_assert!(spec.dependency_consistent());
        Ok(spec)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &RationalMatrix {
        &self.a
    }

    pub fn rank(&self) -> usize {
        self.derived_rank
    }

    pub fn is_keller(&self) -> bool {
        self.keller
    }

    pub fn case_tag(&self) -> CaseTag {
        self.case_tag
    }

    pub fn dependency(&self) -> Option<&Dependency> {
        self.dependency.as_ref()
    }

    /// Verifies that the stored dependency reproduces the dependent columns.
    pub fn dependency_consistent(&self) -> bool {
        let Some(dep) = &self.dependency else {
            return true;
        };
        let b = self.a.permuted(&dep.permutation);
        match self.derived_rank {
            1 => (1..self.n).all(|k| {
                (0..self.n).all(|r| {
                    b.get(r, k) == &dep.lambda[k - 1].mul(b.get(r, 0))
                })
            }),
            2 => (0..self.n).all(|r| {
                let expect = dep.lambda[0]
                    .mul(b.get(r, 0))
                    .add(&dep.lambda[1].mul(b.get(r, 1)));
                b.get(r, 2) == &expect
            }),
            _ => true,
        }
    }
}

impl fmt::Debug for CubicKellerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "CubicKellerSpec(n={}, rank={}, keller={}, case={}, A=\n{:?})",
            self.n, self.derived_rank, self.keller, self.case_tag, self.a
        )
    }
}

/// Serde wire form of a spec; matrices use the shared matrix JSON schema.
#[derive(Serialize, Deserialize)]
pub struct SpecJson {
    pub n: usize,
    pub matrix: MatrixJson,
    pub derived_rank: usize,
    pub case_tag: CaseTag,
    pub dependency: Option<Dependency>,
}

impl SpecJson {
    pub fn from_spec(spec: &CubicKellerSpec) -> Self {
        SpecJson {
            n: spec.n,
            matrix: MatrixJson::from_matrix(&spec.a),
            derived_rank: spec.derived_rank,
            case_tag: spec.case_tag,
            dependency: spec.dependency.clone(),
        }
    }
}

fn linear_form(a: &RationalMatrix, col: usize) -> Polynomial {
    let n = a.rows();
    let terms = (0..n)
        .filter(|&j| !a.get(j, col).is_zero())
        .map(|j| (Monomial::var(n, j), a.get(j, col).clone()))
        .collect();
    Polynomial::from_terms(n, terms).expect("uniform arity")
}

fn build_cubic_map_from_matrix(a: &RationalMatrix) -> PolynomialMap {
    let n = a.rows();
    let components = (0..n)
        .map(|i| {
            Polynomial::variable(n, i)
                .add(&linear_form(a, i).pow(3))
                .expect("same arity")
        })
        .collect();
    PolynomialMap::new(components).expect("nonempty")
}

/// The map `x -> x + ((x A_1)^3, ..., (x A_n)^3)`, fully expanded.
pub fn build_cubic_map(spec: &CubicKellerSpec) -> PolynomialMap {
    build_cubic_map_from_matrix(&spec.a)
}

/// The three homogeneous constraint groups whose vanishing is equivalent to
/// a unit Jacobian determinant:
///
/// * `E1 = sum_i (x A_i)^2 a_i^i` (degree 2),
/// * `E2 = sum_{i<j} (x A_i)^2 (x A_j)^2 M_ij` with `M_ij` the principal
///   2x2 minor on rows and columns {i, j} (degree 4),
/// * `E3 = prod_i (x A_i)^2 * det A` for n = 3, zero for n = 2 (degree 6),
///
/// satisfying `det J - 1 = 3 E1 + 9 E2 + 27 E3` exactly.
pub fn system1(
    spec: &CubicKellerSpec,
) -> Result<(Polynomial, Polynomial, Polynomial), KellerError> {
    let n = spec.n;
    if !ANALYZED_DIMS.contains(&n) {
        return Err(KellerError::UnsupportedDimension { n });
    }
    let a = &spec.a;
    let forms: Vec<Polynomial> = (0..n).map(|i| linear_form(a, i)).collect();
    let squares: Vec<Polynomial> = forms.iter().map(|f| f.pow(2)).collect();

    let mut e1 = Polynomial::zero(n);
    for i in 0..n {
        e1 = e1.add(&squares[i].scale(a.get(i, i)))?;
    }

    let mut e2 = Polynomial::zero(n);
    for i in 0..n {
        for j in i + 1..n {
            let minor = a.minor(&[i, j], &[i, j])?;
            if minor.is_zero() {
                continue;
            }
            let prod = squares[i].mul(&squares[j])?;
            e2 = e2.add(&prod.scale(&minor))?;
        }
    }

    let e3 = if n == 3 {
        let det = a.det()?;
        if det.is_zero() {
            Polynomial::zero(n)
        } else {
            squares[0]
                .mul(&squares[1])?
                .mul(&squares[2])?
                .scale(&det)
        }
    } else {
        Polynomial::zero(n)
    };

    Ok((e1, e2, e3))
}

/// True when the Jacobian determinant of the built map is identically 1.
pub fn is_keller(spec: &CubicKellerSpec) -> bool {
    spec.keller
}

/// Case tag of a spec (computed during [`CubicKellerSpec::analyze`]).
pub fn classify(spec: &CubicKellerSpec) -> CaseTag {
    spec.case_tag
}

/// One way of reading a rank-2 matrix in dependency normal form.
struct Rank2Reading {
    permutation: Vec<usize>,
    lambda: (Rational, Rational),
    /// Entry (row 1, column 2) of the relabeled matrix; its vanishing
    /// separates the two rank-2 sub-cases.
    offdiag: Rational,
}

fn rank2_readings(a: &RationalMatrix) -> Vec<Rank2Reading> {
    let mut out = Vec::new();
    for perm in PERMS3 {
        let b = a.permuted(&perm);
        // Need columns 0 and 1 independent: some 2x2 row minor nonzero.
        let pair = (0..3)
            .flat_map(|r| (r + 1..3).map(move |s| (r, s)))
            .find(|&(r, s)| {
                !b.get(r, 0)
                    .mul(b.get(s, 1))
                    .sub(&b.get(s, 0).mul(b.get(r, 1)))
                    .is_zero()
            });
        let Some((r, s)) = pair else { continue };
        // Solve column2 = l1 * column0 + l2 * column1 on rows (r, s).
        let det = b
            .get(r, 0)
            .mul(b.get(s, 1))
            .sub(&b.get(s, 0).mul(b.get(r, 1)));
        let l1 = b
            .get(r, 2)
            .mul(b.get(s, 1))
            .sub(&b.get(s, 2).mul(b.get(r, 1)))
            .div(&det);
        let l2 = b
            .get(r, 0)
            .mul(b.get(s, 2))
            .sub(&b.get(s, 0).mul(b.get(r, 2)))
            .div(&det);
        // Confirm on all rows; rank 2 guarantees it.
        let consistent = (0..3).all(|row| {
            let expect = l1.mul(b.get(row, 0)).add(&l2.mul(b.get(row, 1)));
            b.get(row, 2) == &expect
        });
        if !consistent {
            continue;
        }
        out.push(Rank2Reading {
            permutation: perm.to_vec(),
            lambda: (l1, l2),
            offdiag: b.get(0, 1).clone(),
        });
    }
    out
}

fn rank1_dependency(a: &RationalMatrix, n: usize) -> Option<Dependency> {
    let perms: Vec<Vec<usize>> = if n == 3 {
        PERMS3.iter().map(|p| p.to_vec()).collect()
    } else {
        vec![vec![0, 1], vec![1, 0]]
    };
    for perm in perms {
        let b = a.permuted(&perm);
        let lead = (0..n).find(|&r| !b.get(r, 0).is_zero());
        let Some(lead) = lead else { continue };
        let pivot = b.get(lead, 0).clone();
        let mut lambda = Vec::with_capacity(n - 1);
        let mut ok = true;
        for k in 1..n {
            let l = b.get(lead, k).div(&pivot);
            for r in 0..n {
                if b.get(r, k) != &l.mul(b.get(r, 0)) {
                    ok = false;
                    break;
                }
            }
            if !ok {
                break;
            }
            lambda.push(l);
        }
        if ok {
            return Some(Dependency {
                permutation: perm,
                lambda,
            });
        }
    }
    None
}

fn classify_inner(
    a: &RationalMatrix,
    n: usize,
    rank: usize,
    keller: bool,
) -> (CaseTag, Option<Dependency>) {
    if n == 4 {
        return (CaseTag::Unclassified, None);
    }
    if !keller {
        return (CaseTag::NotKeller, None);
    }
    match rank {
        0 => (CaseTag::R1, None),
        1 => (CaseTag::R1, rank1_dependency(a, n)),
        2 if n == 3 => {
            let readings = rank2_readings(a);
            // The tag must be stable under simultaneous relabeling of
            // coordinates, so it is decided from the full reading set with a
            // fixed priority rather than from one arbitrary normal form.
            let pick_211 = readings
                .iter()
                .find(|r| r.lambda.0.is_zero() && r.offdiag.is_zero());
            if let Some(r) = pick_211 {
                return (
                    CaseTag::R211,
                    Some(Dependency {
                        permutation: r.permutation.clone(),
                        lambda: vec![r.lambda.0.clone(), r.lambda.1.clone()],
                    }),
                );
            }
            let pick_212 = readings.iter().find(|r| r.lambda.0.is_zero());
            if let Some(r) = pick_212 {
                return (
                    CaseTag::R212,
                    Some(Dependency {
                        permutation: r.permutation.clone(),
                        lambda: vec![r.lambda.0.clone(), r.lambda.1.clone()],
                    }),
                );
            }
            match readings.first() {
                Some(r) => (
                    CaseTag::R22,
                    Some(Dependency {
                        permutation: r.permutation.clone(),
                        lambda: vec![r.lambda.0.clone(), r.lambda.1.clone()],
                    }),
                ),
                None => (CaseTag::Unclassified, None),
            }
        }
        3 => (CaseTag::R3, None),
        _ => (CaseTag::Unclassified, None),
    }
}

/// Full verification record for one spec: the difference-sequence report
/// plus the case tag and the discovered linear witnesses.
#[derive(Clone)]
pub struct TheoremReport {
    pub spec: CubicKellerSpec,
    pub case: CaseTag,
    pub phi_report: PhiReport,
    pub witnesses_i0: Vec<Polynomial>,
    pub witnesses_i1: Vec<Polynomial>,
    pub timings_ms: BTreeMap<String, u64>,
}

impl TheoremReport {
    pub fn vanishing_index(&self) -> Option<usize> {
        self.phi_report.vanishing_index
    }

    /// The JSON report shape used by the command-line front end.
    pub fn to_json(&self) -> serde_json::Value {
        let inverse = self.phi_report.inverse.as_ref().map(|inv| {
            inv.components()
                .iter()
                .map(crate::parse::render)
                .collect::<Vec<_>>()
        });
        serde_json::json!({
            "case": self.case.to_string(),
            "vanishing_index": self.phi_report.vanishing_index,
            "inverse": inverse,
            "witnesses": {
                "I0": self.witnesses_i0.iter().map(crate::parse::render).collect::<Vec<_>>(),
                "I1": self.witnesses_i1.iter().map(crate::parse::render).collect::<Vec<_>>(),
            },
            "degrees": self.phi_report.degrees(),
            "timings_ms": self.timings_ms,
        })
    }
}

/// Bound within which every analyzed unit-Jacobian spec must vanish: the
/// rank-1 argument gives 2, the rank-2 arguments give 5.
pub const THEOREM_MAX_M: usize = 5;

/// Runs the difference sequence on a verified spec (n = 2 or 3) and attaches
/// the case tag and linear invariant witnesses. A bound or degree-cap miss
/// here contradicts the established result and is raised as an error rather
/// than returned as data.
pub fn verify_theorem(
    spec: &CubicKellerSpec,
    max_m: usize,
    degree_cap: Option<u64>,
) -> Result<TheoremReport, KellerError> {
    if !ANALYZED_DIMS.contains(&spec.n) {
        return Err(KellerError::UnsupportedDimension { n: spec.n });
    }
    if !spec.keller {
        return Err(KellerError::NotKeller);
    }
    let cap = degree_cap.unwrap_or_else(|| default_degree_cap(spec.n));
    let phi = build_cubic_map(spec);
    let t0 = Instant::now();
    let phi_report = detect_polynomial_inverse(&phi, max_m, cap)?;
    let detect_ms = t0.elapsed().as_millis() as u64;
    if phi_report.bound_exceeded || phi_report.degree_cap_hit {
        if max_m < THEOREM_MAX_M {
            return Err(KellerError::InconclusiveBound { max_m });
        }
        return Err(KellerError::TheoremContradiction {
            case: spec.case_tag,
            max_m,
        });
    }
    let t1 = Instant::now();
    let witnesses_i0 = invariant_basis(&phi, 1)?.basis;
    let witnesses_i1 = nearly_invariant_beyond(&phi, 1)?;
    let witness_ms = t1.elapsed().as_millis() as u64;
    let mut timings_ms = BTreeMap::new();
    timings_ms.insert("detect".to_string(), detect_ms);
    timings_ms.insert("witnesses".to_string(), witness_ms);
    timings_ms.insert("total".to_string(), detect_ms + witness_ms);
    Ok(TheoremReport {
        spec: spec.clone(),
        case: spec.case_tag,
        phi_report,
        witnesses_i0,
        witnesses_i1,
        timings_ms,
    })
}

// Symbolic variable order for the rank-2 constraint system: the two
// independent linear form values u = x A_1, v = x A_2, the entries of the
// two independent columns (column-major), then the dependency coefficients.
const SYM_U: usize = 0;
const SYM_V: usize = 1;
const SYM_C1: [usize; 3] = [2, 3, 4];
const SYM_C2: [usize; 3] = [5, 6, 7];
const SYM_L1: usize = 8;
const SYM_L2: usize = 9;
const SYM_NVARS: usize = 10;
/// Parameter-only variables of a rank-2 generator, in order: the first
/// independent column's entries, the second's, then the two dependency
/// coefficients.
pub const SYSTEM2_NVARS: usize = 8;

fn sym(i: usize) -> Polynomial {
    Polynomial::variable(SYM_NVARS, i)
}

/// Drops the u, v exponents (both zero) from a 10-variable monomial,
/// yielding an 8-variable parameter polynomial.
fn drop_uv(p: &Polynomial) -> Polynomial {
    let terms = p
        .terms()
        .iter()
        .map(|(m, c)| {
            debug_assert_eq!(m.exp(SYM_U), 0);
            debug_assert_eq!(m.exp(SYM_V), 0);
            (
                Monomial::new(&m.exps()[2..]).expect("within limit"),
                c.clone(),
            )
        })
        .collect();
    Polynomial::from_terms(SYSTEM2_NVARS, terms).expect("uniform arity")
}

/// Rank-2 constraint generators recomputed from first principles: expand
/// E1 and E2 with `x A_3 = l1 u + l2 v` substituted, then read off the
/// coefficient of every (u, v) monomial. Each generator is returned monic.
pub fn system2_generators() -> Vec<Polynomial> {
    let u = sym(SYM_U);
    let v = sym(SYM_V);
    let a33 = sym(SYM_L1)
        .mul(&sym(SYM_C1[2]))
        .unwrap()
        .add(&sym(SYM_L2).mul(&sym(SYM_C2[2])).unwrap())
        .unwrap();
    let a3 = |j: usize| {
        sym(SYM_L1)
            .mul(&sym(SYM_C1[j]))
            .unwrap()
            .add(&sym(SYM_L2).mul(&sym(SYM_C2[j])).unwrap())
            .unwrap()
    };
    // Principal 2x2 minors with the dependent column substituted.
    let d12 = sym(SYM_C1[0])
        .mul(&sym(SYM_C2[1]))
        .unwrap()
        .sub(&sym(SYM_C2[0]).mul(&sym(SYM_C1[1])).unwrap())
        .unwrap();
    let d13 = sym(SYM_C1[0])
        .mul(&a33)
        .unwrap()
        .sub(&a3(0).mul(&sym(SYM_C1[2])).unwrap())
        .unwrap();
    let d23 = sym(SYM_C2[1])
        .mul(&a33)
        .unwrap()
        .sub(&a3(1).mul(&sym(SYM_C2[2])).unwrap())
        .unwrap();

    let w = sym(SYM_L1)
        .mul(&u)
        .unwrap()
        .add(&sym(SYM_L2).mul(&v).unwrap())
        .unwrap();
    let u2 = u.pow(2);
    let v2 = v.pow(2);
    let w2 = w.pow(2);

    let e1 = u2
        .mul(&sym(SYM_C1[0]))
        .unwrap()
        .add(&v2.mul(&sym(SYM_C2[1])).unwrap())
        .unwrap()
        .add(&w2.mul(&a33).unwrap())
        .unwrap();
    let e2 = u2
        .mul(&v2)
        .unwrap()
        .mul(&d12)
        .unwrap()
        .add(&u2.mul(&w2).unwrap().mul(&d13).unwrap())
        .unwrap()
        .add(&v2.mul(&w2).unwrap().mul(&d23).unwrap())
        .unwrap();

    let mut gens = Vec::new();
    for e in [e1, e2] {
        // Group terms by their (u, v) exponents; each coefficient polynomial
        // in the parameters must vanish identically.
        let mut groups: BTreeMap<(u32, u32), Vec<(Monomial, Rational)>> = BTreeMap::new();
        for (m, c) in e.terms() {
            let key = (m.exp(SYM_U), m.exp(SYM_V));
            let mut stripped = m.exps().to_vec();
            stripped[SYM_U] = 0;
            stripped[SYM_V] = 0;
            groups
                .entry(key)
                .or_default()
                .push((Monomial::new(&stripped).unwrap(), c.clone()));
        }
        let mut keys: Vec<_> = groups.keys().cloned().collect();
        keys.sort_by(|a, b| b.cmp(a));
        for key in keys {
            let terms = groups.remove(&key).unwrap();
            let p = Polynomial::from_terms(SYM_NVARS, terms).unwrap();
            if !p.is_zero() {
                gens.push(drop_uv(&p).monic());
            }
        }
    }
    gens
}

/// The rank-2 constraint system instantiated on one spec.
pub struct System2 {
    /// Relabeling taking the spec to dependency normal form.
    pub permutation: Vec<usize>,
    pub lambda: (Rational, Rational),
    /// Symbolic generators in the [`SYSTEM2_NVARS`] parameter variables.
    pub generators: Vec<Polynomial>,
    /// Generators evaluated at this spec's entries; all zero exactly when
    /// the spec has unit Jacobian.
    pub residuals: Vec<Rational>,
}

/// Instantiates the rank-2 constraint system on a spec of rank 2 (n = 3).
pub fn system2(spec: &CubicKellerSpec) -> Result<System2, KellerError> {
    if spec.n != 3 {
        return Err(KellerError::UnsupportedDimension { n: spec.n });
    }
    if spec.derived_rank != 2 {
        return Err(KellerError::WrongRank {
            expected: 2,
            got: spec.derived_rank,
        });
    }
    let reading = match &spec.dependency {
        Some(dep) if dep.lambda.len() == 2 => (dep.permutation.clone(), dep.lambda.clone()),
        _ => {
            let readings = rank2_readings(&spec.a);
            let r = readings.first().expect("rank 2 always has a reading");
            (
                r.permutation.clone(),
                vec![r.lambda.0.clone(), r.lambda.1.clone()],
            )
        }
    };
    let (permutation, lambda) = reading;
    let b = spec.a.permuted(&permutation);
    let point: Vec<Rational> = (0..3)
        .map(|r| b.get(r, 0).clone())
        .chain((0..3).map(|r| b.get(r, 1).clone()))
        .chain([lambda[0].clone(), lambda[1].clone()])
        .collect();
    let generators = system2_generators();
    let residuals = generators
        .iter()
        .map(|g| g.eval(&point))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(System2 {
        permutation,
        lambda: (lambda[0].clone(), lambda[1].clone()),
        generators,
        residuals,
    })
}

/// Constructs a rank-at-most-1 spec (n = 3) satisfying the unit-Jacobian
/// constraint by deriving the top entry of the generating column from the
/// free entries and dependency coefficients.
pub fn rank1_spec(
    a12: Rational,
    a13: Rational,
    l2: Rational,
    l3: Rational,
) -> CubicKellerSpec {
    let a11 = l2.pow(3).mul(&a12).add(&l3.pow(3).mul(&a13)).neg();
    let col1 = [a11, a12, a13];
    let rows: Vec<Vec<Rational>> = (0..3)
        .map(|r| {
            vec![
                col1[r].clone(),
                l2.mul(&col1[r]),
                l3.mul(&col1[r]),
            ]
        })
        .collect();
    CubicKellerSpec::analyze(RationalMatrix::from_rows(rows).unwrap())
        .expect("square matrix")
}

/// Two-variable analog of [`rank1_spec`].
pub fn rank1_spec_n2(a12: Rational, l2: Rational) -> CubicKellerSpec {
    let a11 = l2.pow(3).mul(&a12).neg();
    let col1 = [a11, a12];
    let rows: Vec<Vec<Rational>> = (0..2)
        .map(|r| vec![col1[r].clone(), l2.mul(&col1[r])])
        .collect();
    CubicKellerSpec::analyze(RationalMatrix::from_rows(rows).unwrap())
        .expect("square matrix")
}

/// Constructs the no-feedback rank-2 normal form: columns
/// `(0, p, q)`, `(0, -l^3 s, s)`, and `l` times the second. Keller for all
/// parameter values; rank 2 exactly when `s != 0` and `p + l^3 q != 0`.
pub fn r211_spec(p: Rational, q: Rational, s: Rational, l: Rational) -> CubicKellerSpec {
    let l3 = l.pow(3);
    let col1 = [Rational::zero(), p, q];
    let col2 = [Rational::zero(), l3.mul(&s).neg(), s];
    let rows: Vec<Vec<Rational>> = (0..3)
        .map(|r| vec![col1[r].clone(), col2[r].clone(), l.mul(&col2[r])])
        .collect();
    CubicKellerSpec::analyze(RationalMatrix::from_rows(rows).unwrap())
        .expect("square matrix")
}

/// Constructs the feedback rank-2 normal form: columns
/// `(0, -l^3 t, t)`, `(b, -l^3 s, s)`, and `l` times the second. Keller for
/// all parameter values; lands in the feedback sub-case when `t != 0`,
/// `b != 0` and `l != 0`.
pub fn r212_spec(t: Rational, b: Rational, s: Rational, l: Rational) -> CubicKellerSpec {
    let l3 = l.pow(3);
    let col1 = [Rational::zero(), l3.mul(&t).neg(), t];
    let col2 = [b, l3.mul(&s).neg(), s];
    let rows: Vec<Vec<Rational>> = (0..3)
        .map(|r| vec![col1[r].clone(), col2[r].clone(), l.mul(&col2[r])])
        .collect();
    CubicKellerSpec::analyze(RationalMatrix::from_rows(rows).unwrap())
        .expect("square matrix")
}

/// The worked three-variable instance with increments `(x2+x3)^3`,
/// `(x3-x2)^3`, `(x3-x2)^3`; no-feedback rank-2 case with unit dependency.
pub fn shift_instance_spec() -> CubicKellerSpec {
    r211_spec(
        Rational::one(),
        Rational::one(),
        Rational::one(),
        Rational::one(),
    )
}
