//! Bases of map-invariant polynomials up to a degree bound.
//!
//! A polynomial `f` is invariant for a square map `phi` when `f . phi = f`
//! (equivalently the first difference vanishes), and nearly invariant when
//! its second difference vanishes, i.e. `f . phi - f` is itself invariant.
//! Both sets are computed as nullspaces of the corresponding linear operator
//! on the monomial coefficient space. Constants, which are trivially
//! invariant, are excluded throughout.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::binomial;

use crate::linalg::RationalMatrix;
use crate::map::{phi_recurrent, MapError, PolynomialMap};
use crate::poly::{Monomial, Polynomial};
use crate::rat::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InvariantError {
    NonSquare { domain: usize, codomain: usize },
    ZeroDegreeBound,
    /// The input polynomial is not nearly invariant, so the requested
    /// decomposition does not apply.
    NotNearlyInvariant,
    ArityMismatch { expected: usize, got: usize },
    Map(MapError),
}

impl fmt::Display for InvariantError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvariantError::NonSquare { domain, codomain } => {
                write!(f, "map is {domain} -> {codomain}, a square map is required")
            }
            InvariantError::ZeroDegreeBound => write!(f, "degree bound must be positive"),
            InvariantError::NotNearlyInvariant => {
                write!(f, "polynomial is not nearly invariant for this map")
            }
            InvariantError::ArityMismatch { expected, got } => {
                write!(f, "polynomial has {got} variables, map expects {expected}")
            }
            InvariantError::Map(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for InvariantError {}

impl From<MapError> for InvariantError {
    fn from(e: MapError) -> Self {
        InvariantError::Map(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    Invariant,
    NearlyInvariant,
}

/// A basis of (nearly) invariant polynomials below a degree bound, in
/// echelon form with monic graded-lex leading terms.
#[derive(Clone)]
pub struct InvariantBasis {
    pub kind: BasisKind,
    pub degree_bound: usize,
    pub basis: Vec<Polynomial>,
}

/// All monomials in `nvars` variables with `1 <= degree <= d`, in descending
/// graded-lex order to match the polynomial canonical form.
fn monomials_up_to(nvars: usize, d: u64, include_constant: bool) -> Vec<Monomial> {
    fn fill(nvars: usize, d: u64, prefix: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if prefix.len() == nvars {
            out.push(Monomial::new(prefix).expect("within variable limit"));
            return;
        }
        let used: u64 = prefix.iter().map(|&e| e as u64).sum();
        for e in 0..=(d - used) {
            prefix.push(e as u32);
            fill(nvars, d, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    fill(nvars, d, &mut Vec::new(), &mut out);
    out.retain(|m| include_constant || !m.is_constant());
    out.sort_by(|a, b| b.cmp_grlex(a));
    out
}

/// Sends each source monomial through `op` and assembles the column-per-input
/// coefficient matrix of the resulting polynomials.
fn operator_matrix(
    sources: &[Monomial],
    images: &[Polynomial],
    nvars: usize,
    max_deg: u64,
) -> RationalMatrix {
    let rows_index: HashMap<Monomial, usize> = monomials_up_to(nvars, max_deg, true)
        .into_iter()
        .enumerate()
        .map(|(i, m)| (m, i))
        .collect();
    let mut mat = RationalMatrix::zero(rows_index.len(), sources.len());
    for (col, image) in images.iter().enumerate() {
        for (m, c) in image.terms() {
            let row = *rows_index
                .get(m)
                .expect("image degree exceeded the computed bound");
            mat.set(row, col, c.clone());
        }
    }
    mat
}

/// Powers of every component of `phi` up to exponent `d`, so a monomial
/// `x^e` composed with `phi` is a product of table entries.
struct ComponentPowers {
    powers: Vec<Vec<Polynomial>>,
}

impl ComponentPowers {
    fn new(phi: &PolynomialMap, d: u64) -> Self {
        let powers = phi
            .components()
            .iter()
            .map(|c| {
                let mut v = vec![Polynomial::one(c.nvars()), c.clone()];
                for _ in 1..d {
                    let next = v.last().unwrap().mul(c).expect("same arity");
                    v.push(next);
                }
                v
            })
            .collect();
        ComponentPowers { powers }
    }

    fn compose_monomial(&self, m: &Monomial, nvars: usize) -> Polynomial {
        let mut acc = Polynomial::one(nvars);
        for (i, &e) in m.exps().iter().enumerate() {
            if e > 0 {
                acc = acc.mul(&self.powers[i][e as usize]).expect("same arity");
            }
        }
        acc
    }
}

fn check_square(phi: &PolynomialMap, d: usize) -> Result<(), InvariantError> {
    if !phi.is_square() {
        return Err(InvariantError::NonSquare {
            domain: phi.domain_dim(),
            codomain: phi.codomain_dim(),
        });
    }
    if d == 0 {
        return Err(InvariantError::ZeroDegreeBound);
    }
    Ok(())
}

/// Gaussian reduction of a set of polynomials to echelon form over the
/// monomial coordinates: pairwise distinct leading monomials, monic, fully
/// inter-reduced, sorted by leading monomial descending.
fn echelon_reduce(mut polys: Vec<Polynomial>) -> Vec<Polynomial> {
    let mut echelon: Vec<Polynomial> = Vec::new();
    polys.retain(|p| !p.is_zero());
    for mut p in polys {
        loop {
            p = reduce_once(p, &echelon);
            if p.is_zero() {
                break;
            }
            // Fully reduced against current pivots?
            let lead = *p.leading_term().unwrap().0;
            if echelon
                .iter()
                .all(|e| *e.leading_term().unwrap().0 != lead)
            {
                let monic = p.monic();
                // Clear this new pivot from earlier rows.
                for e in echelon.iter_mut() {
                    let c = e.coeff(&lead);
                    if !c.is_zero() {
                        *e = e.sub(&monic.scale(&c)).expect("same arity");
                    }
                }
                echelon.push(monic);
                break;
            }
        }
    }
    echelon.sort_by(|a, b| {
        b.leading_term()
            .unwrap()
            .0
            .cmp_grlex(a.leading_term().unwrap().0)
    });
    echelon
}

/// One full reduction pass of `p` against the echelon pivots.
fn reduce_once(mut p: Polynomial, echelon: &[Polynomial]) -> Polynomial {
    loop {
        let mut reduced = false;
        for e in echelon {
            if p.is_zero() {
                return p;
            }
            let pivot = e.leading_term().unwrap().0;
            let c = p.coeff(pivot);
            if !c.is_zero() {
                p = p.sub(&e.scale(&c)).expect("same arity");
                reduced = true;
            }
        }
        if !reduced {
            return p;
        }
    }
}

fn nullspace_polys(
    phi: &PolynomialMap,
    d: usize,
    op_images: impl Fn(&Monomial) -> Polynomial,
    max_deg: u64,
) -> Vec<Polynomial> {
    let n = phi.domain_dim();
    let sources = monomials_up_to(n, d as u64, false);
    let images: Vec<Polynomial> = sources.iter().map(op_images).collect();
    let mat = operator_matrix(&sources, &images, n, max_deg);
    mat.nullspace()
        .into_iter()
        .map(|v| {
            let terms = sources
                .iter()
                .enumerate()
                .map(|(i, m)| (*m, v.get(i, 0).clone()))
                .collect();
            Polynomial::from_terms(n, terms).expect("uniform arity")
        })
        .collect()
}

/// Basis of `{f : deg f <= d, f . phi = f, f(0) = 0}`.
pub fn invariant_basis(phi: &PolynomialMap, d: usize) -> Result<InvariantBasis, InvariantError> {
    check_square(phi, d)?;
    let n = phi.domain_dim();
    let deg_phi = phi.degree().unwrap_or(1).max(1);
    let powers = ComponentPowers::new(phi, d as u64);
    let polys = nullspace_polys(
        phi,
        d,
        |m| {
            let composed = powers.compose_monomial(m, n);
            let original = Polynomial::from_terms(n, vec![(*m, Rational::one())]).unwrap();
            composed.sub(&original).expect("same arity")
        },
        d as u64 * deg_phi,
    );
    let basis = echelon_reduce(polys);
    debug_assert!(basis.iter().all(|f| {
        let fm = PolynomialMap::new(vec![f.clone()]).unwrap();
        phi_recurrent(&fm, phi, 1).unwrap().is_zero_map()
    }));
    Ok(InvariantBasis {
        kind: BasisKind::Invariant,
        degree_bound: d,
        basis,
    })
}

fn nearly_nullspace(phi: &PolynomialMap, d: usize) -> Result<Vec<Polynomial>, InvariantError> {
    let n = phi.domain_dim();
    let deg_phi = phi.degree().unwrap_or(1).max(1);
    let phi2 = phi.compose(phi)?;
    let p1 = ComponentPowers::new(phi, d as u64);
    let p2 = ComponentPowers::new(&phi2, d as u64);
    let two = Rational::from_integer(2);
    Ok(nullspace_polys(
        phi,
        d,
        |m| {
            // Second difference of the monomial: m - 2 m.phi + m.phi^2.
            let original = Polynomial::from_terms(n, vec![(*m, Rational::one())]).unwrap();
            let once = p1.compose_monomial(m, n);
            let twice = p2.compose_monomial(m, n);
            original
                .sub(&once.scale(&two))
                .and_then(|p| p.add(&twice))
                .expect("same arity")
        },
        d as u64 * deg_phi * deg_phi,
    ))
}

/// Basis of `{f : deg f <= d, second difference of f vanishes, f(0) = 0}`.
/// The invariant basis is a subset of this space; representatives beyond it
/// are reduced against the invariant basis so output is deterministic.
pub fn nearly_invariant_basis(
    phi: &PolynomialMap,
    d: usize,
) -> Result<InvariantBasis, InvariantError> {
    check_square(phi, d)?;
    let inv = invariant_basis(phi, d)?;
    let beyond = nearly_invariant_beyond_impl(phi, d, &inv)?;
    let mut basis = inv.basis;
    basis.extend(beyond);
    basis.sort_by(|a, b| {
        b.leading_term()
            .unwrap()
            .0
            .cmp_grlex(a.leading_term().unwrap().0)
    });
    Ok(InvariantBasis {
        kind: BasisKind::NearlyInvariant,
        degree_bound: d,
        basis,
    })
}

/// The strictly-nearly-invariant representatives: a basis of the second
/// difference nullspace modulo the invariant subspace.
pub fn nearly_invariant_beyond(
    phi: &PolynomialMap,
    d: usize,
) -> Result<Vec<Polynomial>, InvariantError> {
    check_square(phi, d)?;
    let inv = invariant_basis(phi, d)?;
    nearly_invariant_beyond_impl(phi, d, &inv)
}

fn nearly_invariant_beyond_impl(
    phi: &PolynomialMap,
    d: usize,
    inv: &InvariantBasis,
) -> Result<Vec<Polynomial>, InvariantError> {
    let nearly = nearly_nullspace(phi, d)?;
    let reduced: Vec<Polynomial> = nearly
        .into_iter()
        .map(|p| reduce_once(p, &inv.basis))
        .filter(|p| !p.is_zero())
        .collect();
    Ok(echelon_reduce(reduced))
}

/// True when the second difference of `f` along `phi` vanishes.
pub fn is_nearly_invariant(f: &Polynomial, phi: &PolynomialMap) -> Result<bool, InvariantError> {
    if f.nvars() != phi.domain_dim() {
        return Err(InvariantError::ArityMismatch {
            expected: phi.domain_dim(),
            got: f.nvars(),
        });
    }
    let fm = PolynomialMap::new(vec![f.clone()])?;
    Ok(phi_recurrent(&fm, phi, 2)?.is_zero_map())
}

/// For a nearly invariant `f`, checks that the (m+1)-th difference of `f^m`
/// vanishes for every `1 <= m <= m_max`, returning one flag per exponent.
pub fn check_power_difference_vanishing(
    f: &Polynomial,
    phi: &PolynomialMap,
    m_max: usize,
) -> Result<Vec<(usize, bool)>, InvariantError> {
    if !is_nearly_invariant(f, phi)? {
        return Err(InvariantError::NotNearlyInvariant);
    }
    let mut out = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let power = PolynomialMap::new(vec![f.pow(m as u32)])?;
        let diff = phi_recurrent(&power, phi, m + 1)?;
        out.push((m, diff.is_zero_map()));
    }
    Ok(out)
}

/// Writes `f^m - (f . phi)^m` as `sum_i f^i c_i` with every `c_i` invariant:
/// with `f . phi = f + f0`, binomial expansion gives
/// `c_i = -C(m, i) f0^(m-i)`. Both the membership of each `c_i` and the full
/// identity are re-verified exactly before returning.
pub fn decompose_c_i(
    f: &Polynomial,
    phi: &PolynomialMap,
    m: usize,
) -> Result<Vec<Polynomial>, InvariantError> {
    if m == 0 {
        return Ok(Vec::new());
    }
    if !is_nearly_invariant(f, phi)? {
        return Err(InvariantError::NotNearlyInvariant);
    }
    let composed = f.substitute(phi.components()).map_err(MapError::Poly)?;
    let f0 = composed.sub(f).map_err(MapError::Poly)?;
    let m_big = BigInt::from(m);
    let mut cs = Vec::with_capacity(m);
    for i in 0..m {
        let coeff =
            Rational::from_integer(binomial(m_big.clone(), BigInt::from(i))).neg();
        let c_i = f0.pow((m - i) as u32).scale(&coeff);
        let as_map = PolynomialMap::new(vec![c_i.clone()])?;
        if !phi_recurrent(&as_map, phi, 1)?.is_zero_map() {
            return Err(InvariantError::NotNearlyInvariant);
        }
        cs.push(c_i);
    }
    // Re-verify the identity itself.
    let lhs = f
        .pow(m as u32)
        .sub(&composed.pow(m as u32))
        .map_err(MapError::Poly)?;
    let mut rhs = Polynomial::zero(f.nvars());
    for (i, c_i) in cs.iter().enumerate() {
        let term = f.pow(i as u32).mul(c_i).map_err(MapError::Poly)?;
        rhs = rhs.add(&term).map_err(MapError::Poly)?;
    }
    if lhs != rhs {
        return Err(InvariantError::Map(MapError::InverseVerificationFailed));
    }
    Ok(cs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_polynomial;

    fn map(n: usize, comps: &[&str]) -> PolynomialMap {
        PolynomialMap::new(
            comps
                .iter()
                .map(|s| parse_polynomial(s, Some(n)).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn p(s: &str, n: usize) -> Polynomial {
        parse_polynomial(s, Some(n)).unwrap()
    }

    fn triangular() -> PolynomialMap {
        map(2, &["x1 + x2^3", "x2"])
    }

    /// The worked three-variable instance whose increments are cubes of
    /// x2 + x3 and x3 - x2.
    fn shift_instance() -> PolynomialMap {
        let u3 = p("x2 + x3", 3).pow(3);
        let v3 = p("x3 - x2", 3).pow(3);
        PolynomialMap::new(vec![
            p("x1", 3).add(&u3).unwrap(),
            p("x2", 3).add(&v3).unwrap(),
            p("x3", 3).add(&v3).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn identity_map_fixes_everything() {
        let id = PolynomialMap::identity(2);
        let b = invariant_basis(&id, 1).unwrap();
        assert_eq!(b.basis, vec![p("x1", 2), p("x2", 2)]);
    }

    #[test]
    fn triangular_linear_invariants() {
        let b = invariant_basis(&triangular(), 1).unwrap();
        assert_eq!(b.basis, vec![p("x2", 2)]);
    }

    #[test]
    fn shift_instance_linear_invariant() {
        let b = invariant_basis(&shift_instance(), 1).unwrap();
        assert_eq!(b.basis.len(), 1);
        // Proportional to x3 - x2; echelon form is monic in x2.
        assert_eq!(b.basis[0], p("x2 - x3", 3));
    }

    #[test]
    fn invariant_basis_elements_are_fixed() {
        for phi in [triangular(), shift_instance()] {
            let b = invariant_basis(&phi, 2).unwrap();
            for f in &b.basis {
                let composed = f.substitute(phi.components()).unwrap();
                assert_eq!(&composed, f);
            }
        }
    }

    #[test]
    fn invariants_closed_under_ring_operations() {
        let phi = shift_instance();
        let b = invariant_basis(&phi, 1).unwrap();
        for a in &b.basis {
            for c in &b.basis {
                for comb in [a.add(c).unwrap(), a.mul(c).unwrap()] {
                    let composed = comb.substitute(phi.components()).unwrap();
                    assert_eq!(composed, comb);
                }
            }
        }
    }

    #[test]
    fn nearly_invariant_for_identity_equals_invariant() {
        let id = PolynomialMap::identity(2);
        let inv = invariant_basis(&id, 1).unwrap();
        let nearly = nearly_invariant_basis(&id, 1).unwrap();
        assert_eq!(nearly.basis, inv.basis);
        assert!(nearly_invariant_beyond(&id, 1).unwrap().is_empty());
    }

    #[test]
    fn triangular_nearly_invariant_contains_x1() {
        let phi = triangular();
        let nearly = nearly_invariant_basis(&phi, 1).unwrap();
        assert!(nearly.basis.contains(&p("x1", 2)));
        let beyond = nearly_invariant_beyond(&phi, 1).unwrap();
        assert_eq!(beyond, vec![p("x1", 2)]);
        // Direct confirmation: x1 . phi - x1 = x2^3 is invariant.
        assert!(is_nearly_invariant(&p("x1", 2), &phi).unwrap());
    }

    #[test]
    fn nearly_invariant_second_difference_vanishes() {
        let phi = shift_instance();
        let nearly = nearly_invariant_basis(&phi, 1).unwrap();
        for f in &nearly.basis {
            assert!(is_nearly_invariant(f, &phi).unwrap());
            let rows = check_power_difference_vanishing(f, &phi, 2).unwrap();
            assert!(rows.iter().all(|(_, zero)| *zero));
        }
    }

    #[test]
    fn feedback_form_has_linear_nearly_invariant() {
        // Second shape of the rank-2 analysis: increments a*v^3 and
        // (b*x1 + c*v)^3 with v = x3 - lambda*x2; here a=b=c=lambda=1.
        let v = p("x3 - x2", 3);
        let g = p("x1", 3).add(&v).unwrap();
        let phi = PolynomialMap::new(vec![
            p("x1", 3).add(&v.pow(3)).unwrap(),
            p("x2", 3).add(&g.pow(3)).unwrap(),
            p("x3", 3).add(&g.pow(3)).unwrap(),
        ])
        .unwrap();
        assert!(is_nearly_invariant(&p("x1", 3), &phi).unwrap());
        let beyond = nearly_invariant_beyond(&phi, 1).unwrap();
        assert_eq!(beyond, vec![p("x1", 3)]);
    }

    #[test]
    fn power_differences_vanish_for_invariants() {
        // Invariants have vanishing first difference already.
        let phi = triangular();
        let out = check_power_difference_vanishing(&p("x2", 2), &phi, 3).unwrap();
        assert!(out.iter().all(|(_, z)| *z));
    }

    #[test]
    fn power_differences_on_triangular_x1() {
        let phi = triangular();
        let out = check_power_difference_vanishing(&p("x1", 2), &phi, 3).unwrap();
        assert_eq!(out, vec![(1, true), (2, true), (3, true)]);
    }

    #[test]
    fn power_differences_on_shift_instance() {
        let phi = shift_instance();
        let out = check_power_difference_vanishing(&p("x2 + x3", 3), &phi, 3).unwrap();
        assert!(out.iter().all(|(_, z)| *z));
    }

    #[test]
    fn power_differences_reject_non_member() {
        let phi = shift_instance();
        assert!(matches!(
            check_power_difference_vanishing(&p("x1", 3), &phi, 2),
            Err(InvariantError::NotNearlyInvariant)
        ));
    }

    #[test]
    fn decompose_linear_case() {
        let phi = triangular();
        let f = p("x1", 2);
        let cs = decompose_c_i(&f, &phi, 1).unwrap();
        // c_0 = -f0 with f0 = x2^3.
        assert_eq!(cs, vec![p("-x2^3", 2)]);
    }

    #[test]
    fn decompose_quadratic_case() {
        let phi = triangular();
        let f = p("x1", 2);
        let cs = decompose_c_i(&f, &phi, 2).unwrap();
        assert_eq!(cs, vec![p("x2^3", 2).pow(2).neg(), p("-2*x2^3", 2)]);
    }

    #[test]
    fn decompose_shift_instance() {
        let phi = shift_instance();
        let f = p("x2 + x3", 3);
        // f . phi - f = 2 (x3 - x2)^3.
        let f0 = f.substitute(phi.components()).unwrap().sub(&f).unwrap();
        assert_eq!(f0, p("x3 - x2", 3).pow(3).scale(&Rational::from_integer(2)));
        let cs = decompose_c_i(&f, &phi, 2).unwrap();
        assert_eq!(cs.len(), 2);
        // Identity is re-verified inside; spot-check c_1 = -2 f0.
        assert_eq!(cs[1], f0.scale(&Rational::from_integer(-2)));
    }

    #[test]
    fn monomial_enumeration_counts() {
        // Three variables, degree <= 2: C(5,3) = 10 monomials with constant,
        // 9 without.
        assert_eq!(monomials_up_to(3, 2, true).len(), 10);
        assert_eq!(monomials_up_to(3, 2, false).len(), 9);
    }
}
