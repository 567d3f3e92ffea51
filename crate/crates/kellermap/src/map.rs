//! Polynomial maps, composition, the iterated difference operator, Jacobians,
//! and inverse reconstruction.
//!
//! For a square map `phi` and any map `f` sharing its domain, the operator
//! sequence is `D_0(f) = f`, `D_{m+1}(f) = D_m(f) - D_m(f) . phi`, which has
//! the closed form `D_m(f) = sum_k (-1)^k C(m,k) f . phi^k`. When `phi` is a
//! perturbation of the identity and `D_m(id) = 0`, the map `sum_{j<m} D_j(id)`
//! inverts `phi`; the reconstruction here is always confirmed by composing
//! both ways before it is reported.

use std::fmt;

use num_bigint::BigInt;
use num_integer::binomial;

use crate::linalg::PolynomialMatrix;
use crate::parse::parse_polynomial;
use crate::poly::{PolyError, Polynomial};
use crate::rat::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MapError {
    DimensionMismatch { expected: usize, got: usize },
    NonSquare { domain: usize, codomain: usize },
    EmptyMap,
    /// The map must fix the origin and have identity linear part.
    LinearPartNotIdentity,
    /// A reconstructed inverse failed the composition check. This indicates
    /// an engine bug and is never reported as data.
    InverseVerificationFailed,
    Poly(PolyError),
    Io(String),
}

impl fmt::Display for MapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapError::DimensionMismatch { expected, got } => {
                write!(f, "map dimension mismatch: expected {expected}, got {got}")
            }
            MapError::NonSquare { domain, codomain } => {
                write!(f, "map is {domain} -> {codomain}, a square map is required")
            }
            MapError::EmptyMap => write!(f, "a map needs at least one component"),
            MapError::LinearPartNotIdentity => {
                write!(
                    f,
                    "map must be the identity plus terms of degree two or higher"
                )
            }
            MapError::InverseVerificationFailed => {
                write!(f, "internal error: reconstructed inverse failed verification")
            }
            MapError::Poly(e) => write!(f, "{e}"),
            MapError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for MapError {}

impl From<PolyError> for MapError {
    fn from(e: PolyError) -> Self {
        MapError::Poly(e)
    }
}

/// A tuple of polynomials sharing one domain arity.
#[derive(Clone, PartialEq, Eq)]
pub struct PolynomialMap {
    domain_dim: usize,
    components: Vec<Polynomial>,
}

impl PolynomialMap {
    pub fn new(components: Vec<Polynomial>) -> Result<Self, MapError> {
        let Some(first) = components.first() else {
            return Err(MapError::EmptyMap);
        };
        let n = first.nvars();
        for c in &components {
            if c.nvars() != n {
                return Err(MapError::DimensionMismatch {
                    expected: n,
                    got: c.nvars(),
                });
            }
        }
        Ok(PolynomialMap {
            domain_dim: n,
            components,
        })
    }

    pub fn identity(n: usize) -> Self {
        PolynomialMap {
            domain_dim: n,
            components: (0..n).map(|i| Polynomial::variable(n, i)).collect(),
        }
    }

    pub fn zero(domain_dim: usize, codomain_dim: usize) -> Self {
        PolynomialMap {
            domain_dim,
            components: vec![Polynomial::zero(domain_dim); codomain_dim],
        }
    }

    pub fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    pub fn codomain_dim(&self) -> usize {
        self.components.len()
    }

    pub fn is_square(&self) -> bool {
        self.domain_dim == self.components.len()
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Polynomial {
        &self.components[i]
    }

    pub fn is_zero_map(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && self
                .components
                .iter()
                .enumerate()
                .all(|(i, c)| *c == Polynomial::variable(self.domain_dim, i))
    }

    /// Largest component degree; `None` for the zero map.
    pub fn degree(&self) -> Option<u64> {
        self.components.iter().filter_map(|c| c.total_degree()).max()
    }

    /// `self . g`: apply `g` first, then `self`.
    pub fn compose(&self, g: &PolynomialMap) -> Result<PolynomialMap, MapError> {
        if g.codomain_dim() != self.domain_dim {
            return Err(MapError::DimensionMismatch {
                expected: self.domain_dim,
                got: g.codomain_dim(),
            });
        }
        let components = self
            .components
            .iter()
            .map(|c| c.substitute(&g.components))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PolynomialMap {
            domain_dim: g.domain_dim,
            components,
        })
    }

    pub fn add(&self, other: &PolynomialMap) -> Result<PolynomialMap, MapError> {
        self.zip_with(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &PolynomialMap) -> Result<PolynomialMap, MapError> {
        self.zip_with(other, |a, b| a.sub(b))
    }

    fn zip_with(
        &self,
        other: &PolynomialMap,
        op: impl Fn(&Polynomial, &Polynomial) -> Result<Polynomial, PolyError>,
    ) -> Result<PolynomialMap, MapError> {
        if self.domain_dim != other.domain_dim || self.codomain_dim() != other.codomain_dim() {
            return Err(MapError::DimensionMismatch {
                expected: self.codomain_dim(),
                got: other.codomain_dim(),
            });
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| op(a, b))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PolynomialMap {
            domain_dim: self.domain_dim,
            components,
        })
    }

    pub fn scale(&self, c: &Rational) -> PolynomialMap {
        PolynomialMap {
            domain_dim: self.domain_dim,
            components: self.components.iter().map(|p| p.scale(c)).collect(),
        }
    }

    /// Componentwise product with a scalar polynomial of the same arity.
    pub fn scale_poly(&self, factor: &Polynomial) -> Result<PolynomialMap, MapError> {
        let components = self
            .components
            .iter()
            .map(|p| p.mul(factor))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PolynomialMap {
            domain_dim: self.domain_dim,
            components,
        })
    }

    /// True when every component is `x_i` plus terms of degree >= 2.
    pub fn has_identity_linear_part(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        self.components.iter().enumerate().all(|(i, c)| {
            let (cst, lin) = c.affine_part();
            cst.is_zero()
                && lin
                    .iter()
                    .enumerate()
                    .all(|(j, l)| if i == j { l.is_one() } else { l.is_zero() })
        })
    }

    /// The Jacobian matrix: entry (i, j) is the j-th partial of component i.
    pub fn jacobian(&self) -> PolynomialMatrix {
        let entries = self
            .components
            .iter()
            .flat_map(|c| {
                (0..self.domain_dim).map(move |j| {
                    c.partial_derivative(j).expect("index in range")
                })
            })
            .collect();
        PolynomialMatrix::new(self.codomain_dim(), self.domain_dim, entries)
            .expect("shape is consistent")
    }

    /// Renders the map file format: a `map n=<dim>` header, then one
    /// component per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("map n={}\n", self.domain_dim);
        for c in &self.components {
            out.push_str(&crate::parse::render(c));
            out.push('\n');
        }
        out
    }

    /// Parses the map file format. Blank lines and `#` comments are ignored.
    pub fn from_text(text: &str) -> Result<PolynomialMap, MapError> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or(MapError::Io("empty map file".into()))?;
        let n: usize = header
            .strip_prefix("map")
            .map(str::trim)
            .and_then(|rest| rest.strip_prefix("n="))
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| {
                MapError::Io(format!(
                    "expected a 'map n=<int>' header line, found {header:?}"
                ))
            })?;
        if n == 0 {
            return Err(MapError::Io("map dimension must be positive".into()));
        }
        let components = lines
            .map(|l| parse_polynomial(l, Some(n)))
            .collect::<Result<Vec<_>, _>>()?;
        if components.is_empty() {
            return Err(MapError::Io("map file has no components".into()));
        }
        PolynomialMap::new(components)
    }
}

impl fmt::Display for PolynomialMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rendered: Vec<String> = self
            .components
            .iter()
            .map(crate::parse::render)
            .collect();
        write!(f, "({})", rendered.join(", "))
    }
}

impl fmt::Debug for PolynomialMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Lazily extended table of self-compositions of one square map.
pub struct Iterates<'a> {
    phi: &'a PolynomialMap,
    powers: Vec<PolynomialMap>,
}

impl<'a> Iterates<'a> {
    pub fn new(phi: &'a PolynomialMap) -> Result<Self, MapError> {
        if !phi.is_square() {
            return Err(MapError::NonSquare {
                domain: phi.domain_dim(),
                codomain: phi.codomain_dim(),
            });
        }
        Ok(Iterates {
            phi,
            powers: vec![PolynomialMap::identity(phi.domain_dim())],
        })
    }

    /// Returns `phi` composed with itself `k` times, memoizing along the way.
    pub fn get(&mut self, k: usize) -> Result<&PolynomialMap, MapError> {
        while self.powers.len() <= k {
            let next = self.powers.last().unwrap().compose(self.phi)?;
            self.powers.push(next);
        }
        Ok(&self.powers[k])
    }
}

/// `phi` composed with itself `k` times; `k = 0` is the identity.
pub fn iterate(phi: &PolynomialMap, k: usize) -> Result<PolynomialMap, MapError> {
    let mut it = Iterates::new(phi)?;
    it.get(k).cloned()
}

fn check_phi_args(f: &PolynomialMap, phi: &PolynomialMap) -> Result<(), MapError> {
    if !phi.is_square() {
        return Err(MapError::NonSquare {
            domain: phi.domain_dim(),
            codomain: phi.codomain_dim(),
        });
    }
    if f.domain_dim() != phi.domain_dim() {
        return Err(MapError::DimensionMismatch {
            expected: phi.domain_dim(),
            got: f.domain_dim(),
        });
    }
    Ok(())
}

/// The m-th difference of `f` along `phi` by the recurrence
/// `D_{m+1}(f) = D_m(f) - D_m(f) . phi`.
pub fn phi_recurrent(
    f: &PolynomialMap,
    phi: &PolynomialMap,
    m: usize,
) -> Result<PolynomialMap, MapError> {
    check_phi_args(f, phi)?;
    let mut cur = f.clone();
    for _ in 0..m {
        let shifted = cur.compose(phi)?;
        cur = cur.sub(&shifted)?;
    }
    Ok(cur)
}

/// The same operator via the alternating binomial sum over compositions
/// `f . phi^k`; must agree with [`phi_recurrent`] exactly.
pub fn phi_closed(
    f: &PolynomialMap,
    phi: &PolynomialMap,
    m: usize,
) -> Result<PolynomialMap, MapError> {
    check_phi_args(f, phi)?;
    let m_big = BigInt::from(m);
    let mut acc = PolynomialMap::zero(f.domain_dim(), f.codomain_dim());
    // Walk f, f.phi, f.phi^2, ... on the f side; for scalar f this never
    // materializes the iterates of phi themselves.
    let mut composed = f.clone();
    for k in 0..=m {
        let mut coeff = Rational::from_integer(binomial(m_big.clone(), BigInt::from(k)));
        if k % 2 == 1 {
            coeff = coeff.neg();
        }
        acc = acc.add(&composed.scale(&coeff))?;
        if k < m {
            composed = composed.compose(phi)?;
        }
    }
    Ok(acc)
}

/// Outcome of the difference-sequence analysis of one map.
#[derive(Clone)]
pub struct PhiReport {
    /// The analyzed map.
    pub map: PolynomialMap,
    /// `D_0(id), D_1(id), ...` up to the last index computed.
    pub phis: Vec<PolynomialMap>,
    /// Least `m` with `D_m(id) = 0`, when one was found within bounds.
    pub vanishing_index: Option<usize>,
    /// Composition-verified inverse, present exactly when the sequence
    /// vanished.
    pub inverse: Option<PolynomialMap>,
    /// The sequence stayed nonzero through `max_m`.
    pub bound_exceeded: bool,
    /// An intermediate difference exceeded the degree cap.
    pub degree_cap_hit: bool,
}

impl PhiReport {
    /// Component degrees of each difference in the sequence.
    pub fn degrees(&self) -> Vec<u64> {
        self.phis.iter().map(|p| p.degree().unwrap_or(0)).collect()
    }

    pub fn max_degree_seen(&self) -> u64 {
        self.degrees().into_iter().max().unwrap_or(0)
    }
}

/// Default degree cap for a dimension-`n` cubic map analysis.
pub fn default_degree_cap(n: usize) -> u64 {
    3u64.pow(n.saturating_sub(1) as u32) * 3
}

/// Runs the difference sequence on the identity, stopping at the first
/// vanishing index at most `max_m`. On success the inverse
/// `sum_{j < m} D_j(id)` is reconstructed and verified by composing with
/// `phi` on both sides before it is reported.
pub fn detect_polynomial_inverse(
    phi: &PolynomialMap,
    max_m: usize,
    degree_cap: u64,
) -> Result<PhiReport, MapError> {
    if !phi.is_square() {
        return Err(MapError::NonSquare {
            domain: phi.domain_dim(),
            codomain: phi.codomain_dim(),
        });
    }
    if !phi.has_identity_linear_part() {
        return Err(MapError::LinearPartNotIdentity);
    }
    let n = phi.domain_dim();
    let id = PolynomialMap::identity(n);
    let mut phis = vec![id.clone()];
    let mut report = PhiReport {
        map: phi.clone(),
        phis: Vec::new(),
        vanishing_index: None,
        inverse: None,
        bound_exceeded: false,
        degree_cap_hit: false,
    };
    for m in 1..=max_m {
        let prev = phis.last().unwrap();
        let next = prev.sub(&prev.compose(phi)?)?;
        if next.degree().unwrap_or(0) > degree_cap {
            report.degree_cap_hit = true;
            phis.push(next);
            report.phis = phis;
            return Ok(report);
        }
        let vanished = next.is_zero_map();
        phis.push(next);
        if vanished {
            let mut inverse = PolynomialMap::zero(n, n);
            for d in &phis[..m] {
                inverse = inverse.add(d)?;
            }
            if !phi.compose(&inverse)?.is_identity() || !inverse.compose(phi)?.is_identity() {
                return Err(MapError::InverseVerificationFailed);
            }
            report.vanishing_index = Some(m);
            report.inverse = Some(inverse);
            report.phis = phis;
            return Ok(report);
        }
    }
    report.bound_exceeded = true;
    report.phis = phis;
    Ok(report)
}

/// Unique formal inverse of `phi = id + H` truncated to total degree
/// `degree`, by the fixed-point iteration `psi <- id - H . psi` with
/// truncation after every composition. Serves as an independent cross-check
/// on exact inverses.
pub fn truncated_inverse(phi: &PolynomialMap, degree: u64) -> Result<PolynomialMap, MapError> {
    if !phi.is_square() {
        return Err(MapError::NonSquare {
            domain: phi.domain_dim(),
            codomain: phi.codomain_dim(),
        });
    }
    if !phi.has_identity_linear_part() {
        return Err(MapError::LinearPartNotIdentity);
    }
    let n = phi.domain_dim();
    let id = PolynomialMap::identity(n);
    let higher = phi.sub(&id)?;
    let mut psi = id.clone();
    // Each pass fixes at least one more order, so `degree` passes suffice.
    for _ in 0..=degree {
        let composed = PolynomialMap::new(
            higher
                .components()
                .iter()
                .map(|c| c.substitute_truncated(psi.components(), degree))
                .collect::<Result<Vec<_>, _>>()?,
        )?;
        let next = id.sub(&composed)?;
        if next == psi {
            return Ok(psi);
        }
        psi = next;
    }
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(n: usize, comps: &[&str]) -> PolynomialMap {
        PolynomialMap::new(
            comps
                .iter()
                .map(|s| parse_polynomial(s, Some(n)).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn triangular() -> PolynomialMap {
        map(2, &["x1 + x2^3", "x2"])
    }

    #[test]
    fn compose_identity_laws() {
        let f = triangular();
        let id = PolynomialMap::identity(2);
        assert_eq!(f.compose(&id).unwrap(), f);
        assert_eq!(id.compose(&f).unwrap(), f);
    }

    #[test]
    fn compose_triangular_inverse_pair() {
        let f = triangular();
        let g = map(2, &["x1 - x2^3", "x2"]);
        assert!(f.compose(&g).unwrap().is_identity());
        assert!(g.compose(&f).unwrap().is_identity());
    }

    #[test]
    fn compose_is_associative() {
        let f = map(2, &["x1 + x2^2", "x2"]);
        let g = map(2, &["x1", "x2 + x1^2"]);
        let h = map(2, &["x1 - 2*x2", "x2 + 1"]);
        let left = f.compose(&g).unwrap().compose(&h).unwrap();
        let right = f.compose(&g.compose(&h).unwrap()).unwrap();
        assert_eq!(left, right);
    }

    #[test]
    fn compose_dimension_mismatch() {
        let f = triangular();
        let g = map(3, &["x1", "x2", "x3"]);
        assert!(matches!(
            f.compose(&g),
            Err(MapError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn iterate_examples() {
        let phi = triangular();
        assert!(iterate(&phi, 0).unwrap().is_identity());
        assert_eq!(iterate(&phi, 1).unwrap(), phi);
        // x2 is fixed, so the cubes accumulate linearly.
        assert_eq!(iterate(&phi, 2).unwrap(), map(2, &["x1 + 2*x2^3", "x2"]));
        assert_eq!(iterate(&phi, 3).unwrap(), map(2, &["x1 + 3*x2^3", "x2"]));
    }

    #[test]
    fn iterate_rejects_non_square() {
        let f = PolynomialMap::new(vec![parse_polynomial("x1 + x2", Some(2)).unwrap()]).unwrap();
        assert!(matches!(iterate(&f, 2), Err(MapError::NonSquare { .. })));
    }

    #[test]
    fn phi_recurrent_examples() {
        let phi = triangular();
        let id = PolynomialMap::identity(2);
        assert_eq!(phi_recurrent(&id, &phi, 0).unwrap(), id);
        // D_1(id) = id - phi.
        assert_eq!(
            phi_recurrent(&id, &phi, 1).unwrap(),
            map(2, &["-x2^3", "0"])
        );
        // D_1(id) depends only on the fixed coordinate, so D_2 vanishes.
        assert!(phi_recurrent(&id, &phi, 2).unwrap().is_zero_map());
    }

    #[test]
    fn phi_closed_examples() {
        let phi = triangular();
        let id = PolynomialMap::identity(2);
        assert_eq!(phi_closed(&id, &phi, 0).unwrap(), id);
        let m1 = phi_closed(&id, &phi, 1).unwrap();
        assert_eq!(m1, id.sub(&id.compose(&phi).unwrap()).unwrap());
        assert!(phi_closed(&id, &phi, 2).unwrap().is_zero_map());
        for m in 0..=4 {
            assert_eq!(
                phi_closed(&id, &phi, m).unwrap(),
                phi_recurrent(&id, &phi, m).unwrap(),
                "closed and recurrent forms disagree at m={m}"
            );
        }
    }

    #[test]
    fn phi_forms_agree_to_order_six() {
        // Degree growth is bounded on these maps, so high orders stay cheap.
        let maps = [
            map(3, &["x1 + x2^3", "x2 + x3^3", "x3"]),
            map(2, &["x1 - 2*x2^3", "x2"]),
        ];
        for phi in &maps {
            let id = PolynomialMap::identity(phi.domain_dim());
            let f = PolynomialMap::new(vec![parse_polynomial(
                "x1 - x2",
                Some(phi.domain_dim()),
            )
            .unwrap()])
            .unwrap();
            for m in 0..=6 {
                assert_eq!(
                    phi_closed(&id, phi, m).unwrap(),
                    phi_recurrent(&id, phi, m).unwrap()
                );
                assert_eq!(
                    phi_closed(&f, phi, m).unwrap(),
                    phi_recurrent(&f, phi, m).unwrap()
                );
            }
        }
    }

    #[test]
    fn jacobian_examples() {
        let id = PolynomialMap::identity(3);
        assert_eq!(id.jacobian(), PolynomialMatrix::identity(3, 3));

        let j = triangular().jacobian();
        assert!(j.get(0, 0).is_one());
        assert_eq!(j.get(0, 1), &parse_polynomial("3*x2^2", Some(2)).unwrap());
        assert!(j.get(1, 0).is_zero());
        assert!(j.get(1, 1).is_one());
    }

    #[test]
    fn jacobian_det_of_shift_instance_is_one() {
        let phi = map(
            3,
            &[
                "x1 + x2^3 + 3*x2^2*x3 + 3*x2*x3^2 + x3^3",
                "x2 + x3^3 - 3*x3^2*x2 + 3*x3*x2^2 - x2^3",
                "x3 + x3^3 - 3*x3^2*x2 + 3*x3*x2^2 - x2^3",
            ],
        );
        assert!(phi.jacobian().det().unwrap().is_one());
    }

    #[test]
    fn detect_inverse_on_identity() {
        let id = PolynomialMap::identity(2);
        let report = detect_polynomial_inverse(&id, 8, 9).unwrap();
        assert_eq!(report.vanishing_index, Some(1));
        assert!(report.inverse.unwrap().is_identity());
    }

    #[test]
    fn detect_inverse_on_triangular() {
        let phi = triangular();
        let report = detect_polynomial_inverse(&phi, 8, 9).unwrap();
        assert_eq!(report.vanishing_index, Some(2));
        let inv = report.inverse.unwrap();
        assert_eq!(inv, map(2, &["x1 - x2^3", "x2"]));
        assert!(phi.compose(&inv).unwrap().is_identity());
        assert!(inv.compose(&phi).unwrap().is_identity());
    }

    #[test]
    fn detect_rejects_wrong_linear_part() {
        let shifted = map(2, &["x1 + x2", "x2"]);
        assert!(matches!(
            detect_polynomial_inverse(&shifted, 4, 9),
            Err(MapError::LinearPartNotIdentity)
        ));
        let affine = map(2, &["x1 + 1", "x2"]);
        assert!(matches!(
            detect_polynomial_inverse(&affine, 4, 9),
            Err(MapError::LinearPartNotIdentity)
        ));
    }

    #[test]
    fn detect_reports_bound_exceeded() {
        // Not a unit-Jacobian map; the sequence never vanishes.
        let phi = map(2, &["x1 + x1^2*x2", "x2"]);
        let report = detect_polynomial_inverse(&phi, 3, 1_000).unwrap();
        assert!(report.bound_exceeded);
        assert!(report.vanishing_index.is_none());
        assert!(report.inverse.is_none());
    }

    #[test]
    fn detect_reports_degree_cap() {
        let phi = map(2, &["x1 + x1^2*x2", "x2"]);
        let report = detect_polynomial_inverse(&phi, 8, 9).unwrap();
        assert!(report.degree_cap_hit);
        assert!(!report.bound_exceeded);
        assert!(report.vanishing_index.is_none());
    }

    #[test]
    fn truncated_inverse_examples() {
        let id = PolynomialMap::identity(2);
        assert_eq!(truncated_inverse(&id, 5).unwrap(), id);

        let phi = triangular();
        assert_eq!(
            truncated_inverse(&phi, 3).unwrap(),
            map(2, &["x1 - x2^3", "x2"])
        );
    }

    #[test]
    fn truncated_inverse_of_series_only_map_keeps_growing() {
        // The formal inverse of this map is not a polynomial: every higher
        // truncation exposes new terms.
        let phi = map(2, &["x1 + x1^2*x2", "x2"]);
        let mut last_len = 0;
        for d in [3u64, 5, 7, 9] {
            let psi = truncated_inverse(&phi, d).unwrap();
            // Check the truncated composition identity.
            let comp = PolynomialMap::new(
                phi.components()
                    .iter()
                    .map(|c| c.substitute_truncated(psi.components(), d).unwrap())
                    .collect(),
            )
            .unwrap();
            assert_eq!(comp, PolynomialMap::identity(2));
            let len = psi.component(0).terms().len();
            assert!(len > last_len, "no new terms appeared at degree {d}");
            last_len = len;
        }
    }

    #[test]
    fn map_text_round_trip() {
        let phi = map(2, &["x1 + x2^3", "x2"]);
        let text = phi.to_text();
        assert_eq!(PolynomialMap::from_text(&text).unwrap(), phi);

        let with_comments = "# a map\n\nmap n=2\nx1 + x2^3\n# middle comment\nx2\n";
        assert_eq!(PolynomialMap::from_text(with_comments).unwrap(), phi);

        assert!(PolynomialMap::from_text("x1\nx2\n").is_err());
        assert!(PolynomialMap::from_text("map n=2\n").is_err());
        assert!(PolynomialMap::from_text("map n=0\nx1\n").is_err());
    }
}
