//! Sparse multivariate polynomials over exact rationals.
//!
//! Terms are kept in canonical form: sorted by graded-lexicographic order
//! (total degree first, then lexicographic with `x1 > x2 > ...`), leading
//! term first, no zero coefficients. Equality is therefore structural.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::hash::{BuildHasherDefault, Hash, Hasher};

use rayon::prelude::*;

use crate::rat::Rational;

/// Hard cap on the number of variables. Everything in this engine lives in
/// at most ten variables (maps use 2-4, the symbolic constraint systems use
/// up to 10); the cap buys an inline, allocation-free exponent vector.
pub const MAX_VARS: usize = 16;

/// Exponent vector of fixed length `nvars`.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Monomial {
    len: u8,
    exps: [u32; MAX_VARS],
}

impl Monomial {
    pub fn new(exps: &[u32]) -> Result<Self, PolyError> {
        if exps.len() > MAX_VARS {
            return Err(PolyError::TooManyVariables {
                requested: exps.len(),
            });
        }
        let mut buf = [0u32; MAX_VARS];
        buf[..exps.len()].copy_from_slice(exps);
        Ok(Monomial {
            len: exps.len() as u8,
            exps: buf,
        })
    }

    /// The constant monomial (all exponents zero).
    pub fn unit(nvars: usize) -> Self {
        assert!(nvars <= MAX_VARS, "nvars exceeds MAX_VARS");
        Monomial {
            len: nvars as u8,
            exps: [0; MAX_VARS],
        }
    }

    /// The monomial `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars && nvars <= MAX_VARS);
        let mut m = Self::unit(nvars);
        m.exps[i] = 1;
        m
    }

    pub fn nvars(&self) -> usize {
        self.len as usize
    }

    pub fn exps(&self) -> &[u32] {
        &self.exps[..self.len as usize]
    }

    pub fn exp(&self, i: usize) -> u32 {
        self.exps()[i]
    }

    pub fn total_degree(&self) -> u64 {
        self.exps().iter().map(|&e| e as u64).sum()
    }

    pub fn is_constant(&self) -> bool {
        self.exps().iter().all(|&e| e == 0)
    }

    /// Product of two monomials of the same arity.
    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.len, other.len);
        let mut out = *self;
        for i in 0..self.len as usize {
            out.exps[i] = out.exps[i]
                .checked_add(other.exps[i])
                .expect("exponent overflow");
        }
        out
    }

    /// Graded-lexicographic comparison within a common arity.
    pub fn cmp_grlex(&self, other: &Monomial) -> Ordering {
        debug_assert_eq!(self.len, other.len);
        match self.total_degree().cmp(&other.total_degree()) {
            Ordering::Equal => self.exps().cmp(other.exps()),
            ord => ord,
        }
    }
}

impl Hash for Monomial {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u8(self.len);
        for &e in self.exps() {
            state.write_u32(e);
        }
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.exps())
    }
}

/// Multiply-xor hasher for monomial keys; the default SipHash dominates the
/// profile in large multiplications.
#[derive(Default)]
pub(crate) struct MonoHasher(u64);

impl Hasher for MonoHasher {
    fn finish(&self) -> u64 {
        self.0 ^ (self.0 >> 32)
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0 ^ b as u64).wrapping_mul(0x517c_c1b7_2722_0a95);
        }
    }

    fn write_u8(&mut self, v: u8) {
        self.0 = (self.0 ^ v as u64).wrapping_mul(0x517c_c1b7_2722_0a95);
    }

    fn write_u32(&mut self, v: u32) {
        self.0 = (self.0.rotate_left(5) ^ v as u64).wrapping_mul(0x517c_c1b7_2722_0a95);
    }
}

pub(crate) type TermMap = HashMap<Monomial, Rational, BuildHasherDefault<MonoHasher>>;

/// Hasher for pre-packed u64 monomial keys: one multiply plus a final
/// xor-shift so the table's low index bits see the high-entropy bits.
#[derive(Default)]
pub(crate) struct PackedHasher(u64);

impl Hasher for PackedHasher {
    fn finish(&self) -> u64 {
        self.0 ^ (self.0 >> 32)
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0 ^ b as u64).wrapping_mul(0x517c_c1b7_2722_0a95);
        }
    }

    fn write_u64(&mut self, v: u64) {
        self.0 = (self.0 ^ v).wrapping_mul(0x517c_c1b7_2722_0a95);
    }
}

type PackedMap = HashMap<u64, Rational, BuildHasherDefault<PackedHasher>>;

// Monomials in at most four variables with exponents below 2^16 pack into a
// u64, 16 bits per variable; multiplying monomials becomes one integer add
// (no cross-field carries while every product exponent stays below 2^16).
const PACK_VARS: usize = 4;
const PACK_FIELD_BITS: u32 = 16;
// Conservative per-operand degree bound guaranteeing carry-free packed adds.
const PACK_DEG_LIMIT: u64 = (1 << 15) - 1;

fn pack_mono(m: &Monomial) -> u64 {
    let mut key = 0u64;
    for (i, &e) in m.exps().iter().enumerate() {
        key |= (e as u64) << (PACK_FIELD_BITS * i as u32);
    }
    key
}

fn unpack_mono(key: u64, nvars: usize) -> Monomial {
    let mut exps = [0u32; PACK_VARS];
    for (i, e) in exps.iter_mut().enumerate().take(nvars) {
        *e = ((key >> (PACK_FIELD_BITS * i as u32)) & 0xffff) as u32;
    }
    Monomial::new(&exps[..nvars]).expect("within limit")
}

fn packable(nvars: usize, max_operand_degree: u64) -> bool {
    nvars <= PACK_VARS && max_operand_degree <= PACK_DEG_LIMIT
}

/// Errors from polynomial construction and arithmetic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolyError {
    DimensionMismatch { left: usize, right: usize },
    ArityMismatch { expected: usize, got: usize },
    TooManyVariables { requested: usize },
    IndexOutOfRange { index: usize, nvars: usize },
    Parse(crate::parse::ParseError),
}

impl fmt::Display for PolyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolyError::DimensionMismatch { left, right } => {
                write!(f, "polynomials have different arities: {left} vs {right}")
            }
            PolyError::ArityMismatch { expected, got } => {
                write!(f, "expected {expected} arguments, got {got}")
            }
            PolyError::TooManyVariables { requested } => {
                write!(f, "{requested} variables requested, limit is {MAX_VARS}")
            }
            PolyError::IndexOutOfRange { index, nvars } => {
                write!(f, "variable index {index} out of range for {nvars} variables")
            }
            PolyError::Parse(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for PolyError {}

impl From<crate::parse::ParseError> for PolyError {
    fn from(e: crate::parse::ParseError) -> Self {
        PolyError::Parse(e)
    }
}

/// Sparse multivariate polynomial over [`Rational`].
#[derive(Clone, PartialEq, Eq)]
pub struct Polynomial {
    nvars: usize,
    terms: Vec<(Monomial, Rational)>,
}

// Work threshold above which a multiplication is split across threads.
const PAR_MUL_PAIRS: usize = 1 << 19;

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        assert!(nvars >= 1 && nvars <= MAX_VARS);
        Polynomial {
            nvars,
            terms: Vec::new(),
        }
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Rational::one())
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        assert!(nvars >= 1 && nvars <= MAX_VARS);
        if c.is_zero() {
            return Self::zero(nvars);
        }
        Polynomial {
            nvars,
            terms: vec![(Monomial::unit(nvars), c)],
        }
    }

    pub fn variable(nvars: usize, i: usize) -> Self {
        Polynomial {
            nvars,
            terms: vec![(Monomial::var(nvars, i), Rational::one())],
        }
    }

    /// Builds a polynomial from arbitrary (monomial, coefficient) pairs,
    /// merging duplicates and dropping zeros.
    pub fn from_terms(
        nvars: usize,
        terms: Vec<(Monomial, Rational)>,
    ) -> Result<Self, PolyError> {
        if nvars < 1 || nvars > MAX_VARS {
            return Err(PolyError::TooManyVariables { requested: nvars });
        }
        for (m, _) in &terms {
            if m.nvars() != nvars {
                return Err(PolyError::DimensionMismatch {
                    left: nvars,
                    right: m.nvars(),
                });
            }
        }
        let mut p = Polynomial { nvars, terms };
        p.normalize();
        Ok(p)
    }

    fn normalize(&mut self) {
        self.terms
            .sort_by(|a, b| b.0.cmp_grlex(&a.0));
        let mut out: Vec<(Monomial, Rational)> = Vec::with_capacity(self.terms.len());
        for (m, c) in self.terms.drain(..) {
            if let Some(last) = out.last_mut() {
                if last.0 == m {
                    last.1 = last.1.add(&c);
                    continue;
                }
            }
            out.push((m, c));
        }
        out.retain(|(_, c)| !c.is_zero());
        self.terms = out;
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[(Monomial, Rational)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_constant() && self.terms[0].1.is_one()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<u64> {
        // Leading term is degree-maximal in graded order.
        self.terms.first().map(|(m, _)| m.total_degree())
    }

    /// Leading (monomial, coefficient) in graded-lex order.
    pub fn leading_term(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.first().map(|(m, c)| (m, c))
    }

    /// Coefficient of an exact monomial (zero if absent).
    pub fn coeff(&self, m: &Monomial) -> Rational {
        match self
            .terms
            .binary_search_by(|(t, _)| m.cmp_grlex(t))
        {
            Ok(i) => self.terms[i].1.clone(),
            Err(_) => Rational::zero(),
        }
    }

    pub fn constant_term(&self) -> Rational {
        self.coeff(&Monomial::unit(self.nvars))
    }

    fn check_same_nvars(&self, other: &Polynomial) -> Result<(), PolyError> {
        if self.nvars != other.nvars {
            return Err(PolyError::DimensionMismatch {
                left: self.nvars,
                right: other.nvars,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_same_nvars(other)?;
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < other.terms.len() {
            let (ma, ca) = &self.terms[i];
            let (mb, cb) = &other.terms[j];
            match ma.cmp_grlex(mb) {
                Ordering::Greater => {
                    out.push((*ma, ca.clone()));
                    i += 1;
                }
                Ordering::Less => {
                    out.push((*mb, cb.clone()));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = ca.add(cb);
                    if !c.is_zero() {
                        out.push((*ma, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(self.terms[i..].iter().cloned());
        out.extend(other.terms[j..].iter().cloned());
        Ok(Polynomial {
            nvars: self.nvars,
            terms: out,
        })
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (*m, c.neg()))
                .collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(self.nvars);
        }
        if c.is_one() {
            return self.clone();
        }
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (*m, k.mul(c)))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_same_nvars(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Polynomial::zero(self.nvars));
        }
        let (small, large) = if self.terms.len() <= other.terms.len() {
            (self, other)
        } else {
            (other, self)
        };
        let deg_sum = self.total_degree().unwrap_or(0) + other.total_degree().unwrap_or(0);
        if packable(self.nvars, deg_sum) {
            let a: Vec<(u64, Rational)> = small
                .terms
                .iter()
                .map(|(m, c)| (pack_mono(m), c.clone()))
                .collect();
            let b: Vec<(u64, Rational)> = large
                .terms
                .iter()
                .map(|(m, c)| (pack_mono(m), c.clone()))
                .collect();
            let map = packed_product(&a, &b, None);
            return Ok(Self::from_packed_map(self.nvars, map));
        }
        let pairs = small.terms.len() * large.terms.len();
        let map = if pairs >= PAR_MUL_PAIRS {
            Self::mul_accumulate_par(&small.terms, &large.terms)
        } else {
            let mut map = TermMap::default();
            map.reserve(large.terms.len());
            Self::mul_accumulate(&mut map, &small.terms, &large.terms);
            map
        };
        Ok(Self::from_map(self.nvars, map))
    }

    fn mul_accumulate(
        map: &mut TermMap,
        small: &[(Monomial, Rational)],
        large: &[(Monomial, Rational)],
    ) {
        // Zero sums are left in the map and filtered on drain.
        for (ma, ca) in small {
            for (mb, cb) in large {
                let m = ma.mul(mb);
                let c = ca.mul(cb);
                match map.entry(m) {
                    std::collections::hash_map::Entry::Occupied(mut e) => {
                        e.get_mut().add_assign(&c);
                    }
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(c);
                    }
                }
            }
        }
    }

    fn merge_maps<K, S>(
        mut acc: HashMap<K, Rational, S>,
        other: HashMap<K, Rational, S>,
    ) -> HashMap<K, Rational, S>
    where
        K: Eq + Hash,
        S: std::hash::BuildHasher,
    {
        if acc.len() < other.len() {
            return Self::merge_maps(other, acc);
        }
        for (m, c) in other {
            match acc.entry(m) {
                std::collections::hash_map::Entry::Occupied(mut e) => {
                    e.get_mut().add_assign(&c);
                }
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(c);
                }
            }
        }
        acc
    }

    fn mul_accumulate_par(small: &[(Monomial, Rational)], large: &[(Monomial, Rational)]) -> TermMap {
        let nchunks = rayon::current_num_threads().max(1).min(large.len().max(1));
        let chunk = large.len().div_ceil(nchunks);
        large
            .par_chunks(chunk)
            .map(|lchunk| {
                let mut map = TermMap::default();
                map.reserve(lchunk.len());
                Self::mul_accumulate(&mut map, small, lchunk);
                map
            })
            .reduce(TermMap::default, Self::merge_maps)
    }

    fn from_map(nvars: usize, map: TermMap) -> Polynomial {
        let mut terms: Vec<(Monomial, Rational)> = map
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .collect();
        terms.sort_by(|a, b| b.0.cmp_grlex(&a.0));
        Polynomial { nvars, terms }
    }

    fn from_packed_map(nvars: usize, map: PackedMap) -> Polynomial {
        let mut terms: Vec<(Monomial, Rational)> = map
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| (unpack_mono(k, nvars), c))
            .collect();
        terms.sort_by(|a, b| b.0.cmp_grlex(&a.0));
        Polynomial { nvars, terms }
    }

    /// `self^m` by binary exponentiation; `p^0 = 1`.
    pub fn pow(&self, m: u32) -> Polynomial {
        if m == 0 {
            return Polynomial::one(self.nvars);
        }
        let mut base = self.clone();
        let mut acc: Option<Polynomial> = None;
        let mut e = m;
        loop {
            if e & 1 == 1 {
                acc = Some(match acc {
                    Some(a) => a.mul(&base).expect("same arity"),
                    None => base.clone(),
                });
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            base = base.mul(&base).expect("same arity");
        }
        acc.expect("m > 0")
    }

    /// Substitutes `args[i]` for `x_i`, fully expanding the result.
    pub fn substitute(&self, args: &[Polynomial]) -> Result<Polynomial, PolyError> {
        self.substitute_impl(args, None)
    }

    /// Substitution that discards all terms of total degree above `max_deg`
    /// as it goes; sound because degrees only grow along a product.
    pub fn substitute_truncated(
        &self,
        args: &[Polynomial],
        max_deg: u64,
    ) -> Result<Polynomial, PolyError> {
        self.substitute_impl(args, Some(max_deg))
    }

    fn substitute_impl(
        &self,
        args: &[Polynomial],
        trunc: Option<u64>,
    ) -> Result<Polynomial, PolyError> {
        if args.len() != self.nvars {
            return Err(PolyError::ArityMismatch {
                expected: self.nvars,
                got: args.len(),
            });
        }
        let out_nvars = args[0].nvars;
        for a in args {
            if a.nvars != out_nvars {
                return Err(PolyError::DimensionMismatch {
                    left: out_nvars,
                    right: a.nvars,
                });
            }
        }
        if self.is_zero() {
            return Ok(Polynomial::zero(out_nvars));
        }
        // Pure-lex descending sort groups terms by shared exponent prefixes,
        // which the recursive Horner walk below relies on.
        let mut terms = self.terms.clone();
        terms.sort_by(|a, b| b.0.exps().cmp(a.0.exps()));
        // Degrees never exceed deg(self) * max deg(args) along the Horner
        // walk, so one upfront bound decides packed-key eligibility.
        let arg_deg = args
            .iter()
            .filter_map(Polynomial::total_degree)
            .max()
            .unwrap_or(0)
            .max(1);
        let bound = self.total_degree().unwrap_or(0).saturating_mul(arg_deg);
        if packable(out_nvars, bound) {
            let packed_args: Vec<Vec<(u64, Rational)>> = args
                .iter()
                .map(|a| {
                    a.terms
                        .iter()
                        .map(|(m, c)| (pack_mono(m), c.clone()))
                        .collect()
                })
                .collect();
            let map = subst_rec_packed(&terms, 0, self.nvars, &packed_args, trunc);
            return Ok(Polynomial::from_packed_map(out_nvars, map));
        }
        let map = subst_rec(&terms, 0, self.nvars, args, out_nvars, trunc);
        Ok(Polynomial::from_map(out_nvars, map))
    }

    /// Formal partial derivative with respect to `x_i`.
    pub fn partial_derivative(&self, i: usize) -> Result<Polynomial, PolyError> {
        if i >= self.nvars {
            return Err(PolyError::IndexOutOfRange {
                index: i,
                nvars: self.nvars,
            });
        }
        // Dividing by x_i preserves graded-lex order among surviving terms.
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.exp(i) > 0)
            .map(|(m, c)| {
                let mut d = *m;
                let e = d.exps[i];
                d.exps[i] = e - 1;
                (d, c.mul(&Rational::from_integer(e)))
            })
            .collect();
        Ok(Polynomial {
            nvars: self.nvars,
            terms,
        })
    }

    /// Drops every term of total degree strictly above `max_deg`.
    pub fn truncate_deg(&self, max_deg: u64) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.total_degree() <= max_deg)
                .cloned()
                .collect(),
        }
    }

    /// Evaluates at a rational point.
    pub fn eval(&self, point: &[Rational]) -> Result<Rational, PolyError> {
        if point.len() != self.nvars {
            return Err(PolyError::ArityMismatch {
                expected: self.nvars,
                got: point.len(),
            });
        }
        // Memoize powers per variable; exponents repeat heavily.
        let mut powers: Vec<Vec<Rational>> = point
            .iter()
            .map(|p| vec![Rational::one(), p.clone()])
            .collect();
        let mut total = Rational::zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for (i, &e) in m.exps().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let cache = &mut powers[i];
                while cache.len() <= e as usize {
                    let next = cache.last().unwrap().mul(&point[i]);
                    cache.push(next);
                }
                term = term.mul(&cache[e as usize]);
            }
            total = total.add(&term);
        }
        Ok(total)
    }

    /// The graded part of degree at most 1, as (constant, linear coefficients).
    pub fn affine_part(&self) -> (Rational, Vec<Rational>) {
        let mut lin = vec![Rational::zero(); self.nvars];
        let mut cst = Rational::zero();
        for (m, c) in &self.terms {
            match m.total_degree() {
                0 => cst = c.clone(),
                1 => {
                    let i = m.exps().iter().position(|&e| e == 1).unwrap();
                    lin[i] = c.clone();
                }
                _ => {}
            }
        }
        (cst, lin)
    }

    /// Divides by the leading coefficient, making the polynomial monic.
    pub fn monic(&self) -> Polynomial {
        match self.leading_term() {
            None => self.clone(),
            Some((_, c)) => {
                let inv = c.recip().expect("leading coefficient is nonzero");
                self.scale(&inv)
            }
        }
    }
}

/// Recursive Horner evaluation on hash maps; the result is sorted into
/// canonical form only once, at the top.
fn subst_rec(
    terms: &[(Monomial, Rational)],
    depth: usize,
    nvars: usize,
    args: &[Polynomial],
    out_nvars: usize,
    trunc: Option<u64>,
) -> TermMap {
    if terms.is_empty() {
        return TermMap::default();
    }
    if depth == nvars {
        debug_assert_eq!(terms.len(), 1);
        let mut map = TermMap::default();
        map.insert(Monomial::unit(out_nvars), terms[0].1.clone());
        return map;
    }
    // Split into runs sharing the exponent of x_depth (descending).
    let mut groups: Vec<(u32, &[(Monomial, Rational)])> = Vec::new();
    let mut start = 0;
    while start < terms.len() {
        let e = terms[start].0.exp(depth);
        let mut end = start + 1;
        while end < terms.len() && terms[end].0.exp(depth) == e {
            end += 1;
        }
        groups.push((e, &terms[start..end]));
        start = end;
    }
    let g = &args[depth];
    let mut acc = subst_rec(groups[0].1, depth + 1, nvars, args, out_nvars, trunc);
    let mut cur = groups[0].0;
    for &(e, group) in &groups[1..] {
        while cur > e {
            acc = horner_step(acc, g.terms(), trunc);
            cur -= 1;
        }
        let part = subst_rec(group, depth + 1, nvars, args, out_nvars, trunc);
        acc = Polynomial::merge_maps(acc, part);
    }
    while cur > 0 {
        acc = horner_step(acc, g.terms(), trunc);
        cur -= 1;
    }
    acc
}

fn packed_degree(key: u64) -> u64 {
    (key & 0xffff) + ((key >> 16) & 0xffff) + ((key >> 32) & 0xffff) + (key >> 48)
}

/// Packed-key twin of [`subst_rec`] for narrow, low-degree outputs.
fn subst_rec_packed(
    terms: &[(Monomial, Rational)],
    depth: usize,
    nvars: usize,
    args: &[Vec<(u64, Rational)>],
    trunc: Option<u64>,
) -> PackedMap {
    if terms.is_empty() {
        return PackedMap::default();
    }
    if depth == nvars {
        debug_assert_eq!(terms.len(), 1);
        let mut map = PackedMap::default();
        map.insert(0, terms[0].1.clone());
        return map;
    }
    let mut groups: Vec<(u32, &[(Monomial, Rational)])> = Vec::new();
    let mut start = 0;
    while start < terms.len() {
        let e = terms[start].0.exp(depth);
        let mut end = start + 1;
        while end < terms.len() && terms[end].0.exp(depth) == e {
            end += 1;
        }
        groups.push((e, &terms[start..end]));
        start = end;
    }
    let g = &args[depth];
    let mut acc = subst_rec_packed(groups[0].1, depth + 1, nvars, args, trunc);
    let mut cur = groups[0].0;
    for &(e, group) in &groups[1..] {
        while cur > e {
            acc = packed_product_from_map(acc, g, trunc);
            cur -= 1;
        }
        let part = subst_rec_packed(group, depth + 1, nvars, args, trunc);
        acc = Polynomial::merge_maps(acc, part);
    }
    while cur > 0 {
        acc = packed_product_from_map(acc, g, trunc);
        cur -= 1;
    }
    acc
}

fn packed_product_from_map(
    acc: PackedMap,
    g: &[(u64, Rational)],
    trunc: Option<u64>,
) -> PackedMap {
    if g.is_empty() {
        return PackedMap::default();
    }
    let src: Vec<(u64, Rational)> = acc
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .collect();
    packed_product(&src, g, trunc)
}

/// Accumulates the pairwise product of packed term lists; parallel when the
/// pair count warrants it.
fn packed_product(
    small: &[(u64, Rational)],
    large: &[(u64, Rational)],
    trunc: Option<u64>,
) -> PackedMap {
    let (small, large) = if small.len() <= large.len() {
        (small, large)
    } else {
        (large, small)
    };
    let accumulate = |out: &mut PackedMap, chunk: &[(u64, Rational)]| {
        for (ka, ca) in chunk {
            for (kb, cb) in small {
                let key = ka + kb;
                if let Some(d) = trunc {
                    if packed_degree(key) > d {
                        continue;
                    }
                }
                let c = ca.mul(cb);
                match out.entry(key) {
                    std::collections::hash_map::Entry::Occupied(mut e) => {
                        e.get_mut().add_assign(&c);
                    }
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(c);
                    }
                }
            }
        }
    };
    if small.len() * large.len() >= PAR_MUL_PAIRS {
        let nchunks = rayon::current_num_threads().max(1).min(large.len().max(1));
        let chunk = large.len().div_ceil(nchunks);
        large
            .par_chunks(chunk)
            .map(|part| {
                let mut local = PackedMap::default();
                local.reserve(part.len());
                accumulate(&mut local, part);
                local
            })
            .reduce(PackedMap::default, Polynomial::merge_maps)
    } else {
        let mut out = PackedMap::default();
        out.reserve(large.len());
        accumulate(&mut out, large);
        out
    }
}

/// One multiply of the running Horner accumulator by a substituted variable.
fn horner_step(acc: TermMap, g: &[(Monomial, Rational)], trunc: Option<u64>) -> TermMap {
    if g.is_empty() {
        return TermMap::default();
    }
    let src: Vec<(Monomial, Rational)> = acc
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .collect();
    let accumulate = |out: &mut TermMap, chunk: &[(Monomial, Rational)]| {
        for (ma, ca) in chunk {
            for (mg, cg) in g {
                let m = ma.mul(mg);
                if let Some(d) = trunc {
                    if m.total_degree() > d {
                        continue;
                    }
                }
                let c = ca.mul(cg);
                match out.entry(m) {
                    std::collections::hash_map::Entry::Occupied(mut e) => {
                        e.get_mut().add_assign(&c);
                    }
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(c);
                    }
                }
            }
        }
    };
    if src.len() * g.len() >= PAR_MUL_PAIRS {
        let nchunks = rayon::current_num_threads().max(1).min(src.len().max(1));
        let chunk = src.len().div_ceil(nchunks);
        src.par_chunks(chunk)
            .map(|part| {
                let mut local = TermMap::default();
                local.reserve(part.len());
                accumulate(&mut local, part);
                local
            })
            .reduce(TermMap::default, Polynomial::merge_maps)
    } else {
        let mut out = TermMap::default();
        out.reserve(src.len());
        accumulate(&mut out, &src);
        out
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::parse::render(self))
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::parse::render(self))
    }
}
