//! Exact dense linear algebra over rationals, plus symbolic determinants of
//! small polynomial matrices.
//!
//! Elimination always picks the leftmost-topmost nonzero pivot; over exact
//! rationals any nonzero pivot is as good as another, and the fixed choice
//! keeps output deterministic.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::poly::Polynomial;
use crate::rat::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinAlgError {
    ShapeMismatch {
        expected: usize,
        got: usize,
    },
    NonSquare {
        rows: usize,
        cols: usize,
    },
    /// Symbolic determinants use cofactor expansion and are restricted to
    /// small matrices.
    TooLarge {
        rows: usize,
        limit: usize,
    },
    IndexOutOfRange {
        index: usize,
        bound: usize,
    },
    SizeMismatch {
        rows: usize,
        cols: usize,
    },
    NonUniformVars,
    BadEntry(String),
}

impl fmt::Display for LinAlgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinAlgError::ShapeMismatch { expected, got } => {
                write!(f, "entry count {got} does not match shape ({expected} expected)")
            }
            LinAlgError::NonSquare { rows, cols } => {
                write!(f, "matrix is {rows}x{cols}, a square matrix is required")
            }
            LinAlgError::TooLarge { rows, limit } => {
                write!(f, "matrix size {rows} exceeds the symbolic limit {limit}")
            }
            LinAlgError::IndexOutOfRange { index, bound } => {
                write!(f, "index {index} out of range (bound {bound})")
            }
            LinAlgError::SizeMismatch { rows, cols } => {
                write!(f, "selected {rows} rows but {cols} columns")
            }
            LinAlgError::NonUniformVars => {
                write!(f, "polynomial entries must share one variable count")
            }
            LinAlgError::BadEntry(s) => write!(f, "bad matrix entry: {s}"),
        }
    }
}

impl std::error::Error for LinAlgError {}

/// Dense row-major matrix of exact rationals.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Rational>,
}

impl RationalMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Rational>) -> Result<Self, LinAlgError> {
        if entries.len() != rows * cols {
            return Err(LinAlgError::ShapeMismatch {
                expected: rows * cols,
                got: entries.len(),
            });
        }
        Ok(RationalMatrix {
            rows,
            cols,
            entries,
        })
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        RationalMatrix {
            rows,
            cols,
            entries: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m.set(i, i, Rational::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self, LinAlgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        for row in &rows {
            if row.len() != c {
                return Err(LinAlgError::ShapeMismatch {
                    expected: c,
                    got: row.len(),
                });
            }
        }
        Ok(RationalMatrix {
            rows: r,
            cols: c,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    /// Integer-entry convenience constructor, mostly for tests and samplers.
    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| Rational::from_integer(v)).collect())
                .collect(),
        )
        .expect("uniform row lengths")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Rational {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Rational) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<Rational> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn transpose(&self) -> RationalMatrix {
        let mut out = Self::zero(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).clone());
            }
        }
        out
    }

    pub fn matmul(&self, other: &RationalMatrix) -> Result<RationalMatrix, LinAlgError> {
        if self.cols != other.rows {
            return Err(LinAlgError::ShapeMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Self::zero(self.rows, other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc = Rational::zero();
                for k in 0..self.cols {
                    acc = acc.add(&self.get(r, k).mul(other.get(k, c)));
                }
                out.set(r, c, acc);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, t: &Rational) -> RationalMatrix {
        RationalMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.mul(t)).collect(),
        }
    }

    /// Reduced row echelon form together with the pivot column indices.
    fn rref(&self) -> (RationalMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let pivot_row = (row..m.rows).find(|&r| !m.get(r, col).is_zero());
            let Some(p) = pivot_row else { continue };
            if p != row {
                for c in 0..m.cols {
                    let a = m.get(row, c).clone();
                    let b = m.get(p, c).clone();
                    m.set(row, c, b);
                    m.set(p, c, a);
                }
            }
            let inv = m.get(row, col).recip().expect("pivot is nonzero");
            for c in col..m.cols {
                m.set(row, c, m.get(row, c).mul(&inv));
            }
            for r in 0..m.rows {
                if r != row && !m.get(r, col).is_zero() {
                    let factor = m.get(r, col).clone();
                    for c in col..m.cols {
                        let v = m.get(r, c).sub(&factor.mul(m.get(row, c)));
                        m.set(r, c, v);
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right nullspace as column vectors, one per free column,
    /// each scaled so its first nonzero entry is 1.
    pub fn nullspace(&self) -> Vec<RationalMatrix> {
        let (rref, pivots) = self.rref();
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if pivots.contains(&free) {
                continue;
            }
            let mut v = vec![Rational::zero(); self.cols];
            v[free] = Rational::one();
            for (row, &pcol) in pivots.iter().enumerate() {
                v[pcol] = rref.get(row, free).neg();
            }
            let first = v
                .iter()
                .find(|e| !e.is_zero())
                .expect("nullspace vector is nonzero")
                .clone();
            let inv = first.recip().unwrap();
            let v = v.into_iter().map(|e| e.mul(&inv)).collect();
            basis.push(RationalMatrix {
                rows: self.cols,
                cols: 1,
                entries: v,
            });
        }
        basis
    }

    /// Exact determinant by Gaussian elimination with row-swap sign tracking.
    pub fn det(&self) -> Result<Rational, LinAlgError> {
        if self.rows != self.cols {
            return Err(LinAlgError::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let mut m = self.clone();
        let mut det = Rational::one();
        for col in 0..n {
            let pivot_row = (col..n).find(|&r| !m.get(r, col).is_zero());
            let Some(p) = pivot_row else {
                return Ok(Rational::zero());
            };
            if p != col {
                for c in 0..n {
                    let a = m.get(col, c).clone();
                    let b = m.get(p, c).clone();
                    m.set(col, c, b);
                    m.set(p, c, a);
                }
                det = det.neg();
            }
            let pivot = m.get(col, col).clone();
            det = det.mul(&pivot);
            let inv = pivot.recip().unwrap();
            for r in col + 1..n {
                if m.get(r, col).is_zero() {
                    continue;
                }
                let factor = m.get(r, col).mul(&inv);
                for c in col..n {
                    let v = m.get(r, c).sub(&factor.mul(m.get(col, c)));
                    m.set(r, c, v);
                }
            }
        }
        Ok(det)
    }

    /// Determinant of the submatrix selected by strictly increasing row and
    /// column index sets of equal size.
    pub fn minor(&self, row_set: &[usize], col_set: &[usize]) -> Result<Rational, LinAlgError> {
        if row_set.len() != col_set.len() {
            return Err(LinAlgError::SizeMismatch {
                rows: row_set.len(),
                cols: col_set.len(),
            });
        }
        for w in [row_set, col_set] {
            for pair in w.windows(2) {
                if pair[0] >= pair[1] {
                    return Err(LinAlgError::BadEntry(
                        "index sets must be strictly increasing".into(),
                    ));
                }
            }
        }
        if let Some(&r) = row_set.iter().find(|&&r| r >= self.rows) {
            return Err(LinAlgError::IndexOutOfRange {
                index: r,
                bound: self.rows,
            });
        }
        if let Some(&c) = col_set.iter().find(|&&c| c >= self.cols) {
            return Err(LinAlgError::IndexOutOfRange {
                index: c,
                bound: self.cols,
            });
        }
        let k = row_set.len();
        let mut sub = Self::zero(k, k);
        for (i, &r) in row_set.iter().enumerate() {
            for (j, &c) in col_set.iter().enumerate() {
                sub.set(i, j, self.get(r, c).clone());
            }
        }
        sub.det()
    }

    /// Simultaneous row/column relabeling: entry (r, c) of the result is
    /// entry (perm[r], perm[c]) of `self`.
    pub fn permuted(&self, perm: &[usize]) -> RationalMatrix {
        debug_assert_eq!(perm.len(), self.rows);
        debug_assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut out = Self::zero(n, n);
        for r in 0..n {
            for c in 0..n {
                out.set(r, c, self.get(perm[r], perm[c]).clone());
            }
        }
        out
    }
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            write!(f, "[")?;
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(r, c))?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

/// Matrix with polynomial entries sharing one variable count.
#[derive(Clone, PartialEq, Eq)]
pub struct PolynomialMatrix {
    rows: usize,
    cols: usize,
    nvars: usize,
    entries: Vec<Polynomial>,
}

/// Cofactor expansion is adequate for the sizes this engine meets.
pub const SYMBOLIC_DET_LIMIT: usize = 4;

impl PolynomialMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Polynomial>) -> Result<Self, LinAlgError> {
        if entries.len() != rows * cols {
            return Err(LinAlgError::ShapeMismatch {
                expected: rows * cols,
                got: entries.len(),
            });
        }
        let nvars = entries.first().map_or(1, |p| p.nvars());
        if entries.iter().any(|p| p.nvars() != nvars) {
            return Err(LinAlgError::NonUniformVars);
        }
        Ok(PolynomialMatrix {
            rows,
            cols,
            nvars,
            entries,
        })
    }

    pub fn identity(n: usize, nvars: usize) -> Self {
        let mut entries = vec![Polynomial::zero(nvars); n * n];
        for i in 0..n {
            entries[i * n + i] = Polynomial::one(nvars);
        }
        PolynomialMatrix {
            rows: n,
            cols: n,
            nvars,
            entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn get(&self, r: usize, c: usize) -> &Polynomial {
        &self.entries[r * self.cols + c]
    }

    /// Exact symbolic determinant via cofactor expansion along the first row.
    pub fn det(&self) -> Result<Polynomial, LinAlgError> {
        if self.rows != self.cols {
            return Err(LinAlgError::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        if self.rows > SYMBOLIC_DET_LIMIT {
            return Err(LinAlgError::TooLarge {
                rows: self.rows,
                limit: SYMBOLIC_DET_LIMIT,
            });
        }
        Ok(det_cofactor(&self.entries, self.rows, self.nvars))
    }

    /// Entrywise evaluation at a rational point.
    pub fn eval(&self, point: &[Rational]) -> Result<RationalMatrix, LinAlgError> {
        let entries = self
            .entries
            .iter()
            .map(|p| p.eval(point))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| LinAlgError::BadEntry(e.to_string()))?;
        RationalMatrix::new(self.rows, self.cols, entries)
    }
}

impl fmt::Debug for PolynomialMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            write!(f, "[")?;
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(r, c))?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

fn det_cofactor(entries: &[Polynomial], n: usize, nvars: usize) -> Polynomial {
    if n == 1 {
        return entries[0].clone();
    }
    let mut acc = Polynomial::zero(nvars);
    for j in 0..n {
        let a = &entries[j];
        if a.is_zero() {
            continue;
        }
        let mut sub = Vec::with_capacity((n - 1) * (n - 1));
        for r in 1..n {
            for c in 0..n {
                if c != j {
                    sub.push(entries[r * n + c].clone());
                }
            }
        }
        let cof = det_cofactor(&sub, n - 1, nvars);
        let term = a.mul(&cof).expect("uniform arity");
        acc = if j % 2 == 0 {
            acc.add(&term).expect("uniform arity")
        } else {
            acc.sub(&term).expect("uniform arity")
        };
    }
    acc
}

/// Wire form for the matrix JSON schema:
/// `{"rows": r, "cols": c, "entries": [...]}` row-major, each entry either an
/// integer string `"n"`, a pair `["n", "d"]`, or a plain JSON integer.
#[derive(Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<EntryJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
pub enum EntryJson {
    Pair([String; 2]),
    Text(String),
    Int(i64),
}

impl MatrixJson {
    pub fn from_matrix(m: &RationalMatrix) -> Self {
        let entries = (0..m.rows())
            .flat_map(|r| (0..m.cols()).map(move |c| (r, c)))
            .map(|(r, c)| {
                let e = m.get(r, c);
                if e.is_integer() {
                    EntryJson::Text(e.numer().to_string())
                } else {
                    EntryJson::Pair([e.numer().to_string(), e.denom().to_string()])
                }
            })
            .collect();
        MatrixJson {
            rows: m.rows(),
            cols: m.cols(),
            entries,
        }
    }

    pub fn to_matrix(&self) -> Result<RationalMatrix, LinAlgError> {
        let entries = self
            .entries
            .iter()
            .map(|e| match e {
                EntryJson::Int(v) => Ok(Rational::from_integer(*v)),
                EntryJson::Text(s) => {
                    let n = BigInt::from_str(s.trim())
                        .map_err(|_| LinAlgError::BadEntry(s.clone()))?;
                    Ok(Rational::from_integer(n))
                }
                EntryJson::Pair([n, d]) => {
                    let num = BigInt::from_str(n.trim())
                        .map_err(|_| LinAlgError::BadEntry(n.clone()))?;
                    let den = BigInt::from_str(d.trim())
                        .map_err(|_| LinAlgError::BadEntry(d.clone()))?;
                    Rational::new(num, den).map_err(|_| LinAlgError::BadEntry(format!("{n}/{d}")))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        RationalMatrix::new(self.rows, self.cols, entries)
    }
}

/// Parses the matrix JSON schema from text.
pub fn matrix_from_json(text: &str) -> Result<RationalMatrix, LinAlgError> {
    let wire: MatrixJson =
        serde_json::from_str(text).map_err(|e| LinAlgError::BadEntry(e.to_string()))?;
    wire.to_matrix()
}

/// Serializes a matrix into the JSON schema.
pub fn matrix_to_json(m: &RationalMatrix) -> String {
    serde_json::to_string(&MatrixJson::from_matrix(m)).expect("serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    /// Independent determinant oracle: plain cofactor expansion over
    /// rationals, used to cross-check the elimination path.
    fn det_oracle(m: &RationalMatrix) -> Rational {
        fn go(e: &[Rational], n: usize) -> Rational {
            if n == 1 {
                return e[0].clone();
            }
            let mut acc = Rational::zero();
            for j in 0..n {
                if e[j].is_zero() {
                    continue;
                }
                let mut sub = Vec::new();
                for row in 1..n {
                    for c in 0..n {
                        if c != j {
                            sub.push(e[row * n + c].clone());
                        }
                    }
                }
                let t = e[j].mul(&go(&sub, n - 1));
                acc = if j % 2 == 0 { acc.add(&t) } else { acc.sub(&t) };
            }
            acc
        }
        let n = m.rows();
        let entries: Vec<Rational> = (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .map(|(r, c)| m.get(r, c).clone())
            .collect();
        go(&entries, n)
    }

    #[test]
    fn rank_examples() {
        assert_eq!(RationalMatrix::zero(3, 3).rank(), 0);
        assert_eq!(RationalMatrix::identity(3).rank(), 3);
        // Columns: A1 = (1,-1,0), A2 = A1, A3 = 0: proportional by construction.
        let m = RationalMatrix::from_i64_rows(&[&[1, 1, 0], &[-1, -1, 0], &[0, 0, 0]]);
        assert_eq!(m.rank(), 1);
    }

    #[test]
    fn nullspace_examples() {
        assert!(RationalMatrix::identity(3).nullspace().is_empty());

        let m = RationalMatrix::from_i64_rows(&[&[1, 1]]);
        let ns = m.nullspace();
        assert_eq!(ns.len(), 1);
        // First nonzero entry normalized to 1: (1, -1), proportional to (-1, 1).
        assert_eq!(ns[0].get(0, 0), &r(1));
        assert_eq!(ns[0].get(1, 0), &r(-1));
    }

    #[test]
    fn nullspace_recovers_dependency_coefficients() {
        // Columns A1, A2 = 2 A1, A3 = 3 A1.
        let m = RationalMatrix::from_i64_rows(&[&[1, 2, 3], &[2, 4, 6], &[-1, -2, -3]]);
        let ns = m.nullspace();
        assert_eq!(ns.len(), 2);
        for v in &ns {
            // Every basis vector satisfies M v = 0 exactly.
            let prod = m.matmul(v).unwrap();
            assert!(prod.is_zero());
        }
        assert_eq!(ns.len(), m.cols() - m.rank());
    }

    #[test]
    fn det_examples() {
        assert_eq!(RationalMatrix::identity(3).det().unwrap(), r(1));
        let repeated = RationalMatrix::from_i64_rows(&[&[1, 1, 0], &[2, 2, 5], &[3, 3, 7]]);
        assert_eq!(repeated.det().unwrap(), r(0));
        let m = RationalMatrix::from_i64_rows(&[&[1, 2], &[3, 4]]);
        assert_eq!(m.det().unwrap(), r(-2));
        assert_eq!(m.det().unwrap(), det_oracle(&m));
    }

    #[test]
    fn det_rejects_non_square() {
        let m = RationalMatrix::zero(2, 3);
        assert!(matches!(m.det(), Err(LinAlgError::NonSquare { .. })));
    }

    #[test]
    fn minor_examples() {
        let id = RationalMatrix::identity(3);
        assert_eq!(id.minor(&[1], &[1]).unwrap(), r(1));
        assert_eq!(id.minor(&[0, 1], &[0, 1]).unwrap(), r(1));

        let m = RationalMatrix::from_i64_rows(&[&[1, 2, 0], &[3, 4, 0], &[0, 0, 0]]);
        assert_eq!(m.minor(&[0, 1], &[0, 1]).unwrap(), r(-2));

        assert!(m.minor(&[0, 1], &[0]).is_err());
        assert!(m.minor(&[0, 5], &[0, 1]).is_err());
    }

    #[test]
    fn polynomial_det_examples() {
        use crate::parse::parse_polynomial;
        let id = PolynomialMatrix::identity(3, 2);
        assert!(id.det().unwrap().is_one());

        let diag = PolynomialMatrix::new(
            2,
            2,
            vec![
                parse_polynomial("1 + 3*x1", Some(1)).unwrap(),
                Polynomial::zero(1),
                Polynomial::zero(1),
                Polynomial::one(1),
            ],
        )
        .unwrap();
        assert_eq!(
            diag.det().unwrap(),
            parse_polynomial("3*x1 + 1", Some(1)).unwrap()
        );

        let too_big = PolynomialMatrix::identity(5, 1);
        assert!(matches!(too_big.det(), Err(LinAlgError::TooLarge { .. })));
    }

    #[test]
    fn matrix_json_round_trip() {
        let m = RationalMatrix::from_rows(vec![
            vec![r(1), Rational::ratio(-1, 2)],
            vec![r(0), r(7)],
        ])
        .unwrap();
        let json = matrix_to_json(&m);
        let back = matrix_from_json(&json).unwrap();
        assert_eq!(back, m);

        let hand = r#"{"rows":2,"cols":2,"entries":["1",["-1","2"],"0",7]}"#;
        assert_eq!(matrix_from_json(hand).unwrap(), m);

        assert!(matrix_from_json(r#"{"rows":2,"cols":2,"entries":["1"]}"#).is_err());
        assert!(matrix_from_json(r#"{"rows":1,"cols":1,"entries":[["1","0"]]}"#).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_matrix(rows: usize, cols: usize) -> impl Strategy<Value = RationalMatrix> {
            proptest::collection::vec((-4i64..=4, 1i64..=3), rows * cols).prop_map(
                move |vals| {
                    RationalMatrix::new(
                        rows,
                        cols,
                        vals.into_iter()
                            .map(|(n, d)| Rational::ratio(n, d))
                            .collect(),
                    )
                    .unwrap()
                },
            )
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn rank_equals_transpose_rank(m in arb_matrix(3, 4)) {
                prop_assert_eq!(m.rank(), m.transpose().rank());
            }

            #[test]
            fn det_is_multiplicative(a in arb_matrix(3, 3), b in arb_matrix(3, 3)) {
                let prod = a.matmul(&b).unwrap();
                prop_assert_eq!(
                    prod.det().unwrap(),
                    a.det().unwrap().mul(&b.det().unwrap())
                );
            }

            #[test]
            fn nullspace_vectors_annihilate(m in arb_matrix(3, 5)) {
                let ns = m.nullspace();
                prop_assert_eq!(ns.len(), m.cols() - m.rank());
                for v in &ns {
                    prop_assert!(m.matmul(v).unwrap().is_zero());
                }
            }

            #[test]
            fn elimination_det_matches_cofactor_oracle(m in arb_matrix(3, 3)) {
                prop_assert_eq!(m.det().unwrap(), det_oracle(&m));
            }

            #[test]
            fn symbolic_det_specializes(
                coeffs in proptest::collection::vec((-3i64..=3, -3i64..=3), 9),
                point in proptest::collection::vec((-5i64..=5, 1i64..=4), 2),
            ) {
                // Entries a + b*x1 evaluated at a random rational point: the
                // symbolic determinant evaluated there must match the exact
                // rational determinant of the evaluated matrix.
                use crate::parse::parse_polynomial;
                let entries: Vec<Polynomial> = coeffs
                    .iter()
                    .map(|(a, b)| {
                        parse_polynomial(&format!("{a} + {b}*x1 + {b}*x2^2"), Some(2)).unwrap()
                    })
                    .collect();
                let pm = PolynomialMatrix::new(3, 3, entries).unwrap();
                let at: Vec<Rational> =
                    point.iter().map(|(n, d)| Rational::ratio(*n, *d)).collect();
                let lhs = pm.det().unwrap().eval(&at).unwrap();
                let rhs = pm.eval(&at).unwrap().det().unwrap();
                prop_assert_eq!(lhs, rhs);
            }
        }
    }
}
