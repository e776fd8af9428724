//! Exact linear algebra over the residue rings `Z_n`.
//!
//! The central routine is [`howell_form`], a strong row-echelon form for
//! matrices over `Z_n`. It is used to pick a minimal generating set for the
//! abelian factor of the gate group: the orbit of a diagonal gate's phase
//! vector under coordinate permutations is arranged column-wise, reduced,
//! and the original columns at pivot positions are kept.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Extended Euclid on signed integers: returns `(g, s, t)` with `s*a + t*b = g`.
fn xgcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    (old_r, old_s, old_t)
}

fn reduce(x: i128, n: u64) -> u64 {
    x.rem_euclid(n as i128) as u64
}

/// A unit `u` of `Z_n` with `u * a ≡ gcd(a, n) (mod n)`.
fn normalising_unit(a: u64, n: u64) -> u64 {
    let g = gcd(a, n);
    if g == 0 || n == 1 {
        return 1;
    }
    let a_red = a / g;
    let n_red = n / g;
    let base = if n_red == 1 {
        0
    } else {
        let (_, s, _) = xgcd(a_red as i128, n_red as i128);
        reduce(s, n_red)
    };
    // Lift the inverse mod n/g to a unit mod n; one of the g lifts works.
    (0..g)
        .map(|k| (base + k * n_red) % n)
        .find(|&u| gcd(u, n) == 1)
        .unwrap_or(1)
}

/// An element of `Z_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ResidueScalar {
    value: u64,
    modulus: u64,
}

impl ResidueScalar {
    pub fn new(value: i64, modulus: u64) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::ZeroModulus);
        }
        Ok(Self {
            value: reduce(value as i128, modulus),
            modulus,
        })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn is_unit(&self) -> bool {
        gcd(self.value, self.modulus) == 1
    }

    /// Additive order of the element.
    pub fn order(&self) -> u64 {
        self.modulus / gcd(self.value, self.modulus)
    }

    fn check(&self, other: &Self) {
        assert_eq!(self.modulus, other.modulus, "residue moduli differ");
    }
}

impl Add for ResidueScalar {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.check(&rhs);
        Self {
            value: (self.value + rhs.value) % self.modulus,
            modulus: self.modulus,
        }
    }
}

impl Sub for ResidueScalar {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.check(&rhs);
        Self {
            value: (self.value + self.modulus - rhs.value) % self.modulus,
            modulus: self.modulus,
        }
    }
}

impl Mul for ResidueScalar {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.check(&rhs);
        Self {
            value: ((self.value as u128 * rhs.value as u128) % self.modulus as u128) as u64,
            modulus: self.modulus,
        }
    }
}

impl Neg for ResidueScalar {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            value: (self.modulus - self.value) % self.modulus,
            modulus: self.modulus,
        }
    }
}

impl fmt::Display for ResidueScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// A vector over `Z_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ResidueVector {
    entries: Vec<u64>,
    modulus: u64,
}

impl ResidueVector {
    pub fn new(entries: &[i64], modulus: u64) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::ZeroModulus);
        }
        Ok(Self {
            entries: entries.iter().map(|&e| reduce(e as i128, modulus)).collect(),
            modulus,
        })
    }

    pub(crate) fn from_reduced(entries: Vec<u64>, modulus: u64) -> Self {
        debug_assert!(entries.iter().all(|&e| e < modulus));
        Self { entries, modulus }
    }

    pub fn zeros(len: usize, modulus: u64) -> Self {
        Self {
            entries: vec![0; len],
            modulus,
        }
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn get(&self, i: usize) -> ResidueScalar {
        ResidueScalar {
            value: self.entries[i],
            modulus: self.modulus,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&e| e == 0)
    }

    pub fn scaled(&self, k: u64) -> Self {
        let n = self.modulus as u128;
        Self {
            entries: self
                .entries
                .iter()
                .map(|&e| ((e as u128 * k as u128) % n) as u64)
                .collect(),
            modulus: self.modulus,
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch(self.modulus, other.modulus));
        }
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(Self {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| (a + b) % self.modulus)
                .collect(),
            modulus: self.modulus,
        })
    }

    /// Smallest `r >= 1` with `r * v = 0`.
    pub fn order(&self) -> u64 {
        vector_order(self)
    }
}

impl fmt::Display for ResidueVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// A dense row-major matrix over `Z_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
    modulus: u64,
}

impl ResidueMatrix {
    pub fn zeros(rows: usize, cols: usize, modulus: u64) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::ZeroModulus);
        }
        Ok(Self {
            rows,
            cols,
            data: vec![0; rows * cols],
            modulus,
        })
    }

    pub fn identity(size: usize, modulus: u64) -> Result<Self> {
        let mut m = Self::zeros(size, size, modulus)?;
        for i in 0..size {
            m.data[i * size + i] = 1 % modulus;
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<i64>], modulus: u64) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::ZeroModulus);
        }
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::LengthMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend(row.iter().map(|&e| reduce(e as i128, modulus)));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
            modulus,
        })
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[ResidueVector]) -> Result<Self> {
        let first = columns.first().ok_or_else(|| {
            Error::InvalidParameter("cannot build a matrix from zero columns".into())
        })?;
        let (rows, modulus) = (first.len(), first.modulus());
        let mut m = Self::zeros(rows, columns.len(), modulus)?;
        for (j, c) in columns.iter().enumerate() {
            if c.modulus() != modulus {
                return Err(Error::ModulusMismatch(modulus, c.modulus()));
            }
            if c.len() != rows {
                return Err(Error::LengthMismatch {
                    expected: rows,
                    found: c.len(),
                });
            }
            for (i, &e) in c.entries().iter().enumerate() {
                m.data[i * m.cols + j] = e;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> ResidueVector {
        ResidueVector::from_reduced(
            self.data[i * self.cols..(i + 1) * self.cols].to_vec(),
            self.modulus,
        )
    }

    pub fn column(&self, j: usize) -> ResidueVector {
        ResidueVector::from_reduced(
            (0..self.rows).map(|i| self.get(i, j)).collect(),
            self.modulus,
        )
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        self.data.chunks(self.cols.max(1)).map(<[u64]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut data = vec![0; self.rows * self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.get(i, j);
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
            modulus: self.modulus,
        }
    }
}

impl fmt::Display for ResidueMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            writeln!(f, "{}", self.row(i))?;
        }
        Ok(())
    }
}

/// Reads off the exponents of a diagonal of `order`-th roots of unity.
pub fn to_ring(diagonal: &[Complex64], order: u64) -> Result<ResidueVector> {
    if order == 0 {
        return Err(Error::ZeroModulus);
    }
    let mut out = Vec::with_capacity(diagonal.len());
    for (index, z) in diagonal.iter().enumerate() {
        let turns = z.arg() / std::f64::consts::TAU * order as f64;
        let k = reduce(turns.round() as i128, order);
        let expected = Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / order as f64);
        if (z - expected).norm() > 1e-9 {
            return Err(Error::NotRootOfUnity { index, order });
        }
        out.push(k);
    }
    Ok(ResidueVector::from_reduced(out, order))
}

pub fn vector_order(v: &ResidueVector) -> u64 {
    let g = v.entries().iter().fold(v.modulus(), |acc, &e| gcd(acc, e));
    v.modulus() / g
}

/// Howell form together with the pivot column of each non-zero row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HowellForm {
    pub matrix: ResidueMatrix,
    pub pivots: Vec<usize>,
}

impl HowellForm {
    /// Number of elements in the row span.
    pub fn span_size(&self) -> u128 {
        let n = self.matrix.modulus();
        self.pivots
            .iter()
            .enumerate()
            .map(|(r, &c)| (n / self.matrix.get(r, c)) as u128)
            .product()
    }
}

fn combine(a: &[u64], ka: i128, b: &[u64], kb: i128, n: u64) -> Vec<u64> {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| reduce(ka * x as i128 + kb * y as i128, n))
        .collect()
}

/// Howell normal form of `m`: strong echelon form whose pivots divide the
/// modulus, entries above each pivot reduced below it, and every span element
/// with leading zeros generated by the rows below.
///
/// The result has at least as many rows as `m`; zero rows are appended last.
pub fn howell_form(m: &ResidueMatrix) -> ResidueMatrix {
    howell_decomposition(m).matrix
}

pub fn howell_decomposition(m: &ResidueMatrix) -> HowellForm {
    let n = m.modulus();
    let cols = m.cols();
    let mut pool: Vec<Vec<u64>> = m
        .to_rows()
        .into_iter()
        .take(m.rows())
        .filter(|r| r.iter().any(|&e| e != 0))
        .collect();
    let mut reduced: Vec<Vec<u64>> = Vec::new();
    let mut pivots = Vec::new();

    for c in 0..cols {
        let mut pivot: Option<Vec<u64>> = None;
        let mut rest = Vec::with_capacity(pool.len());
        for row in pool.drain(..) {
            if row[c] == 0 {
                rest.push(row);
                continue;
            }
            match pivot.take() {
                None => pivot = Some(row),
                Some(p) => {
                    let (a, b) = (p[c] as i128, row[c] as i128);
                    let (g, s, t) = xgcd(a, b);
                    // [[s, t], [-b/g, a/g]] has determinant one.
                    let new_pivot = combine(&p, s, &row, t, n);
                    let eliminated = combine(&p, -b / g, &row, a / g, n);
                    debug_assert_eq!(eliminated[c], 0);
                    if eliminated.iter().any(|&e| e != 0) {
                        rest.push(eliminated);
                    }
                    pivot = Some(new_pivot);
                }
            }
        }
        if let Some(p) = pivot {
            if p[c] != 0 {
                let unit = normalising_unit(p[c], n);
                let p = combine(&p, unit as i128, &p, 0, n);
                let annihilator = n / p[c];
                let ann_row = combine(&p, annihilator as i128, &p, 0, n);
                if ann_row.iter().any(|&e| e != 0) {
                    rest.push(ann_row);
                }
                reduced.push(p);
                pivots.push(c);
            } else if p.iter().any(|&e| e != 0) {
                rest.push(p);
            }
        }
        pool = rest;
    }
    debug_assert!(pool.is_empty());

    for i in 0..reduced.len() {
        let c = pivots[i];
        let pv = reduced[i][c];
        for j in 0..i {
            let q = reduced[j][c] / pv;
            if q > 0 {
                let (head, tail) = reduced.split_at_mut(i);
                head[j] = combine(&head[j], 1, &tail[0], -(q as i128), n);
            }
        }
    }

    let rows = reduced.len().max(m.rows());
    let mut data = Vec::with_capacity(rows * cols);
    for r in &reduced {
        data.extend_from_slice(r);
    }
    data.resize(rows * cols, 0);
    HowellForm {
        matrix: ResidueMatrix {
            rows,
            cols,
            data,
            modulus: n,
        },
        pivots,
    }
}

/// Number of elements in the `Z_n`-span of `vectors`.
pub fn span_size(vectors: &[ResidueVector]) -> Result<u128> {
    if vectors.is_empty() {
        return Ok(1);
    }
    let m = ResidueMatrix::from_columns(vectors)?.transpose();
    Ok(howell_decomposition(&m).span_size())
}

/// Generators of an abelian subgroup of `Z_n^d` with their additive orders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generators {
    pub vectors: Vec<ResidueVector>,
    pub orders: Vec<u64>,
}

impl Generators {
    pub fn group_order(&self) -> u128 {
        self.orders.iter().map(|&k| k as u128).product()
    }
}

/// Extracts a generating set from `vectors`: the inputs are placed as the
/// columns of a matrix, reduced to Howell form, and the input columns at the
/// pivot positions are returned. Fails if those columns do not form a direct
/// product decomposition of the span.
pub fn minimal_generators(vectors: &[ResidueVector]) -> Result<Generators> {
    let Some(first) = vectors.first() else {
        return Ok(Generators {
            vectors: Vec::new(),
            orders: Vec::new(),
        });
    };
    for v in vectors {
        if v.modulus() != first.modulus() {
            return Err(Error::ModulusMismatch(first.modulus(), v.modulus()));
        }
        if v.len() != first.len() {
            return Err(Error::LengthMismatch {
                expected: first.len(),
                found: v.len(),
            });
        }
    }
    let m = ResidueMatrix::from_columns(vectors)?;
    let howell = howell_decomposition(&m);
    let chosen: Vec<ResidueVector> = howell
        .pivots
        .iter()
        .map(|&c| vectors[c].clone())
        .filter(|v| !v.is_zero())
        .collect();
    let orders: Vec<u64> = chosen.iter().map(vector_order).collect();
    let generators = Generators {
        vectors: chosen,
        orders,
    };

    let span = span_size(vectors)?;
    let product = generators.group_order();
    if span != product || span_size(&generators.vectors)? != span {
        return Err(Error::DependentGenerators { product, span });
    }
    Ok(generators)
}

fn prime_power_base(n: u64) -> Option<u64> {
    if n < 2 {
        return None;
    }
    let p = (2..=n).find(|p| n.is_multiple_of(*p))?;
    let mut m = n;
    while m.is_multiple_of(p) {
        m /= p;
    }
    (m == 1).then_some(p)
}

/// Independent cyclic generators of the span of `vectors` over `Z_{p^k}`,
/// from a Smith normal form `U G V = diag(p^{a_i})`: the generators are
/// `p^{a_i}` times the columns of `U^{-1}`.
pub fn cyclic_basis(vectors: &[ResidueVector]) -> Result<Generators> {
    let Some(first) = vectors.first() else {
        return Ok(Generators {
            vectors: Vec::new(),
            orders: Vec::new(),
        });
    };
    let n = first.modulus();
    let p = prime_power_base(n).ok_or_else(|| {
        Error::InvalidParameter(format!("cyclic basis needs a prime-power modulus, got {n}"))
    })?;
    let mut a = ResidueMatrix::from_columns(vectors)?.to_rows();
    let rows = a.len();
    let cols = vectors.len();
    // columns of U^{-1}, stored as rows of its transpose
    let mut uinv_t: Vec<Vec<u64>> = (0..rows)
        .map(|i| (0..rows).map(|j| u64::from(i == j)).collect())
        .collect();
    let valuation = |x: u64| -> u32 {
        if x == 0 {
            u32::MAX
        } else {
            let mut v = 0;
            let mut y = x;
            while y.is_multiple_of(p) {
                y /= p;
                v += 1;
            }
            v
        }
    };
    let mul = |x: u64, y: u64| ((x as u128 * y as u128) % n as u128) as u64;
    let mut diag = Vec::new();
    for t in 0..rows.min(cols) {
        let best = (t..rows)
            .flat_map(|i| (t..cols).map(move |j| (i, j)))
            .filter(|&(i, j)| a[i][j] != 0)
            .min_by_key(|&(i, j)| valuation(a[i][j]));
        let Some((bi, bj)) = best else {
            break;
        };
        a.swap(t, bi);
        uinv_t.swap(t, bi);
        for row in a.iter_mut() {
            row.swap(t, bj);
        }
        // scale row t so the pivot becomes p^v
        let v = valuation(a[t][t]);
        let pv = p.pow(v);
        let unit = a[t][t] / pv;
        let (_, inv, _) = xgcd(unit as i128, n as i128);
        let inv = reduce(inv, n);
        for x in a[t].iter_mut() {
            *x = mul(*x, inv);
        }
        for x in uinv_t[t].iter_mut() {
            *x = mul(*x, unit % n);
        }
        // clear column t below and above
        for i in 0..rows {
            if i == t || a[i][t] == 0 {
                continue;
            }
            let f = a[i][t] / pv;
            for j in 0..cols {
                a[i][j] = reduce(a[i][j] as i128 - (f as i128) * (a[t][j] as i128), n);
            }
            for j in 0..rows {
                uinv_t[t][j] = reduce(uinv_t[t][j] as i128 + (f as i128) * (uinv_t[i][j] as i128), n);
            }
        }
        // clear row t by column operations (they do not touch U)
        for j in 0..cols {
            if j != t {
                a[t][j] = 0;
            }
        }
        diag.push(pv);
    }
    let mut gens = Vec::new();
    let mut orders = Vec::new();
    for (t, &pv) in diag.iter().enumerate() {
        if pv % n == 0 {
            continue;
        }
        let v = ResidueVector::from_reduced(uinv_t[t].iter().map(|&x| mul(x, pv)).collect(), n);
        orders.push(vector_order(&v));
        gens.push(v);
    }
    let generators = Generators {
        vectors: gens,
        orders,
    };
    let span = span_size(vectors)?;
    if generators.group_order() != span || span_size(&generators.vectors)? != span {
        return Err(Error::DependentGenerators {
            product: generators.group_order(),
            span,
        });
    }
    Ok(generators)
}

/// Pivot-column generators when they are independent, otherwise a cyclic
/// basis of the same span.
pub fn independent_generators(vectors: &[ResidueVector]) -> Result<Generators> {
    match minimal_generators(vectors) {
        Err(Error::DependentGenerators { .. }) => cyclic_basis(vectors),
        other => other,
    }
}

/// Expresses vectors in the span of a fixed generator list as coefficient
/// tuples, reducing against the Howell form of `[G | I]`.
#[derive(Debug, Clone)]
pub struct CoordinateSolver {
    dim: usize,
    orders: Vec<u64>,
    modulus: u64,
    howell: HowellForm,
}

impl CoordinateSolver {
    pub fn new(generators: &Generators, dim: usize, modulus: u64) -> Result<Self> {
        let k = generators.vectors.len();
        let mut rows = Vec::with_capacity(k);
        for (i, g) in generators.vectors.iter().enumerate() {
            if g.modulus() != modulus {
                return Err(Error::ModulusMismatch(modulus, g.modulus()));
            }
            if g.len() != dim {
                return Err(Error::LengthMismatch {
                    expected: dim,
                    found: g.len(),
                });
            }
            let mut row: Vec<i64> = g.entries().iter().map(|&e| e as i64).collect();
            row.extend((0..k).map(|j| i64::from(i == j)));
            rows.push(row);
        }
        let howell = if k == 0 {
            HowellForm {
                matrix: ResidueMatrix::zeros(0, dim, modulus)?,
                pivots: Vec::new(),
            }
        } else {
            howell_decomposition(&ResidueMatrix::from_rows(&rows, modulus)?)
        };
        Ok(Self {
            dim,
            orders: generators.orders.clone(),
            modulus,
            howell,
        })
    }

    /// Coefficients `c` with `sum_i c_i g_i = target`, each `c_i < order_i`.
    pub fn coordinates(&self, target: &[u64]) -> Result<Vec<u64>> {
        if target.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                found: target.len(),
            });
        }
        let n = self.modulus;
        let k = self.orders.len();
        let mut v: Vec<u64> = target.iter().map(|&e| e % n).collect();
        v.resize(self.dim + k, 0);
        let h = &self.howell.matrix;
        for (r, &c) in self.howell.pivots.iter().enumerate() {
            if c >= self.dim {
                break;
            }
            let p = h.get(r, c);
            if !v[c].is_multiple_of(p) {
                return Err(Error::NotInSpan);
            }
            let q = (v[c] / p) as i128;
            if q != 0 {
                let row = &h.data[r * h.cols..(r + 1) * h.cols];
                v = combine(&v, 1, row, -q, n);
            }
        }
        if v[..self.dim].iter().any(|&e| e != 0) {
            return Err(Error::NotInSpan);
        }
        Ok(v[self.dim..]
            .iter()
            .zip(&self.orders)
            .map(|(&e, &k)| ((n - e) % n) % k)
            .collect())
    }
}
