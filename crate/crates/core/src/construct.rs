//! Builders for the named representations: standard, Karatsuba,
//! Toom-Cook and the small-field families for degrees `(n, 1)` and `(n, 2)`.

use thiserror::Error;

use crate::coeff::{CoeffDomain, CoeffError, Coefficient};
use crate::io;
use crate::tensor::{CoeffVector, Scheme, TensorError, Term};

#[derive(Debug, Error)]
pub enum ConstructError {
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("evaluation points must be pairwise distinct")]
    DuplicatePoints,
    #[error("need {expected} evaluation points, got {found}")]
    PointCount { expected: usize, found: usize },
    #[error("{domain} has fewer than {needed} distinct elements")]
    DomainTooSmall { domain: CoeffDomain, needed: usize },
    #[error("{0} is not a field")]
    NotAField(CoeffDomain),
    #[error("degree {n} is below the smallest supported value {min}")]
    DegreeTooSmall { n: usize, min: usize },
    #[error("shift by {offset} does not fit into degrees ({new_n}, {new_m})")]
    ShiftOutOfRange { offset: usize, new_n: usize, new_m: usize },
    #[error("{0}")]
    Unsupported(String),
    #[error("bundled data {name}: {reason}")]
    Data { name: &'static str, reason: String },
}

/// Pairwise distinct points of a field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalPoints {
    domain: CoeffDomain,
    points: Vec<Coefficient>,
}

impl EvalPoints {
    pub fn new(domain: CoeffDomain, points: Vec<Coefficient>) -> Result<Self, ConstructError> {
        if !domain.is_field() {
            return Err(ConstructError::NotAField(domain));
        }
        for (i, p) in points.iter().enumerate() {
            if p.domain() != domain {
                return Err(CoeffError::DomainMismatch(domain, p.domain()).into());
            }
            if points[..i].contains(p) {
                return Err(ConstructError::DuplicatePoints);
            }
        }
        Ok(EvalPoints { domain, points })
    }

    /// The first `count` elements of `0, 1, -1, 2, -2, ...` in `domain`.
    pub fn default_for(domain: CoeffDomain, count: usize) -> Result<Self, ConstructError> {
        if !domain.is_field() {
            return Err(ConstructError::NotAField(domain));
        }
        if let Some(order) = domain.order() {
            if (count as u128) > order {
                return Err(ConstructError::DomainTooSmall { domain, needed: count });
            }
        }
        let pts = (0..count as i64)
            .map(|i| {
                let mag = (i + 1) / 2;
                domain.from_i64(if i % 2 == 1 { mag } else { -mag })
            })
            .collect();
        Self::new(domain, pts)
    }

    pub fn parse(domain: CoeffDomain, text: &str) -> Result<Self, ConstructError> {
        let pts = text.split(',').map(|t| domain.parse_coeff(t)).collect::<Result<Vec<_>, _>>()?;
        Self::new(domain, pts)
    }

    pub fn domain(&self) -> CoeffDomain {
        self.domain
    }

    pub fn points(&self) -> &[Coefficient] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, i: usize) -> &Coefficient {
        &self.points[i]
    }

    /// First `count` points.
    pub fn prefix(&self, count: usize) -> EvalPoints {
        EvalPoints { domain: self.domain, points: self.points[..count].to_vec() }
    }

    /// `(1, x, x^2, ..., x^deg)` for point `k`.
    pub fn powers(&self, k: usize, deg: usize) -> CoeffVector {
        let x = &self.points[k];
        let mut acc = self.domain.one();
        let mut out = Vec::with_capacity(deg + 1);
        for _ in 0..=deg {
            out.push(acc.clone());
            acc = acc.mul_unchecked(x);
        }
        CoeffVector::from_entries(self.domain, out).expect("same domain")
    }
}

/// `alpha[l][k]`: coefficient of `x^l` in the `k`-th Lagrange basis
/// polynomial. Stored column-wise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LagrangeMatrix {
    columns: Vec<CoeffVector>,
}

impl LagrangeMatrix {
    pub fn get(&self, l: usize, k: usize) -> &Coefficient {
        self.columns[k].get(l)
    }

    pub fn column(&self, k: usize) -> &CoeffVector {
        &self.columns[k]
    }

    pub fn size(&self) -> usize {
        self.columns.len()
    }
}

pub fn lagrange_coeffs(pts: &EvalPoints) -> Result<LagrangeMatrix, ConstructError> {
    let d = pts.domain();
    let len = pts.len();
    let mut columns = Vec::with_capacity(len);
    for k in 0..len {
        // running product of (x - x_l), coefficients low to high
        let mut poly = vec![d.one()];
        let mut denom = d.one();
        for l in 0..len {
            if l == k {
                continue;
            }
            let xl = pts.get(l);
            let mut next = vec![d.zero(); poly.len() + 1];
            for (i, c) in poly.iter().enumerate() {
                next[i + 1] = next[i + 1].add(c)?;
                next[i] = next[i].sub(&c.mul(xl)?)?;
            }
            poly = next;
            denom = denom.mul(&pts.get(k).sub(xl)?)?;
        }
        let inv = denom.inverse().map_err(|_| ConstructError::DuplicatePoints)?;
        let col = CoeffVector::from_entries(d, poly)?.scale(&inv)?;
        columns.push(col);
    }
    Ok(LagrangeMatrix { columns })
}

/// `Σ_{i,j} a_i ⊗ b_j ⊗ c_{i+j}`, terms ordered by `(i, j)`.
pub fn standard_scheme(n: usize, m: usize, domain: CoeffDomain) -> Scheme {
    let mut s = Scheme::empty(n, m, domain);
    for i in 0..=n {
        for j in 0..=m {
            s.push(Term::new(
                CoeffVector::unit(domain, n + 1, i),
                CoeffVector::unit(domain, m + 1, j),
                CoeffVector::unit(domain, n + m + 1, i + j),
            ))
            .expect("consistent lengths");
        }
    }
    s
}

/// `a_0⊗b_0⊗(c_0−c_1) + (a_0+a_1)⊗(b_0+b_1)⊗c_1 + a_1⊗b_1⊗(c_2−c_1)`.
pub fn karatsuba(domain: CoeffDomain) -> Scheme {
    let v = |xs: &[i64]| CoeffVector::from_i64s(domain, xs);
    Scheme::new(
        1,
        1,
        domain,
        vec![
            Term::new(v(&[1, 0]), v(&[1, 0]), v(&[1, -1, 0])),
            Term::new(v(&[1, 1]), v(&[1, 1]), v(&[0, 1, 0])),
            Term::new(v(&[0, 1]), v(&[0, 1]), v(&[0, -1, 1])),
        ],
    )
    .expect("consistent lengths")
}

/// Evaluation/interpolation representation with `n+m+1` terms.
pub fn toom_cook_scheme(n: usize, m: usize, pts: &EvalPoints) -> Result<Scheme, ConstructError> {
    let needed = n + m + 1;
    if let Some(order) = pts.domain().order() {
        if order < needed as u128 {
            return Err(ConstructError::DomainTooSmall { domain: pts.domain(), needed });
        }
    }
    if pts.len() != needed {
        return Err(ConstructError::PointCount { expected: needed, found: pts.len() });
    }
    let lag = lagrange_coeffs(pts)?;
    let mut s = Scheme::empty(n, m, pts.domain());
    for k in 0..needed {
        s.push(Term::new(pts.powers(k, n), pts.powers(k, m), lag.column(k).clone()))?;
    }
    Ok(s)
}

/// Embed `s` into degrees `(new_n, new_m)`, moving `a_i -> a_{i+offset}`
/// and `c_k -> c_{k+offset}`; `b` is unchanged.
pub fn shift_scheme(s: &Scheme, offset: usize, new_n: usize, new_m: usize) -> Result<Scheme, ConstructError> {
    if s.n() + offset > new_n || s.m() > new_m {
        return Err(ConstructError::ShiftOutOfRange { offset, new_n, new_m });
    }
    let mut out = Scheme::empty(new_n, new_m, s.domain());
    for t in s.terms() {
        out.push(Term::new(
            t.u.shifted(offset, new_n + 1).expect("checked"),
            t.v.shifted(0, new_m + 1).expect("checked"),
            t.w.shifted(offset, new_n + new_m + 1).expect("checked"),
        ))?;
    }
    Ok(out)
}

/// Extend a degree-`(n,1)` scheme to `(n+1,1)` by appending
/// `a_{n+1}⊗b_0⊗c_{n+1} + a_{n+1}⊗b_1⊗c_{n+2}`.
pub fn append_deg1_column(s: &Scheme) -> Result<Scheme, ConstructError> {
    if s.m() != 1 {
        return Err(ConstructError::Unsupported(format!("expected m = 1, got {}", s.m())));
    }
    let n = s.n() + 1;
    let d = s.domain();
    let mut out = shift_scheme(s, 0, n, 1)?;
    for j in 0..=1 {
        out.push(Term::new(CoeffVector::unit(d, n + 1, n), CoeffVector::unit(d, 2, j), CoeffVector::unit(d, n + 2, n + j)))?;
    }
    Ok(out)
}

const DEG1_N2: &str = include_str!("../data/deg1_n2.json");
const DEG2_N5: &str = include_str!("../data/deg2_n5.json");
const DEG2_N6: &str = include_str!("../data/deg2_n6.json");
const DEG2_N7: &str = include_str!("../data/deg2_n7.json");
const GF2_2X2_RANK6: &str = include_str!("../data/gf2_2x2_rank6.json");

fn bundled(name: &'static str, text: &str) -> Result<Scheme, ConstructError> {
    io::scheme_from_json(text).map_err(|e| ConstructError::Data { name, reason: e.to_string() })
}

/// Rank-6 scheme for `(2, 2)` over GF(2).
pub fn gf2_quadratic_block() -> Result<Scheme, ConstructError> {
    bundled("gf2_2x2_rank6", GF2_2X2_RANK6)
}

/// Scheme of rank `⌈3(n+1)/2⌉` for degrees `(n, 1)`, valid over any
/// coefficient ring (all coefficients are integers).
pub fn deg1_scheme(n: usize, domain: CoeffDomain) -> Result<Scheme, ConstructError> {
    match n {
        0 => Err(ConstructError::DegreeTooSmall { n, min: 1 }),
        1 => Ok(karatsuba(domain)),
        2 => Ok(bundled("deg1_n2", DEG1_N2)?.map_domain(domain)?),
        _ => {
            let low = shift_scheme(&deg1_scheme(n - 2, domain)?, 0, n, 1)?;
            let block = shift_scheme(&karatsuba(domain), n - 1, n, 1)?;
            Ok(low.union(&block)?)
        }
    }
}

/// GF(2) scheme of rank `2n+1` for degrees `(n, 2)`, `n >= 5`.
pub fn deg2_scheme(n: usize, domain: CoeffDomain) -> Result<Scheme, ConstructError> {
    if domain != CoeffDomain::Gf2 {
        return Err(ConstructError::Unsupported(format!("degree-(n,2) family is built over Z2, not {domain}")));
    }
    match n {
        0..=4 => Err(ConstructError::DegreeTooSmall { n, min: 5 }),
        5 => bundled("deg2_n5", DEG2_N5),
        6 => bundled("deg2_n6", DEG2_N6),
        7 => bundled("deg2_n7", DEG2_N7),
        _ => {
            let low = shift_scheme(&deg2_scheme(n - 3, domain)?, 0, n, 2)?;
            let block = shift_scheme(&gf2_quadratic_block()?, n - 2, n, 2)?;
            Ok(low.union(&block)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{contract, is_multiplication_tensor};

    fn q() -> CoeffDomain {
        CoeffDomain::Rational
    }

    fn qv(xs: &[&str]) -> CoeffVector {
        CoeffVector::from_entries(q(), xs.iter().map(|s| q().parse_coeff(s).unwrap()).collect()).unwrap()
    }

    // Oracle: expand Π_{l≠k} (x - x_l)/(x_k - x_l) by hand for points 0, 1, -1.
    #[test]
    fn lagrange_small_example() {
        let pts = EvalPoints::default_for(q(), 3).unwrap();
        assert_eq!(pts.points().iter().map(|c| c.to_string()).collect::<Vec<_>>(), ["0", "1", "-1"]);
        let lag = lagrange_coeffs(&pts).unwrap();
        // (x-1)(x+1)/((0-1)(0+1)) = 1 - x^2
        assert_eq!(*lag.column(0), qv(&["1", "0", "-1"]));
        // x(x+1)/(1*2) = x/2 + x^2/2
        assert_eq!(*lag.column(1), qv(&["0", "1/2", "1/2"]));
        // x(x-1)/((-1)(-2)) = -x/2 + x^2/2
        assert_eq!(*lag.column(2), qv(&["0", "-1/2", "1/2"]));
    }

    #[test]
    fn lagrange_evaluation_property() {
        for domain in [q(), CoeffDomain::gfp(7).unwrap(), CoeffDomain::gfp(11).unwrap()] {
            let pts = EvalPoints::default_for(domain, 6).unwrap();
            let lag = lagrange_coeffs(&pts).unwrap();
            for k in 0..6 {
                for j in 0..6 {
                    let val = lag.column(k).eval(pts.get(j)).unwrap();
                    assert_eq!(val.is_one(), j == k);
                    assert_eq!(val.is_zero(), j != k);
                }
            }
            // Σ_k x_k^0 c^(k) = c_0
            let mut acc = CoeffVector::zeros(domain, 6);
            for k in 0..6 {
                acc = acc.add(lag.column(k)).unwrap();
            }
            assert_eq!(acc, CoeffVector::unit(domain, 6, 0));
        }
    }

    #[test]
    fn interpolation_identity() {
        // Σ_k x_k^{i+j} c^(k) = c_{i+j}
        let (n, m) = (3, 2);
        let pts = EvalPoints::default_for(q(), n + m + 1).unwrap();
        let lag = lagrange_coeffs(&pts).unwrap();
        for e in 0..=n + m {
            let mut acc = CoeffVector::zeros(q(), n + m + 1);
            for k in 0..=n + m {
                acc = acc.axpy(&pts.get(k).pow(e as u32), lag.column(k)).unwrap();
            }
            assert_eq!(acc, CoeffVector::unit(q(), n + m + 1, e));
        }
    }

    #[test]
    fn repeated_points_rejected() {
        let pts = vec![q().from_i64(1), q().from_i64(1)];
        assert!(matches!(EvalPoints::new(q(), pts), Err(ConstructError::DuplicatePoints)));
    }

    #[test]
    fn standard_counts() {
        assert_eq!(standard_scheme(1, 1, q()).rank(), 4);
        let s00 = standard_scheme(0, 0, q());
        assert_eq!(s00.rank(), 1);
        assert_eq!(s00.terms()[0].w, CoeffVector::unit(q(), 1, 0));
        assert_eq!(standard_scheme(2, 2, CoeffDomain::Gf2).rank(), 9);
    }

    #[test]
    fn toom_cook_examples() {
        let tc = toom_cook_scheme(1, 1, &EvalPoints::default_for(q(), 3).unwrap()).unwrap();
        assert_eq!(tc.rank(), 3);
        assert!(is_multiplication_tensor(&tc));
        let pts = EvalPoints::parse(q(), "0,1,-1,2,-2").unwrap();
        let tc = toom_cook_scheme(2, 2, &pts).unwrap();
        assert_eq!(tc.rank(), 5);
        assert!(is_multiplication_tensor(&tc));
        assert!(matches!(
            EvalPoints::default_for(CoeffDomain::Gf2, 3),
            Err(ConstructError::DomainTooSmall { needed: 3, .. })
        ));
        let two = EvalPoints::default_for(CoeffDomain::Gf2, 2).unwrap();
        assert!(matches!(toom_cook_scheme(1, 1, &two), Err(ConstructError::DomainTooSmall { .. })));
        let short = EvalPoints::default_for(q(), 2).unwrap();
        assert!(matches!(toom_cook_scheme(1, 1, &short), Err(ConstructError::PointCount { .. })));
    }

    #[test]
    fn shift_examples() {
        let k = karatsuba(CoeffDomain::Integer);
        let shifted = shift_scheme(&k, 2, 3, 1).unwrap();
        for t in shifted.terms() {
            let (lo, _) = t.u.first_nonzero().unwrap();
            assert!(lo >= 2);
            assert!(t.w.entries()[..2].iter().all(|c| c.is_zero()));
        }
        assert_eq!(shift_scheme(&k, 0, 1, 1).unwrap(), k);
        assert!(shift_scheme(&k, 3, 3, 1).is_err());

        // standard (n,1) plus shifted standard (1,1) block = standard (n+2,1)
        let d = CoeffDomain::Integer;
        let low = shift_scheme(&standard_scheme(2, 1, d), 0, 4, 1).unwrap();
        let high = shift_scheme(&standard_scheme(1, 1, d), 3, 4, 1).unwrap();
        assert_eq!(contract(&low.union(&high).unwrap()), contract(&standard_scheme(4, 1, d)));
    }

    #[test]
    fn deg1_family() {
        for (n, r) in [(1, 3), (2, 5), (3, 6), (4, 8)] {
            for d in [CoeffDomain::Gf2, CoeffDomain::Integer] {
                let s = deg1_scheme(n, d).unwrap();
                assert_eq!(s.rank(), r, "n={n}");
                assert!(is_multiplication_tensor(&s));
            }
        }
        let appended = append_deg1_column(&karatsuba(CoeffDomain::Integer)).unwrap();
        assert_eq!(contract(&appended), contract(&deg1_scheme(2, CoeffDomain::Integer).unwrap()));
        assert_eq!(appended.rank(), 5);
        assert!(deg1_scheme(0, q()).is_err());
    }

    #[test]
    fn deg2_family() {
        for (n, r) in [(5, 11), (6, 13), (8, 17)] {
            let s = deg2_scheme(n, CoeffDomain::Gf2).unwrap();
            assert_eq!(s.rank(), r);
            assert!(is_multiplication_tensor(&s));
        }
        assert!(matches!(deg2_scheme(4, CoeffDomain::Gf2), Err(ConstructError::DegreeTooSmall { .. })));
        let block = gf2_quadratic_block().unwrap();
        assert_eq!(block.rank(), 6);
        assert!(is_multiplication_tensor(&block));
    }
}
