//! Sparse multivariate polynomials with exact rational coefficients.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::scalar::{fmt_rational, Rational, Scalar};

/// A monomial as sorted `(variable, exponent)` pairs with nonzero exponents.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(u16, u16)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: usize) -> Self {
        Monomial(vec![(v as u16, 1)])
    }

    pub fn from_pairs(mut pairs: Vec<(usize, u16)>) -> Self {
        pairs.sort_unstable();
        let mut out: Vec<(u16, u16)> = Vec::with_capacity(pairs.len());
        for (v, e) in pairs {
            match out.last_mut() {
                Some(last) if last.0 as usize == v => last.1 += e,
                _ => out.push((v as u16, e)),
            }
        }
        out.retain(|&(_, e)| e > 0);
        Monomial(out)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e as u32).sum()
    }

    pub fn exponent(&self, v: usize) -> u16 {
        self.0.iter().find(|&&(w, _)| w as usize == v).map_or(0, |&(_, e)| e)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, u16)> + '_ {
        self.0.iter().map(|&(v, e)| (v as usize, e))
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    /// Splits into the part over variables satisfying `keep` and the rest.
    pub fn split<F: Fn(usize) -> bool>(&self, keep: F) -> (Monomial, Monomial) {
        let (a, b): (Vec<_>, Vec<_>) = self.0.iter().partition(|&&(v, _)| keep(v as usize));
        (Monomial(a), Monomial(b))
    }
}

/// Graded lexicographic order with variable 0 the largest.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            o => return o,
        }
        for (a, b) in self.0.iter().zip(&other.0) {
            if a.0 != b.0 {
                return if a.0 < b.0 { Ordering::Greater } else { Ordering::Less };
            }
            if a.1 != b.1 {
                return a.1.cmp(&b.1);
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MultiPoly {
    terms: BTreeMap<Monomial, Rational>,
}

impl MultiPoly {
    pub fn constant(c: Rational) -> Self {
        let mut p = MultiPoly::default();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn var(v: usize) -> Self {
        let mut p = MultiPoly::default();
        p.add_term(Monomial::var(v), crate::scalar::int(1));
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, Rational)>>(terms: I) -> Self {
        let mut p = MultiPoly::default();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if Scalar::is_zero(&c) {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if Scalar::is_zero(e.get()) {
                    e.remove();
                }
            }
        }
    }

    /// Terms in decreasing monomial order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter().rev()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(<Rational as Scalar>::zero)
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    /// Substitutes rational values for the variables `f` maps to `Some`.
    pub fn substitute<F: Fn(usize) -> Option<Rational>>(&self, f: F) -> MultiPoly {
        let mut out = MultiPoly::default();
        for (m, c) in &self.terms {
            let mut coeff = c.clone();
            let mut rest = Vec::new();
            for (v, e) in m.pairs() {
                match f(v) {
                    Some(val) => coeff *= num_traits::pow(val, e as usize),
                    None => rest.push((v, e)),
                }
            }
            out.add_term(Monomial::from_pairs(rest), coeff);
        }
        out
    }

    /// Full evaluation; every variable must receive a value.
    pub fn eval<F: Fn(usize) -> Rational>(&self, f: F) -> Rational {
        let p = self.substitute(|v| Some(f(v)));
        p.coefficient(&Monomial::one())
    }

    /// Groups terms by their monomial in the variables selected by `outer`,
    /// returning each group's cofactor polynomial in the remaining variables.
    pub fn collect_by<F: Fn(usize) -> bool>(&self, outer: F) -> BTreeMap<Monomial, MultiPoly> {
        let mut out: BTreeMap<Monomial, MultiPoly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (o, rest) = m.split(&outer);
            out.entry(o).or_default().add_term(rest, c.clone());
        }
        out
    }

    pub fn fmt_with<F: Fn(usize) -> String>(&self, name: F) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut s = String::new();
        for (idx, (m, c)) in self.terms().enumerate() {
            let neg = c < &<Rational as Scalar>::zero();
            let abs = if neg { -c.clone() } else { c.clone() };
            if idx == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let unit = abs == crate::scalar::int(1);
            let mono: Vec<String> = m
                .pairs()
                .map(|(v, e)| if e == 1 { name(v) } else { format!("{}^{}", name(v), e) })
                .collect();
            if mono.is_empty() {
                s.push_str(&fmt_rational(&abs));
            } else {
                if !unit {
                    s.push_str(&fmt_rational(&abs));
                    s.push('*');
                }
                s.push_str(&mono.join("*"));
            }
        }
        s
    }
}

impl Scalar for MultiPoly {
    fn zero() -> Self {
        MultiPoly::default()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn from_rational(r: &Rational) -> Self {
        MultiPoly::constant(r.clone())
    }
    fn add_assign_ref(&mut self, other: &Self) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
    fn sub_assign_ref(&mut self, other: &Self) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), -c.clone());
        }
    }
    fn mul_ref(&self, other: &Self) -> Self {
        let mut out = MultiPoly::default();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
    fn neg_ref(&self) -> Self {
        MultiPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect() }
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fmt_with(|v| format!("x{v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    fn x(v: usize) -> MultiPoly {
        MultiPoly::var(v)
    }

    #[test]
    fn grlex_order() {
        let a = Monomial::from_pairs(vec![(0, 2)]);
        let b = Monomial::from_pairs(vec![(0, 1), (1, 1)]);
        let c = Monomial::from_pairs(vec![(1, 2)]);
        let d = Monomial::from_pairs(vec![(0, 1)]);
        assert!(a > b && b > c && c > d);
        assert!(Monomial::var(0) > Monomial::var(1));
    }

    #[test]
    fn ring_ops_cancel() {
        let p = x(0).mul_ref(&x(1));
        let mut q = x(1).mul_ref(&x(0));
        q.sub_assign_ref(&p);
        assert!(Scalar::is_zero(&q));
        let mut s = x(0);
        s.add_assign_ref(&x(1));
        let sq = s.mul_ref(&s);
        assert_eq!(sq.num_terms(), 3);
        assert_eq!(sq.coefficient(&Monomial::from_pairs(vec![(0, 1), (1, 1)])), int(2));
    }

    #[test]
    fn substitution_and_eval() {
        let mut p = x(0).mul_ref(&x(0)).mul_ref(&x(1));
        p.add_assign_ref(&MultiPoly::constant(rat(1, 2)));
        let q = p.substitute(|v| (v == 0).then(|| int(3)));
        assert_eq!(q.coefficient(&Monomial::var(1)), int(9));
        assert_eq!(p.eval(|v| if v == 0 { int(2) } else { rat(1, 4) }), rat(3, 2));
    }

    #[test]
    fn display_uses_names() {
        let mut p = x(0).mul_ref(&x(0));
        p.sub_assign_ref(&x(1).scale_int(2));
        assert_eq!(p.fmt_with(|v| ["a", "b"][v].to_string()), "a^2 - 2*b");
        assert_eq!(MultiPoly::default().to_string(), "0");
    }

    impl MultiPoly {
        fn scale_int(&self, n: i64) -> MultiPoly {
            self.mul_ref(&MultiPoly::constant(int(n)))
        }
    }
}
