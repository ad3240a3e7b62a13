/// Exponent vector indexed by variable id, stored without trailing zeros so
/// that equal monomials have equal representations.
///
/// The derived `Ord` is the lexicographic order with variable 0 largest; it is
/// used only as a canonical storage key.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(i: usize) -> Self {
        Self::var_pow(i, 1)
    }

    pub fn var_pow(i: usize, e: u32) -> Self {
        let mut v = vec![0; i + 1];
        v[i] = e;
        Monomial::from_exponents(v)
    }

    pub fn from_exponents(mut exps: Vec<u32>) -> Self {
        while exps.last() == Some(&0) {
            exps.pop();
        }
        Monomial(exps)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    #[inline]
    pub fn exp(&self, i: usize) -> u32 {
        self.0.get(i).copied().unwrap_or(0)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Variables with a nonzero exponent, with that exponent.
    pub fn support(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, &e)| (i, e))
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (long, short) = if self.0.len() >= other.0.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut v = long.0.clone();
        for (a, b) in v.iter_mut().zip(&short.0) {
            *a += b;
        }
        Monomial(v)
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.len() <= other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `other / self` when `self` divides `other`.
    pub fn quotient_of(&self, other: &Monomial) -> Option<Monomial> {
        if !self.divides(other) {
            return None;
        }
        let mut v = other.0.clone();
        for (a, b) in v.iter_mut().zip(&self.0) {
            *a -= b;
        }
        Some(Monomial::from_exponents(v))
    }

    pub fn lcm(&self, other: &Monomial) -> Monomial {
        let n = self.0.len().max(other.0.len());
        Monomial((0..n).map(|i| self.exp(i).max(other.exp(i))).collect())
    }

    pub fn coprime(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| *a == 0 || *b == 0)
    }

    pub fn pow(&self, k: u32) -> Monomial {
        if k == 0 {
            return Monomial::one();
        }
        Monomial(self.0.iter().map(|e| e * k).collect())
    }

    /// Square root when every exponent is even.
    pub fn sqrt(&self) -> Option<Monomial> {
        if self.0.iter().all(|e| e % 2 == 0) {
            Some(Monomial(self.0.iter().map(|e| e / 2).collect()))
        } else {
            None
        }
    }

    /// Exponent vector with variables renumbered through `map` (old id -> new id).
    pub fn remap(&self, map: &[usize]) -> Monomial {
        let mut v = Vec::new();
        for (i, e) in self.support() {
            let j = map[i];
            if v.len() <= j {
                v.resize(j + 1, 0);
            }
            v[j] += e;
        }
        Monomial::from_exponents(v)
    }
}
