use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{AlgebraError, Monomial};

/// Order used inside a block (or over the whole ring).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseOrder {
    Lex,
    DegRevLex,
}

impl BaseOrder {
    /// Compare two monomials restricted to `vars`, listed from largest to smallest.
    fn cmp_on(self, vars: &[usize], a: &Monomial, b: &Monomial) -> Ordering {
        match self {
            BaseOrder::Lex => {
                for &v in vars {
                    match a.exp(v).cmp(&b.exp(v)) {
                        Ordering::Equal => continue,
                        o => return o,
                    }
                }
                Ordering::Equal
            }
            BaseOrder::DegRevLex => {
                let da: u32 = vars.iter().map(|&v| a.exp(v)).sum();
                let db: u32 = vars.iter().map(|&v| b.exp(v)).sum();
                match da.cmp(&db) {
                    Ordering::Equal => {}
                    o => return o,
                }
                for &v in vars.iter().rev() {
                    match a.exp(v).cmp(&b.exp(v)) {
                        Ordering::Equal => continue,
                        o => return o.reverse(),
                    }
                }
                Ordering::Equal
            }
        }
    }
}

impl std::str::FromStr for BaseOrder {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lex" => Ok(BaseOrder::Lex),
            "degrevlex" | "grevlex" | "drl" => Ok(BaseOrder::DegRevLex),
            other => Err(AlgebraError::InvalidOrder(format!(
                "unknown order `{other}`"
            ))),
        }
    }
}

/// Monomial order on a ring.
///
/// `Lex` and `DegRevLex` use the ring's variable order (variable 0 largest).
/// `Block` compares first on the `high` variables and breaks ties on the `low`
/// ones; any monomial involving a `high` variable is larger than every
/// monomial in the `low` variables alone, which is what elimination needs.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum MonomialOrder {
    Lex,
    DegRevLex,
    Block {
        high: Vec<usize>,
        high_order: BaseOrder,
        low: Vec<usize>,
        low_order: BaseOrder,
    },
}

impl MonomialOrder {
    pub fn cmp(&self, a: &Monomial, b: &Monomial) -> Ordering {
        match self {
            MonomialOrder::Lex => a.cmp(b),
            MonomialOrder::DegRevLex => match a.degree().cmp(&b.degree()) {
                Ordering::Equal => {
                    let n = a.exponents().len().max(b.exponents().len());
                    for v in (0..n).rev() {
                        match a.exp(v).cmp(&b.exp(v)) {
                            Ordering::Equal => continue,
                            o => return o.reverse(),
                        }
                    }
                    Ordering::Equal
                }
                o => o,
            },
            MonomialOrder::Block {
                high,
                high_order,
                low,
                low_order,
            } => high_order
                .cmp_on(high, a, b)
                .then_with(|| low_order.cmp_on(low, a, b)),
        }
    }

    pub fn base(base: BaseOrder) -> Self {
        match base {
            BaseOrder::Lex => MonomialOrder::Lex,
            BaseOrder::DegRevLex => MonomialOrder::DegRevLex,
        }
    }

    /// Two-block order: `high` variables eliminated first, both blocks using `within`.
    /// Each block keeps the ring's relative variable order.
    pub fn elimination(nvars: usize, high: &[usize], within: BaseOrder) -> Self {
        let mut h: Vec<usize> = high.to_vec();
        h.sort_unstable();
        h.dedup();
        let low = (0..nvars).filter(|i| !h.contains(i)).collect();
        MonomialOrder::Block {
            high: h,
            high_order: within,
            low,
            low_order: within,
        }
    }

    /// Checks that a block order partitions `0..nvars`.
    pub fn validate(&self, nvars: usize) -> Result<(), AlgebraError> {
        if let MonomialOrder::Block { high, low, .. } = self {
            let mut seen = vec![false; nvars];
            for &v in high.iter().chain(low) {
                if v >= nvars || seen[v] {
                    return Err(AlgebraError::InvalidOrder(format!(
                        "block order does not partition the {nvars} ring variables"
                    )));
                }
                seen[v] = true;
            }
            if seen.iter().any(|s| !s) {
                return Err(AlgebraError::InvalidOrder(
                    "block order leaves variables unassigned".into(),
                ));
            }
        }
        Ok(())
    }

    /// Order used within the (low) block, for callers that only need a hint.
    pub fn within(&self) -> BaseOrder {
        match self {
            MonomialOrder::Lex => BaseOrder::Lex,
            MonomialOrder::DegRevLex => BaseOrder::DegRevLex,
            MonomialOrder::Block { low_order, .. } => *low_order,
        }
    }
}
