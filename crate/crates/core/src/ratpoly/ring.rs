use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::{AlgebraError, MultiPoly};

#[derive(Debug)]
struct VariableTable {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

/// Polynomial ring `Q[x_0, ..., x_{n-1}]` with named variables.
///
/// Variable `0` is the largest variable for the lex and degrevlex orders.
/// Cloning is cheap; clones share the variable table.
#[derive(Clone)]
pub struct Ring(Arc<VariableTable>);

impl Ring {
    /// Panics on duplicate names.
    pub fn new<S: AsRef<str>>(names: impl IntoIterator<Item = S>) -> Self {
        let names: Vec<String> = names.into_iter().map(|s| s.as_ref().to_string()).collect();
        let mut index = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            let prev = index.insert(n.clone(), i);
            assert!(prev.is_none(), "duplicate variable name `{n}`");
        }
        Ring(Arc::new(VariableTable { names, index }))
    }

    pub fn len(&self) -> usize {
        self.0.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.0.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.0.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<usize, AlgebraError> {
        self.index_of(name)
            .ok_or_else(|| AlgebraError::UnknownVariable(name.to_string()))
    }

    /// The variable `name` as a polynomial. Panics if unknown.
    pub fn var(&self, name: &str) -> MultiPoly {
        let i = self
            .index_of(name)
            .unwrap_or_else(|| panic!("unknown variable `{name}`"));
        MultiPoly::var(self, i)
    }

    pub fn var_at(&self, i: usize) -> MultiPoly {
        MultiPoly::var(self, i)
    }

    pub fn zero(&self) -> MultiPoly {
        MultiPoly::zero(self)
    }

    pub fn one(&self) -> MultiPoly {
        MultiPoly::constant(self, super::rat(1, 1))
    }

    pub fn int(&self, c: i64) -> MultiPoly {
        MultiPoly::constant(self, super::rat(c, 1))
    }

    /// Parse a polynomial written in the text format (`3/2*x^2*y - z + 1`).
    pub fn parse(&self, text: &str) -> Result<MultiPoly, AlgebraError> {
        super::text::parse(self, text)
    }

    pub fn same_as(&self, other: &Ring) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.names == other.0.names
    }

    pub fn check_same(&self, other: &Ring) -> Result<(), AlgebraError> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(AlgebraError::RingMismatch {
                left: self.to_string(),
                right: other.to_string(),
            })
        }
    }
}

impl PartialEq for Ring {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl Eq for Ring {}

impl fmt::Debug for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ring{:?}", self.0.names)
    }
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q[{}]", self.0.names.join(","))
    }
}
