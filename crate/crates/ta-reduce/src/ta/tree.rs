//! Finite ordered trees over a ranked alphabet, written `a(t1,...,tn)`.

use std::fmt;

use thiserror::Error;

/// A closed tree: every node carries a symbol name and as many children as
/// the symbol's rank. Leaves are written without parentheses.
///
/// Trees are independent of any particular automaton; symbol names are
/// resolved against an alphabet only when a tree is evaluated.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tree {
    pub symbol: String,
    pub children: Vec<Tree>,
}

impl Tree {
    pub fn leaf(symbol: &str) -> Tree {
        Tree {
            symbol: symbol.to_string(),
            children: Vec::new(),
        }
    }

    pub fn node(symbol: &str, children: Vec<Tree>) -> Tree {
        Tree {
            symbol: symbol.to_string(),
            children,
        }
    }

    /// Height of the tree; a single leaf has height 1.
    pub fn height(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(|c| c.height())
            .max()
            .unwrap_or(0)
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(|c| c.size()).sum::<usize>()
    }

    /// Parses the canonical text form, e.g. `a(e,c(d))`. Whitespace between
    /// tokens is accepted; the printed form never contains any.
    pub fn parse(text: &str) -> Result<Tree, TreeTextError> {
        let mut parser = TreeParser {
            bytes: text.as_bytes(),
            pos: 0,
        };
        let tree = parser.tree()?;
        parser.skip_ws();
        if parser.pos != parser.bytes.len() {
            return Err(TreeTextError {
                pos: parser.pos,
                message: "trailing input after tree".to_string(),
            });
        }
        Ok(tree)
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol)?;
        if !self.children.is_empty() {
            write!(f, "(")?;
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// Error raised when tree text cannot be parsed; `pos` is a byte offset.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("tree text error at offset {pos}: {message}")]
pub struct TreeTextError {
    pub pos: usize,
    pub message: String,
}

struct TreeParser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

fn is_name_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

impl<'a> TreeParser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn name(&mut self) -> Result<String, TreeTextError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && is_name_byte(self.bytes[self.pos]) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(TreeTextError {
                pos: start,
                message: "expected a symbol name".to_string(),
            });
        }
        Ok(String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned())
    }

    fn tree(&mut self) -> Result<Tree, TreeTextError> {
        let symbol = self.name()?;
        self.skip_ws();
        let mut children = Vec::new();
        if self.pos < self.bytes.len() && self.bytes[self.pos] == b'(' {
            self.pos += 1;
            loop {
                children.push(self.tree()?);
                self.skip_ws();
                match self.bytes.get(self.pos) {
                    Some(b',') => {
                        self.pos += 1;
                    }
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => {
                        return Err(TreeTextError {
                            pos: self.pos,
                            message: "expected ',' or ')'".to_string(),
                        })
                    }
                }
            }
        }
        Ok(Tree { symbol, children })
    }
}
