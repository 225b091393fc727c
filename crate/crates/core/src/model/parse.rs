//! Text format for networks, evidence, and variable sets.
//!
//! A network file is a whitespace-separated token stream:
//!
//! ```text
//! BAYES
//! <n>
//! <cardinality of each of the n variables>
//! <n>                          (one function per variable)
//! <scope size> <parents ascending> <child>     (n scope lines)
//! <table size> <entries...>                    (n table blocks)
//! ```
//!
//! Table entries are laid out with the scope-line order as the dimension
//! order, so the child (listed last) varies fastest. Evidence files hold a
//! count followed by variable/state pairs; variable-set files hold a count
//! followed by variable ids.

use super::{family_potential, family_table, BayesianNetwork, Evidence, ModelError, VarId, Variable};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Network(#[from] ModelError),
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let mut items = Vec::new();
        for (i, line) in text.lines().enumerate() {
            for tok in line.split_whitespace() {
                items.push((i + 1, tok));
            }
        }
        Tokens { items, pos: 0 }
    }

    fn last_line(&self) -> usize {
        self.items.last().map_or(1, |&(l, _)| l)
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str), ParseError> {
        match self.items.get(self.pos) {
            Some(&(line, tok)) => {
                self.pos += 1;
                Ok((line, tok))
            }
            None => Err(ParseError::Syntax {
                line: self.last_line(),
                message: format!("unexpected end of input, expected {what}"),
            }),
        }
    }

    fn usize(&mut self, what: &str) -> Result<(usize, usize), ParseError> {
        let (line, tok) = self.next(what)?;
        let v = tok.parse::<usize>().map_err(|_| ParseError::Syntax {
            line,
            message: format!("expected {what}, found {tok:?}"),
        })?;
        Ok((line, v))
    }

    fn f64(&mut self, what: &str) -> Result<(usize, f64), ParseError> {
        let (line, tok) = self.next(what)?;
        let v = tok.parse::<f64>().map_err(|_| ParseError::Syntax {
            line,
            message: format!("expected {what}, found {tok:?}"),
        })?;
        Ok((line, v))
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.items.get(self.pos) {
            Some(&(line, tok)) => Err(ParseError::Syntax {
                line,
                message: format!("trailing content starting at {tok:?}"),
            }),
            None => Ok(()),
        }
    }
}

pub fn parse_network(text: &str) -> Result<BayesianNetwork, ParseError> {
    let mut t = Tokens::new(text);
    let (line, tag) = t.next("the BAYES header")?;
    if tag != "BAYES" {
        return Err(ParseError::Syntax {
            line,
            message: format!("expected the BAYES header, found {tag:?}"),
        });
    }
    let (_, n) = t.usize("the variable count")?;
    let mut cards = Vec::with_capacity(n);
    for i in 0..n {
        let (line, c) = t.usize("a cardinality")?;
        if c == 0 {
            return Err(ParseError::Invalid { line, source: ModelError::ZeroCardinality { var: i } });
        }
        cards.push(c);
    }
    let (line, nfunc) = t.usize("the function count")?;
    if nfunc != n {
        return Err(ParseError::Syntax {
            line,
            message: format!("expected one function per variable ({n}), found {nfunc}"),
        });
    }

    // scope lines: parents ascending, child last; children form a permutation
    let mut scopes: Vec<(VarId, Vec<VarId>)> = Vec::with_capacity(n);
    let mut seen_children = BTreeSet::new();
    for _ in 0..n {
        let (line, size) = t.usize("a scope size")?;
        if size == 0 {
            return Err(ParseError::Syntax { line, message: "a scope must not be empty".into() });
        }
        let mut ids = Vec::with_capacity(size);
        for _ in 0..size {
            let (line, id) = t.usize("a variable id")?;
            if id >= n {
                return Err(ParseError::Invalid {
                    line,
                    source: ModelError::UnknownVariable { var: id, count: n },
                });
            }
            ids.push(id);
        }
        let child = *ids.last().expect("size >= 1");
        let parents = ids[..ids.len() - 1].to_vec();
        if !parents.windows(2).all(|w| w[0] < w[1]) {
            return Err(ParseError::Syntax {
                line,
                message: "parents must be listed in increasing order".into(),
            });
        }
        if parents.contains(&child) {
            return Err(ParseError::Invalid { line, source: ModelError::BadCptScope { var: child } });
        }
        if !seen_children.insert(child) {
            return Err(ParseError::Syntax {
                line,
                message: format!("variable {child} is the child of more than one function"),
            });
        }
        scopes.push((child, parents));
    }

    // table blocks, in function order
    let mut cpts: Vec<Option<crate::model::Potential>> = vec![None; n];
    let mut parents_of: Vec<Vec<VarId>> = vec![Vec::new(); n];
    for (child, parents) in scopes {
        let expected: usize = parents.iter().chain([&child]).map(|&v| cards[v]).product();
        let (line, size) = t.usize("a table size")?;
        if size != expected {
            return Err(ParseError::Syntax {
                line,
                message: format!(
                    "table for variable {child} must have {expected} entries, found {size}"
                ),
            });
        }
        let mut table = Vec::with_capacity(size);
        let mut first_line = line;
        for i in 0..size {
            let (line, x) = t.f64("a table entry")?;
            if i == 0 {
                first_line = line;
            }
            table.push(x);
        }
        let cpt = family_potential(child, &parents, |v| cards[v], table)
            .map_err(|source| ParseError::Invalid { line: first_line, source })?;
        cpts[child] = Some(cpt);
        parents_of[child] = parents;
    }
    t.finish()?;

    let variables = (0..n)
        .map(|i| Variable { id: i, name: format!("V{i}"), cardinality: cards[i] })
        .collect();
    let cpts = cpts.into_iter().map(|c| c.expect("children form a permutation")).collect();
    Ok(BayesianNetwork::new(variables, parents_of, cpts)?)
}

pub fn emit_network(net: &BayesianNetwork) -> String {
    let mut out = String::from("BAYES\n");
    let n = net.num_variables();
    let _ = writeln!(out, "{n}");
    let cards: Vec<String> = (0..n).map(|v| net.cardinality(v).to_string()).collect();
    let _ = writeln!(out, "{}", cards.join(" "));
    let _ = writeln!(out, "{n}");
    for v in 0..n {
        let mut ids: Vec<String> = net.parents_of(v).iter().map(|p| p.to_string()).collect();
        ids.push(v.to_string());
        let _ = writeln!(out, "{} {}", ids.len(), ids.join(" "));
    }
    for v in 0..n {
        let table = family_table(v, net.parents_of(v), net.cpt(v));
        let entries: Vec<String> = table.iter().map(|x| format!("{x}")).collect();
        let _ = writeln!(out, "{}\n{}", table.len(), entries.join(" "));
    }
    out
}

pub fn parse_evidence(text: &str) -> Result<Evidence, ParseError> {
    let mut t = Tokens::new(text);
    let (_, count) = t.usize("the evidence count")?;
    let mut e = Evidence::new();
    for _ in 0..count {
        let (line, var) = t.usize("a variable id")?;
        let (_, state) = t.usize("a state")?;
        e.assign(var, state).map_err(|source| ParseError::Invalid { line, source })?;
    }
    t.finish()?;
    Ok(e)
}

pub fn emit_evidence(e: &Evidence) -> String {
    let mut out = format!("{}", e.len());
    for (v, s) in e.iter() {
        let _ = write!(out, " {v} {s}");
    }
    out.push('\n');
    out
}

pub fn parse_var_set(text: &str) -> Result<BTreeSet<VarId>, ParseError> {
    let mut t = Tokens::new(text);
    let (_, count) = t.usize("the variable count")?;
    let mut set = BTreeSet::new();
    for _ in 0..count {
        let (line, var) = t.usize("a variable id")?;
        if !set.insert(var) {
            return Err(ParseError::Syntax {
                line,
                message: format!("variable {var} is listed twice"),
            });
        }
    }
    t.finish()?;
    Ok(set)
}

pub fn emit_var_set(set: &BTreeSet<VarId>) -> String {
    let mut out = format!("{}", set.len());
    for v in set {
        let _ = write!(out, " {v}");
    }
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_NODE: &str = "BAYES\n2\n2 2\n2\n1 0\n2 0 1\n2\n 0.7 0.3\n4\n 0.7 0.3 0.2 0.8\n";

    #[test]
    fn parses_a_two_node_network() {
        let net = parse_network(TWO_NODE).unwrap();
        assert_eq!(net.num_variables(), 2);
        assert_eq!(net.parents_of(1), &[0]);
        assert_eq!(net.cpt(0).table(), &[0.7, 0.3]);
        assert_eq!(net.cpt(1).table(), &[0.7, 0.3, 0.2, 0.8]);
        assert_eq!(net.variable(0).name, "V0");
    }

    #[test]
    fn emit_round_trips() {
        let net = parse_network(TWO_NODE).unwrap();
        let text = emit_network(&net);
        let again = parse_network(&text).unwrap();
        assert_eq!(emit_network(&again), text);
        for v in 0..2 {
            assert_eq!(again.cpt(v).table(), net.cpt(v).table());
        }
    }

    #[test]
    fn functions_may_come_with_child_below_parent() {
        // variable 0 has parent 1, so the file table is (parent, child) order
        // while the canonical scope is sorted
        let text = "BAYES\n2\n2 2\n2\n2 1 0\n1 1\n4\n0.9 0.1 0.4 0.6\n2\n0.5 0.5\n";
        let net = parse_network(text).unwrap();
        assert_eq!(net.parents_of(0), &[1]);
        assert_eq!(net.cpt(0).table(), &[0.9, 0.4, 0.1, 0.6]);
        let text2 = emit_network(&net);
        let again = parse_network(&text2).unwrap();
        assert_eq!(again.cpt(0).table(), net.cpt(0).table());
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_network("MARKOV\n1\n2\n1\n1 0\n2\n0.5 0.5\n").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 1, .. }), "{err}");

        let err = parse_network("BAYES\n2\n2 0\n").unwrap_err();
        assert!(
            matches!(err, ParseError::Invalid { line: 3, source: ModelError::ZeroCardinality { var: 1 } }),
            "{err}"
        );

        let err = parse_network("BAYES\n1\n2\n1\n1 0\n3\n0.5 0.5 0.0\n").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 6, .. }), "{err}");

        // truncated table
        let err = parse_network("BAYES\n1\n2\n1\n1 0\n2\n0.5\n").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 7, .. }), "{err}");

        // trailing junk
        let err = parse_network(&format!("{TWO_NODE}whoops\n")).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { message, .. } if message.contains("trailing")));

        // cycle: 0 <- 1 and 1 <- 0
        let text = "BAYES\n2\n2 2\n2\n2 1 0\n2 0 1\n4\n1 0 0 1\n4\n1 0 0 1\n";
        let err = parse_network(text).unwrap_err();
        assert!(matches!(err, ParseError::Network(ModelError::Cycle)), "{err}");

        // bad normalization
        let text = "BAYES\n1\n2\n1\n1 0\n2\n0.6 0.6\n";
        let err = parse_network(text).unwrap_err();
        assert!(matches!(err, ParseError::Network(ModelError::CptNotNormalized { var: 0, .. })));

        // scope id out of range
        let text = "BAYES\n1\n2\n1\n1 5\n2\n0.5 0.5\n";
        let err = parse_network(text).unwrap_err();
        assert!(matches!(
            err,
            ParseError::Invalid { source: ModelError::UnknownVariable { var: 5, count: 1 }, .. }
        ));

        // duplicate child
        let text = "BAYES\n2\n2 2\n2\n1 0\n1 0\n2\n0.5 0.5\n2\n0.5 0.5\n";
        let err = parse_network(text).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { message, .. } if message.contains("child")));
    }

    #[test]
    fn evidence_and_var_set_files() {
        let e = parse_evidence("2 1 0 3 1\n").unwrap();
        assert_eq!(e.get(1), Some(0));
        assert_eq!(e.get(3), Some(1));
        assert_eq!(parse_evidence(&emit_evidence(&e)).unwrap(), e);
        assert_eq!(parse_evidence("0\n").unwrap(), Evidence::new());
        assert!(matches!(
            parse_evidence("2 1 0 1 1\n"),
            Err(ParseError::Invalid { source: ModelError::DuplicateAssignment { var: 1 }, .. })
        ));

        let s = parse_var_set("3 4 1 2\n").unwrap();
        assert_eq!(s, BTreeSet::from([1, 2, 4]));
        assert_eq!(parse_var_set(&emit_var_set(&s)).unwrap(), s);
        assert!(parse_var_set("2 1 1\n").is_err());
    }
}
