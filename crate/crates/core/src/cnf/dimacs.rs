//! DIMACS CNF reading and writing.
//!
//! The reader accepts the common conveniences found in benchmark files:
//! clauses spanning several lines, blank lines, and a trailing `%`
//! end-of-file marker. Comment lines are preserved so that
//! `serialize_dimacs(parse_dimacs(s))` reproduces a canonically formatted
//! file with the same content.

use thiserror::Error;

use super::{Clause, CnfError, Formula, Lit, Var};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: expected 'p cnf <vars> <clauses>' header, found {found:?}")]
    MalformedHeader { line: usize, found: String },
    #[error("missing 'p cnf' header")]
    MissingHeader,
    #[error("line {line}: duplicate 'p' header")]
    DuplicateHeader { line: usize },
    #[error("line {line}: token {token:?} is not a literal")]
    BadToken { line: usize, token: String },
    #[error("line {line}: literal {lit} out of range for {num_vars} variables")]
    LiteralOutOfRange { line: usize, lit: i32, num_vars: Var },
    #[error("line {line}: empty clause")]
    EmptyClause { line: usize },
    #[error("last clause is not terminated by 0")]
    UnterminatedClause,
    #[error("header declares {declared} clauses but the file has {found}")]
    ClauseCountMismatch { declared: usize, found: usize },
    #[error("header declares zero variables")]
    NoVariables,
}

/// Parses DIMACS CNF text.
pub fn parse_dimacs(input: &str) -> Result<Formula, ParseError> {
    let mut header: Option<(Var, usize)> = None;
    let mut header_line = 0usize;
    let mut comments: Vec<String> = Vec::new();
    let mut clauses: Vec<Clause> = Vec::new();
    let mut current: Vec<Lit> = Vec::new();
    let mut current_started_line = 0usize;
    let mut eof = false;

    'lines: for (idx, raw_line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim_start();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('c') {
            // Keep the comment body; a single space after 'c' is treated as
            // the separator and removed.
            if rest.is_empty() || rest.starts_with(|ch: char| ch.is_whitespace()) {
                comments.push(rest.strip_prefix(' ').unwrap_or(rest).to_string());
                continue;
            }
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(ParseError::DuplicateHeader { line: line_no });
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parsed = match fields.as_slice() {
                ["p", "cnf", vars, num_clauses] => vars
                    .parse::<Var>()
                    .ok()
                    .zip(num_clauses.parse::<usize>().ok()),
                _ => None,
            };
            match parsed {
                Some((vars, num_clauses)) => {
                    header = Some((vars, num_clauses));
                    header_line = line_no;
                }
                None => {
                    return Err(ParseError::MalformedHeader {
                        line: line_no,
                        found: raw_line.trim().to_string(),
                    })
                }
            }
            continue;
        }

        let (num_vars, _) = header.ok_or(ParseError::MissingHeader)?;
        for token in line.split_whitespace() {
            if token == "%" {
                // SATLIB files end with "% 0"; stop reading here.
                eof = true;
                break 'lines;
            }
            let value: i32 = token.parse().map_err(|_| ParseError::BadToken {
                line: line_no,
                token: token.to_string(),
            })?;
            if value == 0 {
                if current.is_empty() {
                    return Err(ParseError::EmptyClause { line: line_no });
                }
                let clause = Clause::new(current.drain(..))
                    .expect("non-empty literal list");
                clauses.push(clause);
            } else {
                if value.unsigned_abs() > num_vars {
                    return Err(ParseError::LiteralOutOfRange {
                        line: line_no,
                        lit: value,
                        num_vars,
                    });
                }
                if current.is_empty() {
                    current_started_line = line_no;
                }
                current.push(Lit::from_dimacs(value).expect("non-zero"));
            }
        }
    }

    let (num_vars, declared) = header.ok_or(ParseError::MissingHeader)?;
    let _ = header_line;
    let _ = current_started_line;
    if !current.is_empty() && !eof {
        return Err(ParseError::UnterminatedClause);
    }
    if num_vars == 0 {
        return Err(ParseError::NoVariables);
    }
    if clauses.len() != declared {
        return Err(ParseError::ClauseCountMismatch {
            declared,
            found: clauses.len(),
        });
    }
    match Formula::new(num_vars, clauses) {
        Ok(f) => Ok(f.with_comments(comments)),
        Err(CnfError::NoVariables) => Err(ParseError::NoVariables),
        Err(e) => unreachable!("ranges already checked: {e}"),
    }
}

/// Writes a formula in canonical DIMACS form: comments first, then the
/// header, then one clause per line terminated by `0`.
pub fn serialize_dimacs(formula: &Formula) -> String {
    let mut out = String::new();
    for comment in formula.comments() {
        if comment.is_empty() {
            out.push_str("c\n");
        } else {
            out.push_str("c ");
            out.push_str(comment);
            out.push('\n');
        }
    }
    out.push_str(&format!(
        "p cnf {} {}\n",
        formula.num_vars(),
        formula.num_clauses()
    ));
    for clause in formula.clauses() {
        for lit in clause.literals() {
            out.push_str(&format!("{lit} "));
        }
        out.push_str("0\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_simple_file() {
        let f = parse_dimacs("c example\np cnf 3 2\n1 -2 0\n2 3 0\n").unwrap();
        assert_eq!(f.num_vars(), 3);
        assert_eq!(f.num_clauses(), 2);
        assert_eq!(f.comments(), ["example"]);
        assert_eq!(f.clauses()[0].literals()[1].to_dimacs(), -2);
    }

    #[test]
    fn clauses_may_span_lines() {
        let f = parse_dimacs("p cnf 4 2\n1 2\n3 0 -1\n-4 0\n").unwrap();
        assert_eq!(f.num_clauses(), 2);
        assert_eq!(f.clauses()[0].len(), 3);
        assert_eq!(f.clauses()[1].literals()[0].to_dimacs(), -1);
    }

    #[test]
    fn percent_marks_end_of_file() {
        let f = parse_dimacs("p cnf 2 1\n1 2 0\n%\n0\n\n").unwrap();
        assert_eq!(f.num_clauses(), 1);
    }

    #[test]
    fn header_errors() {
        assert_eq!(
            parse_dimacs("1 2 0\n"),
            Err(ParseError::MissingHeader)
        );
        assert_eq!(
            parse_dimacs("p cnf x 2\n"),
            Err(ParseError::MalformedHeader {
                line: 1,
                found: "p cnf x 2".into()
            })
        );
        assert_eq!(
            parse_dimacs("p cnf 2 1\np cnf 2 1\n1 0\n"),
            Err(ParseError::DuplicateHeader { line: 2 })
        );
    }

    #[test]
    fn reports_line_numbers_in_body_errors() {
        assert_eq!(
            parse_dimacs("p cnf 2 2\n1 0\n0\n"),
            Err(ParseError::EmptyClause { line: 3 })
        );
        assert_eq!(
            parse_dimacs("p cnf 2 1\n1 three 0\n"),
            Err(ParseError::BadToken {
                line: 2,
                token: "three".into()
            })
        );
        assert_eq!(
            parse_dimacs("p cnf 2 1\n\n1 5 0\n"),
            Err(ParseError::LiteralOutOfRange {
                line: 3,
                lit: 5,
                num_vars: 2
            })
        );
    }

    #[test]
    fn count_mismatch_and_unterminated() {
        assert_eq!(
            parse_dimacs("p cnf 2 2\n1 0\n"),
            Err(ParseError::ClauseCountMismatch {
                declared: 2,
                found: 1
            })
        );
        assert_eq!(
            parse_dimacs("p cnf 2 1\n1 2\n"),
            Err(ParseError::UnterminatedClause)
        );
    }

    #[test]
    fn roundtrip_is_stable() {
        let text = "c seed file\nc\np cnf 3 2\n1 -2 0\n2 3 0\n";
        let f = parse_dimacs(text).unwrap();
        let out = serialize_dimacs(&f);
        assert_eq!(out, text);
        let f2 = parse_dimacs(&out).unwrap();
        assert_eq!(f, f2);
    }
}
