//! File formats: the native JSON instance format, the line-oriented MRF
//! text format, and UAI MARKOV import.

use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, NumberError, ParseError, Result};
use crate::instance::{AffineRow, MaxAffInstance};
use crate::mrf::PairwiseModel;
use crate::scalar::Scalar;

/// JSON number or decimal string → scalar. Integers convert exactly;
/// non-integer JSON numbers contribute their exact binary (dyadic) value;
/// strings parse as exact decimals.
pub fn scalar_from_json<T: Scalar>(v: &Value) -> Result<T, NumberError> {
    match v {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(T::from_int(i))
            } else if let Some(u) = n.as_u64() {
                i64::try_from(u)
                    .map(T::from_int)
                    .map_err(|_| NumberError::Syntax(n.to_string()))
            } else {
                T::from_f64_value(n.as_f64().ok_or_else(|| NumberError::Syntax(n.to_string()))?)
            }
        }
        Value::String(s) => T::parse_decimal(s),
        other => Err(NumberError::Syntax(other.to_string())),
    }
}

#[derive(Deserialize)]
struct RawMaxAff {
    m: usize,
    n: usize,
    rows: Vec<RawRow>,
    #[serde(default)]
    x0: Option<Vec<Value>>,
}

#[derive(Deserialize)]
struct RawRow {
    b: Value,
    #[serde(default)]
    terms: Vec<(usize, Value)>,
}

/// Parses the native JSON instance format; returns the instance and the
/// initial point (all zeros when absent).
pub fn parse_maxaff_str<T: Scalar>(text: &str) -> Result<(MaxAffInstance<T>, Vec<T>)> {
    let raw: RawMaxAff = serde_json::from_str(text).map_err(|e| {
        Error::Parse(ParseError::new(e.line(), e.column(), e.to_string()))
    })?;
    if raw.rows.len() != raw.m {
        return Err(Error::Parse(ParseError::new(
            0,
            0,
            format!("field m = {} but {} rows given", raw.m, raw.rows.len()),
        )));
    }
    let mut rows = Vec::with_capacity(raw.rows.len());
    for (i, row) in raw.rows.iter().enumerate() {
        let offset: T = scalar_from_json(&row.b)
            .map_err(|e| Error::Parse(ParseError::new(0, 0, format!("row {i}: b: {e}"))))?;
        let mut terms = Vec::with_capacity(row.terms.len());
        for (j, a) in &row.terms {
            let coeff: T = scalar_from_json(a).map_err(|e| {
                Error::Parse(ParseError::new(0, 0, format!("row {i}, column {j}: {e}")))
            })?;
            terms.push((*j, coeff));
        }
        rows.push(AffineRow::new(offset, terms));
    }
    let instance = MaxAffInstance::new(raw.n, rows)?;
    let x0 = match raw.x0 {
        None => vec![T::zero(); raw.n],
        Some(values) => {
            if values.len() != raw.n {
                return Err(Error::DimensionMismatch {
                    expected: raw.n,
                    got: values.len(),
                });
            }
            values
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    scalar_from_json(v).map_err(|e| {
                        Error::Parse(ParseError::new(0, 0, format!("x0[{j}]: {e}")))
                    })
                })
                .collect::<Result<Vec<T>>>()?
        }
    };
    Ok((instance, x0))
}

/// Serializes an instance (and optional initial point) with every numeric
/// value as a decimal string, so output bytes do not depend on the scalar
/// mode that produced them.
pub fn write_maxaff<T: Scalar>(instance: &MaxAffInstance<T>, x0: Option<&[T]>) -> String {
    let rows: Vec<Value> = instance
        .rows()
        .iter()
        .map(|row| {
            let terms: Vec<Value> = row
                .terms
                .iter()
                .map(|(j, a)| {
                    Value::Array(vec![
                        Value::from(*j),
                        Value::String(a.decimal_string()),
                    ])
                })
                .collect();
            serde_json::json!({
                "b": row.offset.decimal_string(),
                "terms": terms,
            })
        })
        .collect();
    let mut doc = serde_json::json!({
        "m": instance.num_rows(),
        "n": instance.num_cols(),
        "rows": rows,
    });
    if let Some(x0) = x0 {
        doc["x0"] = Value::Array(
            x0.iter()
                .map(|v| Value::String(v.decimal_string()))
                .collect(),
        );
    }
    let mut out = serde_json::to_string_pretty(&doc).expect("valid json");
    out.push('\n');
    out
}

/// Whitespace token with its 1-based position.
#[derive(Clone, Copy)]
struct Token<'a> {
    line: usize,
    column: usize,
    text: &'a str,
}

struct Cursor<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn next(&mut self, what: &str) -> Result<Token<'a>, ParseError> {
        match self.tokens.get(self.pos) {
            Some(tok) => {
                self.pos += 1;
                Ok(*tok)
            }
            None => {
                let (line, column) = self
                    .tokens
                    .last()
                    .map(|t| (t.line, t.column))
                    .unwrap_or((1, 1));
                Err(ParseError::new(
                    line,
                    column,
                    format!("unexpected end of file, expected {what}"),
                ))
            }
        }
    }
}

fn tokenize_line(line_no: usize, line: &str) -> Vec<Token<'_>> {
    let payload = match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    };
    payload
        .split_whitespace()
        .map(|tok| Token {
            line: line_no,
            column: tok.as_ptr() as usize - line.as_ptr() as usize + 1,
            text: tok,
        })
        .collect()
}

fn parse_usize(tok: &Token<'_>) -> Result<usize, ParseError> {
    tok.text.parse().map_err(|_| {
        ParseError::new(tok.line, tok.column, format!("expected integer, got {:?}", tok.text))
    })
}

fn parse_scalar<T: Scalar>(tok: &Token<'_>) -> Result<T, ParseError> {
    T::parse_decimal(tok.text).map_err(|e| ParseError::new(tok.line, tok.column, e.to_string()))
}

/// Parses the MRF text format:
///
/// ```text
/// MRF <nodes> <labels>
/// UNARY <node> <labels reals>
/// EDGE <i> <j> <labels² reals, row-major (x over i, y over j)>
/// ```
///
/// `#` starts a comment; ids are 0-based.
pub fn parse_mrf_str<T: Scalar>(text: &str) -> Result<PairwiseModel<T>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(idx, line)| (idx + 1, tokenize_line(idx + 1, line)))
        .filter(|(_, toks)| !toks.is_empty());

    let (header_line, header) = lines
        .next()
        .ok_or_else(|| ParseError::new(1, 1, "empty input, expected MRF header"))?;
    if header[0].text != "MRF" {
        return Err(ParseError::new(
            header_line,
            header[0].column,
            format!("expected MRF, got {:?}", header[0].text),
        )
        .into());
    }
    if header.len() != 3 {
        return Err(ParseError::new(
            header_line,
            header[0].column,
            "MRF header needs node and label counts",
        )
        .into());
    }
    let nodes = parse_usize(&header[1])?;
    let labels = parse_usize(&header[2])?;

    let mut unary: Vec<Option<Vec<T>>> = vec![None; nodes];
    let mut edges: Vec<((usize, usize), Vec<T>)> = Vec::new();
    for (line_no, toks) in lines {
        let keyword = &toks[0];
        match keyword.text {
            "UNARY" => {
                if toks.len() != 2 + labels {
                    return Err(ParseError::new(
                        line_no,
                        keyword.column,
                        format!("UNARY needs node id and {labels} weights"),
                    )
                    .into());
                }
                let node = parse_usize(&toks[1])?;
                if node >= nodes {
                    return Err(ParseError::new(
                        line_no,
                        toks[1].column,
                        format!("node {node} out of range"),
                    )
                    .into());
                }
                if unary[node].is_some() {
                    return Err(ParseError::new(
                        line_no,
                        toks[1].column,
                        format!("duplicate UNARY line for node {node}"),
                    )
                    .into());
                }
                let weights = toks[2..]
                    .iter()
                    .map(parse_scalar)
                    .collect::<Result<Vec<T>, _>>()?;
                unary[node] = Some(weights);
            }
            "EDGE" => {
                if toks.len() != 3 + labels * labels {
                    return Err(ParseError::new(
                        line_no,
                        keyword.column,
                        format!("EDGE needs two node ids and {} weights", labels * labels),
                    )
                    .into());
                }
                let i = parse_usize(&toks[1])?;
                let j = parse_usize(&toks[2])?;
                let table = toks[3..]
                    .iter()
                    .map(parse_scalar)
                    .collect::<Result<Vec<T>, _>>()?;
                edges.push(((i, j), table));
            }
            other => {
                return Err(ParseError::new(
                    line_no,
                    keyword.column,
                    format!("unknown directive {other:?}"),
                )
                .into());
            }
        }
    }
    let unary = unary
        .into_iter()
        .enumerate()
        .map(|(node, u)| {
            u.ok_or_else(|| ParseError::new(0, 0, format!("missing UNARY line for node {node}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    PairwiseModel::new(nodes, labels, unary, edges)
}

/// Writes the MRF text format with decimal-string weights.
pub fn write_mrf<T: Scalar>(model: &PairwiseModel<T>) -> String {
    let mut out = format!("MRF {} {}\n", model.num_nodes(), model.num_labels());
    for i in 0..model.num_nodes() {
        out.push_str(&format!("UNARY {i}"));
        for x in 0..model.num_labels() {
            out.push(' ');
            out.push_str(&model.unary_weight(i, x).decimal_string());
        }
        out.push('\n');
    }
    for (e, &(i, j)) in model.edges().iter().enumerate() {
        out.push_str(&format!("EDGE {i} {j}"));
        for v in model.edge_table(e) {
            out.push(' ');
            out.push_str(&v.decimal_string());
        }
        out.push('\n');
    }
    out
}

/// UAI MARKOV import restricted to pairwise models with one shared label
/// count. Table entries become weights directly, or their natural logs
/// with `log_domain` (float modes only; entries must be positive).
pub fn import_uai_str<T: Scalar>(text: &str, log_domain: bool) -> Result<PairwiseModel<T>> {
    let tokens: Vec<Token<'_>> = text
        .lines()
        .enumerate()
        .flat_map(|(idx, line)| tokenize_line(idx + 1, line))
        .collect();
    let mut cursor = Cursor { tokens, pos: 0 };

    let kind = cursor.next("network type")?;
    if !kind.text.eq_ignore_ascii_case("MARKOV") {
        return Err(ParseError::new(
            kind.line,
            kind.column,
            format!("expected MARKOV network, got {:?}", kind.text),
        )
        .into());
    }
    let nodes = parse_usize(&cursor.next("variable count")?)?;
    let mut cards = Vec::with_capacity(nodes);
    for _ in 0..nodes {
        cards.push(parse_usize(&cursor.next("variable cardinality")?)?);
    }
    let labels = *cards.first().ok_or_else(|| {
        ParseError::new(kind.line, kind.column, "UAI model has no variables")
    })?;
    if cards.iter().any(|&c| c != labels) {
        return Err(ParseError::new(
            kind.line,
            kind.column,
            "pairwise import requires a shared label count across variables",
        )
        .into());
    }
    let num_cliques = parse_usize(&cursor.next("clique count")?)?;
    let mut scopes: Vec<Vec<usize>> = Vec::with_capacity(num_cliques);
    for _ in 0..num_cliques {
        let size_tok = cursor.next("clique size")?;
        let size = parse_usize(&size_tok)?;
        if size == 0 || size > 2 {
            return Err(ParseError::new(
                size_tok.line,
                size_tok.column,
                format!("clique of arity {size}: only unary and pairwise cliques are supported"),
            )
            .into());
        }
        let mut scope = Vec::with_capacity(size);
        for _ in 0..size {
            let v_tok = cursor.next("scope variable")?;
            let v = parse_usize(&v_tok)?;
            if v >= nodes {
                return Err(ParseError::new(
                    v_tok.line,
                    v_tok.column,
                    format!("variable {v} out of range"),
                )
                .into());
            }
            scope.push(v);
        }
        if size == 2 && scope[0] == scope[1] {
            return Err(ParseError::new(
                size_tok.line,
                size_tok.column,
                "pairwise clique with repeated variable",
            )
            .into());
        }
        scopes.push(scope);
    }

    let mut unary = vec![vec![T::zero(); labels]; nodes];
    let mut edge_tables: std::collections::HashMap<(usize, usize), Vec<T>> =
        std::collections::HashMap::new();
    for scope in &scopes {
        let count_tok = cursor.next("table size")?;
        let count = parse_usize(&count_tok)?;
        let expected = labels.pow(scope.len() as u32);
        if count != expected {
            return Err(ParseError::new(
                count_tok.line,
                count_tok.column,
                format!("table size {count}, expected {expected}"),
            )
            .into());
        }
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let tok = cursor.next("table entry")?;
            let raw: T = parse_scalar(&tok)?;
            let value = if log_domain {
                raw.try_ln().ok_or_else(|| {
                    ParseError::new(
                        tok.line,
                        tok.column,
                        "log-domain import needs a positive entry and a float scalar mode",
                    )
                })?
            } else {
                raw
            };
            entries.push(value);
        }
        // Repeated scopes accumulate, matching the sum-of-functions objective.
        match scope.as_slice() {
            [v] => {
                for (x, e) in entries.into_iter().enumerate() {
                    unary[*v][x] = unary[*v][x].clone() + e;
                }
            }
            [a, b] => {
                // Entries are row-major in scope order (second var fastest);
                // normalize to canonical (min, max) orientation.
                let (key, flip) = if a < b { ((*a, *b), false) } else { ((*b, *a), true) };
                let table = edge_tables
                    .entry(key)
                    .or_insert_with(|| vec![T::zero(); labels * labels]);
                for x in 0..labels {
                    for y in 0..labels {
                        let idx = if flip { y * labels + x } else { x * labels + y };
                        table[idx] = table[idx].clone() + entries[x * labels + y].clone();
                    }
                }
            }
            _ => unreachable!("arity checked above"),
        }
    }
    let edges = edge_tables.into_iter().map(|(k, t)| (k, t)).collect();
    PairwiseModel::new(nodes, labels, unary, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn maxaff_json_round_trip() {
        let text = r#"{
            "m": 3,
            "n": 2,
            "rows": [
                {"b": 0, "terms": [[0, 1]]},
                {"b": "0.5", "terms": [[1, 1]]},
                {"b": -2, "terms": [[0, "-1"], [1, -1]]}
            ],
            "x0": ["1", 2]
        }"#;
        let (inst, x0) = parse_maxaff_str::<Rational>(text).unwrap();
        assert_eq!(inst.num_rows(), 3);
        assert_eq!(inst.num_cols(), 2);
        assert_eq!(x0, vec![Rational::from_int(1), Rational::from_int(2)]);
        assert_eq!(inst.row(1).offset, Rational::from_ratio(1, 2));

        let written = write_maxaff(&inst, Some(&x0));
        let (inst2, x02) = parse_maxaff_str::<Rational>(&written).unwrap();
        assert_eq!(x0, x02);
        assert_eq!(inst.rows(), inst2.rows());
        // Byte-stable rewrite.
        assert_eq!(written, write_maxaff(&inst2, Some(&x02)));
    }

    #[test]
    fn maxaff_json_rejects_bad_input() {
        assert!(parse_maxaff_str::<f64>("{").is_err());
        let wrong_m = r#"{"m": 2, "n": 1, "rows": [{"b": 0, "terms": [[0, 1]]}]}"#;
        assert!(parse_maxaff_str::<f64>(wrong_m).is_err());
        let dup = r#"{"m": 1, "n": 1, "rows": [{"b": 0, "terms": [[0, 1], [0, 2]]}]}"#;
        assert!(matches!(
            parse_maxaff_str::<f64>(dup),
            Err(Error::DuplicateCoefficient { .. })
        ));
        let zero = r#"{"m": 1, "n": 1, "rows": [{"b": 0, "terms": [[0, 0]]}]}"#;
        assert!(matches!(
            parse_maxaff_str::<f64>(zero),
            Err(Error::ZeroCoefficient { .. })
        ));
        let oob = r#"{"m": 1, "n": 1, "rows": [{"b": 0, "terms": [[4, 1]]}]}"#;
        assert!(matches!(
            parse_maxaff_str::<f64>(oob),
            Err(Error::ColumnOutOfRange { .. })
        ));
    }

    #[test]
    fn mrf_round_trip() {
        let text = "# toy model\nMRF 2 2\nUNARY 0 0 0\nUNARY 1 0 0\nEDGE 0 1 4 0 0 4\n";
        let model = parse_mrf_str::<Rational>(text).unwrap();
        assert_eq!(model.num_nodes(), 2);
        assert_eq!(model.pair_weight(0, 1, 0, 0), &Rational::from_int(4));
        let written = write_mrf(&model);
        let model2 = parse_mrf_str::<Rational>(&written).unwrap();
        assert_eq!(model, model2);
        assert_eq!(written, write_mrf(&model2));
    }

    #[test]
    fn mrf_errors_carry_positions() {
        let text = "MRF 2 2\nUNARY 0 0 0\nUNARY 5 0 0\nEDGE 0 1 1 2 3 4\n";
        match parse_mrf_str::<f64>(text) {
            Err(Error::Parse(p)) => {
                assert_eq!(p.line, 3);
                assert_eq!(p.column, 7);
            }
            other => panic!("expected positioned error, got {other:?}"),
        }
        let truncated = "MRF 2 2\nUNARY 0 0\n";
        match parse_mrf_str::<f64>(truncated) {
            Err(Error::Parse(p)) => assert_eq!(p.line, 2),
            other => panic!("expected positioned error, got {other:?}"),
        }
        let garbage = "MRF 2 2\nUNARY 0 0 zebra\nUNARY 1 0 0\n";
        match parse_mrf_str::<f64>(garbage) {
            Err(Error::Parse(p)) => {
                assert_eq!(p.line, 2);
                assert_eq!(p.column, 11);
            }
            other => panic!("expected positioned error, got {other:?}"),
        }
    }

    #[test]
    fn uai_pairwise_import() {
        let text = "MARKOV\n2\n2 2\n3\n1 0\n1 1\n2 0 1\n2\n1 2\n2\n3 4\n4\n4 0 0 4\n";
        let model = import_uai_str::<Rational>(text, false).unwrap();
        assert_eq!(model.num_nodes(), 2);
        assert_eq!(model.unary_weight(0, 1), &Rational::from_int(2));
        assert_eq!(model.unary_weight(1, 0), &Rational::from_int(3));
        assert_eq!(model.pair_weight(0, 1, 0, 0), &Rational::from_int(4));
        assert_eq!(model.pair_weight(0, 1, 0, 1), &Rational::from_int(0));
    }

    #[test]
    fn uai_rejects_higher_arity() {
        let text = "MARKOV\n3\n2 2 2\n1\n3 0 1 2\n8\n1 1 1 1 1 1 1 1\n";
        match import_uai_str::<f64>(text, false) {
            Err(Error::Parse(p)) => assert!(p.message.contains("arity 3")),
            other => panic!("expected arity error, got {other:?}"),
        }
    }

    #[test]
    fn uai_log_domain() {
        let text = "MARKOV\n1\n2\n1\n1 0\n2\n1 2.718281828459045\n";
        let model = import_uai_str::<f64>(text, true).unwrap();
        assert!(model.unary_weight(0, 0).abs() < 1e-12);
        assert!((model.unary_weight(0, 1) - 1.0).abs() < 1e-12);
        // Exact mode cannot take logs.
        assert!(import_uai_str::<Rational>(text, true).is_err());
        // Zero entries cannot be logged.
        let zero = "MARKOV\n1\n2\n1\n1 0\n2\n0 1\n";
        assert!(import_uai_str::<f64>(zero, true).is_err());
    }

    #[test]
    fn uai_flipped_scope_orientation() {
        // Scope (1,0): entry index x1·L + x0.
        let text = "MARKOV\n2\n2 2\n1\n2 1 0\n4\n10 20 30 40\n";
        let model = import_uai_str::<f64>(text, false).unwrap();
        // Entry 20 is (x1=0, x0=1) → θ_{01,10}.
        assert_eq!(*model.pair_weight(0, 1, 1, 0), 20.0);
        assert_eq!(*model.pair_weight(0, 1, 0, 1), 30.0);
    }
}
