//! Text form of a recipe.
//!
//! ```text
//! # comment
//! <count> * (<r_perception>, <v_normal>, <v_max>, <w_cohesion>, <w_alignment>, <w_separation>, <p_random_steer>, <w_pacekeeping>)
//! ```
//!
//! One entry per line; `#` starts a comment; blank lines are ignored.

use super::{KineticParams, ParamRanges, RangeViolation, Recipe, RecipeEntry, RecipeError, MAX_ENTRY_COUNT};

/// Parse with the default legal ranges.
pub fn parse_recipe(text: &str) -> Result<Recipe, RecipeError> {
    parse_recipe_with(text, &ParamRanges::default())
}

pub fn parse_recipe_with(text: &str, ranges: &ParamRanges) -> Result<Recipe, RecipeError> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let body = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        if body.trim().is_empty() {
            continue;
        }
        entries.push(parse_line(body, line_no, ranges)?);
    }
    if entries.is_empty() {
        return Err(RecipeError::Empty);
    }
    Ok(Recipe::from_entries_unchecked(entries))
}

struct Cursor<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    line: usize,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str, line: usize) -> Self {
        // columns are 1-based character positions
        let chars = src.chars().enumerate().map(|(i, c)| (i + 1, c)).collect();
        Cursor { chars, pos: 0, line, _src: src }
    }

    fn column(&self) -> usize {
        self.chars.get(self.pos).map(|c| c.0).unwrap_or(self.chars.len() + 1)
    }

    fn skip_ws(&mut self) {
        while matches!(self.chars.get(self.pos), Some((_, c)) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn error(&self, message: impl Into<String>) -> RecipeError {
        RecipeError::Syntax { line: self.line, column: self.column(), message: message.into() }
    }

    fn expect(&mut self, want: char) -> Result<(), RecipeError> {
        self.skip_ws();
        match self.chars.get(self.pos) {
            Some((_, c)) if *c == want => {
                self.pos += 1;
                Ok(())
            }
            Some((_, c)) => Err(self.error(format!("expected '{want}', found '{c}'"))),
            None => Err(self.error(format!("expected '{want}', found end of line"))),
        }
    }

    fn token(&mut self, accept: impl Fn(char) -> bool) -> (usize, String) {
        self.skip_ws();
        let col = self.column();
        let mut s = String::new();
        while let Some((_, c)) = self.chars.get(self.pos) {
            if !accept(*c) {
                break;
            }
            s.push(*c);
            self.pos += 1;
        }
        (col, s)
    }
}

fn parse_line(body: &str, line: usize, ranges: &ParamRanges) -> Result<RecipeEntry, RecipeError> {
    let mut cur = Cursor::new(body, line);
    let (col, count_text) = cur.token(|c| c.is_ascii_digit() || c == '-' || c == '+');
    if count_text.is_empty() {
        return Err(RecipeError::Syntax { line, column: col, message: "expected particle count".into() });
    }
    let count: i64 = count_text.parse().map_err(|_| RecipeError::Syntax {
        line,
        column: col,
        message: format!("invalid count '{count_text}'"),
    })?;
    if count < 1 || count > MAX_ENTRY_COUNT as i64 {
        return Err(RecipeError::Range {
            line,
            violations: vec![RangeViolation {
                field: "count",
                value: count as f64,
                min: 1.0,
                max: MAX_ENTRY_COUNT as f64,
            }],
        });
    }
    cur.expect('*')?;
    cur.expect('(')?;
    let mut values = [0.0; 8];
    for (k, slot) in values.iter_mut().enumerate() {
        if k > 0 {
            cur.expect(',')?;
        }
        let (col, num) = cur.token(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'));
        if num.is_empty() {
            return Err(RecipeError::Syntax { line, column: col, message: "expected number".into() });
        }
        *slot = num.parse::<f64>().map_err(|_| RecipeError::Syntax {
            line,
            column: col,
            message: format!("invalid number '{num}'"),
        })?;
    }
    cur.expect(')')?;
    cur.skip_ws();
    if cur.pos < cur.chars.len() {
        return Err(cur.error("unexpected trailing input"));
    }
    let params = KineticParams::check(values, ranges).map_err(|violations| RecipeError::Range { line, violations })?;
    Ok(RecipeEntry { count: count as u32, params })
}

/// Canonical text: one entry per line, six significant digits, trailing newline.
pub fn serialize_recipe(r: &Recipe) -> String {
    let mut out = String::new();
    for e in r.entries() {
        let v = e.params.to_array();
        out.push_str(&format!(
            "{} * ({}, {}, {}, {}, {}, {}, {}, {})\n",
            e.count, v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_entry() {
        let r = parse_recipe("38 * (93.1, 4.3, 11.7, 0.42, 0.51, 18.9, 0.12, 0.83)").unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.entries()[0].count, 38);
        assert_eq!(r.entries()[0].params.to_array(), [93.1, 4.3, 11.7, 0.42, 0.51, 18.9, 0.12, 0.83]);
        assert_eq!(serialize_recipe(&r), "38 * (93.1, 4.3, 11.7, 0.42, 0.51, 18.9, 0.12, 0.83)\n");
    }

    #[test]
    fn empty_text_is_an_error() {
        assert_eq!(parse_recipe(""), Err(RecipeError::Empty));
        assert_eq!(parse_recipe("# only a comment\n\n   \n"), Err(RecipeError::Empty));
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# two types\n\n10 * (50, 2, 4, 0.5, 0.5, 10, 0.1, 0.5)   # first\n  5*(20,1,2,0.1,0.2,3,0,1)\n";
        let r = parse_recipe(text).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r.total_count(), 15);
    }

    #[test]
    fn input_order_does_not_matter() {
        let a = "10 * (50, 2, 4, 0.5, 0.5, 10, 0.1, 0.5)\n5 * (20, 1, 2, 0.1, 0.2, 3, 0, 1)\n";
        let b = "5 * (20, 1, 2, 0.1, 0.2, 3, 0, 1)\n10 * (50, 2, 4, 0.5, 0.5, 10, 0.1, 0.5)\n";
        assert_eq!(
            serialize_recipe(&parse_recipe(a).unwrap()),
            serialize_recipe(&parse_recipe(b).unwrap())
        );
    }

    #[test]
    fn syntax_errors_report_position() {
        match parse_recipe("10 * (50, 2, 4, 0.5 0.5, 10, 0.1, 0.5)") {
            Err(RecipeError::Syntax { line: 1, column: 21, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_recipe("\n10 (50, 2, 4, 0.5, 0.5, 10, 0.1, 0.5)") {
            Err(RecipeError::Syntax { line: 2, column: 4, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_recipe("10 * (50, 2, 4, 0.5, 0.5, 10, 0.1, 0.5) x") {
            Err(RecipeError::Syntax { line: 1, column: 41, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_recipe("10 * (50, 2, 4, 0.5, 0.5, 10, 0.1)") {
            Err(RecipeError::Syntax { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_recipe("10 * (50, 2, 4, abc, 0.5, 10, 0.1, 0.5)") {
            Err(RecipeError::Syntax { line: 1, column: 17, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn range_errors_list_fields() {
        let err = parse_recipe("10 * (500, 2, 4, 0.5, 2.5, 10, 0.1, 0.5)").unwrap_err();
        assert_eq!(err.fields(), vec!["r_perception", "w_alignment"]);
        let err = parse_recipe("10 * (50, 5, 4, 0.5, 0.5, 10, 0.1, 0.5)").unwrap_err();
        assert_eq!(err.fields(), vec!["v_normal"]);
        let err = parse_recipe("0 * (50, 2, 4, 0.5, 0.5, 10, 0.1, 0.5)").unwrap_err();
        assert_eq!(err.fields(), vec!["count"]);
        assert!(err.to_string().contains("count"));
    }
}
