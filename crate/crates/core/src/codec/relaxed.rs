//! Lenient JSON reader for language-model replies.
//!
//! Planner replies routinely break strict JSON: prose or code fences around
//! the object, `#` annotation lines, missing commas between members, stray
//! punctuation after a string, strings left open at the end of a line, and
//! doubled braces. This reader accepts all of those and produces an ordinary
//! [`serde_json::Value`].

use serde_json::{Map, Number, Value};

/// Returns the first `{...}` object in `text` that can be read.
pub fn extract_object(text: &str) -> Option<Value> {
    let chars: Vec<char> = text.chars().collect();
    let mut start = 0;
    while let Some(offset) = chars[start..].iter().position(|&c| c == '{') {
        let at = start + offset;
        let mut reader = Reader { chars: &chars, pos: at };
        if let Ok(v @ Value::Object(_)) = reader.value() {
            return Some(v);
        }
        start = at + 1;
    }
    None
}

type ReadResult<T> = Result<T, ()>;

struct Reader<'a> {
    chars: &'a [char],
    pos: usize,
}

impl Reader<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn skip_line(&mut self) {
        while let Some(c) = self.peek() {
            if c == '\n' {
                break;
            }
            self.pos += 1;
        }
    }

    /// Skips whitespace and `#` / `//` line annotations.
    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += 1;
            } else if c == '#' || (c == '/' && self.peek_at(1) == Some('/')) {
                self.skip_line();
            } else if c == '`' {
                // Code fence markers that ended up inside the object.
                self.skip_line();
            } else {
                break;
            }
        }
    }

    fn value(&mut self) -> ReadResult<Value> {
        self.skip_ws();
        match self.peek().ok_or(())? {
            '{' => self.object(),
            '[' => self.array(),
            '"' => self.string().map(Value::String),
            c if c == '-' || c.is_ascii_digit() => self.number(),
            _ => self.bare(),
        }
    }

    fn object(&mut self) -> ReadResult<Value> {
        self.pos += 1;
        let mut map = Map::new();
        loop {
            self.skip_ws();
            match self.peek().ok_or(())? {
                '}' => {
                    self.pos += 1;
                    return Ok(Value::Object(map));
                }
                ',' => self.pos += 1,
                '{' => {
                    // `{ { ... } }`: fold the inner members into this object.
                    if let Value::Object(inner) = self.object()? {
                        map.extend(inner);
                    }
                }
                _ => {
                    let key = if self.peek() == Some('"') {
                        self.string()?
                    } else {
                        self.bare_key()?
                    };
                    self.skip_ws();
                    if self.peek() != Some(':') {
                        return Err(());
                    }
                    self.pos += 1;
                    let v = self.value()?;
                    map.insert(key, v);
                    self.skip_junk(&['}', ',', '"', '{']);
                }
            }
        }
    }

    fn array(&mut self) -> ReadResult<Value> {
        self.pos += 1;
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            match self.peek().ok_or(())? {
                ']' => {
                    self.pos += 1;
                    return Ok(Value::Array(items));
                }
                ',' => self.pos += 1,
                '}' => return Err(()),
                _ => {
                    items.push(self.value()?);
                    self.skip_junk(&[']', ',', '"', '{', '[']);
                }
            }
        }
    }

    /// Drops stray characters after a value until a structural character.
    fn skip_junk(&mut self, stops: &[char]) {
        loop {
            self.skip_ws();
            match self.peek() {
                Some(c) if !stops.contains(&c) && !c.is_ascii_digit() && c != '-' && c != ']' && c != '}' => {
                    self.pos += 1;
                }
                _ => break,
            }
        }
    }

    fn string(&mut self) -> ReadResult<String> {
        self.pos += 1;
        let mut out = String::new();
        while let Some(c) = self.peek() {
            self.pos += 1;
            match c {
                '"' => return Ok(out),
                '\\' => {
                    let esc = self.peek().ok_or(())?;
                    self.pos += 1;
                    match esc {
                        'n' => out.push('\n'),
                        't' => out.push('\t'),
                        'r' => out.push('\r'),
                        'b' => out.push('\u{8}'),
                        'f' => out.push('\u{c}'),
                        'u' => {
                            let hex: String = self.chars.get(self.pos..self.pos + 4).ok_or(())?.iter().collect();
                            let code = u32::from_str_radix(&hex, 16).map_err(|_| ())?;
                            self.pos += 4;
                            out.push(char::from_u32(code).unwrap_or('\u{fffd}'));
                        }
                        other => out.push(other),
                    }
                }
                '\n' if self.line_closes_string() => {
                    let trimmed = out.trim_end().len();
                    out.truncate(trimmed);
                    return Ok(out);
                }
                _ => out.push(c),
            }
        }
        Err(())
    }

    /// After a raw newline inside a string: does the next line look like the
    /// start of a new member or the end of the container?
    fn line_closes_string(&self) -> bool {
        let mut i = self.pos;
        while let Some(&c) = self.chars.get(i) {
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '}' || c == ']' {
                return true;
            }
            if c != '"' {
                return false;
            }
            // `"key":` on the next line.
            let mut j = i + 1;
            while let Some(&d) = self.chars.get(j) {
                if d == '"' {
                    let mut k = j + 1;
                    while self.chars.get(k).map_or(false, |c| *c == ' ' || *c == '\t') {
                        k += 1;
                    }
                    return self.chars.get(k) == Some(&':');
                }
                if d == '\n' {
                    return false;
                }
                j += 1;
            }
            return false;
        }
        true
    }

    fn number(&mut self) -> ReadResult<Value> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || matches!(c, '-' | '+' | '.' | 'e' | 'E') {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        if let Ok(i) = text.parse::<i64>() {
            return Ok(Value::Number(i.into()));
        }
        let f: f64 = text.parse().map_err(|_| ())?;
        Number::from_f64(f).map(Value::Number).ok_or(())
    }

    /// Unquoted scalar: literals, or a bare word such as `done` or
    /// `pick_up(lemon)` read up to the next delimiter.
    fn bare(&mut self) -> ReadResult<Value> {
        let start = self.pos;
        let mut depth = 0i32;
        while let Some(c) = self.peek() {
            match c {
                '(' | '[' if self.pos > start => depth += 1,
                ')' | ']' if depth > 0 => depth -= 1,
                ',' | '}' | ']' | '\n' if depth == 0 => break,
                _ => {}
            }
            self.pos += 1;
        }
        let word: String = self.chars[start..self.pos].iter().collect::<String>().trim().to_string();
        if word.is_empty() {
            return Err(());
        }
        Ok(match word.as_str() {
            "true" => Value::Bool(true),
            "false" => Value::Bool(false),
            "null" => Value::Null,
            _ => Value::String(word),
        })
    }

    fn bare_key(&mut self) -> ReadResult<String> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' || c == '-' {
                self.pos += 1;
            } else {
                break;
            }
        }
        if self.pos == start {
            return Err(());
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn strict_json_passes_through() {
        let v = extract_object(r#"{"a": [1, 2.5, "x"], "b": {"c": null, "d": true}}"#).unwrap();
        assert_eq!(v, json!({"a": [1, 2.5, "x"], "b": {"c": null, "d": true}}));
    }

    #[test]
    fn fences_and_prose() {
        let text = "Sure! Here is the plan:\n```json\n{\"next_action\": \"done\"}\n```\nanything else?";
        assert_eq!(extract_object(text).unwrap(), json!({"next_action": "done"}));
    }

    #[test]
    fn missing_commas_and_trailing_junk() {
        let text = "{\n\"a\": [\n\"1. x\",\n\"2. y\"\n\"3. z\".\n],\n\"b\": \"q\"\n\"c\": \"r\"\n}";
        assert_eq!(
            extract_object(text).unwrap(),
            json!({"a": ["1. x", "2. y", "3. z"], "b": "q", "c": "r"})
        );
    }

    #[test]
    fn string_left_open_at_line_end() {
        let text = "{\n\"step_by_step_reasoning\": \"I will pick up [lemon].\n\"next_action\": \"pick_up(lemon)\"\n}";
        assert_eq!(
            extract_object(text).unwrap(),
            json!({"step_by_step_reasoning": "I will pick up [lemon].", "next_action": "pick_up(lemon)"})
        );
    }

    #[test]
    fn raw_newline_inside_prose_is_kept() {
        let text = "{\"r\": \"line one\nline two\", \"n\": 1}";
        assert_eq!(extract_object(text).unwrap(), json!({"r": "line one\nline two", "n": 1}));
    }

    #[test]
    fn doubled_braces_and_annotations() {
        let text = "{\n  {\n  # note to self\n  \"a\": 1,\n  }\n}";
        assert_eq!(extract_object(text).unwrap(), json!({"a": 1}));
    }

    #[test]
    fn bare_words() {
        assert_eq!(
            extract_object("{next_action: pick_up(lemon), ok: true}").unwrap(),
            json!({"next_action": "pick_up(lemon)", "ok": true})
        );
    }

    #[test]
    fn nothing_to_find() {
        assert_eq!(extract_object("no braces here"), None);
        assert_eq!(extract_object("{ unterminated"), None);
    }
}
