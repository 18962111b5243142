use super::DslError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    /// Digits only; kept as text so symbols like `007` survive.
    Num(String),
    Str(String),
    /// `Q_<sym>`, lexed as one token so that quoted symbols work: `Q_"("`.
    Initial(String),
    Punct(&'static str),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Num(n) => format!("number `{n}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Initial(s) => format!("`Q_{s}`"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub pos: Pos,
}

// Longest first so that `:=` wins over `:` and `<=` over `<`.
const PUNCT: &[&str] = &[
    ":=", "<=", ">=", "==", "->", "{", "}", "(", ")", "[", "]", ",", ";", "<", ">", "=", "+", "-",
];

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub(crate) fn lex(src: &str) -> Result<Vec<Spanned>, DslError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    let err = |line, col, expected: &str| DslError::Syntax {
        line,
        col,
        expected: expected.to_string(),
    };

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let pos = Pos { line, col };
        if c == '"' {
            let (s, used) = lex_string(&chars[i..]).ok_or_else(|| err(line, col, "closing `\"`"))?;
            out.push(Spanned { tok: Tok::Str(s), pos });
            i += used;
            col += used;
            continue;
        }
        if is_ident_char(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = if word == "Q_" {
                if i < chars.len() && chars[i] == '"' {
                    let (s, used) =
                        lex_string(&chars[i..]).ok_or_else(|| err(line, col, "closing `\"`"))?;
                    i += used;
                    col += used;
                    Tok::Initial(s)
                } else {
                    return Err(err(pos.line, pos.col, "symbol after `Q_`"));
                }
            } else if let Some(sym) = word.strip_prefix("Q_") {
                Tok::Initial(sym.to_string())
            } else if word.chars().all(|c| c.is_ascii_digit()) {
                Tok::Num(word)
            } else {
                Tok::Ident(word)
            };
            out.push(Spanned { tok, pos });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match PUNCT.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                out.push(Spanned {
                    tok: Tok::Punct(p),
                    pos,
                });
                i += p.len();
                col += p.len();
            }
            None => return Err(err(line, col, "a token")),
        }
    }
    out.push(Spanned {
        tok: Tok::Eof,
        pos: Pos { line, col },
    });
    Ok(out)
}

/// Lexes a quoted string starting at `chars[0] == '"'`. Returns the content
/// and the number of chars consumed. Supports `\"` and `\\`.
fn lex_string(chars: &[char]) -> Option<(String, usize)> {
    let mut s = String::new();
    let mut i = 1;
    while i < chars.len() {
        match chars[i] {
            '"' => return Some((s, i + 1)),
            '\\' if i + 1 < chars.len() => {
                s.push(chars[i + 1]);
                i += 2;
            }
            '\n' => return None,
            c => {
                s.push(c);
                i += 1;
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        lex(src).unwrap().into_iter().map(|s| s.tok).collect()
    }

    #[test]
    fn initials_plain_and_quoted() {
        assert_eq!(
            toks(r#"Q_a Q_14 Q_"(" Q_"\"""#),
            vec![
                Tok::Initial("a".into()),
                Tok::Initial("14".into()),
                Tok::Initial("(".into()),
                Tok::Initial("\"".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn punctuation_is_greedy() {
        assert_eq!(
            toks("<= < := == ="),
            vec![
                Tok::Punct("<="),
                Tok::Punct("<"),
                Tok::Punct(":="),
                Tok::Punct("=="),
                Tok::Punct("="),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let s = lex("# hi\n  foo # bar\n7").unwrap();
        assert_eq!(s[0].tok, Tok::Ident("foo".into()));
        assert_eq!(s[0].pos, Pos { line: 2, col: 3 });
        assert_eq!(s[1].tok, Tok::Num("7".into()));
        assert_eq!(s[1].pos, Pos { line: 3, col: 1 });
    }

    #[test]
    fn bad_char_reports_location() {
        match lex("ab\n  @") {
            Err(DslError::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 3)),
            other => panic!("{other:?}"),
        }
    }
}
