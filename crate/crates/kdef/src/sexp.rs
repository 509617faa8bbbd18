use std::fmt;
use std::sync::Arc;

use crate::error::{Error, ErrorKind};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SourceLocation {
    pub file: Arc<str>,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Atom {
    Symbol(String),
    /// `:superior` is stored without the colon.
    Keyword(String),
    /// Text between braces, verbatim.
    Element(String),
    Str(String),
    /// Kept as written so any scalar type can parse it.
    Int(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Atom(Atom),
    List(Vec<Sexp>),
}

/// A parsed form. Equality ignores source locations.
#[derive(Clone, Debug)]
pub struct Sexp {
    pub node: Node,
    pub loc: SourceLocation,
}

impl PartialEq for Sexp {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

impl Eq for Sexp {}

impl Sexp {
    pub fn as_list(&self) -> Option<&[Sexp]> {
        match &self.node {
            Node::List(items) => Some(items),
            Node::Atom(_) => None,
        }
    }

    pub fn as_atom(&self) -> Option<&Atom> {
        match &self.node {
            Node::Atom(a) => Some(a),
            Node::List(_) => None,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match &self.node {
            Node::Atom(Atom::Symbol(s)) => Some(s),
            _ => None,
        }
    }

    pub fn as_keyword(&self) -> Option<&str> {
        match &self.node {
            Node::Atom(Atom::Keyword(s)) => Some(s),
            _ => None,
        }
    }

    pub fn as_element(&self) -> Option<&str> {
        match &self.node {
            Node::Atom(Atom::Element(s)) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Symbol(s) | Atom::Int(s) => f.write_str(s),
            Atom::Keyword(k) => write!(f, ":{k}"),
            Atom::Element(e) => write!(f, "{{{e}}}"),
            Atom::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

impl fmt::Display for Sexp {
    /// `{}` prints on one line; `{:#}` breaks lists longer than a line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if f.alternate() {
            let mut out = String::new();
            pretty(self, 0, &mut out);
            return f.write_str(&out);
        }
        match &self.node {
            Node::Atom(a) => write!(f, "{a}"),
            Node::List(items) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

const WIDTH: usize = 72;

fn pretty(s: &Sexp, indent: usize, out: &mut String) {
    let flat = s.to_string();
    let items = match &s.node {
        Node::List(items) if indent + flat.len() > WIDTH && items.len() > 1 => items,
        _ => {
            out.push_str(&flat);
            return;
        }
    };
    out.push('(');
    pretty(&items[0], indent + 1, out);
    for item in &items[1..] {
        out.push('\n');
        out.push_str(&" ".repeat(indent + 2));
        pretty(item, indent + 2, out);
    }
    out.push(')');
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    file: Arc<str>,
    line: usize,
    column: usize,
}

impl Reader<'_> {
    fn loc(&self) -> SourceLocation {
        SourceLocation {
            file: Arc::clone(&self.file),
            line: self.line,
            column: self.column,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_blank(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == ';' {
                while self.chars.peek().is_some_and(|&c| c != '\n') {
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Option<Sexp>, Error> {
        self.skip_blank();
        let loc = self.loc();
        let Some(&c) = self.chars.peek() else { return Ok(None) };
        let node = match c {
            '(' => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_blank();
                    match self.chars.peek() {
                        None => return Err(Error::at(ErrorKind::UnbalancedParens, loc)),
                        Some(')') => {
                            self.bump();
                            break;
                        }
                        Some(_) => items.push(self.read()?.expect("input remains")),
                    }
                }
                Node::List(items)
            }
            ')' => return Err(Error::at(ErrorKind::UnbalancedParens, loc)),
            '}' => return Err(Error::at(ErrorKind::BadAtom("}".into()), loc)),
            '{' => {
                self.bump();
                let mut name = String::new();
                loop {
                    match self.bump() {
                        None => return Err(Error::at(ErrorKind::UnterminatedBrace, loc)),
                        Some('}') => break,
                        Some(c) => name.push(c),
                    }
                }
                Node::Atom(Atom::Element(name))
            }
            '"' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(Error::at(ErrorKind::UnterminatedString, loc)),
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some(c) => s.push(c),
                            None => return Err(Error::at(ErrorKind::UnterminatedString, loc)),
                        },
                        Some(c) => s.push(c),
                    }
                }
                Node::Atom(Atom::Str(s))
            }
            _ => {
                let mut tok = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || "(){}\";".contains(c) {
                        break;
                    }
                    tok.push(c);
                    self.bump();
                }
                Node::Atom(classify(&tok).ok_or_else(|| Error::at(ErrorKind::BadAtom(tok.clone()), loc.clone()))?)
            }
        };
        Ok(Some(Sexp { node, loc }))
    }
}

fn classify(tok: &str) -> Option<Atom> {
    let digits = tok.strip_prefix('-').unwrap_or(tok);
    if !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit()) {
        return Some(Atom::Int(tok.to_string()));
    }
    if tok.starts_with(|c: char| c.is_ascii_digit()) || tok.contains(['\'', '`', ',', '}']) {
        return None;
    }
    match tok.strip_prefix(':') {
        Some("") => None,
        Some(k) => Some(Atom::Keyword(k.to_string())),
        None => Some(Atom::Symbol(tok.to_string())),
    }
}

/// Parses every form in `text`, stopping at the first syntax error.
pub fn parse(text: &str, file: &str) -> Result<Vec<Sexp>, Error> {
    let mut reader = Reader {
        chars: text.chars().peekable(),
        file: Arc::from(file),
        line: 1,
        column: 1,
    };
    let mut forms = Vec::new();
    while let Some(form) = reader.read()? {
        forms.push(form);
    }
    Ok(forms)
}

/// Whether `text` ends inside an open list, brace or string, so a line
/// reader should ask for more before parsing.
pub fn needs_more_input(text: &str) -> bool {
    let mut depth = 0i64;
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        match c {
            ';' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            '(' => depth += 1,
            ')' => depth -= 1,
            '{' => {
                if !chars.by_ref().any(|c| c == '}') {
                    return true;
                }
            }
            '"' => loop {
                match chars.next() {
                    None => return true,
                    Some('"') => break,
                    Some('\\') => {
                        chars.next();
                    }
                    Some(_) => {}
                }
            },
            _ => {}
        }
    }
    depth > 0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(text: &str) -> Sexp {
        let mut forms = parse(text, "t").unwrap();
        assert_eq!(forms.len(), 1);
        forms.remove(0)
    }

    #[test]
    fn empty_input_has_no_forms() {
        assert!(parse("", "t").unwrap().is_empty());
        assert!(parse("  ; just a comment\n\n", "t").unwrap().is_empty());
    }

    #[test]
    fn braces_keep_spaces() {
        let f = one("(new-indv {my trip} {traveling event})");
        let items = f.as_list().unwrap();
        assert_eq!(items[1].as_element(), Some("my trip"));
        assert_eq!(items[2].as_element(), Some("traveling event"));
    }

    #[test]
    fn if_added_listing_has_four_parts() {
        let f = one(
            "(new-if-added-rule (a (b :superior {airplane}))\n                   ((b {travel vehicle} a))\n  (new-is-a a {flying event}))",
        );
        let items = f.as_list().unwrap();
        assert_eq!(items.len(), 4);
        assert_eq!(items[0].as_symbol(), Some("new-if-added-rule"));
        let binding = items[1].as_list().unwrap()[1].as_list().unwrap();
        assert_eq!(binding[1].as_keyword(), Some("superior"));
    }

    #[test]
    fn unbalanced_parens_report_line() {
        let err = parse("(new-is-a {a} {b}", "x.kdef").unwrap_err();
        assert_eq!(err.kind, ErrorKind::UnbalancedParens);
        assert_eq!(err.location.as_ref().unwrap().line, 1);
        let err = parse("\n  )", "x.kdef").unwrap_err();
        let loc = err.location.unwrap();
        assert_eq!((loc.line, loc.column), (2, 3));
    }

    #[test]
    fn unterminated_brace_and_bad_atom() {
        assert_eq!(parse("(a {b", "t").unwrap_err().kind, ErrorKind::UnterminatedBrace);
        assert!(matches!(parse("(a 12ab)", "t").unwrap_err().kind, ErrorKind::BadAtom(_)));
        assert!(matches!(parse("}", "t").unwrap_err().kind, ErrorKind::BadAtom(_)));
    }

    #[test]
    fn integers_and_strings() {
        let f = one(r#"(new-indv {x} {y} :value -42 "a \"q\"")"#);
        let items = f.as_list().unwrap();
        assert_eq!(items[4].as_atom(), Some(&Atom::Int("-42".into())));
        assert_eq!(items[5].as_atom(), Some(&Atom::Str("a \"q\"".into())));
    }

    #[test]
    fn printing_round_trips() {
        let text = r#"(new-if-needed-rule ((a :proper t) (b :proper t) c) ((a {start time} c) (b {end time} c)) ((scone-subtract b a) {duration} c)) (x "s\\t" -1)"#;
        let forms = parse(text, "t").unwrap();
        for f in &forms {
            assert_eq!(&one(&f.to_string()), f);
            assert_eq!(&one(&format!("{f:#}")), f);
        }
    }

    #[test]
    fn continuation_detection() {
        assert!(needs_more_input("(new-type {a}"));
        assert!(needs_more_input("(new-type {a"));
        assert!(!needs_more_input("(new-type {a} {thing})"));
        assert!(!needs_more_input("(a) ; (unclosed comment"));
        assert!(needs_more_input("(a \"(\""));
    }
}
