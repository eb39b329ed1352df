//! Minimal XML reader/writer covering what the `.adoc` grammar uses:
//! elements, double-quoted attributes, character data, CDATA sections,
//! comments and an optional declaration. No namespaces, DTDs or
//! processing instructions beyond the leading declaration.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XmlError {
    pub pos: Pos,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Element(Element),
    /// Decoded character data; `cdata` records whether it came from a CDATA
    /// section.
    Text { text: String, cdata: bool, pos: Pos },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub name: String,
    pub attrs: Vec<(String, String)>,
    pub children: Vec<Node>,
    pub pos: Pos,
}

impl Element {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }

    pub fn elements(&self) -> impl Iterator<Item = &Element> {
        self.children.iter().filter_map(|n| match n {
            Node::Element(e) => Some(e),
            Node::Text { .. } => None,
        })
    }

    /// Concatenated character data of all direct text children.
    pub fn text(&self) -> String {
        self.children
            .iter()
            .filter_map(|n| match n {
                Node::Text { text, .. } => Some(text.as_str()),
                Node::Element(_) => None,
            })
            .collect()
    }

    /// First non-whitespace text child, used to reject stray text.
    pub fn stray_text(&self) -> Option<Pos> {
        self.children.iter().find_map(|n| match n {
            Node::Text { text, cdata, pos } if *cdata || !text.trim().is_empty() => Some(*pos),
            _ => None,
        })
    }
}

struct Reader<'a> {
    src: &'a str,
    off: usize,
    line: usize,
    col: usize,
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | ':')
}

impl<'a> Reader<'a> {
    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, XmlError> {
        Err(XmlError { pos: self.pos(), message: msg.into() })
    }

    fn rest(&self) -> &'a str {
        &self.src[self.off..]
    }

    fn advance(&mut self, n: usize) {
        for c in self.src[self.off..self.off + n].chars() {
            if c == '\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
        }
        self.off += n;
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.rest().starts_with(s) {
            self.advance(s.len());
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), XmlError> {
        if self.eat(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn skip_ws(&mut self) {
        let n = self.rest().len() - self.rest().trim_start().len();
        self.advance(n);
    }

    fn until(&mut self, end: &str, what: &str) -> Result<&'a str, XmlError> {
        match self.rest().find(end) {
            Some(i) => {
                let s = &self.rest()[..i];
                self.advance(i + end.len());
                Ok(s)
            }
            None => self.err(format!("unterminated {what}")),
        }
    }

    fn name(&mut self) -> Result<String, XmlError> {
        let n: usize = self.rest().chars().take_while(|c| is_name_char(*c)).map(char::len_utf8).sum();
        if n == 0 {
            return self.err("expected a name");
        }
        let s = self.rest()[..n].to_string();
        self.advance(n);
        Ok(s)
    }

    fn skip_misc(&mut self) -> Result<(), XmlError> {
        loop {
            self.skip_ws();
            if self.eat("<!--") {
                self.until("-->", "comment")?;
            } else {
                return Ok(());
            }
        }
    }

    fn element(&mut self) -> Result<Element, XmlError> {
        let pos = self.pos();
        self.expect("<")?;
        let name = self.name()?;
        let mut attrs: Vec<(String, String)> = Vec::new();
        loop {
            let had_ws = !self.rest().is_empty() && self.rest().starts_with(char::is_whitespace);
            self.skip_ws();
            if self.eat("/>") {
                return Ok(Element { name, attrs, children: Vec::new(), pos });
            }
            if self.eat(">") {
                break;
            }
            if !had_ws {
                return self.err("expected whitespace before attribute");
            }
            let key = self.name()?;
            if attrs.iter().any(|(k, _)| *k == key) {
                return self.err(format!("duplicate attribute `{key}`"));
            }
            self.skip_ws();
            self.expect("=")?;
            self.skip_ws();
            self.expect("\"")?;
            let vpos = self.pos();
            let raw = self.until("\"", "attribute value")?;
            if raw.contains('<') {
                return Err(XmlError { pos: vpos, message: "`<` in attribute value".into() });
            }
            attrs.push((key, decode_entities(raw, vpos)?));
        }
        let mut children = Vec::new();
        loop {
            let tpos = self.pos();
            if self.eat("</") {
                let close = self.name()?;
                if close != name {
                    return self.err(format!("expected `</{name}>`, found `</{close}>`"));
                }
                self.skip_ws();
                self.expect(">")?;
                return Ok(Element { name, attrs, children, pos });
            }
            if self.eat("<![CDATA[") {
                let body = self.until("]]>", "CDATA section")?;
                children.push(Node::Text { text: body.to_string(), cdata: true, pos: tpos });
            } else if self.eat("<!--") {
                self.until("-->", "comment")?;
            } else if self.rest().starts_with('<') {
                children.push(Node::Element(self.element()?));
            } else if self.rest().is_empty() {
                return self.err(format!("unexpected end of input inside `<{name}>`"));
            } else {
                let i = self.rest().find('<').unwrap_or(self.rest().len());
                let raw = &self.rest()[..i];
                self.advance(i);
                if raw.contains("]]>") {
                    return Err(XmlError { pos: tpos, message: "`]]>` in character data".into() });
                }
                children.push(Node::Text { text: decode_entities(raw, tpos)?, cdata: false, pos: tpos });
            }
        }
    }
}

fn decode_entities(raw: &str, pos: Pos) -> Result<String, XmlError> {
    if !raw.contains('&') {
        return Ok(raw.to_string());
    }
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(i) = rest.find('&') {
        out.push_str(&rest[..i]);
        rest = &rest[i..];
        let end = rest
            .find(';')
            .ok_or_else(|| XmlError { pos, message: "unterminated entity".into() })?;
        let ent = &rest[1..end];
        let c = match ent {
            "amp" => '&',
            "lt" => '<',
            "gt" => '>',
            "quot" => '"',
            "apos" => '\'',
            _ => {
                let code = ent
                    .strip_prefix("#x")
                    .and_then(|h| u32::from_str_radix(h, 16).ok())
                    .or_else(|| ent.strip_prefix('#').and_then(|d| d.parse().ok()))
                    .and_then(char::from_u32);
                match code {
                    Some(c) => c,
                    None => return Err(XmlError { pos, message: format!("unknown entity `&{ent};`") }),
                }
            }
        };
        out.push(c);
        rest = &rest[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Parses a document with exactly one root element.
pub fn parse(src: &str) -> Result<Element, XmlError> {
    let mut r = Reader { src, off: 0, line: 1, col: 1 };
    if src.starts_with('\u{feff}') {
        r.advance('\u{feff}'.len_utf8());
    }
    r.skip_ws();
    if r.eat("<?xml") {
        r.until("?>", "declaration")?;
    }
    r.skip_misc()?;
    if r.rest().is_empty() {
        return r.err("missing root element");
    }
    let root = r.element()?;
    r.skip_misc()?;
    if !r.rest().is_empty() {
        return r.err("content after root element");
    }
    Ok(root)
}

pub fn escape_attr(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            c => out.push(c),
        }
    }
    out
}

/// Wraps `s` in one or more CDATA sections, splitting any `]]>`.
pub fn cdata(out: &mut String, s: &str) {
    let _ = write!(out, "<![CDATA[{}]]>", s.replace("]]>", "]]]]><![CDATA[>"));
}
