//! The `.adoc` container grammar.
//!
//! ```text
//! <?xml version="1.0" encoding="UTF-8"?>
//! <adoc id="report" version="1">
//!   <classification level="2" compartments="A,B"/>
//!   <forbidden functions="email,print"/>
//!   <atom id="p1" kind="text">
//!     <classification level="1" compartments="A"/>
//!     <policy><![CDATA[
//! ENTRY alice read @ TRUE
//! ]]></policy>
//!     <links>
//!       <link target="p2" relation="quote-of" cascade="unavailable-on-remove"/>
//!     </links>
//!     <content><![CDATA[Paragraph text.]]></content>
//!   </atom>
//! </adoc>
//! ```
//!
//! Root-level and atom-level `classification` are optional. A removed atom
//! carries `removed="true"`. Policy lines use the tensor policy grammar with
//! `@` standing for the enclosing atom.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::xml::{self, Element, Pos};
use super::{
    check_local_id, AdocError, Atom, AtomKind, AtomLink, AtomicDocument, Cascade, FunctionRegistry, PolicyEntry,
    FORMAT_VERSION,
};
use crate::act::{scoped_entries_text, ObjectRef, PolicyFile, Statement};
use crate::lattice::SecurityClass;

fn malformed(pos: Pos, message: impl Into<String>) -> AdocError {
    AdocError::MalformedDocument { line: pos.line, col: pos.col, message: message.into() }
}

fn utf8_error_pos(bytes: &[u8], valid_up_to: usize) -> Pos {
    let prefix = std::str::from_utf8(&bytes[..valid_up_to]).expect("valid prefix");
    let line = prefix.matches('\n').count() + 1;
    let col = prefix.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    Pos { line, col }
}

fn only_attrs(e: &Element, allowed: &[&str]) -> Result<(), AdocError> {
    match e.attrs.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        Some((k, _)) => Err(malformed(e.pos, format!("unexpected attribute `{k}` on <{}>", e.name))),
        None => Ok(()),
    }
}

fn required<'a>(e: &'a Element, name: &str) -> Result<&'a str, AdocError> {
    e.attr(name).ok_or_else(|| malformed(e.pos, format!("<{}> requires `{name}`", e.name)))
}

fn no_children(e: &Element) -> Result<(), AdocError> {
    if let Some(p) = e.stray_text() {
        return Err(malformed(p, format!("unexpected text in <{}>", e.name)));
    }
    if let Some(c) = e.elements().next() {
        return Err(malformed(c.pos, format!("unexpected <{}> in <{}>", c.name, e.name)));
    }
    Ok(())
}

fn only_text(e: &Element) -> Result<String, AdocError> {
    if let Some(c) = e.elements().next() {
        return Err(malformed(c.pos, format!("unexpected <{}> in <{}>", c.name, e.name)));
    }
    Ok(e.text())
}

fn compartments_attr(e: &Element) -> Result<BTreeSet<String>, AdocError> {
    let raw = e.attr("compartments").unwrap_or("");
    if raw.is_empty() {
        return Ok(BTreeSet::new());
    }
    raw.split(',')
        .map(|c| {
            check_local_id(c).map_err(|_| malformed(e.pos, format!("invalid compartment `{c}`")))?;
            Ok(c.to_string())
        })
        .collect()
}

fn classification(e: &Element) -> Result<SecurityClass, AdocError> {
    only_attrs(e, &["level", "compartments"])?;
    no_children(e)?;
    let level = required(e, "level")?;
    let level: u32 = level.parse().map_err(|_| malformed(e.pos, format!("invalid level `{level}`")))?;
    Ok(SecurityClass { level, compartments: compartments_attr(e)? })
}

fn set_once<T>(slot: &mut Option<T>, e: &Element, v: T) -> Result<(), AdocError> {
    if slot.is_some() {
        return Err(malformed(e.pos, format!("<{}> given twice", e.name)));
    }
    *slot = Some(v);
    Ok(())
}

fn known_function(reg: &impl FunctionRegistry, f: &str) -> Result<usize, AdocError> {
    reg.arity(f).ok_or_else(|| AdocError::UnknownFunctionName { function: f.to_string() })
}

fn policy(
    e: &Element,
    doc_id: &str,
    atom_id: &str,
    reg: &impl FunctionRegistry,
) -> Result<Vec<PolicyEntry>, AdocError> {
    only_attrs(e, &[])?;
    let text = only_text(e)?;
    let this = ObjectRef::atom(doc_id, atom_id)?;
    // Policy line k sits on document line `start + k - 1`.
    let start = e
        .children
        .first()
        .map_or(e.pos.line, |n| match n {
            xml::Node::Text { pos, .. } => pos.line,
            xml::Node::Element(c) => c.pos.line,
        });
    let parsed = PolicyFile::parse_scoped(&text, Some(&this)).map_err(|err| match err {
        crate::act::ActError::Parse { line, message } => {
            AdocError::MalformedDocument { line: start + line - 1, col: 1, message }
        }
        other => AdocError::Policy { atom: atom_id.to_string(), message: other.to_string() },
    })?;
    let mut out = Vec::new();
    for (line, stmt) in parsed.statements {
        let Statement::Entry { subject, function, objects, value } = stmt else {
            unreachable!("scoped policies hold entries only");
        };
        let arity = known_function(reg, &function)?;
        let at = Pos { line: start + line - 1, col: 1 };
        if arity != objects.len() {
            return Err(malformed(
                at,
                format!("function `{function}` has arity {arity} but the tuple has {} element(s)", objects.len()),
            ));
        }
        if !objects.iter().any(|o| *o == this) {
            return Err(malformed(at, "entry does not mention this atom (`@`)"));
        }
        out.push(PolicyEntry { subject, function, objects, value });
    }
    Ok(out)
}

fn link(e: &Element) -> Result<AtomLink, AdocError> {
    if e.name != "link" {
        return Err(malformed(e.pos, format!("unexpected <{}> in <links>", e.name)));
    }
    only_attrs(e, &["target", "relation", "cascade"])?;
    no_children(e)?;
    let cascade = match e.attr("cascade").unwrap_or("none") {
        "unavailable-on-remove" => Cascade::UnavailableOnRemove,
        "none" => Cascade::None,
        other => return Err(malformed(e.pos, format!("unknown cascade `{other}`"))),
    };
    AtomLink::new(required(e, "target")?, required(e, "relation")?, cascade)
        .map_err(|err| malformed(e.pos, err.to_string()))
}

fn atom(e: &Element, doc_id: &str, reg: &impl FunctionRegistry) -> Result<Atom, AdocError> {
    only_attrs(e, &["id", "kind", "removed"])?;
    if let Some(p) = e.stray_text() {
        return Err(malformed(p, "unexpected text in <atom>"));
    }
    let id = required(e, "id")?.to_string();
    check_local_id(&id).map_err(|_| malformed(e.pos, format!("invalid atom id `{id}`")))?;
    let kind = match required(e, "kind")? {
        "text" => AtomKind::Text,
        "image-ref" => AtomKind::ImageRef,
        other => return Err(malformed(e.pos, format!("unknown atom kind `{other}`"))),
    };
    let removed = match e.attr("removed").unwrap_or("false") {
        "true" => true,
        "false" => false,
        other => return Err(malformed(e.pos, format!("invalid `removed` value `{other}`"))),
    };
    let mut class = None;
    let mut pol = None;
    let mut links = None;
    let mut content = None;
    for c in e.elements() {
        match c.name.as_str() {
            "classification" => set_once(&mut class, c, classification(c)?)?,
            "policy" => set_once(&mut pol, c, policy(c, doc_id, &id, reg)?)?,
            "links" => {
                only_attrs(c, &[])?;
                if let Some(p) = c.stray_text() {
                    return Err(malformed(p, "unexpected text in <links>"));
                }
                let ls = c.elements().map(link).collect::<Result<Vec<_>, _>>()?;
                set_once(&mut links, c, ls)?
            }
            "content" => {
                only_attrs(c, &[])?;
                set_once(&mut content, c, only_text(c)?)?
            }
            other => return Err(malformed(c.pos, format!("unexpected <{other}> in <atom>"))),
        }
    }
    let content = content.ok_or_else(|| malformed(e.pos, format!("atom `{id}` has no <content>")))?;
    let a = Atom {
        id,
        kind,
        content,
        policy: pol.unwrap_or_default(),
        classification: class,
        links: links.unwrap_or_default(),
        removed,
    };
    a.check_local()?;
    Ok(a)
}

/// Parses a `.adoc` file. Function names in policies and in the forbidden
/// set must be known to `reg`. Consistency conditions are not checked here;
/// see [`validate_document`](super::validate_document).
pub fn parse(bytes: &[u8], reg: &impl FunctionRegistry) -> Result<AtomicDocument, AdocError> {
    let src = std::str::from_utf8(bytes)
        .map_err(|e| malformed(utf8_error_pos(bytes, e.valid_up_to()), "input is not valid UTF-8"))?;
    let root = xml::parse(src).map_err(|e| malformed(e.pos, e.message))?;
    if root.name != "adoc" {
        return Err(malformed(root.pos, format!("expected <adoc>, found <{}>", root.name)));
    }
    only_attrs(&root, &["id", "version"])?;
    let version = required(&root, "version")?;
    let version: u32 = version
        .parse()
        .map_err(|_| malformed(root.pos, format!("invalid version `{version}`")))?;
    if version != FORMAT_VERSION {
        return Err(AdocError::UnsupportedVersion(version));
    }
    let id = required(&root, "id")?.to_string();
    check_local_id(&id).map_err(|_| malformed(root.pos, format!("invalid document id `{id}`")))?;
    if let Some(p) = root.stray_text() {
        return Err(malformed(p, "unexpected text in <adoc>"));
    }
    let mut class = None;
    let mut forbidden = None;
    let mut atoms = Vec::new();
    let mut seen = BTreeSet::new();
    for c in root.elements() {
        match c.name.as_str() {
            "classification" => set_once(&mut class, c, classification(c)?)?,
            "forbidden" => {
                only_attrs(c, &["functions"])?;
                no_children(c)?;
                let raw = c.attr("functions").unwrap_or("");
                let mut fs = BTreeSet::new();
                for f in raw.split(',').filter(|f| !f.is_empty()) {
                    known_function(reg, f)?;
                    fs.insert(f.to_string());
                }
                set_once(&mut forbidden, c, fs)?
            }
            "atom" => {
                let a = atom(c, &id, reg)?;
                if !seen.insert(a.id.clone()) {
                    return Err(AdocError::DuplicateAtomId(a.id));
                }
                atoms.push(a);
            }
            other => return Err(malformed(c.pos, format!("unexpected <{other}> in <adoc>"))),
        }
    }
    let doc = AtomicDocument {
        id,
        format_version: version,
        atoms,
        forbidden_functions: forbidden.unwrap_or_default(),
        classification: class,
    };
    doc.check_structure()?;
    Ok(doc)
}

fn write_class(out: &mut String, indent: &str, c: &SecurityClass) {
    let comps: Vec<&str> = c.compartments.iter().map(String::as_str).collect();
    let _ = writeln!(
        out,
        "{indent}<classification level=\"{}\" compartments=\"{}\"/>",
        c.level,
        xml::escape_attr(&comps.join(","))
    );
}

/// Writes the canonical text of `d`. The output depends only on the
/// structural model, so `serialize(parse(serialize(d))) == serialize(d)`.
pub fn serialize(d: &AtomicDocument) -> Result<String, AdocError> {
    d.check_structure()?;
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(out, "<adoc id=\"{}\" version=\"{}\">", xml::escape_attr(&d.id), d.format_version);
    if let Some(c) = &d.classification {
        write_class(&mut out, "  ", c);
    }
    let fs: Vec<&str> = d.forbidden_functions.iter().map(String::as_str).collect();
    let _ = writeln!(out, "  <forbidden functions=\"{}\"/>", xml::escape_attr(&fs.join(",")));
    for a in &d.atoms {
        let removed = if a.removed { " removed=\"true\"" } else { "" };
        let _ = writeln!(out, "  <atom id=\"{}\" kind=\"{}\"{removed}>", xml::escape_attr(&a.id), a.kind.as_str());
        if let Some(c) = &a.classification {
            write_class(&mut out, "    ", c);
        }
        if a.policy.is_empty() {
            out.push_str("    <policy/>\n");
        } else {
            let this = ObjectRef::atom(&d.id, &a.id)?;
            let text = scoped_entries_text(
                a.policy.iter().map(|e| (&e.subject, e.function.as_str(), &e.objects, &e.value)),
                &this,
            );
            out.push_str("    <policy>");
            xml::cdata(&mut out, &format!("\n{text}"));
            out.push_str("</policy>\n");
        }
        if a.links.is_empty() {
            out.push_str("    <links/>\n");
        } else {
            out.push_str("    <links>\n");
            for l in &a.links {
                let _ = writeln!(
                    out,
                    "      <link target=\"{}\" relation=\"{}\" cascade=\"{}\"/>",
                    xml::escape_attr(&l.target),
                    xml::escape_attr(&l.relation),
                    l.cascade.as_str()
                );
            }
            out.push_str("    </links>\n");
        }
        out.push_str("    <content>");
        xml::cdata(&mut out, &a.content);
        out.push_str("</content>\n");
        out.push_str("  </atom>\n");
    }
    out.push_str("</adoc>\n");
    Ok(out)
}
