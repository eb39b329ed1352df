//! Converts plain text into an atomic document, checks it, writes it out
//! and reads it back, then shows how removing a citation hides its quote.
//!
//! `cargo run --example adoc`

use fbac::act::{AccessTensor, SubjectId, TensorEntry};
use fbac::adoc::{self, validate_document, AtomicDocument};
use fbac::guarded::{copy, AtomRange, Catalog, CopyVariant};

const TEXT: &str = "\
The survey covered four regions.

Response rates were highest in the north.

Raw answers are kept on the archive server.
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alice = SubjectId::new("alice")?;
    let mut d = AtomicDocument::from_plain_text("survey", TEXT)?.with_forbidden(["email"]);
    for id in ["p1", "p2", "p3"] {
        d = d.grant(id, &alice, "read", TensorEntry::True)?;
    }
    d = d.grant("p2", &alice, "copy_with_citation", TensorEntry::True)?;
    println!("{} atoms, accepted: {}", d.atoms.len(), validate_document(&d).is_accepted());

    // Granting a forbidden function breaks the document-level rule.
    let bad = d.clone().grant("p3", &alice, "email", TensorEntry::True)?;
    let report = validate_document(&bad);
    println!("with email granted on p3: {report}");

    let text = adoc::serialize(&d)?;
    let back = adoc::parse(text.as_bytes(), &Catalog::standard())?;
    assert_eq!(back, d);
    println!("round trip: {} bytes, identical", text.len());

    let mut t = AccessTensor::new();
    Catalog::standard().install(&mut t)?;
    t.create_subject(alice.clone())?;
    d.install(&mut t)?;
    let (res, with_copy) = copy(&t, &alice, &d, &AtomRange::single("p2"), &d, &CopyVariant::WithCitation)?;
    let cite = res.citation.expect("citation copy");
    println!("\nquote {} cites {}", cite.quote_atom, cite.citation_atom);

    let removed = with_copy.remove_atom(&cite.citation_atom)?;
    println!("citation removed, quote available: {}", removed.is_available(&cite.quote_atom));
    let restored = removed.restore_atom(&cite.citation_atom)?;
    println!("citation restored, quote available: {}", restored.is_available(&cite.quote_atom));
    Ok(())
}
