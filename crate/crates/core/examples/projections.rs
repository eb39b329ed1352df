//! Prints the six projections of the tensor built from `examples/data`.
//!
//! `cargo run --example projections`

use fbac::monitor::{MonitorConfig, ProjectionQuery};
use fbac::projections::ProjectionKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data");
    let m = MonitorConfig::new(dir).load()?;

    let q = |subject: Option<&str>, function: Option<&str>, objects: Option<&str>| ProjectionQuery {
        subject: subject.map(Into::into),
        function: function.map(Into::into),
        objects: objects.map(Into::into),
        prefix: Some("memo".into()),
        uncompressed: false,
    };
    let views = [
        (ProjectionKind::Authz, q(None, None, Some("memo/p2"))),
        (ProjectionKind::Cap, q(Some("bob"), None, None)),
        (ProjectionKind::Acm, q(None, Some("search"), None)),
        (ProjectionKind::Flist, q(Some("alice"), None, Some("memo/fig1"))),
        (ProjectionKind::Slist, q(None, Some("read"), Some("memo/p1"))),
        (ProjectionKind::Olist, q(Some("carol"), Some("read"), None)),
    ];
    for (kind, query) in &views {
        println!("{}", m.projection(*kind, query)?.to_text());
    }

    // The same view as JSON, for tools.
    println!("{}", m.projection(ProjectionKind::Slist, &views[4].1)?.to_json());
    Ok(())
}
