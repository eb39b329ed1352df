//! Runs guarded functions directly against the tensor and documents in
//! `examples/data`, without the monitor.
//!
//! `cargo run --example guarded`

use fbac::act::{Invocation, SubjectId};
use fbac::guarded::{dispatch, stdin_excludes, Env, Request};
use fbac::monitor::MonitorConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data");
    let m = MonitorConfig::new(dir).load()?;
    let snap = m.snapshot();
    let env = Env { tensor: &snap.tensor, documents: &snap.documents, catalog: m.catalog(), settings: &snap.settings };

    let run = |who: &str, req: Request| -> Result<(), Box<dyn std::error::Error>> {
        let s = SubjectId::new(who)?;
        let label = format!("{who} {} {}", req.function, req.args.join(" "));
        let x = dispatch(&env, &s, &req)?;
        match x.output {
            Some(o) => println!("== {label}\n{}", o.to_text().trim_end()),
            None => println!("== {label}\n(denied)"),
        }
        Ok(())
    };

    run("carol", Request::new("read").arg("memo"))?;
    run("bob", Request::new("search").arg("memo").option("pattern", "March").option("context", "1"))?;
    run("bob", Request::new("search").arg("memo").option("pattern", "March").option("context", "2"))?;
    run("alice", Request::new("print").arg("memo"))?;
    run("alice", Request::new("email").arg("memo").option("to", "cfo@example.org"))?;
    run("alice", Request::new("copy_with_citation").arg("memo/p2").option("dest", "digest"))?;
    run("carol", Request::new("search_standard∘read").arg("memo/p1").option("pattern", "grew"))?;

    // A predicate that refuses any standard input containing a word.
    let p = stdin_excludes("acquisition")?;
    let programs = snap.tensor.programs();
    for input in ["quarterly numbers", "the acquisition closes"] {
        let inv = Invocation::new().with_value("pattern", "x")?.with_stdin(input);
        println!("stdin {input:?} passes the acquisition filter: {}", p.matches(programs, &inv)?);
    }
    Ok(())
}
