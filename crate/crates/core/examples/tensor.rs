//! Builds a small tensor from a policy file and asks it a few questions.
//!
//! `cargo run --example tensor`

use fbac::act::{AccessTensor, ApplyMode, Invocation, ObjectRef, PolicyFile};

const POLICY: &str = r"
SUBJECT alice
SUBJECT bob
FUNCTION grep_in_file 1
FUNCTION join 2
OBJECT fileA
OBJECT fileB
ENTRY alice grep_in_file fileA TRUE
ENTRY alice join fileA,fileB TRUE
ENTRY bob grep_in_file fileA TRUE_RE:pattern=terrorist;context=[0-5]\nSTDIN:.*
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut t = AccessTensor::new();
    PolicyFile::parse(POLICY)?.apply(&mut t, ApplyMode::Strict)?;

    let a = ObjectRef::new("fileA")?;
    let b = ObjectRef::new("fileB")?;
    let grep = |pattern: &str, context: u32| {
        Invocation::new().with_value("pattern", pattern).and_then(|i| i.with_value("context", context))
    };

    let cases = [
        ("alice", "grep_in_file", vec![a.clone()], grep("anything", 9)?),
        ("alice", "join", vec![a.clone(), b.clone()], Invocation::new()),
        ("alice", "join", vec![a.clone()], Invocation::new()),
        ("bob", "grep_in_file", vec![a.clone()], grep("terrorist", 5)?),
        ("bob", "grep_in_file", vec![a.clone()], grep("terrorist", 6)?),
        ("bob", "grep_in_file", vec![b.clone()], grep("terrorist", 1)?),
    ];
    for (s, f, o, inv) in &cases {
        let d = t.decide(s, f, o, inv)?;
        let objs: Vec<&str> = o.iter().map(|x| x.as_str()).collect();
        println!("{s:6} {f:13} ({:12}) {:28} -> {} ({:?})", objs.join(","), inv.canonical().replace('\n', "\\n"), d.outcome, d.reason);
    }

    println!("\nstored entries: {}", t.entry_count());
    print!("{}", t.to_policy_text());
    Ok(())
}
