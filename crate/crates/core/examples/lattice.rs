//! Compiles a clearance lattice into tensor entries and checks that the
//! compiled tensor agrees with the flow rule.
//!
//! `cargo run --example lattice`

use fbac::act::{Invocation, ObjectTuple, SubjectId};
use fbac::lattice::ClassAssignment;
use fbac::monitor::MonitorConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data");
    let a = ClassAssignment::parse(&std::fs::read_to_string(format!("{dir}/clearance.lattice"))?)?;
    println!("{} classes in the lattice", a.lattice.classes().len());

    let base = MonitorConfig::new(dir).load()?.snapshot().tensor.clone();
    let t = a.compile_to_tensor(&base)?;

    for s in a.subject_class.keys() {
        for (f, o) in a.pair_class.keys() {
            let flow = a.flow_allowed(s.as_str(), f, o)?;
            let decided = t.decide(s.as_str(), f, o.as_slice(), &Invocation::new())?.is_allow();
            assert_eq!(flow, decided);
            println!("{:6} {f} {:10} {}", s.as_str(), o.to_string(), if flow { "flows" } else { "blocked" });
        }
    }

    let o = ObjectTuple::parse("memo/p2")?;
    let top = a.lattice.join(&a.subject_class[&SubjectId::new("bob")?], &a.pair_class[&("read".to_string(), o)])?;
    println!("\njoin of bob's clearance and memo/p2: {top}");
    Ok(())
}
