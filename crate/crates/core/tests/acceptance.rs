//! Acceptance run: one line per criterion, non-zero exit if any fails.
//!
//! `cargo test --test acceptance`

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use fbac::act::{AccessTensor, FunctionSig, Invocation, ObjectRef, ObjectTuple, Outcome, Predicate, TensorEntry};
use fbac::adoc::{self, validate_document, Atom, AtomicDocument};
use fbac::guarded::{context_at_most, dispatch, redacted_view, Catalog, Env, Output, Request, Settings};
use fbac::lattice::{ClassAssignment, ClassLattice, SecurityClass};
use fbac::monitor::{is_gap_free, AuditFilter, AuditOutcome, Identities, Monitor};
use fbac::projections::{self, Limits, TupleRestriction};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn arity_law() -> Verdict {
    let start = Instant::now();
    let mut r = rng(1);
    let mut t = AccessTensor::new();
    let subjects = ["s0", "s1", "s2"];
    let functions = [("f0", 0), ("f1", 1), ("f2", 2), ("f3", 1)];
    let objects: Vec<String> = (0..3).map(|i| format!("o{i}")).collect();
    for s in subjects {
        t.create_subject(sid(s)).unwrap();
    }
    for (f, a) in functions {
        t.create_function(FunctionSig::new(f, a).unwrap()).unwrap();
    }
    for o in &objects {
        t.create_object(oref(o)).unwrap();
    }
    for s in subjects {
        for (f, a) in functions {
            for o in all_tuples(&objects, a) {
                if r.gen_bool(0.5) {
                    t.enter_entry(&sid(s), f, tuple(&o), random_entry(&mut r)).unwrap();
                }
            }
        }
    }
    let mut checked = 0;
    for s in subjects {
        for (f, a) in functions {
            for len in 0..=3 {
                for o in all_tuples(&objects, len) {
                    let refs: Vec<ObjectRef> = o.iter().map(|x| oref(x)).collect();
                    let na = t.lookup(s, f, &refs).unwrap() == TensorEntry::NotApplicable;
                    ensure!(na == (len != a), "lookup({s},{f},{o:?}) N/A={na} with arity {a}");
                    let d = t.decide(s, f, &refs, &Invocation::new()).unwrap();
                    ensure!((d.outcome == Outcome::NotApplicable) == (len != a), "decide({s},{f},{o:?}) = {}", d.outcome);
                    checked += 1;
                }
            }
        }
    }
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(1), "took {took:?}");
    Ok(format!("{checked} coordinates, lengths 0..=3, {took:.2?}"))
}

fn str_cells<K: Ord + Clone>(m: &BTreeMap<K, TensorEntry>) -> BTreeMap<K, String> {
    m.iter().map(|(k, v)| (k.clone(), v.to_string())).collect()
}

fn projection_oracle() -> Verdict {
    let start = Instant::now();
    let mut r = rng(2);
    let lim = Limits::default();
    let mut cells = 0usize;
    for n in 0..200 {
        let (t, d) = random_tensor(&mut r, 5, 2);
        let max = d.max_arity();
        let tuples_upto: Vec<Vec<String>> = (0..=max).flat_map(|l| all_tuples(&d.objects, l)).collect();
        for compress in [true, false] {
            for o in &tuples_upto {
                let m = projections::authorization_matrix(&t, &tuple(o), compress).unwrap();
                let mut want = BTreeMap::new();
                for s in &d.subjects {
                    for (f, a) in &d.functions {
                        if !compress || *a == o.len() {
                            want.insert((sid(s), f.clone()), d.lookup(s, f, o).to_string());
                        }
                    }
                }
                ensure!(str_cells(&m.cells) == want, "tensor {n}: authz {o:?} compress={compress}");
                cells += want.len();
            }
            for s in &d.subjects {
                let m = projections::capability_matrix(&t, s, compress, lim).unwrap();
                let mut want = BTreeMap::new();
                for (f, a) in &d.functions {
                    for o in &tuples_upto {
                        if !compress || o.len() == *a {
                            want.insert((f.clone(), tuple(o)), d.lookup(s, f, o).to_string());
                        }
                    }
                }
                ensure!(str_cells(&m.cells) == want, "tensor {n}: cap {s} compress={compress}");
                cells += want.len();
            }
            for (f, a) in &d.functions {
                let m = projections::per_function_acm(&t, f, compress, lim).unwrap();
                let mut want = BTreeMap::new();
                for s in &d.subjects {
                    for o in &tuples_upto {
                        if if compress { o.len() == *a } else { true } {
                            want.insert((sid(s), tuple(o)), d.lookup(s, f, o).to_string());
                        }
                    }
                }
                ensure!(str_cells(&m.cells) == want, "tensor {n}: acm {f} compress={compress}");
                ensure!(!compress || m.cells.values().all(|e| *e != TensorEntry::NotApplicable), "N/A kept");
                cells += want.len();
            }
        }
        for s in &d.subjects {
            for o in &tuples_upto {
                let l = projections::function_list(&t, s, &tuple(o)).unwrap();
                let want: BTreeMap<String, String> = d
                    .functions
                    .iter()
                    .filter(|(_, a)| *a == o.len())
                    .map(|(f, _)| (f.clone(), d.lookup(s, f, o).to_string()))
                    .collect();
                ensure!(str_cells(&l.entries) == want, "tensor {n}: flist {s} {o:?}");
                cells += want.len();
            }
        }
        for (f, a) in &d.functions {
            let only: BTreeSet<_> = d.subjects.iter().filter(|_| r.gen_bool(0.5)).map(|s| sid(s)).collect();
            for o in all_tuples(&d.objects, *a) {
                for restriction in [None, Some(&only)] {
                    let l = projections::subject_list(&t, f, &tuple(&o), restriction).unwrap();
                    let want: BTreeMap<_, String> = d
                        .subjects
                        .iter()
                        .filter(|s| restriction.is_none_or(|set| set.contains(&sid(s))))
                        .map(|s| (sid(s), d.lookup(s, f, &o).to_string()))
                        .collect();
                    ensure!(str_cells(&l.entries) == want, "tensor {n}: slist {f} {o:?}");
                    cells += want.len();
                }
            }
            for s in &d.subjects {
                let l = projections::object_list(&t, s, f, None, lim).unwrap();
                let want: BTreeMap<ObjectTuple, String> =
                    all_tuples(&d.objects, *a).iter().map(|o| (tuple(o), d.lookup(s, f, o).to_string())).collect();
                ensure!(str_cells(&l.entries) == want, "tensor {n}: olist {s} {f}");
                let picked: BTreeSet<ObjectTuple> =
                    tuples_upto.iter().filter(|_| r.gen_bool(0.3)).map(|o| tuple(o)).collect();
                let l = projections::object_list(&t, s, f, Some(&TupleRestriction::Tuples(picked.clone())), lim).unwrap();
                let want: BTreeMap<ObjectTuple, String> = tuples_upto
                    .iter()
                    .filter(|o| o.len() == *a && picked.contains(&tuple(o)))
                    .map(|o| (tuple(o), d.lookup(s, f, o).to_string()))
                    .collect();
                ensure!(str_cells(&l.entries) == want, "tensor {n}: olist {s} {f} restricted");
                cells += want.len();
            }
        }
    }
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(30), "took {took:?}");
    Ok(format!("200 tensors, {cells} cells equal the dense oracle, {took:.2?}"))
}

const OPTION_PATTERNS: &[&str] =
    &["count=[0-5]", "count=[0-9]+", "quiet", "(?:quiet;)?count=5", "[a-z]+=[^;]*", ".*", "", "x=a\\\\x3bb"];
const STDIN_PATTERNS: &[&str] = &[".*", "[^\n]*", "(?:ab|\\\\x5c)*", ".*\\\\x00.*", "", ".*\\\\xff", "line1\nline2", "ü+"];
const STDIN_PIECES: &[&[u8]] = &[b"", b"ab", b"\\", b"\x00", &[0xff], b"line1\nline2", "ü".as_bytes(), b"\t", b";"];

fn random_invocation(r: &mut impl Rng) -> (Vec<(String, Option<String>)>, Vec<u8>) {
    let pool: Vec<(&str, Option<&str>)> = vec![
        ("count", Some("5")),
        ("count", Some("3")),
        ("count", Some("12")),
        ("quiet", None),
        ("x", Some("a;b")),
        ("y", Some("p\nq")),
        ("z", Some("")),
    ];
    let mut opts = Vec::new();
    for _ in 0..r.gen_range(0..3) {
        let (k, v) = pool.choose(r).unwrap();
        if !opts.iter().any(|(ok, _): &(String, Option<String>)| ok == k) {
            opts.push((k.to_string(), v.map(str::to_string)));
        }
    }
    let stdin: Vec<u8> = (0..r.gen_range(0..3)).flat_map(|_| STDIN_PIECES.choose(r).unwrap().to_vec()).collect();
    (opts, stdin)
}

/// A pattern written for this invocation, each part either exact or loose,
/// occasionally perturbed so that it should no longer match.
fn fitted_pattern(r: &mut impl Rng, opts: &[(String, Option<String>)], stdin: &[u8]) -> String {
    let mut parts: Vec<String> = opts
        .iter()
        .map(|(k, v)| match (v, r.gen_bool(0.5)) {
            (Some(_), true) => format!("{k}=[^;]*"),
            _ => regex_lite::escape(&canonical_oracle(&[(k.clone(), v.clone())], b"").replace("\nSTDIN:", "")),
        })
        .collect();
    let mut stdin_part = if r.gen_bool(0.5) { ".*".to_string() } else { regex_lite::escape(&encode(stdin, false)) };
    match r.gen_range(0..6) {
        0 if !parts.is_empty() => {
            parts.pop();
        }
        1 => stdin_part.push('x'),
        2 => parts.push("quiet".into()),
        _ => {}
    }
    format!("{}\nSTDIN:{stdin_part}", parts.join(";"))
}

fn re_fbac() -> Verdict {
    let mut r = rng(3);
    let mut t = AccessTensor::new();
    t.create_subject(sid("s")).unwrap();
    t.create_function(FunctionSig::new("f", 1).unwrap()).unwrap();
    t.create_object(oref("o")).unwrap();
    let o = [oref("o")];
    let (mut allows, mut denies) = (0, 0);
    for i in 0..500 {
        let (opts, stdin) = random_invocation(&mut r);
        let pattern = if r.gen_bool(0.5) {
            fitted_pattern(&mut r, &opts, &stdin)
        } else if r.gen_bool(0.8) {
            let opts: Vec<&str> = (0..r.gen_range(1..3)).map(|_| *OPTION_PATTERNS.choose(&mut r).unwrap()).collect();
            format!("{}\nSTDIN:{}", opts.join(";"), STDIN_PATTERNS.choose(&mut r).unwrap())
        } else {
            format!(".*{}.*", ["count", "STDIN:a", "\\\\x00", "quiet\n"].choose(&mut r).unwrap())
        };
        t.enter_entry(&sid("s"), "f", ObjectTuple::from(o.to_vec()), TensorEntry::TrueWith(Predicate::regex(&pattern).unwrap()))
            .unwrap();
        let mut inv = Invocation::new().with_stdin(stdin.clone());
        for (k, v) in &opts {
            inv = inv.with_option(k, v.as_deref()).unwrap();
        }
        let text = canonical_oracle(&opts, &stdin);
        let oracle = regex_lite::Regex::new(&format!("(?s)\\A(?:{pattern})\\z")).unwrap().is_match(&text);
        let decided = t.decide("s", "f", &o, &inv).unwrap().is_allow();
        ensure!(decided == oracle, "pair {i}: pattern {pattern:?} on {text:?}: decide={decided} oracle={oracle}");
        if oracle {
            allows += 1;
        } else {
            denies += 1;
        }
    }
    ensure!(allows >= 50 && denies >= 50, "degenerate sample: {allows} allow, {denies} deny");
    Ok(format!("500 pairs agree with regex-lite on an independently serialized string ({allows} allow, {denies} deny)"))
}

fn lattice_laws() -> Verdict {
    let lat = ClassLattice::new([(0, "L".to_string()), (1, "M".to_string()), (2, "H".to_string())], ["A".to_string(), "B".to_string()]);
    let classes = lat.classes();
    ensure!(classes.len() == 12, "{} classes", classes.len());
    let le = |a: &SecurityClass, b: &SecurityClass| a.level <= b.level && a.compartments.is_subset(&b.compartments);
    for a in &classes {
        ensure!(lat.leq(a, a).unwrap(), "reflexivity at {a}");
        for b in &classes {
            ensure!(lat.leq(a, b).unwrap() == le(a, b), "leq({a},{b})");
            if lat.leq(a, b).unwrap() && lat.leq(b, a).unwrap() {
                ensure!(a == b, "antisymmetry at {a},{b}");
            }
            let j = lat.join(a, b).unwrap();
            let m = lat.meet(a, b).unwrap();
            let uppers: Vec<&SecurityClass> = classes.iter().filter(|c| le(a, c) && le(b, c)).collect();
            let lowers: Vec<&SecurityClass> = classes.iter().filter(|c| le(c, a) && le(c, b)).collect();
            ensure!(uppers.contains(&&j) && uppers.iter().all(|u| le(&j, u)), "join({a},{b}) = {j}");
            ensure!(lowers.contains(&&m) && lowers.iter().all(|l| le(l, &m)), "meet({a},{b}) = {m}");
            ensure!(j == lat.join(b, a).unwrap() && m == lat.meet(b, a).unwrap(), "commutativity at {a},{b}");
            ensure!(lat.join(a, &lat.meet(a, b).unwrap()).unwrap() == *a, "absorption at {a},{b}");
            ensure!(lat.meet(a, &lat.join(a, b).unwrap()).unwrap() == *a, "absorption at {a},{b}");
            for c in &classes {
                if le(a, b) && le(b, c) {
                    ensure!(lat.leq(a, c).unwrap(), "transitivity at {a},{b},{c}");
                }
                ensure!(
                    lat.join(&lat.join(a, b).unwrap(), c).unwrap() == lat.join(a, &lat.join(b, c).unwrap()).unwrap(),
                    "associativity at {a},{b},{c}"
                );
            }
        }
    }

    let mut r = rng(4);
    let objects: Vec<String> = (0..3).map(|i| format!("o{i}")).collect();
    let mut base = AccessTensor::new();
    for s in ["s0", "s1", "s2"] {
        base.create_subject(sid(s)).unwrap();
    }
    for f in ["f0", "f1"] {
        base.create_function(FunctionSig::new(f, 1).unwrap()).unwrap();
    }
    for o in &objects {
        base.create_object(oref(o)).unwrap();
    }
    let mut coords = 0;
    for n in 0..100 {
        let mut a = ClassAssignment::new(lat.clone());
        for s in ["s0", "s1", "s2"] {
            a.assign_subject(sid(s), classes.choose(&mut r).unwrap().clone()).unwrap();
        }
        for f in ["f0", "f1"] {
            for o in &objects {
                if r.gen_bool(0.7) {
                    a.assign_pair(f, tuple(std::slice::from_ref(o)), classes.choose(&mut r).unwrap().clone()).unwrap();
                }
            }
        }
        let t = a.compile_to_tensor(&base).unwrap();
        for s in ["s0", "s1", "s2"] {
            for ((f, o), pc) in &a.pair_class {
                let flow = a.flow_allowed(s, f, o).unwrap();
                ensure!(flow == le(pc, &a.subject_class[&sid(s)]), "assignment {n}: flow_allowed({s},{f},{o})");
                let decided = t.decide(s, f, o.as_slice(), &Invocation::new()).unwrap().is_allow();
                ensure!(decided == flow, "assignment {n}: decide({s},{f},{o}) = {decided}, flow = {flow}");
                coords += 1;
            }
        }
    }
    Ok(format!("laws exhaustive on 12 classes; 100 assignments, {coords} coordinates decide == flow_allowed"))
}

fn document_validation() -> Verdict {
    let mut r = rng(5);
    let (mut accepted, mut rejected) = (0, 0);
    for n in 0..300 {
        let d = random_format_document(&mut r, "doc");
        let report = validate_document(&d);
        let bad: BTreeSet<&str> = d.atoms.iter().filter(|a| !atom_acceptable(&d, a)).map(|a| a.id.as_str()).collect();
        ensure!(report.is_accepted() == bad.is_empty(), "document {n}: accepted={} oracle rejects {bad:?}", report.is_accepted());
        ensure!(report.violating_atoms() == bad, "document {n}: report names {:?}, oracle {bad:?}", report.violating_atoms());
        if bad.is_empty() {
            accepted += 1;
        } else {
            rejected += 1;
        }
    }
    ensure!(accepted > 30 && rejected > 30, "degenerate sample: {accepted} accepted, {rejected} rejected");
    Ok(format!("300 documents agree with the per-atom oracle ({accepted} accepted, {rejected} rejected)"))
}

const COMPOSITE: &str = "search_standard∘read";

struct World {
    t: AccessTensor,
    docs: BTreeMap<String, AtomicDocument>,
    catalog: Catalog,
    settings: Settings,
}

impl World {
    fn new(docs: Vec<AtomicDocument>) -> Self {
        let mut catalog = Catalog::standard();
        catalog.compose("search_standard", "read").unwrap();
        let mut t = AccessTensor::new();
        catalog.install(&mut t).unwrap();
        for s in ["alice", "bob", "carol"] {
            t.create_subject(sid(s)).unwrap();
        }
        for d in &docs {
            d.install(&mut t).unwrap();
        }
        let docs = docs.into_iter().map(|d| (d.id.clone(), d)).collect();
        World { t, docs, catalog, settings: Settings::default() }
    }

    fn env(&self) -> Env<'_> {
        Env { tensor: &self.t, documents: &self.docs, catalog: &self.catalog, settings: &self.settings }
    }

    fn allowed(&self, s: &str, req: &Request, doc: &str, atom: &str) -> bool {
        let opts = self.catalog.resolve_options(&req.function, &req.options).unwrap();
        let o = [ObjectRef::atom(doc, atom).unwrap()];
        self.t.decide(s, &req.function, &o, &opts.invocation(&req.stdin)).unwrap().is_allow()
    }
}

fn no_leak() -> Verdict {
    let mut r = rng(6);
    let subjects = [sid("alice"), sid("bob"), sid("carol")];
    let mut functions: Vec<&str> = POLICY_FUNCTIONS.to_vec();
    functions.push(COMPOSITE);
    let (mut runs, mut denied_atoms, mut outputs) = (0, 0, 0);
    for n in 0..100 {
        let atoms = r.gen_range(2..7);
        let d = random_policy_document(&mut r, "doc", atoms, &subjects, &functions);
        let w = World::new(vec![d.clone()]);
        let s = subjects.choose(&mut r).unwrap().clone();
        let word = WORDS.choose(&mut r).unwrap().to_string();
        let mut targets = vec!["doc".to_string()];
        targets.extend(d.atoms.iter().map(|a| format!("doc/{}", a.id)));
        for f in &functions {
            for target in &targets {
                let mut req = Request::new(*f).arg(target.clone());
                req = match *f {
                    "search" | COMPOSITE => req.option("pattern", word.clone()).option("context", r.gen_range(0..4).to_string()),
                    "email" => req.option("to", "x@example.org"),
                    "copy_byte_restricted" => req.option("max_bytes", "60").option("dest", "sink"),
                    "copy_character_limited" => req.option("max_chars", "50").option("dest", "sink"),
                    "copy_sensitive_word_exclusion" => req.option("blocklist", word.clone()).option("dest", "sink"),
                    "copy_with_citation" => req.option("dest", "sink"),
                    _ => req,
                };
                if f.starts_with("copy") && target == "doc" {
                    continue;
                }
                let x = match dispatch(&w.env(), &s, &req) {
                    Ok(x) => x,
                    Err(e) => return Err(format!("triple {n}: {f} {target}: {e}")),
                };
                runs += 1;
                let mut texts = Vec::new();
                if let Some(o) = &x.output {
                    texts.push(o.to_text());
                    texts.push(o.payload());
                    texts.push(serde_json::to_string(o).unwrap());
                    outputs += 1;
                }
                for doc in &x.effects.documents {
                    texts.extend(doc.atoms.iter().map(|a| a.content.clone()));
                }
                for rec in &x.effects.outbox {
                    texts.push(rec.body.clone());
                }
                for a in &d.atoms {
                    if a.kind != fbac::adoc::AtomKind::Text || w.allowed(s.as_str(), &req, "doc", &a.id) {
                        continue;
                    }
                    denied_atoms += 1;
                    for line in a.content.lines() {
                        for text in &texts {
                            ensure!(!text.contains(line), "triple {n}: {s} {f} {target} leaked {line:?} of {}", a.id);
                        }
                    }
                }
            }
        }
    }
    Ok(format!("100 triples, {runs} calls ({outputs} with output), {denied_atoms} denied atom checks, no leaked line"))
}

fn context_bounding() -> Verdict {
    let alice = sid("alice");
    let lines: Vec<String> = (0..21).map(|i| format!("row {i}")).collect();
    let d = AtomicDocument::new("log")
        .unwrap()
        .with_atom(Atom::text("a1", lines.join("\n")).unwrap())
        .unwrap()
        .grant("a1", &alice, "search", TensorEntry::TrueWith(context_at_most(5)))
        .unwrap();
    let w = World::new(vec![d]);
    let run = |ctx: &str| {
        dispatch(&w.env(), &alice, &Request::new("search").arg("log").option("pattern", "^row 10$").option("context", ctx)).unwrap()
    };
    let five = run("5");
    ensure!(five.allowed, "context=5 denied");
    let Some(Output::Search(res)) = five.output else { return Err("no search output".into()) };
    ensure!(res.hits.len() == 1, "{} hits", res.hits.len());
    let h = &res.hits[0];
    ensure!(h.before.len() <= 5 && h.after.len() <= 5, "{} before, {} after", h.before.len(), h.after.len());
    ensure!(h.before.len() == 5 && h.after.len() == 5, "window not filled: {} before, {} after", h.before.len(), h.after.len());
    let six = run("6");
    ensure!(!six.allowed && six.output.is_none(), "context=6 allowed");
    Ok(format!("context=5 allowed with {} + {} context lines; context=6 denied", h.before.len(), h.after.len()))
}

fn citation_cascade() -> Verdict {
    let alice = sid("alice");
    let quote = "The committee approved the budget.";
    let d = AtomicDocument::new("src")
        .unwrap()
        .with_atom(Atom::text("p1", quote).unwrap())
        .unwrap()
        .grant("p1", &alice, "read", TensorEntry::True)
        .unwrap()
        .grant("p1", &alice, "copy_with_citation", TensorEntry::True)
        .unwrap();
    let mut w = World::new(vec![d]);
    let x = dispatch(&w.env(), &alice, &Request::new("copy_with_citation").arg("src/p1").option("dest", "notes")).unwrap();
    ensure!(x.allowed, "copy denied");
    let Some(Output::Copy(res)) = x.output else { return Err("no copy output".into()) };
    let cite = res.citation.ok_or("copy carried no citation")?;
    let notes = x.effects.documents.into_iter().find(|d| d.id == "notes").ok_or("no destination document")?;
    notes.install(&mut w.t).unwrap();
    let shown = |d: &AtomicDocument| redacted_view(&w.t, &alice, d).unwrap().to_text().contains(quote);
    ensure!(shown(&notes), "quote missing right after the copy");
    let removed = notes.remove_atom(&cite.citation_atom).unwrap();
    ensure!(!shown(&removed), "quote still rendered after deleting citation {}", cite.citation_atom);
    let restored = removed.restore_atom(&cite.citation_atom).unwrap();
    ensure!(shown(&restored), "quote absent after restoring the citation");
    Ok(format!("quote {} hidden while citation {} is deleted, shown again on restore", cite.quote_atom, cite.citation_atom))
}

fn composition_isolation() -> Verdict {
    let std = Catalog::standard();
    let mut catalog = Catalog::default();
    for f in ["read", "search", "search_standard"] {
        catalog.register(std.get(f).unwrap().clone()).unwrap();
    }
    let base: Vec<String> = catalog.names().into_iter().collect();
    let mut composites = Vec::new();
    for f in &base {
        for g in &base {
            composites.push(catalog.compose(f, g).unwrap());
        }
    }
    let mut t = AccessTensor::new();
    catalog.install(&mut t).unwrap();
    let objects: Vec<String> = (0..3).map(|i| format!("o{i}")).collect();
    for o in &objects {
        t.create_object(oref(o)).unwrap();
    }
    for s in ["alice", "bob"] {
        t.create_subject(sid(s)).unwrap();
        for f in &base {
            let a = t.function(f).unwrap().arity;
            for o in all_tuples(&objects, a) {
                t.enter_entry(&sid(s), f, tuple(&o), TensorEntry::True).unwrap();
            }
        }
    }
    let inv = Invocation::new().with_value("pattern", "x").unwrap();
    let mut checked = 0;
    for c in &composites {
        for s in ["alice", "bob"] {
            for o in all_tuples(&objects, c.arity) {
                let refs: Vec<ObjectRef> = o.iter().map(|x| oref(x)).collect();
                ensure!(!t.decide(s, &c.name, &refs, &inv).unwrap().is_allow(), "{s} may run {} without a grant", c.name);
                checked += 1;
            }
        }
    }
    // An explicit grant opens exactly that composite.
    t.enter_entry(&sid("alice"), COMPOSITE, tuple(&["o0".to_string()]), TensorEntry::True).unwrap();
    ensure!(t.decide("alice", COMPOSITE, &[oref("o0")], &inv).unwrap().is_allow(), "explicit grant ignored");
    ensure!(!t.decide("bob", COMPOSITE, &[oref("o0")], &inv).unwrap().is_allow(), "grant leaked to bob");
    ensure!(!t.decide("alice", "search∘read", &[oref("o0")], &inv).unwrap().is_allow(), "grant leaked to another composite");
    Ok(format!("{} composites, {checked} coordinates denied without a composite grant", composites.len()))
}

fn round_trip() -> Verdict {
    let mut r = rng(10);
    let registry = Catalog::standard();
    let mut bytes = 0;
    for n in 0..200 {
        let d = random_format_document(&mut r, &format!("d{n}"));
        let text = adoc::serialize(&d).map_err(|e| format!("document {n}: {e}"))?;
        let back = adoc::parse(text.as_bytes(), &registry).map_err(|e| format!("document {n}: {e}"))?;
        ensure!(back == d, "document {n} changed in the round trip");
        ensure!(adoc::serialize(&back).unwrap() == text, "document {n}: serialization not idempotent");
        bytes += text.len();
    }
    Ok(format!("200 documents ({bytes} bytes) survive parse after serialize"))
}

const IDS: &str = "t-alice alice author\nt-bob bob coauthor\nt-carol carol viewer\n";

fn session_monitor(seed: u64) -> Monitor {
    let mut r = rng(seed);
    let subjects = [sid("alice"), sid("bob"), sid("carol")];
    let docs: BTreeMap<String, AtomicDocument> = ["d1", "d2"]
        .into_iter()
        .map(|id| (id.to_string(), random_policy_document(&mut r, id, 4, &subjects, POLICY_FUNCTIONS)))
        .collect();
    Monitor::new(Identities::parse(IDS).unwrap(), Catalog::standard(), docs, vec![], Settings::default()).unwrap()
}

fn audit_totality() -> Verdict {
    let m = session_monitor(11);
    let mut r = rng(12);
    let tokens = ["t-alice", "t-bob", "t-carol"];
    let targets = ["d1", "d2", "d1/a0", "d1/a3", "d2/a1", "d3", "d1/zz"];
    let mut outcomes = Vec::new();
    for _ in 0..1000 {
        let p = m.authenticate(tokens.choose(&mut r).unwrap()).unwrap();
        let target = *targets.choose(&mut r).unwrap();
        let req = match r.gen_range(0..6) {
            0 => Request::new("read").arg(target),
            1 => Request::new("search").arg(target).option("pattern", *WORDS.choose(&mut r).unwrap()).option("context", r.gen_range(0..4).to_string()),
            2 => Request::new("print").arg(target),
            3 => Request::new("email").arg(target).option("to", "x@example.org"),
            4 => Request::new(*["copy_with_citation", "copy_byte_restricted"].choose(&mut r).unwrap())
                .arg(target)
                .option("max_bytes", "30")
                .option("dest", "scratch"),
            _ => Request::new(*["search_standard", "nonesuch"].choose(&mut r).unwrap()).option("pattern", "a").stdin("a\nb"),
        };
        outcomes.push(match m.invoke(&p, &req) {
            Ok(x) if x.allowed => AuditOutcome::Allow,
            Ok(_) => AuditOutcome::Deny,
            Err(_) => AuditOutcome::Error,
        });
    }
    let records = m.audit_query(&AuditFilter::default());
    ensure!(records.len() == 1000, "{} records", records.len());
    ensure!(is_gap_free(&records), "sequence has gaps");
    ensure!(records.iter().map(|x| x.outcome).collect::<Vec<_>>() == outcomes, "recorded outcomes differ from observed");
    let mismatches = session_monitor(11).replay(&records);
    ensure!(mismatches.is_empty(), "{} replay mismatches, first {:?}", mismatches.len(), mismatches[0]);
    let count = |o| outcomes.iter().filter(|x| **x == o).count();
    Ok(format!(
        "1000 records, sequences 1..=1000, replay identical ({} allow, {} deny, {} error)",
        count(AuditOutcome::Allow),
        count(AuditOutcome::Deny),
        count(AuditOutcome::Error)
    ))
}

fn performance() -> Verdict {
    let mut r = rng(13);
    let mut t = AccessTensor::new();
    let (ns, nf, no) = (100, 10, 100);
    for i in 0..ns {
        t.create_subject(sid(&format!("s{i}"))).unwrap();
    }
    for i in 0..nf {
        t.create_function(FunctionSig::new(format!("f{i}"), 1).unwrap()).unwrap();
    }
    for i in 0..no {
        t.create_object(oref(&format!("o{i}"))).unwrap();
    }
    let pred = Predicate::regex("count=[0-5]\nSTDIN:.*").unwrap();
    for s in 0..ns {
        for f in 0..nf {
            for o in 0..no {
                let e = match r.gen_range(0..3) {
                    0 => TensorEntry::False,
                    1 => TensorEntry::True,
                    _ => TensorEntry::TrueWith(pred.clone()),
                };
                t.enter_entry(&sid(&format!("s{s}")), &format!("f{f}"), tuple(&[format!("o{o}")]), e).unwrap();
            }
        }
    }
    ensure!(t.entry_count() == 100_000, "{} entries", t.entry_count());
    let queries: Vec<(String, String, [ObjectRef; 1], Invocation)> = (0..10_000)
        .map(|_| {
            let inv = Invocation::new().with_value("count", r.gen_range(0..9)).unwrap().with_stdin(b"some input".to_vec());
            (format!("s{}", r.gen_range(0..ns)), format!("f{}", r.gen_range(0..nf)), [oref(&format!("o{}", r.gen_range(0..no)))], inv)
        })
        .collect();
    let mut times: Vec<Duration> = Vec::with_capacity(queries.len());
    let mut allowed = 0;
    for (s, f, o, inv) in &queries {
        let start = Instant::now();
        let d = t.decide(s, f, o, inv).unwrap();
        times.push(start.elapsed());
        allowed += usize::from(d.is_allow());
    }
    times.sort_unstable();
    let median = times[times.len() / 2];
    let p99 = times[times.len() * 99 / 100];
    ensure!(median < Duration::from_micros(50), "median {median:?} (p99 {p99:?})");
    Ok(format!("median {median:.2?}, p99 {p99:.2?} over 10000 decides on 100000 entries ({allowed} allowed)"))
}

fn main() {
    type Criterion = (&'static str, fn() -> Verdict);
    let criteria: [Criterion; 12] = [
        ("arity law", arity_law),
        ("projection oracle", projection_oracle),
        ("RE-FBAC semantics", re_fbac),
        ("lattice laws and compilation", lattice_laws),
        ("document validation", document_validation),
        ("no leak through guarded functions", no_leak),
        ("context bounding", context_bounding),
        ("citation cascade", citation_cascade),
        ("composition isolation", composition_isolation),
        (".adoc round trip", round_trip),
        ("audit totality and replay", audit_totality),
        ("decide performance", performance),
    ];
    let quiet_hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let verdict = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match verdict {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    std::panic::set_hook(quiet_hook);
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
