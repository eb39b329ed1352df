//! Starts the reference monitor on a local port, talks to it over HTTP,
//! then replays the audit log on a fresh monitor.
//!
//! `cargo run --example monitor`

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;

use fbac::monitor::{http, AuditFilter, MonitorConfig};

fn call(addr: &str, method: &str, path: &str, session: Option<&str>, body: &str) -> std::io::Result<String> {
    let mut s = TcpStream::connect(addr)?;
    let header = session.map(|v| format!("{}: {v}\r\n", http::SESSION_HEADER)).unwrap_or_default();
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n{header}Content-Type: application/json\r\nContent-Length: {}\r\n\r\n{body}",
        body.len()
    )?;
    let mut out = String::new();
    s.read_to_string(&mut out)?;
    let (head, body) = out.split_once("\r\n\r\n").unwrap_or((&out, ""));
    Ok(format!("{} {}", head.lines().next().unwrap_or(""), body))
}

fn field(reply: &str, key: &str) -> String {
    let json = &reply[reply.find('{').unwrap_or(0)..];
    let v: serde_json::Value = serde_json::from_str(json).unwrap_or_default();
    v[key].as_str().unwrap_or_default().to_string()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data");
    let m = Arc::new(MonitorConfig::new(dir).load()?);

    let std_listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = std_listener.local_addr()?.to_string();
    std_listener.set_nonblocking(true)?;
    let server = m.clone();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().expect("runtime");
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(std_listener).expect("listener");
            axum::serve(listener, http::router(server)).await.expect("serve");
        });
    });

    let bob = field(&call(&addr, "POST", "/session", None, r#"{"token":"bob-token"}"#)?, "session");
    println!("{}", call(&addr, "GET", "/documents/memo/view", Some(&bob), "")?);
    let search = r#"{"function":"search","args":["memo"],"options":{"pattern":"March","context":"1"}}"#;
    println!("{}", call(&addr, "POST", "/invoke", Some(&bob), search)?);
    println!("{}", call(&addr, "POST", "/invoke", Some(&bob), r#"{"function":"print","args":["memo"]}"#)?);
    println!("{}", call(&addr, "GET", "/audit", Some(&bob), "")?);

    let root = field(&call(&addr, "POST", "/session", None, r#"{"token":"root-token"}"#)?, "session");
    println!("{}", call(&addr, "GET", "/projections/slist?function=read&objects=memo/p1", Some(&root), "")?);

    let records = m.audit_query(&AuditFilter::default());
    println!("\n{} audit records", records.len());
    for r in &records {
        println!("#{} {} {} {:?} -> {:?}", r.sequence, r.subject, r.function, r.objects, r.outcome);
    }
    let fresh = MonitorConfig::new(dir).load()?;
    println!("replay mismatches: {}", fresh.replay(&records).len());
    Ok(())
}
