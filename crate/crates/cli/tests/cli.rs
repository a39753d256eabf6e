use std::process::Command;

fn sarkisov(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sarkisov")).args(args).output().unwrap()
}

#[test]
fn gen_factor_verify_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("q.json");
    let cert = dir.path().join("q.cert.json");
    let dot = dir.path().join("q.dot");
    let p = |x: &std::path::Path| x.to_str().unwrap().to_string();
    assert!(sarkisov(&["gen", "dejonquieres", "3", "--out", &p(&inst)]).status.success());
    let out = sarkisov(&["factor", &p(&inst), "--out", &p(&cert), "--dot", &p(&dot)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("6 links"));
    assert!(std::fs::read_to_string(&dot).unwrap().starts_with("digraph"));
    let out = sarkisov(&["verify", &p(&cert)]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");

    let text = std::fs::read_to_string(&cert).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["link_count"] = serde_json::Value::from(5);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, serde_json::to_string_pretty(&v).unwrap() + "\n").unwrap();
    assert_eq!(sarkisov(&["verify", &p(&bad)]).status.code(), Some(1));

    std::fs::write(&bad, text.replace("sarkisov-cert/1", "sarkisov-cert/9")).unwrap();
    assert_eq!(sarkisov(&["verify", &p(&bad)]).status.code(), Some(6));
    assert_eq!(sarkisov(&["verify", &p(&dir.path().join("missing.json"))]).status.code(), Some(2));
    assert_eq!(sarkisov(&["gen", "random", "12", "1"]).status.code(), Some(2));
    assert_eq!(sarkisov(&["factor", &p(&inst), "--max-links", "2"]).status.code(), Some(4));
}
