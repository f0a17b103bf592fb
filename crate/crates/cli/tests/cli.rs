use std::path::PathBuf;
use std::process::{Command, Output};

fn orchestrator(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orchestrator"))
        .args(args)
        .env("ORCH_NBI_PORT", "0")
        .env("ORCH_OVC_ADDRESS", "127.0.0.1:0")
        .env_remove("ORCH_SIM_PER_HOP_DELAY_MS")
        .output()
        .expect("binary runs")
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn builtin_scenarios_pass() {
    let out = orchestrator(&["--scenario", "builtin:all", "--per-hop-delay-ms", "10"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}\n{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("choice:          OpticalLayer"));
    assert!(stdout.contains("choice:          IpLayer"));
    assert!(stdout.contains("POST /data/calls/call-acino1"));
    assert!(stdout.contains("2/2 scenarios passed"));
}

#[test]
fn structured_trace_output() {
    let out = orchestrator(&[
        "--scenario",
        "builtin:optical",
        "--trace-format",
        "structured",
        "--per-hop-delay-ms",
        "0",
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"Protocol\": \"COP\""));
}

#[test]
fn impossible_expectation_fails_run() {
    let file = scratch(
        "impossible.toml",
        r#"
        [[scenarios]]
        name = "impossible"
        src = "OVS1"
        dst = "OVS2"
        encryption = true
        latencySensitive = true
        bandwidthBps = 1000000
        [scenarios.expected]
        choice = "IpLayer"
        traceRows = 7
        "#,
    );
    let out = orchestrator(&["--scenario", file.to_str().unwrap(), "--per-hop-delay-ms", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAILED: expected choice IpLayer"), "{stdout}");
    assert!(stdout.contains("0/1 scenarios passed"));
}

#[test]
fn startup_errors_name_the_input() {
    let out = orchestrator(&["--topology", "/nonexistent/topo.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/topo.toml"));

    let out = orchestrator(&["--scenario", "builtin:everything"]);
    assert_eq!(out.status.code(), Some(2));

    let out = orchestrator(&["--trace-format", "pcap"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown trace format"));

    let bad = scratch("bad.topo", "[[nodes]]\nid = \"X\"\n");
    let out = orchestrator(&["--topology", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn occupied_ovc_port_is_attributed() {
    let blocker = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = blocker.local_addr().unwrap().to_string();
    let out = Command::new(env!("CARGO_BIN_EXE_orchestrator"))
        .args(["--scenario", "builtin:optical"])
        .env("ORCH_NBI_PORT", "0")
        .env("ORCH_OVC_ADDRESS", &addr)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("optical controller"), "{stderr}");
}
