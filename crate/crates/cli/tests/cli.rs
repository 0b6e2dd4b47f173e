use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn evalforge(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evalforge"))
        .current_dir(dir)
        .env_remove("EVALFORGE_PROJECT")
        .env_remove("EVALFORGE_POLICY")
        .env_remove("EVALFORGE_FORMAT")
        .env_remove("EVALFORGE_OUT")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = evalforge(dir, args);
    assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
    stdout(&o)
}

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_owned()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn fresh_project_is_in_start_up() {
    let dir = tempfile::tempdir().unwrap();
    let o = evalforge(dir.path(), &["phase", "status"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("P0 Start-up"));
}

#[test]
fn aggregate_without_forms_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = evalforge(dir.path(), &["score", "aggregate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("NoForms"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(evalforge(dir.path(), &["bogus"]).status.code(), Some(2));
    assert_eq!(evalforge(dir.path(), &["score", "aggregate", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(evalforge(dir.path(), &["plan", "cycle", "--horizon", "x"]).status.code(), Some(2));
}

#[test]
fn every_subcommand_has_help() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[(&[&str], &[&str])] = &[
        (&["panel", "suggest"], &["--file"]),
        (&["panel", "screen"], &["--discipline"]),
        (&["panel", "reject"], &["--expert", "--team", "--justification"]),
        (&["panel", "validate"], &["--discipline"]),
        (&["dossier", "draft"], &["--team", "--window"]),
        (&["dossier", "merge"], &["--team", "--from"]),
        (&["dossier", "render"], &["--team", "--allow-incomplete"]),
        (&["forms", "ingest"], &["--from"]),
        (&["forms", "check"], &["--format"]),
        (&["score", "aggregate"], &["--discipline"]),
        (&["score", "rank"], &["--discipline"]),
        (&["score", "overview"], &["--team", "--seed"]),
        (&["analyze"], &["--out", "--indicator"]),
        (&["phase", "status"], &["--discipline", "--on"]),
        (&["phase", "advance"], &["--to"]),
        (&["plan", "cycle"], &["--horizon", "--capacity", "--blackouts"]),
        (&["report", "global"], &["--discipline", "--out"]),
        (&["report", "team"], &["--team", "--out"]),
        (&["simulate", "generate"], &["--config", "--seed", "--out"]),
        (&["simulate", "reliability"], &["--config", "--seed", "--replicates"]),
    ];
    for (cmd, flags) in cases {
        let mut args = cmd.to_vec();
        args.push("--help");
        let text = ok(dir.path(), &args);
        for f in *flags {
            assert!(text.contains(f), "{cmd:?} help lacks {f}");
        }
        assert!(text.contains("--project"), "{cmd:?} help lacks global flags");
    }
}

#[test]
fn simulate_generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["simulate", "generate", "--seed", "1", "--out", "a"]);
    ok(dir.path(), &["simulate", "generate", "--seed", "1", "--out", "b"]);
    let (a, b) = (tree(&dir.path().join("a")), tree(&dir.path().join("b")));
    assert!(a.len() > 600);
    assert!(a == b, "output trees differ");
    ok(dir.path(), &["simulate", "generate", "--seed", "2", "--out", "c"]);
    assert!(a != tree(&dir.path().join("c")));
}

#[test]
fn settings_precedence_is_flag_env_config() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["simulate", "generate", "--seed", "3", "--out", "project"]);
    let cfg = dir.path().join("project/config.json");
    let text = fs::read_to_string(&cfg).unwrap().replace("\"policy\": \"linear\"", "\"policy\": \"bogus\"");
    fs::write(&cfg, text).unwrap();

    let o = evalforge(dir.path(), &["score", "aggregate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("UnknownPolicy"));

    let with_env = |args: &[&str], policy: &str| {
        Command::new(env!("CARGO_BIN_EXE_evalforge"))
            .current_dir(dir.path())
            .env("EVALFORGE_POLICY", policy)
            .args(args)
            .output()
            .unwrap()
    };
    let env_unweighted = with_env(&["score", "aggregate"], "unweighted");
    assert_eq!(env_unweighted.status.code(), Some(0));
    let flag_linear = with_env(&["score", "aggregate", "--policy", "linear"], "unweighted");
    assert_eq!(flag_linear.status.code(), Some(0));
    assert_ne!(env_unweighted.stdout, flag_linear.stdout);
    assert_eq!(with_env(&["score", "aggregate", "--policy", "nope"], "linear").status.code(), Some(1));
    assert_eq!(flag_linear.stdout, ok(dir.path(), &["score", "aggregate", "--policy", "linear"]).into_bytes());
}

#[test]
fn workflow_to_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["simulate", "generate", "--seed", "4"]);

    let early = evalforge(d, &["report", "team", "--team", "team-001"]);
    assert_eq!(early.status.code(), Some(1));
    assert!(stderr(&early).contains("PhaseViolation"));

    let gated = evalforge(d, &["phase", "advance", "--on", "2009-02-01"]);
    assert_eq!(gated.status.code(), Some(1));
    assert!(stderr(&gated).contains("GateUnsatisfied"));
    let skip = evalforge(d, &["phase", "advance", "--to", "P3", "--on", "2009-02-01"]);
    assert!(stderr(&skip).contains("PhaseViolation"));

    ok(d, &["phase", "mark", "intro-documents"]);
    ok(d, &["phase", "mark", "invitations"]);
    ok(d, &["phase", "mark", "minutes"]);
    for (i, want) in ["P1", "P2", "P3", "P4", "P5", "P6"].iter().enumerate() {
        let day = format!("2009-0{}-01", i + 2);
        assert!(ok(d, &["phase", "advance", "--on", &day]).starts_with(want));
    }
    assert_eq!(fs::read_to_string(d.join("project/state/project.audit.jsonl")).unwrap().lines().count(), 6);

    ok(d, &["report", "global", "--discipline", "disc-01", "--out", "reports"]);
    ok(d, &["report", "team", "--team", "team-001", "--out", "reports"]);
    let global = fs::read_to_string(d.join("reports/global-disc-01.txt")).unwrap();
    let team = fs::read_to_string(d.join("reports/team-team-001.txt")).unwrap();
    assert!(team.contains("rank"));
    for entry in fs::read_dir(d.join("project/experts")).unwrap() {
        let e: serde_json::Value = serde_json::from_str(&fs::read_to_string(entry.unwrap().path()).unwrap()).unwrap();
        for key in ["id", "name"] {
            let token = e[key].as_str().unwrap();
            assert!(!global.contains(token) && !team.contains(token), "{token} leaked");
        }
    }
    assert!(!global.contains("Confidential remark") && !team.contains("Confidential remark"));

    let status = ok(d, &["phase", "status", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&status).unwrap();
    assert_eq!(v["phase"], "P6");

    let late =
        evalforge(d, &["panel", "reject", "--expert", "expert-003", "--team", "team-001", "--justification", "x"]);
    assert_eq!(late.status.code(), Some(1));
    assert!(stderr(&late).contains("PhaseViolation"));
}

#[test]
fn analyze_writes_plot_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["simulate", "generate", "--seed", "5"]);
    for what in ["dist", "corr", "crown", "scatter"] {
        ok(d, &["analyze", what, "--out", "figs"]);
    }
    let fig2 = fs::read_to_string(d.join("figs/fig2_indicator_dist.csv")).unwrap();
    assert!(fig2.starts_with("indicator,score,count,share\n"));
    assert_eq!(fig2.lines().count(), 1 + 10 * 10);
    let fig3 = fs::read_to_string(d.join("figs/fig3_discipline_dist.csv")).unwrap();
    assert_eq!(fig3.lines().count(), 1 + 11 * 10);
    let fig4 = fs::read_to_string(d.join("figs/fig4_scatter.csv")).unwrap();
    assert!(fig4.starts_with("team_id,discipline_id,crown,peer\n"));
    assert_eq!(fig4.lines().count(), 1 + 93);

    ok(d, &["analyze", "corr", "--out", "json", "--format", "json"]);
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("json/correlations.json")).unwrap()).unwrap();
    assert_eq!(m["labels"].as_array().unwrap().len(), m["r"].as_array().unwrap().len());
}

#[test]
fn plan_cycle_from_flags_and_blackouts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ids: Vec<String> = (0..16).map(|i| format!("d{i:02}")).collect();
    let list = ids.join(",");
    let out = ok(d, &["plan", "cycle", "--disciplines", &list]);
    let mut per_year = [0; 8];
    for line in out.lines().skip(1) {
        let year: usize = line.split(',').nth(1).unwrap().parse().unwrap();
        per_year[year] += 1;
    }
    assert_eq!(per_year, [2; 8]);

    fs::write(d.join("black.csv"), "discipline,year\na,0\n").unwrap();
    let o = evalforge(d, &["plan", "cycle", "--disciplines", "a,b", "--horizon", "1", "--blackouts", "black.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Infeasible"));
}

#[test]
fn forms_ingest_rejects_out_of_scale_scores() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["simulate", "generate", "--seed", "6"]);
    fs::create_dir(d.join("incoming")).unwrap();
    fs::write(
        d.join("incoming/bad.json"),
        r#"{"expert_id":"expert-001","team_id":"team-001","scores":{"reviewer_expertise":8,"overall":11},
           "comments":{},"returned_at":"2009-03-01T00:00:00Z"}"#,
    )
    .unwrap();
    let o = evalforge(d, &["forms", "ingest", "--from", "incoming"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("StoreCorrupt") && stderr(&o).contains("bad.json"), "{}", stderr(&o));
}

#[test]
fn panel_and_dossier_commands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["simulate", "generate", "--seed", "7"]);
    let audit = ok(d, &["panel", "screen", "--discipline", "disc-01"]);
    assert!(audit.starts_with("expert,kind,target,ruling"));
    let o = evalforge(d, &["panel", "reject", "--expert", "expert-001", "--team", "team-001", "--justification", ""]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("JustificationRequired"));

    // a coauthor of team-001 is suggested: the link is detected and recorded as pending
    let acts = d.join("project/activities/team-001.json");
    let mut records: serde_json::Value = serde_json::from_str(&fs::read_to_string(&acts).unwrap()).unwrap();
    records[0]["coauthors"] = serde_json::json!(["Ana Vidal"]);
    fs::write(&acts, records.to_string()).unwrap();
    fs::write(
        d.join("cand.json"),
        r#"{"id":"cand-1","name":"Ana Vidal","affiliation":"Uppsala University","country":"SE",
           "domains":["disc-01-f1"],"suggested_by":"coordinator","status":"suggested"}"#,
    )
    .unwrap();
    let found = ok(d, &["panel", "suggest", "--file", "cand.json"]);
    assert!(found.lines().nth(1).unwrap().starts_with("cand-1,copublication,team:team-001,pending"), "{found}");
    assert!(d.join("project/conflicts/cand-1.json").exists());

    ok(d, &["panel", "reject", "--expert", "cand-1", "--team", "team-001", "--justification", "joint grant"]);
    let log = fs::read_to_string(d.join("project/rejections/cand-1.json")).unwrap();
    assert!(log.contains("joint grant"));
    let e: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("project/experts/cand-1.json")).unwrap()).unwrap();
    assert_eq!(e["status"], "rejected");

    ok(d, &["dossier", "render", "--team", "team-001", "--out", "files"]);
    let doc = fs::read_to_string(d.join("files/dossier-team-001.txt")).unwrap();
    ok(d, &["dossier", "render", "--team", "team-001", "--out", "files2"]);
    assert_eq!(doc, fs::read_to_string(d.join("files2/dossier-team-001.txt")).unwrap());

    // the team's chosen core publications fall outside this window
    let o = evalforge(d, &["dossier", "render", "--team", "team-001", "--window", "1900:1901"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("CoreNotListed"), "{}", stderr(&o));
}
