use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pyjama")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn exit_codes() {
    let ok = run(&["ml", "--velocities", "1,2"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).starts_with("1/3"));
    assert_eq!(run(&["ml", "--velocities", "1,0"]).status.code(), Some(3));
    assert_eq!(run(&["bogus"]).status.code(), Some(3));
    assert_eq!(run(&["cover", "--epsilon", "0.9", "--rotations", "theta:1"]).status.code(), Some(3));
    let gaps = run(&["cover", "--epsilon", "1/20", "--rotations", "theta:1", "--region", "0,0,1,1", "--max-depth", "4"]);
    assert_eq!(gaps.status.code(), Some(1));
    let covered = run(&["cover", "--epsilon", "0.34", "--rotations", "search:3", "--region", "0,0,2,2", "--max-depth", "10"]);
    assert_eq!(covered.status.code(), Some(0));
    assert_eq!(run(&["ml", "--velocities", "9000,2000"]).status.code(), Some(2));
}

#[test]
fn reports_do_not_depend_on_threads() {
    let cases: [&[&str]; 4] = [
        &["irrtrick", "--n", "9", "--seed", "4"],
        &["rigidity", "--n", "2", "--trials", "3", "--seed", "2"],
        &["approx", "--trials", "5", "--seed", "9", "--out", "-"],
        &["cover", "--epsilon", "0.22", "--rotations", "theta:2", "--region", "0,0,2,2", "--max-depth", "9"],
    ];
    let dir = std::env::temp_dir().join(format!("pyjama-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    for (i, case) in cases.iter().enumerate() {
        let mut seen = Vec::new();
        for t in ["1", "4", "8"] {
            let path = dir.join(format!("{i}-{t}.json"));
            let mut args: Vec<&str> = case.iter().copied().filter(|a| *a != "--out" && *a != "-").collect();
            let p = path.to_str().unwrap().to_string();
            args.extend(["--threads", t, "--out", &p]);
            let o = run(&args);
            assert!(o.status.code().is_some());
            seen.push(std::fs::read(&path).unwrap());
        }
        assert!(seen.windows(2).all(|w| w[0] == w[1]), "case {i} differs across thread counts");
    }
    std::fs::remove_dir_all(&dir).ok();
}
