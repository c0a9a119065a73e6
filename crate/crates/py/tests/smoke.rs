use std::path::PathBuf;
use std::process::Command;

// Runs python/smoke_test.py against the cdylib built for this test run.
#[test]
fn python_smoke_test() {
    let Ok(py) = which_python() else {
        eprintln!("python3 not found; skipping");
        return;
    };
    // Cargo writes the freshly built cdylib into deps/, beside the test executable.
    let exe = std::env::current_exe().unwrap();
    let lib = exe.with_file_name(format!("{}pybtq{}", std::env::consts::DLL_PREFIX, std::env::consts::DLL_SUFFIX));
    assert!(lib.exists(), "missing {}", lib.display());
    let script = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../python/smoke_test.py");
    let out = Command::new(py).arg(&script).arg(&lib).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    println!("{stdout}");
    assert!(out.status.success(), "{stdout}\n{}", String::from_utf8_lossy(&out.stderr));
}

fn which_python() -> Result<&'static str, ()> {
    ["python3", "python"]
        .into_iter()
        .find(|p| Command::new(p).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
