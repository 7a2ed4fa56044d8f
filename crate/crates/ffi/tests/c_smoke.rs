//! Compiles and runs a small C program against the generated header and the
//! static library, exercising the fit/evaluate/risk path through the C ABI.

use std::path::PathBuf;
use std::process::Command;

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps/<name>; the library sits two up.
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

const C_PROGRAM: &str = r#"
#include <assert.h>
#include <stdio.h>
#include <string.h>
#include "ddgpce.h"

int main(int argc, char **argv) {
    assert(argc == 2);
    DdgpceSurrogate *surrogate = NULL;
    DdgpceStatus status = ddgpce_fit_config_file(argv[1], &surrogate);
    if (status != DDGPCE_STATUS_OK) {
        char message[512];
        ddgpce_last_error(message, sizeof message);
        fprintf(stderr, "fit failed (%d): %s\n", (int)status, message);
        return 1;
    }
    assert(ddgpce_surrogate_dimension(surrogate) == 2);

    double points[4] = {1.0, 0.0, 0.0, 1.0};
    double out[2] = {0.0, 0.0};
    status = ddgpce_surrogate_evaluate(surrogate, points, 2, 2, out);
    assert(status == DDGPCE_STATUS_OK);
    /* model is y = x1 + 2 x2 */
    assert(out[0] > 0.99 && out[0] < 1.01);
    assert(out[1] > 1.99 && out[1] < 2.01);

    double values[100];
    for (int i = 0; i < 100; i++) values[i] = (double)(i + 1);
    double var = 0.0, cvar = 0.0;
    status = ddgpce_var_cvar(values, 100, 0.95, 0, &var, &cvar);
    assert(status == DDGPCE_STATUS_OK);
    assert(var == 95.0);
    assert(cvar == 98.0);

    ddgpce_surrogate_free(surrogate);
    printf("c-abi-ok\n");
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include_dir = manifest.join("include");
    let lib_dir = target_dir();
    // cargo places the staticlib at the profile root on `build` and under
    // deps/ during `test`; accept either.
    let static_lib = [
        lib_dir.join("libddgpce_ffi.a"),
        lib_dir.join("deps/libddgpce_ffi.a"),
    ]
    .into_iter()
    .find(|p| p.is_file())
    .expect("libddgpce_ffi.a built alongside the tests");

    let c_path = dir.path().join("smoke.c");
    std::fs::write(&c_path, C_PROGRAM).unwrap();
    let exe_path = dir.path().join("smoke");
    let compile = Command::new("cc")
        .arg(&c_path)
        .arg("-I")
        .arg(&include_dir)
        .arg(static_lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&exe_path)
        .output()
        .expect("cc is available");
    assert!(
        compile.status.success(),
        "compile failed: {}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let config_path = dir.path().join("config.json");
    std::fs::write(
        &config_path,
        r#"{
            "input_model": {
                "marginals": [ {"kind": "normal", "mean": 0.0, "std": 1.0, "repeat": 2} ],
                "correlation": {"kind": "identity"}
            },
            "basis": {"interaction_order": 1, "degree": 1},
            "samples": {"risk": 2000, "design": 20, "moments": 500},
            "betas": [0.9],
            "seed": 7,
            "model": {"kind": "linear", "weights": [1.0, 2.0]}
        }"#,
    )
    .unwrap();

    let run = Command::new(&exe_path)
        .arg(&config_path)
        .output()
        .expect("smoke binary runs");
    assert!(
        run.status.success(),
        "smoke run failed: {}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(String::from_utf8_lossy(&run.stdout).contains("c-abi-ok"));
}
