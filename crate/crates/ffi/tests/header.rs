//! The generated header declares every exported function and the status codes.

use std::fs;

#[test]
fn header_declares_every_export() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let header = fs::read_to_string(format!("{dir}/include/upccd.h")).unwrap();
    let source = fs::read_to_string(format!("{dir}/src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15, "{exports:?}");
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    for code in ["UPCCD_STATUS_OK = 0", "UPCCD_STATUS_PARSE = 2", "UPCCD_STATUS_PANIC = 7"] {
        assert!(header.contains(code), "{code}");
    }
    assert!(header.contains("typedef struct UpccdIntegrals UpccdIntegrals;"));
}
