use std::fmt::Write;
use std::path::PathBuf;

use samd::SpacerMode;
use samd_codegen::{generate_conv_routine, Dialect, GenSpec};

fn main() {
    let mut src = String::new();
    let mut table = String::from("pub static ROUTINES: &[Routine] = &[\n");
    for spec in GenSpec::grid(Dialect::Rust) {
        src.push_str(&generate_conv_routine(&spec).expect("grid specs are valid"));
        src.push('\n');
        let mode = match spec.mode {
            SpacerMode::Temporary => "Temporary",
            SpacerMode::Permanent => "Permanent",
        };
        writeln!(
            table,
            "    Routine {{ bits: {}, taps: {}, stride: {}, mode: SpacerMode::{mode}, name: \"{name}\", f: {name} }},",
            spec.bits,
            spec.taps,
            spec.stride,
            name = spec.routine_name()
        )
        .unwrap();
    }
    table.push_str("];\n");
    src.push_str(&table);
    let out = PathBuf::from(std::env::var_os("OUT_DIR").unwrap()).join("routines.rs");
    std::fs::write(out, src).unwrap();
    println!("cargo:rerun-if-changed=build.rs");
}
