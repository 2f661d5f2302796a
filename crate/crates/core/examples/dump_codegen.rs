//! Prints the generated packages for one bundled model; handy when
//! inspecting emitter changes.
//!
//! Usage: `cargo run --example dump_codegen -- [model] [--helper-split] [--harness <instance>]`
//! where model is one of lane_driver, voter_plane, control_law.

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let model = args
        .iter()
        .find(|a| !a.starts_with("--"))
        .map(String::as_str)
        .unwrap_or("lane_driver");
    let fm = match model {
        "lane_driver" => takt_core::les::lane_driver(),
        "voter_plane" => takt_core::les::voter_plane(),
        "control_law" => takt_core::les::control_law(),
        other => {
            eprintln!("unknown model `{other}`");
            std::process::exit(2);
        }
    }
    .expect("bundled model is consistent");
    let p = takt_core::codegen::lower(&fm);
    let cfg = takt_core::codegen::EmitterConfig {
        helper_split: args.iter().any(|a| a == "--helper-split"),
        package_prefix: String::new(),
    };
    for (name, text) in takt_core::codegen::emit_ada(&p, &cfg).unwrap() {
        println!("==================== {name}");
        println!("{text}");
    }
    if let Some(i) = args.iter().position(|a| a == "--harness") {
        let instance = args.get(i + 1).expect("--harness needs an instance path");
        let (name, text) = takt_core::codegen::emit_tdf_harness(&p, instance).unwrap();
        println!("==================== {name}");
        println!("{text}");
    }
}
