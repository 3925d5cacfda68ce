//! Loading a config file the way the command-line tool does, and echoing the
//! resolved document.

use nv_optics::config::ConfigDocument;
use nv_optics::experiments::run_rabi;

const TEXT: &str = r#"
[emitter]
t1_ns = 12.0

[pulse]
power_uW = 20.0
repetitions = 200

[run]
cycles = 500
span_ns = 40.0
"#;

fn main() -> nv_optics::Result<()> {
    let doc = ConfigDocument::load(TEXT, Some("rabi"))?;
    print!("{}", doc.to_toml());
    let hist = run_rabi(&doc.to_experiment()?)?;
    println!(
        "\n{} bins, {:.0} counts over {} pulses",
        hist.n_bins(),
        hist.total(),
        hist.n_cycles
    );

    match ConfigDocument::load("[pulse]\nrise_ns = -1.0\n", None) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
