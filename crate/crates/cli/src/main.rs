use clap::Parser;

use metric_repair_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let out = run(&cli);
    println!("{}", out.stdout);
    std::process::exit(out.code);
}
