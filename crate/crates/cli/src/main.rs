use clap::Parser;

fn main() {
    let args = nlrq_cli::Args::parse();
    std::process::exit(nlrq_cli::execute(&args));
}
