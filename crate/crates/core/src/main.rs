use clap::Parser;

fn main() {
    let cli = qgeom::cli::Cli::parse();
    std::process::exit(qgeom::cli::execute(&cli));
}
