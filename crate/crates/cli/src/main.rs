use clap::Parser;

fn main() {
    let cli = epf_cli::Cli::parse();
    match epf_cli::run(cli) {
        Ok(written) => {
            for path in written {
                println!("{}", path.display());
            }
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            std::process::exit(e.code());
        }
    }
}
