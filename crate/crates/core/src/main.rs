use std::io;

fn main() {
    let code = ocpm_conformance::cli::run(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}
