use std::io;

fn main() {
    let stdin = io::stdin();
    let code = shield_core::cli::run(std::env::args_os(), &mut io::stdout().lock(), &mut stdin.lock());
    std::process::exit(code);
}
