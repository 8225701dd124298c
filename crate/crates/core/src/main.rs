use std::io::Write;

fn main() {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut err = std::io::stderr();
    let code = sharpbound::cli::main_with(
        std::env::args_os().collect(),
        std::env::var(sharpbound::cli::TOL_ENV).ok(),
        &mut out,
        &mut err,
    );
    let _ = out.flush();
    std::process::exit(code);
}
