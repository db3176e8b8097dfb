use std::process::ExitCode;

fn main() -> ExitCode {
    let (out, code) = odolab_cli::run(std::env::args_os());
    if code == odolab_cli::EXIT_USAGE {
        eprint!("{out}");
    } else {
        print!("{out}");
    }
    ExitCode::from(code as u8)
}
