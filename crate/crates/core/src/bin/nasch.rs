use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let env = std::env::var(nasch::cli::THREADS_ENV).ok();
    let code = nasch::cli::main_with(
        std::env::args_os(),
        env.as_deref(),
        &mut io::stdout(),
        &mut io::stderr(),
    );
    ExitCode::from(code as u8)
}
