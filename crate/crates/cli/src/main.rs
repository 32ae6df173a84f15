fn main() -> std::process::ExitCode {
    narrasim_cli::main_with(std::env::args_os())
}
