fn main() -> std::process::ExitCode {
    weakauto_cli::main_entry()
}
