fn main() -> std::process::ExitCode {
    thermoctl::cli::run()
}
