fn main() -> std::process::ExitCode {
    mtsr_service::cli::main()
}
