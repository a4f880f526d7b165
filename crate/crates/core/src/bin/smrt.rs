fn main() -> std::process::ExitCode {
    smrt_core::cli::main()
}
