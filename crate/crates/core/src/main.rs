fn main() -> std::process::ExitCode {
    hardball::cli::main()
}
