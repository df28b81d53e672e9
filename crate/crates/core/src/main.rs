fn main() -> std::process::ExitCode {
    lra_ppf::cli::main()
}
