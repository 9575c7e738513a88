fn main() -> std::process::ExitCode { hpcsim::cli::main() }
