fn main() { std::process::exit(cqe::cli::run(std::env::args().collect())); }
