fn main() {
    let code = opinion_cli::run(std::env::args_os(), &|key| std::env::var(key).ok());
    std::process::exit(code);
}
