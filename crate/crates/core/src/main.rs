fn main() {
    let code = groundeval::cli::run(std::env::args_os());
    std::process::exit(code);
}
