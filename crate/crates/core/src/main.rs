fn main() {
    let code = chasm::cli::run(std::env::args_os());
    std::process::exit(code);
}
