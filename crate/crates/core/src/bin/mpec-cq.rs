fn main() {
    let code = mpec_cq::cli::run(std::env::args_os(), &mut std::io::stdout().lock());
    std::process::exit(code);
}
