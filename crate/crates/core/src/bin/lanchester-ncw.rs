fn main() {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code =
        lanchester_ncw::cli::run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    std::process::exit(code);
}
