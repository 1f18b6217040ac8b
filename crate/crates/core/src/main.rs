fn main() {
    std::process::exit(weakmeter::cli::run(std::env::args_os()));
}
