fn main() {
    std::process::exit(pwmctl::cli(std::env::args_os()));
}
