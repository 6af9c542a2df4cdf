fn main() {
    std::process::exit(seminpaint_cli::run(std::env::args_os()));
}
