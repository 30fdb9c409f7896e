fn main() {
    std::process::exit(sgmgt::cli::run(std::env::args_os()));
}
