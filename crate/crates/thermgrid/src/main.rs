fn main() {
    std::process::exit(thermgrid::cli::run(std::env::args_os()));
}
