fn main() {
    std::process::exit(quantile_motion::cli::run(std::env::args_os()));
}
