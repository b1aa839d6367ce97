fn main() {
    std::process::exit(alphaloss::cli::run(std::env::args_os()));
}
