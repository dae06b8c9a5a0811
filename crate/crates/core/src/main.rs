fn main() {
    std::process::exit(fkrfe::cli::run_from(std::env::args_os()));
}
