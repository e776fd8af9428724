fn main() {
    std::process::exit(qudit_rb::cli::run(std::env::args_os()));
}
