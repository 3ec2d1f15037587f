fn main() {
    std::process::exit(foldcf_cli::run(std::env::args_os()));
}
