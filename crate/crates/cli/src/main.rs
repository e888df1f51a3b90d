fn main() {
    std::process::exit(avoidset_cli::run(std::env::args_os()));
}
