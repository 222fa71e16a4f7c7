fn main() {
    std::process::exit(contagion_cli::run(std::env::args_os()));
}
