fn main() {
    std::process::exit(ovmil_cli::run(std::env::args_os()));
}
