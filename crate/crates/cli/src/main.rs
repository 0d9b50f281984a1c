fn main() {
    std::process::exit(recomp_cli::run(std::env::args_os()));
}
