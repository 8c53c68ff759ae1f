fn main() {
    std::process::exit(pcfbpm::cli::run(std::env::args_os()));
}
