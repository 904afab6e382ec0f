fn main() {
    std::process::exit(sopflex::cli::run(std::env::args_os()));
}
