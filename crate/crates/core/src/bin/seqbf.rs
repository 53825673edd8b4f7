fn main() {
    std::process::exit(seqbf::cli::run(std::env::args_os()));
}
