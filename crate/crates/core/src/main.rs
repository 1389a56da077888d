fn main() {
    std::process::exit(chronomesh::cli::run(std::env::args_os()));
}
