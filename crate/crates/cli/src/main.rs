fn main() {
    std::process::exit(paper2vec_cli::run(std::env::args_os()));
}
