fn main() {
    std::process::exit(subgraph_ssl::cli::run(std::env::args_os()));
}
