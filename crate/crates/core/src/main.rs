fn main() {
    std::process::exit(eqgraph::cli::main_with_args(std::env::args_os()));
}
