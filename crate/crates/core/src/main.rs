fn main() {
    std::process::exit(sparse_em::cli::main(std::env::args_os()));
}
