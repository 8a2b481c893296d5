fn main() {
    std::process::exit(ideawaves::cli::main());
}
