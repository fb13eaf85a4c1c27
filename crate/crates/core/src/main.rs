fn main() {
    std::process::exit(lrgas::cli::main());
}
