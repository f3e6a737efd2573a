fn main() {
    std::process::exit(critpatch::cli::main());
}
