fn main() {
    std::process::exit(stylo::cli::main());
}
