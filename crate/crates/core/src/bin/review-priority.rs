fn main() {
    std::process::exit(review_priority::cli::main());
}
