fn main() {
    std::process::exit(mtgender::cli::main());
}
