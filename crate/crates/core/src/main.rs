fn main() {
    std::process::exit(dioph_lab::cli::main());
}
