fn main() {
    std::process::exit(phlienet::cli::main_entry());
}
