fn main() {
    std::process::exit(nematoflow::io::cli::main_from_env());
}
