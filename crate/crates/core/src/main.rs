fn main() {
    std::process::exit(orientpipe::cli::main_impl());
}
