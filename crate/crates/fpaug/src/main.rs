fn main() {
    std::process::exit(fpaug::cli::main_entry(std::env::args_os()));
}
