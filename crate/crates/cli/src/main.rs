fn main() {
    std::process::exit(aerocell_cli::main_with(std::env::args_os()));
}
