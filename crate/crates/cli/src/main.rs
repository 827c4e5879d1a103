fn main() {
    std::process::exit(velojump_cli::main_with(std::env::args_os()));
}
