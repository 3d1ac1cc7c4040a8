fn main() {
    werner_cli::install_interrupt_handler();
    std::process::exit(werner_cli::run(std::env::args_os()));
}
