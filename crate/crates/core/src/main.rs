fn main() {
    std::process::exit(nullrig::cli_report::main_with_args(std::env::args_os()));
}
