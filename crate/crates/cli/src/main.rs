fn main() {
    std::process::exit(qlan_cli::cli_main(std::env::args_os()));
}
