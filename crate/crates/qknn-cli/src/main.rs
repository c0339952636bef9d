fn main() {
    std::process::exit(qknn_cli::app::run_main(std::env::args_os()));
}
