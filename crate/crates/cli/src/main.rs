fn main() {
    std::process::exit(vornav_cli::run(std::env::args_os()));
}
