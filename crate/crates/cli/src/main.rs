fn main() {
    std::process::exit(mushroom_cli::run(std::env::args_os()));
}
