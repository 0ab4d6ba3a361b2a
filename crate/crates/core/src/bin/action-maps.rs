fn main() {
    std::process::exit(action_maps::cli::run(std::env::args_os()));
}
