fn main() {
    std::process::exit(event_warp::cli::main_with_args(std::env::args_os()));
}
