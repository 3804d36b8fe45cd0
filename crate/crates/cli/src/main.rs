fn main() {
    std::process::exit(semg_meet_cli::run_cli(std::env::args_os()));
}
