fn main() {
    std::process::exit(uavids_cli::run_command(std::env::args_os()));
}
