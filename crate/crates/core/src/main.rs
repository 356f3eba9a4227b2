fn main() {
    std::process::exit(geoflow_core::cli::run(std::env::args_os()));
}
