fn main() {
    std::process::exit(meshbench::cli::run(std::env::args_os()));
}
