fn main() {
    std::process::exit(reorder_line::harness::cli::run(std::env::args_os()));
}
