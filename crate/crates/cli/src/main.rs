fn main() {
    std::process::exit(dpfilter_cli::run(std::env::args_os()));
}
