fn main() {
    std::process::exit(fusionwalk::cli::run(std::env::args_os()));
}
