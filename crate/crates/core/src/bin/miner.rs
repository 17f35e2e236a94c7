fn main() {
    std::process::exit(malignancy_miner::cli::run(std::env::args_os()));
}
