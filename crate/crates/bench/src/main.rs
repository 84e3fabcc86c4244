fn main() {
    std::process::exit(atr_bench::cli::main(std::env::args_os()));
}
