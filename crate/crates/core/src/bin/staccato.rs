fn main() {
    std::process::exit(staccato::cli::run(std::env::args_os()));
}
