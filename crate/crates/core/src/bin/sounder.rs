fn main() {
    std::process::exit(uwb_sounder::campaign::cli::main(std::env::args_os()));
}
