fn main() {
    std::process::exit(isac_lab::run(std::env::args_os()));
}
