fn main() {
    std::process::exit(schrolab::run(std::env::args_os()));
}
