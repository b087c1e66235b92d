fn main() {
    std::process::exit(qnet::run(std::env::args_os()));
}
