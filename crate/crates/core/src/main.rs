fn main() {
    std::process::exit(lcuqml::harness::run_cli(std::env::args_os()));
}
