fn main() {
    std::process::exit(lrprop::cli::run(std::env::args_os()));
}
