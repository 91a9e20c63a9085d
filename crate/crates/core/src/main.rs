fn main() {
    std::process::exit(divgeom::cli::main_with_args(std::env::args_os()));
}
