fn main() {
    std::process::exit(dimer_optics::cli::main_with_args(std::env::args_os()));
}
