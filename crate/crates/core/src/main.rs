fn main() {
    std::process::exit(ahp_sampler::cli::run(std::env::args_os()));
}
