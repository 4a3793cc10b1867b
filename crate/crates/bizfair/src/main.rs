use bizfair::cli;

fn main() {
    std::process::exit(cli::run());
}
