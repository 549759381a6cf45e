fn main() {
    std::process::exit(swarm_chemistry::cli::main());
}
