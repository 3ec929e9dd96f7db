fn main() {
    std::process::exit(genaiops_gate::cli::main());
}
