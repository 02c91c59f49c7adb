fn main() {
    std::process::exit(aigsynth::cli::main_entry());
}
