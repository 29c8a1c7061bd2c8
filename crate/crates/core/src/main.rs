fn main() {
    std::process::exit(chartfield::runner::main_entry());
}
