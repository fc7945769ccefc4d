fn main() {
    eprintln!("wavekin: subcommands not wired up yet");
    std::process::exit(2);
}
