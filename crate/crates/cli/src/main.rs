use clap::error::ErrorKind;
use clap::Parser;

fn main() {
    let cli = match wmaudit::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = wmaudit::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.code());
    }
}
