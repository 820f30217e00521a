use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use iocue::experiments::{config_schema, Command, ExperimentConfig, RunOptions};

#[derive(Parser)]
#[command(name = "uq", version, about = "Post-hoc variance networks for frozen regressors")]
struct Cli {
    /// Print the JSON schema of the configuration file and exit.
    #[arg(long)]
    print_schema: bool,
    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output root; defaults to the config's `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overwrite artifacts from an earlier run of the same command.
    #[arg(long)]
    force: bool,
    /// Added to every seed in the config.
    #[arg(long, default_value_t = 0)]
    seed_offset: u64,
}

#[derive(Subcommand)]
enum Cmd {
    TrainBase(Common),
    FitPosthoc(Common),
    Eval(Common),
    Ood(Common),
    Perturb(Common),
    Crossnet(Common),
    UciSuite(Common),
    Sweep(Common),
}

impl Cmd {
    fn split(self) -> (Command, Common) {
        match self {
            Cmd::TrainBase(c) => (Command::TrainBase, c),
            Cmd::FitPosthoc(c) => (Command::FitPosthoc, c),
            Cmd::Eval(c) => (Command::Eval, c),
            Cmd::Ood(c) => (Command::Ood, c),
            Cmd::Perturb(c) => (Command::Perturb, c),
            Cmd::Crossnet(c) => (Command::Crossnet, c),
            Cmd::UciSuite(c) => (Command::UciSuite, c),
            Cmd::Sweep(c) => (Command::Sweep, c),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if cli.print_schema {
        println!("{}", config_schema());
        return ExitCode::SUCCESS;
    }
    let Some(cmd) = cli.command else {
        eprintln!("error: a command is required (see --help)");
        return ExitCode::from(2);
    };
    let (command, common) = cmd.split();
    let opts = RunOptions {
        out: common.out,
        force: common.force,
        seed_offset: common.seed_offset,
    };
    let result = ExperimentConfig::load(&common.config).and_then(|cfg| command.run(&cfg, &opts));
    match result {
        Ok(manifest) => {
            println!(
                "{} finished in {:.1}s ({} artifacts, config {})",
                manifest.command,
                manifest.wall_clock_secs,
                manifest.artifacts.len(),
                &manifest.config_hash[..12]
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
