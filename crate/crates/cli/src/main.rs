use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod inputs;

use commands::Outcome;

/// Confusion networks and consensus decoding for word lattices.
#[derive(Parser, Debug)]
#[command(name = "latcons", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Align lattices into confusion networks and print consensus transcripts
    Consensus(commands::ConsensusArgs),
    /// Pick the center hypothesis of each N-best list
    NbestCenter(commands::NBestArgs),
    /// Word error rate of a hypothesis transcript against a reference
    Score(commands::ScoreArgs),
    /// Write a seeded synthetic corpus of lattices, references and lexicon
    Generate(commands::GenerateArgs),
    /// Error rate and lattice density across pruning settings
    Sweep(commands::SweepArgs),
    /// Rank of the reference word within confusion slots
    Stats(commands::StatsArgs),
    /// Exact path counts of lattices or confusion networks
    Paths(commands::PathsArgs),
    /// Write pruned copies of lattices
    PruneLattice(commands::PruneArgs),
}

/// 2 if the failure came from a broken internal invariant, else 1.
fn exit_code(err: &anyhow::Error) -> u8 {
    let internal = err
        .chain()
        .any(|c| c.downcast_ref::<lattice_consensus::Error>().is_some_and(|e| e.is_internal()));
    if internal {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    // Usage errors are input errors (exit 1); 2 is kept for internal faults.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Consensus(a) => commands::consensus(a),
        Command::NbestCenter(a) => commands::nbest_center(a),
        Command::Score(a) => commands::score(a),
        Command::Generate(a) => commands::generate(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Stats(a) => commands::stats(a),
        Command::Paths(a) => commands::paths(a),
        Command::PruneLattice(a) => commands::prune_lattice(a),
    };
    match result {
        Ok(Outcome { stdout, failures }) => {
            let mut out = std::io::stdout().lock();
            if out.write_all(stdout.as_bytes()).and_then(|_| out.flush()).is_err() {
                return ExitCode::from(1);
            }
            if failures.is_empty() {
                return ExitCode::SUCCESS;
            }
            for f in &failures {
                eprintln!("error: {f:#}");
            }
            ExitCode::from(failures.iter().map(exit_code).max().unwrap_or(1))
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn internal_errors_exit_two_even_when_wrapped() {
        let inner: anyhow::Result<()> = Err(lattice_consensus::Error::Invariant("cycle".into()).into());
        let wrapped = inner.context("utterance u1").context("decoding").unwrap_err();
        assert_eq!(exit_code(&wrapped), 2);
        let bad = anyhow::Error::from(lattice_consensus::Error::InvalidParameter("x".into())).context("u1");
        assert_eq!(exit_code(&bad), 1);
        assert_eq!(exit_code(&anyhow::anyhow!("plain")), 1);
    }
}
