use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pfnav::app::{self, Failure, Scenario};

#[derive(Parser)]
#[command(name = "pfnav", version, about = "Density-based off-road planner with an A* baseline")]
struct Cli {
    /// Overrides the operator seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the density program and roll out the feedback.
    Plan {
        config: PathBuf,
        /// Also write the snapshot pairs used for each generator.
        #[arg(long)]
        snapshots: bool,
    },
    /// Run grid A* only.
    Baseline { config: PathBuf },
    /// Run both planners and write a comparison and an SVG overlay.
    Compare { config: PathBuf },
    /// Write the assembled linear program in plain text.
    DumpLp { config: PathBuf },
    /// Write the bundled scenario terrains and configurations.
    Fixtures { dir: PathBuf },
}

fn run(cli: Cli) -> Result<String, Failure> {
    let load = |path: &PathBuf| Scenario::load(path, cli.seed);
    let out_of = |s: &Scenario| s.config.output_dir();
    match &cli.command {
        Command::Plan { config, snapshots } => {
            let s = load(config)?;
            app::cmd_plan(&s, &out_of(&s), *snapshots)
        }
        Command::Baseline { config } => {
            let s = load(config)?;
            app::cmd_baseline(&s, &out_of(&s))
        }
        Command::Compare { config } => {
            let s = load(config)?;
            app::cmd_compare(&s, &out_of(&s))
        }
        Command::DumpLp { config } => {
            let s = load(config)?;
            app::cmd_dump_lp(&s, &out_of(&s))
        }
        Command::Fixtures { dir } => {
            let mut written = Vec::new();
            for f in pfnav::fixtures::all() {
                written.push(f.write(dir).map_err(Failure::from)?.display().to_string());
            }
            Ok(format!("wrote {}", written.join(", ")))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    use pfnav::app::{EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NOT_REACHED, EXIT_PARTIAL};
    use pfnav::io::{heightmap_csv, parse_samples, Report};

    fn hill(x: f64, y: f64) -> f64 {
        0.2 + (-((x - 3.0).powi(2) + (y - 1.0).powi(2)) / 0.8).exp()
    }

    /// Small 6 m scene written into `dir`; `extra` is appended to the TOML.
    fn scene(dir: &Path, obstacles: &str, extra: &str) -> PathBuf {
        let n = 61;
        let heights: Vec<f64> = (0..n).flat_map(|row| (0..n).map(move |col| hill(col as f64 * 0.1, (n - 1 - row) as f64 * 0.1))).collect();
        std::fs::write(dir.join("hill.csv"), heightmap_csv(n, n, &heights)).unwrap();
        let text = format!(
            r#"
[terrain]
path = "hill.csv"
cell_size = 0.1

[domain]
bounds_min = [0.0, 0.0]
bounds_max = [6.0, 6.0]
initial = {{ disc = {{ center = [0.8, 3.0], radius = 0.4 }} }}
target = {{ disc = {{ center = [5.2, 3.0], radius = 0.7 }} }}
obstacles = [{obstacles}]

[basis]
grid_counts = [12, 12]
sigma_scale = 0.5
quadrature = [48, 48]

[operator]
samples = 4000
dt = 0.1

[baseline]
resolution = [60, 60]

[output]
dir = "{out}"
{extra}
"#,
            out = dir.join("out").display(),
        );
        let path = dir.join("scene.toml");
        std::fs::write(&path, text).unwrap();
        path
    }

    fn cmd(args: &[&str]) -> Result<String, Failure> {
        run(Cli::try_parse_from([&["pfnav"], args].concat()).unwrap())
    }

    const WALL: &str = "{ box = { min = [2.6, 0.0], max = [3.4, 6.0] } }";

    #[test]
    fn plan_writes_exports_and_succeeds() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = scene(dir.path(), "", "");
        let msg = cmd(&["plan", "--snapshots", cfg.to_str().unwrap()]).unwrap();
        assert!(msg.starts_with("objective"), "{msg}");
        let out = dir.path().join("out");
        let report = Report::parse(&std::fs::read_to_string(out.join("report.txt")).unwrap());
        assert_eq!(report.get("lp_status"), Some("Optimal"));
        assert_eq!(report.get("reached_target"), Some("true"));
        let rows = parse_samples(&std::fs::read_to_string(out.join("trajectory.csv")).unwrap()).unwrap();
        assert_eq!(rows[0][1..3], [0.8, 3.0]);
        for name in ["density.txt", "snapshots_e1.csv", "snapshots_-e2.csv"] {
            assert!(out.join(name).exists(), "{name}");
        }
    }

    #[test]
    fn configuration_errors_exit_with_one() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("absent.toml");
        assert_eq!(cmd(&["plan", missing.to_str().unwrap()]).unwrap_err().code, EXIT_CONFIG);

        let cfg = scene(dir.path(), "", "[lp]\nmax_iter = 0\n");
        assert_eq!(cmd(&["baseline", cfg.to_str().unwrap()]).unwrap_err().code, EXIT_CONFIG);

        // Domain reaching past the terrain.
        let cfg = scene(dir.path(), "", "");
        let text = std::fs::read_to_string(&cfg).unwrap().replace("bounds_max = [6.0, 6.0]", "bounds_max = [6.5, 6.0]");
        std::fs::write(&cfg, text).unwrap();
        assert_eq!(cmd(&["dump-lp", cfg.to_str().unwrap()]).unwrap_err().code, EXIT_CONFIG);
    }

    #[test]
    fn blocked_scene_exits_with_two_and_partial_compare_with_four() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = scene(dir.path(), WALL, "");
        let cfg = cfg.to_str().unwrap();
        let pf = cmd(&["plan", cfg]).unwrap_err();
        assert_eq!(pf.code, EXIT_INFEASIBLE, "{}", pf.message);
        assert!(pf.message.starts_with("infeasible"), "{}", pf.message);
        assert_eq!(cmd(&["baseline", cfg]).unwrap_err().code, EXIT_INFEASIBLE);
        let both = cmd(&["compare", cfg]).unwrap_err();
        assert_eq!(both.code, EXIT_PARTIAL);
        let table = std::fs::read_to_string(dir.path().join("out/comparison.csv")).unwrap();
        assert!(table.contains("pf,nan,nan,nan,false"), "{table}");
        assert!(table.contains("astar,nan,nan,nan,false"), "{table}");
    }

    #[test]
    fn short_horizon_exits_with_three() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = scene(dir.path(), "", "[control]\nt_max = 0.5\n");
        let f = cmd(&["plan", cfg.to_str().unwrap()]).unwrap_err();
        assert_eq!(f.code, EXIT_NOT_REACHED, "{}", f.message);
        // The exports are still written.
        assert!(dir.path().join("out/trajectory.csv").exists());
    }

    #[test]
    fn seed_flag_overrides_the_configuration() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = scene(dir.path(), "", "");
        let cli = Cli::try_parse_from(["pfnav", "--seed", "42", "dump-lp", cfg.to_str().unwrap()]).unwrap();
        assert_eq!(cli.seed, Some(42));
        let s = Scenario::load(&cfg, cli.seed).unwrap();
        assert_eq!(s.config.operator.seed, 42);
        let msg = run(cli).unwrap();
        assert!(msg.contains("variables"), "{msg}");
        assert!(dir.path().join("out/lp.txt").exists());
    }

    #[test]
    fn fixtures_command_writes_every_scenario() {
        let dir = tempfile::tempdir().unwrap();
        cmd(&["fixtures", dir.path().to_str().unwrap()]).unwrap();
        for f in pfnav::fixtures::all() {
            assert!(dir.path().join(format!("{}.toml", f.name)).exists());
            assert!(dir.path().join(format!("{}.csv", f.name)).exists());
        }
    }

    #[test]
    fn bad_arguments_are_rejected_by_the_parser() {
        assert!(Cli::try_parse_from(["pfnav", "plan"]).is_err());
        assert!(Cli::try_parse_from(["pfnav", "fly", "x.toml"]).is_err());
    }
}
