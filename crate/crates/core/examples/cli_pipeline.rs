//! The command line driven in-process: generate, fit, predict, evaluate.
//! The same steps from a shell:
//!
//! ```text
//! action-maps generate --out ds --scenes 2 --seed 1
//! action-maps fit --dataset ds --out fit --max-iters 300
//! action-maps predict --dataset ds --factors fit/factors.txt --out am.tsv
//! action-maps evaluate --dataset ds --action-map am.tsv --out eval
//! ```

use action_maps::cli::run;

pub fn run_example() -> action_maps::Result<()> {
    let dir = std::env::temp_dir().join(format!("action-maps-cli-{}", std::process::id()));
    let p = |s: &str| dir.join(s).display().to_string();
    let steps: Vec<Vec<String>> = vec![
        vec!["generate".into(), "--out".into(), p("ds"), "--scenes".into(), "1".into(), "--seed".into(), "1".into()],
        vec!["fit".into(), "--dataset".into(), p("ds"), "--out".into(), p("fit"), "--max-iters".into(), "300".into()],
        vec!["predict".into(), "--dataset".into(), p("ds"), "--factors".into(), p("fit/factors.txt"), "--out".into(), p("am.tsv")],
        vec!["evaluate".into(), "--dataset".into(), p("ds"), "--action-map".into(), p("am.tsv"), "--out".into(), p("eval")],
    ];
    for args in steps {
        println!("$ action-maps {}", args.join(" "));
        let code = run(std::iter::once("action-maps".to_string()).chain(args));
        assert_eq!(code, 0);
    }
    print!("{}", std::fs::read_to_string(dir.join("eval/report.tsv")).unwrap());
    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
