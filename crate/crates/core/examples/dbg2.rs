use bumpbench::experiments::run_example_scan;
use bumpbench::report::RunConfig;

fn main() {
    let mut cfg = RunConfig::default();
    cfg.p = 2.0;
    cfg.n_list = vec![24, 56];
    let rep = run_example_scan(&cfg).unwrap();
    let mut worst1 = (0.0, 0.0, 0.0);
    let mut worst2 = (0.0, 0.0, 0.0);
    for r in &rep.rows {
        if r[2] > worst1.2 { worst1 = (r[0], r[1], r[2]); }
        if r[3] > worst2.2 { worst2 = (r[0], r[1], r[3]); }
    }
    println!("worst cl1: class={} n={} value={:.4}", worst1.0, worst1.1, worst1.2);
    println!("worst cl2: class={} n={} value={:.4}", worst2.0, worst2.1, worst2.2);
}
