use kmfg::config::{Command, RunConfig};
use proptest::prelude::*;

fn command() -> impl Strategy<Value = Command> {
    prop::sample::select(Command::ALL.to_vec())
}

proptest! {
    #[test]
    fn file_and_json_agree(
        cmd in command(),
        beta in 0.01f64..10.0,
        kappa in 0.0f64..10.0,
        half_n in 8usize..2048,
        gammas in prop::collection::vec(0.01f64..1e4, 1..6),
        seed in any::<u64>(),
    ) {
        let gl: Vec<String> = gammas.iter().map(|g| g.to_string()).collect();
        let text = format!(
            "beta = {beta}\n[{cmd}]\nkappa = {kappa}\nn = {}\ngammas = {}\nseed = {seed}\n",
            2 * half_n,
            gl.join(", ")
        );
        let mut c = RunConfig::defaults(cmd);
        c.apply_file(&text).unwrap();
        prop_assert_eq!(c.beta, beta);
        prop_assert_eq!(c.kappa, kappa);
        prop_assert_eq!(c.grid_n, 2 * half_n);
        prop_assert_eq!(&c.gammas, &gammas);
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn odd_or_small_grids_are_rejected(n in 0usize..4096) {
        let mut c = RunConfig::defaults(Command::Stationary);
        c.grid_n = n;
        prop_assert_eq!(c.validate().is_ok(), n >= 16 && n % 2 == 0);
    }
}
