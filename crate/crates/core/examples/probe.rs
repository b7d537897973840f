use num_complex::Complex64 as C64;
use spinboson::distributions::TestFunction;
use spinboson::multiscale::{t_n_r_eta, t_n_r_eta_oracle, MultiscaleParams, UKernel};

fn main() {
    let g = TestFunction::bump(0.45, 0.15);
    let u = UKernel::Pole { pole: C64::new(1.0, -0.05) };
    let p = MultiscaleParams::new(0.2, 1e-4, 0.25, 1.05, 4, 0.15, 1.0).unwrap();
    let direct = t_n_r_eta(&g, &u, 0.0, &p, 5, 5.0, 1e-3).unwrap();
    let oracle = t_n_r_eta_oracle(&g, &u, 0.0, &p, 5, 5.0, 1e-3).unwrap();
    println!("direct {direct}");
    println!("oracle {oracle}");
    println!("diff {:.3e}", (direct - oracle).norm());
}
