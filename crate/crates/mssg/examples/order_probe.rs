// temp probe for step-halving order measurement
use mssg::mixture::model;
use mssg::trajectory::{type2_solve, SolverOptions};

fn main() {
    let s: f64 = 1.5;
    let m = model(
        &[0.5, 0.5],
        &[0.0, 0.0],
        &[
            (&[2, 0], s * s),
            (&[1, 1], s * s),
            (&[0, 2], s * s),
            (&[4, 0], s.powi(4)),
            (&[0, 4], s.powi(4)),
        ],
    );
    let run = |dq: f64| {
        let opts = SolverOptions { dq, eps_start: 1e-6 };
        let seg = type2_solve(&m, &[0.0, 0.0], &[1.3, 0.7], &opts).unwrap();
        (seg.q_end, seg.last_phi()[0], seg.last_phi()[1])
    };
    let refv = run(1e-3);
    for dq in [6.4e-2, 3.2e-2, 1.6e-2, 8e-3] {
        let v = run(dq);
        println!(
            "dq={dq:.1e}  err_q2={:.3e}  err_phi0={:.3e} err_phi1={:.3e}",
            (v.0 - refv.0).abs(),
            (v.1 - refv.1).abs(),
            (v.2 - refv.2).abs()
        );
    }
}
