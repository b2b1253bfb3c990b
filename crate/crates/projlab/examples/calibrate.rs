// Temporary calibration harness (not shipped): prints the empirical numbers
// the acceptance thresholds are frozen from.

use std::time::Instant;

use projlab::diagnostics::{asymptotic_ratio, gamma_partial_sums, growth_exponent, AsymptoticModel};
use projlab::experiments::{
    conified_run, flat_recurrence_run, positive_polyhedral_run, ConifiedRunSpec, FlatRunSpec,
    PolyhedralRunSpec, POLYHEDRAL_GAMMAS,
};
use projlab::{FlatFamily, Tolerances};

fn main() {
    let tol = Tolerances::default();
    let fam = FlatFamily::new(1.0, 2).unwrap();
    let model = AsymptoticModel::for_flat_family(&fam);

    // --- flat run, 1e6 steps ---
    let t0 = Instant::now();
    let flat = flat_recurrence_run(&FlatRunSpec::new(fam.clone(), 0.5, 1_000_000).unwrap(), &tol)
        .unwrap();
    println!("flat run 1e6: {:?}, max residual {:e}", t0.elapsed(), flat.max_residual);
    let ratios = asymptotic_ratio(&flat.u, &model, &[1_000, 10_000, 100_000, 1_000_000]).unwrap();
    println!("u ratios at decades: {ratios:?}");
    let devs: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
    println!("|ratio-1|: {devs:?}");

    let checkpoints = vec![10, 100, 1_000, 10_000, 100_000, 500_000, 1_000_000];
    // interleaved norms: 2e6 of them; checkpoints in PAIR indices vs step
    // indices -- compute both readings of the gamma=2 tail
    let sums_pairs = gamma_partial_sums(
        &flat.step_norms,
        &[0.5, 1.0, 2.0],
        &checkpoints.iter().map(|c| c * 2).collect::<Vec<_>>(),
    )
    .unwrap();
    println!(
        "gamma=2 tail over pairs 5e5..1e6 (steps 1e6..2e6): {:e}",
        sums_pairs.tail(2.0, 1_000_000, 2_000_000).unwrap()
    );
    let sums_steps = gamma_partial_sums(&flat.step_norms, &[0.5, 1.0, 2.0], &checkpoints).unwrap();
    println!(
        "gamma=2 tail over steps 5e5..1e6: {:e}",
        sums_steps.tail(2.0, 500_000, 1_000_000).unwrap()
    );
    // growth exponent for gamma = 1 over last two decades (pair indexing)
    let decade_sums = gamma_partial_sums(
        &flat.step_norms,
        &[1.0, 2.0],
        &[20, 200, 2_000, 20_000, 200_000, 2_000_000],
    )
    .unwrap();
    println!(
        "gamma=1 growth exponent (last two decades): {}",
        growth_exponent(&decade_sums, 1.0).unwrap()
    );
    println!(
        "gamma=2 growth exponent: {}",
        growth_exponent(&decade_sums, 2.0).unwrap()
    );

    // --- conified run, 1e5 pairs ---
    let t0 = Instant::now();
    let conified = conified_run(
        &ConifiedRunSpec::new(fam.clone(), 1.0, 0.3, 100_000).unwrap(),
        &tol,
    )
    .unwrap();
    println!("conified run 1e5 pairs: {:?}", t0.elapsed());
    println!("  max ratio residual {:e}", conified.max_ratio_residual);
    println!(
        "  final a {} final b {} first coord {}",
        conified.a.last().unwrap(),
        conified.b.last().unwrap(),
        conified.trajectory.final_point()[0]
    );
    let rb = asymptotic_ratio(&conified.b, &model, &[1_000, 10_000, 100_000]).unwrap();
    println!("  b ratios: {rb:?}");

    // cross-section at n = 1e4
    let ru = asymptotic_ratio(&flat.u, &model, &[10_000]).unwrap()[0];
    let rb4 = asymptotic_ratio(&conified.b, &model, &[10_000]).unwrap()[0];
    println!(
        "cross-section at 1e4: ru={ru} rb={rb4} relgap={}",
        (ru - rb4).abs() / rb4
    );

    // --- polyhedral run, seed 1 ---
    let t0 = Instant::now();
    let poly = positive_polyhedral_run(
        &PolyhedralRunSpec {
            seed: 1,
            dim: 4,
            n_cones: 3,
            rows_per_cone: 4,
            lambda_min: 0.3,
            n_steps: 10_000,
        },
        &tol,
    )
    .unwrap();
    println!("polyhedral run 1e4: {:?}", t0.elapsed());
    for g in POLYHEDRAL_GAMMAS {
        println!(
            "  gamma={g}: S(1e4)={:.6e} tail={:.3e}",
            poly.sums.sum_at(g, 10_000).unwrap(),
            poly.sums.tail(g, 5_000, 10_000).unwrap()
        );
    }
    let norms = poly.trajectory.step_norms();
    let nonzero_after = norms.iter().rposition(|&n| n > 0.0);
    println!("  last nonzero step norm at index {nonzero_after:?}");
}
