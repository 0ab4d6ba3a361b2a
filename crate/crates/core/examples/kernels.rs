//! Location similarity: spatial RBF within a floor, chi-squared kernels on
//! scene-class and object-detection scores across floors.

use action_maps::side_info::{
    build_gram_matrix, combined_kernel, kernel_chi2, object_score, rbf, GramOptions, KernelConfig, KernelVariant,
    LocationFeatures,
};

pub fn run_example() -> action_maps::Result<()> {
    println!("rbf at distance sigma*sqrt(2): {:.6} (e^-1 = {:.6})", rbf([0.0, 0.0], [2f64.sqrt(), 0.0], 1.0), (-1f64).exp());
    println!("chi2 of disjoint one-hots, gamma 1: {:.6}", kernel_chi2(&[1.0, 0.0], &[0.0, 1.0], 1.0, 0.0)?);
    println!("object score at the detection: {:.6}", object_score(0.0));

    let kitchen = vec![0.1, 0.0, 0.8, 0.1];
    let office = vec![0.9, 0.05, 0.0, 0.05];
    let sink = vec![0.0, 1.0];
    let chair = vec![1.0, 0.0];
    let locs = vec![
        LocationFeatures::new(0, [2.0, 3.0], kitchen.clone(), sink.clone()),
        LocationFeatures::new(0, [3.0, 3.0], kitchen.clone(), vec![0.0, 0.0]),
        LocationFeatures::new(0, [9.0, 1.0], office.clone(), chair.clone()),
        // same kind of place on another floor
        LocationFeatures::new(1, [5.0, 5.0], kitchen, sink),
        LocationFeatures::new(1, [1.0, 7.0], office, chair),
    ];

    for variant in KernelVariant::ALL {
        let cfg = KernelConfig { variant, gamma_p: 10.0, gamma_o: 10.0, ..KernelConfig::default() };
        let k = build_gram_matrix(&locs, &cfg, &GramOptions::default())?;
        print!("{:<4}", variant.as_str());
        for i in 0..locs.len() {
            print!(" [{}]", (0..locs.len()).map(|j| format!("{:.2}", k.get(i, j))).collect::<Vec<_>>().join(" "));
        }
        println!();
    }
    let cfg = KernelConfig { gamma_p: 10.0, gamma_o: 10.0, ..KernelConfig::default() };
    println!("sink to sink across floors: {:.3}", combined_kernel(&locs[0], &locs[3], &cfg));
    println!("sink to chair across floors: {:.3}", combined_kernel(&locs[0], &locs[4], &cfg));
    Ok(())
}

fn main() {
    run_example().unwrap();
}
