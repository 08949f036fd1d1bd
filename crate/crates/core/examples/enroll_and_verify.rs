// Few-shot enrollment and best-match verification on plain vectors, with
// the enrollment set saved and restored.
//
// cargo run -p tinysv --example enroll_and_verify

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tinysv::asv::{mcs_similarity, sv_decide, DVector, EnrollmentSet, SvDecision};

fn around(centre: &[f32], spread: f32, rng: &mut ChaCha8Rng) -> DVector {
    let noise = Normal::new(0.0, spread).unwrap();
    DVector::new(centre.iter().map(|c| c + noise.sample(rng)).collect()).unwrap()
}

/// Returns the decisions for one genuine and one impostor probe, made with
/// an enrollment set that went through a save/load cycle.
pub fn run_example() -> tinysv::Result<(SvDecision, SvDecision)> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let me: Vec<f32> = (0..64).map(|i| (i as f32 * 0.37).sin()).collect();
    let other: Vec<f32> = (0..64).map(|i| (i as f32 * 0.91).cos()).collect();

    let mut set = EnrollmentSet::new(64, 8, 0.8)?;
    for _ in 0..8 {
        let p = set.enroll(around(&me, 0.2, &mut rng))?;
        println!("enrolled {}/{}", p.filled, p.capacity);
    }
    let path = std::env::temp_dir().join("tinysv-example-enrollment.bin");
    set.save(&path)?;
    let set = EnrollmentSet::load(&path)?;
    let _ = std::fs::remove_file(&path);

    let genuine = around(&me, 0.2, &mut rng);
    let impostor = around(&other, 0.2, &mut rng);
    let g = sv_decide(&genuine, &set)?;
    let i = sv_decide(&impostor, &set)?;
    println!(
        "genuine:  sigma {:.3} (vector {}), z = {}; mean-vector score {:.3}",
        g.sigma,
        g.best_index,
        g.z,
        mcs_similarity(&genuine, &set)?
    );
    println!("impostor: sigma {:.3}, z = {}", i.sigma, i.z);
    Ok((g, i))
}

#[allow(dead_code)]
fn main() -> tinysv::Result<()> {
    run_example().map(|_| ())
}
