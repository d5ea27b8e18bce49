//! Cross-module invariants: the sketched operator really is a usable
//! surrogate for the full one.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tomosketch::image::Image;
use tomosketch::operators::{ls_gradient, project};
use tomosketch::simulate::{make_phantom, GeometryPreset, PhantomSpec, DOMAIN_SIDE};
use tomosketch::sketch::{downsample, make_sketched_geometry, upsample, ResampleSpec};

/// Smooth analytic blob, rasterized independently at any grid size.
fn gaussian_blob(size: usize) -> Image {
    let pixel_size = DOMAIN_SIDE / size as f64;
    let sigma = 0.35;
    Image::from_fn(size, size, pixel_size, |r, c| {
        let y = -1.0 + (r as f64 + 0.5) * pixel_size;
        let x = -1.0 + (c as f64 + 0.5) * pixel_size;
        (-(x * x + y * y) / (2.0 * sigma * sigma)).exp()
    })
}

#[test]
fn projections_are_consistent_across_resolutions() {
    // Rasterize the same analytic object at 256 and 64 pixels per side
    // (pixel size x4) and project both on the same trajectory.
    let fine_geometry = GeometryPreset::SparseView.build(256).unwrap();
    let coarse_geometry = fine_geometry.with_coarsened_grid(4).unwrap();
    let fine = gaussian_blob(256);
    let coarse = gaussian_blob(64);
    let s_fine = project(&fine, &fine_geometry).unwrap();
    let s_coarse = project(&coarse, &coarse_geometry).unwrap();
    let rel = s_coarse.axpy(-1.0, &s_fine).norm() / s_fine.norm();
    println!("resolution consistency 256 vs 64: relative error {rel:.4}");
    assert!(rel <= 0.05, "cross-resolution sinogram error {rel}");
}

#[test]
fn down_up_composition_error_is_small_on_smooth_images() {
    let blob = gaussian_blob(256);
    let spec2 = ResampleSpec::bicubic(2);
    let round2 = upsample(&downsample(&blob, &spec2).unwrap(), &spec2).unwrap();
    let rel2 = round2.axpy(-1.0, &blob).norm() / blob.norm();
    println!("U(S(x)) blob error at factor 2: {rel2:.4}");
    assert!(rel2 <= 0.05, "factor-2 composition error {rel2}");

    // The discontinuous disks phantom at factor 4 is only logged; its
    // edges necessarily alias.
    let disks = make_phantom(&PhantomSpec::disks(256)).unwrap();
    let spec4 = ResampleSpec::bicubic(4);
    let round4 = upsample(&downsample(&disks, &spec4).unwrap(), &spec4).unwrap();
    let rel4 = round4.axpy(-1.0, &disks).norm() / disks.norm();
    println!("U(S(x)) disks error at factor 4: {rel4:.4}");
}

#[test]
fn upsampled_coarse_gradient_aligns_with_full_gradient() {
    use tomosketch::denoise::DenoiserSpec;
    use tomosketch::operators::CostModel;
    use tomosketch::simulate::{simulate_measurements, NoiseSpec};
    use tomosketch::solvers::{auto_step_size, pnp_fista_with};

    let g = GeometryPreset::SparseView.build(256).unwrap();
    let phantom = make_phantom(&PhantomSpec::disks(256)).unwrap();
    let b = simulate_measurements(&phantom, &g, &NoiseSpec::new(10f64.powf(5.5), 9).unwrap())
        .unwrap();

    // Grab a mid-run iterate of the baseline solver; that is where the
    // sketched gradient has to be a usable surrogate.
    let x0 = Image::zeros(256, 256, g.grid.pixel_size);
    let step = auto_step_size(&g);
    let picked_iter = ChaCha8Rng::seed_from_u64(77).random_range(5..12);
    let mut x = x0.clone();
    pnp_fista_with(
        &b,
        &g,
        &DenoiserSpec::tv_prox(2e-4),
        1.0,
        picked_iter,
        step,
        &x0,
        None,
        &CostModel::default(),
        &mut |s| x = s.x.clone(),
    )
    .unwrap();

    let full = ls_gradient(&x, &b, &g).unwrap();

    let factor = 2;
    let sk = make_sketched_geometry(&g, factor).unwrap();
    let spec = ResampleSpec::bicubic(factor);
    let v = downsample(&x, &spec).unwrap();
    let coarse = ls_gradient(&v, &b, &sk.coarse).unwrap();
    let surrogate = upsample(&coarse, &spec).unwrap();

    let cosine = surrogate.dot(&full) / (surrogate.norm() * full.norm());
    println!(
        "gradient surrogate cosine similarity at factor 2, iterate {picked_iter}: {cosine:.4}"
    );
    assert!(cosine >= 0.8, "cosine similarity {cosine}");
}
