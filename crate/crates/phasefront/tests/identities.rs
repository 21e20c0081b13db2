use phasefront::convexity::random_monotone_profile;
use phasefront::functionals::{interaction_2c, interaction_measure_form_2c, phi_identity_1c};
use phasefront::solvers::front_bulk;
use phasefront::{Grid, Kernel, MonotoneProfile, Stencil, WPotential};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn kernels() -> Vec<Kernel> {
    vec![Kernel::box_kernel(1.0, 1.0).unwrap(), Kernel::triangle(1.0, 1.0).unwrap(), Kernel::truncated_gaussian(1.5, 0.5, 1.0).unwrap()]
}

fn binary_pair(seed: u64, g: &Grid, rm: f64, rp: f64) -> (MonotoneProfile, MonotoneProfile) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = random_monotone_profile(g, rm, rp, 4.0, &mut rng).unwrap();
    let n = random_monotone_profile(g, rp, rm, 4.0, &mut rng).unwrap();
    (m, n)
}

/// Cellwise odd part, `i ↔ n - 1 - i`.
fn odd_part(p: &MonotoneProfile) -> MonotoneProfile {
    let n = p.values.len();
    let v = (0..n).map(|i| 0.5 * (p.values[i] - p.values[n - 1 - i])).collect();
    MonotoneProfile::with_tol(p.grid, v, p.a, p.b, f64::INFINITY).unwrap()
}

#[test]
fn measure_form_matches_direct_quadrature_on_binary_pairs() {
    let g = Grid::centered_cells(240, 0.04).unwrap();
    let bulk = front_bulk(4.0, 1.0, 1.0).unwrap();
    for (ki, k) in kernels().iter().enumerate() {
        let st = Stencil::new(k, g.h).unwrap();
        let w = WPotential::two_component(k).unwrap();
        for seed in 0..7 {
            let (m, n) = binary_pair(seed + 100 * ki as u64, &g, bulk.rho_minus, bulk.rho_plus);
            let direct = interaction_2c(&m, &n, &st).unwrap();
            let mf = interaction_measure_form_2c(&m, &n, &w).unwrap();
            assert!((mf.total - direct).abs() < 1e-4 * direct.abs(), "kernel {ki} seed {seed}: {} vs {direct}", mf.total);
            assert!((mf.total - mf.w_term - mf.constant_term - mf.moment_term).abs() < 1e-15);
        }
    }
}

#[test]
fn printed_constant_is_off_by_a_fixed_multiple_of_alpha() {
    let g = Grid::centered_cells(240, 0.04).unwrap();
    let bulk = front_bulk(4.0, 1.0, 1.0).unwrap();
    let k = &kernels()[0];
    let w = WPotential::two_component(k).unwrap();
    let (m, n) = binary_pair(3, &g, bulk.rho_minus, bulk.rho_plus);
    let mf = interaction_measure_form_2c(&m, &n, &w).unwrap();
    let (a, b, c, d) = (m.a, m.b, n.a, n.b);
    let expect = ((b - a) * (d - c) + b * c + a * d) * w.w_offset;
    assert!((mf.printed_constant_term - mf.constant_term - expect).abs() < 1e-14);
}

#[test]
fn binary_measure_form_is_translation_invariant() {
    let g = Grid::centered_cells(300, 0.04).unwrap();
    let bulk = front_bulk(3.5, 1.0, 1.0).unwrap();
    for k in &kernels()[..2] {
        let w = WPotential::two_component(k).unwrap();
        for seed in 0..5 {
            let (m, n) = binary_pair(seed, &g, bulk.rho_minus, bulk.rho_plus);
            let base = interaction_measure_form_2c(&m, &n, &w).unwrap().total;
            for shift in [-40.0, 13.0, 75.0] {
                let t = shift * g.h;
                let moved = interaction_measure_form_2c(&m.translate(t), &n.translate(t), &w).unwrap().total;
                assert!((moved - base).abs() < 1e-8, "seed {seed} shift {shift}: {moved} vs {base}");
            }
        }
    }
}

#[test]
fn odd_front_identity_holds_with_the_corrected_constant() {
    let g = Grid::centered_cells(240, 0.04).unwrap();
    let mb = 0.8;
    for (ki, k) in kernels().iter().enumerate() {
        let st = Stencil::new(k, g.h).unwrap();
        let w = WPotential::two_component(k).unwrap();
        for seed in 0..7 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 7 * ki as u64);
            let m = odd_part(&random_monotone_profile(&g, -mb, mb, 4.0, &mut rng).unwrap());
            let id = phi_identity_1c(&m, &st, &w).unwrap();
            assert!((id.measure_form - id.direct).abs() < 1e-4 * id.direct.abs(), "kernel {ki} seed {seed}: {id:?}");
            assert!((id.printed - id.measure_form + 10.0 * w.w_offset * mb * mb).abs() < 1e-12);
        }
    }
}

#[test]
fn sharp_odd_front_with_box_kernel() {
    let g = Grid::centered_cells(100, 0.05).unwrap();
    let k = &kernels()[0];
    let st = Stencil::new(k, g.h).unwrap();
    let w = WPotential::two_component(k).unwrap();
    let mb: f64 = 0.6;
    let m = MonotoneProfile::step(g, -mb, mb, 0.0).unwrap();
    let id = phi_identity_1c(&m, &st, &w).unwrap();
    assert!((id.direct + mb * mb).abs() < 1e-12);
    assert!((id.measure_form + mb * mb).abs() < 1e-12);
    // the printed right side evaluates to 3/2 m_β²
    assert!((id.printed - 1.5 * mb * mb).abs() < 1e-12);
}
