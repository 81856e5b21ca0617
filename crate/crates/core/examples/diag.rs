use qsobolev::geometry::{BoxDomain, Region, SingularFace};
use qsobolev::quadrature::{integrate, Grading, QuadOpts};

fn main() {
    // 1-D: integral of x^{-1.2} over [eps, 0.1]: exact 5(eps^{-0.2} - 0.1^{0.2}... )
    for eps in [1e-10f64, 1e-14, 1e-18] {
        let t = std::time::Instant::now();
        let r = integrate(
            |x: &[f64]| x[0].powf(-1.2),
            &Region::Box(BoxDomain::interval(eps, 0.1)),
            &Grading::new(vec![SingularFace::exact(0, 0.0, -1.2)], vec![]),
            &QuadOpts::default(),
        )
        .unwrap();
        let exact = 5.0 * (eps.powf(-0.2) - 0.1f64.powf(-0.2));
        println!(
            "1-D eps={eps:e}: got {:.6e} exact {:.6e} rel {:.2e} cells {} conv {} [{} ms]",
            r.value,
            exact,
            (r.value - exact).abs() / exact,
            r.cells_used,
            r.converged,
            t.elapsed().as_millis()
        );
    }
    // 2-D with a smooth factor
    let t = std::time::Instant::now();
    let eps = 1e-14f64;
    let r = integrate(
        |x: &[f64]| x[0].powf(-1.2) * (x[1] * std::f64::consts::PI).sin().powi(2),
        &Region::Box(BoxDomain::new(vec![eps, 0.0], vec![0.1, 1.0]).unwrap()),
        &Grading::new(vec![SingularFace::exact(0, 0.0, -1.2)], vec![]),
        &QuadOpts::default(),
    )
    .unwrap();
    let exact = 5.0 * (eps.powf(-0.2) - 0.1f64.powf(-0.2)) * 0.5;
    println!(
        "2-D eps={eps:e}: got {:.6e} exact {:.6e} rel {:.2e} cells {} conv {} [{} ms]",
        r.value,
        exact,
        (r.value - exact).abs() / exact,
        r.cells_used,
        r.converged,
        t.elapsed().as_millis()
    );
}
