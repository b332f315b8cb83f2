//! The twelve acceptance criteria, run in order with one PASS/FAIL line
//! each. Built with `harness = false`; exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reslab::analytic::checks::{factorization_check, factorization_grid, trig_check};
use reslab::analytic::SeriesFactorization;
use reslab::arith::{kronecker, primes_up_to};
use reslab::charsums::scan::combine_chunks;
use reslab::charsums::scan::quadratic_forms_oracle;
use reslab::charsums::{
    afe_central_value, afe_oracle, orthogonality_check, sigma1, sigma2, DiscriminantScan, PartialSumKernel, WorkLimits,
};
use reslab::cli::config::RunConfig;
use reslab::cli::ratio::{run_ratio, RatioOptions, RatioOutcome};
use reslab::cli::report::RunReport;
use reslab::cli::verify::{contour_rows, small_table};
use reslab::resonator::{assign_signs, build_params, CoefficientTable, Mode, Overrides};
use reslab::sieve::{admissible_alpha, sieve_inequality_check, DEFAULT_SIGMAS};
use reslab::smoothing::{canonical_smoothness_constant, ExpGlueBump};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, secs: u64) -> Result<(), String> {
    ensure(
        elapsed <= Duration::from_secs(secs),
        format!("took {:.1}s, budget {secs}s", elapsed.as_secs_f64()),
    )
}

fn explicit_table(a: f64, d: f64, l: f64, x: f64, b: f64, z: Option<f64>) -> CoefficientTable {
    let o = Overrides {
        l: Some(l),
        x: Some(x),
        b: Some(b),
        z,
        ..Default::default()
    };
    CoefficientTable::new(&build_params(a, d, Mode::Explicit, &o).unwrap()).unwrap()
}

fn complete(cfg: &RunConfig) -> Box<RunReport> {
    match run_ratio(cfg, &RatioOptions::default()).unwrap() {
        RatioOutcome::Complete(r, _) => r,
        RatioOutcome::Interrupted { .. } => panic!("run interrupted without a stop request"),
    }
}

fn euler_oracle(m: i64, p: u64) -> i32 {
    if p == 2 {
        return match m.rem_euclid(8) {
            1 | 7 => 1,
            3 | 5 => -1,
            _ => 0,
        };
    }
    let a = m.rem_euclid(p as i64) as u64;
    if a == 0 {
        return 0;
    }
    // a^((p-1)/2) mod p by repeated squaring
    let (mut base, mut e, mut acc) = (a, (p - 1) / 2, 1u64);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    if acc == 1 {
        1
    } else {
        -1
    }
}

fn c01_kronecker() -> Outcome {
    let t = Instant::now();
    let mut pairs = 0u64;
    for p in primes_up_to(1999) {
        for m in -1999i64..2000 {
            pairs += 1;
            let (k, o) = (kronecker(m, p as i64), euler_oracle(m, p));
            ensure(k == o, format!("({m}|{p}) = {k}, oracle {o}"))?;
        }
    }
    within(t.elapsed(), 10)?;
    Ok(format!("{pairs} pairs"))
}

fn c02_orthogonality() -> Outcome {
    let t = Instant::now();
    let mut worst = (0.0f64, 0.0f64);
    for (d, tol) in [(1e5, 0.02), (1e6, 0.007)] {
        for n in [1u64, 9, 25, 225] {
            let r = orthogonality_check(n, d).map_err(|e| e.to_string())?;
            ensure(
                r.relative_error <= tol,
                format!("D = {d}, n = {n}: relative error {:.4} > {tol}", r.relative_error),
            )?;
            if r.relative_error > worst.0 {
                worst = (r.relative_error, d);
            }
        }
    }
    within(t.elapsed(), 60)?;
    Ok(format!("worst relative error {:.5} (D = {:e})", worst.0, worst.1))
}

fn c03_pigeonhole() -> Outcome {
    let configs = [
        "D = 200\nL = 1.45\nx = 20\nB = 20\nZ = 40\n",
        "D = 3000\nL = 1.45\nx = 20\nB = 20\n",
        "D = 50000\nL = 1.45\nx = 60\nB = 56\n",
        "D = 1e5\n",
    ];
    for text in configs {
        let r = complete(&RunConfig::parse(text).unwrap()).result;
        ensure(
            r.extremal_value <= r.ratio + 1e-9 * r.ratio.abs(),
            format!("min {} above ratio {} for {text:?}", r.extremal_value, r.ratio),
        )?;
        ensure(r.pigeonhole_holds, "pigeonhole flag unset")?;
    }
    // tiny instances: d-outer scan against the ℓ₁ℓ₂-outer expansion
    let mut worst: f64 = 0.0;
    for (d, z) in [(200.0, 40.0), (150.0, 36.0), (120.0, 20.0)] {
        let base = explicit_table(1.0 / 9.0, d, 1.45, 20.0, 20.0, Some(z));
        ensure(base.support().len() <= 8, format!("support {} > 8", base.support().len()))?;
        let kernel = PartialSumKernel::new(&base, 20.0).unwrap();
        let signs = assign_signs(&base, |y| kernel.s_of_y(y)).unwrap();
        let table = base.with_signs(&signs).unwrap();
        let scan = DiscriminantScan::new(&table, &ExpGlueBump, &WorkLimits::default(), false).unwrap();
        let totals = combine_chunks(&scan.run_all());
        let (num, den) = quadratic_forms_oracle(&table, &ExpGlueBump).unwrap();
        let (a, b) = (totals.numerator / totals.denominator, num / den);
        let gap = (a - b).abs() / b.abs().max(1e-300);
        ensure(gap <= 1e-9, format!("D = {d}: scan {a} vs oracle {b}"))?;
        worst = worst.max(gap);
    }
    Ok(format!("{} runs; tiny-oracle max relative gap {worst:.2e}", configs.len()))
}

fn c04_sigma1_sign() -> Outcome {
    let t = Instant::now();
    let base = explicit_table(1.0 / 9.0, 1e6, 1.45, 60.0, 56.0, None);
    ensure(base.pplus().len() == 10, format!("|P+| = {}", base.pplus().len()))?;
    let x = base.params().x;
    let kernel = PartialSumKernel::new(&base, x).unwrap();
    let signs = assign_signs(&base, |y| kernel.s_of_y(y)).unwrap();
    let s1 = sigma1(&base.with_signs(&signs).unwrap(), &kernel);
    ensure(s1 <= 0.0, format!("Σ₁ = {s1} > 0"))?;
    for i in 0..signs.primes.len() {
        let mut flipped = signs.clone();
        flipped.epsilon[i] = -flipped.epsilon[i];
        let s1f = sigma1(&base.with_signs(&flipped).unwrap(), &kernel);
        ensure(
            s1f >= s1,
            format!("flip at p = {} lowers Σ₁: {s1f} < {s1}", signs.primes[i]),
        )?;
    }
    within(t.elapsed(), 60)?;
    Ok(format!("Σ₁ = {s1:.6e}, 10 flips checked"))
}

fn c05_sigma2_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for (l, x, b) in [(2.0, 200.0, 200.0), (1.45, 20.0, 20.0), (1.45, 60.0, 56.0)] {
        let base = explicit_table(1.0 / 9.0, 1e6, l, x, b, None);
        let kernel = PartialSumKernel::new(&base, x).unwrap();
        let signs = assign_signs(&base, |y| kernel.s_of_y(y)).unwrap();
        let table = base.with_signs(&signs).unwrap();
        let s2 = sigma2(&table, &kernel);
        let s = kernel.s_of_y(x).unwrap();
        let rel = (s2 - s).abs() / s.abs();
        ensure(rel <= 1e-12, format!("L = {l}, x = {x}: Σ₂ = {s2}, S(x) = {s}"))?;
        worst = worst.max(rel);
    }
    Ok(format!("max relative gap {worst:.2e}"))
}

fn c06_factorization() -> Outcome {
    let t = Instant::now();
    let series = SeriesFactorization::new(&small_table().unwrap());
    let rows = factorization_check(&series, &factorization_grid(), 1e-6).map_err(|e| e.to_string())?;
    ensure(rows.len() == 12, format!("{} grid points", rows.len()))?;
    for r in &rows {
        ensure(
            r.gap <= r.certificate && r.certificate <= 1e-6,
            format!("s = {}+{}i: gap {:e}, certificate {:e}", r.s_re, r.s_im, r.gap, r.certificate),
        )?;
    }
    within(t.elapsed(), 30)?;
    let max_gap = rows.iter().map(|r| r.gap).fold(0.0, f64::max);
    Ok(format!("max gap {max_gap:.2e} over 12 points"))
}

fn c07_contour() -> Outcome {
    let t = Instant::now();
    let rows = contour_rows(&[2.0, 5.0, 10.0], 1e-6).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for r in &rows {
        let gap = (r.direct - r.contour).abs();
        ensure(
            gap <= r.certificate,
            format!("y = {}: direct {} contour {} certificate {:e}", r.y, r.direct, r.contour, r.certificate),
        )?;
        worst = worst.max(gap);
    }
    within(t.elapsed(), 60)?;
    Ok(format!("max gap {worst:.2e}"))
}

fn c08_trig() -> Outcome {
    let t = Instant::now();
    let r = trig_check(200_000);
    let expected = (3.0 - 3f64.sqrt()) / 2.0;
    let f = |th: f64| (2.0 * th.cos() + 1.0) * th.cos();
    let pi = std::f64::consts::PI;
    ensure((r.minimum - expected).abs() <= 1e-9, format!("minimum {}", r.minimum))?;
    for th in [5.0 * pi / 6.0, 7.0 * pi / 6.0] {
        ensure((f(th) - expected).abs() <= 1e-9, format!("endpoint {th}: {}", f(th)))?;
    }
    within(t.elapsed(), 1)?;
    Ok(format!("minimum {:.12}", r.minimum))
}

fn c09_gallagher() -> Outcome {
    let t = Instant::now();
    let adm = admissible_alpha(&ExpGlueBump).map_err(|e| e.to_string())?;
    let alpha = 1.0 / (10.0 * std::f64::consts::PI * 4f64.ln());
    ensure((adm.alpha - alpha).abs() <= 1e-15, format!("α = {}", adm.alpha))?;
    ensure((adm.constant * adm.inf_fhat_sq - 1.0).abs() <= 1e-12, "constant is not 1/inf|f̂|²")?;
    let r = sieve_inequality_check(100, 20_240_601, &DEFAULT_SIGMAS, &adm).map_err(|e| e.to_string())?;
    ensure(r.failures == 0, format!("{} failures", r.failures))?;
    let baseline = 0.475_640_087_483_524;
    ensure(
        (r.worst_ratio - baseline).abs() <= 1e-9 * baseline,
        format!("worst ratio {} moved from {baseline}", r.worst_ratio),
    )?;
    within(t.elapsed(), 120)?;
    Ok(format!("100 trials, worst ratio {:.12}", r.worst_ratio))
}

fn c10_afe() -> Outcome {
    let t = Instant::now();
    let mut count = 0;
    let mut max_gap: f64 = 0.0;
    for d in (1..=1250u64).filter(|&d| reslab::arith::is_valid_core(d)) {
        let v = afe_central_value(d).map_err(|e| e.to_string())?.value;
        let o = afe_oracle(d).map_err(|e| e.to_string())?.value;
        ensure((v - o).abs() <= 1e-6, format!("d = {d}: afe {v} oracle {o}"))?;
        ensure(v >= -1e-6, format!("d = {d}: value {v} < 0"))?;
        max_gap = max_gap.max((v - o).abs());
        count += 1;
    }
    within(t.elapsed(), 300)?;
    Ok(format!("{count} discriminants, max gap {max_gap:.2e}"))
}

fn c11_desk_run() -> Outcome {
    let t = Instant::now();
    let cfg = RunConfig::parse("mode = explicit\nD = 1e6\nL = 2\nx = 200\nB = 200\nseed = 20240601\n").unwrap();
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let first = pool(8).install(|| complete(&cfg));
    let second = pool(3).install(|| complete(&cfg));
    let r = &first.result;
    ensure(r.extremal_value < 0.0, format!("extremal value {} is not negative", r.extremal_value))?;
    ensure(
        r.extremal_value <= r.ratio + 1e-9 * r.ratio.abs(),
        format!("extremal {} above ratio {}", r.extremal_value, r.ratio),
    )?;
    let (a, b) = (serde_json::to_string(&first).unwrap(), serde_json::to_string(&second).unwrap());
    ensure(a == b, "reports differ between runs")?;
    within(t.elapsed(), 600)?;
    Ok(format!(
        "8d* = {}, T(d*) = {:.6}, N/D = {:.6}",
        r.extremal_discriminant, r.extremal_value, r.ratio
    ))
}

fn c12_derivative_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let c_phi = canonical_smoothness_constant();
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let l = rng.gen_range(1.35..2.5);
        let x = rng.gen_range(20.0..300.0f64);
        let table = explicit_table(1.0 / 9.0, 1e6, l, x, x, None);
        let kernel = PartialSumKernel::new(&table, x).unwrap();
        for _ in 0..20 {
            let y = rng.gen_range(1.0..x);
            let (lhs, rhs) = kernel.derivative_bound_check(y).map_err(|e| e.to_string())?;
            ensure(lhs <= rhs, format!("L = {l}, x = {x}, y = {y}: {lhs} > {rhs}"))?;
            if rhs > 0.0 {
                worst = worst.max(lhs / rhs);
            }
        }
    }
    Ok(format!("C_φ = {c_phi:.6}, max |yS'|/(C_φ S*) = {worst:.4}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("kronecker oracle", c01_kronecker),
        ("orthogonality", c02_orthogonality),
        ("pigeonhole exactness", c03_pigeonhole),
        ("sigma1 sign", c04_sigma1_sign),
        ("sigma2 identity", c05_sigma2_identity),
        ("factorization", c06_factorization),
        ("contour equivalence", c07_contour),
        ("trig inequality", c08_trig),
        ("gallagher sieve", c09_gallagher),
        ("afe cross-check", c10_afe),
        ("desk negativity", c11_desk_run),
        ("derivative bound", c12_derivative_bound),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name} [{secs:.1}s] {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name} [{secs:.1}s] {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
