mod common;

use anosov_core::lie::random::{random_element, random_flag};
use anosov_core::lie::*;
use anosov_core::measure::*;
use anosov_core::metrics::*;
use anosov_core::orbit::*;
use anosov_core::words::{enumerate_words, Word};
use anosov_core::Error;
use common::{rng, table};
use nalgebra::DMatrix;

/// Relative slack allowed when a residual is compared across depths.
const MONOTONE_SLACK: f64 = 0.10;
/// Cocycle identities evaluated in floating point.
const IDENTITY_TOL: f64 = 1e-8;
/// Shadow radius used for the mass band; above the generator shadows' threshold.
const SHADOW_R: f64 = 1.5;

fn tangent() -> LinearForm {
    tangent_scan(&table("schottky3", 10), 9).unwrap().psi
}

fn measure(max_len: usize, psi: &LinearForm) -> DiscreteMeasure {
    build_ps(&table("schottky3", max_len), psi, default_floor(max_len)).unwrap()
}

fn generators(t: &OrbitTable) -> Vec<Word> {
    t.alphabet().letters().map(|l| Word::reduce([l])).collect()
}

#[test]
fn identity_only_table_has_no_atoms() {
    let t = table("schottky3", 0);
    let err = build_ps(&t, &LinearForm::two_rho(3), 1).unwrap_err();
    assert!(matches!(err, Error::Precision(_)), "{err}");
    assert!(matches!(build_ps(&t, &LinearForm::two_rho(3), 0), Err(Error::Input(_))));
}

#[test]
fn cyclic_measure_sits_on_the_two_fixed_flags() {
    let r = rotation(0.7);
    let m = &r * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1f64.exp(), 0.2f64.exp(), (-1.2f64).exp()])) * r.transpose();
    let g = GroupElement::from_matrix(m).unwrap();
    let p = SchottkyPreset::new("cyclic", vec![g.clone()], 1, "test").unwrap();
    let t = OrbitTable::enumerate(&p, 10).unwrap();
    let nu = build_ps(&t, &LinearForm::two_rho(3), 5).unwrap();
    let plus = attracting_flag(&g).unwrap();
    let minus = attracting_flag(&g.inverse()).unwrap();
    let (mut m_plus, mut m_minus) = (0.0, 0.0);
    for i in 0..nu.len() {
        let f = nu.atom(i);
        // kappa_1(g^n) converges to g+ at rate e^{-n alpha_min(lambda(g))}.
        if f.distance(&plus) < 1e-2 {
            m_plus += nu.weight(i);
        } else {
            assert!(f.distance(&minus) < 1e-2, "atom {i} far from both fixed flags");
            m_minus += nu.weight(i);
        }
    }
    assert!(m_plus > 0.0 && m_minus > 0.0);
    assert!((m_plus + m_minus - 1.0).abs() < 1e-12);
}

fn rotation(angle: f64) -> DMatrix<f64> {
    let mut r = DMatrix::<f64>::identity(3, 3);
    r[(0, 0)] = angle.cos();
    r[(1, 1)] = angle.cos();
    r[(0, 1)] = -angle.sin();
    r[(1, 0)] = angle.sin();
    let s = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.6, -0.8, 0.0, 0.8, 0.6]);
    r * s
}

#[test]
fn build_is_deterministic_and_normalised() {
    let psi = LinearForm::two_rho(3);
    let a = measure(7, &psi);
    let b = build_ps(&table("schottky3", 7), &psi, default_floor(7)).unwrap();
    assert_eq!(a.len(), b.len());
    assert_eq!(a.len(), table("schottky3", 7).len() - table("schottky3", 7).sphere(3).start);
    for i in 0..a.len() {
        assert_eq!(a.weight(i).to_bits(), b.weight(i).to_bits());
        assert_eq!(a.atoms().frame(i), b.atoms().frame(i));
    }
    assert!((a.total() - 1.0).abs() < 1e-12);
    // Weights follow e^{-psi(mu)} up to the normaliser.
    let t = table("schottky3", 7);
    let (i, j) = (0, a.len() - 1);
    let expect = psi.eval_slice(t.mu_slice(a.rows()[j])) - psi.eval_slice(t.mu_slice(a.rows()[i]));
    assert!(((a.weight(i) / a.weight(j)).ln() - expect).abs() < 1e-9);
}

#[test]
fn measure_json_round_trip() {
    let nu = measure(5, &LinearForm::two_rho(3));
    let back = DiscreteMeasure::from_json(&nu.to_json()).unwrap();
    assert_eq!(back.len(), nu.len());
    assert_eq!(back.max_len, 5);
    assert_eq!(back.preset, "schottky3");
    for i in 0..nu.len() {
        assert!((back.weight(i) - nu.weight(i)).abs() < 1e-15);
        assert!(back.atom(i).distance(&nu.atom(i)) < 1e-12);
    }
    let v: serde_json::Value = serde_json::from_str(&nu.to_json()).unwrap();
    for key in ["psi", "L", "preset", "atoms"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn identity_has_zero_conformality_residual() {
    let psi = tangent();
    let nu = measure(6, &psi);
    let k = KernelFamily::from_atoms(&nu, 6, vec![0.05, 0.2]);
    let r = conformality_residual(&nu, &GroupElement::identity(3), &k);
    assert!(r.max < 1e-14 && r.constant_defect < 1e-12, "{r:?}");
}

#[test]
fn constant_defect_matches_direct_sum() {
    let psi = tangent();
    let t = table("schottky3", 6);
    let nu = measure(6, &psi);
    for g in generators(&t) {
        let h = t.element_of(&g);
        let r = conformality_residual(&nu, &h, &KernelFamily::from_atoms(&nu, 2, vec![0.1]));
        // Oracle: beta_xi(o, h o) from the Busemann function on explicit flags.
        let direct: f64 = (0..nu.len())
            .map(|i| {
                let b = busemann(&nu.atom(i), &GroupElement::identity(3), &h).unwrap();
                nu.weight(i) * psi.eval(&b).exp()
            })
            .sum();
        assert!((r.constant_defect - (direct - 1.0).abs()).abs() < 1e-10, "{g}");
    }
}

#[test]
fn conformality_residual_decreases_with_depth() {
    let psi = tangent();
    let res = |l: usize| {
        let t = table("schottky3", l);
        let nu = measure(l, &psi);
        let k = KernelFamily::from_atoms(&nu, 8, vec![0.05, 0.1, 0.2, 0.4]);
        generators(&t)
            .iter()
            .map(|g| conformality_residual(&nu, &t.element_of(g), &k).max)
            .collect::<Vec<_>>()
    };
    let (r6, r8, r10) = (res(6), res(8), res(10));
    for g in 0..4 {
        assert!(r8[g] <= r6[g] * (1.0 + MONOTONE_SLACK), "generator {g}: {} vs {}", r8[g], r6[g]);
        assert!(r10[g] <= r8[g] * (1.0 + MONOTONE_SLACK), "generator {g}: {} vs {}", r10[g], r8[g]);
    }
    assert!(r10.iter().zip(&r6).all(|(a, b)| a < b));
}

#[test]
fn shadow_of_identity_is_everything() {
    let nu = measure(6, &tangent());
    let s = shadow_mass_ratio(&nu, &GroupElement::identity(3), 5.0, ShadowOptions::default()).unwrap();
    assert!((s.ratio - 1.0).abs() < 1e-12 && s.members == nu.len() && !s.warning);
}

fn band(max_len: usize, psi: &LinearForm) -> Vec<(Word, f64)> {
    let t = table("schottky3", max_len);
    let nu = measure(max_len, psi);
    enumerate_words(t.alphabet(), 2)
        .into_iter()
        .map(|w| {
            let s = shadow_mass_ratio(&nu, &t.element_of(&w), SHADOW_R, ShadowOptions::default()).unwrap();
            assert!(!s.warning, "{w}: {s:?}");
            (w, s.ratio)
        })
        .collect()
}

#[test]
fn shadow_mass_band_is_bounded_and_stable() {
    let psi = tangent();
    let (b8, b10) = (band(8, &psi), band(10, &psi));
    let spread = |b: &[(Word, f64)]| {
        let mx = b.iter().map(|x| x.1).fold(0.0, f64::max);
        let mn = b.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        assert!(mn > 0.0);
        mx / mn
    };
    assert!(spread(&b8) < 1e3 && spread(&b10) < 1e3);
    for ((w, x), (_, y)) in b8.iter().zip(&b10) {
        assert!((x / y - 1.0).abs() < MONOTONE_SLACK, "{w}: {x} vs {y}");
    }
    // The tangent form is i-invariant, so gamma and gamma^-1 share the band.
    for (w, x) in &b10 {
        let inv = b10.iter().find(|(v, _)| *v == w.inverse()).unwrap().1;
        assert!((x / inv - 1.0).abs() < MONOTONE_SLACK, "{w}");
    }
}

#[test]
fn bms_factor_properties() {
    let psi = LinearForm::new(vec![0.7, 0.1, -0.8]);
    let std = HopfPoint {
        pair: FlagPair::new(Flag::standard(3), Flag::opposite(3)).unwrap(),
        b: CartanVector::zero(3),
    };
    assert!((bms_density(&std, &psi) - 1.0).abs() < 1e-14);
    let mut r = rng(11);
    for _ in 0..200 {
        let pair = match FlagPair::new(random_flag(3, &mut r), random_flag(3, &mut r)) {
            Ok(p) if p.margin() > 1e-3 => p,
            _ => continue,
        };
        let point = HopfPoint { pair, b: CartanVector::zero(3) };
        let h = random_element(3, 1.0, &mut r);
        assert!(bms_invariance_defect(&point, &h, &psi).unwrap() < IDENTITY_TOL);
        let swapped = HopfPoint { pair: point.pair.swapped(), b: CartanVector::zero(3) };
        let (f, g) = (bms_density(&point, &psi), bms_density(&swapped, &psi.opposite()));
        assert!((f / g - 1.0).abs() < IDENTITY_TOL);
    }
}

#[test]
fn br_factor_properties() {
    let psi = LinearForm::new(vec![0.7, 0.1, -0.8]);
    let nu = measure(5, &LinearForm::two_rho(3));
    let n = GroupElement::from_matrix(DMatrix::from_row_slice(3, 3, &[1.0, 2.0, -1.0, 0.0, 1.0, 3.0, 0.0, 0.0, 1.0])).unwrap();
    assert!((br_density(&n, &psi, &nu, 1e-9).unwrap().factor - 1.0).abs() < 1e-12);
    let v = [0.5, 0.2, -0.7];
    let a = GroupElement::exp_diag(&v);
    let expect = psi.eval(&CartanVector::new(v.to_vec())).exp();
    assert!((br_density(&a, &psi, &nu, 1e-9).unwrap().factor / expect - 1.0).abs() < 1e-12);
    let mut r = rng(12);
    for _ in 0..50 {
        let g = random_element(3, 1.0, &mut r);
        let f1 = br_density(&g, &psi, &nu, 1e-9).unwrap().factor;
        let f2 = br_density(&g.mul(&n), &psi, &nu, 1e-9).unwrap().factor;
        assert!((f1 / f2 - 1.0).abs() < IDENTITY_TOL);
    }
    // A rotation onto an atom picks up that atom's weight.
    let k = rotation_of(&nu.atom(7));
    let br = br_density(&k, &psi, &nu, 1e-9).unwrap();
    assert!(br.atom_distance < 1e-9 && (br.atom_weight - nu.weight(7)).abs() < 1e-15);
}

#[test]
fn hat_transport_preserves_mass() {
    let psi = tangent();
    let t = table("schottky3", 8);
    let nu = measure(8, &psi);
    let mut r = rng(13);
    let mut words = generators(&t);
    words.extend((0..4).map(|_| Word::random(t.alphabet(), 4, &mut r)));
    for w in words {
        let ratio = hat_transport_ratio(&nu, &t.element_of(&w));
        assert!((ratio - 1.0).abs() < IDENTITY_TOL, "{w}: {ratio}");
    }
}

fn quasi_metric_constant(psi: &LinearForm) -> f64 {
    let p = SchottkyPreset::builtin("schottky3").unwrap();
    let s = limit_sample(&p, 100, ZETA_DEPTH, &mut rng(14)).unwrap();
    triangle_constant(&limit_metric_sample(&p, &s, psi, ZETA_DEPTH).unwrap()).0
}

#[test]
fn essential_value_certificate_is_found_and_reverified() {
    let psi = tangent();
    let t = table("schottky3", 8);
    let nu = measure(8, &psi);
    let opts = EssentialOptions {
        n0: quasi_metric_constant(&psi),
        ..Default::default()
    };
    let g0 = Word::parse("aaa", t.alphabet()).unwrap();
    let cert = essential_value_search(&nu, &t, &g0, 0.5, &AtomSet::All, &opts).unwrap();
    assert!(cert.max_busemann_deviation < cert.epsilon && cert.set_mass > 0.0);
    assert!(!cert.conjugator.is_empty() && cert.conjugator.len() <= 8);
    let lam = jordan_projection(&t.preset().evaluate(&g0));
    assert!(cert.target.max_abs_diff(&lam) < 1e-12);
    let (dev, mass) = verify_certificate(&cert, &nu, &t, &AtomSet::All).unwrap();
    assert!(dev < cert.epsilon && (dev - cert.max_busemann_deviation).abs() < 1e-6);
    assert!(mass > 0.0 && (mass / cert.set_mass - 1.0).abs() < 1e-6);
    let json: serde_json::Value = serde_json::from_str(&cert.to_json()).unwrap();
    assert_eq!(json["gamma0"], "aaa");
}

#[test]
fn essential_value_search_on_a_ball() {
    let psi = tangent();
    let t = table("schottky3", 8);
    let nu = measure(8, &psi);
    let g0 = Word::parse("aaa", t.alphabet()).unwrap();
    let set = AtomSet::Ball {
        center: nu.atom(0),
        radius: 0.5,
    };
    let opts = EssentialOptions { n0: quasi_metric_constant(&psi), ..Default::default() };
    match essential_value_search(&nu, &t, &g0, 0.5, &set, &opts) {
        Ok(cert) => {
            let (dev, mass) = verify_certificate(&cert, &nu, &t, &set).unwrap();
            assert!(dev < 0.5 && mass > 0.0);
        }
        Err(e) => assert!(matches!(e, Error::NotFound(_)), "{e}"),
    }
}

#[test]
fn essential_value_search_guards() {
    let psi = tangent();
    let t = table("schottky3", 6);
    let nu = measure(6, &psi);
    // psi(lambda(a)) is about 1.41, below 1 + log 6.
    let weak = EssentialOptions { n0: 2.0, ..Default::default() };
    let a = Word::parse("a", t.alphabet()).unwrap();
    assert!(matches!(essential_value_search(&nu, &t, &a, 0.5, &AtomSet::All, &weak), Err(Error::Condition(_))));
    // Only gamma = e with a ball covering most atoms: the deviation is far above eps.
    let starved = EssentialOptions {
        n0: 1.0,
        radii: vec![1.0],
        max_conjugators: 1,
    };
    let g0 = Word::parse("aaa", t.alphabet()).unwrap();
    assert!(matches!(essential_value_search(&nu, &t, &g0, 0.5, &AtomSet::All, &starved), Err(Error::NotFound(_))));
    let empty = AtomSet::Ball {
        center: nu.atom(0),
        radius: 0.0,
    };
    assert!(matches!(essential_value_search(&nu, &t, &g0, 0.5, &empty, &weak), Err(Error::Condition(_)) | Err(Error::Input(_))));
}

fn random_targets(n: usize, seed: u64) -> Vec<FlagPair> {
    let p = SchottkyPreset::builtin("schottky3").unwrap();
    let s = limit_sample(&p, 2 * n, ZETA_DEPTH, &mut rng(seed)).unwrap();
    s.chunks(2).filter_map(|c| FlagPair::new(c[0].1.clone(), c[1].1.clone()).ok()).collect()
}

#[test]
fn myrberg_score_on_constructed_targets() {
    let t = table("schottky3", 5);
    let xi0 = attracting_flag(&t.element_of(&Word::parse("abAb", t.alphabet()).unwrap())).unwrap();
    let targets: Vec<FlagPair> = (1..t.len())
        .step_by(17)
        .filter_map(|i| FlagPair::new(t.kappa(i)?, flag_action(&t.element(i), &xi0)).ok())
        .collect();
    assert!(targets.len() > 10);
    assert_eq!(myrberg_score(&xi0, &t, &targets, 1e-9).score, 1.0);
    assert_eq!(myrberg_score(&xi0, &t, &targets, 0.0).score, 0.0);
}

#[test]
fn myrberg_score_is_monotone_in_depth() {
    let targets = random_targets(100, 15);
    let p = SchottkyPreset::builtin("schottky3").unwrap();
    let xi0 = attracting_flag(&p.evaluate(&Word::random(&p.alphabet, 20, &mut rng(16)))).unwrap();
    let scores: Vec<f64> = [4, 6, 8].iter().map(|&l| myrberg_score(&xi0, &table("schottky3", l), &targets, 0.05).score).collect();
    assert!(scores.windows(2).all(|w| w[0] <= w[1]), "{scores:?}");
    assert!(scores[2] > 0.0);
}

#[test]
fn singularity_report_baselines() {
    let psi = tangent();
    let nu = measure(7, &psi);
    for s in mutual_singularity_diagnostic(&nu, &nu, &[0.5, 0.2, 0.1], 1) {
        assert!((s.correlation - 1.0).abs() < 1e-12, "{s:?}");
    }
    let mut r = rng(17);
    let f1: Vec<Flag> = (0..300).map(|_| random_flag(3, &mut r)).collect();
    let f2: Vec<Flag> = (0..300).map(|_| random_flag(3, &mut r)).collect();
    let u1 = DiscreteMeasure::uniform(&f1, psi.clone()).unwrap();
    let u2 = DiscreteMeasure::uniform(&f2, psi.clone()).unwrap();
    let rep = mutual_singularity_diagnostic(&u1, &u2, &[0.5, 0.03], 2);
    assert!(rep[1].correlation.abs() < 0.15, "{rep:?}");
}

#[test]
fn singularity_report_for_distinct_forms_runs() {
    let t = table("schottky3", 7);
    let tf = tangent_scan(&t, 9).unwrap();
    let (w0, _) = tf.scanned[0].clone();
    let ce = critical_exponent(&t, &w0).unwrap();
    let other = LinearForm::dual_of(&w0).scaled(ce.delta);
    let n1 = build_ps(&t, &tf.psi, 4).unwrap();
    let n2 = build_ps(&t, &other, 4).unwrap();
    let rep = mutual_singularity_diagnostic(&n1, &n2, &[0.5, 0.25, 0.1], 3);
    assert_eq!(rep.len(), 3);
    assert!(rep.iter().all(|s| s.correlation.is_finite() && s.correlation <= 1.0 + 1e-12));
}
