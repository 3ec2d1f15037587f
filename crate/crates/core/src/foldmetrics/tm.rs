use crate::gradkit::Var;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

use super::kabsch::fit_subset;
use super::structure::dist2;
use super::{
    FoldError, Structure, Superposition, D0_MIN, REFINE_CUTOFF, REFINE_MIN_RESIDUES, REFINE_ROUNDS,
};

/// Distance scale `max(1.24 (l - 15)^(1/3) - 1.8, 0.5)`.
pub fn d0<T: Scalar>(len: usize) -> T {
    let l = T::lit(len as f64);
    let raw = T::lit(1.24) * (l - T::lit(15.0)).cbrt() - T::lit(1.8);
    raw.max(T::lit(D0_MIN))
}

/// TM-score together with the superposition that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct TmAlignment<T> {
    pub score: T,
    pub d0: T,
    pub superposition: Superposition<T>,
}

/// TM-score of `mobile` against `reference` under a fixed superposition.
pub fn tm_with_superposition<T: Scalar>(
    reference: &Structure<T>,
    mobile: &Structure<T>,
    sup: &Superposition<T>,
) -> Result<T, FoldError> {
    check(reference, mobile)?;
    let d0 = d0::<T>(reference.len());
    Ok(score_and_distances(reference, mobile, sup, d0).0)
}

fn score_and_distances<T: Scalar>(
    reference: &Structure<T>,
    mobile: &Structure<T>,
    sup: &Superposition<T>,
    d0: T,
) -> (T, Vec<T>) {
    let d0sq = d0 * d0;
    let d2: Vec<T> = reference
        .coords()
        .iter()
        .zip(mobile.coords())
        .map(|(a, b)| dist2(a, &sup.apply(b)))
        .collect();
    let score = d2.iter().map(|&d| T::one() / (T::one() + d / d0sq)).sum::<T>()
        / T::lit(reference.len() as f64);
    (score, d2)
}

fn check<T: Scalar>(a: &Structure<T>, b: &Structure<T>) -> Result<(), FoldError> {
    if a.len() != b.len() {
        return Err(FoldError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Positional TM-score with the refinement policy: an all-residue fit, then up
/// to three re-fits on residues within `8 d0`, stopping when fewer than four
/// qualify or the subset stops changing. The best-scoring fit is returned.
pub fn tm_score_detailed<T: Scalar>(
    reference: &Structure<T>,
    mobile: &Structure<T>,
) -> Result<TmAlignment<T>, FoldError> {
    check(reference, mobile)?;
    let d0 = d0::<T>(reference.len());
    let cutoff2 = (T::lit(REFINE_CUTOFF) * d0).powi(2);

    let mut subset: Vec<usize> = (0..reference.len()).collect();
    let mut sup = fit_subset(reference, mobile, &subset);
    let (mut score, mut d2) = score_and_distances(reference, mobile, &sup, d0);
    let mut best = TmAlignment {
        score,
        d0,
        superposition: sup.clone(),
    };
    for _ in 0..REFINE_ROUNDS {
        let next: Vec<usize> = d2
            .iter()
            .enumerate()
            .filter(|(_, &d)| d < cutoff2)
            .map(|(i, _)| i)
            .collect();
        if next.len() < REFINE_MIN_RESIDUES || next == subset {
            break;
        }
        subset = next;
        sup = fit_subset(reference, mobile, &subset);
        (score, d2) = score_and_distances(reference, mobile, &sup, d0);
        if score > best.score {
            best = TmAlignment {
                score,
                d0,
                superposition: sup.clone(),
            };
        }
    }
    Ok(best)
}

pub fn tm_score<T: Scalar>(reference: &Structure<T>, mobile: &Structure<T>) -> Result<T, FoldError> {
    tm_score_detailed(reference, mobile).map(|a| a.score)
}

/// TM-score as a tape node. `mobile` is a `3 x l` coordinate variable. The
/// superposition is recomputed from the current values (or taken from
/// `frozen`) and treated as a constant in the backward pass.
pub fn tm_score_var<'t, T: Scalar>(
    reference: &Structure<T>,
    mobile: Var<'t, T>,
    frozen: Option<&Superposition<T>>,
) -> Result<(Var<'t, T>, Superposition<T>), FoldError> {
    let (rows, cols) = mobile.shape();
    if rows != 3 {
        return Err(FoldError::BadShape { rows, cols });
    }
    if cols != reference.len() {
        return Err(FoldError::LengthMismatch {
            left: reference.len(),
            right: cols,
        });
    }
    let sup = match frozen {
        Some(s) => s.clone(),
        None => {
            let current = Structure::from_tensor(&mobile.value())?;
            tm_score_detailed(reference, &current)?.superposition
        }
    };
    let tape = mobile.tape();
    let d0 = d0::<T>(reference.len());

    let rot = Tensor::from_fn(3, 3, |i, j| sup.rotation[i][j]);
    let shift = Tensor::from_fn(3, cols, |k, i| sup.translation[k] - reference.coords()[i][k]);
    let diff = tape
        .constant(rot)?
        .matmul(mobile)?
        .add(tape.constant(shift)?)?;
    let d2 = tape
        .constant(Tensor::ones(1, 3))?
        .matmul(diff.mul(diff)?)?;
    let terms = tape
        .scalar(T::one())?
        .div(d2.scale(T::one() / (d0 * d0))?.offset(T::one())?)?;
    Ok((terms.mean()?, sup))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradkit::Tape;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_structure(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> Structure<f64> {
        Structure::new(
            (0..n)
                .map(|_| {
                    [
                        rng.random_range(-spread..spread),
                        rng.random_range(-spread..spread),
                        rng.random_range(-spread..spread),
                    ]
                })
                .collect(),
        )
        .unwrap()
    }

    fn random_rotation(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
        // Uniform unit quaternion.
        let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
        let tau = std::f64::consts::TAU;
        let w = (1.0 - u1).sqrt() * (tau * u2).sin();
        let x = (1.0 - u1).sqrt() * (tau * u2).cos();
        let y = u1.sqrt() * (tau * u3).sin();
        let z = u1.sqrt() * (tau * u3).cos();
        [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ]
    }

    #[test]
    fn d0_values() {
        assert!((d0::<f64>(100) - 3.6521).abs() < 1e-3);
        let exact = 1.24 * 85f64.cbrt() - 1.8;
        assert!((d0::<f64>(100) - exact).abs() < 1e-15);
        assert_eq!(d0::<f64>(10), 0.5);
        assert_eq!(d0::<f64>(19), 0.5);
        assert!(d0::<f64>(32) > 1.38 && d0::<f64>(32) < 1.39);
    }

    #[test]
    fn identical_structures_score_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_structure(&mut rng, 30, 10.0);
        assert!((tm_score(&s, &s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rigid_motion_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = random_structure(&mut rng, 40, 10.0);
        for _ in 0..100 {
            let r = random_rotation(&mut rng);
            let t = [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)];
            let moved = s.transformed(&r, &t);
            assert!((tm_score(&s, &moved).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn length_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_structure(&mut rng, 5, 1.0);
        let b = random_structure(&mut rng, 6, 1.0);
        assert!(matches!(tm_score(&a, &b), Err(FoldError::LengthMismatch { .. })));
    }

    #[test]
    fn refinement_never_lowers_the_initial_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let a = random_structure(&mut rng, 25, 8.0);
            let mut b = a.clone();
            // Perturb a tail heavily so the all-residue fit is suboptimal.
            let coords: Vec<[f64; 3]> = b
                .coords()
                .iter()
                .enumerate()
                .map(|(i, p)| if i > 18 { [p[0] + 30.0, p[1], p[2]] } else { *p })
                .collect();
            b = Structure::new(coords).unwrap();
            let all = kabsch_all(&a, &b);
            let initial = tm_with_superposition(&a, &b, &all).unwrap();
            let refined = tm_score(&a, &b).unwrap();
            assert!(refined >= initial);
        }
    }

    fn kabsch_all(a: &Structure<f64>, b: &Structure<f64>) -> Superposition<f64> {
        super::super::kabsch_superpose(a, b).unwrap()
    }

    #[test]
    fn differentiable_matches_plain_and_is_stationary_at_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = random_structure(&mut rng, 12, 5.0);
        let tape = Tape::new();
        let x = tape.param(s.to_tensor()).unwrap();
        let (tm, _) = tm_score_var(&s, x, None).unwrap();
        assert!((tm.item().unwrap() - 1.0).abs() < 1e-12);
        let g = tape.backward(tm).unwrap();
        assert!(g.wrt(x).unwrap().data().iter().all(|v| v.abs() < 1e-12));

        let other = random_structure(&mut rng, 12, 5.0);
        let tape = Tape::new();
        let x = tape.param(other.to_tensor()).unwrap();
        let (tm, _) = tm_score_var(&s, x, None).unwrap();
        assert!((tm.item().unwrap() - tm_score(&s, &other).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn moving_one_residue_lowers_score() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let s = random_structure(&mut rng, 10, 5.0);
        // Move residue 3 by +d along x, from a slightly displaced start.
        let moved = |d: f64| {
            let c: Vec<[f64; 3]> = s
                .coords()
                .iter()
                .enumerate()
                .map(|(i, p)| if i == 3 { [p[0] + d, p[1], p[2]] } else { *p })
                .collect();
            Structure::new(c).unwrap()
        };
        let base = moved(0.3);
        let sup = tm_score_detailed(&s, &base).unwrap().superposition;
        let h = 1e-5;
        let fd = (tm_with_superposition(&s, &moved(0.3 + h), &sup).unwrap()
            - tm_with_superposition(&s, &moved(0.3 - h), &sup).unwrap())
            / (2.0 * h);
        assert!(fd < 0.0);

        let tape = Tape::new();
        let x = tape.param(base.to_tensor()).unwrap();
        let (tm, _) = tm_score_var(&s, x, Some(&sup)).unwrap();
        let g = tape.backward(tm).unwrap();
        let analytic = g.wrt(x).unwrap().get(0, 3);
        assert!(analytic < 0.0);
        assert!((analytic - fd).abs() / fd.abs() < 1e-6);
    }

    #[test]
    fn gradient_matches_finite_differences_with_frozen_alignment() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let s = random_structure(&mut rng, 8, 2.0);
            let m = random_structure(&mut rng, 8, 2.0);
            let sup = tm_score_detailed(&s, &m).unwrap().superposition;
            let tape = Tape::new();
            let x = tape.param(m.to_tensor()).unwrap();
            let (tm, _) = tm_score_var(&s, x, Some(&sup)).unwrap();
            let g = tape.backward(tm).unwrap().wrt(x).unwrap().clone();
            let h = 1e-4;
            for k in 0..3 {
                for i in 0..8 {
                    let bump = |delta: f64| {
                        let mut t = m.to_tensor();
                        t.set(k, i, t.get(k, i) + delta);
                        tm_with_superposition(&s, &Structure::from_tensor(&t).unwrap(), &sup).unwrap()
                    };
                    let fd = (bump(h) - bump(-h)) / (2.0 * h);
                    let a = g.get(k, i);
                    let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
                    assert!(rel < 1e-3, "k={k} i={i} analytic={a} fd={fd}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn score_in_unit_interval_and_symmetric(seed in any::<u64>(), n in 1usize..30) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_structure(&mut rng, n, 6.0);
            let b = random_structure(&mut rng, n, 6.0);
            let ab = tm_score(&a, &b).unwrap();
            let ba = tm_score(&b, &a).unwrap();
            prop_assert!(ab > 0.0 && ab <= 1.0 + 1e-12);
            prop_assert!((ab - ba).abs() < 1e-6);
        }

        #[test]
        fn growing_distances_never_raise_score(seed in any::<u64>(), n in 1usize..30) {
            // Residue offsets from the aligned reference grow with k; the
            // superposition is held fixed so every d_i grows.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_structure(&mut rng, n, 6.0);
            let u = random_structure(&mut rng, n, 1.0);
            let moved = |k: f64| Structure::new(
                a.coords().iter().zip(u.coords()).map(|(p, d)| [p[0] + k * d[0], p[1] + k * d[1], p[2] + k * d[2]]).collect()
            ).unwrap();
            let id = Superposition::identity();
            let mut prev = 1.0 + 1e-12;
            for step in 0..10 {
                let score = tm_with_superposition(&a, &moved(0.3 * step as f64), &id).unwrap();
                prop_assert!(score <= prev + 1e-12);
                prev = score;
            }
        }
    }
}
