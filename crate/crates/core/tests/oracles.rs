//! Engine results against independent reference computations.

mod common;

use std::sync::Arc;

use common::{averaged_density, full_sz_diag, C64};
use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};
use xxz_core::basis::SectorBasis;
use xxz_core::engine::{apply_collision_amplitudes, propagate_amplitudes};
use xxz_core::hamiltonian::{ChainSpec, SectorHamiltonian};
use xxz_core::noise::{Collision, RecordedEvents};
use xxz_core::observables::entanglement_entropy_mixed;
use xxz_core::{EnsembleSpec, EntropyMode, NoiseSpec, Simulation};

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| C64::new(uniform(rng) - 0.5, uniform(rng) - 0.5)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

fn two_site_superposition() -> Simulation {
    let chain = ChainSpec::with_fields(0.0, 0.0, vec![0.0, 0.0]).unwrap();
    let basis = Arc::new(SectorBasis::new(2, 1).unwrap());
    let h = SectorHamiltonian::build(basis, &chain).unwrap();
    let a = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Simulation::new(h, NoiseSpec::closed(), vec![a, a]).unwrap()
}

fn coherence_error(sim: &Simulation, noise: NoiseSpec, m: usize, decay: f64) -> f64 {
    let sim = sim.with_noise(noise).unwrap();
    let rc = sim.noise().rc;
    let mut spec = EnsembleSpec::new(m, 0.05, 3.0 / rc).unwrap();
    spec.record_density = true;
    let out = sim.run_ensemble(&spec, None).unwrap();
    (0..out.times.len())
        .map(|k| {
            let rho = out.density_matrix(k).unwrap();
            (2.0 * rho[(0, 1)].re - (-decay * rc * out.times[k]).exp()).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn exponential_collisions_dephase_a_superposition() {
    let sim = two_site_superposition();
    let m = 4000;
    let tol = 5.0 / (m as f64).sqrt();
    let both = coherence_error(&sim, NoiseSpec::new(1.0, 0.8, 11).unwrap(), m, 4.0);
    assert!(both < tol, "both sites: max deviation {both}");
    let one = coherence_error(&sim, NoiseSpec::new(1.0, 0.8, 12).unwrap().with_active_sites(vec![0]), m, 2.0);
    assert!(one < tol, "single site: max deviation {one}");
}

#[test]
fn rabi_oscillation_quarter_period() {
    let chain = ChainSpec::with_fields(1.0, 0.0, vec![0.0, 0.0]).unwrap();
    let basis = Arc::new(SectorBasis::new(2, 1).unwrap());
    let h = SectorHamiltonian::build(basis, &chain).unwrap().diagonalized().unwrap();
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let psi = propagate_amplitudes(&h, &[one, zero], std::f64::consts::FRAC_PI_4).unwrap();
    assert!((psi[0] - zero).norm() < 1e-12);
    assert!((psi[1] - C64::new(0.0, -1.0)).norm() < 1e-12);

    let sim = Simulation::new(h, NoiseSpec::closed(), vec![one, zero]).unwrap();
    let mut state = sim.initial_state();
    sim.propagate(&mut state, std::f64::consts::FRAC_PI_4);
    let amps = sim.amplitudes(&state);
    assert!((amps[1] - C64::new(0.0, -1.0)).norm() < 1e-12);
}

#[test]
fn collision_matches_ancilla_unitary() {
    // exp(-i π/2 σx_a ⊗ σz_i) on ancilla ⊗ system, ancilla traced out
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 4;
    let basis = Arc::new(SectorBasis::new(n, 2).unwrap());
    let dim = basis.dim();
    let chain = ChainSpec::new(n, 1.0, 1.3, 2.0, 9).unwrap();
    let psi = random_state(&mut rng, dim);
    let anc = random_state(&mut rng, 2);
    let sim = Simulation::new(SectorHamiltonian::build(basis.clone(), &chain).unwrap(), NoiseSpec::closed(), psi.clone()).unwrap();

    for site in 0..n {
        let z: Vec<f64> = (0..dim).map(|j| if basis.is_occupied(j, site) { 1.0 } else { -1.0 }).collect();
        let gen = DMatrix::<C64>::from_fn(2 * dim, 2 * dim, |r, c| {
            let (ar, sr) = (r / dim, r % dim);
            let (ac, sc) = (c / dim, c % dim);
            if ar != ac && sr == sc {
                C64::new(0.0, -std::f64::consts::FRAC_PI_2 * z[sr])
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let u = gen.exp();
        let joint = DMatrix::<C64>::from_fn(2 * dim, 1, |r, _| anc[r / dim] * psi[r % dim]);
        let out = &u * joint;
        let reduced = DMatrix::<C64>::from_fn(dim, dim, |a, b| {
            (0..2).map(|x| out[x * dim + a] * out[x * dim + b].conj()).sum()
        });

        let mut state = sim.initial_state();
        sim.apply_collision(&mut state, site).unwrap();
        let kicked = sim.amplitudes(&state);
        let mut direct = psi.clone();
        apply_collision_amplitudes(&basis, &mut direct, site).unwrap();
        for a in 0..dim {
            assert!((kicked[a] - direct[a]).norm() < 1e-12);
            for b in 0..dim {
                let expect = kicked[a] * kicked[b].conj();
                assert!((reduced[(a, b)] - expect).norm() < 1e-12, "site {site} ({a},{b})");
            }
        }
    }
    let mut state = sim.initial_state();
    assert!(sim.apply_collision(&mut state, n).is_err());
}

#[test]
fn ensemble_density_matches_full_space_evolution() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for n in 1..=4 {
        for q in 0..=n {
            let delta = 3.0 * uniform(&mut rng) - 1.0;
            let h = 3.0 * uniform(&mut rng);
            let chain = ChainSpec::new(n, 1.0, delta, h, rng.next_u64()).unwrap();
            let basis = Arc::new(SectorBasis::new(n, q).unwrap());
            let psi0 = random_state(&mut rng, basis.dim());
            let noise = NoiseSpec::new(0.5 + 4.0 * uniform(&mut rng), 0.3 + uniform(&mut rng), rng.next_u64()).unwrap();
            let sim = Simulation::new(SectorHamiltonian::build(basis.clone(), &chain).unwrap(), noise, psi0.clone()).unwrap();
            let mut spec = EnsembleSpec::new(5, 0.1, 3.0).unwrap();
            spec.record_density = true;
            spec.record_events = true;
            let out = sim.run_ensemble(&spec, None).unwrap();
            let events = out.events.clone().unwrap();
            assert_eq!(events.len(), 5);
            let reference = averaged_density(&chain, &basis, &psi0, &events, &out.times);
            for (k, want) in reference.iter().enumerate() {
                let got = out.density_matrix(k).unwrap();
                let err = (got - want).iter().map(|z| z.norm()).fold(0.0, f64::max);
                assert!(err <= 1e-9, "N={n} q={q} t={} err={err}", out.times[k]);
            }
        }
    }
}

#[test]
fn replayed_events_match_full_space_evolution() {
    let n = 4;
    let chain = ChainSpec::new(n, 1.0, 2.5, 4.0, 5).unwrap();
    let basis = Arc::new(SectorBasis::new(n, 2).unwrap());
    let mut psi0 = vec![C64::new(0.0, 0.0); basis.dim()];
    psi0[basis.rank(0b0101).unwrap()] = C64::new(1.0, 0.0);
    let events = vec![
        Collision { site: 2, time: 0.37 },
        Collision { site: 0, time: 0.37 },
        Collision { site: 3, time: 1.0 },
        Collision { site: 1, time: 2.25 },
    ];
    let sim = Simulation::new(SectorHamiltonian::build(basis.clone(), &chain).unwrap(), NoiseSpec::closed(), psi0.clone()).unwrap();
    let mut spec = EnsembleSpec::new(1, 0.25, 3.0).unwrap();
    spec.record_density = true;
    let out = sim.run_with_events(&spec, RecordedEvents::new(events.clone())).unwrap();
    let mut sorted = events;
    sorted.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.site.cmp(&b.site)));
    let reference = averaged_density(&chain, &basis, &psi0, &[sorted], &out.times);
    for (k, want) in reference.iter().enumerate() {
        let err = (out.density_matrix(k).unwrap() - want).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err <= 1e-9, "t={} err={err}", out.times[k]);
    }
}

#[test]
fn closed_chain_conserves_energy() {
    let n = 8;
    let chain = ChainSpec::new(n, 1.0, 1.5, 3.0, 2).unwrap();
    let basis = Arc::new(SectorBasis::new(n, 3).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let psi0 = random_state(&mut rng, basis.dim());
    let h = SectorHamiltonian::build(basis, &chain).unwrap();
    let hm = h.matrix().map(|x| C64::new(x, 0.0));
    let sim = Simulation::new(h, NoiseSpec::closed(), psi0).unwrap();
    let energy = |psi: &[C64]| {
        let v = DMatrix::from_column_slice(psi.len(), 1, psi);
        (v.adjoint() * &hm * &v)[(0, 0)].re
    };
    let mut state = sim.initial_state();
    let e0 = energy(&sim.amplitudes(&state));
    for k in 1..=50 {
        sim.propagate(&mut state, k as f64 * 0.7);
        assert!((energy(&sim.amplitudes(&state)) - e0).abs() < 1e-10);
    }
}

#[test]
fn kicks_preserve_diagonal_and_flip_coherences() {
    let n = 5;
    let basis = Arc::new(SectorBasis::new(n, 2).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let psi = random_state(&mut rng, basis.dim());
    let full = common::embed(&basis, &psi);
    for site in 0..n {
        let z = full_sz_diag(n, site);
        let mut kicked = psi.clone();
        apply_collision_amplitudes(&basis, &mut kicked, site).unwrap();
        let kicked_full = common::embed(&basis, &kicked);
        for (s, (a, b)) in full.iter().zip(&kicked_full).enumerate() {
            assert_eq!(*b, *a * z[s]);
        }
    }
}

#[test]
fn ensemble_is_independent_of_thread_count() {
    let chain = ChainSpec::new(10, 1.0, 2.5, 5.0, 1).unwrap();
    let sim = Simulation::from_chain(&chain, 2, NoiseSpec::new(2.0, 0.7, 99).unwrap(), &xxz_core::InitialState::TwoAdjacent).unwrap();
    let spec = EnsembleSpec::new(23, 0.05, 4.0).unwrap().with_cut(5);
    let one = sim.run_ensemble(&spec, Some(1)).unwrap();
    let many = sim.run_ensemble(&spec, Some(4)).unwrap();
    let again = sim.run_ensemble(&spec, Some(3)).unwrap();
    assert_eq!(one, many);
    assert_eq!(one, again);
    assert_eq!(one.groups.len(), 10);
    assert_eq!(one.n_traj, 23);
}

#[test]
fn averaged_state_entropy_matches_density_matrix() {
    let chain = ChainSpec::new(6, 1.0, 2.5, 3.0, 4).unwrap();
    let sim = Simulation::from_chain(&chain, 2, NoiseSpec::new(1.0, 0.5, 5).unwrap(), &xxz_core::InitialState::TwoAdjacent).unwrap();
    let mut spec = EnsembleSpec::new(12, 0.1, 4.0).unwrap().with_cut(3).with_entropy_mode(EntropyMode::AveragedState);
    spec.record_density = true;
    let out = sim.run_ensemble(&spec, None).unwrap();
    let bip = sim.basis().bipartition(3).unwrap();
    let svn = out.svn.as_ref().unwrap();
    for k in 0..out.times.len() {
        let s = entanglement_entropy_mixed(&out.density_matrix(k).unwrap(), &bip).unwrap();
        assert!((s - svn[k]).abs() < 1e-9, "t={} {s} vs {}", out.times[k], svn[k]);
    }
    // concavity: the mean pure-state entropy never exceeds that of the mean state
    let per = sim.run_ensemble(&spec.clone().with_entropy_mode(EntropyMode::PerTrajectory), None).unwrap();
    let per = per.svn.unwrap();
    assert!(per[0].abs() < 1e-12);
    for k in 0..per.len() {
        assert!(per[k] <= svn[k] + 1e-9);
    }
}
