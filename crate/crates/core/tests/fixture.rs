//! The linear H4 fixture against values computed independently with pyscf
//! (see fixtures/make_h4_chain.py).

use upccd::exactref::singlet_sector_ground_state;
use upccd::integrals::{parse_fcidump, write_fcidump, IntegralSet};
use upccd::pairspace::{doci_matrix, overlap_with_ci, PairStateVector};

const RHF_ENERGY: f64 = -1.4097529967021196;
const FCI_ENERGY: f64 = -1.872215994424114;
const HF_OVERLAP: f64 = 0.5737543705235605;

fn fixture() -> IntegralSet {
    parse_fcidump(include_str!("fixtures/h4_chain_2.5A_sto3g.fcidump")).unwrap()
}

#[test]
fn header_and_symmetry() {
    let ints = fixture();
    assert_eq!((ints.norb, ints.nelec, ints.npairs()), (4, 4, 2));
    assert!(ints.symmetry_defect() < 1e-12);
}

#[test]
fn reference_energy_matches_rhf() {
    let e_ref = doci_matrix(&fixture()).unwrap().diagonal()[0];
    assert!((e_ref - RHF_ENERGY).abs() < 1e-9, "{e_ref}");
}

#[test]
fn ground_state_matches_fci() {
    let ints = fixture();
    let (_, gs) = singlet_sector_ground_state(&ints).unwrap();
    assert!((gs.energy - FCI_ENERGY).abs() < 1e-9, "{}", gs.energy);
    let hf = overlap_with_ci(&PairStateVector::reference(4, 2), &gs.state);
    assert!((hf - HF_OVERLAP).abs() < 1e-8, "{hf}");
}

#[test]
fn survives_a_write_parse_round_trip() {
    let ints = fixture();
    let again = parse_fcidump(&write_fcidump(&ints)).unwrap();
    assert_eq!(ints.h, again.h);
    assert_eq!(ints.e_core, again.e_core);
    for p in 0..4 {
        for q in 0..4 {
            for r in 0..4 {
                for s in 0..4 {
                    assert_eq!(ints.eri(p, q, r, s), again.eri(p, q, r, s));
                }
            }
        }
    }
}
