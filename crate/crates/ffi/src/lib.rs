//! C interface to the `upccd` library.
//!
//! Objects cross the boundary as opaque handles that the caller releases with
//! the matching `*_free` function. Every fallible call returns an
//! [`UpccdStatus`]; on failure the message is available from
//! [`upccd_last_error`] on the same thread until the next failing call.
//! Output pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use upccd::circuit::{build_upccd, export_openqasm, terms_from_amplitudes, upccd_state, Circuit};
use upccd::exactref::singlet_sector_ground_state;
use upccd::integrals::{hubbard_integrals, parse_fcidump, Boundary, HubbardSpec, IntegralSet};
use upccd::orbital_opt::{optimize_orbitals, OoConfig};
use upccd::pairspace::{overlap_with_ci, solve_pccd, threshold_amplitudes, AmplitudeMatrix};
use upccd::qpe::{canonical_qpe, EvolutionSpec};
use upccd::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpccdStatus {
    Ok = 0,
    NullPointer = 1,
    Parse = 2,
    Io = 3,
    InvalidInput = 4,
    SizeCap = 5,
    Numerical = 6,
    Panic = 7,
}

/// Hamiltonian in a spatial-orbital basis.
pub struct UpccdIntegrals(IntegralSet);

/// pCCD amplitudes with the energy they were solved at.
pub struct UpccdAmplitudes {
    amplitudes: AmplitudeMatrix,
    energy: f64,
}

/// Gate list of a UpCCD state-preparation circuit.
pub struct UpccdCircuit(Circuit);

/// Gate totals of a circuit, see `upccd_circuit_counts`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct UpccdGateCounts {
    pub native: usize,
    pub paired_rotations: usize,
    pub two_qubit: usize,
    pub cx: usize,
    pub native_depth: usize,
    pub depth: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> UpccdStatus {
    match e {
        Error::Parse { .. } => UpccdStatus::Parse,
        Error::Io(_) => UpccdStatus::Io,
        Error::InvalidInput(_) | Error::Contract(_) => UpccdStatus::InvalidInput,
        Error::SizeCap { .. } => UpccdStatus::SizeCap,
        Error::NoConvergence { .. } | Error::SingularJacobian(_) => UpccdStatus::Numerical,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (UpccdStatus, String)>) -> UpccdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => UpccdStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            UpccdStatus::Panic
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (UpccdStatus, String)>;
}

impl<T> IntoFfi<T> for upccd::Result<T> {
    fn ffi(self) -> Result<T, (UpccdStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (UpccdStatus, String) {
    (UpccdStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (UpccdStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T) {
    ptr::write(out, value);
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn upccd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses FCIDUMP text.
///
/// # Safety
/// `text` must be a valid nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn upccd_integrals_from_fcidump(
    text: *const c_char,
    out: *mut *mut UpccdIntegrals,
) -> UpccdStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| (UpccdStatus::InvalidInput, "FCIDUMP text is not UTF-8".to_string()))?;
        let ints = parse_fcidump(text).ffi()?;
        write_out(out, Box::into_raw(Box::new(UpccdIntegrals(ints))));
        Ok(())
    })
}

/// Half-filled or general Hubbard chain in the site basis.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn upccd_integrals_hubbard(
    sites: usize,
    hopping: f64,
    interaction: f64,
    filling: usize,
    periodic: bool,
    out: *mut *mut UpccdIntegrals,
) -> UpccdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let boundary = if periodic { Boundary::Periodic } else { Boundary::Open };
        let spec = HubbardSpec { sites, hopping, interaction, boundary, filling };
        let ints = hubbard_integrals(&spec).ffi()?;
        write_out(out, Box::into_raw(Box::new(UpccdIntegrals(ints))));
        Ok(())
    })
}

/// Number of spatial orbitals, or 0 for a null handle.
///
/// # Safety
/// `ints` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn upccd_integrals_norb(ints: *const UpccdIntegrals) -> usize {
    ints.as_ref().map_or(0, |i| i.0.norb)
}

/// Number of electrons, or 0 for a null handle.
///
/// # Safety
/// `ints` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn upccd_integrals_nelec(ints: *const UpccdIntegrals) -> usize {
    ints.as_ref().map_or(0, |i| i.0.nelec)
}

/// # Safety
/// `ints` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn upccd_integrals_free(ints: *mut UpccdIntegrals) {
    if !ints.is_null() {
        drop(Box::from_raw(ints));
    }
}

/// Lowest energy of the singlet `(N/2, N/2)` sector.
///
/// # Safety
/// `ints` must be a live handle and `energy` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn upccd_exact_ground_energy(ints: *const UpccdIntegrals, energy: *mut f64) -> UpccdStatus {
    guard(|| {
        let ints = deref(ints, "integrals")?;
        if energy.is_null() {
            return Err(null("energy"));
        }
        let (_, gs) = singlet_sector_ground_state(&ints.0).ffi()?;
        write_out(energy, gs.energy);
        Ok(())
    })
}

/// Solves pCCD in the given orbitals.
///
/// # Safety
/// `ints` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn upccd_solve_pccd(ints: *const UpccdIntegrals, out: *mut *mut UpccdAmplitudes) -> UpccdStatus {
    guard(|| {
        let ints = deref(ints, "integrals")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let sol = solve_pccd(&ints.0).ffi()?;
        write_out(out, Box::into_raw(Box::new(UpccdAmplitudes { amplitudes: sol.amplitudes, energy: sol.energy })));
        Ok(())
    })
}

/// Orbital-optimized pCCD with `restarts` extra seeded starts. Writes the
/// rotated integrals and the amplitudes solved in them.
///
/// # Safety
/// `ints` must be a live handle; `rotated` and `out` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn upccd_optimize_orbitals(
    ints: *const UpccdIntegrals,
    restarts: usize,
    seed: u64,
    rotated: *mut *mut UpccdIntegrals,
    out: *mut *mut UpccdAmplitudes,
) -> UpccdStatus {
    guard(|| {
        let ints = deref(ints, "integrals")?;
        if rotated.is_null() || out.is_null() {
            return Err(null("output pointer"));
        }
        let cfg = OoConfig { restarts, restart_seed: seed, ..Default::default() };
        let res = optimize_orbitals(&ints.0, &cfg).ffi()?;
        let amps = UpccdAmplitudes { amplitudes: res.solution.amplitudes, energy: res.solution.energy };
        write_out(rotated, Box::into_raw(Box::new(UpccdIntegrals(res.integrals))));
        write_out(out, Box::into_raw(Box::new(amps)));
        Ok(())
    })
}

/// pCCD energy the amplitudes were solved at, or NaN for a null handle.
///
/// # Safety
/// `amps` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn upccd_amplitudes_energy(amps: *const UpccdAmplitudes) -> f64 {
    amps.as_ref().map_or(f64::NAN, |a| a.energy)
}

/// Amplitude `t[i][a]` with `i` occupied and `a` virtual.
///
/// # Safety
/// `amps` must be a live handle and `value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn upccd_amplitudes_get(
    amps: *const UpccdAmplitudes,
    i: usize,
    a: usize,
    value: *mut f64,
) -> UpccdStatus {
    guard(|| {
        let amps = deref(amps, "amplitudes")?;
        if value.is_null() {
            return Err(null("value"));
        }
        let t = &amps.amplitudes;
        if !(t.occupied().contains(&i) && t.virtuals().contains(&a)) {
            return Err((UpccdStatus::InvalidInput, format!("({i}, {a}) is not an occupied-virtual pair")));
        }
        write_out(value, t.get(i, a));
        Ok(())
    })
}

/// # Safety
/// `amps` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn upccd_amplitudes_free(amps: *mut UpccdAmplitudes) {
    if !amps.is_null() {
        drop(Box::from_raw(amps));
    }
}

fn thresholded(amps: &UpccdAmplitudes, threshold: f64) -> Result<AmplitudeMatrix, (UpccdStatus, String)> {
    Ok(threshold_amplitudes(&amps.amplitudes, threshold).ffi()?.0)
}

/// UpCCD circuit from the amplitudes with `|t| >= threshold`.
///
/// # Safety
/// `amps` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn upccd_circuit_build(
    amps: *const UpccdAmplitudes,
    threshold: f64,
    out: *mut *mut UpccdCircuit,
) -> UpccdStatus {
    guard(|| {
        let amps = deref(amps, "amplitudes")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let t = thresholded(amps, threshold)?;
        let c = build_upccd(&terms_from_amplitudes(&t), t.norb, t.npairs).ffi()?;
        write_out(out, Box::into_raw(Box::new(UpccdCircuit(c))));
        Ok(())
    })
}

/// # Safety
/// `circuit` must be a live handle and `counts` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn upccd_circuit_counts(
    circuit: *const UpccdCircuit,
    counts: *mut UpccdGateCounts,
) -> UpccdStatus {
    guard(|| {
        let c = deref(circuit, "circuit")?;
        if counts.is_null() {
            return Err(null("counts"));
        }
        let k = c.0.counts();
        write_out(
            counts,
            UpccdGateCounts {
                native: k.native,
                paired_rotations: k.paired_rotations,
                two_qubit: k.two_qubit,
                cx: k.cx,
                native_depth: k.native_depth,
                depth: k.depth,
            },
        );
        Ok(())
    })
}

/// OpenQASM 2.0 text of the decomposed circuit; release with `upccd_string_free`.
///
/// # Safety
/// `circuit` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn upccd_circuit_qasm(circuit: *const UpccdCircuit, out: *mut *mut c_char) -> UpccdStatus {
    guard(|| {
        let c = deref(circuit, "circuit")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = export_openqasm(&c.0.decompose()).ffi()?;
        let text = CString::new(text).map_err(|_| (UpccdStatus::Panic, "nul byte in QASM text".to_string()))?;
        write_out(out, text.into_raw());
        Ok(())
    })
}

/// # Safety
/// `circuit` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn upccd_circuit_free(circuit: *mut UpccdCircuit) {
    if !circuit.is_null() {
        drop(Box::from_raw(circuit));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn upccd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Overlap of the thresholded UpCCD state with the exact singlet ground state
/// of `ints` (which must be the orbitals the amplitudes were solved in).
///
/// # Safety
/// `ints` and `amps` must be live handles and `fidelity` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn upccd_fidelity(
    ints: *const UpccdIntegrals,
    amps: *const UpccdAmplitudes,
    threshold: f64,
    fidelity: *mut f64,
) -> UpccdStatus {
    guard(|| {
        let ints = deref(ints, "integrals")?;
        let amps = deref(amps, "amplitudes")?;
        if fidelity.is_null() {
            return Err(null("fidelity"));
        }
        let t = thresholded(amps, threshold)?;
        if (t.norb, t.npairs) != (ints.0.norb, ints.0.npairs()) {
            return Err((UpccdStatus::InvalidInput, "amplitudes do not match the integrals".into()));
        }
        let state = upccd_state(&terms_from_amplitudes(&t), t.norb, t.npairs).ffi()?;
        let (_, gs) = singlet_sector_ground_state(&ints.0).ffi()?;
        write_out(fidelity, overlap_with_ci(&state, &gs.state));
        Ok(())
    })
}

/// Canonical QPE on the singlet sector started from the thresholded UpCCD
/// state. Writes the modal-bin energy and that bin's sampled mass.
///
/// # Safety
/// `ints` and `amps` must be live handles; `energy` and `mass` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn upccd_qpe(
    ints: *const UpccdIntegrals,
    amps: *const UpccdAmplitudes,
    threshold: f64,
    n_ancilla: usize,
    shots: u64,
    trotter_steps: usize,
    exact: bool,
    seed: u64,
    energy: *mut f64,
    mass: *mut f64,
) -> UpccdStatus {
    guard(|| {
        let ints = deref(ints, "integrals")?;
        let amps = deref(amps, "amplitudes")?;
        if energy.is_null() || mass.is_null() {
            return Err(null("output pointer"));
        }
        let t = thresholded(amps, threshold)?;
        let state = upccd_state(&terms_from_amplitudes(&t), t.norb, t.npairs).ffi()?;
        let mut spec = EvolutionSpec::sector(&ints.0, trotter_steps).ffi()?;
        if exact {
            spec = spec.exact();
        }
        let psi = spec.prepare_pair(&state).ffi()?;
        let res = canonical_qpe(&psi, &spec, n_ancilla, shots, seed).ffi()?;
        write_out(energy, res.energy_estimate);
        write_out(mass, res.mass(res.modal_bin));
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> String {
        unsafe { CStr::from_ptr(upccd_last_error()).to_string_lossy().into_owned() }
    }

    #[test]
    fn two_site_round_trip() {
        unsafe {
            let mut site = ptr::null_mut();
            assert_eq!(upccd_integrals_hubbard(2, 1.0, 4.0, 2, false, &mut site), UpccdStatus::Ok);
            assert_eq!(upccd_integrals_norb(site), 2);
            assert_eq!(upccd_integrals_nelec(site), 2);

            let mut rotated = ptr::null_mut();
            let mut amps = ptr::null_mut();
            assert_eq!(upccd_optimize_orbitals(site, 0, 1, &mut rotated, &mut amps), UpccdStatus::Ok);
            assert!((upccd_amplitudes_energy(amps) - -0.8284271247461903).abs() < 1e-6);

            let mut exact = 0.0;
            assert_eq!(upccd_exact_ground_energy(rotated, &mut exact), UpccdStatus::Ok);
            assert!((exact - -0.8284271247461903).abs() < 1e-10);

            let mut fid = 0.0;
            assert_eq!(upccd_fidelity(rotated, amps, 0.0, &mut fid), UpccdStatus::Ok);
            // The circuit uses the pCCD amplitude as a rotation angle, so the overlap
            // is cos(t - atan t) rather than exactly one.
            let mut t = 0.0;
            assert_eq!(upccd_amplitudes_get(amps, 0, 1, &mut t), UpccdStatus::Ok);
            assert!((fid - (t - t.atan()).cos()).abs() < 1e-6, "{fid} {t}");

            let mut circuit = ptr::null_mut();
            assert_eq!(upccd_circuit_build(amps, 0.0, &mut circuit), UpccdStatus::Ok);
            let mut counts = UpccdGateCounts::default();
            assert_eq!(upccd_circuit_counts(circuit, &mut counts), UpccdStatus::Ok);
            assert_eq!(counts.paired_rotations, 1);
            let mut text = ptr::null_mut();
            assert_eq!(upccd_circuit_qasm(circuit, &mut text), UpccdStatus::Ok);
            assert!(CStr::from_ptr(text).to_str().unwrap().starts_with("OPENQASM 2.0;"));
            upccd_string_free(text);

            let (mut e, mut m) = (0.0, 0.0);
            assert_eq!(upccd_qpe(rotated, amps, 0.0, 8, 500, 1, true, 7, &mut e, &mut m), UpccdStatus::Ok);
            assert!((e - exact).abs() < 0.2, "{e}");
            assert!(m > 0.3);

            upccd_circuit_free(circuit);
            upccd_amplitudes_free(amps);
            upccd_integrals_free(rotated);
            upccd_integrals_free(site);
        }
    }

    #[test]
    fn errors_are_reported() {
        unsafe {
            let mut out = ptr::null_mut();
            let text = CString::new("&FCI NELEC=2,MS2=0 &END\n1.0 1 1 0 0\n").unwrap();
            assert_eq!(upccd_integrals_from_fcidump(text.as_ptr(), &mut out), UpccdStatus::Parse);
            assert!(out.is_null());
            assert!(last_error().contains("NORB"), "{}", last_error());

            assert_eq!(upccd_integrals_from_fcidump(ptr::null(), &mut out), UpccdStatus::NullPointer);
            assert_eq!(upccd_integrals_hubbard(3, 1.0, 1.0, 3, false, &mut out), UpccdStatus::InvalidInput);

            let mut v = 0.0;
            assert_eq!(upccd_amplitudes_get(ptr::null(), 0, 1, &mut v), UpccdStatus::NullPointer);
            assert!(upccd_amplitudes_energy(ptr::null()).is_nan());
            upccd_integrals_free(ptr::null_mut());
        }
    }

    #[test]
    fn fcidump_and_amplitude_access() {
        unsafe {
            let text =
                CString::new("&FCI NORB=2,NELEC=2,MS2=0,&END\n4.0 1 1 1 1\n4.0 2 2 2 2\n-1.0 1 2 0 0\n0.0 0 0 0 0\n")
                    .unwrap();
            let mut ints = ptr::null_mut();
            assert_eq!(upccd_integrals_from_fcidump(text.as_ptr(), &mut ints), UpccdStatus::Ok);
            let mut amps = ptr::null_mut();
            assert_eq!(upccd_solve_pccd(ints, &mut amps), UpccdStatus::Ok);
            let mut t = f64::NAN;
            assert_eq!(upccd_amplitudes_get(amps, 0, 1, &mut t), UpccdStatus::Ok);
            assert!(t.is_finite());
            assert_eq!(upccd_amplitudes_get(amps, 1, 0, &mut t), UpccdStatus::InvalidInput);
            upccd_amplitudes_free(amps);
            upccd_integrals_free(ints);
        }
    }
}
