use std::ffi::{CStr, CString};
use std::ptr;

use dimer_optics_ffi::*;

fn x(v: f64) -> DoptVec3 {
    DoptVec3 { x: v, y: 0.0, z: 0.0 }
}

fn last_error() -> String {
    let p = dopt_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn direct_dimer() -> *mut DoptDimer {
    let m1 = DoptMonomer { energy: 2.65, mu: x(10.0), perm_ground: x(0.0), perm_excited: x(60.0) };
    let m2 = DoptMonomer { energy: 2.65, mu: x(10.0), ..Default::default() };
    let q = DoptCoupling { q12: 0.15, ..Default::default() };
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { dopt_dimer_new(&m1, &m2, &q, &mut d) }, DoptStatus::Ok);
    assert!(!d.is_null());
    d
}

#[test]
fn direct_dimer_round_trip() {
    unsafe {
        let d = direct_dimer();
        let mut e = ptr::null_mut();
        assert_eq!(dopt_diagonalize(d, &mut e), DoptStatus::Ok);
        let mut case = DoptCase::Numeric;
        assert_eq!(dopt_eigen_case(e, &mut case), DoptStatus::Ok);
        assert_eq!(case, DoptCase::DirectA);

        let mut energies = [0.0; 3];
        assert_eq!(dopt_eigen_energies(e, energies.as_mut_ptr()), DoptStatus::Ok);
        assert!((energies[1] - 2.5).abs() < 1e-12 && (energies[2] - 2.8).abs() < 1e-12);

        let mut d01 = DoptVec3::default();
        assert_eq!(dopt_eigen_dipole(e, 0, 1, &mut d01), DoptStatus::Ok);
        assert_eq!(d01, DoptVec3::default());

        let mut rates = [0.0; 9];
        assert_eq!(dopt_rate_matrix(e, 300.0, rates.as_mut_ptr()), DoptStatus::Ok);
        assert_eq!(rates[3], 0.0);
        assert!(rates[6] > 0.0 && rates[7] > 0.0);

        let mut ss = [0.0; 3];
        assert_eq!(dopt_steady_state(rates.as_ptr(), ss.as_mut_ptr()), DoptStatus::Ok);
        assert!((ss[0] - 1.0).abs() < 1e-12);

        let times = [0.0, 1e6, 1e9];
        let mut pops = [0.0; 9];
        let p0 = [0.0, 0.0, 1.0];
        assert_eq!(dopt_evolve(rates.as_ptr(), p0.as_ptr(), times.as_ptr(), 3, pops.as_mut_ptr()), DoptStatus::Ok);
        assert_eq!(&pops[..3], &p0);
        for t in 0..3 {
            assert!((pops[3 * t..3 * t + 3].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        let mut dark = -1.0;
        assert_eq!(dopt_corrected_rate(e, 300.0, 1, 0, false, &mut dark), DoptStatus::Ok);
        assert_eq!(dark, 0.0);

        dopt_eigen_free(e);
        dopt_dimer_free(d);
    }
}

#[test]
fn lambda_override_and_reset() {
    unsafe {
        let d = direct_dimer();
        let mut derived = 0.0;
        assert_eq!(dopt_dimer_lambda(d, &mut derived), DoptStatus::Ok);
        assert!(derived > 0.0);
        assert_eq!(dopt_dimer_set_lambda(d, 1e-3), DoptStatus::Ok);
        let mut l = 0.0;
        dopt_dimer_lambda(d, &mut l);
        assert_eq!(l, 1e-3);
        assert_eq!(dopt_dimer_set_lambda(d, f64::NAN), DoptStatus::Ok);
        dopt_dimer_lambda(d, &mut l);
        assert_eq!(l, derived);
        assert_eq!(dopt_dimer_set_medium(d, -1.0, 10.0), DoptStatus::Config);
        assert!(last_error().contains("refractive"), "{}", last_error());
        dopt_dimer_free(d);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let m = DoptMonomer { energy: -1.0, mu: x(1.0), ..Default::default() };
        let q = DoptCoupling::default();
        let mut d = ptr::null_mut();
        assert_eq!(dopt_dimer_new(&m, &m, &q, &mut d), DoptStatus::Config);
        assert!(d.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(dopt_dimer_new(ptr::null(), &m, &q, &mut d), DoptStatus::NullPointer);
        assert!(last_error().contains("monomer1"));

        // Degenerate, uncoupled excitons cannot be treated secularly.
        let m = DoptMonomer { energy: 2.4, mu: x(1.0), ..Default::default() };
        assert_eq!(dopt_dimer_new(&m, &m, &q, &mut d), DoptStatus::Ok);
        let mut e = ptr::null_mut();
        assert_eq!(dopt_diagonalize(d, &mut e), DoptStatus::Ok);
        let mut rates = [0.0; 9];
        assert_eq!(dopt_rate_matrix(e, 300.0, rates.as_mut_ptr()), DoptStatus::Secular);

        let mut out = DoptVec3::default();
        assert_eq!(dopt_eigen_dipole(e, 0, 3, &mut out), DoptStatus::Config);

        let reducible = [0.0; 9];
        let mut ss = [0.0; 3];
        assert_eq!(dopt_steady_state(reducible.as_ptr(), ss.as_mut_ptr()), DoptStatus::Numeric);

        dopt_eigen_free(e);
        dopt_dimer_free(d);
        dopt_dimer_free(ptr::null_mut());
    }
}

#[test]
fn run_config_renders_and_writes() {
    let toml = CString::new(
        "command = \"spectrum\"\n[dimer.monomer1]\nenergy = 2.4\nmu = [10.0, 0.0, 0.0]\n[dimer.monomer2]\nenergy = 2.4\nmu = [10.0, 0.0, 0.0]\n[dimer.coupling]\nq12 = 0.075\n",
    )
    .unwrap();
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(dopt_run_config(toml.as_ptr(), ptr::null(), &mut out), DoptStatus::Ok);
        let text = CStr::from_ptr(out).to_string_lossy().into_owned();
        dopt_string_free(out);
        assert!(text.contains("# case = A"), "{text}");

        let dir = tempfile::tempdir().unwrap();
        let dir_c = CString::new(dir.path().to_str().unwrap()).unwrap();
        assert_eq!(dopt_run_config(toml.as_ptr(), dir_c.as_ptr(), &mut out), DoptStatus::Ok);
        let path = CStr::from_ptr(out).to_string_lossy().into_owned();
        dopt_string_free(out);
        assert_eq!(std::fs::read_to_string(path).unwrap(), text);

        let bad = CString::new("command = \"nope\"").unwrap();
        assert_eq!(dopt_run_config(bad.as_ptr(), ptr::null(), &mut out), DoptStatus::Config);
    }
    let v = unsafe { CStr::from_ptr(dopt_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
