use std::ffi::{CStr, CString};
use std::ptr;

use haznav::controller::{save_weights, ControllerNet, LayerSchedule};
use haznav::Rng;
use haznav_ffi::*;

fn last_error() -> String {
    let p = haznav_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn radar_threat_values() {
    let mut t = f64::NAN;
    unsafe {
        assert_eq!(haznav_threat_radar(3000.0, 185.0, &mut t), HaznavStatus::Ok);
        assert!((t - 0.5).abs() < 1e-12);
        assert_eq!(haznav_threat_radar(6000.0, 370.0, &mut t), HaznavStatus::Ok);
        assert_eq!(t, 0.0);
        assert_eq!(haznav_threat_radar(1.0, 1.0, ptr::null_mut()), HaznavStatus::NullPointer);
    }
    assert!(last_error().contains("out"));
}

#[test]
fn pixel_threat_value() {
    let mut t = 0.0;
    unsafe {
        assert_eq!(haznav_threat_pixel(200.0, 300.0, 400, 600, &mut t), HaznavStatus::Ok);
        assert!((t - 0.6).abs() < 1e-12);
        assert_eq!(haznav_threat_pixel(0.0, 0.0, 0, 600, &mut t), HaznavStatus::InvalidArgument);
    }
}

#[test]
fn fuse_blends_and_rejects_bad_pixels() {
    let (h, w) = (2, 3);
    let a: Vec<f32> = (0..h * w * 3).map(|i| i as f32).collect();
    let b: Vec<f32> = (0..h * w * 3).map(|i| 200.0 - i as f32).collect();
    let mut out = vec![0f32; a.len()];
    unsafe {
        assert_eq!(haznav_fuse(a.as_ptr(), b.as_ptr(), h, w, 0.0, out.as_mut_ptr()), HaznavStatus::Ok);
        assert_eq!(out, a);
        assert_eq!(haznav_fuse(a.as_ptr(), b.as_ptr(), h, w, 1.0, out.as_mut_ptr()), HaznavStatus::Ok);
        assert_eq!(out, b);
        assert_eq!(haznav_fuse(a.as_ptr(), b.as_ptr(), h, w, 0.5, out.as_mut_ptr()), HaznavStatus::Ok);
        assert!(out.iter().all(|&v| v == 100.0));
        let bad = vec![300f32; a.len()];
        assert_eq!(
            haznav_fuse(bad.as_ptr(), b.as_ptr(), h, w, 0.5, out.as_mut_ptr()),
            HaznavStatus::InvalidArgument
        );
    }
}

#[test]
fn config_round_trip() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(haznav_config_default(&mut cfg), HaznavStatus::Ok);
        assert_eq!(haznav_config_set_seed(cfg, 99), HaznavStatus::Ok);
        let mut json = ptr::null_mut();
        assert_eq!(haznav_config_to_json(cfg, &mut json), HaznavStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        haznav_string_free(json);
        haznav_config_free(cfg);

        let c = CString::new(text).unwrap();
        let mut again = ptr::null_mut();
        assert_eq!(haznav_config_from_json(c.as_ptr(), &mut again), HaznavStatus::Ok);
        assert!(haznav_last_error().is_null());
        haznav_config_free(again);

        let bad = CString::new("{not json").unwrap();
        assert_eq!(haznav_config_from_json(bad.as_ptr(), &mut again), HaznavStatus::Parse);
        let invalid = CString::new(r#"{"train_worlds": 0}"#).unwrap();
        assert_eq!(haznav_config_from_json(invalid.as_ptr(), &mut again), HaznavStatus::InvalidArgument);
        assert!(last_error().contains("train_worlds"));
        haznav_config_free(ptr::null_mut());
    }
}

#[test]
fn controller_load_and_predict() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.json");
    let net = ControllerNet::init(LayerSchedule::toy(8, 12, &[(3, 3, 2)], &[4, 1]), &mut Rng::new(3)).unwrap();
    save_weights(&net, &path).unwrap();
    let x = vec![0.25f32; 8 * 12 * 3];
    let want = net.predict(&[&x]).unwrap()[0].clamp(-1.0, 1.0);

    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    unsafe {
        let mut ctl = ptr::null_mut();
        assert_eq!(haznav_controller_load(cpath.as_ptr(), &mut ctl), HaznavStatus::Ok);
        let (mut h, mut w) = (0, 0);
        assert_eq!(haznav_controller_input_dims(ctl, &mut h, &mut w), HaznavStatus::Ok);
        assert_eq!((h, w), (8, 12));
        let mut y = f64::NAN;
        assert_eq!(haznav_controller_predict(ctl, x.as_ptr(), x.len(), &mut y), HaznavStatus::Ok);
        assert_eq!(y, want);
        assert_eq!(
            haznav_controller_predict(ctl, x.as_ptr(), x.len() - 1, &mut y),
            HaznavStatus::InvalidArgument
        );
        let loud = vec![2f32; x.len()];
        assert_eq!(
            haznav_controller_predict(ctl, loud.as_ptr(), loud.len(), &mut y),
            HaznavStatus::InvalidArgument
        );
        haznav_controller_free(ctl);

        let missing = CString::new(dir.path().join("none.json").to_str().unwrap()).unwrap();
        assert_eq!(haznav_controller_load(missing.as_ptr(), &mut ctl), HaznavStatus::Io);
    }
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/haznav.h");
    let status = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header])
        .status();
    match status {
        Ok(s) => assert!(s.success(), "cc rejected the header"),
        Err(_) => eprintln!("cc not found; header check skipped"),
    }
}
