use std::ffi::CString;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use tvdeconv_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { tvd_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn image_roundtrip_and_errors() {
    unsafe {
        let data = [0.0, 0.25, 0.5, 1.0];
        let mut img = ptr::null_mut();
        assert_eq!(tvd_image_new(2, data.as_ptr(), 4, &mut img), TvdStatus::Ok);
        let mut n = 0;
        assert_eq!(tvd_image_size(img, &mut n), TvdStatus::Ok);
        assert_eq!(n, 2);
        let mut back = [0.0; 4];
        assert_eq!(tvd_image_copy_data(img, back.as_mut_ptr(), 4), TvdStatus::Ok);
        assert_eq!(back, data);
        assert_eq!(tvd_image_copy_data(img, back.as_mut_ptr(), 3), TvdStatus::OutOfRange);

        let mut bad = ptr::null_mut();
        assert_eq!(tvd_image_new(3, data.as_ptr(), 4, &mut bad), TvdStatus::InvalidArgument);
        assert!(bad.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(tvd_image_new(2, ptr::null(), 4, &mut bad), TvdStatus::NullPointer);
        assert_eq!(tvd_image_size(ptr::null(), &mut n), TvdStatus::NullPointer);

        let mut k = ptr::null_mut();
        let spec = TvdKernelSpec { kind: TvdKernelKind::Average, size: 4, sigma: 0.0 };
        assert_eq!(tvd_kernel_new(spec, &mut k), TvdStatus::InvalidArgument);
        let spec = TvdKernelSpec { kind: TvdKernelKind::Average, size: 3, sigma: 0.0 };
        assert_eq!(tvd_kernel_new(spec, &mut k), TvdStatus::Ok);
        let mut f = ptr::null_mut();
        assert_eq!(tvd_degrade(img, k, 0.0, 0, &mut f), TvdStatus::KernelTooLarge);
        assert!(last_error().contains("does not fit"));

        let mut snr = 0.0;
        assert_eq!(tvd_snr_db(img, img, &mut snr), TvdStatus::Ok);
        assert_eq!(snr, 300.0);
        assert_eq!(last_error(), "");

        tvd_kernel_free(k);
        tvd_image_free(img);
        tvd_image_free(ptr::null_mut());
    }
}

#[test]
fn solve_through_the_abi_matches_the_library() {
    unsafe {
        let mut truth = ptr::null_mut();
        assert_eq!(tvd_phantom(TvdPhantom::Blocks, 16, &mut truth), TvdStatus::Ok);
        let mut k = ptr::null_mut();
        let spec = TvdKernelSpec { kind: TvdKernelKind::Gaussian, size: 3, sigma: 0.8 };
        assert_eq!(tvd_kernel_new(spec, &mut k), TvdStatus::Ok);
        let mut f = ptr::null_mut();
        assert_eq!(tvd_degrade(truth, k, 0.01, 11, &mut f), TvdStatus::Ok);

        let schedule = [1.0, 4.0, 16.0, 64.0];
        let mut cfg = tvd_solver_config_default();
        cfg.beta_schedule = schedule.as_ptr();
        cfg.beta_schedule_len = schedule.len();
        let mut trace = ptr::null_mut();
        assert_eq!(tvd_solve(TvdSolver::Ftvd3, f, k, &cfg, truth, &mut trace), TvdStatus::Ok);
        let mut len = 0;
        assert_eq!(tvd_trace_len(trace, &mut len), TvdStatus::Ok);
        assert_eq!(len, 4);

        // same computation through the Rust API
        let truth_rs = tvdeconv::harness::blocks_phantom(16);
        let k_rs = tvdeconv::make_kernel(tvdeconv::KernelSpec::Gaussian { size: 3, sigma: 0.8 }).unwrap();
        let f_rs = tvdeconv::degrade(&truth_rs, &k_rs, 0.01, 11).unwrap();
        let cfg_rs = tvdeconv::SolverConfig { beta_schedule: schedule.to_vec(), ..Default::default() };
        let expected = tvdeconv::penalty_continuation_solve(&f_rs, &k_rs, &cfg_rs, Some(&truth_rs)).unwrap();

        let mut info = TvdRecordInfo::default();
        for i in 0..len {
            assert_eq!(tvd_trace_record(trace, i, &mut info), TvdStatus::Ok);
            let r = &expected.records[i];
            assert_eq!(info.stage_index, r.stage_index);
            assert_eq!(info.snr_db, r.snr_db.unwrap());
            assert_eq!(info.objective_tv, r.objective_tv);
            assert!(info.has_snr && info.stage_end);
        }
        assert_eq!(tvd_trace_record(trace, len, &mut info), TvdStatus::OutOfRange);

        let mut u = ptr::null_mut();
        assert_eq!(tvd_trace_iterate(trace, len - 1, &mut u), TvdStatus::Ok);
        let mut buf = vec![0.0; 256];
        assert_eq!(tvd_image_copy_data(u, buf.as_mut_ptr(), 256), TvdStatus::Ok);
        assert_eq!(buf.as_slice(), expected.records[len - 1].u.data());

        let mut best = 99;
        assert_eq!(tvd_trace_best(trace, TvdBestBy::Snr, &mut best), TvdStatus::Ok);
        assert_eq!(best, tvdeconv::best_iterate(&expected, tvdeconv::BestBy::Snr).unwrap());

        let (mut u1, mut u2, mut res) = (ptr::null_mut(), ptr::null_mut(), -1.0);
        assert_eq!(tvd_trace_decompose(trace, k, best, &mut u1, &mut u2, &mut res), TvdStatus::Ok);
        assert!(res >= 0.0);
        let (mut a, mut b) = (vec![0.0; 256], vec![0.0; 256]);
        tvd_image_copy_data(u1, a.as_mut_ptr(), 256);
        tvd_image_copy_data(u2, b.as_mut_ptr(), 256);
        let u_best = expected.records[best].u.data();
        for i in 0..256 {
            assert!((a[i] + b[i] - u_best[i]).abs() < 1e-12);
        }

        let dir = tempfile::tempdir().unwrap();
        let csv = CString::new(dir.path().join("trace.csv").to_str().unwrap()).unwrap();
        assert_eq!(tvd_trace_write_csv(trace, csv.as_ptr()), TvdStatus::Ok);
        let text = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
        assert_eq!(text, tvdeconv::harness::trace_csv(&expected));

        // no ground truth: SNR-based selection reports missing scores
        let mut bare = ptr::null_mut();
        assert_eq!(tvd_solve(TvdSolver::Ftvd4, f, k, &cfg, ptr::null(), &mut bare), TvdStatus::Ok);
        assert_eq!(tvd_trace_best(bare, TvdBestBy::Snr, &mut best), TvdStatus::MissingScores);
        assert_eq!(tvd_trace_best(bare, TvdBestBy::ObjectiveTv, &mut best), TvdStatus::Ok);

        let mut bad_cfg = cfg;
        bad_cfg.mu = -1.0;
        let mut t2 = ptr::null_mut();
        assert_eq!(tvd_solve(TvdSolver::Ftvd3, f, k, &bad_cfg, truth, &mut t2), TvdStatus::InvalidArgument);

        for img in [truth, f, u, u1, u2] {
            tvd_image_free(img);
        }
        tvd_trace_free(trace);
        tvd_trace_free(bare);
        tvd_kernel_free(k);
    }
}

#[test]
fn pgm_io_through_the_abi() {
    unsafe {
        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("p.pgm").to_str().unwrap()).unwrap();
        let mut img = ptr::null_mut();
        assert_eq!(tvd_phantom(TvdPhantom::Composite, 8, &mut img), TvdStatus::Ok);
        assert_eq!(tvd_image_save_pgm(img, path.as_ptr()), TvdStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(tvd_image_load(path.as_ptr(), &mut back), TvdStatus::Ok);
        let mut a = vec![0.0; 64];
        let mut b = vec![0.0; 64];
        tvd_image_copy_data(img, a.as_mut_ptr(), 64);
        tvd_image_copy_data(back, b.as_mut_ptr(), 64);
        for i in 0..64 {
            assert!((a[i] - b[i]).abs() <= 0.5 / 65535.0 + 1e-15);
        }
        let missing = CString::new(dir.path().join("none.pgm").to_str().unwrap()).unwrap();
        let mut none = ptr::null_mut();
        assert_eq!(tvd_image_load(missing.as_ptr(), &mut none), TvdStatus::Io);
        tvd_image_free(img);
        tvd_image_free(back);
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/tvdeconv.h")).unwrap();
    for name in [
        "tvd_image_new",
        "tvd_solve",
        "tvd_trace_record",
        "tvd_trace_decompose",
        "tvd_last_error_message",
        "typedef struct TvdTrace TvdTrace",
        "TVD_STATUS_SINGULAR_SYSTEM = 5",
    ] {
        assert!(header.contains(name), "header is missing {name}");
    }
}

/// Compiles examples/smoke.c against the generated header and the static
/// library, then runs it. Skipped when no C compiler is available.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libtvdeconv_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: static library or cc not available");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(manifest.join("examples/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "smoke failed: {stdout} {}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("error path ok"));
    assert_eq!(stdout.matches("records").count(), 2);
}
