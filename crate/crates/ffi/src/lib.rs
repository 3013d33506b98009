//! C interface to the trajectory-shape similarity library.
//!
//! Every fallible function returns a [`BiltsStatus`]. On failure a
//! description is available from [`bilts_last_error_message`] on the same
//! thread. Trajectories are opaque handles released with
//! [`bilts_trajectory_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nalgebra::{Matrix4, Quaternion, UnitQuaternion, Vector3};

use bilts::datasets::io::UNIT_TOLERANCE;
use bilts::datasets::read_record;
use bilts::reparam::{preprocess, ProgressType, ReparamConfig, TemporalTrajectory};
use bilts::se3::Pose;
use bilts::segmentation::{shape_change_signal, SegmentationParams};
use bilts::similarity::{trajectory_distance, TrajectoryDistanceParams};
use bilts::BiltsError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiltsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Schema = 5,
    /// Singular decomposition, degenerate progress, rotation near pi and
    /// similar numerical failures.
    Numeric = 6,
    TooShort = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Progress variable used for reparameterization.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiltsProgress {
    Arclength = 0,
    Angle = 1,
    ScrewPath = 2,
}

/// Comparison settings. `progress` holds a `BiltsProgress` value.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiltsParams {
    pub progress: u32,
    /// Length scale in metres.
    pub l: f64,
    /// Descriptor window in progress units.
    pub xi: f64,
    pub n_out: usize,
    /// Smoothing width in samples.
    pub sigma: f64,
    /// Regularized frames with rotational alignment.
    pub plus: bool,
}

/// Opaque pose sequence sampled at a constant period.
pub struct BiltsTrajectory {
    inner: TemporalTrajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &BiltsError) -> BiltsStatus {
    match e {
        BiltsError::InvalidArgument(_) | BiltsError::IndexOutOfRange { .. } | BiltsError::MismatchedScale { .. } => {
            BiltsStatus::InvalidArgument
        }
        BiltsError::Io { .. } => BiltsStatus::Io,
        BiltsError::Parse { .. } => BiltsStatus::Parse,
        BiltsError::Schema { .. } | BiltsError::Protocol(_) => BiltsStatus::Schema,
        BiltsError::TooShort { .. } => BiltsStatus::TooShort,
        BiltsError::RotationNearPi { .. }
        | BiltsError::PureTranslation { .. }
        | BiltsError::DegenerateProgress { .. }
        | BiltsError::SingularDecomposition { .. }
        | BiltsError::SingularInvariants { .. } => BiltsStatus::Numeric,
    }
}

struct Failure(BiltsStatus, String);

impl From<BiltsError> for Failure {
    fn from(e: BiltsError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BiltsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            clear_error();
            BiltsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            BiltsStatus::Panic
        }
    }
}

fn null() -> Failure {
    Failure(BiltsStatus::NullPointer, "null pointer argument".into())
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(BiltsStatus::InvalidArgument, msg.into())
}

fn progress_type(params: &BiltsParams) -> Result<ProgressType, Failure> {
    match params.progress {
        0 => Ok(ProgressType::Arclength),
        1 => Ok(ProgressType::Angle),
        2 => Ok(ProgressType::ScrewPath { l: params.l }),
        p => Err(invalid(format!("unknown progress type {p}"))),
    }
}

fn reparam_config(params: &BiltsParams) -> Result<ReparamConfig, Failure> {
    Ok(ReparamConfig { progress: progress_type(params)?, n_out: params.n_out, sigma: params.sigma })
}

fn boxed(traj: TemporalTrajectory, out: *mut *mut BiltsTrajectory) {
    // SAFETY: callers check `out` for null before building the trajectory.
    unsafe { *out = Box::into_raw(Box::new(BiltsTrajectory { inner: traj })) };
}

/// Defaults: screw-path progress, `l = 0.5`, `xi = 0.06`, 50 samples,
/// smoothing width 2, regularized.
#[unsafe(no_mangle)]
pub extern "C" fn bilts_params_default() -> BiltsParams {
    BiltsParams {
        progress: BiltsProgress::ScrewPath as u32,
        l: 0.5,
        xi: 0.06,
        n_out: bilts::reparam::DEFAULT_N_OUT,
        sigma: bilts::reparam::DEFAULT_SIGMA,
        plus: true,
    }
}

/// Builds a trajectory from `n` rows of `px py pz qw qx qy qz`.
///
/// # Safety
/// `data` must point to `7 * n` readable doubles and `out` to writable
/// storage for one handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn bilts_trajectory_from_poses(
    data: *const f64,
    n: usize,
    dt: f64,
    out: *mut *mut BiltsTrajectory,
) -> BiltsStatus {
    guard(|| {
        if data.is_null() || out.is_null() {
            return Err(null());
        }
        let len = n.checked_mul(7).ok_or_else(|| invalid("pose count overflows"))?;
        // SAFETY: guaranteed by the caller.
        let rows = unsafe { std::slice::from_raw_parts(data, len) };
        let mut poses = Vec::with_capacity(n);
        for (i, r) in rows.chunks_exact(7).enumerate() {
            let q = Quaternion::new(r[3], r[4], r[5], r[6]);
            if (q.norm() - 1.0).abs() > UNIT_TOLERANCE {
                return Err(invalid(format!("quaternion of pose {i} has norm {}", q.norm())));
            }
            let unit = UnitQuaternion::from_quaternion(q);
            poses.push(Pose::from_quaternion(&unit, Vector3::new(r[0], r[1], r[2])));
        }
        boxed(TemporalTrajectory::new(poses, dt)?, out);
        Ok(())
    })
}

/// Builds a trajectory from `n` row-major 4x4 homogeneous matrices.
///
/// # Safety
/// `data` must point to `16 * n` readable doubles and `out` to writable
/// storage for one handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn bilts_trajectory_from_matrices(
    data: *const f64,
    n: usize,
    dt: f64,
    out: *mut *mut BiltsTrajectory,
) -> BiltsStatus {
    guard(|| {
        if data.is_null() || out.is_null() {
            return Err(null());
        }
        let len = n.checked_mul(16).ok_or_else(|| invalid("pose count overflows"))?;
        // SAFETY: guaranteed by the caller.
        let rows = unsafe { std::slice::from_raw_parts(data, len) };
        let mut poses = Vec::with_capacity(n);
        for (i, r) in rows.chunks_exact(16).enumerate() {
            let pose = Pose::from_homogeneous(&Matrix4::from_row_slice(r));
            if pose.orthonormality_error() > UNIT_TOLERANCE {
                return Err(invalid(format!("rotation of pose {i} is not orthonormal")));
            }
            poses.push(pose);
        }
        boxed(TemporalTrajectory::new(poses, dt)?, out);
        Ok(())
    })
}

/// Reads a pose CSV file with optional JSON sidecar.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable storage for one
/// handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn bilts_trajectory_load_csv(path: *const c_char, out: *mut *mut BiltsTrajectory) -> BiltsStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return Err(null());
        }
        // SAFETY: guaranteed by the caller.
        let s = unsafe { CStr::from_ptr(path) }.to_str().map_err(|_| invalid("path is not valid UTF-8"))?;
        let record = read_record(Path::new(s))?;
        boxed(record.temporal()?, out);
        Ok(())
    })
}

/// Number of poses, or 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn bilts_trajectory_len(traj: *const BiltsTrajectory) -> usize {
    // SAFETY: guaranteed by the caller.
    unsafe { traj.as_ref() }.map_or(0, |t| t.inner.len())
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `traj` must be null or a handle not yet freed.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn bilts_trajectory_free(traj: *mut BiltsTrajectory) {
    if !traj.is_null() {
        // SAFETY: the handle came from Box::into_raw and is freed once.
        drop(unsafe { Box::from_raw(traj) });
    }
}

/// Trajectory-level distance between two handles.
///
/// # Safety
/// `a` and `b` must be live handles, `params` readable and `out` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn bilts_distance(
    a: *const BiltsTrajectory,
    b: *const BiltsTrajectory,
    params: *const BiltsParams,
    out: *mut f64,
) -> BiltsStatus {
    guard(|| {
        // SAFETY: guaranteed by the caller.
        let (a, b, p) = unsafe { (a.as_ref(), b.as_ref(), params.as_ref()) };
        let (Some(a), Some(b), Some(p)) = (a, b, p) else { return Err(null()) };
        if out.is_null() {
            return Err(null());
        }
        let cfg = reparam_config(p)?;
        let ga = preprocess(&a.inner, &cfg)?;
        let gb = preprocess(&b.inner, &cfg)?;
        let dp = if p.plus { TrajectoryDistanceParams::bilts_plus(p.l, p.xi) } else { TrajectoryDistanceParams::bilts(p.l, p.xi) };
        let d = trajectory_distance(&ga, &gb, &dp)?;
        // SAFETY: checked non-null above.
        unsafe { *out = d };
        Ok(())
    })
}

/// Distances between consecutive descriptors.
///
/// `*len` receives the signal length. When `buffer` is null or `capacity` is
/// smaller than the signal, nothing is copied and `BILTS_STATUS_BUFFER_TOO_SMALL`
/// is returned.
///
/// # Safety
/// `traj` must be a live handle, `params` readable, `len` writable and
/// `buffer` null or writable for `capacity` doubles.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn bilts_shape_change_signal(
    traj: *const BiltsTrajectory,
    params: *const BiltsParams,
    buffer: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> BiltsStatus {
    guard(|| {
        // SAFETY: guaranteed by the caller.
        let (t, p) = unsafe { (traj.as_ref(), params.as_ref()) };
        let (Some(t), Some(p)) = (t, p) else { return Err(null()) };
        if len.is_null() {
            return Err(null());
        }
        let geo = preprocess(&t.inner, &reparam_config(p)?)?;
        let sig = shape_change_signal(&geo, &SegmentationParams { l: p.l, xi: p.xi, plus: p.plus })?;
        // SAFETY: checked non-null above.
        unsafe { *len = sig.d.len() };
        if buffer.is_null() || capacity < sig.d.len() {
            return Err(Failure(
                BiltsStatus::BufferTooSmall,
                format!("signal has {} values, capacity is {capacity}", sig.d.len()),
            ));
        }
        // SAFETY: the buffer holds at least `sig.d.len()` doubles.
        unsafe { ptr::copy_nonoverlapping(sig.d.as_ptr(), buffer, sig.d.len()) };
        Ok(())
    })
}

/// Message of the last failure on this thread, or null after a success.
/// Valid until the next call into this library on the same thread.
#[unsafe(no_mangle)]
pub extern "C" fn bilts_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[unsafe(no_mangle)]
pub extern "C" fn bilts_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
