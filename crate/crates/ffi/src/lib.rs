//! C interface to `platonic`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_load`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`PlatonicStatus`]; on failure,
//! [`platonic_last_error_message`] describes the most recent error on the
//! calling thread. Output handles are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use platonic::data::{load_image, load_volume, save_image, save_volume};
use platonic::metrics::{evaluate, Chamfer};
use platonic::networks::{checkpoint, Networks};
use platonic::render::{render, FormationMode, ImageFormation};
use platonic::volume::{Image, ViewDirection, VoxelGrid};
use platonic::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlatonicStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Array or grid dimensions do not fit together.
    Shape = 3,
    /// An argument value is out of range.
    Value = 4,
    /// A file exists but its contents are malformed.
    Format = 5,
    /// A file could not be read or written.
    Io = 6,
    Config = 7,
    /// An internal invariant failed.
    Internal = 8,
}

/// Image formation models.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlatonicFormation {
    VisualHull = 0,
    AbsorptionOnly = 1,
    /// Emission-absorption with the unnormalized per-sample weights.
    EmissionAbsorptionPaper = 2,
    /// Emission-absorption by front-to-back compositing.
    EmissionAbsorptionComposite = 3,
}

impl From<PlatonicFormation> for ImageFormation {
    fn from(f: PlatonicFormation) -> Self {
        ImageFormation::new(match f {
            PlatonicFormation::VisualHull => FormationMode::VisualHull,
            PlatonicFormation::AbsorptionOnly => FormationMode::AbsorptionOnly,
            PlatonicFormation::EmissionAbsorptionPaper => FormationMode::EmissionAbsorptionPaper,
            PlatonicFormation::EmissionAbsorptionComposite => FormationMode::EmissionAbsorptionComposite,
        })
    }
}

/// Voxel grid with `channels x n x n x n` values in `[0, 1]`.
pub struct PlatonicVolume(VoxelGrid<f32>);

/// Image with `channels x n x n` values.
pub struct PlatonicImage(Image<f32>);

/// Trained encoder, generator and discriminator.
pub struct PlatonicModel(Networks<f32>);

/// Reconstruction quality of one volume against its ground truth.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PlatonicMetrics {
    /// Mean structural dissimilarity over the evaluation views.
    pub dssim: f64,
    pub rmse: f64,
    /// Intersection over union at threshold 0.5.
    pub iou: f64,
    /// Weighted directional chamfer distance; infinite when the ground
    /// truth is empty.
    pub chamfer: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> PlatonicStatus {
    match e {
        Error::Shape(_) => PlatonicStatus::Shape,
        Error::Value(_) => PlatonicStatus::Value,
        Error::Format { .. } => PlatonicStatus::Format,
        Error::Io { .. } => PlatonicStatus::Io,
        Error::Config(_) => PlatonicStatus::Config,
        _ => PlatonicStatus::Internal,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (PlatonicStatus, String)>) -> PlatonicStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            PlatonicStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            PlatonicStatus::Internal
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (PlatonicStatus, String)>;
}

impl<T> IntoFfi<T> for platonic::Result<T> {
    fn ffi(self) -> Result<T, (PlatonicStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (PlatonicStatus, String) {
    (PlatonicStatus::NullArgument, format!("`{what}` is null"))
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, (PlatonicStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| (PlatonicStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

unsafe fn reference<'a, T>(p: *const T, what: &str) -> Result<&'a T, (PlatonicStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message for the last failed call on this thread; empty after a
/// successful call. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn platonic_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn platonic_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a volume from `channels * n^3` values in `[0, 1]`, ordered
/// channel, depth, row, column.
///
/// # Safety
/// `values` must point to `len` floats and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn platonic_volume_new(
    channels: usize,
    n: usize,
    values: *const f32,
    len: usize,
    out: *mut *mut PlatonicVolume,
) -> PlatonicStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let data = std::slice::from_raw_parts(values, len).to_vec();
        if channels.checked_mul(n.pow(3)) != Some(len) {
            return Err((PlatonicStatus::Shape, format!("{len} values for {channels} x {n}^3")));
        }
        put(out, PlatonicVolume(VoxelGrid::new(channels, n, data).ffi()?));
        Ok(())
    })
}

/// Reads a PVOX file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn platonic_volume_load(path: *const c_char, out: *mut *mut PlatonicVolume) -> PlatonicStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, PlatonicVolume(load_volume(&path).ffi()?));
        Ok(())
    })
}

/// Writes a PVOX file.
///
/// # Safety
/// `volume` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn platonic_volume_save(volume: *const PlatonicVolume, path: *const c_char) -> PlatonicStatus {
    guard(|| {
        let v = reference(volume, "volume")?;
        save_volume(&v.0, &path_arg(path, "path")?).ffi()
    })
}

/// Channel count and resolution of a volume.
///
/// # Safety
/// `volume` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn platonic_volume_dims(
    volume: *const PlatonicVolume,
    channels: *mut usize,
    n: *mut usize,
) -> PlatonicStatus {
    guard(|| {
        let v = reference(volume, "volume")?;
        if channels.is_null() || n.is_null() {
            return Err(null("channels/n"));
        }
        *channels = v.0.channels();
        *n = v.0.resolution();
        Ok(())
    })
}

/// Copies the values into `buffer`, which must hold exactly the volume's
/// `channels * n^3` floats.
///
/// # Safety
/// `volume` must be a live handle and `buffer` writable for `len` floats.
#[no_mangle]
pub unsafe extern "C" fn platonic_volume_copy_values(
    volume: *const PlatonicVolume,
    buffer: *mut f32,
    len: usize,
) -> PlatonicStatus {
    guard(|| {
        let v = reference(volume, "volume")?;
        copy_out(v.0.values(), buffer, len)
    })
}

unsafe fn copy_out(src: &[f32], buffer: *mut f32, len: usize) -> Result<(), (PlatonicStatus, String)> {
    if buffer.is_null() {
        return Err(null("buffer"));
    }
    if len != src.len() {
        return Err((PlatonicStatus::Shape, format!("buffer holds {len} values, need {}", src.len())));
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), buffer, len);
    Ok(())
}

/// Releases a volume; null is ignored.
///
/// # Safety
/// `volume` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn platonic_volume_free(volume: *mut PlatonicVolume) {
    if !volume.is_null() {
        drop(Box::from_raw(volume));
    }
}

/// Reads an 8-bit PNG as a 1- or 3-channel image, resized to `resolution`
/// by area averaging unless it is 0.
///
/// # Safety
/// `path` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn platonic_image_load(
    path: *const c_char,
    channels: usize,
    resolution: usize,
    out: *mut *mut PlatonicImage,
) -> PlatonicStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let res = (resolution > 0).then_some(resolution);
        put(out, PlatonicImage(load_image(&path, channels, res).ffi()?));
        Ok(())
    })
}

/// Writes a 1- or 3-channel image as an 8-bit PNG.
///
/// # Safety
/// `image` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn platonic_image_save(image: *const PlatonicImage, path: *const c_char) -> PlatonicStatus {
    guard(|| {
        let i = reference(image, "image")?;
        save_image(&i.0, &path_arg(path, "path")?).ffi()
    })
}

/// Channel count and resolution of an image.
///
/// # Safety
/// `image` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn platonic_image_dims(
    image: *const PlatonicImage,
    channels: *mut usize,
    n: *mut usize,
) -> PlatonicStatus {
    guard(|| {
        let i = reference(image, "image")?;
        if channels.is_null() || n.is_null() {
            return Err(null("channels/n"));
        }
        *channels = i.0.channels();
        *n = i.0.resolution();
        Ok(())
    })
}

/// Copies the `channels * n^2` values, ordered channel, row (bottom
/// first), column.
///
/// # Safety
/// `image` must be a live handle and `buffer` writable for `len` floats.
#[no_mangle]
pub unsafe extern "C" fn platonic_image_copy_values(
    image: *const PlatonicImage,
    buffer: *mut f32,
    len: usize,
) -> PlatonicStatus {
    guard(|| {
        let i = reference(image, "image")?;
        copy_out(i.0.values(), buffer, len)
    })
}

/// Releases an image; null is ignored.
///
/// # Safety
/// `image` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn platonic_image_free(image: *mut PlatonicImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// Renders `volume` seen from azimuth/elevation in degrees (`0, 0` is the
/// canonical view).
///
/// # Safety
/// `volume` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn platonic_render(
    volume: *const PlatonicVolume,
    azimuth_deg: f64,
    elevation_deg: f64,
    formation: PlatonicFormation,
    out: *mut *mut PlatonicImage,
) -> PlatonicStatus {
    guard(|| {
        let v = reference(volume, "volume")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let view = ViewDirection::from_angles(azimuth_deg, elevation_deg).ffi()?;
        put(out, PlatonicImage(render(&view, &v.0, formation.into()).ffi()?));
        Ok(())
    })
}

/// Loads a PNET checkpoint.
///
/// # Safety
/// `path` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn platonic_model_load(path: *const c_char, out: *mut *mut PlatonicModel) -> PlatonicStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, PlatonicModel(checkpoint::load(&path).ffi()?));
        Ok(())
    })
}

/// Image resolution and channel count the model expects.
///
/// # Safety
/// `model` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn platonic_model_input_dims(
    model: *const PlatonicModel,
    channels: *mut usize,
    n: *mut usize,
) -> PlatonicStatus {
    guard(|| {
        let m = reference(model, "model")?;
        if channels.is_null() || n.is_null() {
            return Err(null("channels/n"));
        }
        *channels = m.0.architecture().image_channels;
        *n = m.0.architecture().resolution;
        Ok(())
    })
}

/// Reconstructs a volume, in the camera frame of `image`.
///
/// # Safety
/// `model` and `image` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn platonic_model_reconstruct(
    model: *const PlatonicModel,
    image: *const PlatonicImage,
    out: *mut *mut PlatonicVolume,
) -> PlatonicStatus {
    guard(|| {
        let m = reference(model, "model")?;
        let i = reference(image, "image")?;
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, PlatonicVolume(m.0.reconstruct(&i.0).ffi()?));
        Ok(())
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn platonic_model_free(model: *mut PlatonicModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Compares a reconstruction with its ground truth over ten views drawn
/// from `view_seed`.
///
/// # Safety
/// `recon` and `truth` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn platonic_evaluate(
    recon: *const PlatonicVolume,
    truth: *const PlatonicVolume,
    formation: PlatonicFormation,
    view_seed: u64,
    out: *mut PlatonicMetrics,
) -> PlatonicStatus {
    guard(|| {
        let r = reference(recon, "recon")?;
        let t = reference(truth, "truth")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let e = evaluate(&r.0, &t.0, formation.into(), view_seed).ffi()?;
        *out = PlatonicMetrics {
            dssim: e.dssim,
            rmse: e.rmse,
            iou: e.iou,
            chamfer: match e.chamfer {
                Chamfer::Distance(d) => d,
                Chamfer::EmptyTarget => f64::INFINITY,
            },
        };
        Ok(())
    })
}
