//! C ABI over `sbl-core`.
//!
//! Objects are opaque handles created by `sbl_*_new`-style functions and
//! released with the matching `sbl_*_free`. Every fallible call returns an
//! [`SblStatus`]; on failure the message is available from
//! [`sbl_last_error_message`] on the same thread. Output arrays are
//! caller-allocated: pass a capacity, and `SBL_STATUS_BUFFER_TOO_SMALL` reports when
//! it is insufficient (the needed length is written to `*len_out` when given).

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sbl_core::experiments::common::{sobolev_operator, LossKind};
use sbl_core::ntk::{self, build_h_infinity};
use sbl_core::quadrature::{self, design_weights};
use sbl_core::sobolev::build_image_mask;
use sbl_core::trainer::{self, InitScheme, TrainConfig};
use sbl_core::{
    Error, ImageSobolevMask, KernelMatrix, LossOperator, QuadratureRule, SpherePointSet,
    TwoLayerReluNet,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SblStatus {
    Ok = 0,
    InvalidArgument = 1,
    NotOnSphere = 2,
    DimensionMismatch = 3,
    DuplicateNodes = 4,
    DegenerateNodes = 5,
    Infeasible = 6,
    NotPositiveDefinite = 7,
    DegenerateOperator = 8,
    NoConvergence = 9,
    Divergence = 10,
    Unsupported = 11,
    Config = 12,
    Format = 13,
    Verification = 14,
    Io = 15,
    NullPointer = 16,
    BufferTooSmall = 17,
    Panic = 18,
}

impl From<&Error> for SblStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => SblStatus::InvalidArgument,
            Error::NotOnSphere { .. } => SblStatus::NotOnSphere,
            Error::DimensionMismatch { .. } => SblStatus::DimensionMismatch,
            Error::DuplicateNodes { .. } => SblStatus::DuplicateNodes,
            Error::DegenerateNodes(_) => SblStatus::DegenerateNodes,
            Error::Infeasible { .. } => SblStatus::Infeasible,
            Error::NotPositiveDefinite(_) => SblStatus::NotPositiveDefinite,
            Error::DegenerateOperator(_) => SblStatus::DegenerateOperator,
            Error::NoConvergence(_) => SblStatus::NoConvergence,
            Error::Divergence { .. } => SblStatus::Divergence,
            Error::Unsupported(_) => SblStatus::Unsupported,
            Error::Config(_) => SblStatus::Config,
            Error::Format { .. } => SblStatus::Format,
            Error::Verification(_) => SblStatus::Verification,
            Error::Io { .. } => SblStatus::Io,
        }
    }
}

/// How μ_ℓ is computed.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SblSpectrumMethod {
    ClosedForm = 0,
    FunkHecke1d = 1,
    DenseSphere = 2,
}

/// Matrix P of the training loss.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SblLossKind {
    Mse = 0,
    Quadrature = 1,
    Sobolev = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SblInitScheme {
    Gaussian = 0,
    Antithetic = 1,
}

/// Points on S^{d-1}.
pub struct SblPointSet(SpherePointSet);
/// Nodes with positive weights.
pub struct SblQuadrature(QuadratureRule);
/// The limiting NTK Gram matrix.
pub struct SblKernel(KernelMatrix);
/// A loss matrix P.
pub struct SblLoss(LossOperator);
/// A two-layer ReLU network.
pub struct SblNet(TwoLayerReluNet);
/// A 2-D Sobolev frequency mask.
pub struct SblImageMask(ImageSobolevMask);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

enum Failure {
    Core(Error),
    Status(SblStatus, String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type FfiResult<T> = std::result::Result<T, Failure>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> SblStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            SblStatus::Ok
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            SblStatus::from(&e)
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside sbl".into());
            SblStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(SblStatus::NullPointer, format!("{what} is null"))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> FfiResult<&'a [f64]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T: Copy>(out: *mut T, value: T, what: &str) -> FfiResult<()> {
    if out.is_null() {
        return Err(null(what));
    }
    *out = value;
    Ok(())
}

unsafe fn write_array(
    values: &[f64],
    out: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> FfiResult<()> {
    if !len_out.is_null() {
        *len_out = values.len();
    }
    if cap < values.len() {
        return Err(Failure::Status(
            SblStatus::BufferTooSmall,
            format!("buffer holds {cap} values, {} needed", values.len()),
        ));
    }
    if !values.is_empty() {
        if out.is_null() {
            return Err(null("output buffer"));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    }
    Ok(())
}

unsafe fn emit<T>(value: T, out: *mut *mut T) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("handle output"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sbl_version() -> *const c_char {
    static V: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(v) => v,
            Err(_) => panic!("version"),
        };
    V.as_ptr()
}

/// Copies the calling thread's last error message (NUL-terminated, possibly
/// truncated) into `buf` and returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn sbl_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// K∞(t) for t in [-1, 1].
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sbl_k_infinity(t: f64, out: *mut f64) -> SblStatus {
    guard(|| write_out(out, ntk::k_infinity(t)?, "out"))
}

/// Eigenvalue μ_ℓ of K∞ on S^{d-1}.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sbl_mu(
    d: usize,
    ell: usize,
    method: SblSpectrumMethod,
    out: *mut f64,
) -> SblStatus {
    guard(|| {
        let v = match method {
            SblSpectrumMethod::ClosedForm => ntk::mu_closed(d, ell)?,
            SblSpectrumMethod::FunkHecke1d => ntk::mu_numeric(d, ell)?,
            SblSpectrumMethod::DenseSphere => ntk::mu_dense_sphere(d, ell, 64)?,
        };
        write_out(out, v, "out")
    })
}

/// Points from `n` rows of `d` coordinates each; every row must have unit norm.
///
/// # Safety
/// `coords` must be valid for `n * d` reads; `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn sbl_point_set_new(
    coords: *const f64,
    n: usize,
    d: usize,
    out: *mut *mut SblPointSet,
) -> SblStatus {
    guard(|| {
        let len = n
            .checked_mul(d)
            .ok_or_else(|| Failure::Core(Error::InvalidArgument("size overflow".into())))?;
        let c = slice(coords, len, "coords")?;
        emit(SblPointSet(SpherePointSet::from_rows(d, c.to_vec())?), out)
    })
}

/// Points on S¹ at the given angles.
///
/// # Safety
/// `thetas` must be valid for `n` reads; `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn sbl_point_set_from_angles(
    thetas: *const f64,
    n: usize,
    out: *mut *mut SblPointSet,
) -> SblStatus {
    guard(|| {
        emit(
            SblPointSet(SpherePointSet::from_angles(slice(thetas, n, "thetas")?)?),
            out,
        )
    })
}

/// Three arcs on S¹ with the given per-arc counts.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sbl_point_set_three_arc(
    n_base: usize,
    n_arc1: usize,
    n_arc2: usize,
    out: *mut *mut SblPointSet,
) -> SblStatus {
    guard(|| {
        emit(
            SblPointSet(quadrature::three_arc_nodes(n_base, n_arc1, n_arc2)),
            out,
        )
    })
}

/// # Safety
/// `set` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sbl_point_set_len(set: *const SblPointSet, out: *mut usize) -> SblStatus {
    guard(|| write_out(out, get(set, "set")?.0.len(), "out"))
}

/// # Safety
/// `set` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sbl_point_set_free(set: *mut SblPointSet) {
    release(set)
}

/// Least-norm positive rule exact through degree `l_max`.
///
/// # Safety
/// `set` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sbl_quadrature_design(
    set: *const SblPointSet,
    l_max: usize,
    out: *mut *mut SblQuadrature,
) -> SblStatus {
    guard(|| {
        emit(
            SblQuadrature(design_weights(&get(set, "set")?.0, l_max)?),
            out,
        )
    })
}

/// Copies the weights into `out`.
///
/// # Safety
/// `rule` must be a live handle, `out` valid for `cap` writes, `len_out` null or valid.
#[no_mangle]
pub unsafe extern "C" fn sbl_quadrature_weights(
    rule: *const SblQuadrature,
    out: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> SblStatus {
    guard(|| write_array(get(rule, "rule")?.0.weights(), out, cap, len_out))
}

/// Σ c_i f(x_i) for samples f(x_i) in node order.
///
/// # Safety
/// `rule` must be a live handle, `samples` valid for `n` reads, `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn sbl_quadrature_integrate(
    rule: *const SblQuadrature,
    samples: *const f64,
    n: usize,
    out: *mut f64,
) -> SblStatus {
    guard(|| {
        let v = quadrature::integrate(&get(rule, "rule")?.0, slice(samples, n, "samples")?)?;
        write_out(out, v, "out")
    })
}

/// # Safety
/// `rule` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sbl_quadrature_free(rule: *mut SblQuadrature) {
    release(rule)
}

/// H∞ over a point set.
///
/// # Safety
/// `set` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sbl_kernel_new(
    set: *const SblPointSet,
    out: *mut *mut SblKernel,
) -> SblStatus {
    guard(|| emit(SblKernel(build_h_infinity(&get(set, "set")?.0)?), out))
}

/// Copies the n×n entries, row-major.
///
/// # Safety
/// `kernel` must be a live handle, `out` valid for `cap` writes, `len_out` null or valid.
#[no_mangle]
pub unsafe extern "C" fn sbl_kernel_entries(
    kernel: *const SblKernel,
    out: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> SblStatus {
    guard(|| {
        let m = get(kernel, "kernel")?.0.entries();
        let rows: Vec<f64> = m.transpose().as_slice().to_vec();
        write_array(&rows, out, cap, len_out)
    })
}

/// Eigenvalues in ascending order.
///
/// # Safety
/// `kernel` must be a live handle, `out` valid for `cap` writes, `len_out` null or valid.
#[no_mangle]
pub unsafe extern "C" fn sbl_kernel_eigenvalues(
    kernel: *const SblKernel,
    out: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> SblStatus {
    guard(|| write_array(&get(kernel, "kernel")?.0.eigenvalues(), out, cap, len_out))
}

/// # Safety
/// `kernel` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sbl_kernel_free(kernel: *mut SblKernel) {
    release(kernel)
}

/// Loss matrix for a rule: n⁻¹I, D_c, or P_s (using `s` and `l_max`).
///
/// # Safety
/// `rule` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sbl_loss_new(
    rule: *const SblQuadrature,
    kind: SblLossKind,
    s: f64,
    l_max: usize,
    out: *mut *mut SblLoss,
) -> SblStatus {
    guard(|| {
        let rule = &get(rule, "rule")?.0;
        let op = match kind {
            SblLossKind::Mse => LossKind::Mse.build(rule)?,
            SblLossKind::Quadrature => LossKind::Quadrature.build(rule)?,
            SblLossKind::Sobolev => LossOperator::Sobolev(sobolev_operator(rule, s, l_max)?),
        };
        emit(SblLoss(op), out)
    })
}

/// ½ vᵀPv.
///
/// # Safety
/// `loss` must be a live handle, `v` valid for `n` reads, `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn sbl_loss_value(
    loss: *const SblLoss,
    v: *const f64,
    n: usize,
    out: *mut f64,
) -> SblStatus {
    guard(|| {
        let op = &get(loss, "loss")?.0;
        if n != op.n() {
            return Err(Error::DimensionMismatch {
                expected: op.n(),
                got: n,
            }
            .into());
        }
        write_out(out, 0.5 * op.quad_form(slice(v, n, "v")?), "out")
    })
}

/// Step-size bound that guarantees descent for this loss.
///
/// # Safety
/// `loss` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sbl_loss_max_step_size(loss: *const SblLoss, out: *mut f64) -> SblStatus {
    guard(|| {
        let op = &get(loss, "loss")?.0;
        write_out(out, trainer::max_step_size(op, op.n()), "out")
    })
}

/// # Safety
/// `loss` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sbl_loss_free(loss: *mut SblLoss) {
    release(loss)
}

/// Random network of width `m` on S^{d-1}.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sbl_net_new(
    m: usize,
    d: usize,
    kappa: f64,
    scheme: SblInitScheme,
    seed: u64,
    out: *mut *mut SblNet,
) -> SblStatus {
    guard(|| {
        let scheme = match scheme {
            SblInitScheme::Gaussian => InitScheme::Gaussian,
            SblInitScheme::Antithetic => InitScheme::Antithetic,
        };
        emit(SblNet(trainer::init_net(m, d, kappa, seed, scheme)?), out)
    })
}

/// Network outputs at every point of `set`.
///
/// # Safety
/// Handles must be live, `out` valid for `cap` writes, `len_out` null or valid.
#[no_mangle]
pub unsafe extern "C" fn sbl_net_predict(
    net: *const SblNet,
    set: *const SblPointSet,
    out: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> SblStatus {
    guard(|| {
        let u = get(net, "net")?.0.forward_batch(&get(set, "set")?.0)?;
        write_array(&u, out, cap, len_out)
    })
}

/// Full-batch gradient descent on ½(y − u)ᵀP(y − u); writes the final loss.
///
/// # Safety
/// Handles must be live, `y` valid for `n` reads, `final_loss` null or valid.
#[no_mangle]
pub unsafe extern "C" fn sbl_net_train(
    net: *mut SblNet,
    set: *const SblPointSet,
    loss: *const SblLoss,
    y: *const f64,
    n: usize,
    eta: f64,
    epochs: usize,
    final_loss: *mut f64,
) -> SblStatus {
    guard(|| {
        let net = net.as_mut().ok_or_else(|| null("net"))?;
        let cfg = TrainConfig {
            record_stride: epochs.max(1),
            ..TrainConfig::new(eta, epochs)
        };
        let trace = trainer::train(
            &mut net.0,
            slice(y, n, "y")?,
            &get(set, "set")?.0,
            &get(loss, "loss")?.0,
            &cfg,
            &mut [],
        )?;
        if !final_loss.is_null() {
            *final_loss = trace.final_loss();
        }
        Ok(())
    })
}

/// # Safety
/// `net` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sbl_net_free(net: *mut SblNet) {
    release(net)
}

/// Mask (1 + ‖ξ‖²)^{s/2} over centered frequencies of an h×w image.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sbl_image_mask_new(
    h: usize,
    w: usize,
    s: f64,
    out: *mut *mut SblImageMask,
) -> SblStatus {
    guard(|| emit(SblImageMask(build_image_mask(h, w, s)?), out))
}

/// ½‖S ∘ F r‖² for a row-major residual image r.
///
/// # Safety
/// `mask` must be a live handle, `r` valid for `len` reads, `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn sbl_image_mask_loss(
    mask: *const SblImageMask,
    r: *const f64,
    len: usize,
    out: *mut f64,
) -> SblStatus {
    guard(|| {
        let v = get(mask, "mask")?.0.residual_loss(slice(r, len, "r")?)?;
        write_out(out, v, "out")
    })
}

/// # Safety
/// `mask` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sbl_image_mask_free(mask: *mut SblImageMask) {
    release(mask)
}
