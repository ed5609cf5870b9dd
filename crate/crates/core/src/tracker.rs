//! The Lucas-Kanade iteration loop: per-frame refinement of the translation
//! until the step falls under tolerance, and frame-to-frame template handoff
//! across a sequence.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::optim::{
    self, CgState, Hess2, Method, OptimizerSpec, StepVec, WarpParams,
};
use crate::raster::{GradField, Image, Patch};

/// Axis-aligned tracking rectangle in integer frame coordinates. The size is
/// fixed over a sequence; only the corner moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrackBox {
    pub x: i32,
    pub y: i32,
    pub w: i32,
    pub h: i32,
}

impl TrackBox {
    pub fn new(x: i32, y: i32, w: i32, h: i32) -> Self {
        TrackBox { x, y, w, h }
    }

    pub fn center(&self) -> (f64, f64) {
        (
            self.x as f64 + self.w as f64 / 2.0,
            self.y as f64 + self.h as f64 / 2.0,
        )
    }

    pub fn is_degenerate(&self) -> bool {
        self.w <= 0 || self.h <= 0
    }

    pub fn fits_inside(&self, width: usize, height: usize) -> bool {
        self.x >= 0
            && self.y >= 0
            && (self.x as i64 + self.w as i64) <= width as i64
            && (self.y as i64 + self.h as i64) <= height as i64
    }

    /// Translate by a rounded subpixel displacement and clamp the result so
    /// the box stays fully inside a `width` x `height` frame. Rounding is
    /// half-away-from-zero; the residual fraction is discarded.
    fn committed(&self, p: WarpParams, width: usize, height: usize) -> TrackBox {
        let clamp_axis = |corner: i32, shift: f64, size: i32, limit: usize| -> i32 {
            let moved = corner as i64 + shift.round() as i64;
            let hi = (limit as i64 - size as i64).max(0);
            moved.clamp(0, hi) as i32
        };
        TrackBox {
            x: clamp_axis(self.x, p.tx, self.w, width),
            y: clamp_axis(self.y, p.ty, self.h, height),
            w: self.w,
            h: self.h,
        }
    }
}

/// Alignment stopping rules plus the step solver to drive.
#[derive(Debug, Clone, Copy)]
pub struct TrackConfig {
    pub max_iters: u32,
    pub tol_dp: f64,
    pub optimizer: OptimizerSpec,
}

impl TrackConfig {
    pub fn new(optimizer: OptimizerSpec) -> Self {
        TrackConfig {
            max_iters: 50,
            tol_dp: 1e-3,
            optimizer,
        }
    }
}

/// Outcome of aligning one template against one frame.
#[derive(Debug, Clone, Copy)]
pub struct FrameResult {
    /// Integer-rounded tracked position.
    pub bbox: TrackBox,
    /// Subpixel refinement the box was rounded from.
    pub p_refined: WarpParams,
    pub iterations: u32,
    pub converged: bool,
    /// A singular system was hit (or the Newton fallback fired).
    pub degenerate: bool,
    /// Wall-clock seconds spent in the solver loop.
    pub elapsed: f64,
}

/// Per-frame results for a tracked sequence, one entry per frame after the
/// first.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub frames: Vec<FrameResult>,
}

impl Trajectory {
    /// CSV rows `frame,x,y,w,h,iters,converged,elapsed_s`, frame indices
    /// starting at 1 (the first frame seeds the template and is not tracked).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame,x,y,w,h,iters,converged,elapsed_s\n");
        for (i, fr) in self.frames.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{:.6}\n",
                i + 1,
                fr.bbox.x,
                fr.bbox.y,
                fr.bbox.w,
                fr.bbox.h,
                fr.iterations,
                fr.converged,
                fr.elapsed
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(self.to_csv().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

/// Counters exposed for structural checks: how often a Hessian was
/// accumulated during one align call.
#[derive(Debug, Clone, Copy, Default)]
pub struct AlignTrace {
    pub hessian_builds: u32,
    pub template_hessian: Option<Hess2>,
}

/// Displacements beyond this are treated as divergence; the solver state no
/// longer carries usable information that far off the frame.
const MAX_DISPLACEMENT: f64 = 1e6;

struct Precomputed {
    template_grads: Option<GradField>,
    template_hessian: Option<Hess2>,
    hessian_failed: bool,
}

fn precompute(template: &Patch, spec: &OptimizerSpec, trace: &mut AlignTrace) -> Result<Precomputed> {
    match spec.method {
        Method::GaussNewton => {
            // Inverse-compositional flavor: gradients and the Gram matrix
            // come from the template, so both are fixed for the whole call.
            let grads = template.gradient()?;
            let h = optim::gn_hessian(&grads);
            trace.hessian_builds += 1;
            trace.template_hessian = Some(h);
            Ok(Precomputed {
                template_grads: Some(grads),
                template_hessian: Some(h),
                hessian_failed: false,
            })
        }
        Method::Newton => {
            let sd = template.second_derivatives()?;
            match optim::newton_hessian(&sd) {
                Ok(h) => {
                    trace.hessian_builds += 1;
                    trace.template_hessian = Some(h);
                    Ok(Precomputed {
                        template_grads: None,
                        template_hessian: Some(h),
                        hessian_failed: false,
                    })
                }
                // A flat template has no curvature to invert; every
                // iteration falls back to the plain gradient step.
                Err(Error::DegenerateHessian) => Ok(Precomputed {
                    template_grads: None,
                    template_hessian: None,
                    hessian_failed: true,
                }),
                Err(e) => Err(e),
            }
        }
        _ => Ok(Precomputed {
            template_grads: None,
            template_hessian: None,
            hessian_failed: false,
        }),
    }
}

/// Align `template` against `frame` starting from a zero translation,
/// recording iteration counters in `trace`.
pub fn align_traced(
    template: &Patch,
    frame: &Image,
    bbox: &TrackBox,
    cfg: &TrackConfig,
    trace: &mut AlignTrace,
) -> Result<FrameResult> {
    if bbox.is_degenerate() {
        return Err(Error::InvalidArgument(format!(
            "degenerate box {}x{}",
            bbox.w, bbox.h
        )));
    }
    if !bbox.fits_inside(frame.width(), frame.height()) {
        return Err(Error::InvalidArgument(format!(
            "box ({}, {}, {}, {}) outside {}x{} frame",
            bbox.x,
            bbox.y,
            bbox.w,
            bbox.h,
            frame.width(),
            frame.height()
        )));
    }
    if template.width != bbox.w as usize || template.height != bbox.h as usize {
        return Err(Error::Dimension(format!(
            "template {}x{} does not match box {}x{}",
            template.width, template.height, bbox.w, bbox.h
        )));
    }

    let spec = cfg.optimizer;
    let start = Instant::now();
    let pre = precompute(template, &spec, trace)?;

    let mut p = WarpParams::zero();
    let mut cg_state = CgState::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut degenerate = pre.hessian_failed;

    while iterations < cfg.max_iters {
        iterations += 1;
        let warped = frame.extract_warped_patch(bbox, p);

        let dp = match spec.method {
            Method::GaussNewton => {
                let grads = pre.template_grads.as_ref().expect("precomputed");
                let d = optim::residual_gradient(template, &warped, grads)?;
                let h = pre.template_hessian.as_ref().expect("precomputed");
                match optim::solve_gn_step(h, &d, spec.epsilon_guard) {
                    Ok(dp) => dp,
                    Err(Error::SingularHessian { .. }) => {
                        degenerate = true;
                        StepVec::zero()
                    }
                    Err(e) => return Err(e),
                }
            }
            Method::GradientDescent => {
                let grads = warped.gradient()?;
                let d = optim::residual_gradient(template, &warped, &grads)?;
                optim::gd_step(&d, spec.eta)
            }
            Method::Cg(variant) => {
                let grads = warped.gradient()?;
                let d = optim::residual_gradient(template, &warped, &grads)?;
                // periodic restart every 2 iterations (the parameter
                // dimension): without it the constant-step direction
                // recurrence accumulates momentum without bound
                let restart = (iterations - 1) % 2 == 0;
                let beta = match cg_state.previous() {
                    Some((s_prev, d_prev)) if !restart => {
                        optim::cg_beta(variant, &d, &d_prev, &s_prev, spec.epsilon_guard)
                    }
                    _ => 0.0,
                };
                let (dp, next) = optim::cg_step(&d, &cg_state, beta, spec.eta);
                cg_state = next;
                dp
            }
            Method::Newton => {
                let grads = warped.gradient()?;
                let d = optim::residual_gradient(template, &warped, &grads)?;
                match pre.template_hessian {
                    Some(h) => {
                        let (dp, fell_back) =
                            optim::newton_step(&h, &d, spec.eta, spec.epsilon_guard);
                        degenerate |= fell_back;
                        dp
                    }
                    None => optim::gd_step(&d, spec.eta),
                }
            }
        };

        let next = WarpParams {
            tx: p.tx + dp.dx,
            ty: p.ty + dp.dy,
        };
        if !next.is_finite() || next.tx.abs() > MAX_DISPLACEMENT || next.ty.abs() > MAX_DISPLACEMENT
        {
            degenerate = true;
            break;
        }
        p = next;

        if dp.norm() < cfg.tol_dp {
            converged = true;
            break;
        }
    }

    Ok(FrameResult {
        bbox: bbox.committed(p, frame.width(), frame.height()),
        p_refined: p,
        iterations,
        converged,
        degenerate,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

/// Align without instrumentation.
pub fn align(
    template: &Patch,
    frame: &Image,
    bbox: &TrackBox,
    cfg: &TrackConfig,
) -> Result<FrameResult> {
    let mut trace = AlignTrace::default();
    align_traced(template, frame, bbox, cfg, &mut trace)
}

/// Track across consecutive frames: the template is re-cut from each frame
/// at the current box before aligning against the next one.
pub fn track_sequence(frames: &[Image], init_box: &TrackBox, cfg: &TrackConfig) -> Result<Trajectory> {
    if frames.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "tracking needs at least 2 frames, got {}",
            frames.len()
        )));
    }
    if init_box.is_degenerate() || !init_box.fits_inside(frames[0].width(), frames[0].height()) {
        return Err(Error::InvalidArgument(format!(
            "initial box ({}, {}, {}, {}) invalid for {}x{} frames",
            init_box.x,
            init_box.y,
            init_box.w,
            init_box.h,
            frames[0].width(),
            frames[0].height()
        )));
    }

    let mut bbox = *init_box;
    let mut trajectory = Trajectory::default();
    for pair in frames.windows(2) {
        let template = pair[0].extract_warped_patch(&bbox, WarpParams::zero());
        let result = align(&template, &pair[1], &bbox, cfg)?;
        bbox = result.bbox;
        trajectory.frames.push(result);
    }
    Ok(trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::Method;
    use crate::testutil::{brute_force_shift, smooth_image, square_image};

    fn gn_config() -> TrackConfig {
        TrackConfig::new(OptimizerSpec::gauss_newton())
    }

    #[test]
    fn zero_residual_converges_in_one_iteration() {
        let img = smooth_image(40, 40, 3);
        let bbox = TrackBox::new(10, 10, 16, 16);
        let template = img.extract_warped_patch(&bbox, WarpParams::zero());
        let result = align(&template, &img, &bbox, &gn_config()).unwrap();
        assert_eq!(result.iterations, 1);
        assert!(result.converged);
        assert_eq!(result.p_refined, WarpParams::zero());
        assert_eq!(result.bbox, bbox);
    }

    #[test]
    fn recovers_integer_shift_of_square() {
        // A bright square moved by exactly (2, 1); brute-force SSD confirms
        // the displacement before asserting the refined estimate.
        let frame0 = square_image(60, 60, 20, 20, 14);
        let frame1 = square_image(60, 60, 22, 21, 14);
        let bbox = TrackBox::new(17, 17, 20, 20);
        let template = frame0.extract_warped_patch(&bbox, WarpParams::zero());

        let best = brute_force_shift(&template, &frame1, &bbox, 5);
        assert_eq!(best, (2, 1));

        let result = align(&template, &frame1, &bbox, &gn_config()).unwrap();
        assert!(
            (result.p_refined.tx - 2.0).abs() <= 0.25
                && (result.p_refined.ty - 1.0).abs() <= 0.25,
            "refined p = {:?}",
            result.p_refined
        );
        assert_eq!((result.bbox.x, result.bbox.y), (19, 18));
    }

    #[test]
    fn large_step_gradient_descent_still_terminates() {
        // A high-contrast patch at step 0.08 may oscillate or diverge; the
        // loop must still stop at the iteration cap.
        let frame0 = square_image(60, 60, 20, 20, 14);
        let frame1 = square_image(60, 60, 23, 20, 14);
        let bbox = TrackBox::new(17, 17, 20, 20);
        let template = frame0.extract_warped_patch(&bbox, WarpParams::zero());
        let cfg = TrackConfig::new(OptimizerSpec::new(Method::GradientDescent, 0.08).unwrap());
        let result = align(&template, &frame1, &bbox, &cfg).unwrap();
        assert!(result.iterations <= cfg.max_iters);
        assert!(result.p_refined.is_finite());
    }

    #[test]
    fn align_rejects_bad_boxes() {
        let img = smooth_image(30, 30, 1);
        let template = Patch::from_fn(5, 5, |_, _| 0.0);
        let cfg = gn_config();
        assert!(align(&template, &img, &TrackBox::new(0, 0, 0, 5), &cfg).is_err());
        assert!(align(&template, &img, &TrackBox::new(28, 0, 5, 5), &cfg).is_err());
        assert!(align(&template, &img, &TrackBox::new(-1, 0, 5, 5), &cfg).is_err());
        // template shape must match the box
        assert!(align(&template, &img, &TrackBox::new(0, 0, 6, 5), &cfg).is_err());
    }

    #[test]
    fn flat_template_flags_degeneracy() {
        let img = Image::from_fn(30, 30, |_, _| 0.5);
        let bbox = TrackBox::new(5, 5, 10, 10);
        let template = img.extract_warped_patch(&bbox, WarpParams::zero());
        let result = align(&template, &img, &bbox, &gn_config()).unwrap();
        assert!(result.degenerate);
        assert_eq!(result.p_refined, WarpParams::zero());
        assert_eq!(result.bbox, bbox);
    }

    #[test]
    fn gauss_newton_precomputes_hessian_once() {
        let frame0 = smooth_image(50, 50, 12);
        // fractional shift keeps the solver busy for several iterations
        let frame1 = Image::from_fn(50, 50, |x, y| {
            frame0.sample_bilinear(x as f64 - 1.3, y as f64 + 0.8)
        });
        let bbox = TrackBox::new(15, 15, 18, 18);
        let template = frame0.extract_warped_patch(&bbox, WarpParams::zero());
        let mut trace = AlignTrace::default();
        let result = align_traced(&template, &frame1, &bbox, &gn_config(), &mut trace).unwrap();
        assert!(result.iterations > 1, "want a multi-iteration solve");
        assert_eq!(trace.hessian_builds, 1);

        let recomputed = optim::gn_hessian(&template.gradient().unwrap());
        assert_eq!(trace.template_hessian.unwrap(), recomputed);
    }

    #[test]
    fn static_object_tracks_in_place() {
        let img = smooth_image(48, 48, 21);
        let frames: Vec<Image> = (0..10).map(|_| img.clone()).collect();
        let init = TrackBox::new(12, 14, 16, 16);
        let traj = track_sequence(&frames, &init, &gn_config()).unwrap();
        assert_eq!(traj.frames.len(), 9);
        assert!(traj.frames.iter().all(|f| f.bbox == init));
    }

    #[test]
    fn constant_velocity_object_is_followed() {
        let base = smooth_image(100, 100, 33);
        let frames: Vec<Image> = (0..10)
            .map(|k| {
                Image::from_fn(80, 80, |x, y| base.sample_bilinear((x + k) as f64, y as f64))
            })
            .collect();
        // content slides left by 1 px/frame as k advances
        let init = TrackBox::new(40, 30, 16, 16);
        let traj = track_sequence(&frames, &init, &gn_config()).unwrap();
        let final_x = traj.frames.last().unwrap().bbox.x;
        assert!(
            (final_x - (init.x - 9)).abs() <= 1,
            "final x = {final_x}, want about {}",
            init.x - 9
        );
    }

    #[test]
    fn tracking_is_translation_equivariant() {
        let content = smooth_image(64, 64, 9);
        let (dx, dy) = (7i32, 4i32);
        let place = |ox: i32, oy: i32| -> Vec<Image> {
            (0..6)
                .map(|k| {
                    Image::from_fn(100, 100, |x, y| {
                        let sx = x as i32 - ox - k;
                        let sy = y as i32 - oy;
                        if sx >= 0 && sy >= 0 && (sx as usize) < 64 && (sy as usize) < 64 {
                            content.get(sx as usize, sy as usize)
                        } else {
                            0.0
                        }
                    })
                })
                .collect()
        };
        let frames_a = place(10, 10);
        let frames_b = place(10 + dx, 10 + dy);
        let init_a = TrackBox::new(20, 20, 14, 14);
        let init_b = TrackBox::new(20 + dx, 20 + dy, 14, 14);
        let traj_a = track_sequence(&frames_a, &init_a, &gn_config()).unwrap();
        let traj_b = track_sequence(&frames_b, &init_b, &gn_config()).unwrap();
        for (a, b) in traj_a.frames.iter().zip(&traj_b.frames) {
            assert_eq!(a.bbox.x + dx, b.bbox.x);
            assert_eq!(a.bbox.y + dy, b.bbox.y);
        }
    }

    #[test]
    fn trajectories_are_deterministic() {
        let base = smooth_image(80, 80, 40);
        let frames: Vec<Image> = (0..8)
            .map(|k| {
                Image::from_fn(64, 64, |x, y| {
                    base.sample_bilinear(x as f64 + (k % 3) as f64, y as f64 + (k % 2) as f64)
                })
            })
            .collect();
        let init = TrackBox::new(20, 20, 15, 15);
        let cfg = TrackConfig::new(OptimizerSpec::new(Method::GradientDescent, 0.02).unwrap());
        let a = track_sequence(&frames, &init, &cfg).unwrap();
        let b = track_sequence(&frames, &init, &cfg).unwrap();
        for (fa, fb) in a.frames.iter().zip(&b.frames) {
            assert_eq!(fa.bbox, fb.bbox);
            assert_eq!(fa.p_refined, fb.p_refined);
            assert_eq!(fa.iterations, fb.iterations);
            assert_eq!(fa.converged, fb.converged);
        }
    }

    #[test]
    fn track_sequence_requires_two_frames() {
        let img = smooth_image(20, 20, 2);
        let init = TrackBox::new(2, 2, 8, 8);
        assert!(track_sequence(&[img], &init, &gn_config()).is_err());
    }

    #[test]
    fn trajectory_csv_shape() {
        let img = smooth_image(32, 32, 5);
        let frames = vec![img.clone(), img.clone(), img];
        let init = TrackBox::new(8, 8, 12, 12);
        let traj = track_sequence(&frames, &init, &gn_config()).unwrap();
        let csv = traj.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "frame,x,y,w,h,iters,converged,elapsed_s");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,8,8,12,12,"));
    }
}
