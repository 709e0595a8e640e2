//! Moving-horizon trajectory optimization.
//!
//! Plans joint-velocity sequences over a finite horizon with single-shooting
//! dynamics `x_{k+1} = x_k + u_k * dt`. The cost combines per-step quadratic
//! goal and control terms, a one-sided quadratic obstacle margin cost, an
//! optional reference-waypoint tracking term, and the information cost
//! `w_i / (O(x_k) * G(x_k) + epsilon)`, a barrier that peaks when either the
//! camera orientation factor or the interpolated information gain vanishes.
//!
//! The solver is a projected-gradient descent on the controls
//! (Barzilai-Borwein steps with Armijo backtracking) with quadratic penalties
//! for the non-box inequality constraints; penalty weights escalate until the
//! returned plan satisfies every constraint within tolerance. Velocity bounds
//! are handled exactly by projection.

use nalgebra::{DVector, Point3, Vector3};

use crate::error::{Error, Result};
use crate::geom::Primitive;
use crate::ig::CameraModel;
use crate::infodist::{DistributionBuffer, IdwParams};
use crate::kinematics::{FkResult, JointState, KinematicChain};
use crate::scalar::Real;

/// Horizon, weights, and solver knobs.
#[derive(Debug, Clone)]
pub struct HorizonConfig<T: Real> {
    /// Number of control steps K; the plan has K+1 states.
    pub steps: usize,
    /// Time between steps (s).
    pub dt: T,
    /// Per-joint goal weight (diagonal of Q).
    pub goal_weight: DVector<T>,
    /// Per-joint control weight (diagonal of R).
    pub control_weight: DVector<T>,
    /// Obstacle margin cost weight.
    pub obstacle_weight: T,
    /// Information cost weight; zero disables the term entirely.
    pub info_weight: T,
    /// Reference tracking weight.
    pub reference_weight: T,
    /// Barrier regularizer in the information cost denominator.
    pub epsilon: T,
    /// Clearance margin (m) below which the obstacle cost activates.
    pub clearance_margin: T,
    /// Constraint satisfaction tolerance on returned plans.
    pub constraint_tol: T,
    pub max_outer_iterations: usize,
    pub max_inner_iterations: usize,
}

impl<T: Real> HorizonConfig<T> {
    pub fn defaults(dof: usize) -> Self {
        Self {
            steps: 30,
            dt: T::from_c(0.1),
            goal_weight: DVector::from_element(dof, T::one()),
            control_weight: DVector::from_element(dof, T::from_c(0.1)),
            obstacle_weight: T::from_c(100.0),
            info_weight: T::zero(),
            reference_weight: T::zero(),
            epsilon: T::from_c(1e-7),
            clearance_margin: T::from_c(0.05),
            constraint_tol: T::from_c(1e-6),
            max_outer_iterations: 10,
            max_inner_iterations: 150,
        }
    }

    pub fn validate(&self, dof: usize) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::Validation("horizon needs at least one step".into()));
        }
        if !(self.dt > T::zero()) {
            return Err(Error::Validation("time step must be positive".into()));
        }
        if !(self.epsilon > T::zero()) {
            return Err(Error::Validation("barrier epsilon must be positive".into()));
        }
        if self.goal_weight.len() != dof || self.control_weight.len() != dof {
            return Err(Error::Validation("weight vectors must match the joint count".into()));
        }
        let nonneg = |v: T| v >= T::zero();
        if !self.goal_weight.iter().all(|w| nonneg(*w))
            || !self.control_weight.iter().all(|w| nonneg(*w))
            || !nonneg(self.obstacle_weight)
            || !nonneg(self.info_weight)
            || !nonneg(self.reference_weight)
        {
            return Err(Error::Validation("weights must be non-negative".into()));
        }
        Ok(())
    }
}

/// Time-indexed waypoint sequence from an external global planner.
#[derive(Debug, Clone)]
pub struct ReferencePath<T: Real> {
    pub waypoints: Vec<DVector<T>>,
    /// Time spacing of consecutive waypoints (s).
    pub dt: T,
}

impl<T: Real> ReferencePath<T> {
    /// Waypoint active at absolute time `t` (index clamped to the ends).
    pub fn active(&self, t: T) -> &DVector<T> {
        let idx = (t / self.dt).floor().to_c().max(0.0) as usize;
        &self.waypoints[idx.min(self.waypoints.len() - 1)]
    }
}

/// Squared joint-space distance of a state to the waypoint active at `t`.
/// The tracking weight is applied by the caller.
pub fn reference_tracking_term<T: Real>(x: &DVector<T>, path: &ReferencePath<T>, t: T) -> T {
    let wp = path.active(t);
    (x - wp).norm_squared()
}

/// Per-step information cost: `w_i / (og + epsilon)`.
pub fn info_stage_cost<T: Real>(info_weight: T, epsilon: T, og: T) -> T {
    info_weight / (og + epsilon)
}

/// Everything the optimizer reads but does not own. The distribution buffer
/// view is frozen for the duration of one solve.
pub struct PlannerContext<'a, T: Real> {
    pub chain: &'a KinematicChain<T>,
    pub obstacles: &'a [Primitive<T>],
    pub poi: Point3<T>,
    pub camera: CameraModel<T>,
    pub buffer: Option<&'a DistributionBuffer<T>>,
    pub idw: IdwParams<T>,
    pub goal: DVector<T>,
    pub reference: Option<&'a ReferencePath<T>>,
    /// Control executed in the previous cycle; seeds the acceleration limits.
    pub previous_control: Option<DVector<T>>,
    /// Absolute time of the plan's first state, for reference indexing.
    pub plan_start_time: T,
}

/// Cost totals per term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown<T: Real> {
    pub goal: T,
    pub control: T,
    pub obstacle: T,
    pub reference: T,
    pub information: T,
    pub total: T,
}

impl<T: Real> CostBreakdown<T> {
    fn zero() -> Self {
        Self {
            goal: T::zero(),
            control: T::zero(),
            obstacle: T::zero(),
            reference: T::zero(),
            information: T::zero(),
            total: T::zero(),
        }
    }
}

/// Per-step cost record, used for plan logs.
#[derive(Debug, Clone, Copy)]
pub struct StageCosts<T: Real> {
    pub goal: T,
    pub control: T,
    pub obstacle: T,
    pub reference: T,
    pub information: T,
    /// Orientation factor at this state (1 when the term is disabled).
    pub orientation: T,
    /// Interpolated gain at this state (0 when the term is disabled).
    pub gain: T,
}

/// A discrete-time plan: `steps + 1` states and `steps` controls satisfying
/// `x_{k+1} = x_k + u_k * dt` exactly.
#[derive(Debug, Clone)]
pub struct HorizonPlan<T: Real> {
    pub states: Vec<DVector<T>>,
    pub controls: Vec<DVector<T>>,
    pub cost: CostBreakdown<T>,
    /// Largest constraint violation of the returned plan.
    pub max_violation: T,
    /// Set when the solve stalled before reaching tolerance.
    pub warning: bool,
}

impl<T: Real> HorizonPlan<T> {
    /// Builds a plan by rolling the controls out from `x0`.
    pub fn rollout(x0: DVector<T>, controls: Vec<DVector<T>>, dt: T) -> Self {
        let mut states = Vec::with_capacity(controls.len() + 1);
        states.push(x0);
        for u in &controls {
            let last = states.last().unwrap();
            states.push(last + u * dt);
        }
        Self {
            states,
            controls,
            cost: CostBreakdown::zero(),
            max_violation: T::zero(),
            warning: false,
        }
    }
}

/// Interpolated gain and its position gradient over the whole buffer,
/// sharing the recency weighting of [`crate::infodist::gain_at`].
fn buffer_gain_and_gradient<T: Real>(
    buffer: &DistributionBuffer<T>,
    pos: &Point3<T>,
    idw: &IdwParams<T>,
) -> (T, Vector3<T>) {
    let present = buffer.len();
    let mut value = T::zero();
    let mut grad = Vector3::zeros();
    for (i, entry) in buffer.entries().enumerate() {
        let w_entry = T::one() / T::from_usize(present - i).unwrap();
        // Zero-distance queries pin the value to the nearest perspective's
        // gain; the interpolant is locally flat there.
        let mut nearest: Option<(T, T)> = None;
        for g in entry {
            let d = (pos - g.origin).norm();
            if d < idw.zero_dist_epsilon {
                match nearest {
                    Some((dn, _)) if dn <= d => {}
                    _ => nearest = Some((d, g.gain)),
                }
            }
        }
        if let Some((_, gain)) = nearest {
            value += w_entry * gain;
            continue;
        }
        let mut num = T::zero();
        let mut den = T::zero();
        let mut num_grad = Vector3::zeros();
        let mut den_grad = Vector3::zeros();
        for g in entry {
            let offset = pos - g.origin;
            let d = offset.norm();
            let w = d.powf(-idw.power);
            // dw/dpos = -p * d^(-p-2) * offset
            let dw = offset * (-idw.power * d.powf(-idw.power - T::from_c(2.0)));
            num += g.gain * w;
            den += w;
            num_grad += dw * g.gain;
            den_grad += dw;
        }
        value += w_entry * (num / den);
        grad += (num_grad * den - den_grad * num) * (w_entry / (den * den));
    }
    (value, grad)
}

/// Orientation factor, interpolated gain, and the gradient of their product
/// with respect to the joint state. Outside the field-of-view cone the
/// orientation factor is zero and the product's gradient vanishes (the
/// barrier is flat there).
fn info_terms<T: Real>(
    ctx: &PlannerContext<'_, T>,
    fk: &FkResult<T>,
    jac: &crate::kinematics::CameraJacobian<T>,
) -> (T, T, DVector<T>) {
    let dof = ctx.chain.dof();
    let buffer = ctx.buffer.expect("info terms need a distribution buffer");
    let pose = &fk.camera;
    let (gain, gain_grad_pos) = buffer_gain_and_gradient(buffer, &pose.position, &ctx.idw);

    let to_poi = ctx.poi - pose.position;
    let dist = to_poi.norm();
    if dist < T::from_c(1e-9) {
        return (T::zero(), gain, DVector::zeros(dof));
    }
    let ideal = to_poi / dist;
    let axis = pose.optical_axis.into_inner();
    let cos_angle = axis.dot(&ideal).min(T::one()).max(-T::one());
    let cutoff = (ctx.camera.fov_h.min(ctx.camera.fov_v) * T::from_c(0.5)).cos();
    if cos_angle < cutoff {
        return (T::zero(), gain, DVector::zeros(dof));
    }

    let mut grad = DVector::zeros(dof);
    // a - b (b . a), reused for the ideal-direction derivative.
    let residual = axis - ideal * cos_angle;
    for i in 0..dof {
        let z = jac.angular.column(i);
        let jv = jac.linear.column(i);
        // dO/dq_i = b . (z x a) - jv . (a - b cos) / dist
        let d_o = ideal.dot(&z.cross(&axis)) - jv.dot(&residual) / dist;
        let d_g = jv.dot(&gain_grad_pos);
        grad[i] = gain * d_o + cos_angle * d_g;
    }
    (cos_angle, gain, grad)
}

struct Evaluation<T: Real> {
    value: T,
    grad: Option<DVector<T>>,
}

struct CostModel<'a, 'b, T: Real> {
    ctx: &'a PlannerContext<'b, T>,
    cfg: &'a HorizonConfig<T>,
    x0: DVector<T>,
    vel_lo: DVector<T>,
    vel_hi: DVector<T>,
}

impl<'a, 'b, T: Real> CostModel<'a, 'b, T> {
    fn new(ctx: &'a PlannerContext<'b, T>, cfg: &'a HorizonConfig<T>, x0: DVector<T>) -> Self {
        let dof = ctx.chain.dof();
        let mut vel_lo = DVector::zeros(dof);
        let mut vel_hi = DVector::zeros(dof);
        for (j, l) in ctx.chain.limits().iter().enumerate() {
            vel_lo[j] = l.velocity.0;
            vel_hi[j] = l.velocity.1;
        }
        Self { ctx, cfg, x0, vel_lo, vel_hi }
    }

    fn dof(&self) -> usize {
        self.ctx.chain.dof()
    }

    fn clamp_controls(&self, u: &mut DVector<T>) {
        let n = self.dof();
        for i in 0..u.len() {
            let j = i % n;
            u[i] = u[i].max(self.vel_lo[j]).min(self.vel_hi[j]);
        }
    }

    fn states_from_flat(&self, u: &DVector<T>) -> Vec<DVector<T>> {
        let n = self.dof();
        let k = self.cfg.steps;
        let mut states = Vec::with_capacity(k + 1);
        states.push(self.x0.clone());
        for i in 0..k {
            let prev = states.last().unwrap();
            let mut next = prev.clone();
            for j in 0..n {
                next[j] += u[i * n + j] * self.cfg.dt;
            }
            states.push(next);
        }
        states
    }

    fn clearance(&self, x: &DVector<T>) -> T {
        let fk = self
            .ctx
            .chain
            .forward_kinematics(x)
            .expect("dimensions validated up front");
        self.ctx.chain.clearance_from_fk(&fk, self.ctx.obstacles)
    }

    /// Central finite difference of the clearance with respect to the state.
    fn clearance_gradient(&self, x: &DVector<T>) -> DVector<T> {
        let n = self.dof();
        let h = T::from_c(1e-5);
        let mut grad = DVector::zeros(n);
        let mut xp = x.clone();
        for j in 0..n {
            let orig = xp[j];
            xp[j] = orig + h;
            let fp = self.clearance(&xp);
            xp[j] = orig - h;
            let fm = self.clearance(&xp);
            xp[j] = orig;
            grad[j] = (fp - fm) / (T::from_c(2.0) * h);
        }
        grad
    }

    /// Augmented-Lagrangian objective. Returns the value, optionally its
    /// gradient with respect to the flattened controls, and the largest raw
    /// constraint violation (independent of multipliers and penalty weight).
    fn eval(&self, u: &DVector<T>, lag: &AugLag<T>, want_grad: bool) -> Evaluation<T> {
        let n = self.dof();
        let k_steps = self.cfg.steps;
        let cfg = self.cfg;
        let ctx = self.ctx;
        let states = self.states_from_flat(u);

        let mut value = T::zero();
        // Per-state cost gradients, folded into the controls at the end.
        let mut stage_grads: Vec<DVector<T>> = if want_grad {
            vec![DVector::zeros(n); k_steps + 1]
        } else {
            Vec::new()
        };
        let mut grad_u = if want_grad {
            Some(DVector::zeros(n * k_steps))
        } else {
            None
        };

        let two = T::from_c(2.0);
        let use_info = cfg.info_weight > T::zero();
        let use_obstacles = !ctx.obstacles.is_empty();

        for (k, x) in states.iter().enumerate() {
            // The first state is fixed, so its gradient is never used.
            let wg = want_grad && k > 0;
            // Goal term at every step.
            for j in 0..n {
                let diff = x[j] - ctx.goal[j];
                value += cfg.goal_weight[j] * diff * diff;
                if wg {
                    stage_grads[k][j] += two * cfg.goal_weight[j] * diff;
                }
            }
            // Reference tracking.
            if cfg.reference_weight > T::zero() {
                if let Some(path) = ctx.reference {
                    let t_k = ctx.plan_start_time + T::from_usize(k).unwrap() * cfg.dt;
                    let wp = path.active(t_k);
                    let diff = x - wp;
                    value += cfg.reference_weight * diff.norm_squared();
                    if wg {
                        stage_grads[k].axpy(two * cfg.reference_weight, &diff, T::one());
                    }
                }
            }
            // State bounds (x0 is fixed and checked separately).
            if k > 0 {
                for (j, lim) in ctx.chain.limits().iter().enumerate() {
                    let (v_over, d_over) =
                        lag.term(x[j] - lim.position.1, lag.position[((k - 1) * n + j) * 2]);
                    let (v_under, d_under) =
                        lag.term(lim.position.0 - x[j], lag.position[((k - 1) * n + j) * 2 + 1]);
                    value += v_over + v_under;
                    if wg {
                        stage_grads[k][j] += d_over - d_under;
                    }
                }
            }
            // Pose-dependent terms.
            let clearance = if use_info {
                let (fk, jac) = ctx
                    .chain
                    .camera_jacobian(x)
                    .expect("dimensions validated up front");
                let (o, g, grad_og) = info_terms(ctx, &fk, &jac);
                let denom = o * g + cfg.epsilon;
                value += cfg.info_weight / denom;
                if wg {
                    let scale = -cfg.info_weight / (denom * denom);
                    stage_grads[k].axpy(scale, &grad_og, T::one());
                }
                use_obstacles.then(|| ctx.chain.clearance_from_fk(&fk, ctx.obstacles))
            } else if use_obstacles {
                Some(self.clearance(x))
            } else {
                None
            };
            if let Some(cl) = clearance {
                let margin_gap = (cfg.clearance_margin - cl).max(T::zero());
                value += cfg.obstacle_weight * margin_gap * margin_gap;
                let (v_pen, d_pen) = lag.term(-cl, lag.clearance[k]);
                value += v_pen;
                if wg {
                    let pull = -two * cfg.obstacle_weight * margin_gap - d_pen;
                    if pull != T::zero() {
                        let cl_grad = self.clearance_gradient(x);
                        stage_grads[k].axpy(pull, &cl_grad, T::one());
                    }
                }
            }
        }

        // Control cost and acceleration constraints.
        let zero_prev = DVector::zeros(n);
        let prev_exec = ctx.previous_control.as_ref().unwrap_or(&zero_prev);
        for i in 0..k_steps {
            for j in 0..n {
                let uij = u[i * n + j];
                value += cfg.control_weight[j] * uij * uij;
                if let Some(g) = grad_u.as_mut() {
                    g[i * n + j] += two * cfg.control_weight[j] * uij;
                }
                // Acceleration by first differences, seeded with the control
                // executed in the previous cycle.
                let prev = if i == 0 { prev_exec[j] } else { u[(i - 1) * n + j] };
                let acc = (uij - prev) / cfg.dt;
                let lim = &ctx.chain.limits()[j];
                let (v_over, d_over) =
                    lag.term(acc - lim.acceleration.1, lag.acceleration[(i * n + j) * 2]);
                let (v_under, d_under) =
                    lag.term(lim.acceleration.0 - acc, lag.acceleration[(i * n + j) * 2 + 1]);
                value += v_over + v_under;
                if let Some(g) = grad_u.as_mut() {
                    let d = (d_over - d_under) / cfg.dt;
                    g[i * n + j] += d;
                    if i > 0 {
                        g[(i - 1) * n + j] -= d;
                    }
                }
            }
        }

        // Fold state gradients into control gradients:
        // d x_k / d u_i = dt for every i < k, so each control picks up the
        // suffix sum of later stage gradients.
        if let Some(g) = grad_u.as_mut() {
            let mut suffix = DVector::zeros(n);
            for i in (0..k_steps).rev() {
                suffix += &stage_grads[i + 1];
                for j in 0..n {
                    g[i * n + j] += cfg.dt * suffix[j];
                }
            }
        }

        Evaluation { value, grad: grad_u }
    }

    /// Raw inequality values `g <= 0` in the multiplier layout.
    fn constraint_values(&self, u: &DVector<T>) -> ConstraintValues<T> {
        let n = self.dof();
        let k_steps = self.cfg.steps;
        let ctx = self.ctx;
        let states = self.states_from_flat(u);

        let mut position = vec![T::zero(); k_steps * n * 2];
        for k in 1..=k_steps {
            for (j, lim) in ctx.chain.limits().iter().enumerate() {
                position[((k - 1) * n + j) * 2] = states[k][j] - lim.position.1;
                position[((k - 1) * n + j) * 2 + 1] = lim.position.0 - states[k][j];
            }
        }

        let mut acceleration = vec![T::zero(); k_steps * n * 2];
        let zero_prev = DVector::zeros(n);
        let prev_exec = ctx.previous_control.as_ref().unwrap_or(&zero_prev);
        for i in 0..k_steps {
            for j in 0..n {
                let prev = if i == 0 { prev_exec[j] } else { u[(i - 1) * n + j] };
                let acc = (u[i * n + j] - prev) / self.cfg.dt;
                let lim = &ctx.chain.limits()[j];
                acceleration[(i * n + j) * 2] = acc - lim.acceleration.1;
                acceleration[(i * n + j) * 2 + 1] = lim.acceleration.0 - acc;
            }
        }

        let clearance: Vec<T> = if ctx.obstacles.is_empty() {
            vec![-T::one(); k_steps + 1]
        } else {
            states.iter().map(|x| -self.clearance(x)).collect()
        };

        ConstraintValues {
            position,
            acceleration,
            clearance,
        }
    }
}

/// Inequality constraint values `g <= 0`, one entry per multiplier.
struct ConstraintValues<T: Real> {
    position: Vec<T>,
    acceleration: Vec<T>,
    clearance: Vec<T>,
}

impl<T: Real> ConstraintValues<T> {
    fn max_violation(&self) -> T {
        let max_of = |v: &[T]| v.iter().fold(T::zero(), |a, &g| a.max(g));
        max_of(&self.position)
            .max(max_of(&self.acceleration))
            .max(max_of(&self.clearance))
    }
}

/// Augmented-Lagrangian state: one multiplier per inequality constraint plus
/// the shared penalty weight.
struct AugLag<T: Real> {
    position: Vec<T>,
    acceleration: Vec<T>,
    clearance: Vec<T>,
    mu: T,
}

impl<T: Real> AugLag<T> {
    fn new(k_steps: usize, dof: usize) -> Self {
        Self {
            position: vec![T::zero(); k_steps * dof * 2],
            acceleration: vec![T::zero(); k_steps * dof * 2],
            clearance: vec![T::zero(); k_steps + 1],
            mu: T::from_c(10.0),
        }
    }

    /// Augmented-Lagrangian term for one inequality `g <= 0`: value and
    /// derivative with respect to `g`.
    fn term(&self, g: T, lambda: T) -> (T, T) {
        let t = lambda + self.mu * g;
        if t > T::zero() {
            ((t * t - lambda * lambda) / (T::from_c(2.0) * self.mu), t)
        } else {
            (-lambda * lambda / (T::from_c(2.0) * self.mu), T::zero())
        }
    }

    fn update_multiplier(lambda: &mut T, g: T, mu: T) {
        *lambda = (*lambda + mu * g).max(T::zero());
    }

    fn update(&mut self, cons: &ConstraintValues<T>) {
        for (l, &g) in self.position.iter_mut().zip(&cons.position) {
            Self::update_multiplier(l, g, self.mu);
        }
        for (l, &g) in self.acceleration.iter_mut().zip(&cons.acceleration) {
            Self::update_multiplier(l, g, self.mu);
        }
        for (l, &g) in self.clearance.iter_mut().zip(&cons.clearance) {
            Self::update_multiplier(l, g, self.mu);
        }
    }
}

/// Per-step cost records of a plan under the true (unpenalized) objective.
pub fn stage_costs<T: Real>(
    plan: &HorizonPlan<T>,
    ctx: &PlannerContext<'_, T>,
    cfg: &HorizonConfig<T>,
) -> Result<Vec<StageCosts<T>>> {
    if cfg.info_weight > T::zero() && ctx.buffer.map_or(true, |b| b.is_empty()) {
        return Err(Error::NoDistribution);
    }
    let mut out = Vec::with_capacity(plan.states.len());
    for (k, x) in plan.states.iter().enumerate() {
        let mut goal = T::zero();
        for j in 0..x.len() {
            let diff = x[j] - ctx.goal[j];
            goal += cfg.goal_weight[j] * diff * diff;
        }
        let control = if k < plan.controls.len() {
            let u = &plan.controls[k];
            let mut c = T::zero();
            for j in 0..u.len() {
                c += cfg.control_weight[j] * u[j] * u[j];
            }
            c
        } else {
            T::zero()
        };
        let reference = match (cfg.reference_weight > T::zero(), ctx.reference) {
            (true, Some(path)) => {
                let t_k = ctx.plan_start_time + T::from_usize(k).unwrap() * cfg.dt;
                cfg.reference_weight * reference_tracking_term(x, path, t_k)
            }
            _ => T::zero(),
        };
        let obstacle = if ctx.obstacles.is_empty() {
            T::zero()
        } else {
            let cl = ctx.chain.min_obstacle_clearance(x, ctx.obstacles)?;
            let gap = (cfg.clearance_margin - cl).max(T::zero());
            cfg.obstacle_weight * gap * gap
        };
        let (information, orientation, gain) = if cfg.info_weight > T::zero() {
            let (fk, jac) = ctx.chain.camera_jacobian(x)?;
            let (o, g, _) = info_terms(ctx, &fk, &jac);
            (info_stage_cost(cfg.info_weight, cfg.epsilon, o * g), o, g)
        } else {
            (T::zero(), T::one(), T::zero())
        };
        out.push(StageCosts {
            goal,
            control,
            obstacle,
            reference,
            information,
            orientation,
            gain,
        });
    }
    Ok(out)
}

/// Total cost of a plan with its per-term breakdown.
pub fn total_cost<T: Real>(
    plan: &HorizonPlan<T>,
    ctx: &PlannerContext<'_, T>,
    cfg: &HorizonConfig<T>,
) -> Result<CostBreakdown<T>> {
    let stages = stage_costs(plan, ctx, cfg)?;
    let mut b = CostBreakdown::zero();
    for s in &stages {
        b.goal += s.goal;
        b.control += s.control;
        b.obstacle += s.obstacle;
        b.reference += s.reference;
        b.information += s.information;
    }
    b.total = b.goal + b.control + b.obstacle + b.reference + b.information;
    Ok(b)
}

fn check_start_feasible<T: Real>(ctx: &PlannerContext<'_, T>, x0: &DVector<T>, tol: T) -> Result<()> {
    for (j, lim) in ctx.chain.limits().iter().enumerate() {
        if x0[j] > lim.position.1 + tol || x0[j] < lim.position.0 - tol {
            return Err(Error::InfeasibleStart(format!(
                "joint {j} at {} violates position bounds [{}, {}]",
                x0[j], lim.position.0, lim.position.1
            )));
        }
    }
    if !ctx.obstacles.is_empty() {
        let cl = ctx.chain.min_obstacle_clearance(x0, ctx.obstacles)?;
        if cl < -tol {
            return Err(Error::InfeasibleStart(format!(
                "start state penetrates an obstacle by {} m",
                -cl
            )));
        }
    }
    Ok(())
}

/// Optimizes a horizon from `x0`, warm-started with `initial_controls`.
///
/// The returned plan never costs more than a feasible warm start, satisfies
/// the velocity box exactly by projection, and satisfies position,
/// acceleration, and clearance constraints within `constraint_tol` unless the
/// solve stalls first, in which case the best plan found is returned with its
/// `warning` flag set.
pub fn optimize_horizon<T: Real>(
    ctx: &PlannerContext<'_, T>,
    cfg: &HorizonConfig<T>,
    x0: &JointState<T>,
    initial_controls: Vec<DVector<T>>,
) -> Result<HorizonPlan<T>> {
    let dof = ctx.chain.dof();
    cfg.validate(dof)?;
    if x0.len() != dof || ctx.goal.len() != dof {
        return Err(Error::Validation("state and goal must match the joint count".into()));
    }
    if initial_controls.len() != cfg.steps || initial_controls.iter().any(|u| u.len() != dof) {
        return Err(Error::Validation("warm start has the wrong shape".into()));
    }
    if cfg.info_weight > T::zero() && ctx.buffer.map_or(true, |b| b.is_empty()) {
        return Err(Error::Validation(
            "information weight is positive but no distribution is available".into(),
        ));
    }
    check_start_feasible(ctx, x0, cfg.constraint_tol)?;

    let model = CostModel::new(ctx, cfg, x0.clone());
    let n = dof * cfg.steps;
    let mut u = DVector::zeros(n);
    for (i, c) in initial_controls.iter().enumerate() {
        for j in 0..dof {
            u[i * dof + j] = c[j];
        }
    }
    model.clamp_controls(&mut u);
    let u_init = u.clone();

    let mut lag = AugLag::new(cfg.steps, dof);
    let mut warning = false;
    let mut final_violation = T::INF;
    let mut prev_violation = T::INF;
    for outer in 0..cfg.max_outer_iterations.max(1) {
        spg_minimize(&model, &lag, &mut u, cfg.max_inner_iterations);
        let cons = model.constraint_values(&u);
        final_violation = cons.max_violation();
        if final_violation <= cfg.constraint_tol {
            break;
        }
        if outer == cfg.max_outer_iterations.max(1) - 1 {
            warning = true;
            break;
        }
        lag.update(&cons);
        // Raise the penalty only when the multipliers alone are not closing
        // the infeasibility fast enough.
        if final_violation > T::from_c(0.25) * prev_violation {
            lag.mu = (lag.mu * T::from_c(10.0)).min(T::from_c(1e9));
        }
        prev_violation = final_violation;
    }

    let build = |u_flat: &DVector<T>| -> Vec<DVector<T>> {
        (0..cfg.steps)
            .map(|i| DVector::from_fn(dof, |j, _| u_flat[i * dof + j]))
            .collect()
    };
    let mut plan = HorizonPlan::rollout(x0.clone(), build(&u), cfg.dt);
    plan.cost = total_cost(&plan, ctx, cfg)?;
    plan.max_violation = final_violation;
    plan.warning = warning;

    // A feasible warm start is never made worse.
    let init_cons = model.constraint_values(&u_init);
    if init_cons.max_violation() <= cfg.constraint_tol {
        let init_plan = HorizonPlan::rollout(x0.clone(), build(&u_init), cfg.dt);
        let init_cost = total_cost(&init_plan, ctx, cfg)?;
        let worse_cost = plan.cost.total > init_cost.total;
        let worse_feasibility = plan.max_violation > cfg.constraint_tol;
        if worse_cost || worse_feasibility {
            return Ok(HorizonPlan {
                cost: init_cost,
                max_violation: init_cons.max_violation(),
                warning,
                ..init_plan
            });
        }
    }
    Ok(plan)
}

/// Spectral projected gradient descent on the augmented Lagrangian:
/// Barzilai-Borwein steps, projection onto the velocity box, and a
/// non-monotone Armijo line search over the last few iterate values.
fn spg_minimize<T: Real>(
    model: &CostModel<'_, '_, T>,
    lag: &AugLag<T>,
    u: &mut DVector<T>,
    max_iterations: usize,
) {
    const HISTORY: usize = 10;
    let armijo = T::from_c(1e-4);
    let alpha_min = T::from_c(1e-12);
    let alpha_max = T::from_c(1e10);

    let mut eval = model.eval(u, lag, true);
    let mut history = std::collections::VecDeque::with_capacity(HISTORY);
    history.push_back(eval.value);
    let mut alpha = T::one() / (T::one() + eval.grad.as_ref().unwrap().amax());

    for _ in 0..max_iterations {
        let grad = eval.grad.as_ref().unwrap();
        let mut target = &*u - grad * alpha;
        model.clamp_controls(&mut target);
        let direction = &target - &*u;
        if direction.amax() < T::from_c(1e-12) {
            break;
        }
        let slope = grad.dot(&direction);
        let f_ref = history
            .iter()
            .fold(-T::INF, |a: T, &b| if b > a { b } else { a });

        let mut lambda = T::one();
        let mut accepted = None;
        for _ in 0..50 {
            let u_try = &*u + &direction * lambda;
            let trial = model.eval(&u_try, lag, false);
            if trial.value <= f_ref + armijo * lambda * slope {
                accepted = Some(u_try);
                break;
            }
            lambda *= T::from_c(0.5);
        }
        let Some(u_next) = accepted else {
            break;
        };

        let next = model.eval(&u_next, lag, true);
        let s = &u_next - &*u;
        let y = next.grad.as_ref().unwrap() - eval.grad.as_ref().unwrap();
        let sy = s.dot(&y);
        alpha = if sy > T::zero() {
            (s.dot(&s) / sy).max(alpha_min).min(alpha_max)
        } else {
            alpha_max
        };
        *u = u_next;
        eval = next;
        if history.len() == HISTORY {
            history.pop_front();
        }
        history.push_back(eval.value);
    }
}

/// One receding-horizon cycle: shift the previous plan by one step
/// (duplicating the last control) as the warm start, re-optimize from the
/// measured state, and return the control to execute plus the new plan.
pub fn receding_horizon_step<T: Real>(
    ctx: &PlannerContext<'_, T>,
    cfg: &HorizonConfig<T>,
    previous: Option<&HorizonPlan<T>>,
    x_now: &JointState<T>,
) -> Result<(DVector<T>, HorizonPlan<T>)> {
    let dof = ctx.chain.dof();
    let warm: Vec<DVector<T>> = match previous {
        Some(plan) => {
            let mut w: Vec<DVector<T>> = plan.controls[1..].to_vec();
            let last = plan
                .controls
                .last()
                .cloned()
                .unwrap_or_else(|| DVector::zeros(dof));
            w.push(last);
            w
        }
        None => vec![DVector::zeros(dof); cfg.steps],
    };
    let plan = optimize_horizon(ctx, cfg, x_now, warm)?;
    let u0 = plan.controls[0].clone();
    Ok((u0, plan))
}
