//! Constant-speed flight on the simulated clock. Frames fire at `k * dt`
//! (k >= 1) and never past the mission budget.

use crate::geometry::Point2;
use crate::navigation::Path;
use crate::sensor::Pose;

/// Callbacks from the flight loop into the rest of the mission.
pub trait MissionHooks {
    /// One sensing frame at `pose`. Returns true once every mission EOI is confirmed.
    fn on_frame(&mut self, pose: &Pose) -> bool;

    /// A path about to be flown.
    fn on_path(&mut self, _path: &Path, _purpose: &str) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlightStop {
    Arrived,
    /// The caller's deadline (e.g. an AOI allocation) was reached first.
    Deadline,
    /// No further frame fits in the mission budget.
    Budget,
    AllFound,
}

#[derive(Debug, Clone)]
pub struct Flyer {
    pub position: Point2,
    pub yaw: f64,
    pub time: f64,
    pub altitude: f64,
    pub speed: f64,
    pub frame_period: f64,
    pub budget: f64,
    next_frame: u64,
    all_found: bool,
}

/// Slack for comparing simulated times built from different sums.
const TIME_EPS: f64 = 1e-9;

impl Flyer {
    pub fn new(
        position: Point2,
        yaw: f64,
        altitude: f64,
        speed: f64,
        frame_period: f64,
        budget: f64,
    ) -> Self {
        Self {
            position,
            yaw,
            time: 0.0,
            altitude,
            speed,
            frame_period,
            budget,
            next_frame: 1,
            all_found: false,
        }
    }

    pub fn next_frame_time(&self) -> f64 {
        self.next_frame as f64 * self.frame_period
    }

    /// Frames issued so far.
    pub fn frames(&self) -> u64 {
        self.next_frame - 1
    }

    pub fn all_found(&self) -> bool {
        self.all_found
    }

    /// Forgets a stop requested by the hooks, e.g. one that only meant "replan now".
    pub fn clear_stop(&mut self) {
        self.all_found = false;
    }

    /// No frame remains inside the budget.
    pub fn exhausted(&self) -> bool {
        self.next_frame_time() > self.budget + TIME_EPS
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.position.with_z(self.altitude), self.yaw, self.time)
    }

    fn fire(&mut self, hooks: &mut dyn MissionHooks, observe: &mut dyn FnMut(Point2)) {
        self.time = self.next_frame_time();
        self.next_frame += 1;
        let pose = self.pose();
        if hooks.on_frame(&pose) {
            self.all_found = true;
        }
        observe(self.position);
    }

    /// Flies `path` (whose first waypoint is the current position) until arrival,
    /// `deadline`, budget exhaustion, or every EOI being confirmed. `observe`
    /// sees the ground position of every frame.
    pub fn fly(
        &mut self,
        path: &Path,
        deadline: f64,
        hooks: &mut dyn MissionHooks,
        observe: &mut dyn FnMut(Point2),
    ) -> FlightStop {
        let limit = deadline.min(self.budget);
        for w in path.waypoints.windows(2) {
            let (a, b) = (self.position, w[1]);
            let len = a.dist(b);
            if len <= 0.0 {
                continue;
            }
            self.yaw = (b.y - a.y).atan2(b.x - a.x);
            let t0 = self.time;
            let t_end = t0 + len / self.speed;
            loop {
                let tf = self.next_frame_time();
                if tf > t_end + TIME_EPS || tf > limit + TIME_EPS {
                    break;
                }
                self.position = a.lerp(b, ((tf - t0) * self.speed / len).clamp(0.0, 1.0));
                self.fire(hooks, observe);
                if self.all_found {
                    return FlightStop::AllFound;
                }
            }
            if t_end > limit + TIME_EPS {
                self.position = a.lerp(b, ((limit - t0) * self.speed / len).clamp(0.0, 1.0));
                self.time = limit.max(self.time);
                return if deadline < self.budget {
                    FlightStop::Deadline
                } else {
                    FlightStop::Budget
                };
            }
            self.position = b;
            self.time = t_end;
        }
        if self.exhausted() {
            return FlightStop::Budget;
        }
        FlightStop::Arrived
    }

    /// Hovers in place until the next frame has fired, unless that frame would
    /// fall past the budget. Returns whether a frame fired.
    pub fn close_frame(
        &mut self,
        hooks: &mut dyn MissionHooks,
        observe: &mut dyn FnMut(Point2),
    ) -> bool {
        if self.exhausted() {
            return false;
        }
        self.fire(hooks, observe);
        true
    }

    /// Hovers, sensing every frame, until `until` or the budget.
    pub fn hover_until(&mut self, until: f64, hooks: &mut dyn MissionHooks) {
        while !self.all_found && !self.exhausted() && self.next_frame_time() <= until + TIME_EPS {
            self.fire(hooks, &mut |_| {});
        }
        self.time = self.time.max(until.min(self.budget));
    }
}
