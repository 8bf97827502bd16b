//! Rest-to-rest trapezoidal velocity profile along a path.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trapezoid {
    pub v_max: f64,
    pub a_max: f64,
}

impl Trapezoid {
    pub fn new(v_max: f64, a_max: f64) -> Self {
        Trapezoid { v_max, a_max }
    }

    /// Peak speed reached on a leg of `length`.
    pub fn peak_speed(&self, length: f64) -> f64 {
        libm::sqrt(self.a_max * length.max(0.0)).min(self.v_max)
    }

    /// Traversal time of a leg of `length`.
    pub fn duration(&self, length: f64) -> f64 {
        if length <= 0.0 {
            return 0.0;
        }
        let ramp = self.v_max * self.v_max / self.a_max;
        if length >= ramp {
            length / self.v_max + self.v_max / self.a_max
        } else {
            2.0 * libm::sqrt(length / self.a_max)
        }
    }

    /// Distance covered after time `t`.
    pub fn distance_at(&self, length: f64, t: f64) -> f64 {
        let total = self.duration(length);
        if t <= 0.0 {
            return 0.0;
        }
        if t >= total {
            return length;
        }
        let v = self.peak_speed(length);
        let t_acc = v / self.a_max;
        let d_acc = 0.5 * v * t_acc;
        if t < t_acc {
            0.5 * self.a_max * t * t
        } else if t <= total - t_acc {
            d_acc + v * (t - t_acc)
        } else {
            let r = total - t;
            length - 0.5 * self.a_max * r * r
        }
    }

    pub fn speed_at(&self, length: f64, t: f64) -> f64 {
        let total = self.duration(length);
        if t <= 0.0 || t >= total {
            return 0.0;
        }
        let v = self.peak_speed(length);
        let t_acc = v / self.a_max;
        if t < t_acc {
            self.a_max * t
        } else if t <= total - t_acc {
            v
        } else {
            self.a_max * (total - t)
        }
    }

    /// Speed when `s` meters of the leg have been covered.
    pub fn speed_at_distance(&self, length: f64, s: f64) -> f64 {
        if s <= 0.0 || s >= length {
            return 0.0;
        }
        let v = self.peak_speed(length);
        let up = libm::sqrt(2.0 * self.a_max * s);
        let down = libm::sqrt(2.0 * self.a_max * (length - s));
        v.min(up).min(down)
    }
}
