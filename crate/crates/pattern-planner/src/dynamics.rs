//! Closed-form fixed-wing motion primitives.
//!
//! A primitive commands a constant total speed, a constant climb rate, and a
//! constant turn rate held over a fixed horizon. The horizontal path is a
//! straight line (zero turn rate) or a circular arc; altitude changes
//! linearly. Segments are sampled on a fixed period, so integration is exact
//! up to floating-point rounding — there is no ODE stepper to tune.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Metres per second in one knot.
pub const KNOT_MPS: f64 = 0.514444;
/// Metres in one foot.
pub const FOOT_M: f64 = 0.3048;
/// Metres per second in one foot per minute.
pub const FPM_MPS: f64 = FOOT_M / 60.0;
/// Standard gravity, m/s^2.
pub const GRAVITY_MPS2: f64 = 9.80665;

/// Planar position, altitude, and course angle.
///
/// `x` points east, `y` north, `z` up (metres). `chi` is the course over
/// ground in radians, measured counterclockwise from the +x axis and kept in
/// `[-pi, pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AircraftState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub chi: f64,
}

impl AircraftState {
    pub fn new(x: f64, y: f64, z: f64, chi: f64) -> Self {
        Self { x, y, z, chi: wrap_angle(chi) }
    }
}

/// Wrap an angle to `[-pi, pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

/// One constant-command motion segment.
///
/// `speed_mps` is the total speed, `climb_mps` the vertical component, and
/// `turn_rate` the signed course rate in rad/s. The horizontal speed and the
/// coordinated bank angle are derived, not stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionPrimitive {
    pub id: usize,
    pub speed_mps: f64,
    pub climb_mps: f64,
    pub turn_rate: f64,
}

impl MotionPrimitive {
    /// Horizontal (ground-plane) speed: the total speed minus the climb
    /// component, `sqrt(v^2 - v_h^2)`.
    pub fn v2d(&self) -> f64 {
        (self.speed_mps * self.speed_mps - self.climb_mps * self.climb_mps).sqrt()
    }

    /// Bank angle of a coordinated turn at this turn rate, `atan(w v2d / g)`.
    pub fn bank_angle(&self) -> f64 {
        (self.turn_rate * self.v2d() / GRAVITY_MPS2).atan()
    }
}

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("primitive {id}: {reason}")]
    BadPrimitive { id: usize, reason: String },
    #[error("bad segment timing: {0}")]
    BadTiming(String),
    #[error("unknown primitive id {0}")]
    UnknownPrimitive(usize),
    #[error("library io: {0}")]
    Io(#[from] std::io::Error),
    #[error("library json: {0}")]
    Json(#[from] serde_json::Error),
}

/// JSON form of a primitive library, in pilot-friendly units.
#[derive(Debug, Serialize, Deserialize)]
struct LibrarySpec {
    horizon_s: f64,
    sample_period_s: f64,
    primitives: Vec<PrimitiveSpec>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PrimitiveSpec {
    v_kt: f64,
    vh_fpm: f64,
    dchi_deg: f64,
}

/// A validated set of motion primitives sharing one horizon and sample
/// period.
#[derive(Debug, Clone)]
pub struct PrimitiveLibrary {
    primitives: Vec<MotionPrimitive>,
    horizon_s: f64,
    sample_period_s: f64,
    samples_per_segment: usize,
}

impl PrimitiveLibrary {
    /// Build a library, checking that every primitive is flyable and that
    /// the horizon is a whole number of sample periods.
    pub fn new(
        primitives: Vec<MotionPrimitive>,
        horizon_s: f64,
        sample_period_s: f64,
    ) -> Result<Self, DynamicsError> {
        if !(horizon_s.is_finite() && horizon_s > 0.0) {
            return Err(DynamicsError::BadTiming(format!("horizon must be positive, got {horizon_s}")));
        }
        if !(sample_period_s.is_finite() && sample_period_s > 0.0) {
            return Err(DynamicsError::BadTiming(format!(
                "sample period must be positive, got {sample_period_s}"
            )));
        }
        let ratio = horizon_s / sample_period_s;
        let samples = ratio.round();
        if samples < 1.0 || (ratio - samples).abs() > 1e-9 {
            return Err(DynamicsError::BadTiming(format!(
                "horizon {horizon_s} s is not a whole number of {sample_period_s} s periods"
            )));
        }
        if primitives.is_empty() {
            return Err(DynamicsError::BadTiming("library has no primitives".into()));
        }
        for (i, p) in primitives.iter().enumerate() {
            if p.id != i {
                return Err(DynamicsError::BadPrimitive {
                    id: p.id,
                    reason: format!("id must equal its index {i}"),
                });
            }
            if !(p.speed_mps.is_finite() && p.climb_mps.is_finite() && p.turn_rate.is_finite()) {
                return Err(DynamicsError::BadPrimitive { id: i, reason: "non-finite command".into() });
            }
            if p.speed_mps <= 0.0 {
                return Err(DynamicsError::BadPrimitive {
                    id: i,
                    reason: format!("speed must be positive, got {}", p.speed_mps),
                });
            }
            if p.speed_mps <= p.climb_mps.abs() {
                return Err(DynamicsError::BadPrimitive {
                    id: i,
                    reason: format!(
                        "speed {} must exceed |climb rate| {}",
                        p.speed_mps,
                        p.climb_mps.abs()
                    ),
                });
            }
        }
        Ok(Self { primitives, horizon_s, sample_period_s, samples_per_segment: samples as usize })
    }

    /// The stock library: {70, 90} kt total speed x {-500, 0, +500} ft/min
    /// climb x {-90, -45, 0, +45, +90} degrees of course change, each held
    /// for 20 s and sampled at 1 Hz. Ordered speed-major, then climb, then
    /// course change, giving ids 0..29.
    pub fn default_library() -> Self {
        let horizon = 20.0;
        let mut primitives = Vec::with_capacity(30);
        for &v_kt in &[70.0, 90.0] {
            for &vh_fpm in &[-500.0, 0.0, 500.0] {
                for &dchi_deg in &[-90.0, -45.0, 0.0, 45.0, 90.0] {
                    primitives.push(MotionPrimitive {
                        id: primitives.len(),
                        speed_mps: v_kt * KNOT_MPS,
                        climb_mps: vh_fpm * FPM_MPS,
                        turn_rate: (dchi_deg as f64).to_radians() / horizon,
                    });
                }
            }
        }
        Self::new(primitives, horizon, 1.0).expect("stock library is valid")
    }

    /// Parse a library from its JSON form (speeds in knots, climb rates in
    /// ft/min, course change in degrees over the horizon).
    pub fn from_json_str(text: &str) -> Result<Self, DynamicsError> {
        let spec: LibrarySpec = serde_json::from_str(text)?;
        let horizon = spec.horizon_s;
        let primitives = spec
            .primitives
            .iter()
            .enumerate()
            .map(|(id, p)| MotionPrimitive {
                id,
                speed_mps: p.v_kt * KNOT_MPS,
                climb_mps: p.vh_fpm * FPM_MPS,
                turn_rate: p.dchi_deg.to_radians() / horizon,
            })
            .collect();
        Self::new(primitives, horizon, spec.sample_period_s)
    }

    pub fn from_json_path(path: &Path) -> Result<Self, DynamicsError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn len(&self) -> usize {
        self.primitives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }

    pub fn horizon_s(&self) -> f64 {
        self.horizon_s
    }

    pub fn sample_period_s(&self) -> f64 {
        self.sample_period_s
    }

    /// Number of sample intervals per segment; a segment yields this many
    /// samples plus the start state.
    pub fn samples_per_segment(&self) -> usize {
        self.samples_per_segment
    }

    pub fn get(&self, id: usize) -> Result<&MotionPrimitive, DynamicsError> {
        self.primitives.get(id).ok_or(DynamicsError::UnknownPrimitive(id))
    }

    pub fn iter(&self) -> impl Iterator<Item = &MotionPrimitive> {
        self.primitives.iter()
    }

    /// State reached `t` seconds into a primitive, in closed form.
    fn state_at(&self, start: &AircraftState, p: &MotionPrimitive, t: f64) -> AircraftState {
        let v2d = p.v2d();
        let z = start.z + p.climb_mps * t;
        if p.turn_rate == 0.0 {
            AircraftState {
                x: start.x + v2d * start.chi.cos() * t,
                y: start.y + v2d * start.chi.sin() * t,
                z,
                chi: start.chi,
            }
        } else {
            let r = v2d / p.turn_rate;
            let chi = start.chi + p.turn_rate * t;
            AircraftState {
                x: start.x + r * (chi.sin() - start.chi.sin()),
                y: start.y - r * (chi.cos() - start.chi.cos()),
                z,
                chi: wrap_angle(chi),
            }
        }
    }

    /// All sampled states of a segment, including the start state, at
    /// multiples of the sample period.
    pub fn integrate(
        &self,
        start: &AircraftState,
        id: usize,
    ) -> Result<Vec<AircraftState>, DynamicsError> {
        let p = *self.get(id)?;
        Ok((0..=self.samples_per_segment)
            .map(|k| self.state_at(start, &p, k as f64 * self.sample_period_s))
            .collect())
    }

    /// End state of a segment; identical to the last sample of
    /// [`integrate`](Self::integrate).
    pub fn transition(
        &self,
        start: &AircraftState,
        id: usize,
    ) -> Result<AircraftState, DynamicsError> {
        let p = *self.get(id)?;
        Ok(self.state_at(start, &p, self.samples_per_segment as f64 * self.sample_period_s))
    }
}

/// Render timestamped states as `t,x,y,z,chi` CSV text.
pub fn states_to_csv(times: &[f64], states: &[AircraftState]) -> String {
    let mut out = String::from("t,x,y,z,chi\n");
    for (t, s) in times.iter().zip(states) {
        out.push_str(&format!("{t},{x},{y},{z},{chi}\n", x = s.x, y = s.y, z = s.z, chi = s.chi));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lib() -> PrimitiveLibrary {
        PrimitiveLibrary::default_library()
    }

    #[test]
    fn stock_library_has_thirty_sequentially_numbered_primitives() {
        let lib = lib();
        assert_eq!(lib.len(), 30);
        for (i, p) in lib.iter().enumerate() {
            assert_eq!(p.id, i);
        }
        assert_eq!(lib.samples_per_segment(), 20);
    }

    #[test]
    fn straight_level_segment_covers_the_expected_ground() {
        let lib = lib();
        // id 7 = 70 kt, level, zero turn (speed-major, climb, course order).
        let p = lib.get(7).unwrap();
        assert_eq!(p.turn_rate, 0.0);
        assert_eq!(p.climb_mps, 0.0);
        let start = AircraftState::new(0.0, 0.0, 300.0, 0.0);
        let end = lib.transition(&start, 7).unwrap();
        assert!((end.x - 720.2216).abs() < 1e-9, "end.x = {}", end.x);
        assert_eq!(end.y, 0.0);
        assert_eq!(end.z, 300.0);
        assert_eq!(end.chi, 0.0);
    }

    #[test]
    fn climb_segment_gains_the_commanded_altitude() {
        let lib = lib();
        // id 12 = 70 kt, +500 ft/min, zero turn.
        let p = lib.get(12).unwrap();
        assert!((p.climb_mps - 2.54).abs() < 1e-12);
        let start = AircraftState::new(0.0, 0.0, 300.0, 0.0);
        let end = lib.transition(&start, 12).unwrap();
        assert!((end.z - 350.8).abs() < 1e-9, "end.z = {}", end.z);
        // Horizontal speed sheds the climb component.
        let v2d = (p.speed_mps * p.speed_mps - 2.54 * 2.54).sqrt();
        assert!((end.x - v2d * 20.0).abs() < 1e-9);
    }

    #[test]
    fn quarter_turn_at_seventy_knots_matches_the_analytic_arc() {
        let lib = lib();
        // id 9 = 70 kt, level, +90 degrees.
        let p = *lib.get(9).unwrap();
        let v2d = p.v2d();
        assert!((p.bank_angle() - 0.2808).abs() < 1e-4, "bank = {}", p.bank_angle());
        let r = v2d * 40.0 / PI; // v2d / (pi/2 / 20)
        assert!((r - 458.50686).abs() < 1e-3);
        let start = AircraftState::new(0.0, 0.0, 300.0, 0.0);
        let end = lib.transition(&start, 9).unwrap();
        assert!((end.x - r).abs() < 1e-3, "end.x = {}", end.x);
        assert!((end.y - r).abs() < 1e-3, "end.y = {}", end.y);
        assert!((end.chi - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn segments_sample_start_plus_twenty_points() {
        let lib = lib();
        let start = AircraftState::new(10.0, -5.0, 200.0, 1.0);
        let states = lib.integrate(&start, 3).unwrap();
        assert_eq!(states.len(), 21);
        assert_eq!(states[0], start);
        let end = lib.transition(&start, 3).unwrap();
        assert_eq!(*states.last().unwrap(), end);
    }

    #[test]
    fn opposite_turns_cancel_the_course_change() {
        let lib = lib();
        let start = AircraftState::new(0.0, 0.0, 300.0, 0.7);
        // ids 8 (+45) then 6 (-45), both 70 kt level.
        let mid = lib.transition(&start, 8).unwrap();
        let end = lib.transition(&mid, 6).unwrap();
        assert!((wrap_angle(end.chi - start.chi)).abs() < 1e-12);
    }

    #[test]
    fn wrap_angle_maps_into_the_half_open_range() {
        assert_eq!(wrap_angle(PI), -PI);
        assert_eq!(wrap_angle(-PI), -PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_angle(0.0), 0.0);
        assert!((wrap_angle(-5.0 * PI) + PI).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_preserves_commands() {
        let text = r#"{
            "horizon_s": 10.0,
            "sample_period_s": 2.0,
            "primitives": [
                {"v_kt": 60.0, "vh_fpm": 0.0, "dchi_deg": 0.0},
                {"v_kt": 80.0, "vh_fpm": -300.0, "dchi_deg": 45.0}
            ]
        }"#;
        let lib = PrimitiveLibrary::from_json_str(text).unwrap();
        assert_eq!(lib.len(), 2);
        assert_eq!(lib.samples_per_segment(), 5);
        let p = lib.get(1).unwrap();
        assert!((p.speed_mps - 80.0 * KNOT_MPS).abs() < 1e-12);
        assert!((p.climb_mps + 300.0 * FPM_MPS).abs() < 1e-12);
        assert!((p.turn_rate - 45f64.to_radians() / 10.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_libraries_are_rejected() {
        let slow = vec![MotionPrimitive { id: 0, speed_mps: 2.0, climb_mps: 2.5, turn_rate: 0.0 }];
        assert!(matches!(
            PrimitiveLibrary::new(slow, 20.0, 1.0),
            Err(DynamicsError::BadPrimitive { .. })
        ));
        let ok = vec![MotionPrimitive { id: 0, speed_mps: 30.0, climb_mps: 0.0, turn_rate: 0.0 }];
        assert!(matches!(
            PrimitiveLibrary::new(ok.clone(), 20.0, 3.0),
            Err(DynamicsError::BadTiming(_))
        ));
        assert!(matches!(PrimitiveLibrary::new(vec![], 20.0, 1.0), Err(DynamicsError::BadTiming(_))));
        let misnumbered =
            vec![MotionPrimitive { id: 1, speed_mps: 30.0, climb_mps: 0.0, turn_rate: 0.0 }];
        assert!(matches!(
            PrimitiveLibrary::new(misnumbered, 20.0, 1.0),
            Err(DynamicsError::BadPrimitive { .. })
        ));
        assert!(PrimitiveLibrary::new(ok, 20.0, 1.0).is_ok());
    }

    #[test]
    fn unknown_primitive_ids_error() {
        let lib = lib();
        let start = AircraftState::new(0.0, 0.0, 0.0, 0.0);
        assert!(matches!(lib.integrate(&start, 30), Err(DynamicsError::UnknownPrimitive(30))));
    }

    #[test]
    fn csv_rendering_lists_every_sample() {
        let times = [0.0, 1.0];
        let states =
            [AircraftState::new(0.0, 0.0, 10.0, 0.0), AircraftState::new(36.0, 0.0, 10.0, 0.0)];
        let text = states_to_csv(&times, &states);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "t,x,y,z,chi");
        assert!(lines[2].starts_with("1,36,0,10,"));
    }
}
