//! Discrete-time simulation of a polarization-analysis (Hänsch–Couillaud) cavity lock
//! with a PI servo, a piezo actuator and an automatic relock sequence.

use crate::error::{Error, Result};
use crate::numeric::bisect;
use crate::phasematch::C;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PztResonance {
    pub f0: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityLockPlant {
    /// Round-trip amplitude reflectivity seen by the servo.
    pub r: f64,
    /// Free spectral range, Hz.
    pub fsr: f64,
    /// Angle between the input polarization and the crystal's transmission axis, rad.
    pub polarizer_axis: f64,
    /// Cavity detuning per actuator volt, Hz/V.
    pub pzt_gain: f64,
    pub pzt_resonance: Option<PztResonance>,
}

/// Default actuator response, Hz/V.
pub const DEFAULT_PZT_GAIN: f64 = 10e6;

impl CavityLockPlant {
    /// Plant for a cavity with input coupler `t1`, passive loss `l_passive` and round-trip
    /// optical path `round_trip_length` (m).
    pub fn from_cavity(t1: f64, l_passive: f64, round_trip_length: f64) -> Result<Self> {
        let p = Self {
            r: ((1.0 - t1) * (1.0 - l_passive)).sqrt(),
            fsr: C / round_trip_length,
            polarizer_axis: 0.1,
            pzt_gain: DEFAULT_PZT_GAIN,
            pzt_resonance: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(Error::InvalidParam(format!("reflectivity {} outside (0, 1)", self.r)));
        }
        if !(self.fsr > 0.0) || self.pzt_gain == 0.0 || !self.pzt_gain.is_finite() {
            return Err(Error::InvalidParam("FSR must be positive and PZT gain nonzero".into()));
        }
        if (2.0 * self.polarizer_axis).sin().abs() < 1e-9 {
            return Err(Error::InvalidParam("input polarization along a polarizer axis gives no error signal".into()));
        }
        if let Some(res) = self.pzt_resonance {
            if !(res.f0 > 0.0 && res.q > 0.0) {
                return Err(Error::InvalidParam("PZT resonance needs positive f0 and Q".into()));
            }
        }
        Ok(())
    }

    /// Round-trip phase per actuator volt, rad/V.
    pub fn phase_gain(&self) -> f64 {
        2.0 * PI * self.pzt_gain / self.fsr
    }

    /// Actuator voltage spanning one free spectral range.
    pub fn volts_per_fsr(&self) -> f64 {
        (self.fsr / self.pzt_gain).abs()
    }

    /// Slope dε/dδ of the normalized error signal at resonance.
    pub fn discriminator_slope(&self) -> f64 {
        (1.0 + self.r) / (1.0 - self.r)
    }

    /// Full width at half maximum of the transmission peak in round-trip phase.
    pub fn fwhm_phase(&self) -> f64 {
        let r = self.r;
        let c = (1.0 + r * r - 2.0 * (1.0 - r) * (1.0 - r)) / (2.0 * r);
        2.0 * c.clamp(-1.0, 1.0).acos()
    }

    /// Normalized transmission (1 on resonance).
    pub fn transmission(&self, delta: f64) -> f64 {
        let r = self.r;
        (1.0 - r) * (1.0 - r) / (1.0 + r * r - 2.0 * r * delta.cos())
    }
}

fn hc_raw(r: f64, delta: f64) -> f64 {
    let s = (0.5 * delta).sin();
    r * delta.sin() / ((1.0 - r) * (1.0 - r) + 4.0 * r * s * s)
}

/// Phase detuning of the error-signal extrema, rad.
pub fn hc_peak_detuning(r: f64) -> f64 {
    (2.0 * r / (1.0 + r * r)).acos()
}

/// Balanced-detector error signal, normalized to unit peak.
pub fn hc_error_signal(delta: f64, plant: &CavityLockPlant) -> f64 {
    let r = plant.r;
    hc_raw(r, delta) * (1.0 - r * r) / r
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServoConfig {
    pub kp: f64,
    pub ki: f64,
    pub sample_rate: f64,
    /// Actuator command limits, V.
    pub output_limits: (f64, f64),
    pub target_bandwidth: f64,
}

impl ServoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > 0.0 && self.target_bandwidth > 0.0) {
            return Err(Error::ConfigInvalid("sample rate and bandwidth must be positive".into()));
        }
        if self.sample_rate < 20.0 * self.target_bandwidth * (1.0 - 1e-12) {
            return Err(Error::ConfigInvalid(format!(
                "sample rate {} Hz is below 20x the {} Hz bandwidth",
                self.sample_rate, self.target_bandwidth
            )));
        }
        if !(self.output_limits.1 > self.output_limits.0) {
            return Err(Error::ConfigInvalid("output limits must be increasing".into()));
        }
        Ok(())
    }
}

/// Fraction of the crossover gain carried by the proportional path.
pub const PROPORTIONAL_FRACTION: f64 = 0.1;

/// Biquad coefficients (b, a) of the actuator, Tustin-discretized with prewarping at f0.
fn pzt_biquad(res: PztResonance, fs: f64) -> ([f64; 3], [f64; 3]) {
    let w0 = 2.0 * PI * res.f0;
    let k = w0 / (w0 / (2.0 * fs)).tan();
    let a0 = k * k + w0 * k / res.q + w0 * w0;
    let a1 = 2.0 * (w0 * w0 - k * k);
    let a2 = k * k - w0 * k / res.q + w0 * w0;
    let g = w0 * w0 / a0;
    ([g, 2.0 * g, g], [1.0, a1 / a0, a2 / a0])
}

/// Open-loop gain L(e^{iωT}) of the sampled loop at frequency `f`.
pub fn loop_gain(plant: &CavityLockPlant, kp: f64, ki: f64, fs: f64, f: f64) -> Complex64 {
    let zi = Complex64::from_polar(1.0, -2.0 * PI * f / fs);
    let controller = kp + ki / (1.0 - zi);
    let actuator = match plant.pzt_resonance {
        Some(res) => {
            let (b, a) = pzt_biquad(res, fs);
            (b[0] + b[1] * zi + b[2] * zi * zi) / (a[0] + a[1] * zi + a[2] * zi * zi)
        }
        None => Complex64::new(1.0, 0.0),
    };
    plant.phase_gain() * plant.discriminator_slope() * zi * actuator * controller
}

/// Closed-loop disturbance rejection δ/d = 1/(1 + L).
pub fn sensitivity(plant: &CavityLockPlant, kp: f64, ki: f64, fs: f64, f: f64) -> Complex64 {
    (Complex64::new(1.0, 0.0) + loop_gain(plant, kp, ki, fs, f)).inv()
}

/// Phase margin (degrees) at the first unity-gain crossover, with that crossover.
pub fn phase_margin(plant: &CavityLockPlant, kp: f64, ki: f64, fs: f64) -> Option<(f64, f64)> {
    let mag = |f: f64| loop_gain(plant, kp, ki, fs, f).norm() - 1.0;
    let n = 20_000;
    let nyq = 0.5 * fs;
    let mut prev = (nyq * 1e-6, mag(nyq * 1e-6));
    for i in 1..=n {
        let f = nyq * 1e-6 * (1e6f64).powf(i as f64 / n as f64) * (1.0 - 1e-12);
        let m = mag(f);
        if prev.1 > 0.0 && m <= 0.0 {
            let fc = bisect(mag, prev.0, f, 1e-9 * f).ok()?;
            let pm = 180.0 + loop_gain(plant, kp, ki, fs, fc).arg().to_degrees();
            return Some((pm, fc));
        }
        prev = (f, m);
    }
    None
}

/// PI gains that put the unity-gain crossover at `target_bandwidth`.
pub fn tune_gains(plant: &CavityLockPlant, target_bandwidth: f64, sample_rate: f64) -> Result<ServoConfig> {
    plant.validate()?;
    if !(target_bandwidth > 0.0 && target_bandwidth.is_finite()) {
        return Err(Error::Unachievable(format!("bandwidth {target_bandwidth} Hz")));
    }
    if target_bandwidth > sample_rate / 20.0 {
        return Err(Error::Unachievable(format!(
            "{target_bandwidth} Hz exceeds sample_rate/20 = {} Hz",
            sample_rate / 20.0
        )));
    }
    if let Some(res) = plant.pzt_resonance {
        if res.f0 <= 2.0 * target_bandwidth {
            return Err(Error::Unachievable(format!(
                "actuator resonance at {} Hz lies below twice the {target_bandwidth} Hz target",
                res.f0
            )));
        }
    }
    let kg = plant.phase_gain() * plant.discriminator_slope();
    let kp = PROPORTIONAL_FRACTION / kg;
    let excess = |ki_norm: f64| loop_gain(plant, kp, ki_norm / kg, sample_rate, target_bandwidth).norm() - 1.0;
    let ki =
        bisect(excess, 0.0, 10.0, 1e-15).map_err(|_| Error::Unachievable("crossover gain out of reach".into()))? / kg;
    let half = plant.volts_per_fsr();
    let servo = ServoConfig { kp, ki, sample_rate, output_limits: (-half, half), target_bandwidth };
    match phase_margin(plant, kp, ki, sample_rate) {
        Some((pm, fc)) if pm >= 45.0 && ((fc - target_bandwidth) / target_bandwidth).abs() <= 0.1 => Ok(servo),
        Some((pm, fc)) => Err(Error::Unachievable(format!("phase margin {pm:.1} deg at {fc:.0} Hz"))),
        None => Err(Error::Unachievable("no unity-gain crossover".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LockState {
    Locked,
    Unlocked,
    Scanning,
    Settling,
}

impl LockState {
    pub fn next(self) -> LockState {
        match self {
            LockState::Locked => LockState::Unlocked,
            LockState::Unlocked => LockState::Scanning,
            LockState::Scanning => LockState::Settling,
            LockState::Settling => LockState::Locked,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            LockState::Locked => "locked",
            LockState::Unlocked => "unlocked",
            LockState::Scanning => "scanning",
            LockState::Settling => "settling",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockAutomaton {
    pub state: LockState,
    /// Transmission below which the lock is declared lost.
    pub unlock_threshold: f64,
    /// Minimum transmission for a scan maximum to count as the cavity peak.
    pub peak_threshold: f64,
    /// Ramp duration across one FSR, s.
    pub scan_duration: f64,
    /// |ε| below which a settling sample counts toward lock.
    pub lock_error_threshold: f64,
    /// Consecutive good samples required to declare lock.
    pub settle_samples: usize,
}

impl Default for LockAutomaton {
    fn default() -> Self {
        Self {
            state: LockState::Locked,
            unlock_threshold: 0.5,
            peak_threshold: 0.5,
            scan_duration: 2e-3,
            lock_error_threshold: 0.05,
            settle_samples: 50,
        }
    }
}

/// Cavity round-trip phase disturbance, rad; components add.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Disturbance {
    pub offset: f64,
    /// (amplitude rad, frequency Hz).
    pub sine: Option<(f64, f64)>,
    /// (time s, amplitude rad).
    pub step: Option<(f64, f64)>,
    /// (rms rad per √s, seed).
    pub random_walk: Option<(f64, u64)>,
    /// Explicit per-sample series; the last value is held.
    pub samples: Vec<f64>,
}

impl Disturbance {
    /// Sampled series of `n` points at rate `fs`.
    pub fn series(&self, n: usize, fs: f64) -> Result<Vec<f64>> {
        let mut walk = match self.random_walk {
            Some((rms, seed)) => {
                let normal = Normal::new(0.0, rms / fs.sqrt()).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
                Some((normal, ChaCha8Rng::seed_from_u64(seed)))
            }
            None => None,
        };
        let mut acc = 0.0;
        Ok((0..n)
            .map(|i| {
                let t = i as f64 / fs;
                let mut d = self.offset;
                if let Some((a, f)) = self.sine {
                    d += a * (2.0 * PI * f * t).sin();
                }
                if let Some((t0, a)) = self.step {
                    if t >= t0 {
                        d += a;
                    }
                }
                if let Some((normal, rng)) = walk.as_mut() {
                    d += acc;
                    acc += normal.sample(rng);
                }
                if let Some(&last) = self.samples.last() {
                    d += *self.samples.get(i).unwrap_or(&last);
                }
                d
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockEvent {
    pub sample: usize,
    pub time: f64,
    pub from: LockState,
    pub to: LockState,
    /// Integrator contents right after the transition.
    pub integrator: f64,
}

impl LockEvent {
    pub fn line(&self) -> String {
        format!("{:.9e} {} -> {} integrator={:.9e}", self.time, self.from.label(), self.to.label(), self.integrator)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LockTrace {
    pub time: Vec<f64>,
    pub delta: Vec<f64>,
    pub error: Vec<f64>,
    pub control: Vec<f64>,
    pub transmission: Vec<f64>,
    pub state: Vec<LockState>,
    pub events: Vec<LockEvent>,
}

struct Actuator {
    coeffs: Option<([f64; 3], [f64; 3])>,
    x: [f64; 2],
    y: [f64; 2],
}

impl Actuator {
    /// Position produced one sample after command `u`.
    fn step(&mut self, u: f64) -> f64 {
        let Some((b, a)) = self.coeffs else { return u };
        let out = b[0] * u + b[1] * self.x[0] + b[2] * self.x[1] - a[1] * self.y[0] - a[2] * self.y[1];
        self.x = [u, self.x[0]];
        self.y = [out, self.y[0]];
        out
    }
}

pub fn simulate_lock(
    plant: &CavityLockPlant,
    servo: &ServoConfig,
    automaton: LockAutomaton,
    disturbance: &Disturbance,
    duration: f64,
) -> Result<LockTrace> {
    plant.validate().map_err(|e| Error::ConfigInvalid(e.to_string()))?;
    servo.validate()?;
    let fs = servo.sample_rate;
    if !(duration > 0.0) || duration * fs > 5e7 {
        return Err(Error::ConfigInvalid(format!("duration {duration} s")));
    }
    let v_fsr = plant.volts_per_fsr();
    let (lo, hi) = servo.output_limits;
    if hi - lo < v_fsr {
        return Err(Error::ConfigInvalid(format!("output range {} V is narrower than one FSR ({v_fsr} V)", hi - lo)));
    }
    let n = (duration * fs).round() as usize;
    let scan_len = ((automaton.scan_duration * fs).round() as usize).max(2);
    let d = disturbance.series(n, fs)?;
    let g = plant.phase_gain();
    let mut act = Actuator { coeffs: plant.pzt_resonance.map(|r| pzt_biquad(r, fs)), x: [0.0; 2], y: [0.0; 2] };
    let mut trace = LockTrace::default();
    let mut state = automaton.state;
    let (mut y, mut integ, mut offset) = (0.0, 0.0, 0.0);
    let (mut scan_k, mut scan_start, mut best, mut last_cmd) = (0usize, 0.0, (f64::NEG_INFINITY, 0.0), 0.0);
    let mut good = 0usize;
    for (i, &dist) in d.iter().enumerate() {
        let t = i as f64 / fs;
        let delta = dist - g * y;
        let eps = hc_error_signal(delta, plant);
        let tr = plant.transmission(delta);
        let go = |to: LockState, integ: f64, trace: &mut LockTrace, state: &mut LockState| {
            debug_assert_eq!(state.next(), to);
            trace.events.push(LockEvent { sample: i, time: t, from: *state, to, integrator: integ });
            *state = to;
        };
        let pi = |integ: &mut f64, offset: f64| {
            *integ += eps;
            let u = offset + servo.kp * eps + servo.ki * *integ;
            if u > hi || u < lo {
                *integ -= eps;
                u.clamp(lo, hi)
            } else {
                u
            }
        };
        let u = match state {
            LockState::Locked => {
                if tr < automaton.unlock_threshold {
                    offset = last_cmd;
                    go(LockState::Unlocked, integ, &mut trace, &mut state);
                    offset
                } else {
                    pi(&mut integ, offset)
                }
            }
            LockState::Unlocked => {
                integ = 0.0;
                scan_start = offset.clamp(lo + 0.5 * v_fsr, hi - 0.5 * v_fsr) - 0.5 * v_fsr;
                scan_k = 0;
                best = (f64::NEG_INFINITY, scan_start);
                go(LockState::Scanning, integ, &mut trace, &mut state);
                scan_start
            }
            LockState::Scanning => {
                // Transmission now reflects the previous command.
                if tr > best.0 {
                    best = (tr, last_cmd);
                }
                scan_k += 1;
                if scan_k >= scan_len {
                    if best.0 >= automaton.peak_threshold {
                        offset = best.1;
                        integ = 0.0;
                        good = 0;
                        go(LockState::Settling, integ, &mut trace, &mut state);
                        offset
                    } else {
                        scan_k = 0;
                        best = (f64::NEG_INFINITY, scan_start);
                        scan_start
                    }
                } else {
                    scan_start + v_fsr * scan_k as f64 / scan_len as f64
                }
            }
            LockState::Settling => {
                if tr >= automaton.unlock_threshold && eps.abs() < automaton.lock_error_threshold {
                    good += 1;
                } else {
                    good = 0;
                }
                let u = pi(&mut integ, offset);
                if good >= automaton.settle_samples {
                    go(LockState::Locked, integ, &mut trace, &mut state);
                }
                u
            }
        };
        trace.time.push(t);
        trace.delta.push(delta);
        trace.error.push(eps);
        trace.control.push(u);
        trace.transmission.push(tr);
        trace.state.push(state);
        last_cmd = u;
        y = act.step(u);
    }
    Ok(trace)
}

/// Steady-state amplitude of `x` at frequency `f` over the final `periods` periods.
pub fn tone_amplitude(x: &[f64], fs: f64, f: f64, periods: usize) -> f64 {
    let per = fs / f;
    let m = (per * periods as f64).round() as usize;
    let start = x.len().saturating_sub(m);
    let (mut s, mut c) = (0.0, 0.0);
    for (k, v) in x[start..].iter().enumerate() {
        let ph = 2.0 * PI * f * (start + k) as f64 / fs;
        s += v * ph.sin();
        c += v * ph.cos();
    }
    2.0 * (s * s + c * c).sqrt() / (x.len() - start) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn plant() -> CavityLockPlant {
        CavityLockPlant::from_cavity(0.016, 0.0088, 0.58).unwrap()
    }

    #[test]
    fn error_null_and_unit_peak() {
        let p = plant();
        assert_eq!(hc_error_signal(0.0, &p), 0.0);
        let pk = hc_peak_detuning(p.r);
        assert!((hc_error_signal(pk, &p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn peak_location_grid_oracle() {
        let mut last = f64::INFINITY;
        for r in [0.9, 0.98, 0.995] {
            let p = CavityLockPlant { r, ..plant() };
            let n = 2_000_000;
            let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
            for i in 1..n {
                let d = PI * i as f64 / n as f64;
                let v = hc_error_signal(d, &p);
                if v > best {
                    best = v;
                    arg = d;
                }
            }
            let pk = hc_peak_detuning(r);
            assert!((pk - arg).abs() <= PI / n as f64, "r={r}: {pk} vs {arg}");
            assert!(pk < last);
            last = pk;
        }
    }

    #[test]
    fn single_rising_zero_crossing_per_fsr() {
        let p = plant();
        let n = 100_000;
        let vals: Vec<f64> =
            (0..=n).map(|i| hc_error_signal(-PI + 1e-9 + 2.0 * PI * i as f64 / n as f64, &p)).collect();
        let rising = vals.windows(2).filter(|w| w[0] < 0.0 && w[1] >= 0.0).count();
        assert_eq!(rising, 1);
    }

    #[test]
    fn tune_hits_target() {
        let p = plant();
        let s = tune_gains(&p, 50e3, 1e6).unwrap();
        let (pm, fc) = phase_margin(&p, s.kp, s.ki, 1e6).unwrap();
        assert!(((fc - 50e3) / 50e3).abs() < 0.1 && pm >= 45.0);
    }

    #[test]
    fn tune_rejections() {
        let p = plant();
        assert!(matches!(tune_gains(&p, 0.0, 1e6), Err(Error::Unachievable(_))));
        let res = CavityLockPlant { pzt_resonance: Some(PztResonance { f0: 20e3, q: 10.0 }), ..p };
        assert!(matches!(tune_gains(&res, 50e3, 1e6), Err(Error::Unachievable(_))));
    }

    #[test]
    fn settles_from_offset() {
        let p = plant();
        let s = tune_gains(&p, 50e3, 1e6).unwrap();
        let fwhm = p.fwhm_phase();
        let dist = Disturbance { offset: 0.3 * fwhm, ..Default::default() };
        let tr = simulate_lock(&p, &s, LockAutomaton::default(), &dist, 1e-4).unwrap();
        let tau = 1.0 / (2.0 * PI * 50e3);
        let k = (10.0 * tau * 1e6).ceil() as usize;
        assert!(tr.delta[k..].iter().all(|d| d.abs() < 1e-3 * fwhm));
        assert!(tr.events.is_empty());
    }

    #[test]
    fn sine_rejection_matches_sensitivity() {
        let p = plant();
        let s = tune_gains(&p, 50e3, 1e6).unwrap();
        for f in [5e3, 10e3, 25e3] {
            let a = 0.01 * p.fwhm_phase();
            let dist = Disturbance { sine: Some((a, f)), ..Default::default() };
            let tr = simulate_lock(&p, &s, LockAutomaton::default(), &dist, 4e-3).unwrap();
            let measured = tone_amplitude(&tr.delta, 1e6, f, 10) / a;
            let model = sensitivity(&p, s.kp, s.ki, 1e6, f).norm();
            assert!((20.0 * (measured / model).log10()).abs() < 3.0, "f={f}: {measured} vs {model}");
        }
    }

    #[test]
    fn relock_sequence() {
        let p = plant();
        let s = tune_gains(&p, 50e3, 1e6).unwrap();
        let dist = Disturbance { step: Some((1e-4, 2.0)), ..Default::default() };
        let tr = simulate_lock(&p, &s, LockAutomaton::default(), &dist, 5e-3).unwrap();
        let seq: Vec<_> = tr.events.iter().map(|e| (e.from, e.to)).collect();
        assert_eq!(
            seq,
            vec![
                (LockState::Locked, LockState::Unlocked),
                (LockState::Unlocked, LockState::Scanning),
                (LockState::Scanning, LockState::Settling),
                (LockState::Settling, LockState::Locked),
            ]
        );
        assert_eq!(tr.events[1].integrator, 0.0);
        assert!(tr.transmission.last().unwrap() > &0.99);
    }

    #[test]
    fn deterministic_with_seed() {
        let p = plant();
        let s = tune_gains(&p, 50e3, 1e6).unwrap();
        let dist = Disturbance { random_walk: Some((5.0, 42)), ..Default::default() };
        let a = simulate_lock(&p, &s, LockAutomaton::default(), &dist, 2e-2).unwrap();
        let b = simulate_lock(&p, &s, LockAutomaton::default(), &dist, 2e-2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sample_rate_precondition() {
        let p = plant();
        let mut s = tune_gains(&p, 50e3, 1e6).unwrap();
        s.sample_rate = 5e5;
        assert!(matches!(
            simulate_lock(&p, &s, LockAutomaton::default(), &Disturbance::default(), 1e-3),
            Err(Error::ConfigInvalid(_))
        ));
    }

    proptest! {
        #[test]
        fn error_signal_is_odd(r in 0.5f64..0.9999, d in -PI..PI) {
            let p = CavityLockPlant { r, ..plant() };
            prop_assert!((hc_error_signal(-d, &p) + hc_error_signal(d, &p)).abs() <= 1e-12);
        }

        #[test]
        fn state_never_skips(seed in 0u64..1000) {
            let p = plant();
            let s = tune_gains(&p, 50e3, 1e6).unwrap();
            let dist = Disturbance { random_walk: Some((20.0, seed)), ..Default::default() };
            let tr = simulate_lock(&p, &s, LockAutomaton::default(), &dist, 5e-3).unwrap();
            for e in &tr.events {
                prop_assert_eq!(e.from.next(), e.to);
            }
            for w in tr.state.windows(2) {
                prop_assert!(w[0] == w[1] || w[0].next() == w[1]);
            }
        }
    }
}
