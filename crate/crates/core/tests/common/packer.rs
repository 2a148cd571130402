//! Brute-force slot packing in exact integer time.
//!
//! One second of airtime is split into `TICKS` ticks. With the pilot length
//! in microseconds, α in halves, speed in cm/s and the carrier in units of
//! 100 MHz, one AV's pilots over that second take exactly
//! `pilot_us * alpha_halves * v_cm * fc_100mhz` ticks, and one group's
//! messages take `load_pct * TICKS / 100` ticks. AVs are admitted one at a
//! time; the first AV of every group also books that group's messages.

use ccroute_core::traffic::TddConfig;

/// Ticks per second: 2 * 100 * 3e8 / (1e-6 * 1e8).
pub const TICKS: u128 = 600_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntTdd {
    pub pilot_us: u64,
    pub alpha_halves: u64,
    pub fc_100mhz: u64,
    /// λ_m T_m in percent.
    pub load_pct: u64,
    pub group: u64,
}

impl IntTdd {
    pub fn config(&self) -> TddConfig {
        let mut t = TddConfig::default();
        t.t_pilot = self.pilot_us as f64 * 1e-6;
        t.alpha = self.alpha_halves as f64 / 2.0;
        t.carrier_frequency = self.fc_100mhz as f64 * 1e8;
        t.group_size = self.group as u32;
        t.with_message_load(self.load_pct as f64 / 100.0)
    }

    pub fn cap(&self) -> u64 {
        10 * self.group
    }

    pub fn pilot_ticks(&self, v_cm: u64) -> u128 {
        self.pilot_us as u128 * self.alpha_halves as u128 * v_cm as u128 * self.fc_100mhz as u128
    }

    pub fn message_ticks(&self) -> u128 {
        self.load_pct as u128 * TICKS / 100
    }

    /// v* in cm/s when it is a whole number of cm/s: the speed at which
    /// exactly L AVs fill the second.
    pub fn optimal_cm(&self) -> Option<u64> {
        let num = (TICKS - self.message_ticks()) as u128;
        let den = self.group as u128 * self.pilot_us as u128 * self.alpha_halves as u128 * self.fc_100mhz as u128;
        (num % den == 0).then(|| (num / den) as u64)
    }
}

/// AVs one channel admits at `v_cm` cm/s.
pub fn pack(t: &IntTdd, v_cm: u64) -> u64 {
    let pilot = t.pilot_ticks(v_cm);
    let msg = t.message_ticks();
    let mut used: u128 = 0;
    let mut n = 0;
    while n < t.cap() {
        let mut next = used + pilot;
        if n % t.group == 0 {
            next += msg;
        }
        if next > TICKS {
            break;
        }
        used = next;
        n += 1;
    }
    n
}
