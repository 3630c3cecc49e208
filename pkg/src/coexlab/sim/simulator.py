"""Event-driven simulation of Wi-Fi DCF contention next to a duty-cycled LTE-U cell.

Time inside the event loop is kept in integer microseconds.  The LTE-U base
station alternates ON and OFF phases; Wi-Fi stations see the ON phase as a
busy medium and freeze their backoff.  Observables (energy samples,
auto-correlation values) are only taken during OFF phases.

Beacons go out from a per-AP queue of their own: PIFS access and a backoff
drawn from the minimum window on every attempt, since broadcast frames are
not acknowledged and so never double their window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from . import mac
from .channel import path_loss_db, window_energy_dbm
from .config import ScenarioConfig

US = 1_000_000
QUEUE_CAP = 200
FADE_GRID_US = 10_000
AC_HIGH = (0.8, 1.0)
AC_LOW = (0.0, 0.15)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SimTrace:
    """Observables collected at the LTE-U base station.

    ``truth_t``/``truth_count`` describe the ground-truth AP count as a step
    function: ``truth_count[i]`` holds from ``truth_t[i]`` until the next
    entry.
    """

    energy_t: np.ndarray
    energy_dbm: np.ndarray
    ac_t: np.ndarray
    ac_rho: np.ndarray
    beacon_t: np.ndarray
    beacon_bssid: tuple[str, ...]
    truth_t: np.ndarray
    truth_count: np.ndarray
    duration_s: float
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("energy_t", "energy_dbm", "ac_t", "ac_rho", "beacon_t", "truth_t", "truth_count"):
            object.__setattr__(self, name, _freeze(np.asarray(getattr(self, name))))
        object.__setattr__(self, "beacon_bssid", tuple(self.beacon_bssid))

    def truth_at(self, t) -> np.ndarray:
        idx = np.searchsorted(self.truth_t, np.asarray(t, dtype=float), side="right") - 1
        return self.truth_count[np.clip(idx, 0, None)]

    @property
    def change_times(self) -> np.ndarray:
        return self.truth_t[1:]

    @property
    def energy(self) -> list[tuple[float, float]]:
        return list(zip(self.energy_t.tolist(), self.energy_dbm.tolist()))

    @property
    def beacons(self) -> list[tuple[float, str]]:
        return list(zip(self.beacon_t.tolist(), self.beacon_bssid))


class _Station:
    __slots__ = ("idx", "bssid", "dcf", "traffic_full", "rate_per_us", "queue", "beacon_pending", "bq",
                 "phase_us", "next_tbtt", "next_arrival", "active", "contending", "ready_at",
                 "on_mean_us", "off_mean_us", "on_until")

    def __init__(self, idx: int, bssid: str, full: bool, rate_per_us: float, phase_us: int,
                 on_mean_us: float = 0.0, off_mean_us: float = 0.0):
        self.idx = idx
        self.bssid = bssid
        self.dcf = mac.DcfStationState(bssid=bssid)
        self.traffic_full = full
        self.rate_per_us = rate_per_us
        self.queue = 0
        self.beacon_pending = False
        # beacons leave from their own queue: PIFS access, separate backoff
        self.bq = mac.DcfStationState(bssid=bssid)
        self.phase_us = phase_us
        self.next_tbtt = math.inf
        self.next_arrival = math.inf
        self.active = False
        self.contending = False
        self.ready_at = 0
        self.on_mean_us = on_mean_us
        self.off_mean_us = off_mean_us
        self.on_until = math.inf

    def has_frame(self) -> bool:
        return self.beacon_pending or self.traffic_full or self.queue > 0

    def access_at(self) -> int:
        """End of the idle wait (PIFS for a beacon, DIFS for data)."""
        return self.ready_at - mac.DIFS_US + mac.PIFS_US if self.beacon_pending else self.ready_at

    def queue_state(self) -> mac.DcfStationState:
        return self.bq if self.beacon_pending else self.dcf

    def tx_at(self) -> int:
        """Time this station would start sending if the medium stays idle."""
        return self.access_at() + self.queue_state().backoff_counter * mac.SLOT_US

    def count_down(self, t: int) -> None:
        """Spend the idle slots elapsed by ``t`` from the active queue's counter."""
        if t > self.access_at():
            q = self.queue_state()
            q.backoff_counter -= min(q.backoff_counter, (t - self.access_at()) // mac.SLOT_US)


class CoexistenceSimulator:
    """Incremental simulator; :func:`simulate_scenario` runs it end to end.

    ``advance(t)`` runs the MAC until at least ``t`` seconds and collects the
    observables up to ``t``.  ``set_duty_cycle`` changes the LTE-U duty cycle
    from the next period boundary on, which lets a controller close the loop.
    """

    def __init__(self, config: ScenarioConfig):
        self.config = config
        ss = np.random.SeedSequence(config.seed)
        mac_ss, traffic_ss, fade_ss, ac_ss, phase_ss, floor_ss = ss.spawn(6)
        self._mac_rng = np.random.default_rng(mac_ss)
        self._traffic_rng = np.random.default_rng(traffic_ss)
        self._fade_rng = np.random.default_rng(fade_ss)
        self._ac_rng = np.random.default_rng(ac_ss)
        phase_rng = np.random.default_rng(phase_ss)
        self._floor_rng = np.random.default_rng(floor_ss)
        site_rng = np.random.default_rng(np.random.SeedSequence([config.site_seed, 0x51735]))

        ch = config.channel
        self.base_power_dbm = np.array(
            [ch.tx_power_dbm - path_loss_db(ap.distance_feet, ap.sight, ch, site_rng) for ap in config.ap_list]
        )
        self.stations: list[_Station] = []
        for i, ap in enumerate(config.ap_list):
            rate = ap.offered_load / mac.FRAME_US
            on_us = off_us = 0.0
            if ap.bursty:
                on_us, off_us = ap.burst_on_s * US, ap.burst_off_s * US
                rate *= (on_us + off_us) / on_us  # same long-run load, packed into bursts
            phase = int(phase_rng.integers(0, mac.BEACON_INTERVAL_US))
            self.stations.append(_Station(i, f"ap{i + 1}", ap.traffic == "FullBuffer", rate, phase, on_us, off_us))

        self._duty = config.lteu.duty_cycle
        self._period_us = int(round(config.lteu.period_ms * 1000))
        self._periods: list[tuple[int, int, int]] = []  # (start, on_end, end)
        self._changes = [(int(round(cp.time_s * US)), cp.new_ap_count) for cp in config.change_points]
        self._change_idx = 0
        self._truth = [(0.0, config.start_count)]

        self.now = 0
        self._tx: list[tuple[int, int, int, int, int]] = []  # start, end, station, kind, collided
        self._beacons: list[tuple[int, int]] = []
        self.n_data_tx = 0
        self.n_data_collisions = 0
        self.n_drops = 0

        # observation state
        self._tick = 1
        self._observed_until = 0.0
        self._energy_t: list[np.ndarray] = []
        self._energy_v: list[np.ndarray] = []
        self._ac_t: list[np.ndarray] = []
        self._ac_v: list[np.ndarray] = []
        self._tx_power: list[np.ndarray] = []
        self._powered = 0
        # slow fading on a fixed grid: column 0 common, then one per station
        self._fade_grid = np.zeros((0, 1 + len(self.stations)))
        self._fade_state = np.zeros(1 + len(self.stations))
        self._floor_grid = np.zeros(0)
        self._floor_state = 0.0

        self._set_active(config.start_count, 0)

    # ── LTE-U schedule ──

    def set_duty_cycle(self, duty: float, period_ms: float | None = None) -> None:
        if not 0 < duty <= 1:
            raise ValueError("duty cycle must be in (0, 1]")
        self._duty = duty
        if period_ms is not None:
            self._period_us = int(round(period_ms * 1000))

    def _period_at(self, t: int) -> tuple[int, int, int]:
        if not self._periods:
            self._append_period(0)
        while self._periods[-1][2] <= t:
            self._append_period(self._periods[-1][2])
        # searching from the end; callers move forward in time
        for p in reversed(self._periods):
            if p[0] <= t:
                return p
        return self._periods[0]

    def _append_period(self, start: int) -> None:
        on = int(round(self._duty * self._period_us))
        self._periods.append((start, start + on, start + self._period_us))

    # ── station bookkeeping ──

    def _set_active(self, count: int, t: int) -> None:
        for st in self.stations:
            want = st.idx < count
            if want and not st.active:
                st.active = True
                st.queue = 0
                st.beacon_pending = False
                k = math.ceil((t - st.phase_us) / mac.BEACON_INTERVAL_US)
                st.next_tbtt = st.phase_us + max(k, 0) * mac.BEACON_INTERVAL_US
                if st.traffic_full:
                    st.next_arrival = math.inf
                else:
                    t_first = t
                    if st.on_mean_us > 0:
                        # start in a random phase of the on/off process
                        p_on = st.on_mean_us / (st.on_mean_us + st.off_mean_us)
                        if self._traffic_rng.random() < p_on:
                            st.on_until = t + self._traffic_rng.exponential(st.on_mean_us)
                        else:
                            start = t + self._traffic_rng.exponential(st.off_mean_us)
                            st.on_until = start + self._traffic_rng.exponential(st.on_mean_us)
                            t_first = int(start)
                    st.next_arrival = self._next_arrival(st, t_first)
                st.contending = False
                st.dcf.stage = 0
                st.dcf.repeats_at_max = 0
            elif not want and st.active:
                st.active = False
                st.contending = False
                st.queue = 0
                st.beacon_pending = False
                st.next_tbtt = math.inf
                st.next_arrival = math.inf

    def _next_arrival(self, st: _Station, t: float) -> int:
        """Next frame arrival after ``t``; bursty sources only emit while on."""
        rng = self._traffic_rng
        while True:
            cand = t + max(1.0, rng.exponential(1.0 / st.rate_per_us))
            if st.on_mean_us <= 0 or cand < st.on_until:
                return int(round(cand))
            t = st.on_until + rng.exponential(st.off_mean_us)
            st.on_until = t + rng.exponential(st.on_mean_us)

    def _next_event(self, st: _Station) -> float:
        return min(st.next_tbtt, st.next_arrival)

    def _fire_events(self, st: _Station, upto: int) -> None:
        """Apply beacon timers and frame arrivals of one station up to ``upto``."""
        while st.next_tbtt <= upto:
            if not st.beacon_pending:
                st.bq.stage = 0
                st.bq.repeats_at_max = 0
                st.bq.redraw(self._mac_rng)
            st.beacon_pending = True
            st.next_tbtt += mac.BEACON_INTERVAL_US
        while st.next_arrival <= upto:
            if st.queue < QUEUE_CAP:
                st.queue += 1
            st.next_arrival = self._next_arrival(st, st.next_arrival)

    def _join(self, st: _Station, t: int) -> None:
        st.contending = True
        st.ready_at = t + mac.DIFS_US
        st.dcf.redraw(self._mac_rng)

    def _freeze_all(self, t: int) -> None:
        for st in self.stations:
            if st.contending:
                st.count_down(t)

    # ── main loop ──

    def _run_until(self, horizon: int) -> None:
        while self.now < horizon:
            now = self.now
            if self._change_idx < len(self._changes) and self._changes[self._change_idx][0] <= now:
                tc, count = self._changes[self._change_idx]
                self._change_idx += 1
                self._set_active(count, tc)
                self._truth.append((tc / US, count))
                continue
            start, on_end, end = self._period_at(now)
            if now < on_end:
                self.now = on_end if on_end < end else end
                continue
            for st in self.stations:
                if st.active:
                    self._fire_events(st, now)
            for st in self.stations:
                if not st.active:
                    continue
                if st.contending:
                    st.ready_at = now + mac.DIFS_US
                elif st.has_frame():
                    self._join(st, now)

            next_change = self._changes[self._change_idx][0] if self._change_idx < len(self._changes) else math.inf
            while True:
                cand = math.inf
                for st in self.stations:
                    if st.contending:
                        tx_at = st.tx_at()
                        if tx_at < cand:
                            cand = tx_at
                # idle stations whose next frame shows up before the next transmission
                joiner, t_join = None, cand
                for st in self.stations:
                    if st.active and not st.contending:
                        te = self._next_event(st)
                        if te < t_join:
                            joiner, t_join = st, te
                if joiner is None or t_join >= end or t_join >= next_change:
                    break
                self._fire_events(joiner, int(t_join))
                self._join(joiner, int(t_join))

            stop = min(end, next_change)
            if cand >= stop:
                self._freeze_all(stop)
                self.now = int(stop)
                continue

            tx_time = int(cand)
            senders = [st for st in self.stations
                       if st.contending and st.tx_at() == tx_time]
            for st in self.stations:
                if st.contending and st not in senders:
                    st.count_down(tx_time)
            collided = len(senders) > 1
            busy_end = tx_time
            sent_beacon = {}
            for st in senders:
                kind = 1 if st.beacon_pending else 0
                sent_beacon[st.idx] = kind
                q = st.queue_state()
                dur = mac.BEACON_US if kind else mac.FRAME_US
                busy_end = max(busy_end, tx_time + dur)
                self._tx.append((tx_time, tx_time + dur, st.idx, kind, int(collided)))
                if kind == 0:
                    self.n_data_tx += 1
                    self.n_data_collisions += int(collided)
                if not collided:
                    if kind:
                        st.beacon_pending = False
                        self._beacons.append((tx_time + dur, st.idx))
                    elif not st.traffic_full:
                        st.queue -= 1
                    q.stage = 0
                    q.repeats_at_max = 0
                elif kind:
                    # broadcast beacons keep the minimum window instead of doubling
                    dropped = False
                    q.redraw(self._mac_rng)
                else:
                    dropped = q.on_failure(self._mac_rng)
                    if dropped:
                        self.n_drops += 1
                        if not st.traffic_full:
                            st.queue -= 1
            for st in senders:
                if st.has_frame():
                    if not collided and not sent_beacon[st.idx]:
                        st.dcf.redraw(self._mac_rng)
                else:
                    st.contending = False
            self.now = busy_end

    # ── observation ──

    def _extend_fading(self, upto_us: float) -> None:
        ch = self.config.channel
        need = int(upto_us // FADE_GRID_US) + 2
        have = self._fade_grid.shape[0]
        if need <= have:
            return
        n = need - have
        a = math.exp(-FADE_GRID_US / (ch.slow_tau_s * US))
        sig = np.array([ch.slow_common_sigma_db] + [ch.slow_link_sigma_db] * len(self.stations))
        noise = self._fade_rng.standard_normal((n, len(sig))) * sig * math.sqrt(1 - a * a)
        if have == 0:
            self._fade_state = self._fade_rng.standard_normal(len(sig)) * sig
        out, zf = lfilter([1.0], [1.0, -a], noise, axis=0, zi=(a * self._fade_state)[None, :])
        self._fade_state = out[-1]
        self._fade_grid = np.vstack([self._fade_grid, out])

    def _extend_floor(self, upto_us: float) -> None:
        ch = self.config.channel
        need = int(upto_us // FADE_GRID_US) + 2
        have = len(self._floor_grid)
        if need <= have or ch.noise_drift_sigma_db == 0:
            return
        a = math.exp(-FADE_GRID_US / (ch.noise_drift_tau_s * US))
        sig = ch.noise_drift_sigma_db
        noise = self._floor_rng.standard_normal(need - have) * sig * math.sqrt(1 - a * a)
        if have == 0:
            self._floor_state = float(self._floor_rng.standard_normal()) * sig
        out, _ = lfilter([1.0], [1.0, -a], noise, zi=[a * self._floor_state])
        self._floor_state = float(out[-1])
        self._floor_grid = np.concatenate([self._floor_grid, out])

    def _noise_floor(self, t_us: np.ndarray):
        ch = self.config.channel
        if ch.noise_drift_sigma_db == 0:
            return ch.noise_floor_dbm
        self._extend_floor(float(t_us.max()))
        return ch.noise_floor_dbm + self._floor_grid[(t_us // FADE_GRID_US).astype(np.int64)]

    def _power_new_tx(self) -> None:
        if self._powered == len(self._tx):
            return
        new = np.array(self._tx[self._powered:], dtype=np.int64)
        self._extend_fading(float(new[:, 0].max()))
        g = new[:, 0] // FADE_GRID_US
        stn = new[:, 2]
        slow = self._fade_grid[g, 0] + self._fade_grid[g, 1 + stn]
        fast = self._fade_rng.standard_normal(len(new)) * self.config.channel.fast_sigma_db
        self._tx_power.append(self.base_power_dbm[stn] + slow + fast)
        self._powered = len(self._tx)

    def _collect(self, upto_s: float) -> None:
        """Take energy and AC samples for clock ticks up to ``upto_s``."""
        cfg = self.config
        fs = cfg.sample_rate_hz
        last_tick = math.floor(upto_s * fs + 1e-9)
        if last_tick < self._tick:
            return
        ticks = np.arange(self._tick, last_tick + 1)
        self._tick = last_tick + 1
        t_us = ticks / fs * US
        # locate the OFF phase of every tick
        self._period_at(int(t_us[-1]))
        per = np.array(self._periods, dtype=np.float64)
        k = np.searchsorted(per[:, 0], t_us, side="right") - 1
        on_end, end = per[k, 1], per[k, 2]
        off = (t_us > on_end) & (t_us <= end)
        t_us, off_start = t_us[off], on_end[off]
        if len(t_us) == 0:
            return
        self._power_new_tx()
        tx = np.array(self._tx, dtype=np.float64).reshape(-1, 5)
        power = np.concatenate(self._tx_power) if self._tx_power else np.zeros(0)
        w_start = np.maximum(t_us - cfg.window_s * US, off_start)
        dbm = window_energy_dbm(w_start, t_us, tx[:, 0], tx[:, 1], power, self._noise_floor(t_us))
        self._energy_t.append(t_us / US)
        self._energy_v.append(dbm)

        # auto-correlation: does any preamble overlap the correlator window
        a_start = np.maximum(t_us - cfg.ac_window, off_start)
        pre_s = tx[:, 0]
        pre_e = pre_s + mac.PREAMBLE_US
        lo = np.searchsorted(pre_e, a_start, side="right")
        hi = np.searchsorted(pre_s, t_us, side="left")
        hit = hi > lo
        u = self._ac_rng.random(len(t_us))
        rho = np.where(hit, AC_HIGH[0] + u * (AC_HIGH[1] - AC_HIGH[0]), AC_LOW[0] + u * (AC_LOW[1] - AC_LOW[0]))
        self._ac_t.append(t_us / US)
        self._ac_v.append(rho)

    def advance(self, until_s: float) -> None:
        until_s = min(until_s, self.config.duration_s)
        horizon = int(math.ceil(until_s * US))
        self._run_until(horizon)
        self._collect(until_s)
        self._observed_until = max(self._observed_until, until_s)

    def drain(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, list[tuple[float, str]]]:
        """Observables gathered so far (energy t/dbm, ac t/rho, beacons)."""
        et = np.concatenate(self._energy_t) if self._energy_t else np.zeros(0)
        ev = np.concatenate(self._energy_v) if self._energy_v else np.zeros(0)
        at = np.concatenate(self._ac_t) if self._ac_t else np.zeros(0)
        av = np.concatenate(self._ac_v) if self._ac_v else np.zeros(0)
        beacons = [(t / US, self.stations[i].bssid) for t, i in self._beacons if t / US <= self._observed_until]
        return et, ev, at, av, beacons

    def on_airtime_s(self, upto_us: int) -> float:
        total = 0
        for start, on_end, end in self._periods:
            if start >= upto_us:
                break
            total += max(0, min(on_end, upto_us) - start)
        return total / US

    def trace(self) -> SimTrace:
        et, ev, at, av, beacons = self.drain()
        horizon = int(round(self._observed_until * US))
        self._period_at(horizon)
        truth = [tc for tc in self._truth if tc[0] <= self._observed_until]
        stats = {
            "wifi_tx": self.n_data_tx,
            "wifi_collisions": self.n_data_collisions,
            "wifi_drops": self.n_drops,
            "lteu_on_airtime": self.on_airtime_s(horizon),
        }
        return SimTrace(
            energy_t=et,
            energy_dbm=ev,
            ac_t=at,
            ac_rho=av,
            beacon_t=np.array([b[0] for b in beacons], dtype=float),
            beacon_bssid=tuple(b[1] for b in beacons),
            truth_t=np.array([t for t, _ in truth], dtype=float),
            truth_count=np.array([c for _, c in truth], dtype=int),
            duration_s=self._observed_until,
            stats=stats,
        )


def simulate_scenario(config: ScenarioConfig) -> SimTrace:
    sim = CoexistenceSimulator(config)
    sim.advance(config.duration_s)
    return sim.trace()
