"""Standard scenario presets: the fixed-distance suite, named cases A-N and the arrival suite.

Every AP in the suites streams bursty traffic at a 10 % long-run load.  The
lab layout (per-AP shadowing) is fixed by ``SITE_SEED`` so that the same AP
index always sits at the same received level, as in a physical lab where
the APs stay put between runs.  The channel adds a drifting receiver noise
floor, which moves energy readings but not preamble correlation.
"""

from __future__ import annotations

from .sim import ApSpec, ChangePoint, ConfigError, LteuSpec, PathLossParams, ScenarioConfig

SAMPLE_RATE_HZ = 384.0  # clock rate; half the ticks fall in OFF, so ~192 samples/s
SITE_SEED = 266
AC_WINDOW_US = 1000.0
DUTY_CYCLE = 0.5
PERIOD_MS = 40.0
DISTANCES = (6.0, 10.0, 15.0)
SIGHTS = ("LOS", "NLOS")
MAX_CLASSES = 6

SUITE_CHANNEL = PathLossParams(
    shadow_sigma_db=6.0,
    fast_sigma_db=0.5,
    slow_common_sigma_db=1.0,
    slow_link_sigma_db=1.0,
    noise_drift_sigma_db=6.0,
    noise_drift_tau_s=2.0,
)
SUITE_TRAFFIC = dict(traffic="Streaming", offered_load=0.1, burst_on_s=1.0, burst_off_s=0.25)

# AP distances (feet) per named case, AP 1 first
CASES: dict[str, tuple[float, ...]] = {
    "A": (6,),
    "B": (10,),
    "C": (15,),
    "D": (6, 6),
    "E": (6, 15),
    "F": (10, 15),
    "G": (6, 6, 15),
    "H": (6, 10, 15),
    "I": (6, 6, 10, 15),
    "J": (6, 10, 10, 15),
    "K": (6, 6, 10, 10, 15),
    "L": (6, 10, 10, 10, 15),
    "M": (6, 10, 15, 15, 15),
    "N": (6, 6, 10, 15, 15),
}
DELAY_CASE = "K"


def class_set(k: int) -> list[int]:
    """Candidate AP counts for a ``k``-class problem: {1, 2} for two classes, else 0..k-1."""
    if not 2 <= k <= MAX_CLASSES:
        raise ValueError(f"class count must lie in 2..{MAX_CLASSES}")
    return [1, 2] if k == 2 else list(range(k))


def _scenario(distances, sight: str, seed: int, duration_s: float, n_active: int | None = None,
              change_points=(), **overrides) -> ScenarioConfig:
    aps = tuple(ApSpec(float(d), sight, **SUITE_TRAFFIC) for d in distances)
    kw = dict(
        ap_list=aps,
        lteu=LteuSpec(DUTY_CYCLE, PERIOD_MS),
        duration_s=float(duration_s),
        sample_rate_hz=SAMPLE_RATE_HZ,
        seed=int(seed),
        site_seed=SITE_SEED,
        ac_window_us=AC_WINDOW_US,
        channel=SUITE_CHANNEL,
        initial_ap_count=n_active,
        change_points=tuple(change_points),
    )
    kw.update(overrides)
    return ScenarioConfig(**kw)


def fixed_distance_scenario(n_aps: int, distance_ft: float = 6.0, sight: str = "NLOS", seed: int = 0,
                            duration_s: float = 60.0, **overrides) -> ScenarioConfig:
    """``n_aps`` APs, all at the same distance and sight condition."""
    if not 0 <= n_aps <= MAX_CLASSES - 1:
        raise ValueError("n_aps must lie in 0..5")
    return _scenario([distance_ft] * n_aps, sight, seed, duration_s, **overrides)


def case_scenario(case: str, sight: str = "NLOS", seed: int = 0, duration_s: float = 60.0,
                  n_active: int | None = None, **overrides) -> ScenarioConfig:
    """Named placement; ``n_active`` switches on only the first APs of the case."""
    case = case.upper()
    if case not in CASES:
        raise ConfigError(f"unknown case {case!r}; expected one of {''.join(CASES)}")
    d = CASES[case]
    if n_active is not None and not 0 <= n_active <= len(d):
        raise ConfigError(f"case {case} has {len(d)} APs")
    if n_active is not None:
        d = d[:n_active]
    return _scenario(d, sight, seed, duration_s, **overrides)


def arrival_scenario(seed: int = 0, duration_s: float = 40.0, change_s: float = 20.0, before: int = 1,
                     after: int = 2, case: str = DELAY_CASE, sight: str = "NLOS") -> ScenarioConfig:
    """Case geometry with ``before`` APs active, switching to ``after`` at ``change_s``."""
    d = CASES[case.upper()]
    if not (0 <= before <= len(d) and 0 <= after <= len(d)):
        raise ValueError("AP counts outside the case")
    return _scenario(d, sight, seed, duration_s, n_active=before,
                     change_points=(ChangePoint(float(change_s), int(after)),))
