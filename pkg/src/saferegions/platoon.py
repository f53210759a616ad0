"""Vehicle-platoon emergency braking simulator.

A platoon of one leader and N followers cruises at steady speed; at t = 0 the
leader applies a constant braking force F0 < 0 and broadcasts a notification.
Each follower keeps cruising (applied force exactly cancelling rolling and
drag resistance) until it receives the notification, which takes the network
delay plus one time step per lost packet, then brakes with gain * F0.
Longitudinal dynamics per vehicle:

    dv/dt = (F - a_roll - b_drag * v^2) / m,   v clamped at 0 (no reversing)
    dd/dt = v_front - v_self                    for each spacing

integrated with the explicit Euler rule.  A run is labelled unsafe (-1) when
any spacing falls to the collision distance within the horizon, safe (+1)
otherwise.  Simulations are vectorized across a batch; a run stops early once
every vehicle has stopped or a collision happened.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datagen import Dataset
from .errors import InvalidArgument, SimulationError

__all__ = ["PlatoonSpec", "PlatoonRanges", "platoon_features", "simulate_platoon",
           "generate_platoon_dataset", "FEATURE_DIM"]

MAX_FOLLOWERS = 8
FEATURE_DIM = 40   # 1 + 8 gaps + 9 speeds + 9 accels + 1 force + 9 masses + 3 comms


@dataclass(frozen=True)
class PlatoonSpec:
    """Concrete scenario: geometry, masses, braking, and network behaviour."""

    n_followers: int
    gaps: tuple                  # initial spacings, one per follower, m
    speed_kmh: tuple | float     # initial speed(s), scalar or one per vehicle
    brake_force: float           # leader braking force F0 <= 0, N
    masses: tuple                # one per vehicle (leader first), kg
    delay: float                 # notification network delay, s
    packet_error_rate: float     # probability a retransmission is lost
    control_gain: float          # follower braking force = gain * F0
    rolling_resistance: float = 100.0   # N
    drag_coefficient: float = 0.5       # N s^2 / m^2
    time_step: float = 0.01             # s
    horizon: float = 30.0               # s
    collision_distance: float = 2.0     # m
    seed: int = 0

    def __post_init__(self):
        n = int(self.n_followers)
        if not 1 <= n <= MAX_FOLLOWERS:
            raise InvalidArgument(f"n_followers must lie in [1, {MAX_FOLLOWERS}], got {n}")
        if len(self.gaps) != n:
            raise InvalidArgument(f"expected {n} gaps, got {len(self.gaps)}")
        if len(self.masses) != n + 1:
            raise InvalidArgument(f"expected {n + 1} masses, got {len(self.masses)}")
        if any(m <= 0 for m in self.masses):
            raise InvalidArgument("masses must be positive")
        if self.brake_force > 0:
            raise InvalidArgument(f"brake_force must be <= 0, got {self.brake_force!r}")
        if not 0.0 <= self.packet_error_rate < 1.0:
            raise InvalidArgument(
                f"packet_error_rate must lie in [0, 1), got {self.packet_error_rate!r}")
        if self.delay < 0 or self.control_gain < 0:
            raise InvalidArgument("delay and control_gain must be non-negative")
        if self.rolling_resistance < 0 or self.drag_coefficient < 0:
            raise InvalidArgument("resistance coefficients must be non-negative")
        if self.time_step <= 0 or self.horizon <= 0:
            raise InvalidArgument("time_step and horizon must be positive")
        if self.collision_distance < 0:
            raise InvalidArgument("collision_distance must be non-negative")

    def speeds(self) -> np.ndarray:
        v = np.asarray(self.speed_kmh, dtype=float)
        if v.ndim == 0:
            v = np.full(int(self.n_followers) + 1, float(v))
        if v.shape != (int(self.n_followers) + 1,):
            raise InvalidArgument(
                f"speed_kmh must be scalar or one value per vehicle, got shape {v.shape}")
        if (v < 0).any():
            raise InvalidArgument("speeds must be non-negative")
        return v


@dataclass(frozen=True)
class PlatoonRanges:
    """Sampling ranges for scenario generation (defaults for a heavy-vehicle
    platoon; inclusive bounds, uniform draws)."""

    n_followers: tuple = (3, 8)
    gap: tuple = (4.0, 9.0)              # m
    speed_kmh: tuple = (10.0, 90.0)
    brake_force: tuple = (-8000.0, -1000.0)   # N
    mass: tuple = (1000.0, 2000.0)       # kg
    delay: tuple = (0.0, 0.5)            # s
    packet_error_rate: tuple = (0.0, 0.5)
    control_gain: tuple = (0.8, 1.2)

    def __post_init__(self):
        for name in ("n_followers", "gap", "speed_kmh", "mass", "delay",
                     "packet_error_rate", "control_gain", "brake_force"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise InvalidArgument(f"range {name} has lo > hi: {lo!r} > {hi!r}")
        if self.n_followers[0] < 1 or self.n_followers[1] > MAX_FOLLOWERS:
            raise InvalidArgument(f"n_followers range must stay within [1, {MAX_FOLLOWERS}]")
        if self.brake_force[1] > 0:
            raise InvalidArgument("brake_force range must be non-positive")

    def to_record(self) -> dict:
        return {name: list(map(float, getattr(self, name)))
                for name in ("n_followers", "gap", "speed_kmh", "brake_force",
                             "mass", "delay", "packet_error_rate", "control_gain")}


def platoon_features(spec: PlatoonSpec) -> np.ndarray:
    """Fixed-width feature vector of a scenario (simulation not needed).

    Layout: follower count; gaps padded to 8; per-vehicle speeds (km/h) padded
    to 9; per-vehicle F0/m accelerations padded to 9; F0; masses padded to 9;
    delay; packet error rate; control gain.  Padding is zero.
    """
    n = int(spec.n_followers)
    out = np.zeros(FEATURE_DIM)
    out[0] = n
    out[1:1 + n] = spec.gaps
    out[9:9 + n + 1] = spec.speeds()
    masses = np.asarray(spec.masses, dtype=float)
    out[18:18 + n + 1] = spec.brake_force / masses
    out[27] = spec.brake_force
    out[28:28 + n + 1] = masses
    out[37] = spec.delay
    out[38] = spec.packet_error_rate
    out[39] = spec.control_gain
    return out


def _reception_steps(spec: PlatoonSpec, rng: np.random.Generator) -> np.ndarray:
    # base delay in steps, plus one step per lost packet per follower
    base = int(np.ceil(spec.delay / spec.time_step - 1e-12))
    tries = rng.geometric(1.0 - spec.packet_error_rate, size=int(spec.n_followers))
    return base + (tries - 1)


def simulate_platoon(spec: PlatoonSpec) -> tuple[np.ndarray, int]:
    """Run one scenario; returns (features, label)."""
    rng = np.random.default_rng(spec.seed)
    reception = _reception_steps(spec, rng)
    labels = _simulate_batch([spec], [reception])
    return platoon_features(spec), int(labels[0])


def _simulate_batch(specs: list[PlatoonSpec], receptions: list[np.ndarray]) -> np.ndarray:
    """Integrate many scenarios in lockstep; they must share the physical
    constants (time step, horizon, resistances, collision distance)."""
    ref = specs[0]
    for spec in specs[1:]:
        if (spec.time_step != ref.time_step or spec.horizon != ref.horizon
                or spec.rolling_resistance != ref.rolling_resistance
                or spec.drag_coefficient != ref.drag_coefficient
                or spec.collision_distance != ref.collision_distance):
            raise InvalidArgument("batched scenarios must share physical constants")

    batch = len(specs)
    n_veh = MAX_FOLLOWERS + 1
    dt = ref.time_step
    steps = int(round(ref.horizon / dt))
    a_roll = ref.rolling_resistance
    b_drag = ref.drag_coefficient
    threshold = ref.collision_distance

    veh = np.zeros((batch, n_veh), dtype=bool)
    gap_mask = np.zeros((batch, MAX_FOLLOWERS), dtype=bool)
    v = np.zeros((batch, n_veh))
    d = np.full((batch, MAX_FOLLOWERS), np.inf)   # inert padding for min/compare
    masses = np.ones((batch, n_veh))
    force0 = np.zeros(batch)
    gain = np.zeros(batch)
    reception = np.full((batch, MAX_FOLLOWERS), np.iinfo(np.int64).max, dtype=np.int64)

    for b, spec in enumerate(specs):
        n = int(spec.n_followers)
        veh[b, :n + 1] = True
        gap_mask[b, :n] = True
        v[b, :n + 1] = spec.speeds() / 3.6
        d[b, :n] = spec.gaps
        masses[b, :n + 1] = spec.masses
        force0[b] = spec.brake_force
        gain[b] = spec.control_gain
        reception[b, :n] = receptions[b]

    collided = (d <= threshold).any(axis=1)
    done = collided | (~(v > 0.0).any(axis=1))

    for k in range(steps):
        if done.all():
            break
        resistance = a_roll + b_drag * v * v
        force = np.empty_like(v)
        force[:, 0] = force0
        # followers cruise (net zero force) until notified, then brake
        notified = k >= reception
        force[:, 1:] = np.where(notified, gain[:, None] * force0[:, None], resistance[:, 1:])
        dv = dt * (force - resistance) / masses
        v_new = np.maximum(v + dv, 0.0)
        v_new[~veh] = 0.0
        d_new = d + dt * (v[:, :-1] - v[:, 1:])
        active = ~done
        v[active] = v_new[active]
        rows = active[:, None] & gap_mask
        d[rows] = d_new[rows]

        if k % 200 == 0 and not np.isfinite(v).all():
            bad = int(np.flatnonzero(~np.isfinite(v).all(axis=1))[0])
            raise SimulationError(f"non-finite state in scenario {bad} at step {k}")

        hit = active & (d <= threshold).any(axis=1)
        collided |= hit
        done |= hit | (~(v > 0.0).any(axis=1))

    if not np.isfinite(v).all():
        bad = int(np.flatnonzero(~np.isfinite(v).all(axis=1))[0])
        raise SimulationError(f"non-finite state in scenario {bad} at final step")

    return np.where(collided, -1, 1)


def generate_platoon_dataset(n_samples: int, ranges: PlatoonRanges | None = None,
                             seed: int = 0, return_specs: bool = False):
    """Sample scenarios from the ranges, simulate, and collect a dataset.

    Each scenario gets its own substream seeded by (seed, index), so any
    stored spec re-simulates to its stored label.  n_samples = 0 yields an
    empty dataset of the fixed feature width.
    """
    n_samples = int(n_samples)
    if n_samples < 0:
        raise InvalidArgument(f"n_samples must be non-negative, got {n_samples}")
    ranges = ranges or PlatoonRanges()
    specs: list[PlatoonSpec] = []
    receptions: list[np.ndarray] = []
    for index in range(n_samples):
        rng = np.random.default_rng([seed, index])
        n = int(rng.integers(ranges.n_followers[0], ranges.n_followers[1] + 1))
        spec = PlatoonSpec(
            n_followers=n,
            gaps=tuple(rng.uniform(*ranges.gap, size=n)),
            speed_kmh=float(rng.uniform(*ranges.speed_kmh)),
            brake_force=float(rng.uniform(*ranges.brake_force)),
            masses=tuple(rng.uniform(*ranges.mass, size=n + 1)),
            delay=float(rng.uniform(*ranges.delay)),
            packet_error_rate=float(rng.uniform(*ranges.packet_error_rate)),
            control_gain=float(rng.uniform(*ranges.control_gain)),
            seed=int(rng.integers(2 ** 63)),
        )
        specs.append(spec)
        # same draw path as simulate_platoon, so stored specs relabel exactly
        receptions.append(_reception_steps(spec, np.random.default_rng(spec.seed)))

    if n_samples == 0:
        x = np.empty((0, FEATURE_DIM))
        labels = np.empty((0,), dtype=int)
    else:
        labels = _simulate_batch(specs, receptions)
        x = np.stack([platoon_features(s) for s in specs])

    provenance = {"generator": "platoon", "seed": int(seed), "n": n_samples,
                  "ranges": ranges.to_record()}
    data = Dataset(x, labels, provenance)
    if return_specs:
        return data, specs
    return data
