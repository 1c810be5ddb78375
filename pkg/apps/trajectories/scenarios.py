"""
Synthetic highway scenarios in the ego frame, sampled at 10 ms.

Four kinds of target behaviour are generated: ``cruise`` (constant relative
velocity), ``lane_change`` (smoothstep lateral shift of one lane),
``cut_in`` (lane change into the ego lane while closing in) and
``decelerating_lead`` (a lead vehicle in the ego lane braking for a while).
Every track draws from its own generator seeded with ``(seed, index)``.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional

import numpy as np

from apps.common.exceptions import ScenarioConfigError
from .records import RawSample

logger = logging.getLogger(__name__)

CRUISE = 'cruise'
LANE_CHANGE = 'lane_change'
CUT_IN = 'cut_in'
DECELERATING_LEAD = 'decelerating_lead'
SCENARIO_KINDS = (CRUISE, LANE_CHANGE, CUT_IN, DECELERATING_LEAD)

DEFAULT_MIX = {CRUISE: 0.5, LANE_CHANGE: 0.3, CUT_IN: 0.15, DECELERATING_LEAD: 0.05}

# longitudinal band the generator keeps targets in (meters ahead of the ego)
X_RANGE = (5.0, 175.0)


@dataclass
class ScenarioSpec:
    n_tracks: int = 500
    mix: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_MIX))
    duration: float = 8.0
    sample_period: float = 0.01
    position_noise: float = 0.15
    velocity_noise: float = 0.1
    lateral_jitter: float = 0.05
    lane_width: float = 3.5

    def validate(self) -> 'ScenarioSpec':
        unknown = set(self.mix) - set(SCENARIO_KINDS)
        if unknown:
            raise ScenarioConfigError(f'unknown scenario kinds: {sorted(unknown)}')
        if any(w < 0 for w in self.mix.values()) or sum(self.mix.values()) <= 0:
            raise ScenarioConfigError('scenario weights must be non-negative with a positive sum')
        if self.n_tracks < 1:
            raise ScenarioConfigError(f'n_tracks must be at least 1, got {self.n_tracks}')
        if self.duration <= 0 or self.sample_period <= 0 or self.lane_width <= 0:
            raise ScenarioConfigError('duration, sample period and lane width must be positive')
        if min(self.position_noise, self.velocity_noise, self.lateral_jitter) < 0:
            raise ScenarioConfigError('noise levels must be non-negative')
        return self

    def counts(self) -> Dict[str, int]:
        """Tracks per kind: proportional to the mix, remainders to the largest fractions."""
        kinds = [k for k in SCENARIO_KINDS if k in self.mix]
        total = sum(self.mix[k] for k in kinds)
        exact = {k: self.n_tracks * self.mix[k] / total for k in kinds}
        counts = {k: int(np.floor(exact[k] + 1e-9)) for k in kinds}
        leftover = self.n_tracks - sum(counts.values())
        for k in sorted(kinds, key=lambda k: (-(exact[k] - counts[k]), kinds.index(k)))[:leftover]:
            counts[k] += 1
        return counts

    def to_dict(self) -> dict:
        return {
            'n_tracks': self.n_tracks,
            'mix': dict(self.mix),
            'duration': self.duration,
            'sample_period': self.sample_period,
            'position_noise': self.position_noise,
            'velocity_noise': self.velocity_noise,
            'lateral_jitter': self.lateral_jitter,
            'lane_width': self.lane_width,
        }


@dataclass
class TrackPlan:
    """Noise-free motion of one target; all quantities relative to the ego vehicle."""

    kind: str
    x0: float
    y0: float
    vx: float
    lateral_shift: float = 0.0
    maneuver_start: float = 0.0
    maneuver_duration: float = 1.0
    accel: float = 0.0
    accel_start: float = 0.0
    accel_duration: float = 0.0
    ego_speed: float = 25.0
    ego_speed_drift: float = 0.0
    yaw_amplitude: float = 0.0
    yaw_frequency: float = 0.05
    yaw_phase: float = 0.0
    jitter_frequency: float = 0.2
    jitter_phase: float = 0.0


def smoothstep(u: np.ndarray) -> np.ndarray:
    u = np.clip(u, 0.0, 1.0)
    return u ** 3 * (10.0 - 15.0 * u + 6.0 * u ** 2)


def smoothstep_rate(u: np.ndarray) -> np.ndarray:
    inside = (u > 0.0) & (u < 1.0)
    return np.where(inside, 30.0 * u ** 2 * (1.0 - u) ** 2, 0.0)


def _bounded_velocity(rng: np.random.Generator, x0: float, duration: float, low: float, high: float,
                      accel_shift: float = 0.0) -> float:
    """Relative velocity that keeps x inside X_RANGE for the whole track."""
    lo = max(low, (X_RANGE[0] - x0 - min(accel_shift, 0.0)) / duration)
    hi = min(high, (X_RANGE[1] - x0 - max(accel_shift, 0.0)) / duration)
    return float(rng.uniform(lo, hi)) if lo < hi else float(np.clip(0.0, low, high))


def _ego_channels(rng: np.random.Generator, plan: TrackPlan) -> TrackPlan:
    return replace(
        plan,
        ego_speed=float(rng.uniform(20.0, 33.0)),
        ego_speed_drift=float(rng.normal(0.0, 0.1)),
        yaw_amplitude=float(rng.uniform(0.0, 0.01)),
        yaw_frequency=float(rng.uniform(0.02, 0.1)),
        yaw_phase=float(rng.uniform(0, 2 * np.pi)),
        jitter_frequency=float(rng.uniform(0.1, 0.3)),
        jitter_phase=float(rng.uniform(0, 2 * np.pi)),
    )


def draw_plan(kind: str, rng: np.random.Generator, spec: ScenarioSpec) -> TrackPlan:
    lane = spec.lane_width
    duration = spec.duration
    if kind == CRUISE:
        x0 = float(rng.uniform(10.0, 150.0))
        plan = TrackPlan(kind, x0, lane * int(rng.integers(-1, 2)),
                         _bounded_velocity(rng, x0, duration, -4.0, 4.0))
    elif kind == LANE_CHANGE:
        lane_index = int(rng.integers(-1, 2))
        direction = -lane_index if lane_index else int(rng.choice([-1, 1]))
        maneuver = float(rng.uniform(3.0, 5.0))
        start = float(rng.uniform(0.5, max(0.5, duration - maneuver - 0.5)))
        x0 = float(rng.uniform(15.0, 140.0))
        plan = TrackPlan(kind, x0, lane * lane_index, _bounded_velocity(rng, x0, duration, -3.0, 3.0),
                         lateral_shift=direction * lane, maneuver_start=start, maneuver_duration=maneuver)
    elif kind == CUT_IN:
        side = int(rng.choice([-1, 1]))
        maneuver = float(rng.uniform(3.0, 5.0))
        start = float(rng.uniform(0.5, max(0.5, duration - maneuver - 0.5)))
        x0 = float(rng.uniform(25.0, 70.0))
        plan = TrackPlan(kind, x0, side * lane, _bounded_velocity(rng, x0, duration, -4.0, -1.0),
                         lateral_shift=-side * lane, maneuver_start=start, maneuver_duration=maneuver)
    elif kind == DECELERATING_LEAD:
        accel = float(rng.uniform(-3.0, -1.0))
        accel_duration = float(rng.uniform(1.5, 3.0))
        start = float(rng.uniform(1.0, max(1.0, duration - accel_duration - 1.0)))
        x0 = float(rng.uniform(40.0, 120.0))
        # braking moves the target back by at most this much
        shift = accel * accel_duration * (duration - start - accel_duration / 2)
        plan = TrackPlan(kind, x0, 0.0, _bounded_velocity(rng, x0, duration, -1.0, 1.0, shift),
                         accel=accel, accel_start=start, accel_duration=accel_duration)
    else:
        raise ScenarioConfigError(f'unknown scenario kind {kind!r}')
    return _ego_channels(rng, plan)


def plan_motion(plan: TrackPlan, times: np.ndarray, lateral_jitter: float = 0.0) -> Dict[str, np.ndarray]:
    """Noise-free position, velocity and ego channels at ``times`` (seconds from track start)."""
    tau = np.clip(times - plan.accel_start, 0.0, plan.accel_duration)
    after = np.maximum(times - plan.accel_start - plan.accel_duration, 0.0)
    x = plan.x0 + plan.vx * times + plan.accel * (0.5 * tau ** 2 + plan.accel_duration * after)
    x_dot = plan.vx + plan.accel * tau

    u = (times - plan.maneuver_start) / plan.maneuver_duration
    y = plan.y0 + plan.lateral_shift * smoothstep(u)
    y_dot = plan.lateral_shift * smoothstep_rate(u) / plan.maneuver_duration
    if lateral_jitter:
        w = 2 * np.pi * plan.jitter_frequency
        y = y + lateral_jitter * np.sin(w * times + plan.jitter_phase)
        y_dot = y_dot + lateral_jitter * w * np.cos(w * times + plan.jitter_phase)

    yaw_rate = plan.yaw_amplitude * np.sin(2 * np.pi * plan.yaw_frequency * times + plan.yaw_phase)
    ego_speed = plan.ego_speed + plan.ego_speed_drift * times
    return {'x': x, 'y': y, 'x_dot': x_dot, 'y_dot': y_dot, 'ego_yaw_rate': yaw_rate, 'ego_speed': ego_speed}


def render_track(plan: TrackPlan, spec: ScenarioSpec, rng: np.random.Generator, track_id: str) -> List[RawSample]:
    n = int(round(spec.duration / spec.sample_period))
    times = np.arange(n) * spec.sample_period
    motion = plan_motion(plan, times, spec.lateral_jitter)
    if spec.position_noise:
        motion['x'] = motion['x'] + rng.normal(0.0, spec.position_noise, n)
        motion['y'] = motion['y'] + rng.normal(0.0, spec.position_noise, n)
    if spec.velocity_noise:
        motion['x_dot'] = motion['x_dot'] + rng.normal(0.0, spec.velocity_noise, n)
        motion['y_dot'] = motion['y_dot'] + rng.normal(0.0, spec.velocity_noise, n)
    columns = [motion[name].tolist() for name in ('x', 'y', 'x_dot', 'y_dot', 'ego_yaw_rate', 'ego_speed')]
    return [RawSample(float(t), track_id, *row) for t, *row in zip(times.tolist(), *columns)]


def generate_scenarios(spec: Optional[ScenarioSpec] = None, seed: int = 0) -> List[List[RawSample]]:
    """Seeded tracks following ``spec``'s mix, ordered by track id."""
    spec = (spec or ScenarioSpec()).validate()
    kinds = [kind for kind, count in spec.counts().items() for _ in range(count)]
    kinds = [kinds[i] for i in np.random.default_rng(seed).permutation(len(kinds))]
    tracks = []
    for index, kind in enumerate(kinds):
        rng = np.random.default_rng([seed, index])
        plan = draw_plan(kind, rng, spec)
        tracks.append(render_track(plan, spec, rng, f'{index:05d}-{kind}'))
    logger.info('Generated %d tracks (%s) with seed %d', len(tracks),
                ', '.join(f'{k}={v}' for k, v in spec.counts().items()), seed)
    return tracks
