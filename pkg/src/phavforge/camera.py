"""Kite camera: a camera body tethered to a focus target, itself tethered to the protagonist.

Both tethers are linear springs with linear damping acting on point masses,
and each body also feels linear drag. The target-protagonist spring has a
dead zone: while the target is closer to the protagonist than
``min_distance_m`` it exerts no force at all.

Integration uses an energy-consistent midpoint scheme: positions advance with
the mean of old and new velocity, spring forces use the secant slope of the
spring potential between the old and new lengths, and damping/drag act on the
mean velocity. Per substep the mechanical energy therefore changes by exactly
minus the damping and drag work, which keeps it non-increasing when the
protagonist stands still, dead zone included. The implicit velocity is found by
fixed-point iteration inside the compiled kernel.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from phavforge import _core
from phavforge.stochastic import Stream
from phavforge.timing import FPS, SUBSTEP_S, SUBSTEPS_PER_FRAME, frame_count

BEHAVIORS = ("kite", "closeup", "indoors", "static")
MIN_DISTANCES = (0.0, 1.0, 2.0)
# focus anchor on the protagonist, metres above the ground position
ANCHOR_HEIGHT_M = 1.2


class SimulationDiverged(RuntimeError):
    """The integrator produced a non-finite state."""

    def __init__(self, message="simulation-diverged"):
        super().__init__(message)


@dataclass(frozen=True)
class SpringParams:
    stiffness: float
    damping: float
    rest_length: float


@dataclass(frozen=True)
class Impulse:
    direction: tuple[float, float, float]
    magnitude: float


@dataclass(frozen=True)
class CameraRig:
    behavior: str
    camera_mass: float
    camera_drag: float
    target_mass: float
    target_drag: float
    spring_ct: SpringParams
    spring_tp: SpringParams
    min_distance_m: float
    impulse: Impulse
    azimuth_rad: float = 0.0
    elevation_rad: float = 0.3

    @property
    def pinned(self) -> bool:
        """Infinite camera drag pins the camera body in place."""
        return math.isinf(self.camera_drag)

    def problems(self) -> list[str]:
        out = []
        if self.behavior not in BEHAVIORS:
            out.append(f"unknown camera behavior {self.behavior!r}")
        if not (self.camera_mass > 0 and self.target_mass > 0):
            out.append("masses must be positive")
        if not (self.camera_drag >= 0 and self.target_drag >= 0):
            out.append("drags must be non-negative")
        for name, s in (("spring_ct", self.spring_ct), ("spring_tp", self.spring_tp)):
            if not (s.stiffness >= 0 and s.damping >= 0 and s.rest_length >= 0):
                out.append(f"{name} stiffness, damping and rest length must be non-negative")
        if self.min_distance_m not in MIN_DISTANCES:
            out.append(f"min_distance_m must be one of {MIN_DISTANCES}, got {self.min_distance_m}")
        if self.impulse.magnitude < 0:
            out.append("impulse magnitude must be non-negative")
        if self.pinned and self.impulse.magnitude != 0:
            out.append("a pinned camera cannot take an impulse")
        return out

    def kernel_params(self) -> list[float]:
        return [
            self.camera_mass,
            0.0 if self.pinned else self.camera_drag,
            self.target_mass,
            self.target_drag,
            self.spring_ct.stiffness,
            self.spring_ct.damping,
            self.spring_ct.rest_length,
            self.spring_tp.stiffness,
            self.spring_tp.damping,
            self.spring_tp.rest_length,
            self.min_distance_m,
            1.0 if self.pinned else 0.0,
        ]


# -- parameter sampling --------------------------------------------------------

DEFAULT_RANGES = {
    "kite": {
        "camera_mass": [0.5, 5.0],
        "camera_drag": [0.1, 2.0],
        "target_mass": [0.5, 5.0],
        "target_drag": [0.1, 2.0],
        "ct_stiffness": [1.0, 50.0],
        "ct_damping": [0.0, 10.0],
        "ct_rest_length": [2.0, 8.0],
        "tp_stiffness": [1.0, 50.0],
        "tp_damping": [0.0, 10.0],
        "tp_rest_length": [0.0, 1.5],
        "impulse": [0.0, 20.0],
        "elevation_rad": [0.05, 0.7],
    },
    "closeup": {
        "ct_rest_length": [0.6, 1.5],
        "tp_rest_length": [0.0, 0.3],
        "impulse": [0.0, 5.0],
        "elevation_rad": [0.0, 0.3],
    },
    "indoors": {
        "ct_rest_length": [1.5, 3.5],
        "impulse": [0.0, 10.0],
        "elevation_rad": [0.2, 0.6],
    },
    "static": {
        "impulse": [0.0, 0.0],
    },
}


def behavior_ranges(behavior: str, ranges: dict | None = None) -> dict:
    """Kite ranges overlaid with the behavior's own entries."""
    ranges = ranges or DEFAULT_RANGES
    if behavior not in BEHAVIORS:
        raise ValueError(f"unknown camera behavior {behavior!r}; expected one of {BEHAVIORS}")
    merged = dict(ranges["kite"])
    if behavior != "kite":
        merged.update(ranges.get(behavior, {}))
    return merged


def sample_camera_params(rng: Stream, behavior: str, ranges: dict | None = None) -> CameraRig:
    r = behavior_ranges(behavior, ranges)

    def draw(name):
        lo, hi = r[name]
        return rng.between(lo, hi)

    # fixed draw order; every behavior consumes the same number of uniforms
    camera_mass = draw("camera_mass")
    camera_drag = draw("camera_drag")
    target_mass = draw("target_mass")
    target_drag = draw("target_drag")
    ct = SpringParams(draw("ct_stiffness"), draw("ct_damping"), draw("ct_rest_length"))
    tp = SpringParams(draw("tp_stiffness"), draw("tp_damping"), draw("tp_rest_length"))
    min_distance = rng.choice(MIN_DISTANCES)
    direction = rng.unit_vector()
    magnitude = draw("impulse")
    azimuth = rng.between(0.0, 2.0 * math.pi)
    elevation = draw("elevation_rad")
    if behavior == "static":
        camera_drag = math.inf
        magnitude = 0.0
    return CameraRig(
        behavior=behavior,
        camera_mass=camera_mass,
        camera_drag=camera_drag,
        target_mass=target_mass,
        target_drag=target_drag,
        spring_ct=ct,
        spring_tp=tp,
        min_distance_m=min_distance,
        impulse=Impulse(direction, magnitude),
        azimuth_rad=azimuth,
        elevation_rad=elevation,
    )


# -- state and forces --------------------------------------------------------------


@dataclass
class KiteState:
    camera_pos: np.ndarray
    camera_vel: np.ndarray
    target_pos: np.ndarray
    target_vel: np.ndarray

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.camera_pos, self.camera_vel, self.target_pos, self.target_vel]).astype(float)

    @classmethod
    def from_vector(cls, v) -> KiteState:
        v = np.asarray(v, dtype=float)
        return cls(v[0:3].copy(), v[3:6].copy(), v[6:9].copy(), v[9:12].copy())


def spring_force(d, v_rel, spring: SpringParams, min_distance: float = 0.0) -> np.ndarray:
    """Instantaneous force on the body at the ``d`` end of a spring.

    ``d`` points from the anchor body to this body and ``v_rel`` is this body's
    velocity relative to the anchor.
    """
    d = np.asarray(d, dtype=float)
    s = float(np.linalg.norm(d))
    if s < min_distance or s == 0.0:
        return np.zeros(3)
    return -spring.stiffness * (s - spring.rest_length) * d / s - spring.damping * np.asarray(v_rel, dtype=float)


def spring_potential(length: float, spring: SpringParams, min_distance: float = 0.0) -> float:
    q = max(length, min_distance) - spring.rest_length
    return 0.5 * spring.stiffness * q * q


def mechanical_energy(state: KiteState, rig: CameraRig, protagonist_pos) -> float:
    p = np.asarray(protagonist_pos, dtype=float)
    ke = 0.5 * rig.target_mass * float(state.target_vel @ state.target_vel)
    if not rig.pinned:
        ke += 0.5 * rig.camera_mass * float(state.camera_vel @ state.camera_vel)
    pe = spring_potential(float(np.linalg.norm(state.camera_pos - state.target_pos)), rig.spring_ct)
    pe += spring_potential(float(np.linalg.norm(state.target_pos - p)), rig.spring_tp, rig.min_distance_m)
    return ke + pe


def integrate(rig: CameraRig, initial: KiteState, protagonist_positions, dt_s: float = SUBSTEP_S,
              emit_every: int = 1):
    """Integrate from ``initial`` along sampled protagonist positions.

    Returns ``(states, energy)``: the emitted 12-vectors and the mechanical
    energy after every substep.
    """
    if not dt_s > 0:
        raise ValueError(f"dt_s must be positive, got {dt_s}")
    prot = np.ascontiguousarray(protagonist_positions, dtype=np.float64)
    states, energy, status = _core.integrate_kite(prot, dt_s, rig.kernel_params(), initial.to_vector(), emit_every)
    if status != _core.OK:
        raise SimulationDiverged()
    return states, energy


def step(state: KiteState, rig: CameraRig, protagonist_pos, dt_s: float,
         previous_protagonist_pos=None) -> KiteState:
    """Advance one substep; a missing previous position means the protagonist is still."""
    p1 = np.asarray(protagonist_pos, dtype=float)
    p0 = p1 if previous_protagonist_pos is None else np.asarray(previous_protagonist_pos, dtype=float)
    states, _ = integrate(rig, state, np.stack([p0, p1]), dt_s)
    return KiteState.from_vector(states[-1])


def initial_state(rig: CameraRig, protagonist_pos) -> KiteState:
    """Both springs at rest, camera placed along the rig's azimuth/elevation, impulse applied."""
    anchor = np.asarray(protagonist_pos, dtype=float) + np.array([0.0, 0.0, ANCHOR_HEIGHT_M])
    ce, se = math.cos(rig.elevation_rad), math.sin(rig.elevation_rad)
    toward_camera = np.array([ce * math.cos(rig.azimuth_rad), ce * math.sin(rig.azimuth_rad), se])
    horizontal = np.array([math.cos(rig.azimuth_rad), math.sin(rig.azimuth_rad), 0.0])
    target = anchor + rig.spring_tp.rest_length * horizontal
    camera = target + rig.spring_ct.rest_length * toward_camera
    vel = np.zeros(3)
    if not rig.pinned and rig.impulse.magnitude > 0:
        vel = rig.impulse.magnitude / rig.camera_mass * np.asarray(rig.impulse.direction, dtype=float)
    return KiteState(camera, vel, target, np.zeros(3))


# -- trajectories ------------------------------------------------------------------


@dataclass
class CameraTrajectory:
    t_s: np.ndarray
    camera_pos: np.ndarray
    target_pos: np.ndarray
    look_at: np.ndarray
    camera_vel: np.ndarray
    target_vel: np.ndarray
    energy: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.t_s)

    def frames(self):
        for i in range(len(self)):
            yield {
                "t_s": float(self.t_s[i]),
                "camera_pos": self.camera_pos[i],
                "target_pos": self.target_pos[i],
                "look_at": self.look_at[i],
            }

    @property
    def final_camera_speed(self) -> float:
        return float(np.linalg.norm(self.camera_vel[-1]))


def _look_at(camera, target):
    d = target - camera
    n = np.linalg.norm(d, axis=1, keepdims=True)
    out = np.tile([1.0, 0.0, 0.0], (len(d), 1))
    ok = n[:, 0] > 0
    out[ok] = d[ok] / n[ok]
    return out


def simulate(rig: CameraRig, protagonist_path: Callable[[float], Sequence[float]], duration_s: float,
             ) -> CameraTrajectory:
    """Run the Kite camera for ``duration_s`` and sample it at 30 Hz.

    Integration runs at 300 Hz; every tenth state is emitted, starting with
    the state right after the initial impulse at t = 0.
    """
    if not duration_s >= 1.0 / FPS:
        raise ValueError(f"duration_s must be at least one frame (1/{FPS} s), got {duration_s}")
    n_frames = frame_count(duration_s)
    n_sub = (n_frames - 1) * SUBSTEPS_PER_FRAME
    t_sub = np.arange(n_sub + 1) * SUBSTEP_S
    prot = np.array([protagonist_path(float(t)) for t in t_sub], dtype=float).reshape(n_sub + 1, 3)
    anchor = prot + np.array([0.0, 0.0, ANCHOR_HEIGHT_M])
    state0 = initial_state(rig, prot[0])
    states, energy = integrate(rig, state0, anchor, SUBSTEP_S, SUBSTEPS_PER_FRAME)
    camera, target = states[:, 0:3], states[:, 6:9]
    return CameraTrajectory(
        t_s=np.arange(n_frames) / FPS,
        camera_pos=camera,
        target_pos=target,
        look_at=_look_at(camera, target),
        camera_vel=states[:, 3:6],
        target_vel=states[:, 9:12],
        energy=energy,
    )


def straight_line(start, velocity) -> Callable[[float], np.ndarray]:
    start = np.asarray(start, dtype=float)
    velocity = np.asarray(velocity, dtype=float)
    return lambda t: start + velocity * t


TRAJECTORY_COLUMNS = (
    "t", "cam_x", "cam_y", "cam_z", "target_x", "target_y", "target_z", "look_x", "look_y", "look_z",
)


def write_trajectory(traj: CameraTrajectory, path_or_file, delimiter=",") -> None:
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
    try:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for i in range(len(traj)):
            w.writerow([repr(float(traj.t_s[i]))]
                       + [repr(float(x)) for x in traj.camera_pos[i]]
                       + [repr(float(x)) for x in traj.target_pos[i]]
                       + [repr(float(x)) for x in traj.look_at[i]])
    finally:
        if own:
            fh.close()


def read_trajectory(path, delimiter=",") -> np.ndarray:
    """Rows of the exported trajectory as an ``(n, 10)`` array."""
    return np.loadtxt(path, delimiter=delimiter, skiprows=1, ndmin=2)


def with_overrides(rig: CameraRig, **changes) -> CameraRig:
    return replace(rig, **changes)
