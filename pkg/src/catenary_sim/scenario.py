"""Scenario configuration, reference trajectories, CSV logging, analysis.

A scenario is a single JSON document with sections for the box, ground,
cable, gains, quadrotor, placement, trajectory, and integration settings.
Three built-in scenarios cover the desk-scale experiments: rolling a box
one quarter-turn along a line, dragging it around a semicircle, and a
time-scheduled drag followed by a roll.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Literal

import numpy as np
import pydantic

from .cable import CableFriction
from .control import BoxReference, Gains
from .dynamics import BoxParams, GroundModel, QuadrotorParams
from .errors import MalformedLog, ParseError, ValidationError
from .geometry import wrap_angle

__all__ = [
    "ScenarioConfig",
    "BUILTIN_SCENARIOS",
    "builtin_config",
    "list_scenarios",
    "load_config",
    "build_trajectory",
    "LOG_COLUMNS",
    "LogRecord",
    "write_log",
    "read_log",
    "analyze",
    "render_report",
]

MODE_TOKENS = ("FREE", "CONTACT", "DRAG", "ROLL")


class _Section(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="forbid")


class BoxSection(_Section):
    w: float = 0.155
    l: float = 0.155
    h: float = 0.155
    m_b: float = 0.08

    def to_params(self) -> BoxParams:
        return BoxParams(w=self.w, l=self.l, h=self.h, m_b=self.m_b)


class GroundSection(_Section):
    mu_s: float = 0.3
    mu_k: float = 0.3
    disturbance: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def to_model(self) -> GroundModel:
        return GroundModel(mu_s=self.mu_s, mu_k=self.mu_k,
                           disturbance=np.asarray(self.disturbance))


class CableSection(_Section):
    length: float = 1.0
    mu_c: float = 0.3
    gamma_max: float = math.pi / 6

    def to_friction(self) -> CableFriction:
        return CableFriction(mu_c=self.mu_c, gamma_max=self.gamma_max)


class GainsSection(_Section):
    K_p: float | tuple[float, float, float] = 4.0
    K_v: float | tuple[float, float, float] = 3.0
    K_i: float | tuple[float, float, float] = 0.5
    integral_clamp: float = 0.5
    k_p_yaw: float = 2.0
    k_v_yaw: float = 0.5
    k_x: float = 8.0
    k_v: float = 4.0
    k_R: float = 0.7
    k_omega: float = 0.1

    def to_gains(self) -> Gains:
        return Gains(K_p=self.K_p, K_v=self.K_v, K_i=self.K_i,
                     integral_clamp=self.integral_clamp,
                     k_p_yaw=self.k_p_yaw, k_v_yaw=self.k_v_yaw,
                     k_x=self.k_x, k_v=self.k_v, k_R=self.k_R,
                     k_omega=self.k_omega)


class QuadSection(_Section):
    m: float = 0.12
    J: tuple[float, float, float] = (1.4e-4, 1.4e-4, 2.2e-4)

    def to_params(self) -> QuadrotorParams:
        return QuadrotorParams(m=self.m, J=np.diag(self.J))


class PlacementSection(_Section):
    alpha: float = math.pi / 4
    gamma: float = math.pi / 12
    z_roll: float = 0.12
    clearance: float = 0.01
    quarter_rolls: int = 1
    gamma_override: float | None = None  # forced elevation, for slip tests


class SegmentSpec(_Section):
    """Piecewise-analytic trajectory segment: polynomial coefficients in
    (t - t_start), ascending order; yaw is a polynomial or 'auto' for the
    position-based heading atan2(y, x)."""

    t_start: float
    t_end: float
    x: tuple[float, ...]
    y: tuple[float, ...]
    psi: tuple[float, ...] | Literal["auto"] = (0.0,)

    @pydantic.model_validator(mode="after")
    def _ordered(self):
        if not self.t_end > self.t_start:
            raise ValueError("segment must have t_end > t_start")
        if len(self.x) == 0 or len(self.y) == 0:
            raise ValueError("segment polynomials need at least one coefficient")
        return self


class ScheduleEntry(_Section):
    t: float
    action: Literal["drag", "roll"]


class TrajectorySection(_Section):
    builtin: str | None = None
    segments: tuple[SegmentSpec, ...] | None = None
    schedule: tuple[ScheduleEntry, ...] | None = None
    start: tuple[float, float, float] | None = None  # box x, y, yaw at t=0

    @pydantic.model_validator(mode="after")
    def _one_source(self):
        if (self.builtin is None) == (self.segments is None):
            raise ValueError(
                "trajectory needs exactly one of 'builtin' or 'segments'")
        if self.segments is not None:
            ts = sorted(self.segments, key=lambda s: s.t_start)
            for a, b in zip(ts, ts[1:]):
                if b.t_start < a.t_end - 1e-12:
                    raise ValueError("trajectory segments overlap")
        return self


class SimSection(_Section):
    dt: float = 1e-3
    duration: float = 15.0
    floor: float = 0.15
    out: str | None = None

    @pydantic.model_validator(mode="after")
    def _bounds(self):
        if not 0.0 < self.dt <= 0.01:
            raise ValueError("dt must lie in (0, 0.01]")
        if self.duration < 0.0:
            raise ValueError("duration must be non-negative")
        if self.floor < 0.0:
            raise ValueError("floor limit must be non-negative")
        return self


class ScenarioConfig(_Section):
    name: str = "custom"
    box: BoxSection = pydantic.Field(default_factory=BoxSection)
    ground: GroundSection = pydantic.Field(default_factory=GroundSection)
    cable: CableSection = pydantic.Field(default_factory=CableSection)
    gains: GainsSection = pydantic.Field(default_factory=GainsSection)
    quad: QuadSection = pydantic.Field(default_factory=QuadSection)
    placement: PlacementSection = pydantic.Field(
        default_factory=PlacementSection)
    trajectory: TrajectorySection
    sim: SimSection = pydantic.Field(default_factory=SimSection)

    def resolved(self) -> dict:
        """Fully-populated config as plain data (echoed into log headers)."""
        return self.model_dump(mode="json")


def _builtin_rolling_line() -> ScenarioConfig:
    return ScenarioConfig(
        name="rolling_line",
        ground=GroundSection(mu_s=0.8, mu_k=0.8),
        trajectory=TrajectorySection(builtin="rolling_line",
                                     start=(0.0, 0.5, 0.0)),
        sim=SimSection(duration=15.0),
    )


def _builtin_dragging_semicircle() -> ScenarioConfig:
    return ScenarioConfig(
        name="dragging_semicircle",
        ground=GroundSection(mu_s=0.3, mu_k=0.3),
        trajectory=TrajectorySection(builtin="dragging_semicircle",
                                     start=(0.0, 1.0, math.pi / 2)),
        sim=SimSection(duration=16.0),
    )


def _builtin_drag_then_roll() -> ScenarioConfig:
    return ScenarioConfig(
        name="drag_then_roll",
        ground=GroundSection(mu_s=0.8, mu_k=0.8),
        trajectory=TrajectorySection(
            builtin="drag_then_roll", start=(0.0, 0.0, 0.0),
            schedule=(ScheduleEntry(t=11.0, action="drag"),
                      ScheduleEntry(t=16.5, action="roll"))),
        sim=SimSection(duration=22.0),
    )


BUILTIN_SCENARIOS: dict[str, Callable[[], ScenarioConfig]] = {
    "rolling_line": _builtin_rolling_line,
    "dragging_semicircle": _builtin_dragging_semicircle,
    "drag_then_roll": _builtin_drag_then_roll,
}


def list_scenarios() -> list[str]:
    return sorted(BUILTIN_SCENARIOS)


def builtin_config(name: str) -> ScenarioConfig:
    try:
        return BUILTIN_SCENARIOS[name]()
    except KeyError:
        raise ValidationError(
            f"unknown builtin scenario {name!r}; available: "
            f"{', '.join(list_scenarios())}") from None


def _config_from_data(data: dict) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data)
    except pydantic.ValidationError as exc:
        first = exc.errors()[0]
        loc = ".".join(str(part) for part in first["loc"]) or "<root>"
        raise ValidationError(f"{loc}: {first['msg']}") from None


def load_config(path: str | Path) -> ScenarioConfig:
    """Parse and validate a scenario file (JSON syntax, unknown keys
    rejected, defaults filled)."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be a JSON object")
    return _config_from_data(data)


# --- reference trajectories -------------------------------------------------


def _compile_poly(coeffs) -> Callable[[float], tuple[float, float, float]]:
    p = np.polynomial.Polynomial(list(coeffs))
    dp, ddp = p.deriv(1), p.deriv(2)

    def at(s: float) -> tuple[float, float, float]:
        return float(p(s)), float(dp(s)), float(ddp(s))

    return at


def _auto_heading(x, vx, ax, y, vy, ay) -> tuple[float, float, float]:
    """Position-based heading atan2(y, x) with analytic derivatives."""
    r2 = x * x + y * y
    if r2 < 1e-12:
        return 0.0, 0.0, 0.0
    psi = math.atan2(y, x)
    num = vy * x - vx * y
    psi_dot = num / r2
    dnum = ay * x - ax * y
    dr2 = 2.0 * (x * vx + y * vy)
    psi_ddot = (dnum * r2 - num * dr2) / (r2 * r2)
    return psi, psi_dot, psi_ddot


def _segments_trajectory(segments: tuple[SegmentSpec, ...]
                         ) -> Callable[[float], BoxReference]:
    ordered = sorted(segments, key=lambda s: s.t_start)
    compiled = [(seg, _compile_poly(seg.x), _compile_poly(seg.y),
                 None if seg.psi == "auto" else _compile_poly(seg.psi))
                for seg in ordered]

    def at(t: float) -> BoxReference:
        seg, px, py, ppsi = compiled[0]
        for candidate in compiled:
            if candidate[0].t_start <= t:
                seg, px, py, ppsi = candidate
        s = min(max(t, seg.t_start), seg.t_end) - seg.t_start
        x, vx, ax = px(s)
        y, vy, ay = py(s)
        clipped = t < seg.t_start or t > seg.t_end
        if clipped:
            vx = vy = ax = ay = 0.0
        if ppsi is None:
            psi, psi_dot, psi_ddot = _auto_heading(x, vx, ax, y, vy, ay)
        else:
            psi, psi_dot, psi_ddot = ppsi(s)
            if clipped:
                psi_dot = psi_ddot = 0.0
        return BoxReference(r=np.array([x, y, 0.0]),
                            v=np.array([vx, vy, 0.0]),
                            a=np.array([ax, ay, 0.0]),
                            psi=psi, psi_dot=psi_dot, psi_ddot=psi_ddot)

    return at


def _rolling_line_at(t: float) -> BoxReference:
    return BoxReference(r=np.array([t, 0.5, 0.0]),
                        v=np.array([1.0, 0.0, 0.0]), a=np.zeros(3),
                        psi=0.0, psi_dot=0.0)


def _semicircle_at(t: float) -> BoxReference:
    # x = sin t, y = cos t; heading atan2(y, x) = pi/2 - t on the arc.
    return BoxReference(r=np.array([math.sin(t), math.cos(t), 0.0]),
                        v=np.array([math.cos(t), -math.sin(t), 0.0]),
                        a=np.array([-math.sin(t), -math.cos(t), 0.0]),
                        psi=wrap_angle(math.pi / 2 - t), psi_dot=-1.0)


def _drag_then_roll_at(t: float) -> BoxReference:
    # Straight push along +x at a desk-scale speed; the roll phase paces
    # the pivot angle internally.
    speed = 0.05
    return BoxReference(r=np.array([speed * t, 0.0, 0.0]),
                        v=np.array([speed, 0.0, 0.0]), a=np.zeros(3),
                        psi=0.0, psi_dot=0.0)


_BUILTIN_TRAJECTORIES: dict[str, Callable[[float], BoxReference]] = {
    "rolling_line": _rolling_line_at,
    "dragging_semicircle": _semicircle_at,
    "drag_then_roll": _drag_then_roll_at,
}


def build_trajectory(config: ScenarioConfig) -> Callable[[float], BoxReference]:
    """Compile the configured trajectory into a sampling function.

    The argument is the action-local time (seconds since the manipulation
    began), not the wall clock of the simulation.
    """
    traj = config.trajectory
    if traj.builtin is not None:
        try:
            return _BUILTIN_TRAJECTORIES[traj.builtin]
        except KeyError:
            raise ValidationError(
                f"unknown builtin trajectory {traj.builtin!r}") from None
    return _segments_trajectory(traj.segments)


# --- CSV log ----------------------------------------------------------------

LOG_COLUMNS = ("t", "q1x", "q1y", "q1z", "q2x", "q2y", "q2z",
               "bx", "by", "bz", "byaw", "bphi", "mode", "T1", "T2",
               "ref_x", "ref_y", "ref_yaw", "ref_phi")


@dataclass(frozen=True)
class LogRecord:
    """One logged simulation step; field order mirrors LOG_COLUMNS."""

    t: float
    q1: tuple[float, float, float]
    q2: tuple[float, float, float]
    box: tuple[float, float, float]
    byaw: float
    bphi: float
    mode: str
    T1: float
    T2: float
    ref: tuple[float, float, float, float]  # x, y, yaw, phi

    def row(self) -> list[str]:
        numbers = [self.t, *self.q1, *self.q2, *self.box, self.byaw,
                   self.bphi]
        out = [format(v, ".9g") for v in numbers]
        out.append(self.mode)
        out += [format(v, ".9g") for v in (self.T1, self.T2, *self.ref)]
        return out


def write_log(path: str | Path, records: list[LogRecord],
              resolved_config: dict) -> None:
    """Write the run log: '#'-prefixed config echo, header row, data rows.

    Numbers use 9 significant digits and UNIX newlines so identical runs
    serialize to identical bytes.
    """
    lines = ["# catenary-sim run log"]
    echo = json.dumps(resolved_config, sort_keys=True, indent=2)
    lines += [f"# {line}" for line in echo.splitlines()]
    lines.append(",".join(LOG_COLUMNS))
    lines += [",".join(record.row()) for record in records]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8",
                          newline="\n")


def read_log(path: str | Path) -> list[LogRecord]:
    """Parse a run log, raising MalformedLog with the offending 1-based
    file line number on any structural defect."""
    records: list[LogRecord] = []
    header_seen = False
    prev_t = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            if not header_seen:
                if tuple(line.split(",")) != LOG_COLUMNS:
                    raise MalformedLog("unrecognized header row", row=lineno)
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != len(LOG_COLUMNS):
                raise MalformedLog(
                    f"expected {len(LOG_COLUMNS)} columns, got {len(parts)}",
                    row=lineno)
            mode = parts[12]
            if mode not in MODE_TOKENS:
                raise MalformedLog(f"unknown mode token {mode!r}", row=lineno)
            try:
                nums = [float(p) for p in parts[:12] + parts[13:]]
            except ValueError as exc:
                raise MalformedLog(str(exc), row=lineno) from None
            t = nums[0]
            if prev_t is not None and not t > prev_t:
                raise MalformedLog("timestamps must increase", row=lineno)
            prev_t = t
            records.append(LogRecord(
                t=t, q1=tuple(nums[1:4]), q2=tuple(nums[4:7]),
                box=tuple(nums[7:10]), byaw=nums[10], bphi=nums[11],
                mode=mode, T1=nums[12], T2=nums[13], ref=tuple(nums[14:18])))
    if not header_seen:
        raise MalformedLog("log has no header row", row=1)
    return records


# --- analysis ---------------------------------------------------------------


def analyze(path: str | Path) -> dict[str, float | int | dict[str, float]]:
    """Tracking-error statistics and per-mode time fractions of a log."""
    records = read_log(path)
    report: dict = {"rows": len(records)}
    fractions = {token: 0.0 for token in MODE_TOKENS}
    if not records:
        report.update(duration=0.0, mu_x=0.0, sigma_x=0.0, mu_y=0.0,
                      sigma_y=0.0, mu_psi=0.0, sigma_psi=0.0,
                      mode_fractions=fractions)
        return report
    ex = np.array([r.box[0] - r.ref[0] for r in records])
    ey = np.array([r.box[1] - r.ref[1] for r in records])
    epsi = np.array([wrap_angle(r.byaw - r.ref[2]) for r in records])
    for token in MODE_TOKENS:
        fractions[token] = sum(r.mode == token for r in records) / len(records)
    report.update(
        duration=records[-1].t - records[0].t,
        mu_x=float(ex.mean()), sigma_x=float(ex.std()),
        mu_y=float(ey.mean()), sigma_y=float(ey.std()),
        mu_psi=float(epsi.mean()), sigma_psi=float(epsi.std()),
        mode_fractions=fractions)
    return report


def render_report(report: dict) -> str:
    """Key-value text rendering of an analysis report."""
    lines = []
    for key in ("rows", "duration", "mu_x", "sigma_x", "mu_y", "sigma_y",
                "mu_psi", "sigma_psi"):
        value = report[key]
        if isinstance(value, float):
            lines.append(f"{key} = {value:.6g}")
        else:
            lines.append(f"{key} = {value}")
    for token, frac in report["mode_fractions"].items():
        lines.append(f"time_fraction_{token} = {frac:.6g}")
    return "\n".join(lines)
