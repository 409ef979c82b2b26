"""Run configuration: YAML document validated with pydantic.

Units in the file are SI except angles, which are degrees. Unknown keys are
rejected. Validation errors carry the dotted field path and, when the
document came from a file, the line number of the offending entry.
"""
from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import linkage as lk
from .dynamics import MassModel, RigidBody, plate_inertia
from .errors import ConfigError
from .simulator import SimConfig
from .unsteady import UnsteadySettings, WagnerConstants
from .wing import Planform

ECHO_NAME = "effective_config.yaml"


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class SimBlock(_Block):
    airspeed: float = Field(1.65, ge=0.0, description="freestream speed, m/s")
    frequency: float = Field(4.5, gt=0.0, description="flap frequency, Hz")
    rho: float = Field(1.225, gt=0.0)
    dt: float = Field(2.5e-4, gt=0.0)
    duration: float = Field(1.0, ge=0.0)
    aero_mode: Literal["wagner", "quasisteady"] = "wagner"
    tethered: bool = True
    pitch_deg: float = 0.0
    pi_kp: float = Field(50.0, ge=0.0)
    pi_ki: float = Field(500.0, ge=0.0)
    zeta_stride: int = Field(10, ge=1)


class GaitBlock(_Block):
    mode: Literal["prescribed", "linkage"] = "prescribed"
    shoulder_amplitude_deg: float = 30.0
    shoulder_offset_deg: float = 0.0
    shoulder_phase_deg: float = 0.0
    elbow_amplitude_deg: float = 30.0
    elbow_offset_deg: float = 30.0
    elbow_phase_deg: float = 90.0


class LinkBlock(_Block):
    base: int
    angle: int = Field(ge=0, le=6)
    # arm joint -> [length m, offset deg]
    arms: Dict[int, Tuple[float, float]]

    @field_validator("arms")
    @classmethod
    def _positive(cls, arms):
        for joint, (length, _) in arms.items():
            if not length > 0:
                raise ValueError(f"arm to joint {joint} has non-positive length {length}")
        return arms


def _default_links():
    ref = lk.default_linkage()
    links = {l.name: {"base": l.base, "angle": l.angle,
                      "arms": {j: (a[0], float(np.degrees(a[1]))) for j, a in l.arms.items()}}
             for l in ref.links}
    return (links, {j: tuple(float(v) for v in p) for j, p in ref.pivots.items()},
            [float(v) for v in np.degrees(ref.reference_angles)])


_LINKS, _PIVOTS, _REF = _default_links()


class LinkageBlock(_Block):
    """Link lengths (m), arm offsets and reference joint angles (deg), ground pivots (m)."""

    pivots: Dict[int, Tuple[float, float]] = Field(default_factory=lambda: dict(_PIVOTS))
    links: Dict[str, LinkBlock] = Field(default_factory=lambda: {k: LinkBlock(**v) for k, v in _LINKS.items()})
    reference_angles_deg: List[float] = Field(default_factory=lambda: list(_REF))
    driver: int = Field(0, ge=0, le=6)
    shoulder_sign: float = -1.0
    shoulder_offset_deg: float = 130.0
    elbow_sign: float = 1.0
    elbow_offset_deg: float = 38.5

    @field_validator("reference_angles_deg")
    @classmethod
    def _seven(cls, v):
        if len(v) != 7:
            raise ValueError("need 7 reference joint angles")
        return v


class MassBlock(_Block):
    total: float = Field(0.0195, gt=0.0, description="kg")
    body_fraction: float = Field(0.8, gt=0.0, lt=1.0)
    proximal_fraction: float = Field(0.06, gt=0.0, lt=1.0)
    distal_fraction: float = Field(0.04, gt=0.0, lt=1.0)
    gravity: float = Field(9.81, ge=0.0)

    @model_validator(mode="after")
    def _sums(self):
        s = self.body_fraction + 2 * (self.proximal_fraction + self.distal_fraction)
        if abs(s - 1.0) > 1e-6:
            raise ValueError(f"mass fractions (body + 2 proximal + 2 distal) sum to {s:.6g}, not 1")
        return self


class PlanformBlock(_Block):
    shoulder_y: float = Field(0.02, ge=0.0)
    proximal_length: float = Field(0.05, gt=0.0)
    proximal_root_chord: float = Field(0.12, gt=0.0)
    proximal_tip_chord: float = Field(0.13, gt=0.0)
    distal_length: float = Field(0.08, gt=0.0)
    distal_root_chord: float = Field(0.13, gt=0.0)
    distal_tip_chord: float = Field(0.05, gt=0.0)
    n_proximal: int = Field(4, ge=2)
    n_distal: int = Field(4, ge=2)
    axis_chord_fraction: float = Field(0.25, ge=0.0, le=1.0)


class UnsteadyBlock(_Block):
    m: int = Field(16, ge=2, le=200)
    psi1: float = 0.165
    psi2: float = 0.335
    eps1: float = Field(0.0455, gt=0.0)
    eps2: float = Field(0.3, gt=0.0)
    a0: float = Field(2.0 * np.pi, gt=0.0)
    u_floor: float = Field(0.05, gt=0.0)


class WakeBlock(_Block):
    stride: int = Field(10, ge=1)
    plane_offset: Optional[float] = Field(None, description="m behind the trailing edge; mean chord if null")
    ny: int = Field(41, ge=3)
    nz: int = Field(31, ge=3)
    core: Optional[float] = Field(None, gt=0.0)
    t_end: Optional[float] = None


class LoadCellBlock(_Block):
    cutoff_hz: Optional[float] = Field(None, gt=0.0)
    filter_order: int = Field(4, ge=1, le=10)
    max_rate_hz: float = Field(7000.0, gt=0.0)


class RunConfig(_Block):
    sim: SimBlock = SimBlock()
    gait: GaitBlock = GaitBlock()
    linkage: LinkageBlock = Field(default_factory=LinkageBlock)
    mass: MassBlock = MassBlock()
    planform: PlanformBlock = PlanformBlock()
    unsteady: UnsteadyBlock = UnsteadyBlock()
    wake: WakeBlock = WakeBlock()
    loadcell: LoadCellBlock = LoadCellBlock()

    # ---- conversion to the numerical objects -------------------------------

    def profile(self):
        g = self.gait
        r = np.deg2rad
        return lk.GaitProfile(self.sim.frequency, r(g.shoulder_amplitude_deg), r(g.shoulder_offset_deg),
                              r(g.shoulder_phase_deg), r(g.elbow_amplitude_deg),
                              r(g.elbow_offset_deg), r(g.elbow_phase_deg))

    def linkage_config(self):
        L = self.linkage
        links = tuple(lk.Link(name, b.base, b.angle,
                              {j: (length, float(np.deg2rad(off))) for j, (length, off) in b.arms.items()})
                      for name, b in L.links.items())
        C, d = lk.gait_map(L.shoulder_sign, np.deg2rad(L.shoulder_offset_deg),
                           L.elbow_sign, np.deg2rad(L.elbow_offset_deg))
        return lk.LinkageConfig(pivots={j: np.array(p) for j, p in L.pivots.items()}, links=links,
                                reference_angles=np.deg2rad(L.reference_angles_deg),
                                driver=L.driver, gait_matrix=C, gait_offset=d)

    def planform_config(self):
        return Planform(**self.planform.model_dump())

    def mass_model(self):
        m, pf = self.mass, self.planform
        mb, mp, md = (m.total * f for f in (m.body_fraction, m.proximal_fraction, m.distal_fraction))
        body = RigidBody(mb, mb / 12.0 * np.diag([0.03 ** 2 + 0.02 ** 2, 0.1 ** 2 + 0.02 ** 2,
                                                   0.1 ** 2 + 0.03 ** 2]))
        cp = 0.5 * (pf.proximal_root_chord + pf.proximal_tip_chord)
        cd = 0.5 * (pf.distal_root_chord + pf.distal_tip_chord)
        prox = RigidBody(mp, plate_inertia(mp, pf.proximal_length, cp),
                         np.array([0.0, pf.proximal_length / 2, 0.0]))
        dist = RigidBody(md, plate_inertia(md, pf.distal_length, cd),
                         np.array([0.0, pf.distal_length / 2, 0.0]))
        return MassModel(body, prox, dist, np.array([0.0, 0.0, -m.gravity]))

    def unsteady_settings(self):
        u = self.unsteady
        return UnsteadySettings(u.m, WagnerConstants(u.psi1, u.psi2, u.eps1, u.eps2, u.a0), u.u_floor)

    def to_sim_config(self, aero_mode=None, **overrides):
        s = self.sim
        kw = dict(rho=s.rho, U=s.airspeed, dt=s.dt, duration=s.duration,
                  aero_mode=aero_mode or s.aero_mode, tethered=s.tethered,
                  gait_mode=self.gait.mode, frequency=s.frequency, profile=self.profile(),
                  linkage=self.linkage_config() if self.gait.mode == "linkage" else None,
                  pi_kp=s.pi_kp, pi_ki=s.pi_ki, pitch=float(np.deg2rad(s.pitch_deg)),
                  mass=self.mass_model(), planform=self.planform_config(),
                  unsteady=self.unsteady_settings(), zeta_stride=s.zeta_stride)
        kw.update(overrides)
        return SimConfig(**kw)


# ---- parsing ---------------------------------------------------------------

def _node_line(root, loc):
    """1-based line of the YAML node at path ``loc``, or of the deepest existing parent."""
    node, line = root, None
    for key in loc:
        if node is None:
            break
        line = node.start_mark.line + 1
        nxt = None
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                if str(k.value) == str(key):
                    line = k.start_mark.line + 1
                    nxt = v
                    break
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            nxt = node.value[key]
        node = nxt
    if node is not None:
        line = node.start_mark.line + 1
    return line


def _raise_validation(err, root, source):
    first = err.errors()[0]
    loc = tuple(first["loc"])
    field = ".".join(str(p) for p in loc)
    line = _node_line(root, loc) if root is not None else None
    where = f" in {source}" if source else ""
    raise ConfigError(f"{first['msg']}{where}", field=field, line=line) from None


def config_from_dict(data, root=None, source=""):
    """Validate a plain mapping into a :class:`RunConfig`."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"top level of {source or 'config'} must be a mapping", field="", line=1)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as err:
        _raise_validation(err, root, source)


def parse_text(text, source="<string>"):
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as err:
        mark = getattr(err, "problem_mark", None)
        line = mark.line + 1 if mark else None
        raise ConfigError(f"invalid YAML in {source}: {err}", field="", line=line) from None
    return config_from_dict(data, root, source)


def parse_config(path):
    """Read and validate a YAML run configuration.

    Raises
    ------
    ConfigError
        On unreadable files, malformed YAML or schema violations; the message
        names the field and line.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"{path}: cannot read config ({err.strerror})", field="", line=None) from None
    return parse_text(text, str(path))


def to_plain(cfg):
    """JSON/YAML-safe nested dict of the effective configuration."""
    return cfg.model_dump(mode="json")


def echo_text(cfg):
    return yaml.safe_dump(to_plain(cfg), sort_keys=True, default_flow_style=False)


def write_echo(cfg, out_dir):
    path = Path(out_dir) / ECHO_NAME
    path.write_text(echo_text(cfg))
    return path


# ---- overrides for sweeps ---------------------------------------------------

def with_override(cfg, dotted, value):
    """Copy of ``cfg`` with one dotted field replaced, re-validated."""
    data = to_plain(cfg)
    node = data
    keys = dotted.split(".")
    for k in keys[:-1]:
        if not isinstance(node, dict) or k not in node:
            raise ConfigError(f"unknown config key '{dotted}'", field=dotted, line=None)
        node = node[k]
    if not isinstance(node, dict) or keys[-1] not in node:
        raise ConfigError(f"unknown config key '{dotted}'", field=dotted, line=None)
    node[keys[-1]] = value
    return config_from_dict(data, source=f"override {dotted}")


def parse_vary(spec):
    """Parse ``key=start:stop:num`` or ``key=v1,v2,...`` into ``(key, values)``."""
    if "=" not in spec:
        raise ConfigError(f"--vary expects key=range, got '{spec}'", field="vary", line=None)
    key, rng = spec.split("=", 1)
    key, rng = key.strip(), rng.strip()
    try:
        if ":" in rng:
            parts = rng.split(":")
            if len(parts) != 3:
                raise ValueError
            start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
            if num < 1:
                raise ValueError
            values = [float(v) for v in np.linspace(start, stop, num)]
        else:
            values = [yaml.safe_load(v) for v in rng.split(",") if v.strip()]
            if not values:
                raise ValueError
    except ValueError:
        raise ConfigError(f"bad range '{rng}' for {key}; use start:stop:num or a comma list",
                          field=key, line=None) from None
    return key, values
