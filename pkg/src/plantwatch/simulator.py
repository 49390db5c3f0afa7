"""Reduced-order plant surrogate with setpoint transients and cyber attacks.

The plant is a stable linear stochastic system: manipulated variables (MVs)
track their setpoints through first-order control loops, and measurements
(MEAS) relax toward a setpoint-determined operating point through a stable
state matrix plus an MV coupling. Transient samples step selected setpoints
mid-run; attacks freeze (DoS), replace (Integrity), or perturb (Noise) either
recorded measurements, actuator values, or setpoints. MV and setpoint
attacks feed back into the dynamics because the trajectory is re-simulated
from the same noise draws; measurement attacks only edit what is recorded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    IntervalOutOfRange,
    InvalidInterval,
    UnknownChannel,
    UnknownMode,
    UnknownVariant,
)
from .frames import ChannelMeta, ChannelRole, TimeSeriesFrame, save_schema

MANIFEST_SCHEMA_VERSION = 1
PLAN_SCHEMA_VERSION = 1

N_MODES = 7

MEAS_NAMES: tuple[str, ...] = (
    "a feed rate", "d feed rate", "e feed rate", "total feed rate",
    "recycle flow rate", "reactor feed rate", "reactor pressure",
    "reactor level", "reactor temperature", "purge rate",
    "separator temperature", "separator level", "separator pressure",
    "separator underflow", "stripper level", "stripper pressure",
    "stripper underflow", "stripper temperature", "stripper steam rate",
    "compressor work", "reactor coolant temperature",
    "separator coolant temperature",
    "feed pct a", "feed pct b", "feed pct c", "feed pct d", "feed pct e",
    "feed pct f",
    "purge pct a", "purge pct b", "purge pct c", "purge pct d", "purge pct e",
    "purge pct f", "purge pct g", "purge pct h",
    "product pct d", "product pct e", "product pct f", "product pct g",
    "product pct h",
)

MV_NAMES: tuple[str, ...] = (
    "a feed flow", "d feed flow", "e feed flow", "c feed flow",
    "compressor recycle valve", "purge flow", "separator liquid flow",
    "stripper liquid product flow", "stripper steam flow",
    "reactor cooling water flow", "condenser cooling water flow",
    "agitator speed",
)

INDICATOR_NAMES: tuple[str, ...] = (
    "meas attack indicator", "mv attack indicator", "sp attack indicator",
)

SPECIAL_NAMES: tuple[str, ...] = ("plant state", "production rate", "hourly cost")

N_MEAS = len(MEAS_NAMES)
N_MV = len(MV_NAMES)

#: Setpoint scalings defining the four transient sample families.
TRANSIENT_VARIANTS: dict[str, tuple[tuple[str, float], ...]] = {
    "catalyst_purge": (("purge flow", 0.98),),
    "product_mix": (("d feed flow", 1.10), ("e feed flow", 0.90)),
    "product_rate": (("stripper liquid product flow", 0.85),),
    "reactor_pressure": (("compressor recycle valve", 0.985),),
}

ATTACK_KINDS = ("dos", "integrity", "noise")

# strong couplings wired by name so transient variants and attacks land on
# physically sensible channels; the rest of the gain matrix is random
_DESIGNATED_COUPLINGS: tuple[tuple[str, str, float], ...] = (
    ("a feed rate", "a feed flow", 0.95),
    ("d feed rate", "d feed flow", 0.95),
    ("e feed rate", "e feed flow", 0.95),
    ("total feed rate", "d feed flow", 0.45),
    ("total feed rate", "e feed flow", 0.45),
    ("total feed rate", "a feed flow", 0.35),
    ("recycle flow rate", "compressor recycle valve", 0.9),
    ("reactor feed rate", "d feed flow", 0.5),
    ("reactor feed rate", "c feed flow", 0.5),
    ("reactor pressure", "compressor recycle valve", 0.9),
    ("reactor pressure", "purge flow", -0.5),
    ("reactor temperature", "reactor cooling water flow", -0.8),
    ("reactor temperature", "d feed flow", 0.4),
    ("purge rate", "purge flow", 0.9),
    ("separator temperature", "condenser cooling water flow", -0.7),
    ("separator underflow", "separator liquid flow", 0.9),
    ("stripper level", "stripper liquid product flow", -0.7),
    ("stripper level", "e feed flow", 0.3),
    ("stripper underflow", "stripper liquid product flow", 0.9),
    ("stripper steam rate", "stripper steam flow", 0.95),
    ("compressor work", "compressor recycle valve", 0.8),
    ("reactor coolant temperature", "reactor cooling water flow", -0.6),
    ("separator coolant temperature", "condenser cooling water flow", -0.6),
)


def default_schema() -> tuple[ChannelMeta, ...]:
    """The 59-channel layout: 41 MEAS, 12 MV, 3 indicators, 3 specials."""
    channels = [ChannelMeta(n, ChannelRole.MEAS) for n in MEAS_NAMES]
    channels += [ChannelMeta(n, ChannelRole.MV) for n in MV_NAMES]
    channels.append(ChannelMeta(INDICATOR_NAMES[0], ChannelRole.MEAS_INDICATOR))
    channels.append(ChannelMeta(INDICATOR_NAMES[1], ChannelRole.MV_INDICATOR))
    channels.append(ChannelMeta(INDICATOR_NAMES[2], ChannelRole.SP_INDICATOR))
    channels += [ChannelMeta(n, ChannelRole.SPECIAL) for n in SPECIAL_NAMES]
    return tuple(channels)


@dataclass(frozen=True)
class PlantConfig:
    """Everything that defines the surrogate's dynamics.

    state_matrix has spectral radius below one; input_coupling is chosen as
    (I - A) @ static_gain so a steady MV offset delta shifts the MEAS
    equilibrium by static_gain @ delta.
    """

    sample_rate: int
    mode_setpoints: np.ndarray      # (N_MODES, N_MV)
    state_matrix: np.ndarray        # (N_MEAS, N_MEAS)
    static_gain: np.ndarray         # (N_MEAS, N_MV)
    input_coupling: np.ndarray      # (N_MEAS, N_MV)
    base_point: np.ndarray          # (N_MEAS,)
    meas_noise: np.ndarray          # (N_MEAS,)
    mv_noise: np.ndarray            # (N_MV,)
    control_gains: np.ndarray       # (N_MV,)
    cost_weights: np.ndarray        # (N_MV,)
    seed: int

    def __post_init__(self):
        if int(self.sample_rate) < 1:
            raise ConfigError(f"sample_rate must be >= 1, got {self.sample_rate}")
        if self.mode_setpoints.shape != (N_MODES, N_MV):
            raise ConfigError("mode_setpoints must be (modes, mvs)")
        rho = float(np.max(np.abs(np.linalg.eigvals(self.state_matrix))))
        if rho >= 1.0:
            raise ConfigError(f"state matrix spectral radius {rho:.4f} >= 1")
        if (self.control_gains <= 0).any() or (self.control_gains > 1).any():
            raise ConfigError("control gains must lie in (0, 1]")

    def operating_point(self, mode: int) -> np.ndarray:
        """MEAS equilibrium for a mode's base setpoints."""
        sp = self.mode_setpoints[mode]
        return self.base_point + self.static_gain @ sp

    def mode_index(self, mode: int) -> int:
        if not 0 <= int(mode) < N_MODES:
            raise UnknownMode(f"mode must be in [0, {N_MODES}), got {mode}")
        return int(mode)


def default_config(seed: int = 0, sample_rate: int = 1000) -> PlantConfig:
    """Deterministically build a stable surrogate from one seed."""
    rng = np.random.default_rng((int(seed), 51966))
    base_sp = rng.uniform(20.0, 80.0, N_MV)
    factors = rng.uniform(-0.12, 0.12, (N_MODES, N_MV))
    factors[0] = 0.0
    mode_setpoints = base_sp * (1.0 + factors)

    gain = np.zeros((N_MEAS, N_MV))
    meas_idx = {n: i for i, n in enumerate(MEAS_NAMES)}
    mv_idx = {n: j for j, n in enumerate(MV_NAMES)}
    for meas, mv, w in _DESIGNATED_COUPLINGS:
        gain[meas_idx[meas], mv_idx[mv]] = w
    for i in range(N_MEAS):
        for j in rng.choice(N_MV, size=2, replace=False):
            if gain[i, j] == 0.0:
                gain[i, j] = rng.uniform(0.2, 0.6) * rng.choice((-1.0, 1.0))

    m = 0.6 * np.eye(N_MEAS) + rng.normal(0.0, 0.06, (N_MEAS, N_MEAS))
    rho = float(np.max(np.abs(np.linalg.eigvals(m))))
    target_rho = 0.88
    if rho > target_rho:
        m *= target_rho / rho
    coupling = (np.eye(N_MEAS) - m) @ gain

    return PlantConfig(
        sample_rate=int(sample_rate),
        mode_setpoints=mode_setpoints,
        state_matrix=m,
        static_gain=gain,
        input_coupling=coupling,
        base_point=rng.uniform(10.0, 50.0, N_MEAS),
        meas_noise=rng.uniform(0.2, 0.6, N_MEAS),
        mv_noise=rng.uniform(0.05, 0.2, N_MV),
        control_gains=rng.uniform(0.08, 0.2, N_MV),
        cost_weights=rng.uniform(0.2, 1.5, N_MV),
        seed=int(seed),
    )


# ---------------------------------------------------------------------------
# attack and sample specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AttackSpec:
    """One attack: kind, victim channels, interval in hours, payload.

    payload is the replacement value for Integrity and the added-noise
    standard deviation for Noise; DoS takes none. With on_setpoint the
    targets must be MVs and the manipulation hits their control loops'
    setpoint trajectories instead of the actuator values.
    """

    kind: str
    targets: tuple[str, ...]
    start_h: float
    end_h: float
    payload: float | None = None
    on_setpoint: bool = False

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.kind not in ATTACK_KINDS:
            raise ConfigError(f"attack kind must be one of {ATTACK_KINDS}, got {self.kind!r}")
        if not self.targets:
            raise ConfigError("attack needs at least one target channel")
        if len(set(self.targets)) != len(self.targets):
            raise ConfigError(f"duplicate attack targets in {self.targets}")
        if not (0.0 <= self.start_h < self.end_h):
            raise InvalidInterval(f"bad attack interval [{self.start_h}, {self.end_h})h")
        if self.kind == "integrity" and self.payload is None:
            raise ConfigError("integrity attack needs a payload value")
        if self.kind == "noise" and (self.payload is None or self.payload <= 0):
            raise ConfigError("noise attack needs a positive amplitude payload")
        for name in self.targets:
            if name not in MEAS_NAMES and name not in MV_NAMES:
                raise UnknownChannel(f"attack target {name!r} is not a MEAS or MV channel")
            if self.on_setpoint and name not in MV_NAMES:
                raise ConfigError(
                    f"setpoint attacks target MV control loops, got {name!r}"
                )

    def step_interval(self, sample_rate: int, n_points: int) -> tuple[int, int]:
        s = int(round(self.start_h * sample_rate))
        e = int(round(self.end_h * sample_rate))
        if not (0 <= s < e <= n_points):
            raise IntervalOutOfRange(
                f"attack [{self.start_h}, {self.end_h})h maps to steps [{s}, {e}) "
                f"outside a sample of {n_points} points"
            )
        return s, e

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "targets": list(self.targets),
            "start_h": self.start_h,
            "end_h": self.end_h,
            "payload": self.payload,
            "on_setpoint": self.on_setpoint,
        }


@dataclass(frozen=True)
class SampleLabel:
    """Ground-truth indicator vectors, 1.0 exactly on attack intervals."""

    meas: np.ndarray
    mv: np.ndarray
    sp: np.ndarray


@dataclass(frozen=True)
class SimSpec:
    """Provenance carried on simulated frames so attacks can re-simulate."""

    config: PlantConfig
    mode: int
    duration_h: float
    seed: int
    sp_steps: tuple = ()
    attacks: tuple[AttackSpec, ...] = ()


# ---------------------------------------------------------------------------
# core simulation
# ---------------------------------------------------------------------------

def _attack_noise_arrays(
    attacks: Sequence[AttackSpec], seed: int, sample_rate: int, n_points: int
) -> dict[int, np.ndarray]:
    """Pre-draw Gaussian payload noise from per-attack child generators.

    Child streams are independent of the plant's own noise so adding an
    attack never shifts the underlying trajectory draws.
    """
    out = {}
    for i, spec in enumerate(attacks):
        if spec.kind != "noise":
            continue
        s, e = spec.step_interval(sample_rate, n_points)
        rng = np.random.default_rng((int(seed), 7919, i))
        out[i] = rng.standard_normal((e - s, len(spec.targets))) * float(spec.payload)
    return out


def simulate(
    config: PlantConfig,
    mode: int,
    duration_h: float,
    seed: int,
    sp_steps: Sequence[tuple[int, tuple[tuple[str, float], ...]]] = (),
    attacks: Sequence[AttackSpec] = (),
) -> tuple[TimeSeriesFrame, SampleLabel]:
    """Simulate one sample and return the 59-channel frame plus its labels.

    Args:
        sp_steps: (step_index, ((mv_name, factor), ...)) setpoint scalings
            applied from step_index onward.
        attacks: applied in order; MEAS targets are recorded-value edits,
            MV/setpoint targets feed back into the dynamics.

    The trajectory is deterministic given (config, mode, duration, seed);
    all plant noise is drawn up front so a setpoint change or attack at time
    t leaves the sample bit-identical before t.
    """
    mode = config.mode_index(mode)
    if duration_h <= 0:
        raise ConfigError(f"duration must be positive, got {duration_h}")
    seed = int(seed)
    rate = config.sample_rate
    T = int(round(duration_h * rate))
    if T < 1:
        raise ConfigError(f"duration {duration_h}h yields no samples at {rate}/h")
    attacks = tuple(attacks)
    for spec in attacks:
        spec.step_interval(rate, T)  # validates the interval fits

    rng = np.random.default_rng(seed)
    noise_x = rng.standard_normal((T, N_MEAS)) * config.meas_noise
    noise_u = rng.standard_normal((T, N_MV)) * config.mv_noise
    attack_noise = _attack_noise_arrays(attacks, seed, rate, T)

    mv_idx = {n: j for j, n in enumerate(MV_NAMES)}
    meas_idx = {n: i for i, n in enumerate(MEAS_NAMES)}

    sp = np.tile(config.mode_setpoints[mode], (T, 1))
    for step_index, changes in sp_steps:
        if not 0 <= int(step_index) < T:
            raise IntervalOutOfRange(f"setpoint step index {step_index} outside [0, {T})")
        for name, factor in changes:
            if name not in mv_idx:
                raise UnknownChannel(f"setpoint step names unknown MV {name!r}")
            sp[int(step_index):, mv_idx[name]] *= float(factor)

    # setpoint-layer attacks reshape the setpoint trajectory itself
    for i, spec in enumerate(attacks):
        if not spec.on_setpoint:
            continue
        s, e = spec.step_interval(rate, T)
        for k, name in enumerate(spec.targets):
            j = mv_idx[name]
            if spec.kind == "dos":
                sp[s:e, j] = sp[s, j]
            elif spec.kind == "integrity":
                sp[s:e, j] = float(spec.payload)
            else:
                sp[s:e, j] = sp[s:e, j] + attack_noise[i][:, k]

    # actuator-layer attacks are applied inside the loop so they feed back
    mv_attacks = []
    for i, spec in enumerate(attacks):
        if spec.on_setpoint:
            continue
        cols = [(k, mv_idx[n]) for k, n in enumerate(spec.targets) if n in mv_idx]
        if cols:
            s, e = spec.step_interval(rate, T)
            mv_attacks.append((i, spec, s, e, cols, {}))

    equilibrium = config.base_point + sp @ config.static_gain.T
    # the run starts settled at the base mode's operating point, so setpoint
    # steps (and attacks) at index 0 still produce a visible relaxation
    base_sp = config.mode_setpoints[mode]
    base_eq = config.base_point + config.static_gain @ base_sp
    x = np.empty((T, N_MEAS))
    u = np.empty((T, N_MV))
    A = config.state_matrix
    B = config.input_coupling
    g = config.control_gains
    for t in range(T):
        if t == 0:
            u_nat = base_sp + noise_u[0]
        else:
            u_nat = u[t - 1] + g * (sp[t] - u[t - 1]) + noise_u[t]
        u_t = u_nat
        for i, spec, s, e, cols, frozen in mv_attacks:
            if not s <= t < e:
                continue
            for k, j in cols:
                if spec.kind == "dos":
                    if t == s:
                        frozen[j] = u_nat[j]
                    u_t[j] = frozen[j]
                elif spec.kind == "integrity":
                    u_t[j] = float(spec.payload)
                else:
                    u_t[j] = u_nat[j] + attack_noise[i][t - s, k]
        u[t] = u_t
        if t == 0:
            x[0] = base_eq + B @ (u[0] - base_sp) + noise_x[0]
        else:
            x[t] = equilibrium[t] + A @ (x[t - 1] - equilibrium[t]) \
                + B @ (u[t] - sp[t]) + noise_x[t]

    # measurement-layer attacks only edit what is recorded
    for i, spec in enumerate(attacks):
        if spec.on_setpoint:
            continue
        s, e = spec.step_interval(rate, T)
        for k, name in enumerate(spec.targets):
            if name not in meas_idx:
                continue
            c = meas_idx[name]
            if spec.kind == "dos":
                x[s:e, c] = x[s, c]
            elif spec.kind == "integrity":
                x[s:e, c] = float(spec.payload)
            else:
                x[s:e, c] = x[s:e, c] + attack_noise[i][:, k]

    label = _build_label(attacks, rate, T)
    specials = np.empty((T, 3))
    specials[:, 0] = float(mode)
    specials[:, 1] = 0.8 * x[:, meas_idx["stripper underflow"]] \
        + 0.2 * x[:, meas_idx["separator underflow"]]
    specials[:, 2] = u @ config.cost_weights
    data = np.hstack(
        [x, u, label.meas[:, None], label.mv[:, None], label.sp[:, None], specials]
    )
    prov = SimSpec(
        config=config, mode=mode, duration_h=float(duration_h), seed=seed,
        sp_steps=tuple(sp_steps), attacks=attacks,
    )
    frame = TimeSeriesFrame(default_schema(), data, rate, provenance=prov)
    return frame, label


def _build_label(attacks: Sequence[AttackSpec], rate: int, T: int) -> SampleLabel:
    meas = np.zeros(T)
    mv = np.zeros(T)
    sp = np.zeros(T)
    for spec in attacks:
        s, e = spec.step_interval(rate, T)
        if spec.on_setpoint:
            sp[s:e] = 1.0
            continue
        for name in spec.targets:
            if name in MV_NAMES:
                mv[s:e] = 1.0
            else:
                meas[s:e] = 1.0
    return SampleLabel(meas=meas, mv=mv, sp=sp)


def simulate_normal(
    config: PlantConfig, mode: int, duration_h: float, seed: int
) -> TimeSeriesFrame:
    """Stationary operation around one mode's operating point."""
    frame, _ = simulate(config, mode, duration_h, seed)
    return frame


def simulate_transient(
    config: PlantConfig,
    mode: int,
    variant: str,
    duration_h: float,
    seed: int,
    step_hour: float = 0.5,
) -> TimeSeriesFrame:
    """A mode start followed by one of the four setpoint-step variants."""
    if variant not in TRANSIENT_VARIANTS:
        raise UnknownVariant(
            f"variant must be one of {sorted(TRANSIENT_VARIANTS)}, got {variant!r}"
        )
    if not 0.0 <= step_hour < duration_h:
        raise IntervalOutOfRange(f"step hour {step_hour} outside [0, {duration_h})")
    step_index = int(round(step_hour * config.sample_rate))
    frame, _ = simulate(
        config, mode, duration_h, seed,
        sp_steps=((step_index, TRANSIENT_VARIANTS[variant]),),
    )
    return frame


def inject_attack(
    frame: TimeSeriesFrame, spec: AttackSpec
) -> tuple[TimeSeriesFrame, SampleLabel]:
    """Apply one more attack to a simulated frame.

    Frames produced by this module carry their simulation spec, so the whole
    trajectory is re-simulated with the extra attack appended: the pre-attack
    prefix is bit-identical and MV/setpoint manipulations feed back into the
    dynamics. Frames without provenance only support measurement attacks,
    which are recorded-value edits.
    """
    prov = frame.provenance
    if isinstance(prov, SimSpec):
        return simulate(
            prov.config, prov.mode, prov.duration_h, prov.seed,
            sp_steps=prov.sp_steps, attacks=prov.attacks + (spec,),
        )
    if spec.on_setpoint or any(n in MV_NAMES for n in spec.targets):
        raise DataError(
            "MV and setpoint attacks need a simulated frame (with provenance) "
            "so dynamics can be re-simulated"
        )
    T = frame.n_points
    rate = frame.sample_rate
    s, e = spec.step_interval(rate, T)
    data = np.array(frame.data, copy=True)
    noise = _attack_noise_arrays([spec], 0, rate, T).get(0)
    for k, name in enumerate(spec.targets):
        c = frame.index_of(name)
        if spec.kind == "dos":
            data[s:e, c] = data[s, c]
        elif spec.kind == "integrity":
            data[s:e, c] = float(spec.payload)
        else:
            data[s:e, c] = data[s:e, c] + noise[:, k]
    label = _build_label([spec], rate, T)
    for ind_name, vec in zip(INDICATOR_NAMES, (label.meas, label.mv, label.sp)):
        try:
            c = frame.index_of(ind_name)
        except UnknownChannel:
            continue
        data[:, c] = np.maximum(data[:, c], vec)
    return TimeSeriesFrame(frame.channels, data, rate), label


def estimate_channel_spread(
    config: PlantConfig, mode: int, calibration_seed: int, n_points: int = 2000
) -> dict[str, float]:
    """Empirical per-channel standard deviation in stationary operation."""
    hours = n_points / config.sample_rate
    frame = simulate_normal(config, mode, hours, calibration_seed)
    spread = {}
    for name in (*MEAS_NAMES, *MV_NAMES):
        spread[name] = float(np.std(frame.column(name)))
    return spread


def estimate_pooled_spread(
    config: PlantConfig, base_seed: int, n_points: int = 2000
) -> dict[str, float]:
    """Per-channel standard deviation pooled over every mode's operation.

    This is the variability a cross-mode normalizer sees (operating-point
    spread between modes plus within-mode noise), so payloads expressed in
    these units stay meaningful after whole-corpus standardization.
    """
    hours = n_points / config.sample_rate
    frames = [
        simulate_normal(config, mode, hours, _calibration_seed(base_seed, mode))
        for mode in range(N_MODES)
    ]
    spread = {}
    for name in (*MEAS_NAMES, *MV_NAMES):
        pooled = np.concatenate([f.column(name) for f in frames])
        spread[name] = float(np.std(pooled))
    return spread


def _calibration_seed(base_seed: int, mode: int) -> int:
    return (int(base_seed) * 1_000_003 + 999_983 + mode) % (2**63)


# ---------------------------------------------------------------------------
# generation plans and corpus layout
# ---------------------------------------------------------------------------

SERIES_INTEGRITY_MEAS = "integrity_meas"
SERIES_DOS_MULTI = "dos_multi"
SERIES_DOS_MV = "dos_mv"
SERIES_NOISE_MIX = "noise_mix"


def default_plan(seed: int = 7, sample_rate: int = 100) -> dict:
    """Desk-scale corpus plan exercising every mode, variant, and attack kind.

    Training holds long stationary samples for each of the 7 modes plus every
    (mode, transient variant) pair. The test side carries four attack series
    (integrity on a measurement; DoS on a product-line MV plus two coupled
    level measurements during transients; DoS on the d-feed MV in steady
    state, deliberately near-invisible; noise on a 4-channel mix), plus
    attack-free samples for false-positive measurement. Sigma-relative
    magnitudes are in pooled cross-mode spread units.
    """
    variants = sorted(TRANSIENT_VARIANTS)
    train: list[dict] = [
        {"mode": m, "kind": "normal", "hours": 12.0} for m in range(N_MODES)
    ]
    train += [
        {"mode": m, "kind": "transient", "variant": v, "hours": 2.0, "step_h": 0.5}
        for m in range(N_MODES)
        for v in variants
    ]

    def integrity(mode, kind, variant=None):
        entry = {
            "mode": mode, "kind": kind, "hours": 2.0,
            "series": SERIES_INTEGRITY_MEAS,
            "attacks": [{
                "kind": "integrity", "targets": ["reactor temperature"],
                "start_h": 0.8, "end_h": 1.0, "payload_sigma": 6.0,
            }],
        }
        if variant:
            entry["variant"] = variant
            entry["step_h"] = 0.4
        return entry

    def dos_multi(mode, variant):
        # Freeze lands shortly after the set-point step, while the product
        # line is still relaxing: the frozen channels stall mid-ramp and
        # decouple from the rest of the plant's transition.
        return {
            "mode": mode, "kind": "transient", "variant": variant, "hours": 2.0,
            "step_h": 0.4, "series": SERIES_DOS_MULTI,
            "attacks": [{
                "kind": "dos",
                "targets": [
                    "stripper liquid product flow", "stripper level",
                    "stripper underflow",
                ],
                "start_h": 0.45, "end_h": 1.25,
            }],
        }

    def dos_mv(mode):
        return {
            "mode": mode, "kind": "normal", "hours": 2.0, "series": SERIES_DOS_MV,
            "attacks": [{
                "kind": "dos", "targets": ["d feed flow"],
                "start_h": 0.5, "end_h": 1.5,
            }],
        }

    def noise_mix(mode, kind, variant=None):
        entry = {
            "mode": mode, "kind": kind, "hours": 2.0, "series": SERIES_NOISE_MIX,
            "attacks": [{
                "kind": "noise",
                "targets": [
                    "c feed flow", "purge flow", "stripper underflow",
                    "stripper steam flow",
                ],
                "start_h": 0.7, "end_h": 1.5, "amplitude_sigma": 2.5,
            }],
        }
        if variant:
            entry["variant"] = variant
            entry["step_h"] = 0.4
        return entry

    test = [
        integrity(0, "normal"),
        integrity(1, "normal"),
        integrity(2, "normal"),
        integrity(5, "transient", "reactor_pressure"),
        dos_multi(5, "product_rate"),
        dos_multi(6, "product_rate"),
        dos_multi(5, "product_rate"),
        dos_mv(0),
        dos_mv(2),
        dos_mv(6),
        noise_mix(1, "normal"),
        noise_mix(6, "normal"),
        noise_mix(2, "transient", "reactor_pressure"),
        noise_mix(4, "transient", "product_mix"),
        {"mode": 5, "kind": "transient", "variant": "catalyst_purge",
         "hours": 2.0, "step_h": 0.4},
        {"mode": 3, "kind": "transient", "variant": "reactor_pressure",
         "hours": 2.0, "step_h": 0.4},
        {"mode": 1, "kind": "normal", "hours": 2.0},
        {"mode": 4, "kind": "normal", "hours": 2.0},
    ]
    return {
        "schema_version": PLAN_SCHEMA_VERSION,
        "seed": int(seed),
        "sample_rate": int(sample_rate),
        "train": train,
        "test": test,
    }


def _compile_attacks(
    raw_attacks: Sequence[dict],
    config: PlantConfig,
    mode: int,
    spread: dict[str, float],
) -> list[AttackSpec]:
    """Resolve sigma-relative payloads into absolute AttackSpecs.

    ``spread`` maps channel name to the sigma unit; corpus generation passes
    the pooled cross-mode spread so payloads survive whole-corpus
    standardization regardless of how far apart the mode operating points sit.
    """
    op_meas = config.operating_point(mode)
    op = {name: float(op_meas[i]) for i, name in enumerate(MEAS_NAMES)}
    op.update(
        {name: float(config.mode_setpoints[mode][j]) for j, name in enumerate(MV_NAMES)}
    )
    specs: list[AttackSpec] = []
    for entry in raw_attacks:
        try:
            kind = entry["kind"]
            targets = list(entry["targets"])
            start_h = float(entry["start_h"])
            end_h = float(entry["end_h"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad attack entry {entry!r}: {exc}") from exc
        on_setpoint = bool(entry.get("on_setpoint", False))
        common = dict(start_h=start_h, end_h=end_h, on_setpoint=on_setpoint)
        if kind == "dos":
            specs.append(AttackSpec("dos", tuple(targets), **common))
        elif kind == "integrity":
            if "payload" in entry:
                specs.append(
                    AttackSpec("integrity", tuple(targets),
                               payload=float(entry["payload"]), **common)
                )
            elif "payload_sigma" in entry:
                for name in targets:
                    payload = op[name] + float(entry["payload_sigma"]) * spread[name]
                    specs.append(
                        AttackSpec("integrity", (name,), payload=payload, **common)
                    )
            else:
                raise ConfigError(f"integrity attack needs payload or payload_sigma: {entry!r}")
        elif kind == "noise":
            if "payload" in entry:
                specs.append(
                    AttackSpec("noise", tuple(targets),
                               payload=float(entry["payload"]), **common)
                )
            elif "amplitude_sigma" in entry:
                for name in targets:
                    amp = float(entry["amplitude_sigma"]) * spread[name]
                    specs.append(AttackSpec("noise", (name,), payload=amp, **common))
            else:
                raise ConfigError(f"noise attack needs payload or amplitude_sigma: {entry!r}")
        else:
            raise ConfigError(f"unknown attack kind {kind!r}")
    return specs


def _sample_stem(index: int, entry: dict) -> str:
    parts = [f"{index:02d}", f"mode{entry['mode']}", entry["kind"]]
    if entry.get("variant"):
        parts.append(entry["variant"])
    if entry.get("series"):
        parts.append(entry["series"])
    return "_".join(parts)


def generate_corpus(plan: dict, out_dir: str | Path) -> dict:
    """Simulate every sample in a plan and write a corpus directory.

    Layout: schema.json, manifest.json, train/*.csv, test/*.csv. The
    manifest records, per sample, the file, mode, kind, seed, point count,
    and resolved attack intervals in hours. Everything is deterministic
    given the plan, so re-running produces byte-identical files.
    """
    _validate_plan(plan)
    out_dir = Path(out_dir)
    seed = int(plan["seed"])
    rate = int(plan["sample_rate"])
    config = default_config(seed=seed, sample_rate=rate)
    (out_dir / "train").mkdir(parents=True, exist_ok=True)
    (out_dir / "test").mkdir(parents=True, exist_ok=True)
    save_schema(default_schema(), out_dir / "schema.json")

    entries = [("train", e) for e in plan["train"]] + [("test", e) for e in plan["test"]]
    seed_rng = np.random.default_rng((seed, 104729))
    sample_seeds = seed_rng.integers(0, 2**63 - 1, size=len(entries))
    pooled_spread: dict[str, float] | None = None
    manifest_samples = []
    for index, (split, entry) in enumerate(entries):
        mode = config.mode_index(entry["mode"])
        hours = float(entry["hours"])
        kind = entry["kind"]
        if kind not in ("normal", "transient"):
            raise ConfigError(f"sample kind must be normal or transient, got {kind!r}")
        sp_steps: tuple = ()
        if kind == "transient":
            variant = entry.get("variant")
            if variant not in TRANSIENT_VARIANTS:
                raise UnknownVariant(f"sample {index}: unknown variant {variant!r}")
            step_h = float(entry.get("step_h", 0.5))
            if not 0.0 <= step_h < hours:
                raise IntervalOutOfRange(f"sample {index}: step_h {step_h} outside run")
            sp_steps = (
                (int(round(step_h * rate)), TRANSIENT_VARIANTS[variant]),
            )
        raw_attacks = entry.get("attacks", [])
        if raw_attacks:
            if pooled_spread is None:
                pooled_spread = estimate_pooled_spread(config, seed)
            attacks = _compile_attacks(raw_attacks, config, mode, pooled_spread)
        else:
            attacks = []
        sample_seed = int(sample_seeds[index])
        frame, _ = simulate(config, mode, hours, sample_seed, sp_steps, attacks)
        stem = _sample_stem(index, entry)
        rel_path = f"{split}/{stem}.csv"
        from .frames import write_frame_csv

        write_frame_csv(frame, out_dir / rel_path)
        record = {
            "file": rel_path,
            "split": split,
            "mode": mode,
            "kind": kind,
            "seed": sample_seed,
            "points": frame.n_points,
            "hours": hours,
            "attacks": [spec.to_json_dict() for spec in attacks],
        }
        if entry.get("variant"):
            record["variant"] = entry["variant"]
            record["step_h"] = float(entry.get("step_h", 0.5))
        if entry.get("series"):
            record["series"] = entry["series"]
        manifest_samples.append(record)

    manifest = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "seed": seed,
        "sample_rate": rate,
        "schema_file": "schema.json",
        "samples": manifest_samples,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def _validate_plan(plan: dict) -> None:
    if not isinstance(plan, dict):
        raise ConfigError("plan must be a JSON object")
    for key in ("seed", "sample_rate", "train", "test"):
        if key not in plan:
            raise ConfigError(f"plan is missing required key {key!r}")
    if int(plan["sample_rate"]) < 1:
        raise ConfigError(f"plan sample_rate must be >= 1, got {plan['sample_rate']}")
    if not isinstance(plan["train"], list) or not plan["train"]:
        raise ConfigError("plan.train must be a non-empty list")
    if not isinstance(plan["test"], list):
        raise ConfigError("plan.test must be a list")
