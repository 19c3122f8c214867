"""Named experiments covering each model regime.

Common parameters: L = 1, R = 0.5, gamma = 1000, w linear-decay unless the
name says ``cw`` (w constant), PDE mesh h = 2e-3 with dt = 1e-4, particles
with eps2 = 0.4 and dt = 0.01 (N = 300), seed 0.

Final times are a choice made here:
PDE snapshots at t = 0.25 and t = 1 (10^4 steps); particle snapshots at
t = 2.5 and t = 10 (10^3 steps). The local-saturation particle runs use
N = 3500 (2500 for K = 0.4), a = 1/sqrt(N), bins 2/sqrt(N), dt = 0.001 and
snapshots at t = 0.5 and t = 2 (2000 steps).

``aps-cw`` is the attraction-only model with the constant weight, the
setting in which peaks sit about 2R apart.
"""

from __future__ import annotations

from dataclasses import replace

from .config import ExperimentConfig, PdeSection, SdeSection, validate_config
from .core import ModelSpec
from .pde import InitialCondition

_PDE = PdeSection(t_final=1.0, snapshots=(0.25, 1.0))
_SDE = SdeSection(N=300, dt=0.01, t_final=10.0, snapshots=(2.5, 10.0))
_SDE_LOCAL = SdeSection(N=3500, dt=0.001, t_final=2.0, snapshots=(0.5, 2.0), a_rule="scaling", trajectory_stride=20)

_UNIFORM = InitialCondition("uniform-perturbed")
_CONCENTRATED = InitialCondition("concentrated", delta=0.3)


def _exp(name, spec, initial=_UNIFORM, sde=_SDE):
    return ExperimentConfig(spec=spec, name=name, perspective="both", seed=0, initial=initial, pde=_PDE, sde=sde)


def _nl(K, **kw):
    return ModelSpec(kind="nonlocal-sat", K=K, **kw)


def _local(K):
    return ModelSpec(kind="local-sat", K=K)


PRESETS: dict[str, ExperimentConfig] = {
    "fig-aps": _exp("fig-aps", ModelSpec(kind="aps")),
    "aps-cw": _exp("aps-cw", ModelSpec(kind="aps", w="constant-one")),
    "fig-localsat-k1": _exp("fig-localsat-k1", _local(1.0), sde=_SDE_LOCAL),
    "fig-localsat-k07": _exp("fig-localsat-k07", _local(0.7), sde=_SDE_LOCAL),
    "fig-localsat-k04": _exp("fig-localsat-k04", _local(0.4), sde=replace(_SDE_LOCAL, N=2500)),
    "fig-nlsat-k1": _exp("fig-nlsat-k1", _nl(1.0)),
    "fig-nlsat-k1-cw": _exp("fig-nlsat-k1-cw", _nl(1.0, w="constant-one")),
    "fig-nlsat-k06": _exp("fig-nlsat-k06", _nl(0.6)),
    "fig-nlsat-k06-linear-what": _exp("fig-nlsat-k06-linear-what", _nl(0.6, w_hat="linear-decay")),
    "fig-nlsat-k06-concentrated": _exp("fig-nlsat-k06-concentrated", _nl(0.6), initial=_CONCENTRATED),
    "fig-nlsat-k04": _exp("fig-nlsat-k04", _nl(0.4)),
    "fig-nlsat-k04-cw": _exp("fig-nlsat-k04-cw", _nl(0.4, w="constant-one")),
    "fig-nlsat-k02": _exp("fig-nlsat-k02", _nl(0.2)),
    "fig-nlsat-k02-concentrated": _exp("fig-nlsat-k02-concentrated", _nl(0.2), initial=_CONCENTRATED),
}

for _cfg in PRESETS.values():
    validate_config(_cfg)


def get_preset(name: str) -> ExperimentConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None
