"""Interacting-particle SDE with pairwise adhesion forces and a crowding coefficient.

Each step evaluates all forces against the pre-step positions. Interaction
sums run over the sorted position array, so a particle's drift depends only
on the multiset of positions and not on labels, scheduling or thread count.
Noise comes from one counter-based Philox stream per particle, keyed by
(seed, stream id).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .core import ModelKind, ModelSpec, ParticleState, WeightKind, eval_weight, validate_spec, Grid


@dataclass(frozen=True)
class SdeConfig:
    """Particle run parameters.

    ``noise="scheme"`` adds dt * eps2 * N(0, noise_std) per step;
    ``noise="brownian"`` adds sqrt(2 eps2 dt) * N(0, 1).
    ``a_rule="scaling"`` sets the crowding half-width to 1/sqrt(N).
    """

    spec: ModelSpec
    N: int = 300
    dt: float = 0.01
    n_steps: int = 100
    stride: int = 1
    eps2: float = 0.4
    noise_std: float = 0.1
    noise: str = "scheme"
    boundary: str = "clamp"
    a_rule: str = "fixed"
    seed: int = 0
    half_length: float = 1.0
    init: str = "uniform"
    delta: float | None = None

    def __post_init__(self):
        problems = []
        if self.N < 2:
            problems.append("N must be >= 2")
        if not self.dt > 0:
            problems.append("dt must be positive")
        if self.eps2 < 0:
            problems.append("eps2 must be >= 0")
        if self.n_steps < 0 or self.stride < 1:
            problems.append("n_steps >= 0 and stride >= 1 required")
        if self.noise not in ("scheme", "brownian"):
            problems.append("noise must be 'scheme' or 'brownian'")
        if self.boundary not in ("clamp", "reflect"):
            problems.append("boundary must be 'clamp' or 'reflect'")
        if self.a_rule not in ("fixed", "scaling"):
            problems.append("a_rule must be 'fixed' or 'scaling'")
        if self.init not in ("uniform", "concentrated"):
            problems.append("init must be 'uniform' or 'concentrated'")
        if self.init == "concentrated" and not (self.delta and 0 < self.delta <= self.half_length):
            problems.append("concentrated init needs 0 < delta <= L")
        if problems:
            raise ValueError("; ".join(problems))
        # particle runs have no mesh; the finest admissible one keeps the R >= h check inert
        validate_spec(self.effective_spec, Grid(self.half_length, 1 << 30))

    @property
    def effective_spec(self) -> ModelSpec:
        if self.a_rule == "scaling":
            return replace(self.spec, a=1.0 / math.sqrt(self.N))
        return self.spec

    @property
    def diffusion(self) -> float:
        """Diffusion coefficient D of the limiting Fokker-Planck equation."""
        if self.noise == "brownian":
            return self.eps2
        amp = self.dt * self.eps2 * self.noise_std
        return amp * amp / (2.0 * self.dt)


def _sign(d: float) -> float:
    return math.copysign(1.0, d) if d else 0.0


def pairwise_force(x_i: float, x_j: float, spec: ModelSpec) -> float:
    """gamma * w(|x_i - x_j|) * sign(x_j - x_i): pulls i toward j."""
    d = x_j - x_i
    return spec.gamma * eval_weight(spec.w, abs(d), spec.R) * _sign(d)


def interaction_terms(query, positions, spec: ModelSpec):
    """(force sums, crowding sums) at each query point against ``positions``.

    force[i] = sum_j F(q_i, x_j); crowding[i] = sum_{|x_j - q_i| < a} w_hat(|x_j - q_i|).
    """
    xs = np.sort(np.asarray(positions, dtype=float), kind="stable")
    q = np.ascontiguousarray(query, dtype=float)
    return kernels.pair_sums(q, xs, float(spec.gamma), float(spec.R), spec.w.code, float(spec.a), spec.w_hat.code, spec.lam == 1)


def saturation_from_counts(crowd, N: int, spec: ModelSpec):
    if spec.lam == 0:
        return np.ones_like(crowd)
    return 1.0 - crowd / (2.0 * spec.a * spec.K * N)


def particle_drift(positions, spec: ModelSpec):
    """(drift, saturation) for every particle, in input order."""
    x = np.asarray(positions, dtype=float)
    N = x.size
    order = np.argsort(x, kind="stable")
    xs = np.ascontiguousarray(x[order])
    force, crowd = kernels.pair_sums(xs, xs, float(spec.gamma), float(spec.R), spec.w.code, float(spec.a), spec.w_hat.code, spec.lam == 1)
    sat = saturation_from_counts(crowd, N, spec)
    drift = np.empty(N)
    S = np.empty(N)
    drift[order] = sat * force / N
    S[order] = sat
    return drift, S


def particle_saturation(i: int, state: ParticleState, config: SdeConfig) -> float:
    """Crowding coefficient of particle ``i``; the empirical sum counts i itself."""
    spec = config.effective_spec
    if spec.lam == 0:
        return 1.0
    x = state.positions
    r = np.abs(x - x[i])
    inside = r < spec.a
    total = float(np.sum(eval_weight(spec.w_hat, r[inside], spec.R))) if inside.any() else 0.0
    return 1.0 - total / (2.0 * spec.a * spec.K * state.N)


class NoiseStreams:
    """Standard normals, one independent Philox stream per stream id.

    Draws are buffered ``block`` steps at a time; the value a particle gets at
    a given step depends only on (seed, stream id, step).
    """

    def __init__(self, seed: int, stream_ids, block: int = 256):
        self.seed = int(seed)
        self.stream_ids = np.asarray(stream_ids, dtype=np.int64)
        self.block = block
        self._gens = [
            np.random.Generator(np.random.Philox(np.random.SeedSequence(self.seed, spawn_key=(1, int(sid)))))
            for sid in self.stream_ids
        ]
        self._buf = None
        self._start = 0

    def draw(self, step: int) -> np.ndarray:
        if step < self._start:
            raise ValueError("noise streams only move forward")
        if self._buf is None or step >= self._start + self.block:
            if self._buf is not None:
                skip = step - (self._start + self.block)
            else:
                skip = step
            self._start = step
            # skipping whole steps keeps every stream aligned with its counter
            self._buf = np.empty((len(self._gens), self.block))
            for k, g in enumerate(self._gens):
                if skip:
                    g.standard_normal(skip)
                self._buf[k] = g.standard_normal(self.block)
        return self._buf[:, step - self._start]


def initial_positions(config: SdeConfig) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(config.seed, spawn_key=(0,))))
    half = config.half_length if config.init == "uniform" else config.delta
    return rng.uniform(-half, half, size=config.N)


def _apply_boundary(x, L, mode):
    if mode == "reflect":
        x = np.where(x > L, 2 * L - x, x)
        x = np.where(x < -L, -2 * L - x, x)
    return np.clip(x, -L, L)


class SdeSimulator:
    def __init__(self, config: SdeConfig):
        self.config = config
        self.spec = config.effective_spec

    def initial_state(self, positions=None, stream_ids=None) -> ParticleState:
        cfg = self.config
        x = initial_positions(cfg) if positions is None else positions
        return ParticleState(x, 0.0, 0, cfg.seed, stream_ids, cfg.half_length)

    def increment(self, state: ParticleState, eta) -> np.ndarray:
        cfg = self.config
        drift, _ = particle_drift(state.positions, self.spec)
        if cfg.noise == "scheme":
            noise = cfg.dt * cfg.eps2 * cfg.noise_std * eta
        else:
            noise = math.sqrt(2.0 * cfg.eps2 * cfg.dt) * eta
        return cfg.dt * drift + noise

    def step(self, state: ParticleState, streams: NoiseStreams) -> ParticleState:
        eta = streams.draw(state.step)
        x = state.positions + self.increment(state, eta)
        x = _apply_boundary(x, self.config.half_length, self.config.boundary)
        return ParticleState(x, (state.step + 1) * self.config.dt, state.step + 1, state.seed, state.stream_ids, state.half_length)

    def run(self, state: ParticleState | None = None, snapshot_steps=None) -> SdeRun:
        cfg = self.config
        wanted = None if snapshot_steps is None else {int(k) for k in snapshot_steps}
        state = state or self.initial_state()
        streams = NoiseStreams(cfg.seed, state.stream_ids)
        times = [state.t]
        steps = [state.step]
        snaps = [state.positions.copy()]
        for n in range(1, cfg.n_steps + 1):
            state = self.step(state, streams)
            take = (n % cfg.stride == 0) if wanted is None else (n in wanted)
            if take or n == cfg.n_steps:
                steps.append(n)
                times.append(state.t)
                snaps.append(state.positions.copy())
        return SdeRun(np.array(times), np.array(steps), np.array(snaps), state)


@dataclass
class SdeRun:
    times: np.ndarray
    steps: np.ndarray
    positions: np.ndarray  # (snapshots, N)
    final: ParticleState = field(repr=False)


def step_sde(state: ParticleState, config: SdeConfig, streams: NoiseStreams | None = None) -> ParticleState:
    streams = streams or NoiseStreams(config.seed, state.stream_ids)
    return SdeSimulator(config).step(state, streams)


def run_sde(config: SdeConfig) -> SdeRun:
    return SdeSimulator(config).run()
