import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from adhesion1d.analysis import convergence_order
from adhesion1d.core import DensityField, Grid, ModelSpec, eval_weight
from adhesion1d.nonlocal_ops import (
    NonlocalOperator,
    SaturationField,
    cell_weights,
    directional_kernel,
    drift_closure,
    nonlocal_gradient,
    saturation_field,
    windowed_mass,
)

G = Grid(1.0, 1000)
APS_CW = ModelSpec(kind="aps", w="constant-one")
APS_LIN = ModelSpec(kind="aps", w="linear-decay")


def quad_gradient(f, x, spec, L=1.0):
    """Oracle: int_0^R w(r) [f(x+r) 1_{x+r<L} - f(x-r) 1_{x-r>-L}] dr by adaptive quadrature."""
    w = lambda r: eval_weight(spec.w, r, spec.R)
    right = integrate.quad(lambda r: w(r) * f(x + r), 0, min(spec.R, L - x), epsabs=1e-13, limit=500)[0]
    left = integrate.quad(lambda r: w(r) * f(x - r), 0, min(spec.R, x + L), epsabs=1e-13, limit=500)[0]
    return right - left


@pytest.mark.parametrize("R", [0.5, 0.37, 0.0105, 1.0])
@pytest.mark.parametrize("kind", ["constant-one", "linear-decay"])
def test_cell_weights_integrate_the_weight(kind, R):
    h = 2e-3
    c = cell_weights(h, R, kind)
    total = float(np.sum(c))
    exact = R if kind == "constant-one" else R / 2
    assert total == pytest.approx(exact, rel=1e-12)
    assert c[0] == pytest.approx(h / 2 if kind == "constant-one" else (h / 2) - (h / 2) ** 2 / (2 * R), rel=1e-12)


def test_zero_density_gives_zero_kernels():
    u = np.zeros(G.M)
    op = NonlocalOperator(G, APS_LIN)
    plus, minus = op.directional(u)
    assert not plus.any() and not minus.any()
    assert not op.windowed_mass(u).any()


def test_constant_density_symmetric_kernels():
    u = DensityField(G, np.full(G.M, 0.5))
    plus = directional_kernel(u, "plus", APS_CW)
    minus = directional_kernel(u, "minus", APS_CW)
    inner = np.abs(G.centers) < 0.5
    assert np.array_equal(plus[inner], minus[inner])
    # uniform 0.5 over a window of length R = 0.5
    j = np.argmin(np.abs(G.centers))
    assert plus[j] == pytest.approx(0.25, abs=1e-12)
    assert minus[j] == pytest.approx(0.25, abs=1e-12)


def test_affine_gradient_interior():
    x = G.centers
    inner = np.abs(x) < 0.5
    for spec, expected in ((APS_CW, 0.25), (APS_LIN, 0.5**2 / 3)):
        g = NonlocalOperator(G, spec).gradient(x + 1.0)
        assert np.allclose(g[inner], expected, atol=1e-12)
    # normalised affine density (x+1)/2 gives half of these values
    u = DensityField.from_raw(G, x + 1.0)
    assert np.allclose(nonlocal_gradient(u, APS_CW).values[inner], 0.125, atol=1e-12)


def test_gradient_matches_quadrature_oracle():
    f = lambda y: 1.0 + 0.5 * np.sin(2.0 * y) + 0.3 * y**2
    op = NonlocalOperator(G, APS_LIN)
    g = op.gradient(f(G.centers))
    for j in (0, 3, 250, 499, 777, 999):
        assert g[j] == pytest.approx(quad_gradient(f, G.centers[j], APS_LIN), abs=5e-6)


def test_gradient_mirror_antisymmetry(rng):
    for spec in (APS_CW, APS_LIN):
        u = DensityField.from_raw(G, rng.random(G.M))
        ur = DensityField(G, u.values[::-1], check=False)
        g = nonlocal_gradient(u, spec).values
        gr = nonlocal_gradient(ur, spec).values
        assert np.max(np.abs(gr + g[::-1])) <= 1e-12


def test_gradient_quadrature_order():
    f = lambda y: 0.5 * (1 + np.cos(np.pi * y))
    hs, errs = [], []
    for M in (250, 500, 1000):
        g = Grid(1.0, M)
        x = g.centers
        num = NonlocalOperator(g, APS_LIN).gradient(f(x))
        idx = np.flatnonzero(np.abs(x) < 0.5)[:: max(1, M // 50)]
        ref = np.array([quad_gradient(f, x[j], APS_LIN) for j in idx])
        errs.append(np.max(np.abs(num[idx] - ref)))
        hs.append(g.h)
    assert convergence_order(hs, errs) >= 1.9


def test_windowed_mass_examples():
    u = DensityField(G, np.full(G.M, 0.5))
    spec = ModelSpec(kind="nonlocal-sat", K=0.6)
    U = windowed_mass(u, spec)
    j0 = np.argmin(np.abs(G.centers))
    assert U[j0] == pytest.approx(0.5, abs=1e-12)
    # end cell centre sits h/2 inside the wall: window [L - h/2 - R, L]
    assert U[-1] == pytest.approx(0.5 * (0.5 + G.h / 2), abs=1e-12)
    assert U[-1] == pytest.approx(0.25, abs=G.h)


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 1.0))
def test_windowed_mass_bounded(seed, R):
    g = Grid(1.0, 200)
    R = max(R, g.h)
    u = DensityField.from_raw(g, np.random.default_rng(seed).random(g.M) ** 4)
    U = windowed_mass(u, ModelSpec(kind="nonlocal-sat", R=R))
    assert U.min() >= 0 and U.max() <= 1 + 1e-12


def test_prefix_and_direct_paths_agree(rng):
    u = rng.random(G.M)
    for R in (0.5, 0.3333, 0.0523):
        spec = ModelSpec(kind="nonlocal-sat", w="constant-one", R=R)
        direct = NonlocalOperator(G, spec, method="direct")
        prefix = NonlocalOperator(G, spec, method="prefix")
        assert np.max(np.abs(direct.windowed_mass(u) - prefix.windowed_mass(u))) <= 1e-12
        assert np.max(np.abs(direct.gradient(u) - prefix.gradient(u))) <= 1e-12
    with pytest.raises(ValueError):
        NonlocalOperator(G, APS_LIN, method="prefix").gradient(u)


def test_saturation_examples():
    spec = ModelSpec(kind="nonlocal-sat", K=0.6)
    op = NonlocalOperator(G, spec)
    j0 = np.argmin(np.abs(G.centers))
    for level, expected in ((0.6, 0.0), (0.5, 1 - 0.5 / 0.6), (1.2, -1.0)):
        # a constant level over a window of length 2R = 1 has windowed mass equal to the level
        S = SaturationField.from_values(G, op.saturation(np.full(G.M, level)))
        assert S.values[j0] == pytest.approx(expected, abs=1e-12)
        assert S.positive[j0] == pytest.approx(max(expected, 0.0), abs=1e-12)
        assert S.negative[j0] == pytest.approx(min(expected, 0.0), abs=1e-12)
    local = NonlocalOperator(G, ModelSpec(kind="local-sat"))
    u = np.full(G.M, 0.5)
    u[10] = 1.0
    assert local.saturation(u)[10] == 0.0
    aps = saturation_field(DensityField(G, np.full(G.M, 0.5)), APS_LIN)
    assert np.all(aps.values == 1.0)


def test_saturation_split_exact(rng):
    u = DensityField.from_raw(G, rng.random(G.M) ** 8)
    S = saturation_field(u, ModelSpec(kind="nonlocal-sat", K=0.2))
    assert np.array_equal(S.positive + S.negative, S.values)
    assert np.all(S.positive * S.negative == 0)
    assert np.all(S.positive >= 0) and np.all(S.negative <= 0)


def test_local_sat_warns_above_capacity():
    u = np.full(G.M, 0.5)
    u[5] = 0.9
    with pytest.warns(RuntimeWarning):
        NonlocalOperator(G, ModelSpec(kind="local-sat", K=0.7)).saturation(u)


def test_weighted_saturation_uses_w_hat(rng):
    u = DensityField.from_raw(G, rng.random(G.M))
    flat = saturation_field(u, ModelSpec(kind="nonlocal-sat", K=0.6)).values
    lin = saturation_field(u, ModelSpec(kind="nonlocal-sat", K=0.6, w_hat="linear-decay")).values
    # the tent weight counts less mass, so crowding is weaker
    assert np.all(lin > flat)


def test_drift_closure_aps_is_gradient(rng):
    u = DensityField.from_raw(G, rng.random(G.M))
    assert np.array_equal(drift_closure(u, APS_LIN).values, nonlocal_gradient(u, APS_LIN).values)


@pytest.mark.parametrize("kind", ["aps", "local-sat", "nonlocal-sat"])
def test_drift_closure_zero_for_constant_interior(kind):
    u = DensityField(G, np.full(G.M, 0.5))
    d = drift_closure(u, ModelSpec(kind=kind, K=0.6 if kind == "nonlocal-sat" else 1.0)).values
    assert np.max(np.abs(d[np.abs(G.centers) < 0.5])) <= 1e-12


def test_repulsion_sign_flip_two_bumps():
    x = G.centers
    bumps = lambda y: np.exp(-((y + 0.2) ** 2) / 0.005) + 0.6 * np.exp(-((y - 0.1) ** 2) / 0.005)
    u = DensityField.from_raw(G, bumps(x))
    spec = ModelSpec(kind="nonlocal-sat", K=0.6)
    op = NonlocalOperator(G, spec)
    U = op.windowed_mass(u.values)
    grad = op.gradient(u.values)
    drift = drift_closure(u, spec).values
    idx = np.flatnonzero((U > spec.K) & (grad > 1e-6))
    assert idx.size > 0
    assert np.all(drift[idx] < 0)
    # the oracle agrees on the sign of the gradient at those cells
    for j in idx[:: max(1, idx.size // 5)]:
        assert quad_gradient(bumps, x[j], spec) > 0
