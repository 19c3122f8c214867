import numpy as np
import pytest

from adhesion1d.analysis import (
    bin_grid,
    compare_fields,
    convergence_order,
    default_bin_width,
    empirical_fields,
    histogram,
    matched_gamma,
    matched_time,
    resample,
    sample_density,
)
from adhesion1d.core import DensityField, Grid, ModelSpec
from adhesion1d.nonlocal_ops import NonlocalOperator
from adhesion1d.particles import SdeConfig


def test_histogram_examples():
    h = histogram(np.zeros(10), 0.01)
    assert h.values.max() == pytest.approx(100.0)
    assert h.counts.sum() == 10
    h = histogram(np.array([-1.0, 1.0, 0.3]), 0.1)
    assert h.counts[0] == 1 and h.counts[-1] == 1
    assert h.values.sum() * h.width == pytest.approx(1.0)
    with pytest.raises(ValueError):
        histogram(np.array([]), 0.1)


def test_bin_width_adjusted():
    h = histogram(np.zeros(3), 0.3)
    assert h.requested_width == 0.3
    assert 2.0 / h.width == pytest.approx(round(2.0 / h.width))
    assert default_bin_width(ModelSpec(kind="local-sat"), 3500) == pytest.approx(2 / np.sqrt(3500))
    assert default_bin_width(ModelSpec(kind="aps"), 3500) == 0.01
    assert bin_grid(0.5).M == 4


def test_compare_fields_examples():
    g = Grid(1.0, 50)
    u = DensityField(g, np.full(50, 0.5))
    d = compare_fields(u, u)
    assert d == {"L1": 0.0, "Linf": 0.0, "relative_L1": 0.0}
    d = compare_fields((g, np.zeros(50)), (g, np.full(50, 3.0)))
    assert d["L1"] == pytest.approx(2 * 3.0 * 1.0)
    assert d["Linf"] == 3.0 and d["relative_L1"] == pytest.approx(1.0)
    with pytest.raises(TypeError):
        compare_fields(np.zeros(3), np.zeros(3))
    with pytest.raises(ValueError):
        compare_fields((g, np.zeros(50)), (Grid(2.0, 50), np.zeros(50)))


def test_resample_conserves_integral(rng):
    src, dst = Grid(1.0, 120), Grid(1.0, 50)
    v = rng.random(120)
    out = resample(v, src, dst)
    assert out.sum() * dst.h == pytest.approx(v.sum() * src.h, rel=1e-13)
    assert np.allclose(resample(np.full(120, 2.0), src, dst), 2.0)


def test_convergence_order_example():
    assert convergence_order([0.1, 0.05, 0.025], [4e-3, 1e-3, 2.5e-4]) == pytest.approx(2.0)
    with pytest.warns(RuntimeWarning):
        convergence_order([0.1, 0.05, 0.025], [1e-3, 2e-3, 1e-4])
    with pytest.raises(ValueError):
        convergence_order([0.1, 0.05], [1, 2])


def test_empirical_fields_examples():
    spec = ModelSpec(kind="nonlocal-sat", K=0.6)
    # mirror-symmetric pair: antisymmetric drift about the origin
    f = empirical_fields(np.array([-0.2, 0.2]), spec, 0.01)
    assert np.allclose(f.drift, -f.drift[::-1], atol=1e-12)
    # no neighbours in range: zero drift
    f = empirical_fields(np.array([-0.95, -0.94]), spec, 0.01)
    assert np.all(f.drift[f.grid.centers > 0] == 0)


def test_uniform_particles_saturation():
    spec = ModelSpec(kind="nonlocal-sat", K=0.6)
    x = np.linspace(-1, 1, 200001)
    f = empirical_fields(x, spec, 0.01)
    inner = np.abs(f.grid.centers) < 0.4
    assert np.allclose(f.saturation[inner], 1 - 0.5 / 0.6, atol=1e-3)
    assert np.max(np.abs(f.drift[inner])) < 1e-3


def test_empirical_fields_converge_to_eulerian():
    g = Grid(1.0, 1000)
    u = DensityField.from_raw(g, 1 + 0.6 * np.cos(np.pi * g.centers))
    spec = ModelSpec(kind="nonlocal-sat", K=0.6)
    K, S = NonlocalOperator(g, spec).drift(u.values)
    meds = []
    for N in (1000, 10000, 100000):
        errs = []
        for seed in range(3):
            x = sample_density(u, N, np.random.default_rng(seed))
            f = empirical_fields(x, spec, 0.002)
            errs.append(compare_fields((f.grid, f.drift), (g, K))["L1"] / (np.abs(K).sum() * g.h))
        meds.append(np.median(errs))
    assert meds[0] > meds[1] > meds[2]
    assert meds[2] < 0.05


def test_matched_scaling():
    cfg = SdeConfig(ModelSpec(kind="aps", gamma=40.0), noise="brownian", eps2=0.5)
    assert matched_gamma(cfg) == pytest.approx(80.0)
    assert matched_time(cfg, 2.0) == pytest.approx(1.0)
