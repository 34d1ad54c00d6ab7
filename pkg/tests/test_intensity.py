import math

import numpy as np
import pytest

from persint.errors import (
    CsvFormatError,
    IncompatibleGridsError,
    InvalidInputError,
    InvalidParameterError,
)
from persint.field import GridSpec
from persint.intensity import (
    DEFAULT_WEIGHTS,
    IntensityGrid,
    WeightSpec,
    average_intensity,
    default_intensity_spec,
    intensity_at,
    pair_sum,
    read_intensity,
    smooth_diagram,
    weight_eval,
    weight_spec,
    write_intensity,
)
from persint.persistence import PersistenceDiagram, PersistencePair


def _diag(pairs):
    return PersistenceDiagram(pairs=[PersistencePair(*p) for p in pairs])


def test_weight_eval_examples():
    assert weight_eval(DEFAULT_WEIGHTS, 0, 0.4) == pytest.approx(0.4, abs=0)
    assert weight_eval(DEFAULT_WEIGHTS, 1, 0.0) == 0.0
    five = weight_spec(g0=1.0, g1=5.0)
    assert weight_eval(five, 1, 0.2) == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(InvalidInputError):
        weight_eval(DEFAULT_WEIGHTS, 0, -0.1)


def test_weight_spec_validation():
    with pytest.raises(InvalidParameterError):
        WeightSpec(g=((0, -1.0),))
    with pytest.raises(InvalidParameterError):
        WeightSpec(L=((0, lambda x: x + 1.0),))
    # a legal non-identity lifetime transform
    w = WeightSpec(L=((0, lambda x: x * x),))
    assert weight_eval(w, 0, 2.0) == 4.0
    assert weight_eval(w, 1, 2.0) == 2.0  # dim 1 falls back to identity


def test_empty_diagram_zero_grid():
    spec = GridSpec(0, 1, 0, 1, 8, 8)
    grid = smooth_diagram(_diag([]), 0.1, spec=spec)
    assert np.all(grid.values == 0.0)
    assert grid.mass() == 0.0


def test_single_pair_peak_value():
    # node exactly at the pair: value is lifetime / (2 pi tau^2)
    tau = 0.1
    spec = GridSpec(0.0, 0.4, 0.1, 1.1, 3, 3)  # nodes x: 0,0.2,0.4; y: 0.1,0.6,1.1
    grid = smooth_diagram(_diag([(0, 0.2, 0.6)]), tau, spec=spec)
    expected = 0.4 / (2.0 * math.pi * tau * tau)
    assert grid.values[1, 1] == pytest.approx(expected, rel=1e-12)


def test_mass_conservation():
    rng = np.random.default_rng(4)
    tau = 0.05
    births = rng.uniform(0.2, 0.8, size=12)
    lifetimes = rng.uniform(0.05, 0.4, size=12)
    diag = _diag([(0, b, b + l) for b, l in zip(births, lifetimes)])
    spec = default_intensity_spec([diag], tau, 192, 192, pad_factor=6.0)
    grid = smooth_diagram(diag, tau, spec=spec)
    assert grid.mass() == pytest.approx(float(lifetimes.sum()), rel=1e-3)


def test_linearity_in_diagram_union():
    tau = 0.08
    d1 = _diag([(0, 0.2, 0.5), (1, 0.3, 0.9)])
    d2 = _diag([(0, 0.4, 0.7)])
    union = _diag([(0, 0.2, 0.5), (1, 0.3, 0.9), (0, 0.4, 0.7)])
    spec = GridSpec(-0.3, 1.4, -0.3, 1.4, 32, 32)
    gu = smooth_diagram(union, tau, spec=spec)
    g1 = smooth_diagram(d1, tau, spec=spec)
    g2 = smooth_diagram(d2, tau, spec=spec)
    assert np.allclose(gu.values, g1.values + g2.values, rtol=1e-12, atol=1e-12)


def test_diagonal_suppression():
    tau = 0.05
    spec = GridSpec(0.0, 1.0, 0.0, 2.0, 64, 128)
    tiny = smooth_diagram(_diag([(0, 0.5, 0.5 + 1e-6)]), tau, spec=spec)
    unit = smooth_diagram(_diag([(0, 0.5, 0.5 + 1.0)]), tau, spec=spec)
    assert tiny.mass() < 1e-5 * unit.mass()


def test_average_intensity():
    spec = GridSpec(0, 1, 0, 1, 4, 4)
    c = 1.5
    g0 = IntensityGrid(spec, np.zeros((4, 4)), 0.1)
    g2 = IntensityGrid(spec, np.full((4, 4), 2 * c), 0.1)
    one = average_intensity([g2])
    assert np.array_equal(one.values, g2.values)
    same = average_intensity([g2, g2, g2])
    assert np.array_equal(same.values, g2.values)
    mixed = average_intensity([g0, g2])
    assert np.all(mixed.values == c)


def test_average_intensity_errors():
    spec = GridSpec(0, 1, 0, 1, 4, 4)
    other = GridSpec(0, 1, 0, 1, 5, 5)
    a = IntensityGrid(spec, np.zeros((4, 4)), 0.1)
    b = IntensityGrid(other, np.zeros((5, 5)), 0.1)
    with pytest.raises(IncompatibleGridsError):
        average_intensity([a, b])
    c = IntensityGrid(spec, np.zeros((4, 4)), 0.2)
    with pytest.raises(IncompatibleGridsError):
        average_intensity([a, c])
    d = IntensityGrid(spec, np.zeros((4, 4)), 0.1, weights=weight_spec(g1=5.0))
    with pytest.raises(IncompatibleGridsError):
        average_intensity([a, d])
    with pytest.raises(InvalidInputError):
        average_intensity([])


def test_smooth_rejects_bad_tau():
    with pytest.raises(InvalidParameterError):
        smooth_diagram(_diag([(0, 0.1, 0.3)]), 0.0)


def test_intensity_at_matches_grid_nodes():
    tau = 0.07
    diag = _diag([(0, 0.2, 0.6), (1, 0.1, 0.9)])
    spec = GridSpec(0.0, 1.0, 0.0, 1.0, 6, 6)
    grid = smooth_diagram(diag, tau, spec=spec)
    pts = [(spec.xs()[i], spec.ys()[j]) for i in range(6) for j in range(6)]
    vals = intensity_at(diag, tau, pts)
    assert np.allclose(vals, grid.values.ravel(), rtol=1e-12)


def test_pair_sum():
    diag = _diag([(0, 0.0, 1.0), (1, 0.5, 1.0)])
    total = pair_sum(diag, lambda b, d: b + d)
    assert total == pytest.approx(1.0 * 1.0 + 0.5 * 1.5, rel=1e-15)


def test_intensity_csv_round_trip(tmp_path):
    diag = _diag([(0, 0.2, 0.5), (1, 0.3, 0.9)])
    grid = smooth_diagram(diag, 0.1, w=weight_spec(1.0, 5.0), spec=GridSpec(0, 1, 0, 1, 9, 7))
    path = tmp_path / "intensity.csv"
    write_intensity(grid, path)
    back = read_intensity(path)
    assert back.spec == grid.spec
    assert back.tau == grid.tau
    assert back.weights == grid.weights
    assert np.array_equal(back.values, grid.values)


def test_intensity_csv_errors(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("kind,x_lo,x_hi,y_lo,y_hi,nx,ny\nintensity,0,1,0,1,2,2\nwrong,meta,row\n")
    with pytest.raises(CsvFormatError) as err:
        read_intensity(path)
    assert err.value.line == 3


def test_default_intensity_spec_requires_pairs():
    with pytest.raises(InvalidInputError):
        default_intensity_spec([_diag([])], 0.1)
