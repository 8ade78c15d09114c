import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from swlab.disorder import (
    CouplingField,
    DisorderSpec,
    GadgetParams,
    band_intervals,
    build_gadget,
    gadget_geometry,
    sample_couplings,
    scan_for_gadget,
    verify_gadget,
)
from swlab.errors import ParameterError, SwlabError
from swlab.lattice import LatticeBox


def _box(l):
    return LatticeBox(2, 4 * l + 2)


def _params(l, **kw):
    return GadgetParams(l, 0.25, 0.4995, (2 * l + 1, 2 * l + 1), **kw)


def test_sampling_is_seeded_and_in_range():
    box = LatticeBox(2, 5)
    a = sample_couplings(box, DisorderSpec("uniform", seed=3))
    b = sample_couplings(box, DisorderSpec("uniform", seed=3))
    assert a == b
    assert np.all(np.abs(a.couplings) <= 1)
    c = sample_couplings(box, DisorderSpec("constant", value=-0.5))
    assert np.all(c.couplings == -0.5)
    assert c.meta["disorder"]["distribution"] == "constant"


def test_bad_specs():
    with pytest.raises(ParameterError):
        DisorderSpec("cauchy")
    with pytest.raises(ParameterError):
        DisorderSpec("gaussian", scale=0)
    with pytest.raises(ParameterError):
        CouplingField(LatticeBox(1, 3), np.array([1.0]))
    with pytest.raises(ParameterError):
        CouplingField(LatticeBox(1, 2), np.array([np.nan]))


@given(st.integers(0, 2**32 - 1))
def test_field_json_round_trip_is_exact(seed):
    field = sample_couplings(LatticeBox(2, 3), DisorderSpec("gaussian", seed=seed, scale=1e-3))
    assert CouplingField.from_json(field.to_json()) == field


def test_field_json_rejects_reordered_edges():
    text = CouplingField(LatticeBox(1, 3), np.array([1.0, 2.0])).to_json()
    bad = text.replace("[0, 1,", "[1, 2,", 1)
    with pytest.raises(SwlabError):
        CouplingField.from_json(bad)


def test_gadget_param_validation():
    with pytest.raises(ParameterError):
        GadgetParams(1, 0.25, 0.4, (0, 0))
    with pytest.raises(ParameterError):
        GadgetParams(2, 0.5, 0.4, (0, 0))
    with pytest.raises(ParameterError):
        GadgetParams(2, 0.25, 0.5, (0, 0))  # s must be below 1 - 2 delta
    with pytest.raises(ParameterError):
        GadgetParams(2, 0.25, 0.4, (0, 0), pinning="sampled")


def test_band_intervals_example():
    iv = band_intervals(_params(2))
    assert iv["positive"] == (0.0, 0.0625)
    assert iv["negative"][0] == pytest.approx(-0.4995 * 0.0625)
    assert iv["negative"][1] == 0.0
    assert iv["bulk"] == (0.75, 1.0)  # width 1/l^d
    assert iv["shell_budget"] == (0.0, 0.25)


@pytest.mark.parametrize("l", [2, 3, 4])
def test_geometry_sizes(l):
    geo = gadget_geometry(_box(l), (2 * l + 1, 2 * l + 1), l)
    assert len(geo.B4) == (4 * l) ** 2
    assert len(geo.B2) == (2 * l) ** 2
    assert geo.band_edges.size == 4 * 2 * l
    assert len(geo.inner_shell) == 4 * (2 * l - 1)
    assert len(geo.outer_shell) == 4 * (2 * l + 1)
    assert geo.shell_edges.size == 4 * 4 * l
    # the band reflection is a fixed-point-free involution
    r = geo.band_reflected
    assert np.array_equal(r[r], np.arange(r.size))
    assert np.all(r != np.arange(r.size))
    # exactly half the band edges leave B_2l through a positive face
    assert geo.band_rule2.sum() == geo.band_edges.size // 2
    assert np.array_equal(geo.band_rule2[r], ~geo.band_rule2)


@pytest.mark.parametrize("l", [2, 3, 4])
@pytest.mark.parametrize("pinning", ["midpoint", "sampled"])
def test_build_then_verify(l, pinning):
    params = _params(l, pinning=pinning, seed=9 if pinning == "sampled" else None)
    field = build_gadget(sample_couplings(_box(l), DisorderSpec("uniform", seed=1)), params)
    report = verify_gadget(field, params)
    assert report.passed, report.summary()
    assert field.meta["gadgets"][-1]["l"] == l
    J = field.couplings
    geo = gadget_geometry(field.box, params.center, l)
    assert np.all(J[geo.band_edges] * J[geo.band_edges[geo.band_reflected]] < 0)


def test_midpoint_values():
    l = 2
    field = build_gadget(sample_couplings(_box(l), DisorderSpec("constant")), _params(l))
    geo = gadget_geometry(field.box, (5, 5), l)
    band = set(np.round(field.couplings[geo.band_edges], 12))
    assert band == {0.03125, round(-0.4995 * 0.0625 / 2, 12)}
    assert np.allclose(field.couplings[geo.bulk_edges], 0.875)
    assert abs(field.couplings[geo.shell_edges]).sum() == pytest.approx(1 / 8)


def test_verify_reports_offending_edges():
    l = 2
    params = _params(l)
    field = build_gadget(sample_couplings(_box(l), DisorderSpec("constant")), params)
    geo = gadget_geometry(field.box, params.center, l)
    J = field.couplings.copy()
    e = int(geo.band_edges[0])
    J[e] = -J[e]
    report = verify_gadget(field.with_couplings(J), params)
    assert not report.passed
    assert e in report.checks["antisymmetry"].offending
    d = report.to_dict()
    assert json.loads(json.dumps(d))["passed"] is False


def test_verify_placement_failure():
    report = verify_gadget(sample_couplings(LatticeBox(2, 5), DisorderSpec()), _params(2))
    assert not report.passed and "placement" in report.checks


def test_scan_finds_planted_gadget_only():
    l = 2
    box = LatticeBox(2, 12)
    params = GadgetParams(l, 0.25, 0.4995, (6, 6))
    field = build_gadget(sample_couplings(box, DisorderSpec("uniform", seed=2)), params)
    assert scan_for_gadget(field, params) == [(6, 6)]
    assert scan_for_gadget(sample_couplings(box, DisorderSpec("uniform", seed=2)), params) == []
