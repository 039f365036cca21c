import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lanepath import netarch
from lanepath.errors import InconsistentGraph, IndivisibleResolution
from lanepath.netarch import LayerSpec, NetGraph, count_macs, count_params, dsunet_graph, unet_graph


def test_unet_census():
    g = unet_graph()
    c = g.census()
    assert len(g.conv_layers()) == 23
    assert (c["conv3x3"], c["upconv"], c["conv1x1"]) == (18, 4, 1)
    assert (g.in_ch, g.out_ch) == (1, 2)
    assert "dropout" not in c


def test_dsunet_census():
    g = dsunet_graph()
    c = g.census()
    assert len(g.conv_layers()) == 40
    assert (c["depthwise"], c["pointwise"], c["conv3x3"]) == (17, 17, 1)
    assert c["dropout"] == 3
    assert (g.in_ch, g.out_ch) == (3, 1)
    assert g.layers[0].kind == "conv"


def test_deepest_conv():
    convs = [l for l in unet_graph().layers if l.kind == "conv" and l.k == 3]
    assert max((l.cin, l.cout) for l in convs if l.cout == 1024) == (1024, 1024)
    assert any((l.cin, l.cout) == (512, 1024) for l in convs)


@pytest.mark.oracle
def test_param_formula_examples():
    assert LayerSpec("c", "conv", 3, 64, k=3).params() == 1792
    dw = LayerSpec("d", "depthwise", 64, 64, k=3)
    pw = LayerSpec("p", "pointwise", 64, 128)
    assert (dw.params(), pw.params()) == (640, 8320)
    assert LayerSpec("u", "upconv", 128, 64, k=2).params() == 4 * 128 * 64 + 64
    assert LayerSpec("b", "batchnorm", 64, 64).params() == 128
    for kind in ("maxpool", "dropout"):
        assert LayerSpec("x", kind, 64, 64).params() == 0


def test_param_budgets():
    pu = count_params(unet_graph()).params
    pd = count_params(dsunet_graph()).params
    assert abs(pu / 31.04e6 - 1) <= 0.02
    assert abs(pd / 6.01e6 - 1) <= 0.02
    assert pu == 31_042_434 and pd == 6_013_121


def test_totals_equal_breakdown():
    r = count_macs(unet_graph(3, 1), (320, 240))
    assert r.params == sum(x["params"] for x in r.rows)
    assert r.macs == sum(x["macs"] for x in r.rows)


@pytest.mark.oracle
def test_first_conv_macs_at_320x240():
    r = count_macs(unet_graph(3, 1), (320, 240))
    first = r.rows[0]
    assert first["layer"] == "enc1.conv1" and first["macs"] == 1728 * 76800


def test_mac_budgets_at_documented_resolution():
    mu, md = netarch.mac_pair(netarch.DOCUMENTED_HW)
    assert abs(mu / 62.51e9 - 1) <= 0.05
    assert abs(md / 9.56e9 - 1) <= 0.05
    assert mu / md == pytest.approx(6.54, rel=0.05)


def test_sweep_ranks_documented_resolution_first():
    rows = netarch.resolution_sweep()
    assert (rows[0]["w"], rows[0]["h"]) == netarch.DOCUMENTED_HW
    assert rows[0]["worst"] <= 0.05
    skipped = [r for r in rows if r["worst"] is None]
    assert (160, 120) in [(r["w"], r["h"]) for r in skipped]


def test_per_output_upconv_convention_is_costlier():
    a = count_macs(unet_graph(3, 1), (288, 288), "strided").macs
    b = count_macs(unet_graph(3, 1), (288, 288), "per_output").macs
    assert b > a
    with pytest.raises(ValueError):
        count_macs(unet_graph(), (288, 288), "other")


def test_indivisible_resolution():
    with pytest.raises(IndivisibleResolution):
        count_macs(unet_graph(), (160, 120))


def test_inconsistent_graphs_rejected():
    bad = NetGraph("x", (LayerSpec("c", "conv", 2, 8, k=3),), 3, 8)
    with pytest.raises(InconsistentGraph):
        bad.validate()
    bad_cat = NetGraph("y", (
        LayerSpec("c", "conv", 3, 8, k=3),
        LayerSpec("p", "maxpool", 8, 8),
        LayerSpec("cat", "concat", 8, 16, skip="c"),
    ), 3, 16)
    with pytest.raises(InconsistentGraph):
        bad_cat.validate()
    wrong_sum = NetGraph("z", (LayerSpec("c", "conv", 3, 8, k=3), LayerSpec("cat", "concat", 8, 17, skip="c")), 3, 17)
    with pytest.raises(InconsistentGraph):
        wrong_sum.validate()


def test_depthwise_separable_saves_per_layer():
    for l in unet_graph(3, 1).layers:
        if l.kind == "conv" and l.k == 3 and l.cin >= 2:
            std = l.params()
            ds = LayerSpec("d", "depthwise", l.cin, l.cin, k=3).params() + LayerSpec("p", "pointwise", l.cin, l.cout).params()
            assert ds < std


def test_cost_csv(tmp_path):
    r = count_macs(dsunet_graph(), (288, 288))
    r.write_csv(tmp_path / "d.csv")
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == "layer,kind,in_ch,out_ch,kernel,out_h,out_w,params,macs"
    assert len(lines) == len(r.rows) + 1


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.integers(1, 40))
def test_macs_linear_in_pixels(a, b):
    base = count_macs(dsunet_graph(3, 1), (16 * a, 16 * b)).macs
    doubled = count_macs(dsunet_graph(3, 1), (32 * a, 16 * b)).macs
    assert doubled == 2 * base
    assert base % (a * b) == 0
