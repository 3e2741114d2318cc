import xml.etree.ElementTree as ET

import numpy as np

from kolmolab.svg import line_chart

NS = "{http://www.w3.org/2000/svg}"


def test_well_formed_with_one_polyline_per_series():
    x = np.linspace(1, 10, 20)
    doc = line_chart([("a", x, x**2), ("b <&>", x, x)], title="t", xlabel="x", ylabel="y", logx=True, logy=True)
    root = ET.fromstring(doc)
    assert len(root.findall(f"{NS}polyline")) == 2
    assert "b &lt;&amp;&gt;" in doc


def test_log_axes_drop_nonpositive_points():
    doc = line_chart([("a", [0.0, 1.0, 10.0], [1.0, -1.0, 5.0])], logx=True, logy=True)
    poly = ET.fromstring(doc).find(f"{NS}polyline")
    assert len(poly.get("points").split()) == 1


def test_empty_chart():
    doc = line_chart([("nan", [np.nan], [np.nan])], title="empty")
    assert "no data" in doc
    ET.fromstring(doc)


def test_deterministic():
    s = [("a", [1, 2, 3], [3, 1, 2])]
    assert line_chart(s) == line_chart(s)
