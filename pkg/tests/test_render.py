import cmath
import math
import xml.etree.ElementTree as ET

import pytest

from tessellation_codes.catalog import TABLE_CODES
from tessellation_codes.render import SVG_NS, format_amplitude, render_svg

NS = {"s": SVG_NS}


def parse(text):
    assert text.startswith('<?xml version="1.0"')
    root = ET.fromstring(text.split("\n", 1)[1])
    assert root.tag == f"{{{SVG_NS}}}svg"
    return root


def marks(root):
    return root.findall(".//s:circle[@class='mark']", NS)


@pytest.mark.parametrize("name", TABLE_CODES)
def test_svg_is_well_formed(name, entries, codes):
    root = parse(render_svg(codes(name), entries[name].render))
    assert marks(root)
    assert root.get("width") and root.get("height")


@pytest.mark.parametrize("name,count", [("224-cube", 8), ("244-square", 16), ("333-honeycomb", 9)])
def test_mark_counts(name, count, entries, codes):
    root = parse(render_svg(codes(name), entries[name].render))
    m = marks(root)
    assert len(m) == count
    assert len(root.findall(".//s:text[@class='label']", NS)) == count
    # every codeword index appears
    assert {int(c.get("data-k")) for c in m} == set(range(codes(name).dim))


def test_labels_can_be_disabled(entries, codes):
    opts = dict(entries["224-cube"].render, labels=False)
    root = parse(render_svg(codes("224-cube"), opts))
    assert len(marks(root)) == 8 and not root.findall(".//s:text", NS)


def test_more_cells_more_marks(entries, codes):
    one = len(marks(parse(render_svg(codes("244-square"), {"cells": 1}))))
    two = len(marks(parse(render_svg(codes("244-square"), {"cells": 2}))))
    assert two > one


def test_hyperbolic_marks_inside_disk(entries, codes):
    root = parse(render_svg(codes("555-qudit"), entries["555-qudit"].render))
    size = float(root.get("height"))
    for c in marks(root):
        x, y = float(c.get("cx")), float(c.get("cy"))
        assert math.hypot(x - size / 2, y - size / 2) <= size / 2


def test_unknown_option_rejected(codes):
    with pytest.raises(ValueError, match="unknown render option"):
        render_svg(codes("224-cube"), {"colour": "red"})


@pytest.mark.parametrize("a,d,ref,text", [
    (1, 2, 1, "+1"), (-1, 2, 1, "-1"), (-0.5, 2, 1, "-0.5"),
    (cmath.exp(2j * math.pi / 3), 3, 1, "w"), (0.5 * cmath.exp(4j * math.pi / 3), 3, 1, "0.5w^2"),
    (2, 5, 2, "+1"), (1j, 2, 1, "1e^{i1.571}"),
])
def test_format_amplitude(a, d, ref, text):
    assert format_amplitude(a, d, ref) == text
