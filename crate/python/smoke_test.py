"""Smoke test for the gsckit Python module.

Build and install first:  pip install --no-build-isolation ./crates/py
"""

import json

import gsckit


def main():
    theta = gsckit.Graph([(1, 0, 1), (2, 0, 1), (3, 0, 1)])
    assert theta.betti1() == 2
    assert theta.property_p([1, 2])
    assert not theta.property_p([1])

    trace = gsckit.colour_change(theta, [1, 2], [2, 3])
    assert [(c["r"], c["b"]) for c in trace] == [(1, 3)]
    assert gsckit.colour_change(theta, [1, 2], [1, 2]) == []

    disc = gsckit.Complex.from_json(json.dumps({
        "edges": [{"id": 1, "ends": [0, 1]}, {"id": 2, "ends": [1, 2]}, {"id": 3, "ends": [2, 0]}],
        "faces": [{"id": 1, "walk": [1, 2, 3]}],
    }))
    assert disc.homology() == (1, 0, 0)
    assert disc.collapse_to_spine([0]) is not None
    assert disc.gsc_certificate([2])["kind"] == "witness"

    rp2 = gsckit.Complex.from_json(json.dumps({
        "edges": [{"id": 1, "ends": [0, 0]}],
        "faces": [{"id": 1, "walk": [1, 1]}],
    }))
    assert rp2.homology() == (1, 1, 1)
    assert rp2.collapse_to_spine([0]) is None

    assert not gsckit.Matrix.whitehead(3).is_easy()
    chain = gsckit.Matrix.from_rows([[1, 0, 0], [1, 1, 0], [0, 1, 1]])
    assert chain.is_easy()
    assert len(chain.state_graph()["states"]) == 3

    gps = gsckit.gps_build(3, 0, 2, "1/8")
    assert all(c["ok"] for c in gsckit.gps_verify(gps).values())
    flat = gsckit.gps_verify(gsckit.gps_build(3, 0, 2, "0"))
    assert [k for k, c in flat.items() if not c["ok"]] == ["b"]

    for name in gsckit.toy_names():
        report = gsckit.double_punchlines(name)
        assert all(report[k]["ok"] for k in "abc"), name

    report = gsckit.fuzz("colour", seed=7, count=50)
    assert report["passed"] == 50

    try:
        gsckit.Graph.from_json('{"edges": [')
    except ValueError as e:
        assert "line" in str(e)
    else:
        raise AssertionError("malformed JSON accepted")

    print("gsckit smoke test: ok")


if __name__ == "__main__":
    main()
