import json
from fractions import Fraction as F

from gaugeform import matrices as mx
from gaugeform import serialize as js
from gaugeform.cli import main
from gaugeform.scalars import NumberField

from corpus import GL1, GL3, N3, SL2, D, E, S, add


def write(path, a, ctx, fld=None, **extra):
    obj = js.connection(a, ctx, fld)
    obj.update(extra)
    path.write_text(json.dumps(obj))
    return str(path)


def run(capsys, *argv):
    code = main([str(x) for x in argv])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_reduce_rank_one(tmp_path, capsys):
    f = write(tmp_path / "a.json", S(1, (-1, D(F(1, 2)))), GL1)
    code, rep = run(capsys, "reduce", f)
    assert code == 0 and rep["status"] == "ok"
    assert rep["canonical"]["residue"] == [[{"num": 1, "den": 2}]]
    assert rep["invariants"]["monodromy"]["v"] == [{"num": 1, "den": 2}]


def test_reduce_trivial_pole_single_atom(tmp_path, capsys):
    f = write(tmp_path / "a.json", S(2, (-2, E(2, 2, 1))), SL2)
    code, rep = run(capsys, "reduce", f, "--trace")
    assert code == 0
    assert rep["canonical"]["levels"] == [] and len(rep["certificate"]["atoms"]) == 1
    assert rep["certificate"]["atoms"][0]["type"] == "exp"
    assert rep["trace"][-1]["op"] == "shorten"


def test_reduce_fractional_level(tmp_path, capsys):
    f = write(tmp_path / "a.json", S(2, (-2, E(2, 2, 1)), (-1, E(2, 1, 2))), SL2)
    code, rep = run(capsys, "reduce", f)
    assert code == 0 and rep["canonical"]["levels"] == [{"num": -3, "den": 2}]
    assert rep["coxeter"]["ok"] is True


def test_reduce_is_byte_deterministic(tmp_path, capsys):
    f = write(tmp_path / "a.json", S(2, (-3, E(2, 2, 1)), (-1, E(2, 1, 2))), SL2)
    main(["reduce", f])
    first = capsys.readouterr().out
    main(["reduce", f])
    assert capsys.readouterr().out == first


def test_certificate_roundtrip_and_tamper(tmp_path, capsys):
    src = write(tmp_path / "a.json", S(2, (-3, D(1, -1)), (-1, E(2, 1, 2))), SL2)
    cert = tmp_path / "g.json"
    code, rep = run(capsys, "reduce", src, "--certificate", cert)
    assert code == 0
    target = tmp_path / "b.json"
    code, out = run(capsys, "apply", src, "--gauge", cert)
    target.write_text(json.dumps(out))
    code, out = run(capsys, "verify", src, target, "--certificate", cert)
    assert code == 0 and out["ok"]
    bad = json.loads(cert.read_text())
    bad["atoms"].append({"type": "shear", "cocharacter": [1, -1], "d": 1})
    cert.write_text(json.dumps(bad))
    code, out = run(capsys, "verify", src, target, "--certificate", cert)
    assert code == 1 and not out["ok"] and "first_discrepancy" in out


def test_bounds(capsys):
    code, out = run(capsys, "bounds")
    assert code == 0
    assert out["ramification_bound"] == 24 and out["regular_ramification_bound"] == 2
    assert out["determinacy"][0] == {"kind": "irregular", "order": {"num": -2, "den": 1}, "count": {"num": 2, "den": 1},
                                     "bound": {"num": 0, "den": 1}}


def test_equiv_over_f(tmp_path, capsys):
    a = write(tmp_path / "a.json", S(1, (-1, D(F(1, 2)))), GL1)
    b = write(tmp_path / "b.json", S(1, (-1, D(F(3, 2)))), GL1)
    c = write(tmp_path / "c.json", S(1, (-1, D(F(1, 3)))), GL1)
    assert run(capsys, "equiv", a, b, "--over", "F")[1]["equivalent"] is True
    assert run(capsys, "equiv", a, c, "--over", "F")[1]["equivalent"] is False


def test_lift(tmp_path, capsys):
    f = write(tmp_path / "a.json", S(1, (-2, D(1)), (-1, D(1))), GL1)
    code, out = run(capsys, "lift", f, "--by", 4)
    got = js.parse_connection(out)[0]
    assert got == S(1, (-5, D(4)), (-1, D(4)))


def test_invariants_command(tmp_path, capsys):
    f = write(tmp_path / "a.json", S(3, (-1, E(3, 2, 1))), GL3)
    code, out = run(capsys, "invariants", f)
    assert code == 0 and out["monodromy"]["orbit"] == [{"class": {"num": 0, "den": 1}, "partition": [2, 1]}]


def test_parse_error_exit(tmp_path, capsys):
    f = tmp_path / "bad.json"
    f.write_text("{not json")
    assert main(["reduce", str(f)]) == 2
    g = tmp_path / "dup.json"
    obj = js.connection(S(1, (-1, D(1))), GL1)
    obj["terms"] = obj["terms"] * 2
    g.write_text(json.dumps(obj))
    assert main(["reduce", str(g)]) == 2


def test_precision_exit(tmp_path, capsys):
    f = write(tmp_path / "a.json", S(2, (-4, E(2, 2, 1)), prec=-2), SL2)
    assert main(["reduce", f]) == 3
    assert "required window" in capsys.readouterr().err


def test_field_cap_exit(tmp_path, capsys):
    f = write(tmp_path / "a.json", S(2, (-2, add(E(2, 1, 2, 2), E(2, 2, 1)))), SL2)
    assert main(["reduce", f, "--degree-cap", "1"]) == 4


def test_undecidable_exit(tmp_path, capsys):
    a = write(tmp_path / "a.json", S(3, (-1, E(3, 1, 2))), N3)
    b = write(tmp_path / "b.json", S(3, (-1, E(3, 2, 3))), N3)
    assert main(["equiv", a, b]) == 5


def test_irrational_field_roundtrip(tmp_path, capsys):
    k = NumberField(1, [-2, 0, 1])
    th = k.theta()
    f = write(tmp_path / "a.json", S(2, (-1, mx.diag([th, -th]))), SL2, k)
    code, rep = run(capsys, "reduce", f)
    assert code == 0 and rep["canonical"]["residue"][0][0] in ({"coords": [{"num": 0, "den": 1}, {"num": 1, "den": 1}]}, {"coords": [{"num": 0, "den": 1}, {"num": -1, "den": 1}]})
