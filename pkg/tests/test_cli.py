import json

import numpy as np
import pytest

from incitensor.cli import SignatureError, parse_signature, run
from incitensor.tensors import load_tensor


def ok(*argv):
    code, out = run(list(argv))
    assert code == 0, out
    return out


class TestSignature:
    def test_grammar(self):
        dims, cons = parse_signature("node,edge|c:1=2:1")
        assert [d.face_size for d in dims] == [1, 2]
        assert cons.groups == (((1, 1), (2, 1)),)
        dims, _ = parse_signature("node^3")
        assert len(dims) == 3
        dims, _ = parse_signature("2d,3")
        assert dims[0].directed and not dims[1].directed

    @pytest.mark.parametrize("text", ["", "blob", "node^0", "1|c:1=", "node|c:3=1"])
    def test_bad(self, text):
        with pytest.raises(SignatureError):
            parse_signature(text)


class TestCount:
    def test_graph(self):
        out = ok("count", "--in-signature", "node,node", "--out-signature", "node,node")
        assert "total: 15 = 2 + 3 + 3 + 7" in out

    def test_node_cube(self):
        out = ok("count", "--in-signature", "node,node", "--out-signature", "node^3", "--format", "json")
        assert json.loads(out)["total"] == 52

    def test_relaxed(self):
        assert "4" in ok("count", "--in-signature", "node,node", "--relaxed")

    def test_symmetric(self):
        assert "total: 9" in ok("count", "--in-signature", "node,node", "--symmetric")

    def test_bad_signature_is_usage_error(self):
        code, _ = run(["count", "--in-signature", "node,,"])
        assert code == 2

    def test_missing_argument(self):
        assert run(["count"])[0] == 2


class TestOrbits:
    def test_node_cube(self):
        assert "kappa: m=1:1 m=2:3 m=3:1" in ok("orbits", "--signature", "node^3")

    def test_node(self):
        assert "kappa: m=1:1" in ok("orbits", "--signature", "node")

    def test_constrained(self):
        data = json.loads(ok("orbits", "--signature", "node,edge|c:1=2:1", "--format", "json"))
        assert data["kappa"] == {"2": 1}


class TestSharing:
    @pytest.mark.parametrize("m,n,symbols", [(1, 1, 2), (2, 2, 7), (2, 3, 13)])
    def test_symbols(self, m, n, symbols):
        out = ok("sharing", "--m", str(m), "--m-prime", str(n), "--n", "5")
        assert f"symbols: {symbols}" in out


class TestGeometry:
    def test_complex(self, data_dir):
        out = ok("complex", "--facets", str(data_dir / "bipyramid.json"))
        assert "5 nodes, 9 edges, 7 triangles, 2 tetrahedra" in out

    def test_complex_export(self, data_dir, tmp_path):
        ok("complex", "--facets", str(data_dir / "bipyramid.json"), "--incidence", "1,3",
           "--export", str(tmp_path / "mask.csv"))
        mask = np.loadtxt(tmp_path / "mask.csv", delimiter=",")
        assert mask.shape == (5, 10) and int(mask.sum()) == 21

    def test_poset(self, data_dir):
        out = ok("poset", "--poset", str(data_dir / "cube_poset.json"))
        assert "valid" in out and "8/12/6" in out

    def test_malformed_json(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run(["complex", "--facets", str(bad)])[0] == 1
        assert run(["poset", "--poset", str(bad)])[0] == 1

    def test_missing_file(self, tmp_path):
        assert run(["complex", "--facets", str(tmp_path / "none.json")])[0] == 1


class TestApply:
    def make(self, tmp_path, init, seed="3"):
        layer = tmp_path / f"{init}.json"
        ok("init-layer", "--in-signature", "node,node", "--out-signature", "node,node",
           "--init", init, "--seed", seed, "--integer", "--output", str(layer))
        tensor = tmp_path / "x.json"
        ok("random-tensor", "--signature", "node,node", "--n", "4", "--seed", "5", "--integer",
           "--output", str(tensor))
        return layer, tensor

    def test_identity(self, tmp_path):
        layer, tensor = self.make(tmp_path, "identity")
        ok("apply", "--layer", str(layer), "--input", str(tensor), "--output", str(tmp_path / "y.json"))
        assert load_tensor(tmp_path / "y.json") == load_tensor(tensor)

    def test_zeros(self, tmp_path):
        layer, tensor = self.make(tmp_path, "zeros")
        ok("apply", "--layer", str(layer), "--input", str(tensor), "--output", str(tmp_path / "y.json"))
        assert not np.any(load_tensor(tmp_path / "y.json").values)

    def test_deterministic(self, tmp_path):
        layer, tensor = self.make(tmp_path, "random")
        a = ok("apply", "--layer", str(layer), "--input", str(tensor))
        (tmp_path / "again").mkdir()
        layer2, _ = self.make(tmp_path / "again", "random")
        b = ok("apply", "--layer", str(layer2), "--input", str(tensor))
        assert a == b and a

    def test_input_mask(self, tmp_path):
        layer, tensor = self.make(tmp_path, "random")
        out = ok("apply", "--layer", str(layer), "--input", str(tensor), "--mask", "input")
        y = json.loads(out)
        x = load_tensor(tensor)
        assert len(y["entries"]) <= int(np.count_nonzero(x.values))

    def test_mismatch(self, tmp_path):
        layer, _ = self.make(tmp_path, "zeros")
        other = tmp_path / "e.json"
        ok("random-tensor", "--signature", "node,edge", "--n", "4", "--seed", "1", "--output", str(other))
        assert run(["apply", "--layer", str(layer), "--input", str(other)])[0] == 1


class TestVerify:
    def test_default(self):
        code, out = run(["verify"])
        assert code == 0 and json.loads(out)["passed"]

    def test_small_n(self):
        code, out = run(["verify", "--max-n", "3"])
        data = json.loads(out)
        assert code == 0
        statuses = [c["status"] for c in data["cases"] if c.get("M") == 2 and c.get("M_prime") == 2]
        assert "expected-undercount" in statuses


def test_algebra():
    data = json.loads(ok("algebra", "--n", "5"))
    assert (data["span_full"], data["span_relaxed"], data["span_relaxed_twice"]) == (9, 8, 9)
    assert data["max_composition_residual"] < 1e-9
