import json
import subprocess
import sys

import pytest

from freeword.cli import main
from freeword.classify import parse_record


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_limit_omega(capsys):
    code, out, _ = run(capsys, "limit", "--in", "omega.fga", "--seed", "a", "--len", "10")
    assert code == 0 and out.strip() == "a b b a b b a b a b"


def test_limit_alpha0(capsys):
    code, out, _ = run(capsys, "limit", "--in", "alpha0.gmap", "--seed", "e", "--len", "14")
    assert code == 0 and out.strip() == "e c D f c b a B A D f e c D"


def test_limit_to_file(tmp_path, capsys):
    path = tmp_path / "x.txt"
    code, _, _ = run(capsys, "limit", "--in", "omega.fga", "--seed", "a", "--len", "100000", "--out", str(path))
    assert code == 0
    assert len(path.read_text().split()) == 100_000


def test_limit_periodic_warning(capsys):
    code, _, err = run(capsys, "limit", "--in", "alpha0.fga", "--seed", "c", "--len", "200")
    assert code == 0 and "eventually periodic" in err


def test_identity_no_convergence(capsys):
    code, _, err = run(capsys, "limit", "--in", "identity.fga", "--seed", "a")
    assert code == 2 and "no stabilization" in err


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "limit", "--in", str(tmp_path / "nope.fga"), "--seed", "a")
    assert code == 1 and err.startswith("error:")


def test_missing_seed(capsys):
    code, _, err = run(capsys, "limit", "--in", "omega.fga")
    assert code == 1 and "--seed" in err


def test_unknown_letter(capsys):
    code, _, _ = run(capsys, "limit", "--in", "omega.fga", "--seed", "z")
    assert code == 1


def test_nmax_above_len(capsys):
    code, _, err = run(capsys, "complexity", "--in", "omega.fga", "--seed", "a", "--len", "50", "--nmax", "100")
    assert code == 1 and "--nmax" in err


def test_complexity_fibonacci(capsys):
    code, out, _ = run(capsys, "complexity", "--in", "fibonacci.fga", "--seed", "a", "--nmax", "100")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "n,p,exact,p_rec,rec_stable"
    rows = [line.split(",") for line in lines[1:]]
    assert [int(r[1]) for r in rows] == [n + 1 for n in range(1, 101)]


@pytest.mark.parametrize("name,seed,cls", [("omega.fga", "a", "Linear"), ("alpha0.gmap", "e", "Quadratic"),
                                           ("alpha0.fga", "c", "Bounded")])
def test_classify(capsys, name, seed, cls):
    code, out, _ = run(capsys, "classify", "--in", name, "--seed", seed, "--len", "200000")
    rec = parse_record(out)
    assert code == 0 and rec["class"] == cls and rec["route"] in ("Both-agree", "Structural")


def test_classify_conflict_exit(capsys, tmp_path):
    # asserting full irreducibility on a map with two EG strata contradicts its structure
    from freeword.suite import resolve
    text = resolve("alpha11.fga").read_text()
    path = tmp_path / "asserted.fga"
    path.write_text(text.replace("letters:", "assert: fully-irreducible\nletters:"))
    code, out, _ = run(capsys, "classify", "--in", str(path), "--seed", "a", "--len", "100000")
    assert code == 3 and parse_record(out)["route"] == "Conflict"


def test_growth(capsys):
    code, out, _ = run(capsys, "growth", "--in", "rcdif.fga", "--seed", "c")
    assert code == 0
    assert "path c growth=n^2*1.000000^n" in out


def test_lamination(capsys):
    code, out, _ = run(capsys, "lamination", "--in", "omega.fga", "--seed", "a", "--nmax", "4")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "stable=1 inverse_closed=1 factor_closed=1"
    assert len(lines) == 5


def test_window_count(capsys):
    code, out, _ = run(capsys, "window-count", "1", "1", "2", "1", "2", "2")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "n,count,phi_class,ratio" and len(lines) == 9
    ratio = float(lines[-1].split("M2/M1=")[1])
    assert ratio < 20


def test_window_count_bad_arity(capsys):
    code, _, _ = run(capsys, "window-count", "1", "1", "2")
    assert code == 1


def test_print_config(capsys):
    code, out, _ = run(capsys, "classify", "--in", "omega.fga", "--seed", "a", "--quick", "--print-config")
    cfg = json.loads(out)
    assert code == 0 and cfg["length"] == 100_000 and cfg["n_max"] == 2000 and cfg["quick"]


def test_print_config_sorted(capsys):
    _, out, _ = run(capsys, "limit", "--print-config")
    keys = list(json.loads(out))
    assert keys == sorted(keys)


def test_deterministic_output(capsys):
    argv = ["complexity", "--in", "alpha21.fga", "--seed", "a", "--len", "20000", "--nmax", "200"]
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second


def test_paper_suite_missing_corpus(capsys, tmp_path):
    code, _, err = run(capsys, "paper-suite", "--in", str(tmp_path / "nowhere"), "--quick")
    assert code == 1 and err.startswith("error:")


def test_paper_suite_quick(capsys):
    code, out, _ = run(capsys, "paper-suite", "--quick")
    assert code == 0 and "10/10 class matches" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "freeword", "limit", "--in", "omega.fga", "--seed", "a",
                           "--len", "5"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "a b b a b"


def test_growth_reports_long_nongrowing_subpath(capsys):
    seed = "b " + "a " * 20 + "c"
    code, out, _ = run(capsys, "growth", "--in", "rcdif.fga", "--seed", seed, "--nongrowing-threshold", "10")
    assert code == 0 and "note: non-growing subpath of 20 edges at position 1" in out
