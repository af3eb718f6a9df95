import pytest

from spkicalc.cli import run_cli

RONJOE = b"""
(cert (issuer (name k-ron doctor)) (subject (name k-joe doctor)) (valid (not-before 1) (not-after 3)))
(cert (issuer (name k-joe doctor)) (subject k-d) (valid (not-before 1) (not-after 3)))
(cert (issuer k-ron) (subject (name k-ron doctor)) (tag (set read)) (valid (not-before 1) (not-after 3)))
"""

R4 = b"""
(cert (issuer (name k-k n)) (subject k-p) (valid (not-before 1) (not-after 2)))
(cert (issuer (name k-k n)) (subject k-p) (valid (not-before 3) (not-after 4)))
"""

CRLS = b"""
(crl (issuer k-r) (canceled) (valid (not-before 0) (not-after 5)))
(crl (issuer k-r) (canceled) (valid (not-before 4) (not-after 9)))
"""

MERGED = "(4tuple k-k n k-p (valid (not-before 1) (not-after 4)))"


@pytest.fixture
def files(tmp_path):
    out = {}
    for name, body in (("ronjoe", RONJOE), ("r4", R4), ("crls", CRLS)):
        path = tmp_path / f"{name}.sexp"
        path.write_bytes(body)
        out[name] = str(path)
    return out


def run(*argv, stdin=b""):
    status, out, err = run_cli(list(argv), stdin)
    return status, out.decode(), err.decode()


def test_parse_and_canon(files):
    status, out, _ = run("parse", files["ronjoe"])
    lines = out.splitlines()
    assert status == 0 and len(lines) == 3
    assert all(len(line.split()[0]) == 64 and line.split()[1] == "cert" for line in lines)
    status, out, _ = run("canon", "-", stdin=b"(cert (issuer k-a) (subject k-b) (tag (set read)))")
    assert status == 0
    assert out.strip() == ("(cert (issuer k-a) (subject k-b) (tag (set read)) "
                           "(valid (not-before 0) (not-after infinity)))")


def test_crl_check(files):
    status, out, _ = run("crl-check", files["crls"])
    assert status == 1 and out.startswith("INCONSISTENT")
    status, out, _ = run("crl-check", files["ronjoe"])
    assert status == 0 and out.strip() == "CONSISTENT (0 CRLs)"


def test_reduce(files):
    status, out, _ = run("reduce", files["r4"])
    assert status == 0
    assert out.splitlines()[0] == "; rules rs0 bound 2"
    status, out, _ = run("reduce", "--rules", "rs2", files["r4"])
    assert MERGED in out.splitlines()


def test_decide_ron_joe(files):
    status, out, _ = run("decide", "--issuer", "k-ron", "--subject", "k-d", "--action", "read",
                         "--time", "2", files["ronjoe"])
    assert status == 0 and out.startswith("TRUE (5tuple k-ron k-d")
    assert "R2" in out
    status, out, _ = run("decide", "--issuer", "k-ron", "--subject", "k-d", "--name", "doctor",
                         "--time", "2", files["ronjoe"])
    assert status == 0 and "R2" in out
    status, out, _ = run("decide", "--issuer", "k-ron", "--subject", "k-d", "--action", "read",
                         "--time", "5", files["ronjoe"])
    assert status == 1 and out.startswith("FALSE")


def test_decide_agrees_with_oracle(files):
    for t in range(0, 6):
        s1, _, _ = run("decide", "--issuer", "k-ron", "--subject", "k-d", "--name", "doctor",
                       "--time", str(t), files["ronjoe"])
        phi = f"(implies (now-in (valid (not-before {t}) (not-after {t}))) (bound (name k-ron doctor) k-d))"
        s2, _, _ = run("oracle", "--formula", phi, files["ronjoe"])
        assert s1 == s2


def test_resolve(files):
    status, out, _ = run("resolve", "--issuer", "k-ron", "--name", "doctor", "--time", "2", files["ronjoe"])
    assert status == 0 and out.strip() == "k-ron doctor at 2: k-d"
    status, out, _ = run("resolve", "--issuer", "k-ron", "--name", "doctor", "--time", "9", files["ronjoe"])
    assert status == 1 and out.strip().endswith("(none)")


def test_prove_r4_separation(files, tmp_path):
    status, out, _ = run("prove", "--rules", "rs1", "--target", MERGED, files["r4"])
    assert status == 1 and out.startswith("NOT DERIVABLE under rs1 (bound")
    target = tmp_path / "target.sexp"
    target.write_text(MERGED)
    status, out, _ = run("prove", "--rules", "rs2", "--target", f"@{target}", files["r4"])
    assert status == 0 and out.startswith("DERIVABLE under rs2 (exact, bound")
    assert "R4a" in out


def test_oracle(files):
    status, out, _ = run("oracle", "--formula", "(bound (name k-k n) k-p)", files["r4"])
    assert status == 1 and out.startswith("REFUTED (key")
    phi = "(implies (now-in (valid (not-before 1) (not-after 4))) (bound (name k-k n) k-p))"
    status, out, _ = run("oracle", "--formula", phi, "--keys", "k-x", files["r4"])
    assert status == 0 and out.strip() == "ENTAILED (method chain |K|=3)"


SUPPLY = [f"k-f{i}" for i in range(10)]


def test_witness(files):
    target = "(cert (issuer (name k-k n)) (subject k-p) (valid (not-before 1) (not-after 5)))"
    status, out, _ = run("witness", "--target", target, "--key-supply", *SUPPLY, files["r4"])
    assert status == 0 and out.startswith("WITNESS (key")
    assert "(run (at 0" in out
    target = "(cert (issuer (name k-k n)) (subject k-p) (valid (not-before 1) (not-after 4)))"
    status, out, _ = run("witness", "--target", target, "--key-supply", *SUPPLY, files["r4"])
    assert status == 1 and out.startswith("DERIVABLE")
    status, _, err = run("witness", "--target", target, "--key-supply", "k-f1", files["r4"])
    assert status == 2 and "SupplyTooSmall" in err


def test_errors_are_status_two(files):
    status, _, err = run("decide", "--issuer", "bob", "--subject", "k-d", "--action", "read",
                         "--time", "2", files["ronjoe"])
    assert status == 2 and "--issuer" in err and err.count("\n") == 1
    status, _, err = run("reduce", "--bound", "0", files["r4"])
    assert status == 2 and "--bound" in err
    status, _, err = run("parse", "-", stdin=b"(cert (issuer")
    assert status == 2 and err.startswith("spkicalc: UnbalancedParens")
    status, _, err = run("reduce", files["crls"])
    assert status == 2 and "InconsistentCRLs" in err
    status, _, err = run("frobnicate")
    assert status == 2 and err.startswith("spkicalc:")
    status, _, err = run("parse", "/nonexistent/file")
    assert status == 2 and "cannot read" in err


def test_output_is_deterministic(files):
    argv = ("reduce", "--rules", "rs1", "--emit-3tuples", files["ronjoe"], files["r4"])
    assert run(*argv) == run(*argv)
