import json
import math
import random
import pytest

from ngccsat.cli import (
    COLUMNS,
    SCHEMA,
    canonical_digest,
    main,
    parse_seeds,
    read_run_csv,
    run_solves,
    verify_entries,
)
from ngccsat.cnf import Cnf, emit_dimacs
from ngccsat.cuts import certificate_system, make_kcbs_cut
from ngccsat.generators import gen_cycle_sat
from ngccsat.lp import solve_feasibility

from oracles import parity_ring


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr().out


def test_generate_names_and_repeatable_digests(tmp_path, capsys):
    code, out = _run(capsys, "generate", "--family", "cycle", "--n", 5, "--out", tmp_path / "a")
    assert code == 0
    assert out.split() == ["cycle_k5.cnf", "cycle_k5.json", "inequalities/kcbs_c5.json"]
    _run(capsys, "generate", "--family", "feistel", "--out", tmp_path / "a")
    assert (tmp_path / "a" / "feistel_3r_8b.cnf").exists()
    _run(capsys, "generate", "--family", "cycle", "--n", 5, "--out", tmp_path / "b")
    _run(capsys, "generate", "--family", "feistel", "--out", tmp_path / "b")
    for name in ("cycle_k5.cnf", "feistel_3r_8b.cnf", "feistel_3r_8b.json"):
        assert canonical_digest(tmp_path / "a" / name) == canonical_digest(tmp_path / "b" / name)
    sums = (tmp_path / "a" / "checksums" / "sha256sums.txt").read_text()
    assert "cycle_k5.cnf" in sums and "feistel_3r_8b.cnf" in sums


def test_generate_grid_name(tmp_path, capsys):
    code, out = _run(capsys, "generate", "--family", "grid", "--m", 4, "--out", tmp_path)
    assert code == 0 and "grid_4x4.cnf" in out.split()


def test_solve_writes_versioned_csv(tmp_path, capsys):
    _run(capsys, "generate", "--family", "cycle", "--n", 5, "--out", tmp_path)
    csv_path = tmp_path / "base.csv"
    code, _ = _run(capsys, "solve", tmp_path / "cycle_k5.cnf", "--mode", "baseline", "--seeds", "0-19",
                   "--out", csv_path)
    assert code == 0
    lines = csv_path.read_text().splitlines()
    assert lines[0] == SCHEMA == "# schema=1"
    assert lines[1].split(",") == COLUMNS
    runs = [r for r in read_run_csv(csv_path) if r["kind"] == "run"]
    assert len(runs) == 20 and {r["verdict"] for r in runs} == {"UNSAT"}
    assert all(r["lp_checks"] == "0" for r in runs)


def test_solve_stdout_and_seed_parsing(tmp_path, capsys):
    assert parse_seeds("0-2,7") == [0, 1, 2, 7]
    _run(capsys, "generate", "--family", "cycle", "--n", 4, "--out", tmp_path)
    code, out = _run(capsys, "solve", tmp_path / "cycle_k4.cnf", "--seed", 3)
    assert code == 0 and out.startswith(SCHEMA) and ",SAT," in out


def _feistel_certs(tmp_path, capsys):
    _run(capsys, "generate", "--family", "feistel", "--out", tmp_path)
    inst = tmp_path / "feistel_3r_8b.cnf"
    code, _ = _run(capsys, "solve", inst, "--seeds", "0-19", "--out", tmp_path / "ngcc.csv",
                   "--cuts", tmp_path / "inequalities" / "feistel_chain.json")
    assert code == 0
    log = tmp_path / "ngcc.certs.jsonl"
    entries = [json.loads(line) for line in log.read_text().splitlines()]
    assert entries
    return inst, log, entries


def test_verify_passes_then_catches_negated_multiplier(tmp_path, capsys):
    inst, log, entries = _feistel_certs(tmp_path, capsys)
    code, out = _run(capsys, "verify", log, inst)
    assert code == 0 and f"{len(entries)} certificates, 0 failed" in out
    cert = entries[0]["certificate"]
    key = "y_le" if any(n != "0" for n, _ in cert["y_le"]) else "y_eq"
    i = next(j for j, (n, _) in enumerate(cert[key]) if n != "0")
    num, den = cert[key][i]
    cert[key][i] = [str(-int(num)), den]
    bad = tmp_path / "bad.jsonl"
    bad.write_text("".join(json.dumps(e) + "\n" for e in entries))
    code, out = _run(capsys, "verify", bad, inst)
    assert code == 1 and "FAIL 0: certificate does not verify" in out and "1 failed" in out


def test_verify_rejects_clause_not_implied(tmp_path, capsys):
    # the five Y variables are unconstrained here, so forbidding them all is not implied
    cnf = Cnf.from_ints(10, [[1, 2]])
    inst = tmp_path / "loose.cnf"
    inst.write_bytes(emit_dimacs(cnf))
    cut = make_kcbs_cut().with_bindings({i: 5 + i for i in range(1, 6)})
    slots = (1, 2, 3, 4, 5)
    outcome = solve_feasibility(certificate_system(cut, slots))
    entry = {"index": 0, "cut": cut.to_json(), "bindings": {str(k): v for k, v in cut.bindings.items()},
             "slots": list(slots), "certificate": outcome.certificate.to_json(),
             "clause": [-6, -7, -8, -9, -10], "cut_name": cut.name, "depth": 0}
    log = tmp_path / "synthetic.jsonl"
    log.write_text(json.dumps(entry) + "\n")
    code, out = _run(capsys, "verify", log, inst)
    assert code == 1 and "not implied" in out
    # the same certificate is fine against a formula that does imply the clause
    ring = tmp_path / "ring.cnf"
    ring.write_bytes(emit_dimacs(parity_ring(5)))
    assert _run(capsys, "verify", log, ring)[0] == 0


def test_verify_accepts_solver_logs_on_random_instances():
    rng = random.Random(17)
    cut = gen_cycle_sat(5).cuts()[0]
    certs_seen = 0
    for _ in range(100):
        forced = rng.sample(range(1, 6), rng.randint(0, 4))
        cnf = parity_ring(5, forced)
        _, certs, _ = run_solves(cnf, [cut], "ngcc", [rng.randrange(1000)], 4)
        assert verify_entries(certs, cnf) == []
        certs_seen += len(certs)
    assert certs_seen > 0


def test_summarize_pooled_and_single(tmp_path, capsys):
    _feistel_certs(tmp_path, capsys)
    code, out = _run(capsys, "summarize", tmp_path / "ngcc.csv", "--n-eff", 240, "--plot-csv", tmp_path / "p.csv")
    assert code == 0
    summary = json.loads(out)
    assert summary["runs"] == 20 and summary["verdicts"] == {"UNSAT": 20}
    assert 0 < summary["rho_tilde"] < 1 and summary["ci"] is not None
    expected = 240 * (1 - math.log2(2 - summary["rho_tilde"]))
    assert summary["delta_bits"]["bits"] == pytest.approx(expected, abs=1e-6)
    assert (tmp_path / "p.csv").read_text().startswith("depth,rho,ci_lo,ci_hi")

    _run(capsys, "generate", "--family", "cycle", "--n", 5, "--out", tmp_path)
    _run(capsys, "solve", tmp_path / "cycle_k5.cnf", "--out", tmp_path / "one.csv")
    single = json.loads(_run(capsys, "summarize", tmp_path / "one.csv")[1])
    assert single["runs"] == 1 and single["ci"] is None


def test_metrics(capsys):
    assert json.loads(_run(capsys, "metrics", "delta-bits", "--rho", 0.27, "--n-eff", 240)[1])["delta_bits"] == \
        pytest.approx(50.2147, abs=1e-4)
    assert json.loads(_run(capsys, "metrics", "samples", "--rho", 0.15)[1]) == {"required_samples": 445}
    assert json.loads(_run(capsys, "metrics", "alpha", "--cycle", 7)[1]) == {"alpha": 3}
    assert json.loads(_run(capsys, "metrics", "cifp", "--n", 5, "--eps", 0.01)[1])["bound"] == pytest.approx(2.1)
    assert json.loads(_run(capsys, "metrics", "budget", "--topology", "fo8", 2.5, 2.8)[1]) == \
        {"verdict": "within_quantum"}
    assert json.loads(_run(capsys, "metrics", "tritter", "1", "0", "0")[1])["witness"] == pytest.approx(1 / 3)
    assert json.loads(_run(capsys, "metrics", "visibility", "--v0", 0.98, "--v-dec", 0.93)[1])["epsilon"] == \
        pytest.approx(0.05102, abs=1e-5)


def test_usage_errors_exit_two(tmp_path, capsys):
    assert main([]) == 2
    assert main(["generate", "--family", "cycle", "--n", "2", "--out", str(tmp_path)]) == 2
    assert main(["solve", str(tmp_path / "missing.cnf")]) == 2
    assert main(["metrics", "delta-bits", "--rho", "1.5", "--n-eff", "3"]) == 2
    _run(capsys, "generate", "--family", "cycle", "--n", 4, "--out", tmp_path)
    kcbs = tmp_path / "kcbs.json"
    kcbs.write_text(json.dumps(make_kcbs_cut().to_json()))
    # cycle_k4 has no indicator group for the KCBS cut
    assert main(["solve", str(tmp_path / "cycle_k4.cnf"), "--cuts", str(kcbs)]) == 2
    bad_csv = tmp_path / "bad.csv"
    bad_csv.write_text("kind,seed\n")
    assert main(["summarize", str(bad_csv)]) == 2


def test_conflict_limit_exits_three(tmp_path, capsys):
    _run(capsys, "generate", "--family", "feistel", "--out", tmp_path)
    code, out = _run(capsys, "solve", tmp_path / "feistel_3r_8b.cnf", "--mode", "baseline", "--conflict-limit", 1)
    assert code == 3 and ",UNKNOWN," in out
