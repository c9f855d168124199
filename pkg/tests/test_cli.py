import json

import numpy as np
import pytest

from hypchain.cli import main
from hypchain.io import read_tsv_body


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), (json.loads(err.splitlines()[-1]) if err.strip() else None)


def test_identities(capsys, tmp_path):
    code, out, _ = run(capsys, "identities", "--lambda", "0.1", "--half-length", "50", "-o", str(tmp_path))
    assert code == 0
    assert out["result"]["max_residual"] < 1e-12
    doc = json.loads((tmp_path / "identities.json").read_text())
    assert doc["format_version"] and doc["config"]["profile"] == {"kind": "cosh", "lambda": 0.1}


def test_ed_matches_oracle(capsys, tmp_path, oracle):
    argv = ["ed", "--sites", "12", "--profile", "cosh", "--lambda", "0.1", "--sector", "0", "-k", "2", "-o", str(tmp_path)]
    code, out, _ = run(capsys, *argv)
    assert code == 0
    spec = json.loads((tmp_path / "spectrum.json").read_text())
    np.testing.assert_allclose(spec["eigenvalues"], oracle["chains"]["12_0.1"]["energies"], rtol=1e-12)
    assert spec["n_sites"] == 12 and spec["sector"] == 0.0 and spec["lambda"] == 0.1
    body = read_tsv_body((tmp_path / "bonds.tsv").read_text()).splitlines()
    assert body[0] == "bond_j\tweight\tsz_sz" and len(body) == 12


def test_config_file_and_flag_override(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"chain": {"half_length": 3}, "profile": {"kind": "cosh", "lambda": 0.4}, "ed": {"k": 2}}))
    code, out, _ = run(capsys, "ed", "--config", str(cfg), "--lambda", "0.2", "-o", str(tmp_path / "o"))
    assert code == 0
    resolved = out["config"]
    assert resolved["profile"]["lambda"] == 0.2
    assert resolved["chain"]["half_length"] == 3 and resolved["ed"]["k"] == 2
    saved = json.loads((tmp_path / "o" / "spectrum.json").read_text())
    assert saved["config"] == resolved


@pytest.mark.parametrize(
    "argv",
    [
        ["ed", "--sites", "30"],
        ["ed", "--sites", "7"],
        ["ed", "--lambda", "-1"],
        ["dmrg", "--m", "1"],
        ["identities", "--lambda", "0"],
        ["analyze"],
    ],
)
def test_invalid_config_exit_2(capsys, tmp_path, argv):
    code, _, err = run(capsys, *argv, "-o", str(tmp_path))
    assert code == 2
    assert err["status"] == "error" and err["exit_code"] == 2 and err["message"]


def test_unknown_config_key(capsys, tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"chain": {"sites": 3}}))
    code, _, err = run(capsys, "ed", "--config", str(cfg))
    assert code == 2 and "chain.sites" in err["message"]
    cfg.write_text("{not json")
    assert run(capsys, "ed", "--config", str(cfg))[0] == 2


def test_not_converged_exit_3(capsys, tmp_path):
    code, _, err = run(capsys, "dmrg", "--half-length", "5", "--m", "16", "--sweeps", "1", "-o", str(tmp_path))
    assert code == 3 and err["exit_code"] == 3
    # results are still written, flagged as unconverged
    assert json.loads((tmp_path / "dmrg.json").read_text())["converged"] is False


def test_io_failure_exit_4(capsys, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run(capsys, "identities", "-o", str(blocker / "sub"))
    assert code == 4 and err["exit_code"] == 4
    code, _, _ = run(capsys, "dmrg", "--resume", str(tmp_path / "missing.ckpt"), "-o", str(tmp_path))
    assert code == 4


def test_threads_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("HYPCHAIN_THREADS", "1")
    assert run(capsys, "identities", "-o", str(tmp_path))[0] == 0
    monkeypatch.setenv("HYPCHAIN_THREADS", "zero")
    assert run(capsys, "identities", "-o", str(tmp_path))[0] == 2


def test_dmrg_checkpoint_resume(capsys, tmp_path):
    base = ["dmrg", "--half-length", "5", "--lambda", "0.2", "--m", "32"]
    code, first, _ = run(capsys, *base, "-o", str(tmp_path / "a"), "--checkpoint", str(tmp_path / "a.ckpt"))
    assert code == 0
    code, resumed, _ = run(capsys, *base, "-o", str(tmp_path / "b"), "--resume", str(tmp_path / "a.ckpt"))
    assert code == 0
    assert resumed["result"]["energy"] == pytest.approx(first["result"]["energy"], rel=1e-12)
    code, _, err = run(capsys, "dmrg", "--half-length", "5", "--lambda", "0.3", "--resume", str(tmp_path / "a.ckpt"))
    assert code == 2 and "checkpoint" in err["message"]


def test_freefermion(capsys, tmp_path):
    code, out, _ = run(capsys, "freefermion", "--profile", "uniform", "--lambda", "0", "--sites", "50", "-o", str(tmp_path))
    assert code == 0 and out["result"]["max_deviation_from_open_chain"] < 1e-10
    body = read_tsv_body((tmp_path / "spectrum.tsv").read_text()).splitlines()
    assert body[0] == "level_index\tenergy\tipr\tshift_overlap" and len(body) == 51


def test_analyze_center_series(capsys, tmp_path):
    x = 2 * np.arange(30) + 1
    lines = ["distance\tabs_correlation"] + [f"{d}\t{float(0.2 * np.exp(-d / 4.0))!r}" for d in x]
    (tmp_path / "c.tsv").write_text("# comment\n" + "\n".join(lines) + "\n")
    code, out, _ = run(capsys, "analyze", "--input", str(tmp_path / "c.tsv"), "-o", str(tmp_path / "o"))
    assert code == 0
    assert out["result"]["xi"] == pytest.approx(4.0, rel=1e-9)
    assert out["result"]["window"][0] == 7.0
    fit = read_tsv_body((tmp_path / "o" / "fit.tsv").read_text()).splitlines()
    assert fit[0] == "x\ty\tfit_y"


def test_analyze_bonds_and_entropy(capsys, tmp_path):
    rows = "\n".join(f"{j}\t{-0.25 if j % 2 else 0.0}" for j in range(-10, 11))
    (tmp_path / "b.tsv").write_text("bond_j\tsz_sz\n" + rows + "\n")
    code, out, _ = run(capsys, "analyze", "--input", str(tmp_path / "b.tsv"), "--series", "bonds", "-o", str(tmp_path))
    assert code == 0 and out["result"]["flatness"] == 0.0
    (tmp_path / "s.tsv").write_text("lambda\tentropy\n0.5\t0.4\n1.0\t0.3\n2.0\t0.2\n")
    code, out, _ = run(capsys, "analyze", "--input", str(tmp_path / "s.tsv"), "--series", "entropy", "-o", str(tmp_path))
    assert code == 0 and out["result"]["verdict"] == "decreasing"


def _tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_bitwise_determinism(capsys, tmp_path):
    for tag in ("a", "b"):
        assert main(["dmrg", "--half-length", "6", "--lambda", "0.1", "--m", "24", "-o", str(tmp_path / tag)]) == 0
        assert main(["freefermion", "-o", str(tmp_path / tag / "ff")]) == 0
    capsys.readouterr()
    a, b = _tree(tmp_path / "a"), _tree(tmp_path / "b")
    assert a.keys() == b.keys() and len(a) == 5
    # output directory names are part of the config, so compare everything else
    for k in a:
        assert a[k].replace(b"/a", b"/b") == b[k], k


def test_reproduce_small(capsys, tmp_path):
    common = ["--half-length", "9", "--m", "24", "--lambdas", "0", "0.2", "0.5"]
    code, out, _ = run(capsys, "reproduce", "fig4", *common, "-o", str(tmp_path / "f4"))
    assert code == 0
    curve = out["result"]["entropy_curve"]
    assert curve["verdict"] == "decreasing" and curve["log_base"] == "e"
    assert (tmp_path / "f4" / "lambda_0.2" / "bonds.tsv").exists()
    code, out, _ = run(capsys, "reproduce", "fig3", *common, "-o", str(tmp_path / "f3"))
    assert code == 0 and out["result"]["xi_lambda"]["reference"] == 0.134
    body = read_tsv_body((tmp_path / "f3" / "xi_lambda.tsv").read_text()).splitlines()
    assert body[0] == "lambda\txi\txi_lambda" and len(body) == 3
    code, out, _ = run(capsys, "reproduce", "fig1", *common, "--jobs", "2", "-o", str(tmp_path / "f1"))
    assert code == 0 and set(out["result"]["flatness"]) == {"0", "0.2", "0.5"}
    f4 = _tree(tmp_path / "f4")
    f1 = _tree(tmp_path / "f1")
    for name in ("lambda_0.5/center.tsv",):
        strip = lambda b: b.split(b"\n", 2)[2]  # noqa: E731
        assert strip(f4[name]) == strip(f1[name])


def test_reproduce_bounds(capsys, tmp_path):
    assert run(capsys, "reproduce", "fig1", "--half-length", "300", "-o", str(tmp_path))[0] == 2
    assert run(capsys, "reproduce", "fig1", "--m", "200", "-o", str(tmp_path))[0] == 2


def test_reproduce_scale_defaults(capsys, tmp_path, monkeypatch):
    import hypchain.cli as cli

    seen = {}

    def fake(cfg):
        seen.update(cfg)
        return {}

    monkeypatch.setitem(cli.HANDLERS, "reproduce", fake)
    run(capsys, "reproduce", "fig2", "-o", str(tmp_path))
    assert seen["chain"]["half_length"] == 99 and seen["dmrg"]["m_max"] == 100
    assert seen["reproduce"]["lambdas"] == [0.05, 0.1]
    run(capsys, "reproduce", "fig1", "--paper-scale", "-o", str(tmp_path))
    assert seen["chain"]["half_length"] == 199 and seen["dmrg"]["m_max"] == 130
