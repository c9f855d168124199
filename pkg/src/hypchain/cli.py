"""Command-line entry point: ``hypchain <command> [options]``.

Every command resolves a single JSON-compatible config (built-in defaults,
then an optional ``--config`` file, then flags), writes its result files
atomically into the output directory, and prints a JSON summary to stdout.
Failures print a JSON error record to stderr and exit with

* 2 for an invalid config,
* 3 when a solver does not converge,
* 4 on I/O errors, including unreadable checkpoints.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, checkpoint, dmrg, exact, freefermion, profiles
from .io import dumps, read_tsv_body, write_json, write_tsv
from .linalg import ConvergenceError

log = logging.getLogger("hypchain")

EXIT_OK, EXIT_CONFIG, EXIT_UNCONVERGED, EXIT_IO = 0, 2, 3, 4
MAX_REPRODUCE_SITES = 400
MAX_REPRODUCE_M = 130
XI_LAMBDA_REFERENCE = 0.134
ENTROPY_PLATEAU_REFERENCE = 1.145

COMMANDS = ("identities", "ed", "dmrg", "freefermion", "analyze", "reproduce")
FIGURES = {
    "fig1": (0.0, 0.05, 0.1),
    "fig2": (0.05, 0.1),
    "fig3": (0.05, 0.1),
    "fig4": (0.0, 0.25, 0.5, 1.0, 2.0),
}
DESK_SCALE = {"half_length": 99, "m_max": 100}
PAPER_SCALE = {"half_length": 199, "m_max": 130}


class ConfigError(ValueError):
    pass


class NotConvergedError(RuntimeError):
    pass


def _defaults(command: str) -> dict:
    cfg = {"command": command, "output": "results"}
    if command == "identities":
        cfg.update(profile={"kind": "cosh", "lambda": 0.1}, chain={"half_length": 50})
    if command in ("ed", "dmrg", "freefermion"):
        cfg.update(profile={"kind": "cosh", "lambda": 0.1}, chain={"half_length": 5})
    if command in ("ed", "dmrg", "reproduce"):
        cfg["model"] = {"coupling": 1.0, "energy_offset": 0.0}
    if command == "ed":
        cfg["ed"] = {"sector": 0.0, "k": 1, "tol": 1e-10}
    if command in ("dmrg", "reproduce"):
        cfg["dmrg"] = dmrg.DmrgParams().to_dict()
        cfg["checkpoint"] = None
        cfg["resume"] = None
    if command == "freefermion":
        cfg["profile"] = {"kind": "exp", "lambda": 0.3}
        cfg["chain"] = {"half_length": 99}
        cfg["freefermion"] = {"hopping": 1.0, "staggered_gap": 0.0, "window_fraction": 0.2}
    if command == "analyze":
        cfg["analyze"] = {"input": None, "series": "center", "skip": analysis.DEFAULT_SKIP, "floor": analysis.NOISE_FLOOR}
    if command == "reproduce":
        cfg["reproduce"] = {"target": None, "lambdas": None, "paper_scale": False, "jobs": 1}
        cfg["chain"] = {"half_length": None}
        cfg["dmrg"]["m_max"] = None
    return cfg


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if key not in out:
            raise ConfigError(f"unknown config key {path + key!r}")
        if isinstance(out[key], dict) and isinstance(val, dict):
            out[key] = _merge(out[key], val, f"{path}{key}.")
        elif isinstance(out[key], dict):
            raise ConfigError(f"config key {path + key!r} must be an object")
        else:
            out[key] = val
    return out


def _flag_overrides(ns: argparse.Namespace) -> dict:
    o: dict = {}

    def put(section, key, value):
        if value is not None:
            if section is None:
                o[key] = value
            else:
                o.setdefault(section, {})[key] = value

    get = lambda name: getattr(ns, name, None)  # noqa: E731
    put(None, "output", get("output"))
    put("profile", "kind", get("profile"))
    put("profile", "lambda", get("lam"))
    if get("sites") is not None:
        if get("sites") < 2 or get("sites") % 2:
            raise ConfigError("--sites must be an even number >= 2")
        put("chain", "half_length", get("sites") // 2 - 1)
    put("chain", "half_length", get("half_length"))
    put("model", "coupling", get("coupling"))
    put("model", "energy_offset", get("energy_offset"))
    put("ed", "sector", get("sector"))
    put("ed", "k", get("k"))
    for flag, key in (("m", "m_max"), ("m_start", "m_start"), ("sweeps", "n_sweeps"), ("energy_tol", "energy_tol")):
        put("dmrg", key, get(flag))
    if get("truncation_log"):
        put("dmrg", "truncation_log", True)
    put(None, "checkpoint", get("checkpoint"))
    put(None, "resume", get("resume"))
    put("freefermion", "hopping", get("hopping"))
    put("freefermion", "staggered_gap", get("gap"))
    put("analyze", "input", get("input"))
    put("analyze", "series", get("series"))
    put("analyze", "skip", get("skip"))
    put("reproduce", "target", get("target"))
    put("reproduce", "lambdas", get("lambdas"))
    if get("paper_scale"):
        put("reproduce", "paper_scale", True)
    put("reproduce", "jobs", get("jobs"))
    return o


def resolve_config(ns: argparse.Namespace) -> dict:
    cfg = _defaults(ns.command)
    if getattr(ns, "config", None):
        try:
            doc = json.loads(Path(ns.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config file must hold a JSON object")
        if doc.get("command", ns.command) != ns.command:
            raise ConfigError(f"config file is for command {doc['command']!r}, not {ns.command!r}")
        doc = {k: v for k, v in doc.items() if k not in ("command", "format_version")}
        cfg = _merge(cfg, doc)
    cfg = _merge(cfg, _flag_overrides(ns))
    if ns.command == "reproduce":
        scale = PAPER_SCALE if cfg["reproduce"]["paper_scale"] else DESK_SCALE
        if cfg["chain"]["half_length"] is None:
            cfg["chain"]["half_length"] = scale["half_length"]
        if cfg["dmrg"]["m_max"] is None:
            cfg["dmrg"]["m_max"] = scale["m_max"]
        if cfg["reproduce"]["lambdas"] is None and cfg["reproduce"]["target"] in FIGURES:
            cfg["reproduce"]["lambdas"] = list(FIGURES[cfg["reproduce"]["target"]])
    validate(cfg)
    return cfg


def validate(cfg: dict) -> None:
    """Build every domain object once so bad values surface as ConfigError."""
    try:
        if "chain" in cfg:
            profiles.ChainSpec(cfg["chain"]["half_length"])
        if "profile" in cfg:
            profiles.DeformationProfile.from_dict(cfg["profile"])
        if "model" in cfg:
            profiles.BondModel(**cfg["model"])
        if "dmrg" in cfg:
            dmrg.DmrgParams(**cfg["dmrg"])
        if "freefermion" in cfg:
            ff = cfg["freefermion"]
            freefermion.FermionModel(ff["hopping"], ff["staggered_gap"])
            if not 0 < ff["window_fraction"] <= 1:
                raise ValueError("window_fraction must lie in (0, 1]")
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from None
    cmd = cfg["command"]
    if cmd in ("ed",):
        n = profiles.ChainSpec(cfg["chain"]["half_length"]).n_sites
        if n > exact.MAX_SITES:
            raise ConfigError(f"exact diagonalization is limited to {exact.MAX_SITES} sites")
        if not (isinstance(cfg["ed"]["k"], int) and cfg["ed"]["k"] >= 1):
            raise ConfigError("k must be a positive integer")
    if cmd == "identities":
        lam = cfg["profile"]["lambda"]
        if not lam > 0:
            raise ConfigError("identities need lambda > 0")
        if cfg["chain"]["half_length"] < 3:
            raise ConfigError("identities need half_length >= 3")
    if cmd == "analyze":
        a = cfg["analyze"]
        if not a["input"]:
            raise ConfigError("analyze needs --input")
        if a["series"] not in ("center", "bonds", "entropy"):
            raise ConfigError(f"unknown series {a['series']!r}")
    if cmd == "reproduce":
        r = cfg["reproduce"]
        if r["target"] not in FIGURES:
            raise ConfigError(f"reproduce target must be one of {sorted(FIGURES)}")
        n = profiles.ChainSpec(cfg["chain"]["half_length"]).n_sites
        if n > MAX_REPRODUCE_SITES or cfg["dmrg"]["m_max"] > MAX_REPRODUCE_M:
            raise ConfigError(f"reproduce is bounded by {MAX_REPRODUCE_SITES} sites and m <= {MAX_REPRODUCE_M}")
        if not r["lambdas"] or any(not (isinstance(x, (int, float)) and x >= 0) for x in r["lambdas"]):
            raise ConfigError("lambdas must be a non-empty list of non-negative numbers")
        if not (isinstance(r["jobs"], int) and r["jobs"] >= 1):
            raise ConfigError("jobs must be a positive integer")


# commands


def _objects(cfg):
    chain = profiles.ChainSpec(cfg["chain"]["half_length"])
    profile = profiles.DeformationProfile.from_dict(cfg["profile"])
    return chain, profile


def cmd_identities(cfg: dict) -> dict:
    lam, n = cfg["profile"]["lambda"], cfg["chain"]["half_length"]
    shift = profiles.verify_shift_identities(lam, n)
    rec = profiles.verify_recursions(lam, n)
    corner = profiles.corner_limit_check(n, [1e-2, 1e-3, 1e-4])
    summary = {"max_residual": max(shift, rec), "shift_residual": shift, "recursion_residual": rec, "corner_limit": corner}
    write_json(Path(cfg["output"]) / "identities.json", summary, cfg)
    return summary


def _bond_tsv(bonds, weights, values) -> str:
    lines = ["bond_j\tweight\tsz_sz"]
    lines += [f"{int(j)}\t{w!r}\t{float(v)!r}" for j, w, v in zip(bonds, weights, values)]
    return "\n".join(lines) + "\n"


def cmd_ed(cfg: dict) -> dict:
    chain, profile = _objects(cfg)
    model = profiles.BondModel(**cfg["model"])
    e = cfg["ed"]
    op = exact.build_hamiltonian(chain, profile, model, sz_total=e["sector"])
    res = exact.lowest_eigenpairs(op, k=e["k"], tol=e["tol"])
    out = Path(cfg["output"])
    spectrum = json.loads(res.to_json())
    spectrum["converged"] = bool(np.all(res.converged))
    ground = res.eigenvectors[:, 0]
    corr = exact.bond_correlations(ground, op.basis)
    spectrum["center_entropy"] = exact.entropy(exact.reduced_density_matrix(ground, op.basis, chain.half_length))
    write_json(out / "spectrum.json", spectrum, cfg)
    w = profiles.weight_vector(chain, profile)
    write_tsv(out / "bonds.tsv", _bond_tsv(chain.bonds(), w.values.tolist(), corr), cfg)
    if not spectrum["converged"]:
        raise NotConvergedError("Lanczos did not reach the requested tolerance")
    return spectrum


def dmrg_point(cfg: dict) -> dict:
    """One DMRG run written to ``cfg['output']``; returns a summary record."""
    chain, profile = _objects(cfg)
    model = profiles.BondModel(**cfg["model"])
    params = dmrg.DmrgParams(**cfg["dmrg"])
    out = Path(cfg["output"])
    hook = None
    if cfg.get("checkpoint"):
        path = Path(cfg["checkpoint"])
        hook = lambda st: checkpoint.save(st, path)  # noqa: E731
    if cfg.get("resume"):
        state = checkpoint.load(cfg["resume"])
        if (state.chain, state.profile.to_dict(), state.model) != (chain, profile.to_dict(), model):
            raise ConfigError("checkpoint does not match the configured chain, profile or model")
        state = dmrg.sweep_to_convergence(state, params, hook)
    else:
        state = dmrg.run_dmrg(chain, profile, model, params, hook)
    bonds = dmrg.measure_bond_correlations(state, force=True)
    center = dmrg.measure_center_correlations(state, force=True)
    w = profiles.weight_vector(chain, profile)
    write_tsv(out / "bonds.tsv", _bond_tsv(bonds.x, w.values.tolist(), bonds.y), cfg)
    write_tsv(out / "center.tsv", center.to_tsv(("distance", "abs_correlation")), cfg)
    summary = {
        "lambda": profile.lam,
        "kind": profile.kind.value,
        "n_sites": chain.n_sites,
        "energy": state.energy,
        "energy_history": state.energy_history,
        "sweeps": state.sweeps_done,
        "converged": state.converged,
        "center_entropy": dmrg.center_entropy(state),
        "entropy_log_base": state.entropy_log_base,
        "center_gap": state.center_gap,
        "max_truncation_error": max(state.truncation_error_per_cut.values(), default=0.0),
    }
    if params.truncation_log:
        summary["truncation_error_per_cut"] = {str(k): v for k, v in sorted(state.truncation_error_per_cut.items())}
    write_json(out / "dmrg.json", summary, cfg)
    return summary


def cmd_dmrg(cfg: dict) -> dict:
    summary = dmrg_point(cfg)
    if not summary["converged"]:
        raise NotConvergedError(f"DMRG energy did not converge in {summary['sweeps']} sweeps")
    return summary


def cmd_freefermion(cfg: dict) -> dict:
    chain, profile = _objects(cfg)
    ff = cfg["freefermion"]
    model = freefermion.FermionModel(ff["hopping"], ff["staggered_gap"])
    spec = freefermion.diagonalize(freefermion.assemble(chain, profile, model))
    out = Path(cfg["output"])
    write_tsv(out / "spectrum.tsv", freefermion.spectrum_tsv(spec), cfg)
    summary = {"n_levels": int(spec.eigenvalues.size), "half_filled_gap": freefermion.half_filled_gap(spec)}
    if profile.lam > 0 and profile.kind is profiles.Kind.EXP:
        window = freefermion.central_window(freefermion.positive_log_spacings(spec), ff["window_fraction"])
        summary["log_spacing_mean"] = float(window.mean())
        summary["log_spacing_spread_vs_lambda"] = freefermion.ladder_spread(window, profile.lam)
    if profile.lam == 0 and model.staggered_gap == 0:
        ref = freefermion.open_chain_levels(chain.n_sites, model.hopping)
        summary["max_deviation_from_open_chain"] = float(np.abs(spec.eigenvalues - ref).max())
    write_json(out / "freefermion.json", summary, cfg)
    return summary


def _read_series(path: str) -> analysis.ObservableSeries:
    return analysis.ObservableSeries.from_tsv(read_tsv_body(Path(path).read_text()))


def _center_fit(series: analysis.ObservableSeries, skip: int, floor: float):
    window = analysis.default_window(series, skip=skip, floor=floor)
    fit = analysis.fit_exponential(series, window)
    fit_y = fit.amplitude * np.exp(-series.x / fit.xi)
    return fit, fit_y


def cmd_analyze(cfg: dict) -> dict:
    a = cfg["analyze"]
    out = Path(cfg["output"])
    series = _read_series(a["input"])
    if a["series"] == "center":
        fit, fit_y = _center_fit(series, a["skip"], a["floor"])
        summary = fit.to_dict()
        write_tsv(out / "fit.tsv", series.to_tsv(("x", "y"), {"fit_y": fit_y}), cfg)
    elif a["series"] == "bonds":
        prof = analysis.oscillation_profile(series)
        summary = {"flatness": prof.flatness, "mean_amplitude": float(prof.amplitude.mean())}
        amp = analysis.ObservableSeries(prof.bonds, prof.amplitude)
        write_tsv(out / "oscillation.tsv", amp.to_tsv(("bond_j", "amplitude")), cfg)
    else:
        curve = analysis.entropy_curve(list(zip(series.x.tolist(), series.y.tolist())))
        summary = curve.to_dict()
    write_json(out / "analysis.json", summary, cfg)
    return summary


def _lambda_dir(lam: float) -> str:
    return f"lambda_{lam:g}"


def _point_config(cfg: dict, lam: float) -> dict:
    return {
        "command": "dmrg",
        "output": str(Path(cfg["output"]) / _lambda_dir(lam)),
        "chain": dict(cfg["chain"]),
        "profile": {"kind": "cosh", "lambda": float(lam)},
        "model": dict(cfg["model"]),
        "dmrg": dict(cfg["dmrg"]),
        "checkpoint": None,
        "resume": None,
    }


def _run_point(pcfg: dict) -> dict:
    with _thread_limit():
        return dmrg_point(pcfg)


def cmd_reproduce(cfg: dict) -> dict:
    r = cfg["reproduce"]
    lams = sorted(float(x) for x in r["lambdas"])
    points = [_point_config(cfg, lam) for lam in lams]
    if r["jobs"] > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=min(r["jobs"], len(points))) as pool:
            results = list(pool.map(_run_point, points))
    else:
        results = [dmrg_point(p) for p in points]
    out = Path(cfg["output"])
    target = r["target"]
    summary: dict = {"target": target, "points": results}
    if target == "fig1":
        rows = []
        for lam, p in zip(lams, points):
            series = _read_series(Path(p["output"]) / "bonds.tsv")
            rows.append((lam, analysis.oscillation_profile(series).flatness))
        summary["flatness"] = {f"{lam:g}": f for lam, f in rows}
        body = "lambda\tflatness\n" + "".join(f"{lam!r}\t{f!r}\n" for lam, f in rows)
        write_tsv(out / "flatness.tsv", body, cfg)
    elif target in ("fig2", "fig3"):
        rows, fits = [], {}
        for lam, p in zip(lams, points):
            series = _read_series(Path(p["output"]) / "center.tsv")
            try:
                fit, fit_y = _center_fit(series, analysis.DEFAULT_SKIP, analysis.NOISE_FLOOR)
            except ValueError as exc:
                fits[f"{lam:g}"] = {"error": str(exc)}
                continue
            fits[f"{lam:g}"] = fit.to_dict()
            write_tsv(Path(p["output"]) / "fit.tsv", series.to_tsv(("distance", "abs_correlation"), {"fit_y": fit_y}), cfg)
            if lam > 0:
                rows.append((lam, fit))
        summary["fits"] = fits
        if rows:
            prod = analysis.xi_lambda_product(rows)
            summary["xi_lambda"] = {"mean": prod["mean"], "spread": prod["spread"], "reference": XI_LAMBDA_REFERENCE}
            body = "lambda\txi\txi_lambda\n" + "".join(f"{lam!r}\t{xi!r}\t{p!r}\n" for lam, xi, p in prod["rows"])
            write_tsv(out / "xi_lambda.tsv", body, cfg)
    else:
        runs = [(lam, res["center_entropy"]) for lam, res in zip(lams, results)]
        body = "lambda\tentropy\n" + "".join(f"{lam!r}\t{s!r}\n" for lam, s in runs)
        write_tsv(out / "entropy.tsv", body, cfg)
        if len(runs) >= 2:
            curve = analysis.entropy_curve(runs)
            summary["entropy_curve"] = {**curve.to_dict(), "reference_plateau": ENTROPY_PLATEAU_REFERENCE}
    write_json(out / f"{target}.json", summary, cfg)
    bad = [res["lambda"] for res in results if not res["converged"]]
    if bad:
        raise NotConvergedError(f"DMRG did not converge for lambda in {bad}")
    return summary


HANDLERS = {
    "identities": cmd_identities,
    "ed": cmd_ed,
    "dmrg": cmd_dmrg,
    "freefermion": cmd_freefermion,
    "analyze": cmd_analyze,
    "reproduce": cmd_reproduce,
}


class _thread_limit:
    """Cap BLAS/OpenMP pools to ``HYPCHAIN_THREADS`` when it is set."""

    def __enter__(self):
        self._ctx = None
        raw = os.environ.get("HYPCHAIN_THREADS")
        if raw:
            try:
                n = int(raw)
            except ValueError:
                raise ConfigError(f"HYPCHAIN_THREADS must be a positive integer, got {raw!r}") from None
            if n < 1:
                raise ConfigError(f"HYPCHAIN_THREADS must be a positive integer, got {raw!r}")
            from threadpoolctl import threadpool_limits

            self._ctx = threadpool_limits(limits=n)
            self._ctx.__enter__()
        return self

    def __exit__(self, *exc):
        if self._ctx is not None:
            self._ctx.__exit__(*exc)
        return False


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hypchain", description="Deformed quantum chain toolkit.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("-o", "--output", help="output directory")

    chain = argparse.ArgumentParser(add_help=False)
    chain.add_argument("--half-length", type=int, help="N; the chain has 2N+2 sites")
    chain.add_argument("--sites", type=int, help="number of sites (even)")
    chain.add_argument("--profile", choices=[k.value for k in profiles.Kind])
    chain.add_argument("--lambda", dest="lam", type=float)

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--coupling", type=float, help="exchange J")
    model.add_argument("--energy-offset", type=float)

    dm = argparse.ArgumentParser(add_help=False)
    dm.add_argument("--m", type=int, help="maximum kept states")
    dm.add_argument("--m-start", type=int)
    dm.add_argument("--sweeps", type=int, help="maximum number of sweeps")
    dm.add_argument("--energy-tol", type=float)
    dm.add_argument("--truncation-log", action="store_true", default=None)

    sub.add_parser("identities", parents=[common, chain], help="check the coefficient identities")
    p = sub.add_parser("ed", parents=[common, chain, model], help="exact diagonalization")
    p.add_argument("--sector", type=float, help="total S^z")
    p.add_argument("-k", type=int, help="number of eigenpairs")
    p = sub.add_parser("dmrg", parents=[common, chain, model, dm], help="finite-system DMRG")
    p.add_argument("--checkpoint", help="write a checkpoint after every sweep")
    p.add_argument("--resume", help="continue from a checkpoint")
    p = sub.add_parser("freefermion", parents=[common, chain], help="one-body tight-binding spectrum")
    p.add_argument("--hopping", type=float)
    p.add_argument("--gap", type=float, help="staggered potential")
    p = sub.add_parser("analyze", parents=[common], help="fit or summarize a result TSV")
    p.add_argument("--input")
    p.add_argument("--series", choices=["center", "bonds", "entropy"])
    p.add_argument("--skip", type=int, help="shortest distances left out of the fit")
    p = sub.add_parser("reproduce", parents=[common, model, dm], help="figure pipelines")
    p.add_argument("target", choices=sorted(FIGURES))
    p.add_argument("--half-length", type=int)
    p.add_argument("--lambdas", type=float, nargs="+")
    p.add_argument("--paper-scale", action="store_true", default=None, help="400 sites, m=130")
    p.add_argument("--jobs", type=int, help="lambda points run in parallel")
    return parser


def _error(code: int, exc: BaseException) -> int:
    record = {"status": "error", "exit_code": code, "error": type(exc).__name__, "message": str(exc)}
    sys.stderr.write(json.dumps(record, sort_keys=True) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(ns.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        with _thread_limit():
            cfg = resolve_config(ns)
            summary = HANDLERS[cfg["command"]](cfg)
    except ConfigError as exc:
        return _error(EXIT_CONFIG, exc)
    except (NotConvergedError, ConvergenceError, dmrg.UnconvergedError) as exc:
        return _error(EXIT_UNCONVERGED, exc)
    except (OSError, checkpoint.CheckpointError) as exc:
        return _error(EXIT_IO, exc)
    except (ValueError, TypeError) as exc:
        return _error(EXIT_CONFIG, exc)
    sys.stdout.write(dumps({"status": "ok", "config": cfg, "result": summary}))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
