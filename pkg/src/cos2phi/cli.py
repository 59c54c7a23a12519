"""Batch front end: config-driven subcommands mirroring the main artifacts.

Subcommands
    spectrum         transition energies over an external-flux grid
    wavefunctions    charge and phase wavefunctions of the lowest states
    matrix-elements  normalized transition weights from the ground state
    disorder         charge dispersion and splitting versus asymmetry
    coherence        per-channel T1 / Tphi budget and combined T2
    instanton        minimum-action tunneling path and its reduction
    mathieu          toy-model dispersion versus the closed form
    converge         truncation-ladder convergence report

Exit codes: 0 success; 1 domain or configuration error; 2 numerical
non-convergence.  Every artifact carries a provenance comment block and a
checksum of its data section; re-running an unchanged config is a no-op
served from the artifact cache.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import __version__
from .cache import SolutionCache
from .config import ConfigError, RunConfig, load_config
from .constants import PhysicalConstants
from .model import BasisTruncation, BiasPoint, DimensionCapError

OUTPUT_ROOT_ENV = "COS2PHI_OUTPUT_ROOT"

_DOMAIN_ERRORS = (ConfigError, ValueError, DimensionCapError, KeyError)


def _numeric_errors():
    from .coherence import DerivativeError
    from .eigensolver import NonConvergenceError
    from .instanton import MinimizationError
    from .mathieu import TruncationError

    return (NonConvergenceError, DerivativeError, MinimizationError, TruncationError)


# ---------------------------------------------------------------------------
# artifact I/O
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return f"{v:.17g}"
    return str(v)


def write_csv(path: Path, header: list[str], rows, provenance: dict) -> None:
    """CSV with provenance comments and a checksum over the data section."""
    body_lines = [",".join(header)]
    for row in rows:
        body_lines.append(",".join(_fmt(v) for v in row))
    body = "\n".join(body_lines) + "\n"
    checksum = hashlib.sha256(body.encode()).hexdigest()
    with open(path, "w") as fh:
        fh.write(f"# provenance: {json.dumps(provenance, sort_keys=True)}\n")
        fh.write(f"# checksum: {checksum}\n")
        fh.write(body)


def write_json(path: Path, payload: dict, provenance: dict) -> None:
    doc = {"provenance": provenance, **payload}
    body = json.dumps(doc, sort_keys=True, indent=2, default=_fmt)
    with open(path, "w") as fh:
        fh.write(body + "\n")


def _out_dir(cfg: RunConfig, explicit: str | None) -> Path:
    if explicit:
        root = Path(explicit)
    elif cfg.raw.get("output_dir"):
        root = Path(cfg.raw["output_dir"])
    else:
        root = Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))
    root.mkdir(parents=True, exist_ok=True)
    return root


def _pmap(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


class _Runner:
    """Shared per-invocation state: config, cache, output dir, run log."""

    def __init__(self, subcommand, config_path, out, overrides, jobs, no_cache):
        self.subcommand = subcommand
        self.cfg = load_config(config_path, overrides)
        if jobs is not None:
            self.cfg.raw["jobs"] = int(jobs)
        if no_cache:
            self.cfg.raw["cache"] = False
        self.out = _out_dir(self.cfg, out)
        self.provenance = {**self.cfg.provenance(), "subcommand": subcommand}
        self.cache = SolutionCache(
            self.out / ".solutions", enabled=self.cfg.cache_enabled
        )
        self.marker = self.out / f"{subcommand}_done.json"

    def already_done(self) -> bool:
        if not self.cfg.cache_enabled or not self.marker.exists():
            return False
        try:
            info = json.loads(self.marker.read_text())
        except json.JSONDecodeError:
            return False
        if info.get("config_hash") != self.cfg.config_hash:
            return False
        return all((self.out / a).exists() for a in info.get("artifacts", []))

    def finish(self, artifacts: list[str]) -> None:
        self.marker.write_text(
            json.dumps(
                {
                    "config_hash": self.cfg.config_hash,
                    "subcommand": self.subcommand,
                    "artifacts": artifacts,
                },
                sort_keys=True,
            )
        )
        log = {
            "subcommand": self.subcommand,
            "config_hash": self.cfg.config_hash,
            "diagonalizations": self.cache.misses,
            "cache_hits": self.cache.hits,
            "artifacts": artifacts,
        }
        (self.out / f"{self.subcommand}_runlog.json").write_text(
            json.dumps(log, sort_keys=True, indent=2) + "\n"
        )
        click.echo(
            f"{self.subcommand}: wrote {', '.join(artifacts)} "
            f"({self.cache.misses} diagonalizations, {self.cache.hits} cache hits)"
        )

    def skip(self) -> None:
        log = {
            "subcommand": self.subcommand,
            "config_hash": self.cfg.config_hash,
            "diagonalizations": 0,
            "cache_hits": 0,
            "artifact_cache_hit": True,
        }
        (self.out / f"{self.subcommand}_runlog.json").write_text(
            json.dumps(log, sort_keys=True, indent=2) + "\n"
        )
        click.echo(f"{self.subcommand}: artifacts up to date (cache hit)")


def _common(fn):
    fn = click.option("--config", "config_path", type=click.Path(exists=True),
                      default=None, help="YAML run configuration")(fn)
    fn = click.option("--out", default=None, help="output directory")(fn)
    fn = click.option("--set", "overrides", multiple=True,
                      help="dotted-path config override, e.g. circuit.delta_L=0.6")(fn)
    fn = click.option("--jobs", type=int, default=None, help="worker pool size")(fn)
    fn = click.option("--no-cache", is_flag=True, help="disable all caching")(fn)
    return fn


def _run(subcommand, impl, config_path, out, overrides, jobs, no_cache):
    try:
        runner = _Runner(subcommand, config_path, out, overrides, jobs, no_cache)
    except _DOMAIN_ERRORS as exc:
        _emit_diagnostic(None, subcommand, "domain", exc)
        sys.exit(1)
    if runner.already_done():
        runner.skip()
        return
    try:
        artifacts = impl(runner)
    except _numeric_errors() as exc:
        _emit_diagnostic(runner.out, subcommand, "non-convergence", exc)
        sys.exit(2)
    except _DOMAIN_ERRORS as exc:
        _emit_diagnostic(runner.out, subcommand, "domain", exc)
        sys.exit(1)
    runner.finish(artifacts)


def _emit_diagnostic(out_dir, subcommand, kind, exc) -> None:
    diag = {
        "subcommand": subcommand,
        "error_kind": kind,
        "error_type": type(exc).__name__,
        "message": str(exc),
        "traceback": traceback.format_exc(limit=6),
    }
    sys.stderr.write(json.dumps(diag, sort_keys=True) + "\n")
    if out_dir is not None:
        (Path(out_dir) / f"{subcommand}_diagnostics.json").write_text(
            json.dumps(diag, sort_keys=True, indent=2) + "\n"
        )


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Simulator for the capacitively shunted pair-tunneling qubit."""


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------

def _spectrum_point(args):
    from .analysis import solve_circuit

    params, phi, ng, trunc_t, k, dense_threshold, seed = args
    tr = BasisTruncation(*trunc_t)
    ls = solve_circuit(params, BiasPoint(phi, ng), tr, k=k,
                       dense_threshold=dense_threshold, seed=seed)
    labels = [f"{l.m}{l.fluxon}" for l in ls.labels]
    return ls.energies, labels


@main.command()
@_common
def spectrum(config_path, out, overrides, jobs, no_cache):
    """Transition energies versus external flux."""

    def impl(r: _Runner):
        cfg = r.cfg
        sw = cfg.section("sweep")
        grid = np.linspace(float(sw["flux_start"]), float(sw["flux_stop"]),
                           int(sw["flux_points"]))
        k = int(sw["k"])
        if cfg.jobs > 1:
            args = [
                (cfg.circuit, float(p), cfg.bias.N_g, cfg.truncation.as_tuple(),
                 k, cfg.dense_threshold, cfg.seed)
                for p in grid
            ]
            results = _pmap(_spectrum_point, args, cfg.jobs)
            r.cache.misses += len(results)  # workers bypass the store
            rows = []
            for p, (energies, labels) in zip(grid, results):
                trans = energies - energies[0]
                rows.append([p, *energies, *trans, *labels])
        else:
            rows = []
            for p in grid:
                ls = r.cache.get_or_solve(
                    cfg.circuit, BiasPoint(float(p), cfg.bias.N_g),
                    cfg.truncation, k, seed=cfg.seed,
                    dense_threshold=cfg.dense_threshold,
                )
                trans = ls.energies - ls.energies[0]
                labels = [f"{l.m}{l.fluxon}" for l in ls.labels]
                rows.append([float(p), *ls.energies, *trans, *labels])
        header = (
            ["phi_ext"]
            + [f"E{i}" for i in range(k)]
            + [f"T{i}" for i in range(k)]
            + [f"label{i}" for i in range(k)]
        )
        write_csv(r.out / "spectrum.csv", header, rows, r.provenance)
        return ["spectrum.csv"]

    _run("spectrum", impl, config_path, out, overrides, jobs, no_cache)


# ---------------------------------------------------------------------------
# wavefunctions
# ---------------------------------------------------------------------------

@main.command()
@_common
def wavefunctions(config_path, out, overrides, jobs, no_cache):
    """Charge and phase wavefunctions of the four lowest states."""

    def impl(r: _Runner):
        from .analysis import wavefunction_charge, wavefunction_phase

        cfg = r.cfg
        ls = r.cache.get_or_solve(
            cfg.circuit, cfg.bias, cfg.truncation, 4,
            seed=cfg.seed, dense_threshold=cfg.dense_threshold,
        )
        artifacts = []
        rows = []
        for idx in range(4):
            Nvals, amps = wavefunction_charge(ls, idx)
            for Nv, a in zip(Nvals, amps):
                rows.append([idx, int(Nv), a.real, a.imag, abs(a) ** 2])
        write_csv(
            r.out / "wavefunction_charge.csv",
            ["state", "N", "re", "im", "weight"],
            rows,
            r.provenance,
        )
        artifacts.append("wavefunction_charge.csv")
        for idx in range(4):
            vg, pg, field = wavefunction_phase(ls, idx)
            rows = []
            for i, v in enumerate(vg):
                for j, p in enumerate(pg):
                    rows.append([v, p, field[i, j].real, field[i, j].imag])
            name = f"wavefunction_phase_state{idx}.csv"
            write_csv(r.out / name, ["vphi", "phi", "re", "im"], rows, r.provenance)
            artifacts.append(name)
        return artifacts

    _run("wavefunctions", impl, config_path, out, overrides, jobs, no_cache)


# ---------------------------------------------------------------------------
# matrix elements
# ---------------------------------------------------------------------------

@main.command("matrix-elements")
@_common
def matrix_elements(config_path, out, overrides, jobs, no_cache):
    """Normalized transition weights from the ground state."""

    def impl(r: _Runner):
        from .analysis import normalized_matrix_elements

        cfg = r.cfg
        k = int(cfg.section("sweep")["k"])
        ls = r.cache.get_or_solve(
            cfg.circuit, cfg.bias, cfg.truncation, k,
            seed=cfg.seed, dense_threshold=cfg.dense_threshold,
        )
        eta2 = normalized_matrix_elements(ls, "eta")
        phi2 = normalized_matrix_elements(ls, "phi")
        rows = []
        for lab in ls.labels:
            i = lab.index
            rows.append(
                [i, lab.m, lab.fluxon, lab.parity, ls.energies[i],
                 eta2[i], phi2[i]]
            )
        write_csv(
            r.out / "matrix_elements.csv",
            ["state", "m", "fluxon", "parity", "energy", "eta2", "phi2"],
            rows,
            r.provenance,
        )
        return ["matrix_elements.csv"]

    _run("matrix-elements", impl, config_path, out, overrides, jobs, no_cache)


# ---------------------------------------------------------------------------
# disorder
# ---------------------------------------------------------------------------

@main.command()
@_common
def disorder(config_path, out, overrides, jobs, no_cache):
    """Charge dispersion and splitting versus one asymmetry parameter."""

    def impl(r: _Runner):
        from .analysis import disorder_sweep

        cfg = r.cfg
        sw = cfg.section("sweep")
        ng_points = int(sw["ng_points"])
        res = disorder_sweep(
            cfg.circuit,
            str(sw["kind"]),
            [float(d) for d in sw["deltas"]],
            phi_ext=cfg.bias.phi_ext,
            trunc=None,  # escalation schedule keeps tiny dispersions honest
            ng_grid=np.linspace(0.0, 1.0, ng_points),
            dense_threshold=cfg.dense_threshold,
            seed=cfg.seed,
            cache=r.cache,
        )
        rows = [
            [d, res.derived["eps"][i], res.derived["dE"][i],
             res.derived["abs_dE"][i], bool(res.derived["unresolved"][i])]
            for i, d in enumerate(res.grid)
        ]
        write_csv(
            r.out / "disorder.csv",
            ["delta", "eps", "dE", "abs_dE", "unresolved"],
            rows,
            r.provenance,
        )
        write_json(
            r.out / "disorder.json",
            {
                "kind": str(sw["kind"]),
                "eps_monotone_decreasing": res.derived["eps_monotone_decreasing"],
                "dE_monotone_increasing": res.derived["dE_monotone_increasing"],
            },
            r.provenance,
        )
        return ["disorder.csv", "disorder.json"]

    _run("disorder", impl, config_path, out, overrides, jobs, no_cache)


# ---------------------------------------------------------------------------
# coherence
# ---------------------------------------------------------------------------

@main.command()
@_common
def coherence(config_path, out, overrides, jobs, no_cache):
    """Relaxation and dephasing budget at the configured operating point."""

    def impl(r: _Runner):
        from .coherence import NoiseChannel, default_channels, full_report

        cfg = r.cfg
        ch_cfg = cfg.section("channels")
        constants = PhysicalConstants(temperature=cfg.temperature,
                                      x_qp=float(ch_cfg["x_qp"]))
        channels = default_channels()
        channels["capacitive"] = NoiseChannel("capacitive", float(ch_cfg["q_cap"]), 6e9)
        channels["purcell"] = NoiseChannel("purcell", float(ch_cfg["q_cap"]), 6e9)
        channels["shot"] = NoiseChannel("shot", float(ch_cfg["q_cap"]), 6e9)
        channels["inductive"] = NoiseChannel("inductive", float(ch_cfg["q_ind"]), 0.5e9)
        channels["flux"] = NoiseChannel("flux", float(ch_cfg["sqrt_A_flux"]))
        channels["critical_current"] = NoiseChannel(
            "critical_current", float(ch_cfg["sqrt_A_epsJ_rel"])
        )
        channels["quasiparticle"] = NoiseChannel(
            "quasiparticle", 1.0, extras={"x_qp": float(ch_cfg["x_qp"])}
        )
        enabled = set(ch_cfg["enabled"])
        channels = {k: v for k, v in channels.items() if k in enabled}
        ng_points = int(cfg.section("sweep")["ng_points"])
        report = full_report(
            cfg.circuit, cfg.bias, cfg.truncation,
            constants=constants, channels=channels,
            ng_grid=np.linspace(0.0, 1.0, ng_points),
            dense_threshold=cfg.dense_threshold,
            cache=r.cache,
        )
        rows = [["T1", k, v] for k, v in sorted(report.t1.items())]
        rows += [["Tphi", k, v] for k, v in sorted(report.tphi.items())]
        rows += [
            ["T1", "total", report.t1_total],
            ["Tphi", "total", report.tphi_total],
            ["T2", "total", report.t2],
        ]
        write_csv(
            r.out / "coherence.csv",
            ["type", "channel", "time_ms"],
            rows,
            r.provenance,
        )
        write_json(r.out / "coherence.json", report.as_dict(), r.provenance)
        return ["coherence.csv", "coherence.json"]

    _run("coherence", impl, config_path, out, overrides, jobs, no_cache)


# ---------------------------------------------------------------------------
# instanton
# ---------------------------------------------------------------------------

@main.command()
@_common
def instanton(config_path, out, overrides, jobs, no_cache):
    """Minimum-action tunneling path and its Fourier reduction."""

    def impl(r: _Runner):
        from .hamiltonians import effective_params
        from .instanton import reduce_to_effective, solve_instanton

        cfg = r.cfg
        ic = cfg.section("instanton")
        path = solve_instanton(
            cfg.circuit, cfg.bias,
            n_beads=int(ic["n_beads"]), max_outer=int(ic["max_outer"]),
        )
        write_csv(
            r.out / "instanton_path.csv",
            ["tau", "vphi", "phi", "theta"],
            [list(map(float, row)) for row in path.samples],
            r.provenance,
        )
        eff_num = reduce_to_effective(cfg.circuit, cfg.bias, path)
        eff_approx = reduce_to_effective(cfg.circuit, cfg.bias, "approx")
        eff_printed = effective_params(cfg.circuit, cfg.bias, "extended")
        write_json(
            r.out / "instanton.json",
            {
                "action": path.action,
                "endpoint_offset": path.endpoint_offset,
                "residual": path.residual,
                "endpoints": [list(map(float, e)) for e in path.endpoints],
                "fourier_numeric_path": list(eff_num.coefficients()),
                "fourier_approx_path": list(eff_approx.coefficients()),
                "fourier_printed_extended": list(eff_printed.coefficients()),
            },
            r.provenance,
        )
        return ["instanton_path.csv", "instanton.json"]

    _run("instanton", impl, config_path, out, overrides, jobs, no_cache)


# ---------------------------------------------------------------------------
# mathieu
# ---------------------------------------------------------------------------

@main.command()
@_common
def mathieu(config_path, out, overrides, jobs, no_cache):
    """Toy-model dispersion: exact bands versus the closed form."""

    def impl(r: _Runner):
        from .hamiltonians import ToyParams
        from .mathieu import asymptotic_dispersion, exact_dispersion

        cfg = r.cfg
        mc = cfg.section("mathieu")
        E_C = float(mc["E_C"])
        rows = []
        for ratio in mc["ratios"]:
            tp = ToyParams(E_J=float(ratio) * E_C, E_C=E_C,
                           N0_toy=int(mc["N0_toy"]))
            ex = exact_dispersion(tp, 0)
            asym = asymptotic_dispersion(tp, 0)
            rel = abs(ex.eps_k - asym.eps_k) / abs(asym.eps_k)
            rows.append([float(ratio), ex.eps_k, asym.eps_k, rel])
        write_csv(
            r.out / "mathieu.csv",
            ["EJ_over_EC", "eps0_exact", "eps0_asymptotic", "rel_err"],
            rows,
            r.provenance,
        )
        return ["mathieu.csv"]

    _run("mathieu", impl, config_path, out, overrides, jobs, no_cache)


# ---------------------------------------------------------------------------
# converge
# ---------------------------------------------------------------------------

@main.command()
@_common
def converge(config_path, out, overrides, jobs, no_cache):
    """Truncation-ladder convergence of the lowest energies."""

    def impl(r: _Runner):
        from .eigensolver import DENSE_THRESHOLD, convergence_ladder

        cfg = r.cfg
        cc = cfg.section("converge")
        levels = [BasisTruncation(*map(int, lv)) for lv in cc["levels"]]
        rep = convergence_ladder(
            cfg.circuit, cfg.bias, levels, k=int(cc["k"]),
            tolerance=float(cc["tolerance"]),
            dense_threshold=(cfg.dense_threshold if cfg.dense_threshold is not None
                             else DENSE_THRESHOLD),
        )
        rows = []
        for i, lv in enumerate(rep.levels):
            row = [str(lv.as_tuple()).replace(",", ";"), *rep.energies[i]]
            rows.append(row)
        k = int(cc["k"])
        write_csv(
            r.out / "converge.csv",
            ["level"] + [f"E{i}" for i in range(k)],
            rows,
            r.provenance,
        )
        write_json(
            r.out / "converge.json",
            {
                "deltas": [list(map(float, d)) for d in rep.deltas],
                "converged": rep.converged,
                "tolerance": rep.tolerance,
            },
            r.provenance,
        )
        return ["converge.csv", "converge.json"]

    _run("converge", impl, config_path, out, overrides, jobs, no_cache)


if __name__ == "__main__":
    main()
