"""Command-line front end.

Subcommands: validate-basis, coeffs, trace, simulate, ensemble,
selftest.  Exit codes: 0 success, 1 validation failure, 2 runtime
error, 64 usage.  Every output starts with a header (version, seed,
full resolved config) so a result file alone reproduces its run.  CSV
uses '.' decimals and re,im column pairs for complex values; JSON
records are line-delimited.  Relative output paths resolve against
$BELLJUMP_OUTDIR when it is set.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, parse_config, serialize
from .errors import (
    BelljumpError,
    InsufficientEvents,
    ParseError,
    ValidationError,
)
from .jump_process import CoefficientTrack, VacuumInterval
from .params import PhysParams, canonical_params
from .spinor_basis import from_spherical
from .trajectory import (
    Absorbed,
    LeftInnerRegion,
    SphericalState,
    TimeExhausted,
    emit_trajectory,
    integrate,
)
from .wavefunction import ModelFamily, ModelWavefunction, current_coeffs

USAGE_EXIT = 64


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; the contract reserves 2 for runtime
    def error(self, message):
        raise _UsageError(message)


def _complex_arg(raw: str) -> complex:
    parts = raw.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 're,im', got {raw!r}")
    return complex(float(parts[0]), float(parts[1]))


def _build_parser() -> _Parser:
    parser = _Parser(prog="belljump", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("validate-basis", help="dump boundary-lemma residuals")
    p.add_argument("--order", type=int, default=32, help="quadrature order")
    p.add_argument("--points", type=int, default=100, help="random sphere points")
    p.add_argument("--qs", type=int, default=5, help="random q values")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="CSV path (default stdout)")

    p = sub.add_parser("coeffs", help="print current coefficients as JSON")
    p.add_argument("--config", help="read q and amplitudes from a config file")
    p.add_argument("--q", type=float)
    p.add_argument("--c-minus", type=_complex_arg, default=1 + 0j, metavar="RE,IM")
    p.add_argument("--c-plus", type=_complex_arg, default=1j, metavar="RE,IM")
    p.add_argument("--output")

    p = sub.add_parser("trace", help="write one trajectory as CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--output")

    p = sub.add_parser("simulate", help="run one path, emit JSON event records")
    p.add_argument("--config", required=True)
    p.add_argument("--output")
    p.add_argument("--trace-dir", help="also write per-flight CSV traces here")

    p = sub.add_parser("ensemble", help="Monte Carlo ensemble summary")
    p.add_argument("--config", required=True)
    p.add_argument("--output", help="directory for summary + histograms")

    p = sub.add_parser("selftest", help="run the acceptance suite")
    p.add_argument(
        "--only",
        help="comma-separated criterion numbers (default: all)",
    )
    return parser


# ---------------------------------------------------------------------
# shared plumbing
# ---------------------------------------------------------------------

def _resolve(path_str: str | None) -> Path | None:
    if path_str is None:
        return None
    path = Path(path_str)
    outdir = os.environ.get("BELLJUMP_OUTDIR")
    if outdir and not path.is_absolute():
        path = Path(outdir) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _load_config(path_str: str) -> RunConfig:
    path = Path(path_str)
    if not path.exists():
        raise ValidationError(f"config file not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"))


def _csv_header(cfg: RunConfig | None, seed) -> list[str]:
    lines = [f"# belljump {__version__}", f"# seed = {seed}"]
    if cfg is not None:
        lines.append("# config:")
        lines.extend("#   " + line for line in serialize(cfg).splitlines())
    return lines


def _json_header(cfg: RunConfig | None, seed) -> str:
    record = {"record": "header", "version": __version__, "seed": seed}
    if cfg is not None:
        record["config"] = serialize(cfg)
    return json.dumps(record)


class _Sink:
    """stdout or a file, with a uniform line writer."""

    def __init__(self, path: Path | None):
        self.path = path
        self._fh = open(path, "w", encoding="utf-8") if path else sys.stdout

    def line(self, text: str) -> None:
        self._fh.write(text + "\n")

    def close(self) -> None:
        if self.path:
            self._fh.close()


def _require_seed(cfg: RunConfig) -> int:
    if cfg.run.seed is None:
        raise ValidationError("run.seed is mandatory for stochastic commands")
    return cfg.run.seed


def _model_family(cfg: RunConfig) -> ModelFamily:
    mc = cfg.model
    sub = (mc.s_minus, mc.s_plus) if mc.subleading else (0j, 0j)
    return ModelFamily(
        cfg.params, r_cut=mc.r_cut, subleading_amp=sub, frozen=mc.frozen
    )


def _build_track(cfg: RunConfig) -> CoefficientTrack:
    tc = cfg.track
    if tc.kind == "constant":
        return CoefficientTrack.constant(
            cfg.params, tc.c_minus, tc.c_plus, tc.psi0, tc.t_start, tc.t_end, tc.n
        )
    if tc.kind == "balanced":
        return CoefficientTrack.balanced_constant_flux(
            cfg.params, tc.c_minus, tc.c_plus, tc.p0_init, tc.t_start, tc.t_end, tc.n
        )
    if tc.kind == "grid":
        return CoefficientTrack(
            cfg.params,
            np.array(tc.times),
            np.array(tc.c_minus_grid),
            np.array(tc.c_plus_grid),
            np.array(tc.psi0_grid),
        )
    rows = np.loadtxt(tc.file, delimiter=",", comments="#", ndmin=2)
    if rows.shape[1] != 7:
        raise ValidationError(
            "track file needs 7 columns: t, c_minus re,im, c_plus re,im, psi0 re,im"
        )
    return CoefficientTrack(
        cfg.params,
        rows[:, 0],
        rows[:, 1] + 1j * rows[:, 2],
        rows[:, 3] + 1j * rows[:, 4],
        rows[:, 5] + 1j * rows[:, 6],
    )


def _window(cfg: RunConfig, track: CoefficientTrack) -> tuple[float, float]:
    t_a = max(cfg.run.t0, track.t_start)
    t_b = cfg.run.t_end if cfg.run.t_end is not None else track.t_end
    t_b = min(t_b, track.t_end)
    if not t_b > t_a:
        raise ValidationError(f"empty run window [{t_a!r}, {t_b!r}]")
    return t_a, t_b


# ---------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------

def _cmd_validate_basis(ns) -> int:
    from .acceptance import lemma_residual_rows

    rows, max_resid = lemma_residual_rows(
        seed=ns.seed, n_points=ns.points, n_q=ns.qs, order=ns.order
    )
    sink = _Sink(_resolve(ns.output))
    try:
        for line in _csv_header(None, ns.seed):
            sink.line(line)
        sink.line("q,m_tilde,kappa_tilde,family,quantity,sign_a,sign_b,check,residual")
        for r in rows:
            sink.line(
                f"{r['q']!r},{r['m_tilde']!r},{r['kappa_tilde']},{r['family']},"
                f"{r['quantity']},{r['sign_a']},{r['sign_b']},{r['check']},"
                f"{r['residual']:.3e}"
            )
    finally:
        sink.close()
    print(f"max |residual| = {max_resid:.3e} over {len(rows)} rows")
    return 0 if max_resid < 1e-10 else 1


def _cmd_coeffs(ns) -> int:
    if ns.config:
        cfg = _load_config(ns.config)
        params = cfg.params
        track = _build_track(cfg)
        cm, cp = track.coefficients(track.t_start)
        header_cfg = cfg
    else:
        if ns.q is None:
            raise _UsageError("coeffs needs --config or --q")
        params = canonical_params(ns.q)
        cm, cp = ns.c_minus, ns.c_plus
        header_cfg = None
    cc = current_coeffs(params, cm, cp)
    sink = _Sink(_resolve(ns.output))
    try:
        sink.line(_json_header(header_cfg, None))
        sink.line(
            json.dumps(
                {
                    "record": "coeffs",
                    "q": params.q,
                    "B": params.B,
                    "c_minus": [cm.real, cm.imag],
                    "c_plus": [cp.real, cp.imag],
                    "C_r": cc.C_r,
                    "Cphi_leading": cc.Cphi_leading,
                    "Cphi_mid": cc.Cphi_mid,
                    "Cphi_sub": cc.Cphi_sub,
                    "rho_leading": cc.rho_leading,
                    "rho_mid": cc.rho_mid,
                }
            )
        )
    finally:
        sink.close()
    return 0


def _trace_rows(segment, decimation: int):
    n = len(segment.t)
    keep = sorted(set(range(0, n, decimation)) | {n - 1})
    for i in keep:
        t = float(segment.t[i])
        r = float(segment.r[i])
        th = float(segment.theta[i])
        ph = float(segment.phi[i])
        x, y, z = (float(v) for v in from_spherical(r, th, ph % (2.0 * math.pi)))
        yield f"{t!r},{r!r},{th!r},{ph!r},{x!r},{y!r},{z!r}"


def _cmd_trace(ns) -> int:
    cfg = _load_config(ns.config)
    track = _build_track(cfg)
    run = cfg.run
    cm, cp = track.coefficients(run.t0)
    mc = cfg.model
    sub = (mc.s_minus, mc.s_plus) if mc.subleading else (0j, 0j)
    model = ModelWavefunction(cfg.params, cm, cp, mc.r_cut, sub)
    kwargs = {}
    if run.t_end is not None:
        kwargs["t_end"] = run.t_end
    if mc.r_min is not None:
        kwargs["r_min"] = mc.r_min
    if run.r0 is not None:
        # start at a given radius (ingoing runs trace to absorption)
        segment = integrate(
            model,
            SphericalState(t=run.t0, r=run.r0, theta=run.theta0, phi=run.phi0),
            t_end=run.t_end if run.t_end is not None else math.inf,
            tol=run.tol,
            r_min=mc.r_min,
        )
    else:
        segment = emit_trajectory(
            model,
            run.t0,
            run.theta0,
            run.phi0,
            r_seed=run.r_seed,
            tol=run.tol,
            **kwargs,
        )
    out = _resolve(ns.output if ns.output else run.output)
    sink = _Sink(out)
    try:
        for line in _csv_header(cfg, run.seed):
            sink.line(line)
        sink.line("t,r,theta,phi_unwrapped,x,y,z")
        for row in _trace_rows(segment, run.decimation):
            sink.line(row)
    finally:
        sink.close()
    terminal = type(segment.terminal).__name__
    where = out if out else "stdout"
    print(
        f"trace: {len(segment.t)} samples, terminal {terminal}, -> {where}",
        file=sys.stderr,
    )
    return 0


def _event_records(path):
    for span in path.vacuum_spans:
        yield {"record": "vacuum_span", "t_start": span[0], "t_end": span[1]}
    for event in path.events:
        if hasattr(event, "theta0"):
            yield {
                "record": "emission",
                "t0": event.t0,
                "theta0": event.theta0,
                "phi0": event.phi0,
            }
        else:
            yield {"record": "absorption", "t0": event.t0}
    for seg in path.segments:
        terminal = seg.terminal
        if isinstance(terminal, Absorbed):
            term = {"kind": "absorbed", "t0": terminal.t0}
        elif isinstance(terminal, LeftInnerRegion):
            term = {"kind": "left_inner_region"}
        elif isinstance(terminal, TimeExhausted):
            term = {"kind": "time_exhausted"}
        else:
            term = {"kind": type(terminal).__name__}
        yield {
            "record": "flight",
            "t_start": float(seg.t[0]),
            "t_end": float(seg.t[-1]),
            "samples": len(seg.t),
            "n_accepted": seg.n_accepted,
            "n_rejected": seg.n_rejected,
            "terminal": term,
            "probe_crossings": [
                {"t": pc.t, "r": pc.r, "direction": pc.direction}
                for pc in seg.probe_crossings
            ],
        }


def _cmd_simulate(ns) -> int:
    from .ensemble import draw_path, make_initial_sampler
    from .trajectory import R_MIN_FRACTION

    cfg = _load_config(ns.config)
    seed = _require_seed(cfg)
    family = _model_family(cfg)
    track = _build_track(cfg)
    t_span = _window(cfg, track)
    r_min = cfg.model.r_min
    if r_min is None:
        r_min = R_MIN_FRACTION * family.r_cut
    probes = (cfg.run.probe_radius,) if cfg.run.probe_radius else ()
    vac_weight, sampler = make_initial_sampler(family, track, t_span[0], r_min)
    path = draw_path(
        family,
        track,
        t_span,
        seed,
        0,
        vac_weight=vac_weight,
        sampler=sampler,
        r_min=r_min,
        tol=cfg.run.tol,
        probe_radii=probes,
    )
    out = _resolve(ns.output if ns.output else cfg.run.output)
    sink = _Sink(out)
    try:
        sink.line(_json_header(cfg, seed))
        if not path.entries:
            sink.line(json.dumps({"record": "parked"}))
        for record in _event_records(path):
            sink.line(json.dumps(record))
        sink.line(
            json.dumps(
                {
                    "record": "end",
                    "t_span": list(path.t_span),
                    "n_emissions": len(path.emissions),
                    "n_absorptions": len(path.absorptions),
                }
            )
        )
    finally:
        sink.close()
    if ns.trace_dir:
        trace_dir = _resolve(str(Path(ns.trace_dir) / "x")).parent
        for i, seg in enumerate(path.segments):
            with open(trace_dir / f"flight_{i:03d}.csv", "w") as fh:
                for line in _csv_header(cfg, seed):
                    fh.write(line + "\n")
                fh.write("t,r,theta,phi_unwrapped,x,y,z\n")
                for row in _trace_rows(seg, cfg.run.decimation):
                    fh.write(row + "\n")
    return 0


def _hist_lines(name, values, lo, hi, bins):
    counts, edges = np.histogram(np.asarray(values), bins=bins, range=(lo, hi))
    for k in range(bins):
        yield (
            f"{name},{float(edges[k])!r},{float(edges[k + 1])!r},{int(counts[k])}"
        )


def _cmd_ensemble(ns) -> int:
    from .ensemble import (
        angle_uniformity_test,
        flux_report,
        run_ensemble,
        sector0_comparison,
    )

    cfg = _load_config(ns.config)
    seed = _require_seed(cfg)
    family = _model_family(cfg)
    track = _build_track(cfg)
    t_span = _window(cfg, track)
    stats = run_ensemble(
        family,
        track,
        cfg.run.n_paths,
        t_span,
        seed,
        time_grid_n=cfg.run.time_grid_n,
        tol=cfg.run.tol,
        r_min=cfg.model.r_min,
        probe_radius=cfg.run.probe_radius,
        snapshot_time=cfg.run.snapshot_time,
    )
    outdir = ns.output if ns.output else (cfg.run.output or ".")
    summary_path = _resolve(str(Path(outdir) / "ensemble_summary.json"))
    hist_path = _resolve(str(Path(outdir) / "ensemble_hist.csv"))

    records = []
    comparison = sector0_comparison(stats, track)
    records.append(
        {
            "record": "occupancy",
            "times": stats.time_grid.tolist(),
            "p0_hat": stats.p0_hat.tolist(),
            "expected": comparison.expected.tolist(),
            "z_scores": comparison.z_scores.tolist(),
        }
    )
    records.append(
        {
            "record": "sector0",
            "fraction_exceeding": comparison.fraction_exceeding,
            "passed": comparison.passed,
        }
    )
    if stats.probe_radius is not None and track.constant_coefficients:
        fr = flux_report(stats, track)
        records.append(
            {
                "record": "flux",
                "r_probe": stats.probe_radius,
                "estimate": fr.estimate,
                "expected": fr.expected,
                "sigma": fr.sigma,
                "z_score": fr.z_score,
                "passed": fr.passed,
            }
        )
    try:
        ar = angle_uniformity_test(stats)
        records.append(
            {
                "record": "emission_angles",
                "n_events": ar.n_events,
                "chi2": ar.chi2,
                "dof": ar.dof,
                "chi2_p_value": ar.chi2_p_value,
                "ks_p_value": ar.ks_p_value,
                "passed": ar.passed,
            }
        )
    except InsufficientEvents as exc:
        records.append({"record": "emission_angles", "skipped": str(exc)})
    records.append(
        {
            "record": "totals",
            "n_paths": stats.n_paths,
            "n_emissions": len(stats.emission_times),
            "n_absorptions": len(stats.absorption_times),
        }
    )

    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write(_json_header(cfg, seed) + "\n")
        for record in records:
            fh.write(json.dumps(record) + "\n")
    with open(hist_path, "w", encoding="utf-8") as fh:
        for line in _csv_header(cfg, seed):
            fh.write(line + "\n")
        fh.write("table,lo,hi,count\n")
        t_a, t_b = t_span
        for line in _hist_lines("emission_time", stats.emission_times, t_a, t_b, 20):
            fh.write(line + "\n")
        for line in _hist_lines(
            "absorption_time", stats.absorption_times, t_a, t_b, 20
        ):
            fh.write(line + "\n")
        for line in _hist_lines(
            "emission_cos_theta", stats.emission_cos_theta, -1.0, 1.0, 10
        ):
            fh.write(line + "\n")
        for line in _hist_lines(
            "emission_phi",
            np.mod(stats.emission_phi, 2.0 * math.pi),
            0.0,
            2.0 * math.pi,
            10,
        ):
            fh.write(line + "\n")
    print(
        f"ensemble: {stats.n_paths} paths, {len(stats.emission_times)} emissions, "
        f"{len(stats.absorption_times)} absorptions -> {summary_path}, {hist_path}"
    )
    return 0


def _cmd_selftest(ns) -> int:
    from .acceptance import run_all

    only = None
    if ns.only:
        only = tuple(int(tok) for tok in ns.only.split(","))
    results = run_all(only=only)
    all_passed = True
    for res in results:
        mark = "PASS" if res.passed else "FAIL"
        print(f"[{mark}] {res.name} ({res.elapsed:.1f}s): {res.detail}")
        all_passed = all_passed and res.passed
    return 0 if all_passed else 1


_COMMANDS = {
    "validate-basis": _cmd_validate_basis,
    "coeffs": _cmd_coeffs,
    "trace": _cmd_trace,
    "simulate": _cmd_simulate,
    "ensemble": _cmd_ensemble,
    "selftest": _cmd_selftest,
}


def dispatch(argv) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command is None:
            parser.print_usage(sys.stderr)
            return USAGE_EXIT
        return _COMMANDS[ns.command](ns)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"belljump: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except (ParseError, ValidationError, ValueError) as exc:
        print(f"belljump: validation error: {exc}", file=sys.stderr)
        return 1
    except BelljumpError as exc:
        print(f"belljump: runtime error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"belljump: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
