"""Seeded experiment runner.

Every subcommand writes one report. JSON reports follow
``schemas/report.schema.json``; CSV output starts with a ``# params`` comment
line followed by a header row. Run-level generators come from
``SeedSequence(seed, spawn_key=(counter,))`` with NumPy's PCG64, so a given
(config, seed) pair always produces the same bytes. Wall time is only
included with ``--timing``, since it would otherwise break that guarantee.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import comm, compute, metrology, stats
from .fock import coherent_state
from .measurement import BELL_STATES, decode_qubits, encode_qubits
from .seeding import run_generator

SCHEMA_VERSION = "1"
U64_MAX = 2**64 - 1


class ConfigError(ValueError):
    """A parameter is outside its documented range."""


@dataclass
class Table:
    header: list[str]
    rows: list[list]


@dataclass
class Experiment:
    name: str
    ref: str
    summary: str
    add_arguments: Callable[[argparse.ArgumentParser], None]
    run: Callable[[argparse.Namespace], tuple[dict, Table | None]]
    default_shots: int = 0
    default_cutoff: int | None = None
    default_format: str = "json"


def _u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _rng(args, counter: int = 0) -> np.random.Generator:
    return run_generator(args.seed, counter)


def _state_amplitudes(state) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(state, dtype=complex)]


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


def _args_hom(p):
    p.add_argument("--tau-max", type=float, default=3.0, help="largest |delay| in units of the coherence time")
    p.add_argument("--tau-steps", type=_positive_int, default=61)
    p.add_argument("--tau-c", type=float, default=1.0, help="coherence time")
    p.add_argument("--input", choices=["single_photon_pair", "photon_coherent"], default="single_photon_pair")
    p.add_argument("--mean-photons", type=float, default=0.1, help="coherent input mean photon number")
    p.add_argument("--normalized", action="store_true", help="divide by the distinguishable baseline")


def _run_hom(args):
    _require(args.tau_c > 0, "--tau-c must be > 0")
    _require(args.tau_max >= 0, "--tau-max must be >= 0")
    taus = np.linspace(-args.tau_max, args.tau_max, args.tau_steps)
    values = stats.hom_dip(taus, args.tau_c, args.input, args.mean_photons, args.cutoff, args.normalized)
    baseline = stats.hom_coincidence(math.inf, args.tau_c, args.input, args.mean_photons, args.cutoff)
    at_zero = stats.hom_coincidence(0.0, args.tau_c, args.input, args.mean_photons, args.cutoff)
    results = {
        "coincidence_at_zero": at_zero,
        "distinguishable_baseline": baseline,
        "minimum": float(values.min()),
        "curve": [{"tau": float(t), "value": float(v)} for t, v in zip(taus, values)],
    }
    if args.input == "photon_coherent":
        results["truncation_residual"] = stats.hom_input_state(0.0, args.tau_c, args.input, args.mean_photons,
                                                               args.cutoff).truncation_loss
    return results, Table(["tau", "coincidence"], [[float(t), float(v)] for t, v in zip(taus, values)])


def _args_g2(p):
    p.add_argument("--source", choices=["coherent", "thermal", "fock", "poisson"], default="coherent")
    p.add_argument("--mean", type=float, default=1.0, help="mean photon number (Fock: photon number)")
    p.add_argument("--tau-c", type=float, default=1.0)
    p.add_argument("--tau-max", type=float, default=3.0)
    p.add_argument("--tau-steps", type=_positive_int, default=61)


def _run_g2(args):
    _require(args.mean > 0, "--mean must be > 0")
    _require(args.tau_c > 0, "--tau-c must be > 0")
    residual = 0.0
    if args.source == "coherent":
        state = coherent_state(math.sqrt(args.mean), args.cutoff)
        dist = stats.distribution_of(state)
        residual = state.truncation_loss
    elif args.source == "poisson":
        dist = stats.poisson_distribution(args.mean)
    elif args.source == "thermal":
        dist = stats.thermal_distribution(args.mean)
    else:
        _require(float(args.mean).is_integer(), "Fock source needs an integer --mean")
        dist = stats.fock_distribution(int(args.mean))
    g2 = stats.g2_zero(dist)
    counts = dist.sample(_rng(args), args.shots).astype(float)
    sampled = float((counts * (counts - 1)).mean() / counts.mean() ** 2) if counts.mean() > 0 else None
    taus = np.linspace(-args.tau_max, args.tau_max, args.tau_steps)
    curve = stats.g2_curve(g2, args.tau_c, taus)
    results = {
        "g2_zero": g2,
        "g2_zero_sampled": sampled,
        "truncation_residual": residual,
        "curve": [{"tau": float(t), "value": float(v)} for t, v in zip(taus, curve)],
    }
    return results, Table(["tau", "g2"], [[float(t), float(v)] for t, v in zip(taus, curve)])


def _args_double_slit(p):
    p.add_argument("--slit-width", type=float, default=20e-6, help="a (m)")
    p.add_argument("--separation", type=float, default=100e-6, help="d (m)")
    p.add_argument("--distance", type=float, default=1.0, help="L (m)")
    p.add_argument("--wavelength", type=float, default=600e-9, help="λ (m)")
    p.add_argument("--bins", type=_positive_int, default=100)


def _run_double_slit(args):
    geom = (args.slit_width, args.separation, args.distance, args.wavelength)
    _require(min(geom) > 0, "a, d, L and λ must be > 0")
    w = metrology.double_slit_window(args.slit_width, args.distance, args.wavelength)
    samples = metrology.sample_double_slit(args.shots, *geom, seed=_rng(args), half_width=w)
    chi = metrology.double_slit_chi2(samples, args.bins, *geom, half_width=w)
    edges = np.linspace(-w, w, args.bins + 1)
    counts, _ = np.histogram(samples, edges)
    centers = (edges[1:] + edges[:-1]) / 2
    curve = metrology.double_slit_intensity(centers, *geom)
    rows = [[float(x), int(c), float(i)] for x, c, i in zip(centers, counts, curve)]
    results = {"photons": args.shots, "chi2": chi, "first_cosine_zero": args.distance * args.wavelength / (2 * args.separation)}
    return results, Table(["x", "count", "intensity"], rows)


def _args_bb84(p):
    p.add_argument("--pulses", type=_positive_int, default=None, help="pulses sent (defaults to --shots)")
    p.add_argument("--eve", choices=["none", "intercept-resend"], default="none")
    p.add_argument("--length", type=float, default=0.0, help="fibre length L (km)")
    p.add_argument("--attenuation", type=float, default=1.0, help="attenuation length ℓ (km)")
    p.add_argument("--sample-fraction", type=float, default=0.1)


def _run_bb84(args):
    pulses = args.pulses or args.shots
    args.pulses = pulses
    channel = comm.ChannelModel(args.length, args.attenuation)
    ks = comm.bb84_run(pulses, args.eve, channel, args.sample_fraction, _rng(args))
    results = ks.to_dict()
    results["qber"] = results["sampled_qber"]
    results["transmission"] = channel.transmission
    return results, None


def _args_teleport(p):
    p.add_argument("--theta", type=float, default=1.0, help="input cos(θ/2)|H> + e^{iφ} sin(θ/2)|V>")
    p.add_argument("--phi", type=float, default=0.5)
    p.add_argument("--resource", choices=sorted(BELL_STATES), default="Phi+")
    p.add_argument("--bell-mode", choices=["ideal", "linear-optical"], default="ideal")


def _run_teleport(args):
    psi = np.array([math.cos(args.theta / 2), np.exp(1j * args.phi) * math.sin(args.theta / 2)])
    hist = comm.teleport_histogram(psi, args.shots, args.resource, args.bell_mode, _rng(args, 0))
    records = comm._teleport_records(psi, args.resource, args.bell_mode)
    fidelities = {}
    for rec in records:
        out = comm._finish(rec, records, args.resource)
        if out.success:
            f = abs(np.vdot(psi, decode_qubits(out.corrected_state))) ** 2
            fidelities[out.bell_label] = min(fidelities.get(out.bell_label, 1.0), float(f))
    probs = {}
    for rec in records:
        probs[rec.outcome] = probs.get(rec.outcome, 0.0) + rec.probability
    results = {
        "input": _state_amplitudes(psi),
        "histogram": hist,
        "probabilities": probs,
        "corrections": {k: comm.CORRECTIONS[k] for k in fidelities},
        "min_fidelity": fidelities,
    }
    rows = [[k, hist[k], probs[k]] for k in sorted(hist)]
    return results, Table(["outcome", "count", "probability"], rows)


def _args_repeater(p):
    p.add_argument("--length", type=float, default=4.0, help="total length L (units of ℓ unless --attenuation set)")
    p.add_argument("--segments", type=_positive_int, default=2)
    p.add_argument("--attenuation", type=float, default=1.0)
    p.add_argument("--swap-success", type=float, default=1.0)


def _run_repeater(args):
    r = comm.repeater_rate(args.length, args.segments, args.attenuation, args.swap_success, args.shots, _rng(args))
    return r.to_dict(), None


def _args_ns(p):
    p.add_argument("--amplitudes", type=float, nargs=3, default=[1.0, 1.0, 1.0], metavar=("A0", "A1", "A2"),
                   help="real input amplitudes on |0>, |1>, |2> (normalized)")


def _run_ns(args):
    sol = compute.solve_ns_coefficients()
    _require(any(args.amplitudes), "amplitudes must not all be zero")
    res = compute.ns_gate(args.amplitudes, solution=sol)
    out = [res.output_state.amplitude((k,)) for k in range(3)]
    heralds = int(_rng(args).binomial(args.shots, res.success_probability))
    results = {
        "solution": sol.to_dict(),
        "success_probability": res.success_probability,
        "output": _state_amplitudes(out),
        "sampled_heralds": heralds,
    }
    return results, None


def _run_cz(args):
    sol = compute.solve_ns_coefficients()
    table, rows = [], []
    probs = []
    for idx in range(4):
        vec = np.zeros(4)
        vec[idx] = 1
        res = compute.cz_gate(vec, solution=sol)
        out = decode_qubits(res.output_state)
        label = format(idx, "02b")
        table.append({"input": label, "output": _state_amplitudes(out), "success_probability": res.success_probability})
        probs.append(res.success_probability)
        rows.append([label, float(out[idx].real), res.success_probability])
    heralds = int(_rng(args).binomial(args.shots, probs[0]))
    results = {"truth_table": table, "success_probability": float(np.mean(probs)), "sampled_heralds": heralds,
               "ns_solution": sol.to_dict()}
    return results, Table(["input", "phase", "success_probability"], rows)


def _args_fusion(p):
    p.add_argument("--type", choices=["I", "II"], default="I", dest="fusion_type")


def _run_fusion(args):
    bell = BELL_STATES["Phi+"]
    state = encode_qubits(np.kron(bell, bell))
    records = compute.fusion_outcomes(state, 1, 2, args.fusion_type)
    probs = np.array([r.probability for r in records])
    counts = _rng(args).multinomial(args.shots, probs / probs.sum())
    branches = []
    for rec, c in zip(records, counts):
        entry = {"outcome": rec.outcome, "probability": rec.probability, "count": int(c)}
        if rec.post_state is not None:
            entry["post_state"] = _state_amplitudes(decode_qubits(rec.post_state))
        branches.append(entry)
    return {"branches": branches, "total_probability": float(probs.sum())}, Table(
        ["outcome", "probability", "count"], [[b["outcome"], b["probability"], b["count"]] for b in branches])


def _args_mbqc(p):
    p.add_argument("--alpha", type=float, default=0.3)
    p.add_argument("--beta", type=float, default=0.7)
    p.add_argument("--gamma", type=float, default=-0.4)
    p.add_argument("--graph", default=None, help='JSON {"vertices": n, "edges": [[i, j], ...]} for the stabilizer check')


def _run_mbqc(args):
    target = compute.target_unitary(args.alpha, args.beta, args.gamma)
    worst = 0.0
    outcome_counts: dict[str, int] = {}
    for i in range(args.shots):
        u = compute.mbqc_effective_unitary(args.alpha, args.beta, args.gamma, seed=_rng(args, i))
        worst = max(worst, compute.unitary_distance(u, target))
        run = compute.mbqc_single_qubit(args.alpha, args.beta, args.gamma, seed=_rng(args, i))
        key = "".join(map(str, run.outcomes))
        outcome_counts[key] = outcome_counts.get(key, 0) + 1
    if args.graph:
        n, edges = compute.parse_graph(args.graph)
    else:
        n, edges = 4, [(0, 1), (1, 2), (2, 3)]
    graph = compute.build_cluster(n, edges)
    stabilizers = [compute.stabilizer_expectation(graph, v) for v in range(n)]
    results = {
        "runs": args.shots,
        "max_unitary_error": worst,
        "outcome_counts": dict(sorted(outcome_counts.items())),
        "graph": graph.to_dict(),
        "stabilizers": stabilizers,
    }
    return results, None


def _args_noon(p):
    p.add_argument("--probe", choices=["zero_n", "noon", "coherent"], default="noon")
    p.add_argument("--n-max", type=_positive_int, default=8, help="largest N for zero_n / noon")
    p.add_argument("--nbar-min", type=float, default=10.0)
    p.add_argument("--nbar-max", type=float, default=100.0)
    p.add_argument("--points", type=_positive_int, default=5, help="coherent sweep points")
    p.add_argument("--repetitions", type=_positive_int, default=1000)


def _run_noon(args):
    if args.probe == "coherent":
        _require(0 < args.nbar_min < args.nbar_max, "need 0 < --nbar-min < --nbar-max")
        resources = np.geomspace(args.nbar_min, args.nbar_max, args.points)
    else:
        resources = np.arange(1, args.n_max + 1)
    _require(len(resources) >= 2, "a scaling fit needs at least two points")
    pts = metrology.scaling_sweep(args.probe, resources, args.shots, args.repetitions, args.seed)
    fit = metrology.fit_loglog([p.resource for p in pts], [p.delta_phi for p in pts])
    results = {"points": [p.to_dict() for p in pts], "fit": fit}
    return results, Table(["resource", "delta_phi", "stderr"], [[p.resource, p.delta_phi, p.stderr] for p in pts])


def _args_squeeze(p):
    p.add_argument("--r", type=float, default=0.5, help="squeezing parameter")


def _run_squeeze(args):
    _require(0 < args.r <= 2, "--r must lie in (0, 2]")
    probe = metrology.squeezed_vacuum(args.r, args.cutoff)
    _, vx, res = metrology.quadrature_moments(probe.realized, "X")
    _, vy, _ = metrology.quadrature_moments(probe.realized, "Y")
    phi = math.atan(math.exp(-2 * args.r))
    est = metrology.squeezed_phase_estimate(args.r, phi, args.shots, _rng(args), args.cutoff)
    results = {
        "var_x": vx,
        "var_y": vy,
        "var_x_expected": math.exp(-2 * args.r) / 2,
        "var_y_expected": math.exp(2 * args.r) / 2,
        "product": vx * vy,
        "truncation_residual": res,
        "mean_photons": probe.mean_photons,
        "precision_bound": metrology.squeezed_precision_bound(args.r, probe.mean_photons, args.shots),
        "heisenberg_bound": metrology.heisenberg_bound(probe, args.shots),
        "homodyne_estimate": est.to_dict(),
    }
    return results, None


def _args_micrometer(p):
    p.add_argument("--wavelength", type=float, default=600e-9, help="λ (m)")
    p.add_argument("--length", type=float, default=50e-3, help="pivot-to-foil distance L (m)")
    p.add_argument("--thickness", type=float, default=5e-6, help="true foil thickness d (m)")
    p.add_argument("--photons", type=float, default=1e6, help="total detected photons")
    p.add_argument("--pixels", type=_positive_int, default=4000)
    p.add_argument("--method", choices=["fit", "count"], default="fit")


def _run_micrometer(args):
    est = metrology.micrometer_estimate(args.wavelength, args.length, args.thickness, args.photons, _rng(args),
                                        args.pixels, args.method)
    results = est.to_dict()
    results["fringes_across_length"] = 2 * args.thickness / args.wavelength
    return results, None


EXPERIMENTS: dict[str, Experiment] = {
    e.name: e
    for e in [
        Experiment("hom", "The Hong-Ou-Mandel effect", "Coincidence dip versus delay",
                   _args_hom, _run_hom, 0, 8, "csv"),
        Experiment("g2", "Anti-bunching", "Second-order correlation of photon sources",
                   _args_g2, _run_g2, 100_000, 60, "csv"),
        Experiment("double-slit", "The equations of motion for a photon", "Single-photon double-slit histogram",
                   _args_double_slit, _run_double_slit, 100_000, None, "csv"),
        Experiment("bb84", "The no-cloning theorem and quantum key distribution", "BB84 key distribution",
                   _args_bb84, _run_bb84, 100_000),
        Experiment("teleport", "Quantum repeaters and quantum memories", "Polarization-qubit teleportation",
                   _args_teleport, _run_teleport, 100_000),
        Experiment("repeater", "Quantum repeaters and quantum memories", "Slotted repeater-chain rate",
                   _args_repeater, _run_repeater, 100_000),
        Experiment("ns-gate", "The Knill-Laflamme-Milburn protocol", "Heralded nonlinear sign gate",
                   _args_ns, _run_ns, 10_000),
        Experiment("cz-gate", "The Knill-Laflamme-Milburn protocol", "Post-selected CZ truth table",
                   lambda p: None, _run_cz, 10_000),
        Experiment("fusion", "Measurement-based quantum computing", "Type-I/II fusion of two Bell pairs",
                   _args_fusion, _run_fusion, 10_000),
        Experiment("cluster-mbqc", "Measurement-based quantum computing", "Single-qubit gate on a 4-photon line",
                   _args_mbqc, _run_mbqc, 100),
        Experiment("noon-scaling", "Quantum metrology and imaging", "Phase-error scaling with resource",
                   _args_noon, _run_noon, 1000, None, "csv"),
        Experiment("squeeze", "Quantum metrology and imaging", "Squeezed-vacuum quadratures and phase bound",
                   _args_squeeze, _run_squeeze, 2000, 50),
        Experiment("micrometer", "Quantum metrology and imaging", "Interferometric foil-thickness estimate",
                   _args_micrometer, _run_micrometer, 0),
    ]
}


# ---------------------------------------------------------------------------
# Parsing and output
# ---------------------------------------------------------------------------


def _common_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=_u64, default=0, help="master seed (unsigned 64-bit)")
    p.add_argument("--shots", type=_positive_int, default=None, help="Monte Carlo repetitions")
    p.add_argument("--output", default=None, help="output path (default: standard output)")
    p.add_argument("--format", choices=["json", "csv"], default=None)
    p.add_argument("--cutoff", type=_positive_int, default=None, help="Fock truncation override")
    p.add_argument("--timing", action="store_true", help="include wall time (breaks byte-reproducibility)")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="photonq", description="Seeded linear-optics experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="print the experiment catalog")
    for exp in EXPERIMENTS.values():
        # a fresh parent per subcommand: set_defaults mutates the shared actions
        p = sub.add_parser(exp.name, parents=[_common_parent()], help=exp.summary, description=exp.summary)
        exp.add_arguments(p)
        p.set_defaults(shots=exp.default_shots or 1, cutoff=exp.default_cutoff, format=exp.default_format)
    return parser


_COMMON = {"seed", "shots", "output", "format", "cutoff", "timing", "command"}


def _parameter_schema(parser: argparse.ArgumentParser) -> dict:
    out = {}
    for action in parser._actions:
        if not action.option_strings or action.dest == "help":
            continue
        entry = {"flag": action.option_strings[0], "default": action.default}
        if action.choices:
            entry["choices"] = list(action.choices)
        if action.nargs not in (None, 0):
            entry["nargs"] = action.nargs
        if isinstance(action, argparse._StoreTrueAction):
            entry["type"] = "flag"
        elif action.type is not None:
            entry["type"] = {float: "real", int: "integer", _u64: "u64", _positive_int: "integer"}.get(action.type, "text")
        else:
            entry["type"] = "text"
        if action.help:
            entry["help"] = action.help
        out[action.dest] = entry
    return out


def list_experiments() -> list[dict]:
    parser = build_parser()
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    catalog = []
    for exp in EXPERIMENTS.values():
        catalog.append({
            "name": exp.name,
            "ref": exp.ref,
            "summary": exp.summary,
            "default_shots": exp.default_shots,
            "default_format": exp.default_format,
            "parameters": _parameter_schema(sub.choices[exp.name]),
        })
    return catalog


def _config(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("output", "format", "timing", "command")}


def run(argv: list[str]) -> tuple[dict, Table | None, str]:
    """Parse ``argv`` and run one experiment; returns (report, table, format)."""
    parser = build_parser()
    args = parser.parse_args(argv)
    exp = EXPERIMENTS[args.command]
    fmt = args.format
    start = time.perf_counter()
    results, table = exp.run(args)
    report = {
        "schema_version": SCHEMA_VERSION,
        "experiment": exp.name,
        "ref": exp.ref,
        "config": _config(args),
        "results": results,
    }
    if "truncation_residual" in results:
        report["truncation"] = results["truncation_residual"]
    if args.timing:
        report["wall_time_s"] = time.perf_counter() - start
    return report, table, fmt


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def render_csv(report: dict, table: Table | None) -> str:
    buf = io.StringIO()
    params = " ".join(f"{k}={json.dumps(v, sort_keys=True)}" for k, v in report["config"].items())
    buf.write(f"# params experiment={report['experiment']} schema_version={report['schema_version']} {params}\n")
    writer = csv.writer(buf, lineterminator="\n")
    if table is None:
        writer.writerow(["key", "value"])
        for key, value in _flatten(report["results"]):
            writer.writerow([key, _fmt(value)])
    else:
        writer.writerow(table.header)
        for row in table.rows:
            writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _flatten(obj, prefix: str = ""):
    if isinstance(obj, dict):
        for k in sorted(obj):
            yield from _flatten(obj[k], f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if argv and argv[0] == "list":
        build_parser().parse_args(argv)
        sys.stdout.write(json.dumps(list_experiments(), indent=2, sort_keys=True) + "\n")
        return 0
    try:
        report, table, fmt = run(argv)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except compute.ConvergenceError as exc:
        print(f"error: solver did not converge: {exc}", file=sys.stderr)
        return 3
    text = render_json(report) if fmt == "json" else render_csv(report, table)
    path = _output_path(argv)
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _output_path(argv: list[str]) -> str | None:
    ns, _ = _common_parent().parse_known_args(argv[1:])
    return ns.output


if __name__ == "__main__":
    sys.exit(main())
