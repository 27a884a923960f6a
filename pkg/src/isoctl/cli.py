"""Command-line front end.

Subcommands: spectrum, catalog, isomod, saturate, evolve, synthesize,
demo-eight, demo-torus, specfun.  Exit status 0 on success, 2 on invalid
input, 3 when a monitored numerical invariant or threshold is violated.

Every artifact starts with a header naming the tool version, the scenario
hash and the seed (a ``#`` line in CSV files, a ``header`` object in JSON).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .errors import (BelowThreshold, IsoctlError, NumericalError, ParseError, UnitarityDrift,
                     ValidationError)

DEFAULT_SEED = 20240607
THRESHOLDS = {"demo-torus": 0.9, "demo-eight": 0.85}
SCENARIO_DIR = Path(__file__).parent / "scenarios"
SCENARIO_KEYS = ("name", "domain", "potential", "generators", "grid", "experiment", "synthesis", "outputs", "seed")
EXPERIMENT_KINDS = ("demo-torus", "demo-eight", "phase")


# ---------------------------------------------------------------------------
# scenarios


@dataclass
class Scenario:
    name: str
    domain: object  # domain spec string or inline graph mapping
    potential: str = "0"
    generators: list = field(default_factory=list)
    grid: dict = field(default_factory=dict)
    experiment: dict = field(default_factory=dict)
    synthesis: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    seed: int = DEFAULT_SEED

    def to_dict(self):
        return {k: getattr(self, k) for k in SCENARIO_KEYS}

    def emit(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=False, width=100)

    @property
    def hash(self):
        return hashlib.sha256(self.emit().encode()).hexdigest()[:16]

    def domain_obj(self):
        from .domain import build_graph, parse_domain
        if isinstance(self.domain, dict):
            return build_graph(self.domain.get("edges", []), self.domain.get("vertices", []), name=self.name)
        return parse_domain(self.domain)

    def potential_obj(self):
        return parse_potential(self.potential, self.domain_obj())

    def params(self):
        from .synth import DEMO_DELTA, DEMO_GAMMA, SynthesisParams
        d = dict(self.synthesis)
        return SynthesisParams(float(d.get("delta", DEMO_DELTA)), float(d.get("gamma", DEMO_GAMMA)),
                               float(d.get("level_factor", 0.5)), d.get("order", "base-first"))


def _key_lines(node, prefix=""):
    """``{dotted key: line}`` for every mapping key in a YAML node tree."""
    out = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            name = f"{prefix}{k.value}"
            out[name] = k.start_mark.line + 1
            out.update(_key_lines(v, name + "."))
    return out


def _located(exc, path, line):
    loc = f"{path}:{line}" if line else str(path)
    return type(exc)(f"{loc}: {exc}")


def parse_scenario_text(text, path="<scenario>"):
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark else None
        raise ParseError(f"{path}:{line}: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(data, dict):
        raise ParseError(f"{path}:1: a scenario is a mapping of keys")
    lines = _key_lines(node)
    for k in data:
        if k not in SCENARIO_KEYS:
            raise ParseError(f"{path}:{lines.get(k)}: unknown key {k!r}")
    for k in ("name", "domain"):
        if k not in data:
            raise ParseError(f"{path}:1: missing key {k!r}")
    sc = Scenario(**data)
    steps = [
        ("domain", sc.domain_obj),
        ("potential", sc.potential_obj),
        ("generators", lambda: _check_generators(sc)),
        ("experiment", lambda: _check_experiment(sc)),
        ("synthesis", sc.params),
        ("seed", lambda: _check_seed(sc)),
    ]
    for key, fn in steps:
        try:
            fn()
        except IsoctlError as exc:
            raise _located(exc, path, lines.get(key)) from None
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{path}:{lines.get(key)}: {exc}") from None
    return sc


def parse_scenario(path):
    """Read and validate a scenario file; errors carry ``path:line``."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    return parse_scenario_text(text, path)


def _check_generators(sc):
    from .saturation import generators_from_names
    if not isinstance(sc.generators, list):
        raise ParseError("generators must be a list of names")
    if sc.generators:
        generators_from_names(sc.domain_obj(), [str(n) for n in sc.generators])


def _check_experiment(sc):
    kind = sc.experiment.get("kind")
    if kind not in EXPERIMENT_KINDS:
        raise ParseError(f"experiment kind must be one of {', '.join(EXPERIMENT_KINDS)}")


def _check_seed(sc):
    if not isinstance(sc.seed, int):
        raise ParseError("seed must be an integer")


def shipped_scenarios():
    return sorted(SCENARIO_DIR.glob("*.yaml"))


def parse_potential(text, domain):
    """``0``, an expression such as ``0.5*cos(1 x)`` (same on every edge), a
    full ``edge j: ...`` listing, or ``circle-example:j=1`` (the potential
    whose isomodulus pair is built from ``rho = cos x + 2``)."""
    from .funcspace import TrigExpression
    text = str(text).strip()
    if text in ("", "0"):
        return None
    if text.startswith("circle-example"):
        from .isomod import construct_circle_example
        opts = parse_params(text.split(":", 1)[1]) if ":" in text else {}
        j = int(opts.get("j", 1))
        C = construct_circle_example(TrigExpression.cos(1) + TrigExpression.constant(2), j=j).C
        # closed form of rho''/rho - (C j)^2 / rho^4 so any grid can sample it
        return lambda e, x: -np.cos(x) / (2 + np.cos(x)) - (C * j) ** 2 / (2 + np.cos(x)) ** 4
    if "edge" not in text:
        text = "\n".join(f"edge {j}: {text}" for j in range(domain.n_edges))
    expr = TrigExpression.parse(text)
    if len(expr.edges) != domain.n_edges:
        raise ValidationError("potential has the wrong number of edges")
    return expr


# ---------------------------------------------------------------------------
# artifacts


def header(scenario_hash, seed):
    return {"tool": "isoctl", "version": __version__, "scenario_hash": scenario_hash, "seed": seed}


def header_line(scenario_hash, seed):
    return f"# isoctl {__version__} scenario={scenario_hash} seed={seed}"


INPUT_FILES = ("cert", "schedule", "scenario")


def args_hash(args):
    """Hash of the arguments; input files enter by content, not by path."""
    d = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "report") and v is not None}
    for k in INPUT_FILES:
        if k in d and Path(d[k]).is_file():
            d[k] = "sha256:" + hashlib.sha256(Path(d[k]).read_bytes()).hexdigest()
    return hashlib.sha256(json.dumps(d, sort_keys=True, default=str).encode()).hexdigest()[:16]


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, tuple):
        return list(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"not serialisable: {type(x).__name__}")


def write_json(path, obj, hdr):
    text = json.dumps({"header": hdr, **obj}, indent=1, sort_keys=True, default=_jsonable) + "\n"
    _write(path, text)


def write_csv(path, columns, rows, hdr_line, extra_comments=()):
    buf = io.StringIO()
    buf.write(hdr_line + "\n")
    for c in extra_comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    _write(path, buf.getvalue())


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, np.floating):
        return repr(float(v))
    return str(v)


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    p = Path(path)
    if p.parent and not p.parent.exists():
        p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)


def parse_params(text):
    """``k=2,j=1`` -> dict with ints/floats where possible."""
    out = {}
    if not text:
        return out
    for item in str(text).split(","):
        if not item.strip():
            continue
        if "=" not in item:
            raise ValidationError(f"parameter {item!r} is not key=value")
        k, v = item.split("=", 1)
        v = v.strip()
        for conv in (int, float):
            try:
                v = conv(v)
                break
            except ValueError:
                pass
        out[k.strip()] = v
    return out


def parse_range(text):
    """``a..b`` (inclusive) or a single integer."""
    text = str(text)
    if ".." in text:
        a, b = text.split("..", 1)
        return range(int(a), int(b) + 1)
    return range(int(text), int(text) + 1)


def mode_entry(spec):
    """``family:k=v,...`` -> CatalogEntry."""
    from .catalog import make_entry
    fam, _, rest = str(spec).partition(":")
    return make_entry(fam, parse_params(rest))


# ---------------------------------------------------------------------------
# subcommands


def cmd_spectrum(args):
    from .domain import discretize, parse_domain
    from .spectral import eigen_residual, fd_spectrum, graph_spectrum_analytic
    dom = parse_domain(args.domain)
    V = parse_potential(args.potential, dom)
    method = args.method
    if method == "auto":
        method = "analytic" if V is None else "fd"
    if method == "analytic" and V is not None:
        raise ValidationError("the analytic path needs V = 0")
    grid = discretize(dom, nodes_per_edge=args.nodes)
    if method == "analytic":
        lam_max = 4.0
        while True:
            _, pairs = graph_spectrum_analytic(dom, lam_max, grid=grid)
            if len(pairs) > args.modes or lam_max > 1e4:
                break
            lam_max *= 2
    else:
        # a few extra modes so the last listed cluster is complete
        pairs = fd_spectrum(grid, V, n_modes=min(args.modes + 8, grid.dofs().n))
    mult = {}
    for p in pairs:
        mult[p.cluster] = mult.get(p.cluster, 0) + 1
    pairs = pairs[: args.modes]
    rows = []
    for i, p in enumerate(pairs):
        lam = p.exact if p.exact is not None else p.value
        res = 0.0 if (method == "analytic") else eigen_residual(dom, V, p.function.normalized(), p.value)
        rows.append((i, str(lam) if isinstance(lam, Fraction) else float(lam), p.cluster, mult[p.cluster], res))
    hdr = header_line(args_hash(args), args.seed)
    write_csv(args.out, ["index", "lambda", "cluster", "multiplicity", "residual"], rows, hdr,
              [f"domain={dom.describe()} method={method}"])
    if args.eigvecs:
        d = Path(args.eigvecs)
        for i, p in enumerate(pairs):
            _write_function(d / f"mode_{i:03d}.csv", p.function, hdr)
    return 0


def _write_function(path, f, hdr, comments=()):
    rows = []
    for j, (x, v) in enumerate(zip(f.grid.blocks, f.blocks())):
        for xi, vi in zip(x, v):
            rows.append((j, float(xi), float(vi.real), float(vi.imag), float(abs(vi))))
    write_csv(path, ["edge", "x", "re", "im", "abs"], rows, hdr, comments)


def cmd_catalog(args):
    from .domain import Circle, discretize
    entry = mode_entry(f"{args.family}:{args.params or ''}")
    hdr = header_line(args_hash(args), args.seed)
    comments = [f"entry={entry.label} lambda={entry.lam}"]
    if entry.domain is not None or (entry.family == "Torus" and entry.dim == 1):
        dom = entry.domain or Circle()
        f = entry.sample(discretize(dom, nodes_per_edge=args.grid))
        _write_function(args.out, f, hdr, comments)
        return 0
    n = args.grid
    if entry.family == "Disk":
        names = ("r", "theta")
        axes = (np.linspace(0, 1, n), np.linspace(0, 2 * math.pi, n, endpoint=False))
    elif entry.family == "Sphere":
        names = ("alpha", "beta")
        axes = (np.linspace(0, math.pi, n), np.linspace(0, 2 * math.pi, n, endpoint=False))
    elif entry.family == "Hermite":
        names = tuple(f"x{i}" for i in range(entry.dim))
        axes = tuple(np.linspace(-6, 6, n) for _ in range(entry.dim))
    else:
        names = tuple(f"x{i}" for i in range(entry.dim))
        axes = tuple(np.linspace(0, 2 * math.pi, n, endpoint=False) for _ in range(entry.dim))
    mesh = np.meshgrid(*axes, indexing="ij")
    vals = np.asarray(entry(*mesh), dtype=complex)
    rows = [tuple(float(m.flat[i]) for m in mesh) + (float(vals.flat[i].real), float(vals.flat[i].imag),
                                                      float(abs(vals.flat[i]))) for i in range(vals.size)]
    write_csv(args.out, list(names) + ["re", "im", "abs"], rows, hdr, comments)
    return 0


def _isomod_entries(family, levels):
    from .catalog import (disk_mode, disk_real_modes, eight_graph_level, hermite_mode, sphere_mode,
                          three_branch_mode, torus_mode)
    fam = family.lower()
    out = []
    for k in levels:
        if fam == "eight":
            out += eight_graph_level(k)
        elif fam in ("three-branch", "three"):
            out += [three_branch_mode(0)] if k == 0 else [three_branch_mode(k, j) for j in (1, 2, 3)]
        elif fam == "disk":
            if k == 0:
                out += [disk_real_modes(0, kk)[0] for kk in (1, 2, 3)]
            else:
                out += [disk_mode(k, kk, sg) for kk in (1, 2, 3) for sg in (1, -1)]
        elif fam == "sphere":
            out += [sphere_mode(k, m) for m in range(-k, k + 1)]
        elif fam == "hermite":
            out.append(hermite_mode((k,)))
        elif fam == "torus":
            out += [torus_mode(1, k, [sg]) for sg in ((1, -1) if k else (1,))]
        else:
            raise ValidationError(f"unknown family {family!r}")
    return out


def _eta_candidates(entries, points):
    """``(eta_k, eta_k)`` and its conjugate for every even eight-graph level in ``entries``."""
    from .catalog import eight_eta_mode
    ks = sorted({e.params["k"] for e in entries if e.params.get("kind") == "even"})
    out = []
    for k in ks:
        v = eight_eta_mode(k).sample(points).values
        out += [(k * k, f"eta[{k}]", v), (k * k, f"eta[{-k}]", v.conj())]
    return out


def cmd_isomod(args):
    from .isomod import default_points, scan_catalog_pairs
    entries = _isomod_entries(args.family, parse_range(args.levels))
    points = default_points(entries[0]) if entries else None
    extra = _eta_candidates(entries, points) if args.family.lower() == "eight" else ()
    reps = scan_catalog_pairs(entries, tol_share=args.tol, points=points, n_random=args.n_random, seed=args.seed,
                              extra=extra, distinct_levels_only=args.distinct_levels)
    body = {
        "family": args.family, "levels": args.levels, "tol": args.tol,
        "n_pairs": len(reps),
        "n_shares": sum(r.shares for r in reps),
        "reports": [r.to_dict() for r in reps],
    }
    write_json(args.report, body, header(args_hash(args), args.seed))
    return 0


def _certificate_for(domain, target, gen_freq=1, split="balanced"):
    from .catalog import parse_eight_tag
    from .domain import Circle
    from .saturation import circle_family, derive_circle, derive_eight_graph, eight_family
    if domain.describe() == "eight":
        kind, k, j = parse_eight_tag(target)
        return derive_eight_graph(kind, k, j, family=eight_family(split, K=gen_freq))
    if isinstance(domain, Circle):
        t = target.strip()
        sign = -1 if t.startswith("-") else 1
        t = t.lstrip("+-")
        if t == "one":
            return derive_circle("c", 0, sign, family=circle_family(gen_freq, split, domain.edges[0].length))
        if t[:3] in ("cos", "sin") and t[3:].isdigit():
            return derive_circle(t[0], int(t[3:]), sign,
                                 family=circle_family(gen_freq, split, domain.edges[0].length))
        raise ValidationError(f"bad circle target {target!r}; use cosK, sinK or one")
    raise ValidationError(f"no certificates for domain {domain.describe()!r}")


def cmd_saturate(args):
    from .domain import parse_domain
    from .saturation import cert_to_json, cert_validate
    dom = parse_domain(args.domain)
    cert = _certificate_for(dom, args.target, args.gen_freq, args.split)
    ok, path, reason = cert_validate(cert)
    body = cert_to_json(cert)
    body["target"] = args.target
    write_json(args.out, body, header(args_hash(args), args.seed))
    if not ok:
        raise NumericalError(f"certificate fails validation at {path}: {reason}")
    return 0


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from None


def cmd_synthesize(args):
    from .saturation import cert_from_json
    from .synth import SynthesisParams, compile_cert, public_report
    if args.scenario:
        sc = parse_scenario(args.scenario)
        rep = run_scenario(sc)
        hdr = header(sc.hash, sc.seed)
        if args.out:
            write_json(args.out, rep["_schedule"].to_dict(), hdr)
        write_json(args.report or sc.outputs.get("report", "-"), _clean(public_report(rep)), hdr)
        return _threshold_exit(sc.experiment.get("kind"), rep)
    if not args.cert:
        raise ValidationError("synthesize needs --cert or --scenario")
    cert = cert_from_json(_load_json(args.cert))
    params = SynthesisParams(args.delta, args.gamma, args.level_factor, args.order)
    sched = compile_cert(cert, params)
    body = sched.to_dict()
    body["params"] = params.to_dict()
    body["depth"] = cert.depth
    write_json(args.out, body, header(args_hash(args), args.seed))
    return 0


def cmd_evolve(args):
    from .domain import discretize, parse_domain
    from .funcspace import inner_product
    from .propagator import PropagatorContext, evolve_free, evolve_pulse
    from .saturation import generators_from_names
    from .synth import ControlSchedule
    dom = parse_domain(args.domain)
    sched = ControlSchedule.from_dict(_load_json(args.schedule))
    gens = generators_from_names(dom, list(sched.names))
    grid = discretize(dom, nodes_per_edge=args.nodes)
    ctx = PropagatorContext.build(grid, parse_potential(args.potential, dom))
    Q = gens.matrix(grid)
    psi = mode_entry(args.psi0).sample(grid)
    targets = [(t, mode_entry(t).sample(grid)) for t in (args.targets.split(";") if args.targets else [])]
    n0 = psi.norm()
    t = 0.0
    rows = [(0.0, n0) + tuple(abs(inner_product(psi, g)) for _, g in targets)]
    for sg in sched.segments:
        if sg.is_free:
            psi = evolve_free(ctx, psi, sg.duration)
        else:
            psi = evolve_pulse(ctx, psi, np.asarray(sg.u), Q, sg.duration)
        t += sg.duration
        rows.append((t, psi.norm()) + tuple(abs(inner_product(psi, g)) for _, g in targets))
    write_csv(args.out, ["time", "norm"] + [f"fidelity[{name}]" for name, _ in targets], rows,
              header_line(args_hash(args), args.seed))
    drift = max(abs(r[1] - n0) for r in rows)
    if drift > 1e-8 * max(1.0, t):
        raise UnitarityDrift(f"norm drift {drift:.2e} over T={t:.3g}")
    return 0


def _clean(rep):
    return json.loads(json.dumps(rep, default=_jsonable))


def run_scenario(sc):
    """Run the experiment of a scenario; returns the report dict."""
    from .synth import compile_cert, demo_eight, demo_torus, run_phase_experiment
    kind = sc.experiment.get("kind")
    params = sc.params()
    g = dict(sc.grid)
    exp = dict(sc.experiment)
    _check_family_generators(sc, kind, exp)
    if kind == "demo-torus":
        rep = demo_torus(params, nodes=int(g.get("nodes_per_edge", 512)), gen_freq=int(exp.get("gen_freq", 8)),
                         fit_freq=int(exp.get("fit_freq", 16)), breakdown=bool(exp.get("breakdown", True)))
    elif kind == "demo-eight":
        rep = demo_eight(params, nodes=int(g.get("nodes_per_edge", 513)), gen_freq=int(exp.get("gen_freq", 4)),
                         fit_freq=int(exp.get("fit_freq", 8)), breakdown=bool(exp.get("breakdown", True)))
    elif kind == "phase":
        from .domain import discretize
        from .propagator import PropagatorContext
        dom = sc.domain_obj()
        grid = discretize(dom, nodes_per_edge=int(g.get("nodes_per_edge", 512)))
        ctx = PropagatorContext.build(grid, sc.potential_obj())
        cert = _certificate_for(dom, exp["target"], int(exp.get("gen_freq", 1)))
        psi0 = mode_entry(exp["psi0"]).sample(grid)
        rep = run_phase_experiment(ctx, psi0, cert.value, cert, params)
        rep["_schedule"] = compile_cert(cert, params)
        rep["target"] = exp["target"]
    else:
        raise ValidationError(f"unknown experiment kind {kind!r}")
    if exp.get("check_refinement") and kind in THRESHOLDS:
        again = (demo_torus if kind == "demo-torus" else demo_eight)(
            params.refined(), nodes=rep["nodes"], gen_freq=rep["generators"], fit_freq=rep["fit_frequency"],
            breakdown=False)
        rep["refined"] = {"params": again["params"], "fidelity": again["fidelity"], "T": again["T"]}
        rep["refinement_ok"] = again["fidelity"] >= rep["fidelity"]
    if kind in THRESHOLDS:
        rep["threshold"] = THRESHOLDS[kind]
    return rep


def _check_family_generators(sc, kind, exp):
    """The generator list of a scenario must match the family its experiment uses."""
    from .saturation import circle_family, eight_family
    if not sc.generators:
        return
    if kind == "demo-torus" or (kind == "phase" and sc.domain_obj().describe().startswith("circle")):
        names = circle_family(int(exp.get("gen_freq", 8 if kind == "demo-torus" else 1))).gens.names
    else:
        names = eight_family(K=int(exp.get("gen_freq", 4 if kind == "demo-eight" else 1))).gens.names
    if list(names) != [str(n) for n in sc.generators]:
        raise ValidationError(f"generators {sc.generators} do not match the experiment family {list(names)}")


def _threshold_exit(kind, rep):
    if kind in THRESHOLDS:
        if rep["fidelity"] < THRESHOLDS[kind] or rep.get("refinement_ok") is False:
            raise BelowThreshold(f"{kind}: fidelity {rep['fidelity']:.4f} (threshold {THRESHOLDS[kind]})")
    return 0


def _demo(kind):
    def run(args):
        from .synth import public_report
        path = args.scenario or SCENARIO_DIR / f"{kind}.yaml"
        sc = parse_scenario(path)
        if args.delta is not None or args.gamma is not None:
            syn = dict(sc.synthesis)
            if args.delta is not None:
                syn["delta"] = args.delta
            if args.gamma is not None:
                syn["gamma"] = args.gamma
            sc.synthesis = syn
        if args.nodes is not None:
            sc.grid = {**sc.grid, "nodes_per_edge": args.nodes}
        if args.check_refinement:
            sc.experiment = {**sc.experiment, "check_refinement": True}
        rep = run_scenario(sc)
        out = args.out or sc.outputs.get("report", f"{kind}-report.json")
        write_json(out, _clean(public_report(rep)), header(sc.hash, sc.seed))
        if args.schedule:
            write_json(args.schedule, rep["_schedule"].to_dict(), header(sc.hash, sc.seed))
        print(f"{kind}: fidelity {rep['fidelity']:.6f}  T {rep['T']:.6g}  -> {out}", file=sys.stderr)
        return _threshold_exit(kind, rep)
    return run


def cmd_specfun(args):
    from . import specfun
    rows = []
    kind = args.kind
    xs = [float(v) for v in args.x.split(",")] if args.x else []
    if kind == "bessel-j":
        cols = ["n", "x", "J"]
        for n in parse_range(args.n):
            for x in xs:
                rows.append((n, x, float(specfun.bessel_j(n, x))))
    elif kind == "bessel-zeros":
        cols = ["n", "k", "j_nk"]
        for n in parse_range(args.n):
            for k in parse_range(args.k):
                rows.append((n, k, float(specfun.bessel_zero(n, k))))
    elif kind == "legendre":
        cols = ["l", "m", "t", "P"]
        for l in parse_range(args.n):
            for m in parse_range(args.m or "0"):
                if abs(m) <= l:
                    for x in xs:
                        rows.append((l, m, x, float(specfun.legendre_p(l, m, x))))
    elif kind == "sph-harm":
        cols = ["l", "m", "alpha", "beta", "re", "im"]
        beta = float(args.beta)
        for l in parse_range(args.n):
            for m in range(-l, l + 1):
                for x in xs:
                    y = complex(specfun.spherical_harmonic(l, m, x, beta))
                    rows.append((l, m, x, beta, y.real, y.imag))
    elif kind == "hermite":
        cols = ["k", "x", "h"]
        for k in parse_range(args.n):
            for x in xs:
                rows.append((k, x, float(specfun.hermite_fn(k, x))))
    else:
        raise ValidationError(f"unknown kind {kind!r}")
    write_csv(args.out, cols, rows, header_line(args_hash(args), args.seed))
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def build_parser():
    p = argparse.ArgumentParser(prog="isoctl", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"isoctl {__version__}")
    sub = p.add_subparsers(dest="command", metavar="command")

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.set_defaults(func=func)
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed recorded in artifact headers")
        return sp

    sp = add("spectrum", cmd_spectrum, "eigenvalues with cluster ids and multiplicities (CSV)")
    sp.add_argument("--domain", required=True, help="eight | three-branch | circle:L | interval:L:bc:bc | graph.json")
    sp.add_argument("--potential", default="0")
    sp.add_argument("--modes", type=int, default=12)
    sp.add_argument("--method", choices=("auto", "analytic", "fd"), default="auto")
    sp.add_argument("--nodes", type=int, default=513, help="nodes per edge")
    sp.add_argument("--out", default="-")
    sp.add_argument("--eigvecs", help="directory for per-mode CSV files")

    sp = add("catalog", cmd_catalog, "sample a catalog eigenfunction (CSV)")
    sp.add_argument("--family", required=True, help="eight | three-branch | torus | disk | sphere | hermite")
    sp.add_argument("--params", default="", help="e.g. kind=even,k=2,j=1")
    sp.add_argument("--grid", type=int, default=1024)
    sp.add_argument("--out", default="-")

    sp = add("isomod", cmd_isomod, "pairwise modulus-sharing scan over catalog levels (JSON)")
    sp.add_argument("--family", required=True)
    sp.add_argument("--levels", default="0..3", help="inclusive range a..b")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--n-random", type=int, default=32)
    sp.add_argument("--distinct-levels", action="store_true", help="only pairs from different levels")
    sp.add_argument("--report", default="-")

    sp = add("saturate", cmd_saturate, "derive a saturation certificate (JSON)")
    sp.add_argument("--domain", required=True)
    sp.add_argument("--target", required=True, help="phi_0 | phi_o:K | phi_e:K:J (eight); cosK | -sinK (circle)")
    sp.add_argument("--gen-freq", type=int, default=1, help="highest generator frequency")
    sp.add_argument("--split", choices=("balanced", "linear"), default="balanced")
    sp.add_argument("--out", default="-")

    sp = add("synthesize", cmd_synthesize, "compile a certificate into a control schedule (JSON)")
    sp.add_argument("--cert")
    sp.add_argument("--scenario", help="run the scenario's experiment instead")
    sp.add_argument("--delta", type=float, default=1e-3)
    sp.add_argument("--gamma", type=float, default=1e-3)
    sp.add_argument("--level-factor", type=float, default=0.5)
    sp.add_argument("--order", choices=("base-first", "terms-first"), default="base-first")
    sp.add_argument("--out")
    sp.add_argument("--report")

    sp = add("evolve", cmd_evolve, "propagate a state through a schedule (CSV trajectory)")
    sp.add_argument("--domain", required=True)
    sp.add_argument("--schedule", required=True)
    sp.add_argument("--psi0", required=True, help="family:params, e.g. eight:kind=eta,k=1")
    sp.add_argument("--targets", help="';'-separated mode specs")
    sp.add_argument("--potential", default="0")
    sp.add_argument("--nodes", type=int, default=513)
    sp.add_argument("--out", default="-")

    for name in ("demo-eight", "demo-torus"):
        sp = add(name, _demo(name), f"shipped transition experiment ({name[5:]})")
        sp.add_argument("--scenario")
        sp.add_argument("--delta", type=float)
        sp.add_argument("--gamma", type=float)
        sp.add_argument("--nodes", type=int)
        sp.add_argument("--check-refinement", action="store_true", help="also run with halved delta, gamma")
        sp.add_argument("--out")
        sp.add_argument("--schedule", help="also write the schedule JSON")

    sp = add("specfun", cmd_specfun, "special-function values and zeros (CSV)")
    sp.add_argument("--kind", required=True, choices=("bessel-j", "bessel-zeros", "legendre", "sph-harm", "hermite"))
    sp.add_argument("--n", default="0", help="order / degree range a..b")
    sp.add_argument("--k", default="1", help="zero index range a..b")
    sp.add_argument("--m", help="order range for legendre")
    sp.add_argument("--x", help="comma-separated arguments")
    sp.add_argument("--beta", default="0")
    sp.add_argument("--out", default="-")
    return p


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
