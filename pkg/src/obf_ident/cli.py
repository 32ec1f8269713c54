"""Command-line front end.

Every command writes CSV (``poles`` writes JSON).  CSV output starts with a
comment line carrying a hash of the canonical arguments and the library
version, so identical invocations give byte-identical files.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .diffusion_bench import DiffusionConfig, benchmark_tf, build_diffusion_system, perturb_diffusion
from .errors import DomainError, ObfIdentError
from .hardness import sample_complexity_floor
from .hyperbolic import PoleRegion, tau_analytic
from .ident import convergence_experiment, least_squares_fit
from .lti_core import (
    EnergyBudget,
    PartialFractionTF,
    StateSpaceModel,
    Trajectory,
    bias_upper_bound,
    h2_norm,
    optimal_projection,
    pf_to_ss,
    projection_bias,
    simulate_closed_loop,
    ss_to_pf,
)
from .pole_select import (
    PoleSet,
    SelectOptions,
    minimax_poles,
    tsuji_init_poles,
    tsuji_points,
    worst_case_rate,
)

SWEEP_METHODS = ("tsuji", "tsuji-init", "minimax", "random")


# -- argument parsing helpers --------------------------------------------------------------


def parse_region(text: str) -> PoleRegion:
    """``disk:0.5``, ``interval:-0.95,0.95``, inline JSON or a JSON file path."""
    text = text.strip()
    if text.startswith("{"):
        return PoleRegion.from_dict(json.loads(text))
    if os.path.isfile(text):
        with open(text) as fh:
            return PoleRegion.from_dict(json.load(fh))
    kind, _, rest = text.partition(":")
    try:
        values = [float(v) for v in rest.split(",")]
    except ValueError as exc:
        raise DomainError(f"cannot parse region {text!r}") from exc
    if kind == "disk" and len(values) == 1:
        return PoleRegion.disk(values[0])
    if kind == "interval" and len(values) == 2:
        return PoleRegion.interval(*values)
    raise DomainError(f"cannot parse region {text!r}")


def parse_int_range(text: str) -> list[int]:
    """``5:15`` (inclusive), ``5:15:5`` or a comma list ``4,8,16``."""
    try:
        if ":" in text:
            parts = [int(v) for v in text.split(":")]
            start, stop = parts[0], parts[1]
            step = parts[2] if len(parts) > 2 else 1
            return list(range(start, stop + 1, step))
        return [int(v) for v in text.split(",") if v]
    except ValueError as exc:
        raise DomainError(f"cannot parse integer range {text!r}") from exc


def load_system(text: str | None, seed: int = 0):
    """Return ``(PartialFractionTF, StateSpaceModel)`` for a system spec.

    ``benchmark`` (nominal), ``benchmark:<seed>``, ``diffusion`` or a JSON file / inline
    JSON with either ``poles``/``residues`` or ``A``/``B``/``C``.
    """
    if text is None or text == "benchmark":
        tf = benchmark_tf(None)
        return tf, pf_to_ss(tf)
    if text.startswith("benchmark:"):
        tf = benchmark_tf(int(text.split(":", 1)[1]))
        return tf, pf_to_ss(tf)
    if text == "diffusion":
        ss = build_diffusion_system(DiffusionConfig())
        return ss_to_pf(ss), ss
    if text.lstrip().startswith("{"):
        data = json.loads(text)
    else:
        with open(text) as fh:
            data = json.load(fh)
    if "poles" in data:
        tf = PartialFractionTF.from_dict(data)
        return tf, pf_to_ss(tf)
    ss = StateSpaceModel.from_dict(data)
    return ss_to_pf(ss), ss


def spec_hash(args: argparse.Namespace) -> str:
    payload = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "func")}
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("OBF_IDENT_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    items = list(items)
    workers = _threads()
    if workers == 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def write_csv(args, header: list[str], rows, comments: tuple = ()) -> None:
    buf = io.StringIO()
    buf.write(f"# spec_hash={spec_hash(args)} version={__version__}\n")
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    _emit(args, buf.getvalue())


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _select(region: PoleRegion, q: int, method: str, seed: int) -> PoleSet:
    opts = SelectOptions(seed=seed)
    if method == "tsuji":
        return tsuji_points(region, q, opts)[0]
    if method in ("tsuji-init", "tsuji_init_only"):
        return tsuji_init_poles(region, q, opts)[0]
    if method == "minimax":
        return minimax_poles(region, q, opts)[0]
    if method == "random":
        return random_poles(region, q, seed)
    raise DomainError(f"unknown method {method!r}")


def random_poles(region: PoleRegion, q: int, seed: int) -> PoleSet:
    """Poles drawn uniformly from the region (area measure for disks)."""
    rng = np.random.default_rng(seed)
    if region.kind == "interval":
        pts = rng.uniform(region.a, region.b, q).astype(complex)
    elif region.kind == "disk":
        r = region.radius * np.sqrt(rng.uniform(0, 1, q))
        pts = r * np.exp(2j * np.pi * rng.uniform(0, 1, q))
    else:
        pts = region.boundary_point(rng.uniform(0, region.param_span, q))
    return PoleSet(tuple(pts), region, "manual")


# -- commands -----------------------------------------------------------------------------


def cmd_tau(args) -> None:
    region = parse_region(args.region)
    try:
        analytic = tau_analytic(region)
    except ObfIdentError:
        analytic = math.nan
    rows = []
    if args.q:
        for q in parse_int_range(args.q):
            ps = _select(region, q, args.method or "minimax", args.seed)
            rows.append([region.kind, analytic, q, worst_case_rate(ps)])
    else:
        rows.append([region.kind, analytic, "", ""])
    write_csv(args, ["kind", "tau_analytic", "q", "tau_numeric"], rows)


def cmd_poles(args) -> None:
    region = parse_region(args.region)
    q = int(args.q or 2)
    method = args.method or "tsuji"
    opts = SelectOptions(seed=args.seed)
    if method == "tsuji":
        ps, rep = tsuji_points(region, q, opts)
    elif method == "minimax":
        ps, rep = minimax_poles(region, q, opts)
    elif method in ("tsuji-init", "tsuji_init_only"):
        ps, rep = tsuji_init_poles(region, q, opts)
    else:
        raise DomainError(f"unknown method {method!r}")
    out = {"poleset": ps.to_dict(), "report": rep.to_dict(), "q": q, "seed": args.seed,
           "spec_hash": spec_hash(args), "version": __version__}
    _emit(args, json.dumps(out, sort_keys=True) + "\n")


def cmd_approx_bias(args) -> None:
    region = parse_region(args.region)
    tf, _ = load_system(args.system, args.seed)
    rows = []
    for q in parse_int_range(args.q or "4"):
        ps = _select(region, q, args.method or "tsuji", args.seed)
        _, bias = optimal_projection(tf, ps)
        tight, loose = bias_upper_bound(tf, ps, EnergyBudget.from_tf(tf))
        norm = h2_norm(tf)
        rows.append([q, ps.method, bias, bias / norm, tight, loose])
    write_csv(args, ["q", "method", "bias", "rel_bias", "bound_tight", "bound_loose"], rows)


def cmd_simulate(args) -> None:
    _, ss = load_system(args.system, args.seed)
    traj = simulate_closed_loop(ss, None, int(args.N), args.seed, noise_std=args.noise_std)
    write_trajectory(args, traj)


def write_trajectory(args, traj: Trajectory) -> None:
    m, p = traj.u.shape[1], traj.y.shape[1]
    header = ["t"] + [f"u{i}" for i in range(m)] + [f"y{i}" for i in range(p)]
    rows = []
    for t in range(traj.N):
        rows.append([t] + [float(np.real(v)) for v in traj.u[t]] + [float(np.real(v)) for v in traj.y[t]])
    write_csv(args, header, rows, comments=("row t holds u_t and y_{t+1}",))


def read_trajectory(path: str) -> Trajectory:
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    data = np.array([[float(v) for v in row] for row in reader])
    ucols = [i for i, h in enumerate(header) if h.startswith("u")]
    ycols = [i for i, h in enumerate(header) if h.startswith("y")]
    return Trajectory(data[:, ucols], data[:, ycols])


def cmd_identify(args) -> None:
    region = parse_region(args.region)
    tf, ss = load_system(args.system, args.seed)
    if args.trajectory:
        traj = read_trajectory(args.trajectory)
    else:
        traj = simulate_closed_loop(ss, None, int(args.N), args.seed, noise_std=args.noise_std)
    ps = _select(region, int(args.q or 4), args.method or "tsuji", args.seed)
    res = least_squares_fit(traj, ps, truth=tf if not args.trajectory else None)
    rows = []
    for k, (mu, R) in enumerate(zip(ps.poles, res.coeffs)):
        for i in range(R.shape[0]):
            for j in range(R.shape[1]):
                rows.append([k, mu.real, mu.imag, i, j, float(R[i, j].real), float(R[i, j].imag)])
    comments = [f"residual={res.residual!r}"]
    if res.rel_h2_error is not None:
        comments.append(f"rel_h2_error={res.rel_h2_error!r}")
    write_csv(args, ["k", "mu_re", "mu_im", "row", "col", "coeff_re", "coeff_im"], rows, comments)


def _sweep_rows(systems, region, qs, methods, seed):
    """Relative projection bias per (q, method, trial)."""
    rows = []
    for q in qs:
        for method in methods:
            if method == "random":
                def one(item):
                    trial, tf = item
                    ps = random_poles(region, q, seed * 7919 + 131 * q + trial)
                    return projection_bias(tf, ps) / h2_norm(tf)
            else:
                ps = _select(region, q, method, seed)

                def one(item, ps=ps):
                    _, tf = item
                    return projection_bias(tf, ps) / h2_norm(tf)
            vals = _pmap(one, list(enumerate(systems)))
            rows.extend([q, method, t, v] for t, v in enumerate(vals))
    return rows


def _median_comments(rows, methods, qs):
    out = []
    for method in methods:
        med = [float(np.median([r[3] for r in rows if r[0] == q and r[1] == method])) for q in qs]
        out.append(f"median {method}: " + " ".join(f"q={q}:{m:.6g}" for q, m in zip(qs, med)))
    return out


def cmd_sweep_q(args) -> None:
    region = parse_region(args.region or "interval:-0.95,0.95")
    qs = parse_int_range(args.q_range or "5:15:5")
    methods = [m for m in (args.method.split(",") if args.method else SWEEP_METHODS)]
    trials = int(args.trials or 100)
    if args.system:
        systems = [load_system(args.system, args.seed)[0]]
    else:
        systems = [benchmark_tf(args.seed * 100003 + t) for t in range(trials)]
    rows = _sweep_rows(systems, region, qs, methods, args.seed)
    write_csv(args, ["q", "method", "trial", "rel_bias"], rows, _median_comments(rows, methods, qs))


def cmd_convergence(args) -> None:
    region = parse_region(args.region or "interval:-0.95,0.95")
    tf, ss = load_system(args.system, args.seed)
    ps = _select(region, int(args.q or 4), args.method or "tsuji", args.seed)
    Ns = parse_int_range(args.n_list or "100,1000,10000")
    table = convergence_experiment(ss, ps, Ns, int(args.trials or 20), args.seed,
                                   noise_std=args.noise_std, truth=tf)
    comments = [f"slope={table.slope!r} reference={table.reference}"]
    comments += [f"N={n} mean={a!r} min={b!r} max={c!r}" for n, a, b, c in table.summary]
    write_csv(args, ["N", "trial", "error", "method"], table.rows, comments)


def cmd_diffusion(args) -> None:
    region = parse_region(args.region or "interval:-0.99,0.99")
    qs = parse_int_range(args.q_range or "2:10:2")
    methods = args.method.split(",") if args.method else ["tsuji", "tsuji-init", "random"]
    trials = int(args.trials or 20)
    base = build_diffusion_system(DiffusionConfig())
    cfg_sigma = DiffusionConfig().perturb_sigma
    systems = [ss_to_pf(perturb_diffusion(base, cfg_sigma, args.seed * 100003 + t))
               for t in range(trials)]
    rows = _sweep_rows(systems, region, qs, methods, args.seed)
    comments = [f"order={base.n}"] + _median_comments(rows, methods, qs)
    write_csv(args, ["q", "method", "trial", "rel_bias"], rows, comments)


def cmd_hardness(args) -> None:
    region = parse_region(args.region or "interval:-0.999,0.999")
    ns = parse_int_range(args.n_list or "1:4")
    budget = EnergyBudget(1.0, region.max_modulus, 1.0)
    rows = []
    for n in ns:
        res = sample_complexity_floor(args.delta, budget, region, n,
                                      opts=SelectOptions(seed=args.seed))
        rows.append([n, res.tau_n, res.growth_factor, res.growth_factor_n, res.floor])
    write_csv(args, ["n", "tau_n", "growth_factor", "growth_factor_n", "floor_N"], rows,
              comments=(f"delta={args.delta!r} R_bar=1 psd_sup=1 noise_cov=I",))


COMMANDS = {
    "tau": cmd_tau,
    "poles": cmd_poles,
    "approx-bias": cmd_approx_bias,
    "identify": cmd_identify,
    "simulate": cmd_simulate,
    "sweep-q": cmd_sweep_q,
    "convergence": cmd_convergence,
    "diffusion": cmd_diffusion,
    "hardness": cmd_hardness,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="obf-ident", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--region", help="disk:R, interval:A,B, JSON text or JSON file")
        p.add_argument("--system", help="benchmark, benchmark:SEED, diffusion or a TF/SS JSON file")
        p.add_argument("--q", help="basis size (or a range where meaningful)")
        p.add_argument("--q-range", dest="q_range", help="START:STOP[:STEP] or comma list")
        p.add_argument("--n-list", dest="n_list", help="comma list or range of N (or n)")
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--method", help="tsuji, tsuji-init, minimax, random (comma list for sweeps)")
        p.add_argument("--out", help="output path; stdout when omitted")
        p.add_argument("--N", type=int, default=1000, help="samples for simulate/identify")
        p.add_argument("--noise-std", dest="noise_std", type=float, default=0.1)
        p.add_argument("--delta", type=float, default=1.0)
        p.add_argument("--trajectory", help="trajectory CSV for identify")
        p.set_defaults(func=COMMANDS[name])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in ("tau", "poles", "approx-bias", "identify") and not args.region:
        parser.error(f"{args.command} requires --region")
    try:
        args.func(args)
    except ObfIdentError as exc:
        sys.stderr.write(json.dumps({"code": exc.code, "message": str(exc)}) + "\n")
        return 1
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        sys.stderr.write(json.dumps({"code": "input", "message": str(exc)}) + "\n")
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
