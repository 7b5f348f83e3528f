"""Command line front end.

Subcommands
-----------
moments    moment table JSON for K = 2 max(N)
sweep      certified lambda_N against both large-N predictions
endpoints  exact endpoint solve against the truncated expansion
verify     integral identities plus Parseval / orthonormality checks
predict    lambda_N prediction at the requested N
kernel     exact circle kernel against its asymptotic form on the top window

Exit codes: 0 success, 1 failed verification, 2 configuration error,
3 numeric failure (e.g. escalation ceiling), 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import mpmath as mp
from mpmath import mpf

from . import asymptotics as asy
from .eigen import DEFAULT_MAX_BITS, precision_policy, smallest_eigenvalue
from .errors import (
    DomainError,
    EscalationCeilingError,
    HardEdgeError,
    NewtonError,
    PrecisionInsufficientError,
    QuadratureError,
    SphankelError,
)
from .hankel import (
    assemble,
    build_system,
    kernel_diagonal,
    kernel_diagonal_circle,
    orthonormality_residual,
    rayleigh_lower_bound,
)
from .moments import MomentTable, WeightParams, cache_filename, compute_moment_table
from .numerics import EndpointPair, PrecisionContext, to_decimal_string, verify_identity_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3, 4

SWEEP_FIELDS = (
    "N",
    "lambda_exact",
    "lambda_lo",
    "lambda_hi",
    "pred_proof",
    "pred_theorem",
    "ratio_proof",
    "ratio_theorem",
    "rayleigh_bound",
    "bits",
    "wall_ms",
)

# lambda is certified to 2^-48 relative, so 16 significant digits carry it all
SWEEP_DIGITS = 16
ENDPOINT_DIGITS = 20


class ConfigError(SphankelError):
    pass


@dataclass(frozen=True)
class RunConfig:
    alpha: str
    t: str
    n_list: tuple
    bits_override: int | None = None
    variant: str | None = None
    out_format: str = "json"
    cache_dir: str | None = None
    threads: int = 1
    max_bits: int = DEFAULT_MAX_BITS
    timing: bool = True

    def __post_init__(self):
        try:
            self.params  # validates alpha > -1, t >= 0
        except (DomainError, ValueError, ZeroDivisionError) as exc:
            raise ConfigError(str(exc)) from exc
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ConfigError(f"--n must be strictly increasing, got {list(self.n_list)}")
        if any(n < 0 for n in self.n_list):
            raise ConfigError("--n entries must be >= 0")
        if self.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if self.bits_override is not None and self.bits_override < 64:
            raise ConfigError("--bits must be >= 64")
        if self.variant is not None and self.variant not in asy.VARIANTS:
            raise ConfigError(f"--variant must be one of {asy.VARIANTS}")
        if self.out_format not in ("json", "csv"):
            raise ConfigError("--format must be json or csv")

    @property
    def params(self) -> WeightParams:
        return WeightParams(self.alpha, self.t)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _dec(x, digits=SWEEP_DIGITS, rounding="nearest"):
    return "" if x is None else to_decimal_string(x, digits, rounding)


def _emit(rows, fields, fmt, header=None):
    """Rows of string-valued dicts as CSV or JSON text."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()
    doc = dict(header or {})
    doc["records"] = rows
    return json.dumps(doc, indent=1) + "\n"


def _write(text, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _cached_tables(cache_dir: Path, p: WeightParams, bits: int):
    # any cached table for these parameters at exactly this precision, largest K first
    prefix = cache_filename(p, bits, 0)[: -len("0.json")]
    found = []
    for f in cache_dir.glob(prefix + "*.json"):
        tail = f.name[len(prefix) : -len(".json")]
        if tail.isdigit():
            found.append((int(tail), f))
    return sorted(found, reverse=True)


def load_or_compute_moments(p: WeightParams, K: int, bits: int, cache_dir=None):
    """Moment table at ``bits`` up to ``K``, through the on-disk cache when given.

    Returns ``(table, path, hit)``; ``hit`` is True when no quadrature ran.  A
    cached table with smaller K is extended by the recurrence and saved anew.
    """
    if cache_dir is None:
        return compute_moment_table(p, K, PrecisionContext(bits)), None, False
    cache = Path(cache_dir)
    cache.mkdir(parents=True, exist_ok=True)
    target = cache / cache_filename(p, bits, K)
    for k_cached, f in _cached_tables(cache, p, bits):
        table = MomentTable.load(f)
        if k_cached >= K:
            return (table if k_cached == K else table.restrict(bits, K)), f, True
        table = table.extend(K)
        table.save(target)
        return table, target, True
    table = compute_moment_table(p, K, PrecisionContext(bits))
    table.save(target)
    return table, target, False


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------


def cmd_moments(cfg: RunConfig, out=None):
    p = cfg.params
    nmax = max(cfg.n_list)
    K = max(2 * nmax, 2)
    bits = cfg.bits_override or precision_policy(nmax, p)
    table, path, hit = load_or_compute_moments(p, K, bits, cfg.cache_dir)
    if path is not None and hit and path.name == cache_filename(p, bits, K):
        text = path.read_text()
    else:
        text = table.to_json()
    _write(text, out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def _prediction_or_none(p, N, variant):
    # small N with large t can make the bracket negative; the column is then left empty
    try:
        return asy.lambda_prediction(p, N, variant).value
    except DomainError:
        return None


def _predictions(p: WeightParams, N: int):
    """Values for the pred_proof and pred_theorem columns.

    At ``t = 0`` the columns carry the t0-alpha form and (for ``alpha = 0``
    only) the t0-szego form.
    """
    if N < 1:
        return None, None
    if p.t == 0:
        theorem = _prediction_or_none(p, N, "t0-szego") if p.alpha == 0 else None
        return _prediction_or_none(p, N, "t0-alpha"), theorem
    return _prediction_or_none(p, N, "proof"), _prediction_or_none(p, N, "theorem")


def _sweep_point(job):
    p, N, bits, master, max_bits, timing = job
    start = time.perf_counter()
    row = {k: "" for k in SWEEP_FIELDS}
    row["N"] = str(N)
    try:
        sys_ = assemble(master.restrict(bits, max(2 * N, 2)), N)
    except PrecisionInsufficientError:
        sys_ = None
    try:
        if sys_ is None:
            # the policy precision could not even factor H_N; start escalation from the master
            sys_ = assemble(master.restrict(master.bits, max(2 * N, 2)), N)
        cert = smallest_eigenvalue(sys_, PrecisionContext(bits), moments=master, max_bits=max_bits)
        bound = rayleigh_lower_bound(kernel_diagonal(sys_))
        lam = cert.lambda_min
        proof, theorem = _predictions(p, N)
        with mp.workprec(128):
            row.update(
                lambda_exact=_dec(lam),
                lambda_lo=_dec(cert.enclosure.lo, rounding="floor"),
                lambda_hi=_dec(cert.enclosure.hi, rounding="ceil"),
                pred_proof=_dec(proof),
                pred_theorem=_dec(theorem),
                ratio_proof=_dec(None if proof is None else lam / proof),
                ratio_theorem=_dec(None if theorem is None else lam / theorem),
                rayleigh_bound=_dec(bound, rounding="floor"),
                bits=str(cert.bits_used),
            )
        error = None
    except (EscalationCeilingError, PrecisionInsufficientError, QuadratureError, NewtonError) as exc:
        error = f"{type(exc).__name__}: {exc}"
    if timing:
        row["wall_ms"] = str(int(round(1000 * (time.perf_counter() - start))))
    return row, error


def run_sweep(cfg: RunConfig):
    """Compute sweep rows in N order; returns ``(rows, errors)``."""
    p = cfg.params
    nmax = max(cfg.n_list)
    top = cfg.bits_override or precision_policy(nmax, p)
    # one table serves every N: rounded down to each run's precision
    master, _, _ = load_or_compute_moments(p, max(2 * nmax, 2), top + 64, cfg.cache_dir)
    jobs = [
        (p, N, cfg.bits_override or precision_policy(N, p), master, cfg.max_bits, cfg.timing)
        for N in cfg.n_list
    ]
    if cfg.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    rows = [r for r, _ in results]
    errors = {int(r["N"]): e for r, e in results if e}
    return rows, errors


def cmd_sweep(cfg: RunConfig, out=None):
    rows, errors = run_sweep(cfg)
    a, t = cfg.params.label()
    header = {"alpha": a, "t": t}
    if cfg.out_format == "json":
        for r in rows:
            e = errors.get(int(r["N"]))
            if e:
                r["error"] = e
    _write(_emit(rows, SWEEP_FIELDS, cfg.out_format, header), out)
    for N, e in errors.items():
        print(f"N={N}: {e}", file=sys.stderr)
    return EXIT_NUMERIC if errors else EXIT_OK


# ---------------------------------------------------------------------------
# endpoints
# ---------------------------------------------------------------------------

ENDPOINT_FIELDS = (
    "N",
    "status",
    "a_exact",
    "b_exact",
    "a_expansion",
    "b_expansion",
    "rel_diff_a",
    "rel_diff_b",
    "a_expansion_quartic",
    "rel_diff_a_quartic",
    "a_ratio",
)


def endpoint_rows(cfg: RunConfig):
    p = cfg.params
    ctx = PrecisionContext(cfg.bits_override or 128)
    rows = []
    d = lambda x: _dec(x, ENDPOINT_DIGITS)  # noqa: E731
    for N in cfg.n_list:
        row = {k: "" for k in ENDPOINT_FIELDS}
        row["N"] = str(N)
        with mp.workprec(ctx.bits):
            e3 = asy.endpoint_expansion(p, N, include_quartic=False, ctx=ctx)
            try:
                ep = asy.solve_endpoints_exact(p, N, ctx)
                a, b = ep.a, ep.b
                row["status"] = "ok"
            except HardEdgeError:
                a, b = mpf(0), mpf(4 * N)
                row["status"] = "hard-edge"
            row.update(a_exact=d(a), b_exact=d(b), a_expansion=d(e3.a_N), b_expansion=d(e3.b_N))
            row["rel_diff_b"] = d(abs(e3.b_N - b) / b)
            if a != 0:
                row["rel_diff_a"] = d(abs(e3.a_N - a) / a)
                if e3.a_N != 0:
                    row["a_ratio"] = d(a / e3.a_N)
            else:
                row["rel_diff_a"] = d(abs(e3.a_N))
            if p.t > 0:
                e4 = asy.endpoint_expansion(p, N, include_quartic=True, ctx=ctx)
                row["a_expansion_quartic"] = d(e4.a_N)
                row["rel_diff_a_quartic"] = d(abs(e4.a_N - a) / a)
        rows.append(row)
    return rows


def cmd_endpoints(cfg: RunConfig, out=None):
    a, t = cfg.params.label()
    _write(_emit(endpoint_rows(cfg), ENDPOINT_FIELDS, cfg.out_format, {"alpha": a, "t": t}), out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# predict
# ---------------------------------------------------------------------------

PREDICT_FIELDS = ("N", "variant", "lambda_pred", "a_N")


def cmd_predict(cfg: RunConfig, out=None):
    p = cfg.params
    variant = cfg.variant or ("proof" if p.t > 0 else ("t0-szego" if p.alpha == 0 else "t0-alpha"))
    rows = []
    for N in cfg.n_list:
        pred = asy.lambda_prediction(p, N, variant)
        a_N = asy.endpoint_expansion(p, N, include_quartic=p.t > 0).a_N
        rows.append({"N": str(N), "variant": variant, "lambda_pred": _dec(pred.value), "a_N": _dec(a_N)})
    a, t = p.label()
    _write(_emit(rows, PREDICT_FIELDS, cfg.out_format, {"alpha": a, "t": t}), out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# kernel
# ---------------------------------------------------------------------------

KERNEL_FIELDS = ("N", "mu", "K_exact", "K_asymptotic", "ratio", "min_offdiag_ratio", "sign_ok")


def cmd_kernel(cfg: RunConfig, out=None):
    p = cfg.params
    rows = []
    for N in cfg.n_list:
        bits = cfg.bits_override or precision_policy(N, p)
        sys_ = build_system(p, N, PrecisionContext(bits))
        rep = asy.kernel_window_check(sys_)
        kd = kernel_diagonal(sys_)
        for mu in rep["indices"]:
            with mp.workprec(bits):
                K_asym = asy.kernel_diag_asymptotic(p, N, mu)
                rows.append(
                    {
                        "N": str(N),
                        "mu": str(mu),
                        "K_exact": _dec(kd.kvals[mu]),
                        "K_asymptotic": _dec(K_asym),
                        "ratio": _dec(rep["diag_ratios"][mu]),
                        "min_offdiag_ratio": _dec(rep["min_ratio"]),
                        "sign_ok": "true" if rep["sign_ok"] else "false",
                    }
                )
    a, t = p.label()
    _write(_emit(rows, KERNEL_FIELDS, cfg.out_format, {"alpha": a, "t": t}), out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def random_identity_grid(count: int, seed: int = 0):
    """``(EndpointPair, t_shift, b1_shift)`` triples; B1's pole cycles left, inside (0, a), right."""
    rng = random.Random(seed)
    out = []
    for i in range(count):
        a = rng.uniform(0.05, 5.0)
        b = a + rng.uniform(0.1, 20.0)
        ts = rng.uniform(0.05, 10.0)
        where = i % 3
        if where == 0:
            b1 = -rng.uniform(0.05, 10.0)
        elif where == 1:
            b1 = a * rng.uniform(0.05, 0.95)
        else:
            b1 = b + rng.uniform(0.05, 10.0)
        out.append((EndpointPair(mpf(a), mpf(b)), mpf(ts), mpf(b1)))
    return out


def run_verify(cfg: RunConfig, instances: int = 20, seed: int = 0, stream=None):
    """Run every check; returns the list of failing check names."""
    stream = stream or sys.stdout
    bits = cfg.bits_override or 256
    ctx = PrecisionContext(bits)
    worst = {}
    tol = {}
    for ep, ts, b1 in random_identity_grid(instances, seed):
        rep = verify_identity_suite(ep, ts, ctx, b1_shift=b1)
        for name, r in rep.residuals.items():
            worst[name] = max(worst.get(name, mpf(0)), r)
            tol[name] = rep.tolerance
    p = cfg.params
    small_tol = mp.ldexp(mpf(1), -64)
    for N in cfg.n_list:
        sys_ = build_system(p, N, PrecisionContext(max(bits, precision_policy(N, p))))
        with mp.workprec(sys_.bits):
            k1, k2 = kernel_diagonal(sys_).kvals, kernel_diagonal_circle(sys_).kvals
            parseval = max(abs(x - y) / x for x, y in zip(k1, k2))
        worst[f"parseval[N={N}]"] = parseval
        tol[f"parseval[N={N}]"] = small_tol
        worst[f"orthonormality[N={N}]"] = orthonormality_residual(sys_)
        tol[f"orthonormality[N={N}]"] = small_tol
    failed = [k for k in worst if not worst[k] <= tol[k]]
    print(f"{'check':<24}{'max residual':>14}{'tolerance':>14}  status", file=stream)
    for k in worst:
        status = "FAIL" if k in failed else "ok"
        print(f"{k:<24}{mp.nstr(worst[k], 3):>14}{mp.nstr(tol[k], 3):>14}  {status}", file=stream)
    if failed:
        print("FAILED: " + ", ".join(failed), file=stream)
    return failed


def cmd_verify(cfg: RunConfig, instances=20, seed=0):
    return EXIT_FAIL if run_verify(cfg, instances, seed) else EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _n_list(text):
    try:
        return tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"--n expects an integer or comma list, got {text!r}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--alpha", default="0", help="weight exponent alpha > -1 (exact decimal)")
    common.add_argument("--t", default="0", help="singular perturbation t >= 0 (exact decimal)")
    common.add_argument("--n", type=_n_list, default=None, help="N or strictly increasing comma list")
    common.add_argument("--bits", type=int, default=None, help="override the precision policy")
    common.add_argument("--variant", default=None, choices=asy.VARIANTS)
    common.add_argument("--format", dest="out_format", default="json", choices=("json", "csv"))
    common.add_argument("--cache", dest="cache_dir", default=None, help="moment table cache directory")
    common.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--max-bits", type=int, default=DEFAULT_MAX_BITS, help="escalation ceiling")
    common.add_argument("--no-timing", action="store_true", help="leave wall_ms empty (byte-reproducible output)")

    parser = argparse.ArgumentParser(
        prog="sphankel",
        description="Smallest eigenvalue of Hankel matrices for x^alpha exp(-x - t/x).",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("moments", "write the moment table for K = 2 max(N)"),
        ("sweep", "certified lambda_N against predictions"),
        ("endpoints", "exact endpoints against the expansion"),
        ("predict", "large-N prediction of lambda_N"),
        ("kernel", "exact vs asymptotic circle kernel on the top window"),
    ]:
        sub.add_parser(name, parents=[common], help=help_)
    v = sub.add_parser("verify", parents=[common], help="identity, Parseval and orthonormality checks")
    v.add_argument("--instances", type=int, default=20, help="random identity instances")
    v.add_argument("--seed", type=int, default=0)
    return parser


_DEFAULT_N = {
    "moments": (10,),
    "sweep": (1, 2, 3, 4, 5),
    "endpoints": (1000, 10000, 100000, 1000000),
    "predict": (10, 20, 40),
    "kernel": (20,),
    "verify": (1, 2, 4, 8),
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig(
            alpha=args.alpha,
            t=args.t,
            n_list=args.n if args.n else _DEFAULT_N[args.command],
            bits_override=args.bits,
            variant=args.variant,
            out_format=args.out_format,
            cache_dir=args.cache_dir,
            threads=args.threads,
            max_bits=args.max_bits,
            timing=not args.no_timing,
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "verify":
            return cmd_verify(cfg, args.instances, args.seed)
        return {
            "moments": cmd_moments,
            "sweep": cmd_sweep,
            "endpoints": cmd_endpoints,
            "predict": cmd_predict,
            "kernel": cmd_kernel,
        }[args.command](cfg, args.out)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EscalationCeilingError, NewtonError, QuadratureError, PrecisionInsufficientError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
