"""Command line entry point: ``tkloos {eval,family,dist,count,verify}``.

Exit codes: 0 success, 1 usage error, 2 failed precondition, 3 verification
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .characters import CharacterError, character
from .counting import (
    CountingError,
    CountingSpec,
    InternalInconsistency,
    build_F,
    count_Yprime_char,
    enum_Y0,
    enum_Yprime,
    yprime_deviation_band,
    y0prime_bound,
)
from .kloosterman import KloostermanError, family_values, ksum_brute, ksum_closed, s_mask
from .measure import (
    MU,
    EmpiricalFamily,
    MeasureError,
    family_stats,
    joint_moment,
    ks_distance,
    mu_moment,
    mu_sample,
    zero_fraction_prediction,
)
from .modular import InvalidModulus, PrimePowerModulus, get_dlog

EXIT_OK, EXIT_USAGE, EXIT_PRECONDITION, EXIT_VERIFY = 0, 1, 2, 3
CSV_FIELDS = ("chi_index", "t_chi", "in_S", "value", "theta")
PRECONDITION_ERRORS = (InvalidModulus, CharacterError, KloostermanError, MeasureError, CountingError)


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    p: int | None = None
    k: int | None = None
    l: int | None = None  # noqa: E741
    a_list: list[int] = field(default_factory=list)
    b: int | None = None
    chi: str = "0"
    m_list: list[int] | None = None
    n_list: list[int] | None = None
    seed: int = 0
    output: str | None = None
    format: str = "json"
    sq_filter: bool = True
    workers: int = 1
    timing: bool = True

    def validate(self) -> None:
        need = {"eval": ("p", "k", "b"), "family": ("p", "k"), "dist": ("p", "k"), "count": ("p", "l")}
        for name in need.get(self.command, ()):
            if getattr(self, name) is None:
                raise UsageError(f"{self.command}: --{name} is required")
        if self.command in ("eval", "family", "dist", "count") and not self.a_list:
            raise UsageError(f"{self.command}: --a is required")
        if self.command in ("eval", "family") and len(self.a_list) != 1:
            raise UsageError(f"{self.command}: --a takes a single integer")
        if self.command == "dist" and self.m_list is not None and len(self.m_list) != len(self.a_list):
            raise UsageError("dist: --m needs one order per entry of --a")
        if self.command == "family" and self.format != "csv":
            raise UsageError("family: only --format csv is supported")
        if self.command == "dist" and self.format != "json":
            raise UsageError("dist: only --format json is supported")
        if self.workers < 1:
            raise UsageError("--workers must be >= 1")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tkloos", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"tkloos {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, k=True):
        sp.add_argument("--p", type=int, help="odd prime")
        if k:
            sp.add_argument("--k", type=int, help="exponent, q = p^k")
        sp.add_argument("--workers", type=int, default=1, help="processes for character ranges")
        sp.add_argument("--output", "-o", help="write to this file instead of stdout")

    sp = sub.add_parser("eval", help="one K_q(a,b,chi) by both methods")
    common(sp)
    sp.add_argument("--a", type=_int_list, required=True)
    sp.add_argument("--b", type=int, required=True)
    sp.add_argument("--chi", default="0", help="character index m in [0, phi(q))")

    sp = sub.add_parser("family", help="CSV of normalized sums over all characters")
    common(sp)
    sp.add_argument("--a", type=_int_list, required=True)
    sp.add_argument("--format", default="csv", choices=["csv"])

    sp = sub.add_parser("dist", help="JSON distribution report against the limit measure")
    common(sp)
    sp.add_argument("--a", type=_int_list, required=True, help="a or comma list a_1,...,a_r (joint mode)")
    sp.add_argument("--m", type=_int_list, help="moment orders m_1,...,m_r for joint mode")
    sp.add_argument("--seed", type=int, default=0, help="seed for the reference sample from mu")
    sp.add_argument("--format", default="json", choices=["json"])
    sp.add_argument("--no-sq-filter", dest="sq_filter", action="store_false", help="use every character, not just S_q")
    sp.add_argument("--no-timing", dest="timing", action="store_false", help="write runtime_ms as null")

    sp = sub.add_parser("count", help="Y'/Y_0 counts and the obstruction polynomial")
    common(sp, k=False)
    sp.add_argument("--l", type=int, required=True)
    sp.add_argument("--a", type=_int_list, required=True)
    sp.add_argument("--n", type=_int_list, help="exponents n_1,...,n_r for Y_0")

    sp = sub.add_parser("verify", help="run the acceptance checks")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--output", "-o")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=ns.command,
        p=getattr(ns, "p", None),
        k=getattr(ns, "k", None),
        l=getattr(ns, "l", None),
        a_list=getattr(ns, "a", None) or [],
        b=getattr(ns, "b", None),
        chi=getattr(ns, "chi", "0"),
        m_list=getattr(ns, "m", None),
        n_list=getattr(ns, "n", None),
        seed=getattr(ns, "seed", 0),
        output=ns.output,
        format=getattr(ns, "format", "json"),
        sq_filter=getattr(ns, "sq_filter", True),
        workers=ns.workers,
        timing=getattr(ns, "timing", True),
    )


def _meta(cfg: RunConfig, mod: PrimePowerModulus | None = None) -> dict:
    meta = {"tool": "tkloos", "version": __version__, "p": cfg.p}
    if mod is not None:
        meta.update(k=mod.k, q=mod.q)
    meta["a"] = cfg.a_list[0] if len(cfg.a_list) == 1 else cfg.a_list
    meta["seed"] = cfg.seed
    return meta


def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


def _clean(v):
    """JSON-safe floats (NaN/inf become null)."""
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.generic):
        return _clean(v.item())
    return v


# -- subcommands ------------------------------------------------------------------


def cmd_eval(cfg: RunConfig) -> int:
    mod = PrimePowerModulus(cfg.p, cfg.k)
    a, b = cfg.a_list[0], cfg.b
    try:
        m = int(cfg.chi)
    except ValueError:
        raise UsageError("eval: --chi must be an integer index")
    chi = character(mod, m, get_dlog(mod))
    bound = 2 * math.sqrt(mod.q)
    lines = [f"q = {mod.q} (p={mod.p}, k={mod.k}), a = {a}, b = {b}, chi index = {chi.m}"]
    results = []
    t0 = time.perf_counter()
    results.append((ksum_brute(mod, a, b, chi), time.perf_counter() - t0))
    if mod.k >= 2:
        t0 = time.perf_counter()
        results.append((ksum_closed(mod, a, b, chi), time.perf_counter() - t0))
    for kv, secs in results:
        lines.append(
            f"{kv.method:<12} re = {kv.re:.12g}  im = {kv.im:.12g}  abs = {abs(kv):.12g}  "
            f"bound margin = {bound - abs(kv):.12g}  time = {secs * 1e3:.3f} ms"
        )
    if len(results) == 2:
        lines.append(f"|closed - brute| = {abs(results[0][0].value - results[1][0].value):.3g}")
        kv = results[1][0]
        lines.append(f"in_S = {kv.in_S}, degenerate_disc = {kv.degenerate_disc}")
    _emit("\n".join(lines) + "\n", cfg)
    return EXIT_OK


def family_csv(fam, meta: dict) -> str:
    buf = io.StringIO()
    for key, val in meta.items():
        buf.write(f"# {key}={val}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    theta = fam.theta
    for i in range(len(fam)):
        th = theta[i]
        w.writerow([i, int(fam.t_chi[i]), int(bool(fam.in_S[i])), repr(float(fam.values[i])), "" if np.isnan(th) else repr(float(th))])
    return buf.getvalue()


def read_family_csv(text: str) -> tuple[dict, list[dict]]:
    """Parse a family CSV back into (metadata, typed rows)."""
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            meta[key] = val
        else:
            body.append(line)
    reader = csv.DictReader(body)
    if tuple(reader.fieldnames or ()) != CSV_FIELDS:
        raise ValueError(f"unexpected header {reader.fieldnames}")
    rows = [
        {
            "chi_index": int(r["chi_index"]),
            "t_chi": int(r["t_chi"]),
            "in_S": r["in_S"] == "1",
            "value": float(r["value"]),
            "theta": float(r["theta"]) if r["theta"] else None,
        }
        for r in reader
    ]
    return meta, rows


def cmd_family(cfg: RunConfig) -> int:
    mod = PrimePowerModulus(cfg.p, cfg.k)
    fam = family_values(mod, cfg.a_list[0], workers=cfg.workers)
    _emit(family_csv(fam, _meta(cfg, mod)), cfg)
    return EXIT_OK


def dist_report(cfg: RunConfig) -> dict:
    start = time.perf_counter()
    mod = PrimePowerModulus(cfg.p, cfg.k)
    dlog = get_dlog(mod)
    fams = [family_values(mod, a, dlog, workers=cfg.workers) for a in cfg.a_list]
    report: dict = {"meta": _meta(cfg, mod), "q": mod.q}
    if len(fams) == 1:
        fam = fams[0]
        st = family_stats(fam, sq_filter=cfg.sq_filter)
        ref = ks_distance(mu_sample(cfg.seed, max(st.n_in_S, 1)), MU)
        report.update(
            a=fam.a,
            n_characters=st.n_characters,
            n_in_S=int(fam.in_S.sum()),
            ks_distance=st.ks_distance,
            zero_fraction=st.zero_fraction,
            moments={str(j): v for j, v in st.moments.items()},
            runtime_ms=None,
            moments_over_S={str(j): v for j, v in st.moments_s_normalized.items()},
            moments_limit={str(j): mu_moment(j) for j in st.moments},
            ks_distance_sato_tate=st.ks_distance_sato_tate,
            ks_reference_sample=ref,
            counts={
                "characters": st.n_characters,
                "in_S": int(fam.in_S.sum()),
                "zeros": int(np.sum(fam.values[fam.in_S] == 0.0)),
                "used": st.n_in_S,
            },
            excluded_count=st.excluded_count,
            sq_filter=cfg.sq_filter,
        )
        if mod.k == 2:
            report["zero_fraction_predicted"] = zero_fraction_prediction(mod.p, fam.a)
    else:
        orders = [tuple(cfg.m_list)] if cfg.m_list else list(itertools.product((1, 2), repeat=len(fams)))
        joints = {}
        for ms in orders:
            jm = joint_moment(mod, cfg.a_list, ms, sq_filter=cfg.sq_filter, dlog=dlog, families=fams)
            joints[",".join(map(str, ms))] = {"value": jm.value, "value_over_S": jm.value_s, "limit": jm.limit}
        in_s = s_mask(fams[0].t_chi, mod.p, cfg.a_list)
        keep = in_s if cfg.sq_filter else np.ones(mod.phi, dtype=bool)
        report.update(
            a=cfg.a_list,
            n_characters=mod.phi,
            n_in_S=int(in_s.sum()),
            ks_distance=[ks_distance(EmpiricalFamily(f.values[keep]), MU) for f in fams],
            zero_fraction=[float(np.mean(f.values[keep] == 0.0)) for f in fams],
            moments=joints,
            runtime_ms=None,
            excluded_count=int((~in_s).sum()),
            sq_filter=cfg.sq_filter,
        )
    if cfg.timing:
        report["runtime_ms"] = round((time.perf_counter() - start) * 1e3, 3)
    return _clean(report)


def cmd_dist(cfg: RunConfig) -> int:
    _emit(_json(dist_report(cfg)), cfg)
    return EXIT_OK


def count_report(cfg: RunConfig) -> dict:
    spec = CountingSpec(cfg.p, cfg.l, tuple(cfg.a_list), tuple(cfg.n_list) if cfg.n_list else None)
    yp = enum_Yprime(spec)
    n_char = count_Yprime_char(spec)
    dev, band = yprime_deviation_band(spec)
    report = {
        "meta": {"tool": "tkloos", "version": __version__, "p": spec.p, "l": spec.l, "a": list(spec.a_list)},
        "modulus": spec.modulus,
        "Yprime_enumerated": len(yp),
        "Yprime_qr_formula": n_char,
        "yprime_count": {"equal": len(yp) == n_char, "deviation": abs(len(yp) / spec.modulus - 1), "band": band},
    }
    if spec.n_list:
        F = build_F(spec.a_list, spec.n_list)
        y0 = enum_Y0(spec)
        y0p = enum_Y0(spec, prime=True)
        D, ints = F.integer_coeffs()
        killed = all(F.eval_mod(s.t, spec.modulus) == 0 for s in y0p)
        bound = y0prime_bound(spec, F)
        report.update(
            n=list(spec.n_list),
            Y0=len(y0),
            Y0prime=len(y0p),
            F={
                "degree": F.degree,
                "coefficients": [str(c) for c in F.coeffs],
                "cleared_denominator": D,
                "integer_coefficients": ints,
            },
            y0prime_bound={"F_vanishes_on_Y0prime": killed, "bound": bound, "margin": bound - len(y0p)},
        )
    return report


def cmd_count(cfg: RunConfig) -> int:
    _emit(_json(count_report(cfg)), cfg)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    from .verify import run_all

    lines: list[str] = []

    def report(line: str):
        lines.append(line)
        print(line, flush=True)

    results = run_all(report=report, workers=cfg.workers)
    if cfg.output:
        Path(cfg.output).write_text("\n".join(lines) + "\n")
    failed = [r for r in results if r.hard and not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed" + (f"; hard failures: {', '.join(r.cid for r in failed)}" if failed else ""))
    return EXIT_VERIFY if failed else EXIT_OK


COMMANDS = {"eval": cmd_eval, "family": cmd_family, "dist": cmd_dist, "count": cmd_count, "verify": cmd_verify}


def run(cfg: RunConfig) -> int:
    try:
        cfg.validate()
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"tkloos: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InternalInconsistency as exc:
        print(f"tkloos: verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except PRECONDITION_ERRORS as exc:
        print(f"tkloos: precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    return run(config_from_args(ns))


if __name__ == "__main__":
    sys.exit(main())
