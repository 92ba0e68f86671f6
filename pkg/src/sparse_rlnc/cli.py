"""Command-line sweeps producing CSV.

    sparse-rlnc rank      --K 20 --p 0.8 --n-start 20 --n-end 40 --methods stein-chen,monte-carlo
    sparse-rlnc delivery  --preset fig2a
    sparse-rlnc overhead  --preset fig5 --trials 20000
    sparse-rlnc score     --preset fig3

Flags may also be read from a file with ``@flags.txt`` (one flag per line).
Diagnostics go to stderr; stdout (or --output) carries only CSV.
Exit codes: 0 success, 1 invalid configuration, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import dataclass, field, replace

from .analytic import DEFAULT_TAU, AooConfig, default_m_hat
from .delivery import (METHODS, OverheadDidNotConverge, average_overhead, delivery_probability,
                       make_provider, max_abs_gap, mse)
from .gf import MAX_DEGREE, CodingDistribution, field_new
from .montecarlo import (SimConfig, derive_seed, estimate_delivery_curve, estimate_overhead,
                         estimate_rank_prob_curve)

log = logging.getLogger("sparse_rlnc")

HEADERS = {
    "rank": ["K", "n", "q", "p", "method", "value", "ci_half_width", "m_star"],
    "delivery": ["K", "q", "p", "epsilon", "N", "method", "value", "ci_half_width"],
    "overhead": ["K", "q", "p", "epsilon", "method", "value", "ci_half_width", "censored_fraction"],
    "score": ["K", "q", "p", "epsilon", "method", "mse", "max_abs_gap"],
}

ANALYTIC = ("stein-chen", "lower-bound", "upper-bound", "exact-classic")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    K: list[int] = field(default_factory=lambda: [20])
    q: list[int] = field(default_factory=lambda: [2])
    p: list[float] = field(default_factory=lambda: [0.7])
    epsilon: list[float] = field(default_factory=lambda: [0.1])
    # (start, end, step); offsets from K when relative
    N_range: tuple[int, int, int] = (0, 30, 1)
    N_relative: bool = True
    n_range: tuple[int, int, int] = (0, 20, 1)
    n_relative: bool = True
    # explicit (K, N) pairs override N_range (p-sweep presets)
    KN_pairs: list[tuple[int, int]] | None = None
    methods: list[str] = field(default_factory=lambda: ["stein-chen", "monte-carlo"])
    tau: float = DEFAULT_TAU
    m_hat: int | None = None
    fixed_m: list[int] | None = None
    trials: int = 10_000
    seed: int = 0
    max_transmissions: int | None = None
    workers: int = 1
    output: str | None = None

    def validate(self):
        if self.command not in HEADERS:
            raise ConfigError(f"unknown subcommand {self.command!r}")
        for K in self.K:
            if K < 1:
                raise ConfigError(f"K must be >= 1, got {K}")
        for q in self.q:
            if q < 2 or q & (q - 1) or q > 2**MAX_DEGREE:
                raise ConfigError(f"q must be a power of two in [2, {2**MAX_DEGREE}], got {q}")
        for p in self.p:
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"p must lie in [0, 1], got {p}")
        for e in self.epsilon:
            if not 0.0 <= e <= 1.0:
                raise ConfigError(f"epsilon must lie in [0, 1], got {e}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigError(f"methods must be a non-empty subset of {', '.join(METHODS)}; got {bad or 'none'}")
        if "exact-classic" in self.methods:
            for q in self.q:
                for p in self.p:
                    if abs(p - 1.0 / q) > 1e-12:
                        raise ConfigError(f"exact-classic needs p == 1/q; got p={p}, q={q}")
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigError(f"tau must lie in [0, 1], got {self.tau}")
        if self.m_hat is not None and self.m_hat < 2:
            raise ConfigError(f"m-hat must be >= 2, got {self.m_hat}")
        if self.fixed_m is not None and any(m < 2 for m in self.fixed_m):
            raise ConfigError("fixed-m orders must be >= 2")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")
        for name, rng in (("N", self.N_range), ("n", self.n_range)):
            start, end, step = rng
            if step < 1:
                raise ConfigError(f"{name}-step must be >= 1, got {step}")
            if end < start:
                raise ConfigError(f"empty {name} range: start {start} > end {end}")
        if self.command in ("delivery", "score") and self.KN_pairs is None:
            for K in self.K:
                if min(self.Ns(K)) < K:
                    raise ConfigError(f"delivery needs N >= K; N range starts at {min(self.Ns(K))} for K={K}")
        if self.command == "score" and "monte-carlo" in self.methods and len(self.methods) == 1:
            raise ConfigError("score needs at least one analytic method to compare with simulation")

    def Ns(self, K: int) -> list[int]:
        start, end, step = self.N_range
        off = K if self.N_relative else 0
        return list(range(start + off, end + off + 1, step))

    def ns(self, K: int) -> list[int]:
        start, end, step = self.n_range
        off = K if self.n_relative else 0
        return list(range(start + off, end + off + 1, step))

    def jobs(self):
        """(K, N-list) pairs in deterministic grid order."""
        if self.KN_pairs is not None:
            return [(K, [N]) for K, N in self.KN_pairs]
        return [(K, self.Ns(K)) for K in self.K]

    def sim(self, *keys) -> SimConfig:
        return SimConfig(self.trials, derive_seed(self.seed, *keys), self.max_transmissions, self.workers)

    def aoo(self, K: int) -> AooConfig:
        return AooConfig(self.tau, self.m_hat if self.m_hat is not None else default_m_hat(K))


_AOO_DEFAULTS = dict(tau=DEFAULT_TAU, m_hat=None)
PRESETS = {
    "fig1": dict(commands={"rank"}, K=[20], q=[2], p=[0.8], n_range=(20, 40, 1), n_relative=False,
                 methods=["stein-chen"], fixed_m=list(range(2, 21))),
    "fig2a": dict(commands={"delivery", "score"}, K=[10, 20, 50], q=[2], p=[0.7], epsilon=[0.1],
                  N_range=(0, 30, 1), N_relative=True,
                  methods=["stein-chen", "lower-bound", "upper-bound", "monte-carlo"], **_AOO_DEFAULTS),
    "fig2b": dict(commands={"delivery", "score"}, K=[10, 20, 50], q=[2], p=[0.9], epsilon=[0.1],
                  N_range=(0, 30, 1), N_relative=True,
                  methods=["stein-chen", "lower-bound", "upper-bound", "monte-carlo"], **_AOO_DEFAULTS),
    "fig3": dict(commands={"delivery", "score"}, K=[20, 50], q=[16], p=[0.7, 0.9], epsilon=[0.1],
                 N_range=(0, 30, 1), N_relative=True,
                 methods=["stein-chen", "lower-bound", "upper-bound", "monte-carlo"], **_AOO_DEFAULTS),
    "fig4": dict(commands={"delivery"}, KN_pairs=[(20, 25), (50, 55)], q=[2, 16],
                 p=[round(0.5 + 0.05 * i, 2) for i in range(10)], epsilon=[0.1],
                 methods=["stein-chen", "lower-bound", "upper-bound", "monte-carlo"], **_AOO_DEFAULTS),
    "fig5": dict(commands={"overhead"}, K=[20, 50, 100], q=[2], p=[0.7, 0.9],
                 epsilon=[round(0.05 * i, 2) for i in range(7)],
                 methods=["stein-chen", "monte-carlo"], **_AOO_DEFAULTS),
}


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _int_list(s: str) -> list[int]:
    return [int(v) for v in s.split(",") if v.strip()]


def _float_list(s: str) -> list[float]:
    return [float(v) for v in s.split(",") if v.strip()]


def _str_list(s: str) -> list[str]:
    return [v.strip() for v in s.split(",") if v.strip()]


def _field_for(q: int):
    return field_new(q.bit_length() - 1)


def _pkey(x: float) -> int:
    return int(round(x * 1e9))


def run_rank(cfg: ExperimentConfig):
    for K in cfg.K:
        ns = cfg.ns(K)
        for q in cfg.q:
            f = _field_for(q)
            for p in cfg.p:
                dist = CodingDistribution(f, p)
                for method in cfg.methods:
                    if method == "monte-carlo":
                        ests = estimate_rank_prob_curve(K, ns, dist, cfg.sim(K, q, _pkey(p)))
                        for n, est in zip(ns, ests):
                            yield [K, n, q, p, method, est.mean, est.ci_half_width, None]
                    elif method == "stein-chen":
                        orders = cfg.fixed_m or [None]
                        for m in orders:
                            prov = make_provider(method, dist, aoo=cfg.aoo(K), fixed_m=m)
                            for n in ns:
                                m_used = prov.order(K, n) if n >= K else m
                                yield [K, n, q, p, method, prov(K, n), None, m_used]
                    else:
                        prov = make_provider(method, dist)
                        for n in ns:
                            yield [K, n, q, p, method, prov(K, n), None, None]


def _delivery_series(cfg, K, Ns, q, p, eps):
    """{method: (values, ci or None)} for one grid point, in cfg.methods order."""
    dist = CodingDistribution(_field_for(q), p)
    out = {}
    for method in cfg.methods:
        if method == "monte-carlo":
            ests = estimate_delivery_curve(K, Ns, eps, dist, cfg.sim(K, q, _pkey(p), _pkey(eps)))
            out[method] = ([e.mean for e in ests], [e.ci_half_width for e in ests])
        else:
            fixed = cfg.fixed_m[0] if cfg.fixed_m else None
            prov = make_provider(method, dist, aoo=cfg.aoo(K), fixed_m=fixed)
            out[method] = ([delivery_probability(K, N, eps, prov) for N in Ns], None)
    return out


def run_delivery(cfg: ExperimentConfig):
    for K, Ns in cfg.jobs():
        for q in cfg.q:
            for p in cfg.p:
                for eps in cfg.epsilon:
                    log.info("delivery K=%d q=%d p=%g eps=%g", K, q, p, eps)
                    series = _delivery_series(cfg, K, Ns, q, p, eps)
                    for method, (values, ci) in series.items():
                        for i, N in enumerate(Ns):
                            yield [K, q, p, eps, N, method, values[i], ci[i] if ci else None]


def run_overhead(cfg: ExperimentConfig):
    for K in cfg.K:
        for q in cfg.q:
            for p in cfg.p:
                dist = CodingDistribution(_field_for(q), p)
                provs = {m: make_provider(m, dist, aoo=cfg.aoo(K),
                                          fixed_m=cfg.fixed_m[0] if cfg.fixed_m else None)
                         for m in cfg.methods if m != "monte-carlo"}
                for eps in cfg.epsilon:
                    log.info("overhead K=%d q=%d p=%g eps=%g", K, q, p, eps)
                    for method in cfg.methods:
                        if method == "monte-carlo":
                            est = estimate_overhead(K, eps, dist, cfg.sim(K, q, _pkey(p), _pkey(eps)))
                            yield [K, q, p, eps, method, est.mean, est.ci_half_width, est.censored_fraction]
                        else:
                            t_max = cfg.max_transmissions or 50 * K
                            value = average_overhead(K, eps, provs[method], t_max=t_max)
                            yield [K, q, p, eps, method, value, None, None]


def run_score(cfg: ExperimentConfig):
    methods = list(cfg.methods)
    if "monte-carlo" not in methods:
        methods.append("monte-carlo")
    scored = replace(cfg, methods=methods)
    for K, Ns in cfg.jobs():
        for q in cfg.q:
            for p in cfg.p:
                for eps in cfg.epsilon:
                    series = _delivery_series(scored, K, Ns, q, p, eps)
                    sim = series["monte-carlo"][0]
                    for method in methods:
                        if method == "monte-carlo":
                            continue
                        model = series[method][0]
                        yield [K, q, p, eps, method, mse(model, sim), max_abs_gap(model, sim)]


RUNNERS = {"rank": run_rank, "delivery": run_delivery, "overhead": run_overhead, "score": run_score}


def render_csv(cfg: ExperimentConfig) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADERS[cfg.command])
    for row in RUNNERS[cfg.command](cfg):
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparse-rlnc", fromfile_prefix_chars="@",
        description="Full-rank and delivery probabilities of sparse random linear network codes.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("rank", "full-rank probability of K x n decoding matrices"),
                            ("delivery", "delivery probability after N transmissions"),
                            ("overhead", "average transmission overhead"),
                            ("score", "MSE and max gap of analytic curves against simulation")):
        sp = sub.add_parser(name, help=help_text, fromfile_prefix_chars="@")
        sp.add_argument("--preset", choices=sorted(PRESETS))
        sp.add_argument("--K", type=_int_list, help="comma-separated source message sizes")
        sp.add_argument("--q", type=_int_list, help="field sizes (powers of two)")
        sp.add_argument("--p", type=_float_list, help="coefficient zero probabilities")
        sp.add_argument("--epsilon", type=_float_list, help="packet erasure probabilities")
        sp.add_argument("--N-start", type=int)
        sp.add_argument("--N-end", type=int)
        sp.add_argument("--N-step", type=int)
        sp.add_argument("--n-start", type=int)
        sp.add_argument("--n-end", type=int)
        sp.add_argument("--n-step", type=int)
        sp.add_argument("--relative", action="store_true",
                        help="treat N/n ranges as offsets from K")
        sp.add_argument("--methods", type=_str_list, help=f"subset of {','.join(METHODS)}")
        sp.add_argument("--tau", type=float)
        sp.add_argument("--m-hat", type=int, help="AOO order cap (default ceil(3K/4))")
        sp.add_argument("--fixed-m", type=_int_list, help="fixed approximation order(s) instead of AOO")
        sp.add_argument("--trials", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--max-transmissions", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--output", "-o")
        sp.add_argument("--verbose", "-v", action="store_true")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig(args.command)
    if args.preset:
        preset = dict(PRESETS[args.preset])
        allowed = preset.pop("commands")
        if args.command not in allowed:
            raise ConfigError(f"preset {args.preset} applies to {', '.join(sorted(allowed))}, not {args.command}")
        cfg = replace(cfg, **preset)
    for name in ("K", "q", "p", "epsilon", "methods", "tau", "m_hat", "fixed_m", "trials", "seed",
                 "max_transmissions", "workers", "output"):
        value = getattr(args, name)
        if value is not None:
            setattr(cfg, name, value)
    for upper, attr in (("N", "N_range"), ("n", "n_range")):
        parts = [getattr(args, f"{upper}_{k}") for k in ("start", "end", "step")]
        if any(v is not None for v in parts):
            start, end, step = getattr(cfg, attr)
            start = parts[0] if parts[0] is not None else start
            end = parts[1] if parts[1] is not None else end
            step = parts[2] if parts[2] is not None else step
            setattr(cfg, attr, (start, end, step))
            setattr(cfg, f"{upper}_relative", args.relative)
            if upper == "N":
                cfg.KN_pairs = None
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = config_from_args(args)
        text = render_csv(cfg)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 1
    except OverheadDidNotConverge as exc:
        print(f"runtime failure: {exc} (partial sum {exc.partial:.6g})", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
