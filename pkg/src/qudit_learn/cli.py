"""Command-line entry point: ``qudit-learn <command> [flags]``.

Commands: verify, learn, shadows, scaling, twirl, norms. Settings come from
built-in defaults, then an optional flat ``key = value`` file (``--config``),
then flags; later sources win. Exit status: 0 all checks pass, 1 a check
failed (results are still written), 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from . import core, experiments, learner, shadows, verify
from .results import ResultEnvelope, render, write_results
from .rng import substream

COMMANDS = ("verify", "learn", "shadows", "scaling", "twirl", "norms")
FORMATS = ("csv", "json")
STATES = ("maximally_mixed", "haar_pure", "spiked", "random_mixed")
VERIFY_DIMS = (2, 3, 5, 7)
DEFAULT_EPS = {"scaling": 0.5}
WORKERS_ENV = "QUDIT_LEARN_WORKERS"

SHADOW_Z_MAX = 5.0


@dataclass
class RunConfig:
    command: str
    d: int = 3
    epsilon: float | None = None
    delta: float = 0.1
    seed: int = 0
    trials: int = 200
    output_path: str | None = None
    format: str = "csv"
    workers: int = 1
    state: str = "haar_pure"
    spike: str = "1,2,1"
    spike_strength: float = 0.5
    samples: int = 20000
    observables: str = "D:1:0,D:0:1,D:1:1,E:1:2,T:0:1,T:1:2"
    d_list: str = "3,5,7,11,13"
    protocols: str = "conjugate_bell,single_copy_shadow"
    timing: bool = False

    def echo(self) -> dict:
        """Settings that determine the results (paths and workers excluded)."""
        keep = {"verify": ("d", "seed"),
                "learn": ("d", "epsilon", "delta", "seed", "state", "spike", "spike_strength"),
                "shadows": ("d", "seed", "state", "spike", "spike_strength", "samples",
                            "observables"),
                "scaling": ("epsilon", "seed", "trials", "d_list", "protocols"),
                "twirl": ("d",),
                "norms": ("d", "seed")}[self.command]
        return {"command": self.command, "format": self.format,
                **{k: getattr(self, k) for k in keep}}


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------- config

_ALIASES = {"eps": "epsilon", "out": "output_path", "output": "output_path"}


def _coerce(key: str, value):
    types = {f.name: f.type for f in fields(RunConfig)}
    kind = types[key]
    try:
        if value is None:
            return None
        if "bool" in kind:
            if isinstance(value, bool):
                return value
            v = str(value).strip().lower()
            if v not in ("1", "0", "true", "false", "yes", "no"):
                raise ValueError
            return v in ("1", "true", "yes")
        if "int" in kind:
            f = float(value)
            if f != int(f):
                raise ValueError
            return int(f)
        if "float" in kind:
            return float(value)
        return str(value).strip()
    except (TypeError, ValueError):
        raise UsageError(f"{key}: cannot parse {value!r} as {kind}") from None


def read_config_file(path: str) -> dict:
    """Flat key = value file; '#' starts a comment, dashes in keys become underscores."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        with open(path) as fh:
            parser.read_string("[run]\n" + fh.read(), source=path)
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc.strerror or exc}") from None
    except configparser.Error as exc:
        raise UsageError(f"malformed config {path!r}: {exc}") from None
    names = {f.name for f in fields(RunConfig)}
    out = {}
    for raw, value in parser.items("run"):
        key = _ALIASES.get(raw.replace("-", "_"), raw.replace("-", "_"))
        if key not in names or key == "command":
            raise UsageError(f"unknown config key {raw!r} in {path!r}")
        out[key] = _coerce(key, value)
    return out


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None or raw == "":
        return 1
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def _int_list(key: str, text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{key} must be comma-separated integers, got {text!r}") from None


def validate(cfg: RunConfig) -> RunConfig:
    if cfg.command not in COMMANDS:
        raise UsageError(f"unknown command {cfg.command!r}; choose from {', '.join(COMMANDS)}")
    if cfg.epsilon is None:
        cfg = replace(cfg, epsilon=DEFAULT_EPS.get(cfg.command, 0.3))
    if not core.is_prime(cfg.d):
        raise UsageError(f"d must be prime, got d={cfg.d}")
    if cfg.d > core.MAX_DIM:
        raise UsageError(f"d={cfg.d} exceeds the supported maximum {core.MAX_DIM}")
    if not 0 < cfg.epsilon < 1:
        raise UsageError(f"epsilon must lie in (0, 1), got {cfg.epsilon}")
    if not 0 < cfg.delta < 1:
        raise UsageError(f"delta must lie in (0, 1), got {cfg.delta}")
    if cfg.seed < 0:
        raise UsageError(f"seed must be non-negative, got {cfg.seed}")
    if cfg.trials < 1:
        raise UsageError(f"trials must be positive, got {cfg.trials}")
    if cfg.samples < 2:
        raise UsageError(f"samples must be at least 2, got {cfg.samples}")
    if cfg.workers < 1:
        raise UsageError(f"workers must be positive, got {cfg.workers}")
    if cfg.format not in FORMATS:
        raise UsageError(f"format must be csv or json, got {cfg.format!r}")
    if cfg.state not in STATES:
        raise UsageError(f"state must be one of {', '.join(STATES)}, got {cfg.state!r}")
    if cfg.state == "spiked":
        spike = _int_list("spike", cfg.spike)
        if len(spike) != 3 or spike[2] not in (1, -1) or core.canonical(cfg.d, *spike[:2]) == (0, 0):
            raise UsageError(f"spike must be q,p,r with (q, p) != (0, 0) and r = +-1, got {cfg.spike!r}")
        if not 0 < cfg.spike_strength < 1:
            raise UsageError(f"spike_strength must lie in (0, 1), got {cfg.spike_strength}")
    if cfg.command == "scaling":
        ds = _int_list("d_list", cfg.d_list)
        if not ds:
            raise UsageError("d_list is empty")
        for d in ds:
            if not core.is_prime(d):
                raise UsageError(f"d must be prime, got d={d} in d_list")
        for p in cfg.protocols.split(","):
            if p.strip() not in experiments.PROTOCOLS:
                raise UsageError(f"unknown protocol {p!r}; choose from "
                                 f"{', '.join(experiments.PROTOCOLS)}")
    return cfg


def build_config(args: argparse.Namespace) -> RunConfig:
    values = {"workers": _default_workers()}
    if args.config:
        values.update(read_config_file(args.config))
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None and f.name != "command":
            values[f.name] = _coerce(f.name, v)
    return validate(RunConfig(command=args.command, **values))


# ---------------------------------------------------------------- commands

def _state(cfg: RunConfig, d: int) -> core.DensityMatrix:
    if cfg.state == "spiked":
        q, p, r = _int_list("spike", cfg.spike)
        return core.make_test_state(d, "spiked", idx=(q, p), r=r, eps=cfg.spike_strength)
    if cfg.state == "random_mixed":
        return core.random_density_matrix(d, substream(cfg.seed, 1))
    return core.make_test_state(d, cfg.state, substream(cfg.seed, 1))


def run_verify(cfg: RunConfig):
    dims = sorted(set(VERIFY_DIMS) | {cfg.d})
    rows = [asdict(r) | {"passed": r.passed} for d in dims for r in verify.run_suite(d)]
    failed = sum(not r["passed"] for r in rows)
    return rows, {"passed": failed == 0, "n_checks": len(rows), "n_failed": failed,
                  "dimensions": dims}


def run_learn(cfg: RunConfig):
    d = cfg.d
    rho = _state(cfg, d)
    res = learner.learn_amplitudes(rho, learner.LearnerConfig(cfg.epsilon, cfg.delta),
                                   cfg.seed)
    exact = core.amplitudes(rho)
    rows = []
    for (q, p), y_hat in sorted(res.estimates.items()):
        y = exact[q, p]
        err = abs(y_hat - y)
        rows.append({"q": q, "p": p, "y_true_re": float(y.real), "y_true_im": float(y.imag),
                     "y_hat_re": float(y_hat.real), "y_hat_im": float(y_hat.imag),
                     "abs_error": float(err), "within_eps": bool(err <= cfg.epsilon)})
    hyp = res.hypothesis
    failed = sum(not r["within_eps"] for r in rows)
    return rows, {"passed": failed == 0 and not hyp.bound_exceeded, "n_indices": len(rows),
                  "n_failed": failed, "max_abs_error": max(r["abs_error"] for r in rows),
                  "error_count": hyp.error_count, "error_bound": hyp.T,
                  "bound_exceeded": hyp.bound_exceeded}


def parse_observables(text: str, d: int, seed: int):
    """Tokens D:q:p (displacement), E:q:p (Hermitian observable), T:i:j
    (transition element of a Clifford basis drawn from the seed)."""
    elem = shadows.sample_clifford(d, substream(seed, 2))
    out = []
    for tok in (t.strip() for t in text.split(",")):
        if not tok:
            continue
        parts = tok.split(":")
        try:
            kind, a, b = parts[0].upper(), int(parts[1]), int(parts[2])
            if len(parts) != 3:
                raise ValueError
        except (IndexError, ValueError):
            raise UsageError(f"bad observable {tok!r}; use D:q:p, E:q:p or T:i:j") from None
        if kind == "D":
            out.append((tok, core.displacement(d, a, b)))
        elif kind == "E":
            if core.canonical(d, a, b) == (0, 0):
                raise UsageError(f"observable {tok!r}: E needs (q, p) != (0, 0)")
            out.append((tok, core.displacement_observable(d, a, b)))
        elif kind == "T":
            if a % d == b % d:
                raise UsageError(f"observable {tok!r}: transition elements need i != j")
            out.append((tok, shadows.transition_observable(elem, a, b)))
        else:
            raise UsageError(f"bad observable kind in {tok!r}; use D, E or T")
    if not out:
        raise UsageError("observable list is empty")
    return out


def run_shadows(cfg: RunConfig):
    """Shadow estimates with two checks per observable: the mean against the
    exact value in units of the oracle standard error, and the empirical
    variance against the oracle in units of its own standard error."""
    d, n = cfg.d, cfg.samples
    rho = _state(cfg, d)
    obs = parse_observables(cfg.observables, d, cfg.seed)
    samples = shadows.shadow_sample(rho, n, substream(cfg.seed, 3))
    vals = shadows.shadow_values_many(samples, [O for _, O in obs])
    rows = []
    for (name, O), v in zip(obs, vals.T):
        true = complex(np.trace(O @ rho.matrix))
        est = complex(v.mean())
        dev2 = np.abs(v - est) ** 2
        emp_var = float(dev2.mean())
        ovar = shadows.variance_oracle(O, rho)
        z = abs(est - true) / math.sqrt(ovar / n) if ovar > 0 else abs(est - true) / 1e-300
        var_se = math.sqrt(max(float((dev2 ** 2).mean()) - emp_var**2, 0.0) / n)
        vz = (emp_var - ovar) / var_se if var_se > 0 else (0.0 if emp_var == ovar else math.inf)
        rows.append({"observable": name, "estimate_re": est.real, "estimate_im": est.imag,
                     "true_re": true.real, "true_im": true.imag, "z_score": float(z),
                     "oracle_var": ovar, "empirical_var": emp_var, "var_z_score": float(vz),
                     "passed": bool(z <= SHADOW_Z_MAX and abs(vz) <= SHADOW_Z_MAX)})
    failed = sum(not r["passed"] for r in rows)
    return rows, {"passed": failed == 0, "n_observables": len(rows), "n_failed": failed,
                  "samples": n, "z_max": SHADOW_Z_MAX}


def run_scaling(cfg: RunConfig):
    ds = _int_list("d_list", cfg.d_list)
    protos = [p.strip() for p in cfg.protocols.split(",")]
    rep = experiments.scaling_scan(ds, cfg.epsilon, protos, cfg.trials, cfg.seed,
                                   workers=cfg.workers)
    rows = [{"d": r.d, "protocol": r.protocol, "samples_to_success": r.samples_to_success,
             "success_rate": r.success_rate, "trials": r.trials, "seed": r.seed}
            for r in rep.rows]
    growth = {p: experiments.growth_factor(rep, p) for p in protos}
    reached = all(r["samples_to_success"] is not None for r in rows)
    return rows, {"passed": reached, "target": rep.target,
                  "growth_factor": {p: (None if math.isnan(g) else g) for p, g in growth.items()},
                  "grid": {"start": experiments.GRID_START, "ratio": 2,
                           "refinement": "one bisection step"}}


def run_twirl(cfg: RunConfig):
    d = cfg.d
    ks = [k for k, ds in shadows._TWIRL_SUPPORT.items() if d in ds]
    if not ks:
        raise UsageError(f"twirl supports d in {{2, 3, 5}}, got d={d}")
    rows = []
    for k in ks:
        brute = shadows.twirl_channel(k, d)
        P = shadows.twirl_theory(k, d)
        dev = float(np.max(np.abs(brute - P)))
        idem = float(np.max(np.abs(P @ P - P)))
        herm = float(np.max(np.abs(P - P.conj().T)))
        rows.append({"k": k, "d": d, "rank": int(round(np.trace(P).real)),
                     "max_deviation": dev, "idempotency": idem, "hermiticity": herm,
                     "passed": bool(dev <= 1e-9 and idem <= 1e-8 and herm <= 1e-9)})
    failed = sum(not r["passed"] for r in rows)
    return rows, {"passed": failed == 0, "n_failed": failed, "tolerance": 1e-9,
                  "idempotency_tolerance": 1e-8}


def run_norms(cfg: RunConfig):
    d = cfg.d
    if d == 2:
        raise UsageError("norm lemmas need an odd prime d, got d=2")
    ks = [k for k in (2, 4) if d**k <= experiments.MAX_NORM_DIM]
    rows = []
    for k in ks:
        for m in range(1, k + 1):
            val, perm = experiments.norm_lemma_check(d, m, k)
            rows.append({"lemma": "D_norm", "d": d, "m": m, "k": k, "value": val,
                         "bound": float(d), "flag": perm,
                         "passed": bool(perm and abs(val - d) <= 1e-9)})
        val, tight = experiments.e_norm_check(d, k)
        rows.append({"lemma": "E_norm", "d": d, "m": None, "k": k, "value": val,
                     "bound": float(2 ** (k / 2) * d), "flag": tight,
                     "passed": bool(val <= 2 ** (k / 2) * d + 1e-8)})
    if d <= 13:
        comm, trace_dev = experiments.tensor_commutation_check(d, seed=cfg.seed)
        rows.append({"lemma": "tensor_commutation", "d": d, "m": None, "k": 2, "value": comm,
                     "bound": 1e-10, "flag": None, "passed": bool(comm <= 1e-10)})
        rows.append({"lemma": "trace_identity", "d": d, "m": None, "k": 2, "value": trace_dev,
                     "bound": 1e-10, "flag": None, "passed": bool(trace_dev <= 1e-10)})
    failed = sum(not r["passed"] for r in rows)
    return rows, {"passed": failed == 0, "n_failed": failed,
                  "e_norm_within_2d": all(r["flag"] for r in rows if r["lemma"] == "E_norm")}


RUNNERS = {"verify": run_verify, "learn": run_learn, "shadows": run_shadows,
           "scaling": run_scaling, "twirl": run_twirl, "norms": run_norms}


def run(cfg: RunConfig) -> ResultEnvelope:
    cfg = validate(cfg)
    t0 = time.perf_counter()
    rows, summary = RUNNERS[cfg.command](cfg)
    meta = {"wall_time_s": time.perf_counter() - t0, "workers": cfg.workers}
    return ResultEnvelope(cfg.command, cfg.echo(), rows, summary, meta)


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qudit-learn", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="flat key = value file; flags override it")
    ap.add_argument("--d", type=int, help="prime dimension (default 3)")
    ap.add_argument("--eps", dest="epsilon", type=float,
                    help="precision epsilon (default 0.3; 0.5 for scaling)")
    ap.add_argument("--delta", type=float, help="failure probability (default 0.1)")
    ap.add_argument("--seed", type=int, help="master seed (default 0)")
    ap.add_argument("--trials", type=int, help="trials per scaling point (default 200)")
    ap.add_argument("--out", dest="output_path", help="output file (default stdout)")
    ap.add_argument("--format", choices=FORMATS, help="csv (default) or json")
    ap.add_argument("--workers", type=int,
                    help=f"worker processes (default ${WORKERS_ENV} or 1)")
    ap.add_argument("--state", choices=STATES, help="state for learn/shadows (default haar_pure)")
    ap.add_argument("--spike", help="q,p,r of the spiked state (default 1,2,1)")
    ap.add_argument("--spike-strength", dest="spike_strength", type=float,
                    help="strength of the spiked state (default 0.5)")
    ap.add_argument("--samples", type=int, help="shadow samples (default 20000)")
    ap.add_argument("--observables", help="comma list of D:q:p, E:q:p, T:i:j")
    ap.add_argument("--d-list", dest="d_list", help="dimensions for scaling (default 3,5,7,11,13)")
    ap.add_argument("--protocols", help="comma list of protocols for scaling")
    ap.add_argument("--timing", action="store_const", const=True,
                    help="include wall time in JSON output (breaks byte determinism)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        env = run(cfg)
        if cfg.output_path:
            write_results(env, cfg.output_path, cfg.format, cfg.timing)
        else:
            sys.stdout.write(render(env, cfg.format, cfg.timing))
    except (UsageError, ValueError, OSError) as exc:
        print(f"qudit-learn: error: {exc}", file=sys.stderr)
        return 2
    print(f"qudit-learn {cfg.command}: {'PASS' if env.passed else 'FAIL'} "
          f"({len(env.rows)} rows, {env.metadata['wall_time_s']:.2f}s)", file=sys.stderr)
    return 0 if env.passed else 1


if __name__ == "__main__":
    sys.exit(main())
