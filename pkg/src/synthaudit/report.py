"""Audit orchestration and report emission.

``run_audit`` executes splits, preprocessing, profiles, indicators,
anonymity checks and attacks; each configured item yields exactly one
result or one error entry and the run carries on past item failures.
``emit`` writes report.json, profiles.csv, attacks.csv, timings.json and
figures.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from . import __version__
from . import anonymity as anon
from . import attacks as atk
from . import generators as gen
from . import indicators as ind
from .config import AuditConfig, referenced_attributes
from .data import Dataset, SplitPurpose, SplitSpec, load_csv, load_csv_many, load_schema, split
from .distance import Aggregate, Embed, MetricSpec, Metric, fit_preprocessor, strategy_named
from .errors import AuditError, ConfigError, DataIOError, NotEnoughUniques, TooSmall
from .nn import DistanceProfile, ProfileKind, profile

log = logging.getLogger(__name__)

PROFILE_KINDS = ("SRD", "SSD", "RSD", "RRD")
ATTACK_COLUMNS = ("attack", "target_set", "attempt", "guess", "truth", "correct")


@dataclass
class AuditResult:
    report: Dict[str, Any]
    profiles: Dict[str, DistanceProfile] = field(default_factory=dict)
    attack_rows: List[Tuple] = field(default_factory=list)
    mia_scores: Optional[Tuple[np.ndarray, np.ndarray, float]] = None
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return 1 if self.report["errors"] else 0


# ---------------------------------------------------------------- helpers


def _plain(x: Any) -> Any:
    """Convert results into JSON-ready builtins."""
    if dataclasses.is_dataclass(x) and not isinstance(x, type):
        return {f.name: _plain(getattr(x, f.name)) for f in dataclasses.fields(x) if f.repr}
    if isinstance(x, enum.Enum):
        return x.value
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    return x


def _round(x: Any) -> Any:
    if isinstance(x, float):
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.12g}")
    if isinstance(x, dict):
        return {k: _round(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_round(v) for v in x]
    return x


def to_json(report: Dict[str, Any]) -> str:
    return json.dumps(_round(_plain(report)), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _error_text(exc: BaseException) -> str:
    return f"{type(exc).__name__}: {exc}"


class _Runner:
    def __init__(self, report: Dict[str, Any], timings: Dict[str, float]):
        self.report = report
        self.timings = timings

    def item(self, section: Dict[str, Any], name: str, where: str, fn: Callable[[], Any]) -> Any:
        t0 = time.perf_counter()
        try:
            value = fn()
        except Exception as exc:  # recorded per item; the run continues
            if not isinstance(exc, AuditError):
                log.exception("unexpected failure in %s", where)
            section[name] = {"error": _error_text(exc)}
            self.report["errors"].append({"item": where, "error": _error_text(exc)})
            value = None
        else:
            section[name] = _plain(value)
        self.timings[where] = time.perf_counter() - t0
        return value


def _dcr_plain(s: ind.DcrSummary) -> Dict[str, Any]:
    out = _plain(s)
    out["n_flagged"] = int(np.sum(s.flags))
    out["flagged_indices"] = [int(i) for i in np.nonzero(s.flags)[0][:100]]
    return out


def _format_cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.12g}"
    if isinstance(v, tuple) and v and all(isinstance(c, tuple) and len(c) == 3 for c in v):
        return " & ".join(f"{a}{op}{'' if val is None else (f'{val:.12g}' if isinstance(val, float) else val)}" for a, op, val in v)
    if isinstance(v, (tuple, list)):
        return json.dumps(_round(_plain(v)))
    return str(v)


# ----------------------------------------------------------------- loading


def _load(cfg: AuditConfig) -> Tuple[Dataset, Optional[Dataset]]:
    schema = load_schema(cfg.schema) if cfg.schema else None
    if cfg.synthetic is not None:
        real, synth = load_csv_many([cfg.real, cfg.synthetic], ["real", "synthetic"], schema)
        return real, synth
    return load_csv(cfg.real, schema, "real"), None


def _check_refs(cfg: AuditConfig, real: Dataset) -> None:
    names = set(real.schema.names)
    for where, attr in referenced_attributes(cfg):
        if attr not in names:
            raise ConfigError(f"{where}: unknown attribute {attr!r}")


def _preprocessor_args(cfg: AuditConfig):
    d = cfg.distance
    metric = MetricSpec.named(d.get("metric", "gower"), bool(d.get("normalize", False)))
    sname = d.get("strategy", "raw")
    params = {}
    if sname == "bin":
        params["n_bins"] = int(d.get("n_bins", 10))
    if sname == "aggregate":
        agg = dict(d.get("aggregate", {}))
        if "numeric" in agg:
            agg["numeric"] = MetricSpec.named(agg["numeric"])
        if "categorical" in agg:
            agg["categorical"] = MetricSpec.named(agg["categorical"])
        params.update(agg)
    return strategy_named(sname, **params), metric


# --------------------------------------------------------------- the audit


def run_audit(cfg: AuditConfig, threads: int = 1) -> AuditResult:
    """Run the configured audit. Raises ConfigError / DataIOError for fatal problems."""
    timings: Dict[str, float] = {}
    report: Dict[str, Any] = {
        "tool": "synthaudit",
        "version": __version__,
        "config": cfg.raw,
        "warnings": [],
        "errors": [],
    }
    run = _Runner(report, timings)
    result = AuditResult(report, timings=timings)

    t0 = time.perf_counter()
    real, synth_file = _load(cfg)
    _check_refs(cfg, real)
    timings["load"] = time.perf_counter() - t0

    # splits: real -> (d1, holdout); d1 -> (train, control). Fractions name the held-out share.
    d1, holdout = real, None
    if cfg.holdout:
        d1, holdout = split(real, SplitSpec(1.0 - cfg.holdout.fraction, cfg.holdout.seed, SplitPurpose.HOLDOUT))
    train, control = d1.relabel("train"), None
    if cfg.control:
        train, control = split(d1, SplitSpec(1.0 - cfg.control.fraction, cfg.control.seed, SplitPurpose.CONTROL))
    if holdout is None:
        report["warnings"].append("no holdout split: RRD is computed leave-self-out on the training records")

    # generator and synthetic data
    generator = None
    canaries: List[tuple] = []
    canary_items = [s for s in cfg.suite if s["kind"] == "canary_recovery" and s.get("canaries")]
    if canary_items:
        cpath = (cfg.base_dir / canary_items[0]["canaries"]).resolve()
        canaries = list(load_csv(cpath, real.schema, "canary").rows)
    if cfg.generator is not None:
        gcfg = cfg.generator
        kind = gen.kind_named(gcfg["kind"], **gcfg.get("params", {}))
        fit_on = train
        if canaries and synth_file is None:
            from .data import insert_canaries

            fit_on, _ = insert_canaries(train, canaries, gcfg["seed"])
        generator = gen.fit(kind, fit_on, gcfg["seed"])
    if synth_file is not None:
        synthetic = synth_file
    elif isinstance(generator.kind, gen.SeedBasedNoise):
        synthetic = gen.seed_generate(generator, train, cfg.generator["seed"])
    else:
        synthetic = gen.sample(generator, int(cfg.generator.get("n") or len(train)), cfg.generator["seed"])
    synthetic = synthetic.relabel("synthetic")
    report["data"] = {
        "n_real": len(real),
        "n_train": len(train),
        "n_holdout": len(holdout) if holdout is not None else 0,
        "n_control": len(control) if control is not None else 0,
        "n_synthetic": len(synthetic),
        "n_canaries": len(canaries),
        "schema": real.schema.to_json(),
    }

    strategy, metric = _preprocessor_args(cfg)
    try:
        p = fit_preprocessor(strategy, metric, train, synthetic)
    except AuditError as exc:
        raise ConfigError(f"distance: {exc}") from exc
    report["warnings"].extend(p.warnings)
    report["distance"] = {"metric": metric.metric.value, "strategy": cfg.distance.get("strategy", "raw"), "normalize": metric.normalize}
    if metric.metric is Metric.MAHALANOBIS:
        report["distance"]["covariance"] = "pooled real+synthetic, ridge 1e-6*trace/d"

    # profiles
    profiles_out: Dict[str, Any] = {}
    kw = dict(n_jobs=threads)
    refs = {
        "SRD": (synthetic, train),
        "SSD": (synthetic, synthetic),
        "RSD": (train, synthetic),
        "RRD": (train, holdout if holdout is not None else train),
    }
    for name in PROFILE_KINDS:
        q, r = refs[name]
        prof = run.item(profiles_out, name, f"profiles.{name}", lambda q=q, r=r, name=name: profile(q, r, ProfileKind(name), p, **kw))
        if prof is not None:
            result.profiles[name] = prof
            profiles_out[name] = {
                "n": len(prof),
                "same_set": prof.same_set,
                "stats": ind._stats(prof.values),
                "percentiles": ind._percentiles(prof.values),
            }
    report["profiles"] = profiles_out

    # indicators
    ind_out: Dict[str, Any] = {}
    icfg = cfg.indicators
    srd, rrd = result.profiles.get("SRD"), result.profiles.get("RRD")

    def need_profiles():
        if srd is None or rrd is None:
            raise TooSmall("SRD/RRD profiles are unavailable")
        return srd, rrd

    if "ims" in icfg:
        run.item(ind_out, "ims", "indicators.ims", lambda: ind.ims(train, synthetic, float(icfg["ims"].get("tolerance", 0.0))))
    if "dcr" in icfg:
        q = float(icfg["dcr"].get("q", 5.0))

        def dcr():
            s, r = need_profiles()
            out = _dcr_plain(ind.dcr_summary(s, r))
            out["below_percentile_share"] = ind.below_percentile_share(s, r, q)
            out["q"] = q
            return out

        run.item(ind_out, "dcr", "indicators.dcr", dcr)
    if "ks" in icfg:
        c = icfg["ks"]
        run.item(ind_out, "ks", "indicators.ks", lambda: ind.ks_two_sample(need_profiles()[0].values, need_profiles()[1].values, float(c.get("alpha", 0.05)), int(c["seed"])))
    if "adversarial_accuracy" in icfg:

        def aa():
            out = {"train": ind.adversarial_accuracy(train, synthetic, p, **kw)}
            if holdout is not None:
                out["holdout"] = ind.adversarial_accuracy(holdout, synthetic, p, **kw)
                out["privacy_loss"] = ind.privacy_loss(out["train"], out["holdout"])
            return out

        run.item(ind_out, "adversarial_accuracy", "indicators.adversarial_accuracy", aa)
    if "tcap" in icfg:
        c = icfg["tcap"]
        run.item(ind_out, "tcap", "indicators.tcap", lambda: ind.tcap(train, synthetic, c.get("keys", []), c.get("target", "")))
    if "mmd" in icfg:
        c = icfg["mmd"]

        def mmd():
            cap = int(c.get("max_rows", 2000))
            rng = np.random.Generator(np.random.PCG64(int(c["seed"])))

            def cut(d):
                return d if len(d) <= cap else d.take(np.sort(rng.choice(len(d), size=cap, replace=False)))

            a, b = cut(train), cut(synthetic)
            pe = fit_preprocessor(Embed(), MetricSpec(Metric.EUCLIDEAN), a, b)
            return {"mmd2": ind.mmd(a, b, pe), "n_real": len(a), "n_synthetic": len(b)}

        run.item(ind_out, "mmd", "indicators.mmd", mmd)
    if "seed_based" in icfg:

        def seeded():
            if generator is None or not isinstance(generator.kind, gen.SeedBasedNoise) or synth_file is not None:
                raise ConfigError("seed-based indicators need a seed_based_noise generator section and no synthetic file")
            return ind.seed_indicators(train, synthetic, p)

        run.item(ind_out, "seed_based", "indicators.seed_based", seeded)
    report["indicators"] = ind_out

    # anonymity
    if cfg.anonymity is not None:
        report["anonymity"] = _anonymity(cfg, run, train, synthetic, generator, synth_file is not None)

    # attacks
    if cfg.attacks is not None:
        report["attacks"] = _attacks(cfg, run, result, p, train, control, holdout, real, synthetic, generator, canaries)
    return result


def _anonymity(cfg, run, train, synthetic, generator, external_synth) -> Dict[str, Any]:
    a = cfg.anonymity
    out: Dict[str, Any] = {}
    qis = list(a["quasi_identifiers"])
    nb = a.get("n_bins")
    run.item(out, "k_anonymity", "anonymity.k_anonymity", lambda: {"synthetic": anon.k_anonymity(synthetic, qis, nb), "real": anon.k_anonymity(train, qis, nb)})
    if a.get("sensitive"):
        s = a["sensitive"]
        run.item(out, "l_diversity", "anonymity.l_diversity", lambda: {"synthetic": anon.l_diversity(synthetic, qis, s, nb), "real": anon.l_diversity(train, qis, s, nb)})
    pd = a.get("plausible_deniability")
    if pd is not None:

        def pdcheck():
            if generator is None or not isinstance(generator.kind, gen.SeedBasedNoise) or external_synth:
                raise ConfigError("plausible deniability needs a seed_based_noise generator section and no synthetic file")
            params = anon.PdParams(int(pd["k"]), float(pd["gamma"]))
            n_check = min(int(pd.get("max_records", 50)), len(synthetic))
            dens = lambda s, o: gen.density(generator, s, o)  # noqa: E731
            res = [anon.pd_check(dens, train, synthetic.rows[i], i, params) for i in range(n_check)]
            return {"k": params.k, "gamma": params.gamma, "n_checked": n_check, "releasable_share": sum(r.releasable for r in res) / n_check}

        run.item(out, "plausible_deniability", "anonymity.plausible_deniability", pdcheck)
    return out


def _risk_entry(risk: atk.RiskEstimate) -> Dict[str, Any]:
    return _plain(risk)


def _attacks(cfg, run, result, p, train, control, holdout, real, synthetic, generator, canaries) -> List[Dict[str, Any]]:
    acfg = cfg.attacks
    master = int(acfg.get("seed", 0))
    n_attacks = int(acfg.get("n_attacks", 100))
    domain = atk.DomainInfo.from_dataset(synthetic)
    out: List[Dict[str, Any]] = []
    outside = control if control is not None else holdout

    for i, item in enumerate(cfg.suite):
        kind = item["kind"]
        label = item.get("name") or f"{i}_{kind}"
        seed = int(item.get("seed", master))
        entry: Dict[str, Any] = {"index": i, "kind": kind, "label": label, "seed": seed, "wp29": atk.WP29_TAG.get(kind)}
        holder: Dict[str, Any] = {}

        def record(outcome: atk.AttackOutcome, target_set: str):
            for j, a in enumerate(outcome.attempts):
                result.attack_rows.append((label, target_set, j, a.guess, a.truth, a.correct))

        def summary(o: atk.AttackOutcome) -> Dict[str, Any]:
            return {"n_attempts": o.n_attempts, "n_successes": o.n_successes, "metrics": o.metrics}

        def body(item=item, kind=kind, seed=seed, entry=entry):
            res: Dict[str, Any] = {}
            if kind == "canary_recovery":
                if not canaries:
                    raise ConfigError("canary_recovery needs a canaries CSV")
                return {"recovery": atk.canary_recovery(synthetic, canaries, p, epsilon=float(item.get("epsilon", 0.0)))}
            if kind == "mia_distance":
                if outside is None:
                    raise TooSmall("membership inference needs a control or holdout split for non-members")
                members = train
                if len(members) > n_attacks:
                    members = train.take(np.sort(np.random.Generator(np.random.PCG64(seed)).choice(len(train), n_attacks, replace=False)))
                non = outside if len(outside) <= n_attacks else outside.take(np.sort(np.random.Generator(np.random.PCG64(seed + 1)).choice(len(outside), n_attacks, replace=False)))
                o = atk.mia_distance(synthetic, members, non, p)
                record(o, "members+non_members")
                labels = [a.truth for a in o.attempts]
                result.mia_scores = (np.array([a.score for a in o.attempts]), np.array(labels), o.metrics["auc"])
                base = atk.random_baseline("mia", domain, o.n_attempts, seed, labels=labels)
                record(base, "random")
                res["outcome"] = summary(o)
                res["baseline_random"] = summary(base)
                res["risk_random"] = _risk_entry(atk.risk_estimate(o, base))
                return res
            if kind == "shadow_mia":
                if generator is None:
                    raise ConfigError("shadow_mia needs a generator section")
                if outside is None:
                    raise TooSmall("shadow_mia needs a control or holdout split for non-member targets")
                n_t = int(item.get("n_targets", 10))
                rng = np.random.Generator(np.random.PCG64(seed))
                mem = train.take(np.sort(rng.choice(len(train), min(n_t, len(train)), replace=False)))
                non = outside.take(np.sort(rng.choice(len(outside), min(n_t, len(outside)), replace=False)))
                targets = Dataset(train.schema, mem.rows + non.rows, "targets", validate=False)
                labels = [True] * len(mem) + [False] * len(non)
                threat = atk.ThreatModel(atk.Box.BLACK, atk.BlackBoxHandle(generator))
                kind_obj = generator.kind
                o = atk.shadow_mia(
                    threat,
                    lambda d, s: gen.fit(kind_obj, d, s),
                    real,
                    targets,
                    labels,
                    int(item.get("m", 4)),
                    int(item.get("n_train", min(200, len(train)))),
                    synthetic=synthetic,
                    p=p,
                    rng_seed=seed,
                    n_samples=int(item.get("n_samples", min(len(synthetic), 500))),
                )
                record(o, "members+non_members")
                base = atk.random_baseline("mia", domain, o.n_attempts, seed, labels=labels)
                record(base, "random")
                res["outcome"] = summary(o)
                res["baseline_random"] = summary(base)
                res["risk_random"] = _risk_entry(atk.risk_estimate(o, base))
                return res

            if kind == "singling_out":
                mode = atk.Multivariate(int(item.get("width", 3))) if item.get("mode", "univariate") == "multivariate" else atk.Univariate()

                def attack(targets):
                    try:
                        return atk.singling_out_attack(synthetic, targets, mode, n_attacks, seed)
                    except NotEnoughUniques as exc:
                        entry.setdefault("warnings", []).append(str(exc))
                        return exc.outcome

                def baseline(n):
                    width = mode.width if isinstance(mode, atk.Multivariate) else 1
                    return atk.random_baseline("singling_out", domain, n, seed, targets=train, width=width)

            elif kind == "linkage":
                a_cols, b_cols, k = item.get("aux_a", []), item.get("aux_b", []), int(item.get("k", 1))

                def attack(targets):
                    return atk.linkage_attack(synthetic, targets, a_cols, b_cols, k, p, rng_seed=seed, n_attacks=n_attacks)

                def baseline(n):
                    return atk.random_baseline("linkage", domain, n, seed, k=k)

            else:  # inference
                secret, known, k = item.get("secret"), item.get("known"), int(item.get("k", 1))
                tol = item.get("numeric_tolerance")

                def attack(targets):
                    return atk.inference_attack(synthetic, targets, secret, known, k, p, numeric_tolerance=tol, n_attacks=n_attacks, rng_seed=seed)

                def baseline(n):
                    return atk.random_baseline("inference", domain, n, seed, targets=train, secret=secret, numeric_tolerance=tol)

            o = attack(train)
            record(o, "train")
            res["outcome"] = summary(o)
            if o.n_attempts:
                base = baseline(o.n_attempts)
                record(base, "random")
                res["baseline_random"] = summary(base)
                res["risk_random"] = _risk_entry(atk.risk_estimate(o, base))
            if control is not None:
                oc = attack(control)
                record(oc, "control")
                res["baseline_control"] = summary(oc)
                if o.n_attempts and oc.n_attempts:
                    res["risk_control"] = _risk_entry(atk.risk_estimate(o, oc, atk.BaselineKind.CONTROL))
            return res

        run.item(holder, "result", f"attacks[{i}].{kind}", body)
        entry.update(holder["result"])
        out.append(entry)
    return out


# ------------------------------------------------------------------- emit


def emit(result: AuditResult, out_dir, figures: bool = True) -> List[Path]:
    """Write the report files into ``out_dir``; returns the written paths."""
    out = Path(out_dir)
    written: List[Path] = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        path = out / "report.json"
        path.write_text(to_json(result.report), encoding="utf-8")
        written.append(path)

        path = out / "profiles.csv"
        cols = [c for k in PROFILE_KINDS for c in (k, f"{k}_argmin")]
        n = max((len(pr) for pr in result.profiles.values()), default=0)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index"] + cols)
            for i in range(n):
                row: List[str] = [str(i)]
                for k in PROFILE_KINDS:
                    pr = result.profiles.get(k)
                    if pr is not None and i < len(pr):
                        row += [f"{float(pr.values[i]):.12g}", str(int(pr.argmin_index[i]))]
                    else:
                        row += ["", ""]
                w.writerow(row)
        written.append(path)

        path = out / "attacks.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(ATTACK_COLUMNS)
            for label, target_set, j, guess, truth, correct in result.attack_rows:
                w.writerow([label, target_set, j, _format_cell(guess), _format_cell(truth), "1" if correct else "0"])
        written.append(path)

        path = out / "timings.json"
        path.write_text(json.dumps({k: round(v, 6) for k, v in result.timings.items()}, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        written.append(path)

        if figures:
            written.extend(_figures(result, out))
    except OSError as exc:
        raise DataIOError(f"cannot write report to {out}: {exc}") from exc
    return written


def _figures(result: AuditResult, out: Path) -> List[Path]:
    from . import plotting

    paths = []
    srd, rrd = result.profiles.get("SRD"), result.profiles.get("RRD")
    if srd is not None and rrd is not None:
        paths.append(plotting.dcr_hist(srd.values, rrd.values, out / "dcr_hist.png"))
        paths.append(plotting.dcr_ecdf(srd.values, rrd.values, out / "dcr_ecdf.png"))
    if result.mia_scores is not None:
        scores, labels, auc = result.mia_scores
        paths.append(plotting.mia_roc(scores, labels, out / "mia_roc.png", auc))
    risks = {}
    for e in result.report.get("attacks", []):
        for key in ("risk_random", "risk_control"):
            if isinstance(e.get(key), dict):
                risks[f"{e['label']} ({key.split('_')[1]})"] = e[key]
    if risks:
        paths.append(plotting.attack_risks(risks, out / "attack_risks.png"))
    return paths
