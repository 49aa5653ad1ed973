"""Experiment configuration, sweep execution and report files.

A config is one INI file. Sections:

``[experiment]``   seed, rounds_per_point, calibration, selection_period
``[nodes]``        ``<id> = Cloud | Edge | Terminal <P,I,C,M>``
``[links]``        ``<a>-<b> = <class> [key=value ...]``
``[codecs]``       ``<tag> = raw_bytes=... compression_ratio=... [base_fidelity=...]``
``[attacks]``      ``<kind> = probability=... [severity=...] [modality=...]``
``[defenses]``     detection probabilities and the reputation switch
``[controller]``   terminal, latency_budget_s, min_accuracy (for ``variants = auto``)
``[sweep.<name>]`` scenario, snr_db list, variants (list, ``all`` or ``auto``)
``[manifest]``     written by :func:`write_manifest`; checked on re-run

Omitted ``[nodes]``/``[links]``/``[codecs]`` sections fall back to the
built-in defaults. Unknown sections or keys are rejected with their line.
"""

from __future__ import annotations

import configparser
import csv
import io
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .calibration import CalibrationTable, compute_cost, default_calibration_path
from .controller import NoFeasibleMode, SelectionRequest, select_mode
from .core import (
    ALL_VARIANTS,
    CetError,
    LinkClass,
    LinkSpec,
    Modality,
    ModeVariant,
    Node,
    NodeKind,
    Scenario,
    ScenarioConfig,
    parse_modality_set,
)
from .engine import EventKind, Simulator, Trace, rng_stream
from .netmodel import DEFAULT_LINKS, Topology, TopologyError, default_topology
from .protocols import DefenseSpec, ModeInfeasible, ReputationState, RoundResult, run_round
from .semantics import DEFAULT_CODECS, AttackKind, AttackSpec, CodecSpec

__all__ = [
    "ConfigError",
    "CSV_HEADER",
    "Sweep",
    "ControllerSpec",
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "run_experiment",
    "write_results",
    "write_manifest",
]

log = logging.getLogger(__name__)

CSV_HEADER = (
    "mode,variant,scenario,snr_db,seed,round,accuracy,inference_ms,transmission_ms,"
    "total_ms,flops_g,memory_mb,bytes_tx,attacks_hit,defenses_hit"
)


class ConfigError(CetError):
    def __init__(self, message: str, line: Optional[int] = None, source: str = "<config>"):
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)
        self.line = line


@dataclass(frozen=True)
class Sweep:
    name: str
    scenario: Scenario
    snr_db: tuple[float, ...]
    variants: Optional[tuple[ModeVariant, ...]]  # None means controller-driven

    @property
    def auto(self) -> bool:
        return self.variants is None


@dataclass(frozen=True)
class ControllerSpec:
    terminal: Optional[int] = None
    latency_budget_s: float = 0.05
    min_accuracy: float = 0.0


@dataclass
class ExperimentConfig:
    seed: int
    rounds_per_point: int
    calibration_path: Path
    topology: Topology
    codecs: Mapping[Modality, CodecSpec]
    attacks: tuple[AttackSpec, ...]
    defenses: DefenseSpec
    sweeps: tuple[Sweep, ...]
    controller: ControllerSpec = ControllerSpec()
    selection_period: int = 1
    calibration_sha256: Optional[str] = None
    source: str = "<config>"

    def points(self):
        """(sweep, snr_db, variant-or-None) in canonical output order."""
        for sw in self.sweeps:
            for snr in sw.snr_db:
                for v in sw.variants if sw.variants is not None else (None,):
                    yield sw, snr, v


_ALLOWED = {
    "experiment": {"seed", "rounds_per_point", "calibration", "selection_period"},
    "defenses": {"watermark_detection", "directive_verification", "consistency_detection", "reputation"},
    "controller": {"terminal", "latency_budget_s", "min_accuracy"},
    "sweep": {"scenario", "snr_db", "variants"},
    "manifest": {"calibration_sha256", "generator"},
}
_FREE_KEYS = {"nodes", "links", "codecs", "attacks"}


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    lines: dict[tuple[str, str], int] = {}
    section = ""
    for lineno, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if not s or s[0] in "#;":
            continue
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
            lines.setdefault((section, ""), lineno)
            continue
        lines.setdefault((section, s.split("=", 1)[0].strip()), lineno)
    return lines


def _kv_tokens(text: str) -> dict[str, str]:
    out = {}
    for tok in text.split():
        k, sep, v = tok.partition("=")
        if not sep:
            raise ValueError(f"expected key=value, got {tok!r}")
        out[k] = v
    return out


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_config(text: str, source: str = "<config>", base_dir: Optional[Path] = None) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], getattr(exc, "lineno", None), source) from None
    lines = _key_lines(text)
    base_dir = base_dir or Path.cwd()

    def err(msg: str, section: str, key: str = "") -> ConfigError:
        return ConfigError(f"[{section}] {msg}", lines.get((section, key)), source)

    for section in cp.sections():
        kind = "sweep" if section.startswith("sweep.") else section
        if kind not in _ALLOWED and kind not in _FREE_KEYS:
            raise err("unknown section", section)
        if kind in _ALLOWED:
            for key in cp[section]:
                if key not in _ALLOWED[kind]:
                    raise err(f"unknown key {key!r}", section, key)

    def get(section: str, key: str, conv, default):
        if not cp.has_option(section, key):
            return default
        try:
            return conv(cp.get(section, key))
        except (ValueError, CetError) as exc:
            raise err(f"{key}: {exc}", section, key) from None

    seed = get("experiment", "seed", int, 42)
    if not 0 <= seed < 2**64:
        raise err("seed must be an unsigned 64-bit integer", "experiment", "seed")
    rounds = get("experiment", "rounds_per_point", int, 12)
    if rounds < 1:
        raise err("rounds_per_point must be positive", "experiment", "rounds_per_point")
    period = get("experiment", "selection_period", int, 1)
    if period < 1:
        raise err("selection_period must be positive", "experiment", "selection_period")
    cal_text = get("experiment", "calibration", str, "default").strip()
    if cal_text == "default":
        cal_path = default_calibration_path()
    else:
        cal_path = Path(cal_text)
        if not cal_path.is_absolute():
            cal_path = base_dir / cal_path

    # topology
    if cp.has_section("nodes") or cp.has_section("links"):
        if not (cp.has_section("nodes") and cp.has_section("links")):
            raise err("[nodes] and [links] must be given together", "nodes" if cp.has_section("nodes") else "links")
        nodes = []
        for key, value in cp.items("nodes"):
            try:
                kind_text, _, sensors = value.strip().partition(" ")
                nodes.append(Node(int(key), NodeKind(kind_text), parse_modality_set(sensors)))
            except (ValueError, CetError) as exc:
                raise err(f"node {key}: {exc}", "nodes", key) from None
        links = []
        for key, value in cp.items("links"):
            try:
                a, _, b = key.partition("-")
                class_text, _, rest = value.strip().partition(" ")
                link_class = LinkClass(class_text)
                opts = _kv_tokens(rest)
                d = DEFAULT_LINKS[link_class]
                unknown = set(opts) - {"bandwidth_bits_per_s", "propagation_s", "per_hop_processing_s", "up"}
                if unknown:
                    raise ValueError(f"unknown link option(s) {sorted(unknown)}")
                links.append(
                    LinkSpec(
                        (int(a), int(b)),
                        float(opts.get("bandwidth_bits_per_s", d.bandwidth_bits_per_s)),
                        float(opts.get("propagation_s", d.propagation_s)),
                        float(opts.get("per_hop_processing_s", d.per_hop_processing_s)),
                        link_class,
                        _bool(opts.get("up", "true")),
                    )
                )
            except (ValueError, CetError) as exc:
                raise err(f"link {key}: {exc}", "links", key) from None
        try:
            topology = Topology(nodes, links)
        except TopologyError as exc:
            raise err(str(exc), "links") from None
    else:
        topology = default_topology()

    codecs = dict(DEFAULT_CODECS)
    if cp.has_section("codecs"):
        for key, value in cp.items("codecs"):
            try:
                m = Modality.from_text(key)
                opts = _kv_tokens(value)
                unknown = set(opts) - {"raw_bytes", "compression_ratio", "base_fidelity"}
                if unknown:
                    raise ValueError(f"unknown codec option(s) {sorted(unknown)}")
                d = DEFAULT_CODECS[m]
                codecs[m] = CodecSpec(
                    m,
                    int(opts.get("raw_bytes", d.raw_bytes)),
                    float(opts.get("compression_ratio", d.compression_ratio)),
                    float(opts.get("base_fidelity", d.base_fidelity)),
                )
            except (ValueError, CetError) as exc:
                raise err(f"codec {key}: {exc}", "codecs", key) from None

    attacks = []
    if cp.has_section("attacks"):
        for key, value in cp.items("attacks"):
            try:
                kind = AttackKind(key)
                opts = _kv_tokens(value)
                unknown = set(opts) - {"probability", "severity", "modality"}
                if unknown:
                    raise ValueError(f"unknown attack option(s) {sorted(unknown)}")
                attacks.append(
                    AttackSpec(
                        kind,
                        float(opts.get("probability", "0")),
                        float(opts.get("severity", "0.5")),
                        Modality.from_text(opts["modality"]) if "modality" in opts else None,
                    )
                )
            except (ValueError, CetError) as exc:
                raise err(f"attack {key}: {exc}", "attacks", key) from None

    d = DefenseSpec()
    try:
        defenses = DefenseSpec(
            get("defenses", "watermark_detection", float, d.watermark_detection),
            get("defenses", "directive_verification", float, d.directive_verification),
            get("defenses", "consistency_detection", float, d.consistency_detection),
            get("defenses", "reputation", _bool, d.reputation),
        )
    except ValueError as exc:
        raise err(str(exc), "defenses") from None

    c = ControllerSpec()
    terminal = get("controller", "terminal", int, c.terminal)
    if terminal is not None and (terminal not in topology.nodes or topology.kind(terminal) is not NodeKind.TERMINAL):
        raise err(f"terminal {terminal} is not a terminal node", "controller", "terminal")
    controller = ControllerSpec(
        terminal,
        get("controller", "latency_budget_s", float, c.latency_budget_s),
        get("controller", "min_accuracy", float, c.min_accuracy),
    )
    if not controller.latency_budget_s > 0:
        raise err("latency_budget_s must be positive", "controller", "latency_budget_s")

    sweeps = []
    for section in cp.sections():
        if not section.startswith("sweep."):
            continue
        name = section[len("sweep.") :]
        for required in ("scenario", "snr_db", "variants"):
            if not cp.has_option(section, required):
                raise err(f"missing key {required!r}", section)
        scenario = get(section, "scenario", Scenario.from_text, None)

        def snr_list(t: str) -> tuple[float, ...]:
            vals = tuple(float(x) for x in t.split(",") if x.strip())
            if not vals:
                raise ValueError("empty SNR list")
            for v in vals:
                ScenarioConfig(scenario, v)  # range check
            return vals

        snrs = get(section, "snr_db", snr_list, None)

        def variant_list(t: str) -> Optional[tuple[ModeVariant, ...]]:
            t = t.strip()
            if t == "auto":
                return None
            if t == "all":
                return ALL_VARIANTS
            # variant names contain commas only inside nothing; split on commas outside parentheses
            out, depth, cur = [], 0, ""
            for ch in t:
                if ch == "," and depth == 0:
                    out.append(cur)
                    cur = ""
                    continue
                depth += ch == "("
                depth -= ch == ")"
                cur += ch
            out.append(cur)
            return tuple(ModeVariant.from_text(x) for x in out if x.strip())

        variants = get(section, "variants", variant_list, None)
        sweeps.append(Sweep(name, scenario, snrs, variants))
    if not sweeps:
        raise ConfigError("config declares no [sweep.<name>] section", None, source)

    return ExperimentConfig(
        seed,
        rounds,
        cal_path,
        topology,
        codecs,
        tuple(attacks),
        defenses,
        tuple(sweeps),
        controller,
        period,
        get("manifest", "calibration_sha256", str, None),
        source,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", None, str(p)) from None
    return parse_config(text, str(p), p.parent)


# -- running --


@dataclass
class Row:
    variant: ModeVariant
    scenario: Scenario
    snr_db: float
    seed: int
    round: int
    result: RoundResult
    accuracy: float

    def to_csv(self) -> list[str]:
        r = self.result
        return [
            self.variant.mode.value,
            self.variant.to_text(),
            self.scenario.label,
            f"{self.snr_db:g}",
            str(self.seed),
            str(self.round),
            f"{self.accuracy:.12g}",
            f"{r.inference_s * 1e3:.12g}",
            f"{r.transmission_s * 1e3:.12g}",
            f"{r.total_s * 1e3:.12g}",
            "",  # filled by run_experiment
            "",
            str(r.bytes_tx),
            str(r.attacks_hit),
            str(r.defenses_hit),
        ]


def _with_decision(trace: Trace, node: int, detail: str) -> Trace:
    """Prefix a round trace with the controller's Decision event at t = 0."""
    sim = Simulator(trace.seed)
    sim.schedule(0.0, EventKind.DECISION, node, detail)
    for ev in trace.events:
        sim.schedule(ev.time_s, ev.kind, ev.node, ev.detail)
    return sim.run()


def _run_series(cfg: ExperimentConfig, table: CalibrationTable, sweep: Sweep, snr: float, variant: Optional[ModeVariant], sample_outcomes: bool):
    rows: list[Row] = []
    traces: list[Trace] = []
    reputation = ReputationState()
    selected: Optional[ModeVariant] = None
    selection_detail = ""
    label_variant = variant.to_text() if variant is not None else "auto"
    skipped: list[tuple[int, str]] = []
    for rnd in range(cfg.rounds_per_point):
        label = f"{sweep.name}|{sweep.scenario.label}|{snr!r}|{label_variant}|{rnd}"
        scfg = ScenarioConfig(sweep.scenario, snr, cfg.seed, table.quality.num_beams)
        v = variant
        if v is None:
            if selected is None or rnd % cfg.selection_period == 0:
                terminal = cfg.controller.terminal if cfg.controller.terminal is not None else cfg.topology.terminals[0]
                req = SelectionRequest.for_terminal(
                    cfg.topology,
                    terminal,
                    latency_budget_s=cfg.controller.latency_budget_s,
                    min_accuracy=cfg.controller.min_accuracy,
                    scenario=sweep.scenario,
                    snr_db=snr,
                )
                try:
                    sel = select_mode(req, cfg.topology, table, cfg.codecs)
                except NoFeasibleMode as exc:
                    skipped.append((rnd, str(exc)))
                    selected = None
                    continue
                selected, selection_detail = sel.variant, sel.detail()
            v = selected
        try:
            res = run_round(
                v,
                cfg.topology,
                table,
                cfg.codecs,
                cfg.attacks,
                rng_stream("round|" + label, cfg.seed),
                config=scfg,
                defenses=cfg.defenses,
                reputation=reputation,
            )
        except ModeInfeasible as exc:
            skipped.append((rnd, str(exc)))
            continue
        if res.reputation is not None:
            reputation = res.reputation
        acc = res.accuracy
        if sample_outcomes:
            acc = float(rng_stream("outcome|" + label, cfg.seed).random() < acc)
        trace = res.trace
        if variant is None:
            trace = _with_decision(trace, req.terminal, selection_detail)
        rows.append(Row(v, sweep.scenario, snr, cfg.seed, rnd, res, acc))
        traces.append(trace)
    if skipped:
        series = f"{sweep.name}|{sweep.scenario.label}|{snr!r}|{label_variant}"
        log.warning("skipping %d of %d rounds of %s (first: round %d: %s)",
                    len(skipped), cfg.rounds_per_point, series, *skipped[0])
    return rows, traces


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("CETSIM_THREADS", "1")))
    except ValueError:
        return 1


def run_experiment(
    cfg: ExperimentConfig, table: CalibrationTable, *, sample_outcomes: bool = False
) -> tuple[list[Row], list[Trace]]:
    """Run every sweep point; rows come back in canonical order whatever the pool size."""
    points = list(cfg.points())
    workers = min(_threads(), len(points)) or 1
    if workers == 1:
        results = [_run_series(cfg, table, sw, snr, v, sample_outcomes) for sw, snr, v in points]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_series, cfg, table, sw, snr, v, sample_outcomes) for sw, snr, v in points]
            results = [f.result() for f in futures]
    rows = [r for rs, _ in results for r in rs]
    traces = [t for _, ts in results for t in ts]
    return rows, traces


def write_results(rows: Sequence[Row], table: CalibrationTable, path: Path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER.split(","))
    for row in rows:
        fields = row.to_csv()
        cost = compute_cost(row.variant, table)
        fields[10] = f"{cost.flops_g:.12g}"
        fields[11] = f"{cost.memory_mb:.12g}"
        w.writerow(fields)
    path.write_text(buf.getvalue(), encoding="utf-8")


def write_traces(traces: Sequence[Trace], path: Path) -> None:
    path.write_text("".join(t.to_text() + "\n" for t in traces), encoding="utf-8")


def manifest_text(cfg: ExperimentConfig, table: CalibrationTable) -> str:
    """The fully resolved config in config-file syntax, plus the calibration hash."""
    out = ["[experiment]", f"seed = {cfg.seed}", f"rounds_per_point = {cfg.rounds_per_point}"]
    out += [f"calibration = {cfg.calibration_path.resolve()}", f"selection_period = {cfg.selection_period}", ""]
    out.append("[nodes]")
    for nid, node in sorted(cfg.topology.nodes.items()):
        sensors = ",".join(m.tag for m in sorted(node.sensors, key=lambda m: m.order))
        out.append(f"{nid} = {node.kind.value}" + (f" {sensors}" if sensors else ""))
    out += ["", "[links]"]
    for link in cfg.topology.links:
        a, b = link.endpoints
        out.append(
            f"{a}-{b} = {link.link_class.value} bandwidth_bits_per_s={link.bandwidth_bits_per_s!r}"
            f" propagation_s={link.propagation_s!r} per_hop_processing_s={link.per_hop_processing_s!r}"
            f" up={'true' if link.up else 'false'}"
        )
    out += ["", "[codecs]"]
    for m in Modality:
        c = cfg.codecs[m]
        out.append(
            f"{m.tag} = raw_bytes={c.raw_bytes} compression_ratio={c.compression_ratio!r} base_fidelity={c.base_fidelity!r}"
        )
    out += ["", "[attacks]"]
    for a in cfg.attacks:
        mod = f" modality={a.modality.tag}" if a.modality is not None else ""
        out.append(f"{a.kind.value} = probability={a.probability!r} severity={a.severity!r}{mod}")
    d = cfg.defenses
    out += [
        "",
        "[defenses]",
        f"watermark_detection = {d.watermark_detection!r}",
        f"directive_verification = {d.directive_verification!r}",
        f"consistency_detection = {d.consistency_detection!r}",
        f"reputation = {'true' if d.reputation else 'false'}",
        "",
        "[controller]",
    ]
    if cfg.controller.terminal is not None:
        out.append(f"terminal = {cfg.controller.terminal}")
    out += [
        f"latency_budget_s = {cfg.controller.latency_budget_s!r}",
        f"min_accuracy = {cfg.controller.min_accuracy!r}",
        "",
    ]
    for sw in cfg.sweeps:
        variants = "auto" if sw.variants is None else ", ".join(v.to_text() for v in sw.variants)
        out += [
            f"[sweep.{sw.name}]",
            f"scenario = {sw.scenario.label}",
            f"snr_db = {', '.join(repr(s) for s in sw.snr_db)}",
            f"variants = {variants}",
            "",
        ]
    out += ["[manifest]", f"calibration_sha256 = {table.content_hash}", "generator = cetsim", ""]
    return "\n".join(out)


def write_manifest(cfg: ExperimentConfig, table: CalibrationTable, path: Path) -> None:
    path.write_text(manifest_text(cfg, table), encoding="utf-8")
