"""Stage-based orchestration over plain-file artifacts.

Each stage reads the previous stage's files from the output directory
and writes its own, so any stage can be rerun in isolation and the
full pipeline is nothing more than the six stages in order:

    ingest   corpus.jsonl          parse, journal-filter, normalize
    graph    edges.tsv eligible.txt  citation network and eligibility
    classify classifications.csv   article types for eligible papers
    disrupt  disruption.csv        scores at each threshold
    regress  regression.csv citations_models.txt disruption_models.txt
    report   report.txt            combined human-readable summary

A manifest.json accumulates input hashes, the config, library
versions, and artifact hashes; it carries no clock data, so a rerun
with identical inputs and the offline classifier stub is byte-
identical. A failing stage leaves partial outputs in place plus a
FAILED marker naming the stage and cause.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import platform
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import scipy

from . import __version__
from .classify import (BackendConfig, Classification, ResponseCache,
                       agreement_report, classify_batch, stub_backend)
from .corpus import (Corpus, EligibilityCriteria, eligible_ids, filter_journals,
                     journal_counts, parse_corpus, read_allowlist, write_corpus,
                     year_group)
from .disruption import MODES, disruption_batch, read_scores, write_scores
from .graph import build_graph, degree_stats, write_edges
from .regress import (ObservationRow, emit_table, fit_model, layout_for,
                      standard_model_specs, write_results_csv)

STAGES = ("ingest", "graph", "classify", "disrupt", "regress", "report")

# Which stage produces each artifact; used to name the needed stage
# when a prerequisite file is missing.
ARTIFACT_STAGE = {
    "corpus.jsonl": "ingest",
    "edges.tsv": "graph",
    "eligible.txt": "graph",
    "classifications.csv": "classify",
    "disruption.csv": "disrupt",
    "regression.csv": "regress",
    "citations_models.txt": "regress",
    "disruption_models.txt": "regress",
    "report.txt": "report",
}

FAILED_MARKER = "FAILED"


class StageError(RuntimeError):
    """A pipeline stage failed or cannot start."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage '{stage}': {message}")
        self.stage = stage
        self.message = message


_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


@dataclass
class PipelineConfig:
    """Everything a run needs, loadable from a key = value file."""

    corpus: Path = Path("corpus.jsonl")
    allowlist: Path | None = None
    cache: Path | None = None
    out_dir: Path = Path("out")
    # eligibility thresholds (minimum counts, inclusive)
    min_out_links: int = 11
    min_in_links: int = 11
    year_min: int = 1991
    year_max: int = 2020
    min_abstract_chars: int = 501
    # disruption scoring
    thresholds: tuple[int, ...] = (1, 2, 3, 5)
    mode: str = "ref_indegree"
    n_jobs: int = 1
    # classifier backend; stub skips the network entirely
    stub: bool = False
    endpoint: str = ""
    model: str = ""
    api_key_env: str = "DISRUPTKIT_API_KEY"
    max_in_flight: int = 4
    retries: int = 3
    backoff_base: float = 1.0
    timeout: float = 30.0
    # which D^l models to fit alongside the three citation models
    model_thresholds: tuple[int, ...] = (2, 3, 5)
    # synthetic generation
    seed: int = 0

    def __post_init__(self):
        self.corpus = Path(self.corpus)
        self.out_dir = Path(self.out_dir)
        if self.allowlist is not None:
            self.allowlist = Path(self.allowlist)
        if self.cache is not None:
            self.cache = Path(self.cache)
        if not self.thresholds:
            raise ValueError("thresholds must be non-empty")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        missing = [l for l in self.model_thresholds if l not in self.thresholds]
        if missing:
            raise ValueError(
                f"model_thresholds {missing} not among scored thresholds {self.thresholds}"
            )

    def criteria(self) -> EligibilityCriteria:
        return EligibilityCriteria(
            min_out_links=self.min_out_links,
            min_in_links=self.min_in_links,
            year_min=self.year_min,
            year_max=self.year_max,
            min_abstract_chars=self.min_abstract_chars,
        )

    def backend_config(self) -> BackendConfig:
        if not self.endpoint or not self.model:
            raise ValueError(
                "backend endpoint and model must be configured (or set stub = true)"
            )
        return BackendConfig(
            endpoint=self.endpoint,
            model=self.model,
            max_in_flight=self.max_in_flight,
            retries=self.retries,
            backoff_base=self.backoff_base,
            timeout=self.timeout,
            api_key_env=self.api_key_env,
        )

    def as_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, Path):
                value = str(value)
            elif isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out


def _coerce(name: str, text: str, target_type) -> object:
    text = text.strip()
    if target_type in (Path, "Path | None"):
        return Path(text)
    if target_type is bool:
        lowered = text.lower()
        if lowered in _BOOL_TRUE:
            return True
        if lowered in _BOOL_FALSE:
            return False
        raise ValueError(f"config key {name!r}: expected a boolean, got {text!r}")
    if target_type is int:
        return int(text)
    if target_type is float:
        return float(text)
    if target_type is str:
        return text
    # remaining fields are integer tuples given as comma-separated lists
    return tuple(int(part) for part in text.split(",") if part.strip())


def load_config(path: str | Path, overrides: dict | None = None) -> PipelineConfig:
    """Parse a `key = value` file (# comments, blank lines allowed) into
    a PipelineConfig; unknown keys are errors. ``overrides`` wins over
    file values."""
    path = Path(path)
    fields = {f.name: f for f in dataclasses.fields(PipelineConfig)}
    type_map = {
        "corpus": Path, "allowlist": Path, "cache": Path, "out_dir": Path,
        "min_out_links": int, "min_in_links": int, "year_min": int,
        "year_max": int, "min_abstract_chars": int,
        "thresholds": tuple, "mode": str, "n_jobs": int,
        "stub": bool, "endpoint": str, "model": str, "api_key_env": str,
        "max_in_flight": int, "retries": int, "backoff_base": float,
        "timeout": float, "model_thresholds": tuple, "seed": int,
    }
    values: dict = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}: line {lineno}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in fields:
                raise ValueError(f"{path}: line {lineno}: unknown config key {key!r}")
            values[key] = _coerce(key, value, type_map[key])
    if overrides:
        values.update(overrides)
    return PipelineConfig(**values)


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _versions() -> dict:
    versions = {
        "disruptkit": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }
    try:
        import numba
        versions["numba"] = numba.__version__
    except ImportError:
        versions["numba"] = None
    return versions


def _update_manifest(config: PipelineConfig, inputs: dict[str, Path],
                     artifacts: list[Path]) -> None:
    path = config.out_dir / "manifest.json"
    if path.exists():
        data = json.loads(path.read_text(encoding="utf-8"))
    else:
        data = {"inputs": {}, "artifacts": {}}
    data["config"] = config.as_dict()
    data["versions"] = _versions()
    for name, p in inputs.items():
        data["inputs"][name] = _sha256_file(p)
    for p in artifacts:
        data["artifacts"][p.name] = _sha256_file(p)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _require(config: PipelineConfig, stage: str, filename: str) -> Path:
    path = config.out_dir / filename
    if not path.exists():
        producer = ARTIFACT_STAGE[filename]
        raise StageError(
            stage,
            f"missing artifact {filename!r}; run stage '{producer}' first",
        )
    return path


def _run_stage(name: str, config: PipelineConfig,
               body: Callable[[], list[Path]]) -> list[Path]:
    config.out_dir.mkdir(parents=True, exist_ok=True)
    marker = config.out_dir / FAILED_MARKER
    try:
        artifacts = body()
    except StageError as exc:
        marker.write_text(f"{exc.stage}: {exc.message}\n", encoding="utf-8")
        raise
    except Exception as exc:
        marker.write_text(f"{name}: {exc}\n", encoding="utf-8")
        raise StageError(name, str(exc)) from exc
    if marker.exists():
        marker.unlink()
    return artifacts


def _load_filtered_corpus(config: PipelineConfig, stage: str) -> Corpus:
    return parse_corpus(_require(config, stage, "corpus.jsonl"))


def _load_eligible(config: PipelineConfig, stage: str) -> list[str]:
    path = _require(config, stage, "eligible.txt")
    with path.open("r", encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def stage_ingest(config: PipelineConfig) -> list[Path]:
    """Parse the raw corpus, apply the journal allowlist, and write the
    normalized corpus sorted by id."""

    def body() -> list[Path]:
        if not config.corpus.exists():
            raise FileNotFoundError(f"corpus file not found: {config.corpus}")
        corpus = parse_corpus(config.corpus)
        inputs = {"corpus": config.corpus}
        if config.allowlist is not None:
            if not config.allowlist.exists():
                raise FileNotFoundError(f"allowlist file not found: {config.allowlist}")
            corpus = filter_journals(corpus, read_allowlist(config.allowlist))
            inputs["allowlist"] = config.allowlist
        out_path = config.out_dir / "corpus.jsonl"
        write_corpus(corpus, out_path)
        _update_manifest(config, inputs, [out_path])
        return [out_path]

    return _run_stage("ingest", config, body)


def stage_graph(config: PipelineConfig) -> list[Path]:
    """Build the citation network, write the edge list, and compute the
    eligible focal set."""

    def body() -> list[Path]:
        corpus = _load_filtered_corpus(config, "graph")
        graph = build_graph(corpus)
        edges_path = config.out_dir / "edges.tsv"
        write_edges(graph, edges_path)
        eligible = eligible_ids(corpus, graph, config.criteria())
        eligible_path = config.out_dir / "eligible.txt"
        eligible_path.write_text(
            "".join(f"{pid}\n" for pid in eligible), encoding="utf-8",
        )
        _update_manifest(config, {}, [edges_path, eligible_path])
        return [edges_path, eligible_path]

    return _run_stage("graph", config, body)


def stage_classify(config: PipelineConfig) -> list[Path]:
    """Classify each eligible paper as Conceptual/Empirical/Other."""

    def body() -> list[Path]:
        corpus = _load_filtered_corpus(config, "classify")
        eligible = _load_eligible(config, "classify")
        records = [corpus[pid] for pid in eligible]
        if config.stub:
            results = classify_batch(records, backend=stub_backend)
        else:
            cache = ResponseCache(config.cache) if config.cache is not None else None
            results = classify_batch(records, config=config.backend_config(),
                                     cache=cache)
        out_path = config.out_dir / "classifications.csv"
        _write_classifications(results, out_path)
        _update_manifest(config, {}, [out_path])
        return [out_path]

    return _run_stage("classify", config, body)


def stage_disrupt(config: PipelineConfig) -> list[Path]:
    """Score every eligible paper at every configured threshold."""

    def body() -> list[Path]:
        corpus = _load_filtered_corpus(config, "disrupt")
        eligible = _load_eligible(config, "disrupt")
        graph = build_graph(corpus)
        scores = disruption_batch(graph, eligible, ls=config.thresholds,
                                  mode=config.mode, n_jobs=config.n_jobs)
        out_path = config.out_dir / "disruption.csv"
        write_scores(scores, out_path)
        _update_manifest(config, {}, [out_path])
        return [out_path]

    return _run_stage("disrupt", config, body)


def _write_classifications(results: list[Classification], path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "label", "source", "rationale"])
        for c in results:
            writer.writerow([c.paper_id, c.label, c.source, c.rationale])


def read_classifications(path: str | Path) -> list[Classification]:
    out: list[Classification] = []
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["id", "label", "source", "rationale"]:
            raise ValueError(f"{path}: unexpected header {header}")
        for row in reader:
            if not row:
                continue
            paper_id, label, source, rationale = row
            out.append(Classification(paper_id=paper_id, label=label,
                                      rationale=rationale, source=source))
    return out


def build_observation_rows(corpus: Corpus, graph, eligible: list[str],
                           classifications: list[Classification],
                           thresholds: tuple[int, ...],
                           scores) -> list[ObservationRow]:
    """Join the per-paper artifacts into model-ready rows. Papers whose
    label is neither Conceptual nor Empirical are dropped here, before
    any model sees them."""
    label_by_id = {c.paper_id: c.label for c in classifications}
    d_by_id: dict[str, dict[int, float | None]] = {}
    for s in scores:
        d_by_id.setdefault(s.paper_id, {})[s.partition.l] = s.d
    rows: list[ObservationRow] = []
    for pid in eligible:
        label = label_by_id.get(pid)
        if label == "Conceptual":
            conceptual = 1
        elif label == "Empirical":
            conceptual = 0
        else:
            continue
        rec = corpus[pid]
        rows.append(ObservationRow(
            paper_id=pid,
            y_citations=int(graph.in_deg[graph.index[pid]]),
            y_d={l: d_by_id.get(pid, {}).get(l) for l in thresholds},
            year_group=year_group(rec.year),
            n_authors=rec.n_authors,
            conceptual=conceptual,
        ))
    return rows


def stage_regress(config: PipelineConfig) -> list[Path]:
    """Fit the citation and disruption models on the eligible papers."""

    def body() -> list[Path]:
        corpus = _load_filtered_corpus(config, "regress")
        eligible = _load_eligible(config, "regress")
        classifications = read_classifications(
            _require(config, "regress", "classifications.csv"))
        scores = read_scores(_require(config, "regress", "disruption.csv"))
        graph = build_graph(corpus)
        rows = build_observation_rows(corpus, graph, eligible, classifications,
                                      config.thresholds, scores)
        specs = standard_model_specs(config.model_thresholds)
        results = [fit_model(rows, spec) for spec in specs]
        citation_results = [r for r in results if r.model.startswith("citations")]
        d_results = [r for r in results if r.model.startswith("disruption")]

        csv_path = config.out_dir / "regression.csv"
        write_results_csv(results, csv_path)
        cit_path = config.out_dir / "citations_models.txt"
        cit_path.write_text(emit_table(
            citation_results,
            layout_for(citation_results,
                       "OLS models of in-corpus citation counts", decimals=3),
        ), encoding="utf-8")
        d_path = config.out_dir / "disruption_models.txt"
        d_path.write_text(emit_table(
            d_results,
            layout_for(d_results,
                       "OLS models of disruption scores", decimals=4),
        ), encoding="utf-8")
        _update_manifest(config, {}, [csv_path, cit_path, d_path])
        return [csv_path, cit_path, d_path]

    return _run_stage("regress", config, body)


def stage_report(config: PipelineConfig) -> list[Path]:
    """Combine degree statistics, label counts, agreement against any
    gold labels, and both model tables into one text report."""

    def body() -> list[Path]:
        corpus = _load_filtered_corpus(config, "report")
        eligible = _load_eligible(config, "report")
        classifications = read_classifications(
            _require(config, "report", "classifications.csv"))
        cit_table = _require(config, "report", "citations_models.txt").read_text(
            encoding="utf-8")
        d_table = _require(config, "report", "disruption_models.txt").read_text(
            encoding="utf-8")
        graph = build_graph(corpus)
        stats = degree_stats(graph)

        lines: list[str] = []
        lines.append("Corpus")
        lines.append(f"  papers: {len(corpus)}")
        counts = journal_counts(corpus)
        lines.append(f"  journals with papers: {len(counts)}")
        if config.allowlist is not None and config.allowlist.exists():
            allow = read_allowlist(config.allowlist)
            empty = sorted(allow - set(counts))
            lines.append(f"  journals allowed: {len(allow)}"
                         f" (no papers from {len(empty)})")
        for journal in sorted(counts):
            lines.append(f"    {journal}: {counts[journal]}")
        lines.append("")
        lines.append("Citation network")
        lines.append(f"  nodes: {stats['n_nodes']}")
        lines.append(f"  edges: {stats['n_edges']}")
        lines.append(f"  mean in-degree: {stats['mean_in_deg']:.3f}")
        lines.append(f"  mean out-degree: {stats['mean_out_deg']:.3f}")
        lines.append(f"  max in-degree: {stats['max_in_deg']}")
        lines.append(f"  max out-degree: {stats['max_out_deg']}")
        lines.append("")
        lines.append(f"Eligible papers: {len(eligible)}")
        label_counts: dict[str, int] = {}
        source_counts: dict[str, int] = {}
        for c in classifications:
            label_counts[c.label] = label_counts.get(c.label, 0) + 1
            source_counts[c.source] = source_counts.get(c.source, 0) + 1
        lines.append("Labels")
        for label in sorted(label_counts):
            lines.append(f"  {label}: {label_counts[label]}")
        lines.append("Label sources")
        for source in sorted(source_counts):
            lines.append(f"  {source}: {source_counts[source]}")
        gold_records = [corpus[pid] for pid in eligible
                        if corpus[pid].gold_label is not None]
        if gold_records:
            report = agreement_report(classifications, gold_records)
            lines.append("Agreement with gold labels")
            for label in sorted(report.gold_counts):
                lines.append(
                    f"  {label}: {report.correct_counts[label]}/"
                    f"{report.gold_counts[label]} ({report.percent(label)})"
                )
            lines.append(f"  overall: {report.overall_percent()}")
        lines.append("")
        lines.append(cit_table)
        lines.append(d_table)
        out_path = config.out_dir / "report.txt"
        out_path.write_text("\n".join(lines), encoding="utf-8")
        _update_manifest(config, {}, [out_path])
        return [out_path]

    return _run_stage("report", config, body)


STAGE_FUNCTIONS: dict[str, Callable[[PipelineConfig], list[Path]]] = {
    "ingest": stage_ingest,
    "graph": stage_graph,
    "classify": stage_classify,
    "disrupt": stage_disrupt,
    "regress": stage_regress,
    "report": stage_report,
}


def run_pipeline(config: PipelineConfig) -> list[Path]:
    """All six stages in order. Input paths are checked up front;
    artifacts land in config.out_dir; the manifest is refreshed by each
    stage as it completes."""
    if not config.corpus.exists():
        raise StageError("ingest", f"corpus file not found: {config.corpus}")
    if config.allowlist is not None and not config.allowlist.exists():
        raise StageError("ingest", f"allowlist file not found: {config.allowlist}")
    artifacts: list[Path] = []
    for stage in STAGES:
        artifacts.extend(STAGE_FUNCTIONS[stage](config))
    return artifacts
