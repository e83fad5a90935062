"""Batch pipeline: JSONL record I/O, synthetic corpus generation, full runs.

Interchange format is line-delimited JSON, one record per line:

    {"id": str, "raw_text"?: str, "pred"?: [[x, y], ...], "gt": [[x, y], ...],
     "ego_history"?: [[t, v, a], ...], "nav"?: str}

The stub generator stands in for the planner model: it synthesizes ground
truths (lines, arcs, lane changes) and corrupted raw-text outputs so the
parse/normalize/refine/evaluate chain can be exercised end to end.
"""

from __future__ import annotations

import json
import logging
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .core import (
    COMPLETE_LEN,
    DEFAULT_DT,
    EgoHistory,
    EgoSample,
    EvalRecord,
    RefinementConfig,
    StructuredResponse,
    Trajectory,
    Waypoint,
)
from .metrics import EvalSummary, RecordResult, evaluate_record, summarize_results
from .structured import SpecialTokens, serialize_response

logger = logging.getLogger(__name__)

_DESCRIPTIONS = (
    "clear road, light traffic ahead",
    "urban street with parked cars on the right",
    "multi-lane road, moderate traffic",
    "wet surface, reduced visibility",
)
_DECISIONS = (
    "keep lane and maintain speed",
    "slow down slightly and keep distance",
    "prepare to merge behind the lead vehicle",
    "maintain heading through the curve",
)


@dataclass
class RunConfig:
    """Settings for one batch evaluation run."""

    input_path: str
    output_dir: str
    refinement: RefinementConfig = field(default_factory=RefinementConfig)
    target_len: int = COMPLETE_LEN
    workers: int = 1
    seed: int = 0
    emit_plots: bool = False
    refine_enabled: bool = True

    def __post_init__(self) -> None:
        if not self.input_path or not self.output_dir:
            raise ValueError("input_path and output_dir must be non-empty")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


def _waypoints_from_json(raw, what: str) -> tuple[Waypoint, ...]:
    if not isinstance(raw, list):
        raise ValueError(f"{what} must be a list of [x, y] pairs")
    points = []
    for pair in raw:
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise ValueError(f"{what} entry {pair!r} is not an [x, y] pair")
        x, y = float(pair[0]), float(pair[1])
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError(f"{what} entry {pair!r} is not finite")
        points.append(Waypoint(x, y))
    return tuple(points)


def record_from_json(obj: dict) -> EvalRecord:
    """Build an EvalRecord from one decoded JSONL object."""
    if not isinstance(obj, dict):
        raise ValueError("record must be a JSON object")
    if "id" not in obj:
        raise ValueError("record is missing 'id'")
    if "gt" not in obj:
        raise ValueError("record is missing 'gt'")
    gt = Trajectory(_waypoints_from_json(obj["gt"], "gt"), dt=DEFAULT_DT)
    pred = None
    if obj.get("pred") is not None:
        pred = Trajectory(_waypoints_from_json(obj["pred"], "pred"), dt=DEFAULT_DT)
    history = None
    if obj.get("ego_history") is not None:
        samples = tuple(
            EgoSample(float(t), float(v), float(a)) for t, v, a in obj["ego_history"]
        )
        history = EgoHistory(samples)
    return EvalRecord(
        id=str(obj["id"]),
        gt=gt,
        raw_text=obj.get("raw_text"),
        pred=pred,
        ego_history=history,
        nav_instruction=obj.get("nav"),
    )


def record_to_json(record: EvalRecord) -> dict:
    """Inverse of ``record_from_json``; omits absent optional fields."""
    obj: dict = {"id": record.id}
    if record.raw_text is not None:
        obj["raw_text"] = record.raw_text
    if record.pred is not None:
        obj["pred"] = [[p.x, p.y] for p in record.pred.points]
    obj["gt"] = [[p.x, p.y] for p in record.gt.points]
    if record.ego_history is not None:
        obj["ego_history"] = [
            [s.t, s.velocity, s.acceleration] for s in record.ego_history.samples
        ]
    if record.nav_instruction is not None:
        obj["nav"] = record.nav_instruction
    return obj


def load_records(path: str | Path) -> list[EvalRecord]:
    """Read a JSONL record file; malformed lines are logged and skipped."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(record_from_json(json.loads(line)))
            except (json.JSONDecodeError, TypeError, ValueError) as exc:
                logger.warning("%s line %d: skipping malformed record: %s", path, lineno, exc)
    return records


def save_records(records: list[EvalRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record_to_json(record)) + "\n")


def _round2(value: float) -> float:
    return round(value, 2)


def _gt_shape(rng: random.Random) -> tuple[list[tuple[float, float]], str]:
    """One clean 20-point ground truth and its navigation instruction."""
    v = rng.uniform(3.0, 12.0)
    kind = rng.choice(("line", "arc", "lane_change"))
    pts = []
    if kind == "line":
        nav = "continue straight"
        for i in range(1, COMPLETE_LEN + 1):
            pts.append((v * DEFAULT_DT * i, 0.0))
    elif kind == "arc":
        radius = rng.uniform(30.0, 150.0)
        side = rng.choice((-1.0, 1.0))
        nav = "follow the road as it curves " + ("left" if side > 0 else "right")
        for i in range(1, COMPLETE_LEN + 1):
            phi = v * DEFAULT_DT * i / radius
            pts.append((radius * math.sin(phi), side * radius * (1.0 - math.cos(phi))))
    else:
        offset = rng.choice((-3.5, 3.5))
        nav = "change to the " + ("left" if offset > 0 else "right") + " lane"
        for i in range(1, COMPLETE_LEN + 1):
            u = i / COMPLETE_LEN
            ramp = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
            pts.append((v * DEFAULT_DT * i, offset * ramp))
    return [(round(x, 4), round(y, 4)) for x, y in pts], nav


def _ego_history(rng: random.Random, v_now: float) -> EgoHistory:
    accel = rng.uniform(-1.0, 1.0)
    samples = []
    for k in range(9):
        t = -4.0 + 0.5 * k
        samples.append(
            EgoSample(t, _round2(max(0.0, v_now + accel * t)), _round2(accel))
        )
    return EgoHistory(tuple(samples))


def _corrupt_structure(text: str, rng: random.Random, tokens: SpecialTokens) -> str:
    variant = rng.randrange(3)
    if variant == 0:
        return text.replace(tokens.desc_start, "", 1)
    if variant == 1:
        return text.replace(tokens.traj_end, "", 1)
    # Move the trajectory block in front of the description block.
    i = text.index(tokens.traj_start)
    return text[i:] + text[:i]


def stub_generate(
    n: int,
    seed: int,
    noise_sigma: float = 0.15,
    jitter_sigma: float = 0.5,
    malformed_rate: float = 0.05,
    truncate_rate: float = 0.25,
    extend_rate: float = 0.25,
) -> list[EvalRecord]:
    """Deterministically generate ``n`` synthetic evaluation records.

    Each record carries a clean ground truth plus a raw-text planner output
    corrupted with per-point Gaussian noise, an extra jitter burst on the
    last 5 emitted points, random truncation to 14-19 points or extension to
    21-24 points, and (at ``malformed_rate``) a broken token structure.
    The same ``(n, seed)`` always produces identical records.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    rng = random.Random(seed)
    tokens = SpecialTokens()
    records = []
    for i in range(n):
        gt_pts, nav = _gt_shape(rng)
        speed_now = math.hypot(gt_pts[0][0], gt_pts[0][1]) / DEFAULT_DT
        history = _ego_history(rng, speed_now)

        pred = list(gt_pts)
        u = rng.random()
        if u < truncate_rate:
            pred = pred[: rng.randint(14, 19)]
        elif u < truncate_rate + extend_rate:
            extra = rng.randint(21, 24) - len(pred)
            step = (
                pred[-1][0] - pred[-2][0],
                pred[-1][1] - pred[-2][1],
            )
            for _ in range(extra):
                pred.append((pred[-1][0] + step[0], pred[-1][1] + step[1]))
        if noise_sigma > 0:
            pred = [
                (x + rng.gauss(0.0, noise_sigma), y + rng.gauss(0.0, noise_sigma))
                for x, y in pred
            ]
        if jitter_sigma > 0:
            burst_start = max(0, len(pred) - 5)
            pred = [
                (x + rng.gauss(0.0, jitter_sigma), y + rng.gauss(0.0, jitter_sigma))
                if j >= burst_start
                else (x, y)
                for j, (x, y) in enumerate(pred)
            ]

        resp = StructuredResponse(
            description=rng.choice(_DESCRIPTIONS),
            decision=rng.choice(_DECISIONS),
            trajectory=Trajectory(tuple(Waypoint(x, y) for x, y in pred)),
        )
        raw_text = serialize_response(resp, tokens)
        if rng.random() < malformed_rate:
            raw_text = _corrupt_structure(raw_text, rng, tokens)

        records.append(
            EvalRecord(
                id=f"stub-{i:05d}",
                gt=Trajectory(tuple(Waypoint(x, y) for x, y in gt_pts)),
                raw_text=raw_text,
                ego_history=history,
                nav_instruction=nav,
            )
        )
    return records


def _result_to_json(result: RecordResult) -> dict:
    obj: dict = {"id": result.id, "status": result.status}
    if result.error is not None:
        obj["error"] = result.error
    if result.status == "ok":
        obj["ade_3s"] = result.ade_3s
        obj["ade_5s"] = result.ade_5s
        obj["smoothness_pre"] = result.smoothness_pre
        obj["smoothness_post"] = result.smoothness_post
        if result.report is not None:
            obj["outlier_indices"] = list(result.report.outlier_indices)
            obj["keypoint_indices"] = list(result.report.keypoint_indices)
        obj["refined"] = [
            [round(p.x, 4), round(p.y, 4)] for p in result.refined.points
        ]
    return obj


def _write_plots(results: list[RecordResult], records: list[EvalRecord], out_dir: Path) -> int:
    """One raw-vs-refined overlay (SVG) per record the filter flagged."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "drivepipe"
    by_id = {r.id: r for r in records}
    plot_dir = out_dir / "plots"
    written = 0
    for result in results:
        if result.status != "ok" or result.report is None:
            continue
        if not result.report.outlier_indices:
            continue
        plot_dir.mkdir(parents=True, exist_ok=True)
        raw = result.normalized.as_array()
        refined = result.refined.as_array()
        gt = by_id[result.id].gt.as_array()
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(gt[:, 0], gt[:, 1], "k--", lw=1, label="ground truth")
        ax.plot(raw[:, 0], raw[:, 1], "o-", color="tab:red", ms=3, lw=1, label="raw")
        ax.plot(refined[:, 0], refined[:, 1], "o-", color="tab:blue", ms=3, lw=1, label="refined")
        bad = list(result.report.outlier_indices)
        ax.plot(raw[bad, 0], raw[bad, 1], "x", color="black", ms=8, label="outliers")
        ax.set_xlabel("x [m]")
        ax.set_ylabel("y [m]")
        ax.set_title(result.id)
        ax.legend(loc="best", fontsize=8)
        ax.set_aspect("equal", adjustable="datalim")
        fig.tight_layout()
        fig.savefig(plot_dir / f"{result.id}.svg", metadata={"Date": None})
        plt.close(fig)
        written += 1
    return written


def run_pipeline(cfg: RunConfig) -> EvalSummary:
    """Load records, evaluate them, and write summary plus per-record files.

    Produces ``records.jsonl``, ``summary.json`` and ``summary.txt`` in the
    output directory (plus ``plots/`` when enabled). Output bytes depend only
    on the input file and the config, not on the worker count: workers only
    fan out the pure per-record computation and results are aggregated in
    input order by a single writer.
    """
    records = load_records(cfg.input_path)

    def job(record: EvalRecord) -> RecordResult:
        return evaluate_record(
            record,
            cfg.refinement,
            target_len=cfg.target_len,
            refine_enabled=cfg.refine_enabled,
        )

    if cfg.workers == 1:
        results = [job(r) for r in records]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(job, records))

    summary = summarize_results(results)

    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "records.jsonl", "w", encoding="utf-8") as fh:
        for result in results:
            fh.write(json.dumps(_result_to_json(result)) + "\n")
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        fh.write(json.dumps(summary.to_json_dict(), indent=2, sort_keys=True) + "\n")
    with open(out_dir / "summary.txt", "w", encoding="utf-8") as fh:
        fh.write(summary.to_text() + "\n")
    if cfg.emit_plots:
        n_plots = _write_plots(results, records, out_dir)
        logger.info("wrote %d outlier plots", n_plots)

    print(summary.to_text())
    return summary
