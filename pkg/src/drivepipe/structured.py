"""Wire format for the three-stage planner output, and prompt assembly.

The planner emits one flat string in which six sentinel tokens delimit the
scene description, the driving decision, and the waypoint list:

    <DESC_START>...<DESC_END><DECI_START>...<DECI_END><TRAJ_START>...<TRAJ_END>

Waypoints are rendered as ``(x,y)`` pairs with 4 decimal places, separated by
commas. The serialized form is a wire format: byte-identical inputs are
required to round-trip exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import (
    DEFAULT_DT,
    EgoHistory,
    StructuredResponse,
    Trajectory,
    Waypoint,
)

COORD_DECIMALS = 4

VIEW_ORDER = ("front", "front-left", "front-right", "side-left", "side-right")


class ParseError(ValueError):
    """Base class for structured-output parse failures."""


class MalformedStructureError(ParseError):
    """A sentinel token is missing, repeated inside a text field, or out of order.

    ``position`` is the index of the first violating character: the location
    of an out-of-place token if one exists, else the end of the text.
    """

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class MalformedTrajectoryError(ParseError):
    """The waypoint segment contains text that is not a numeric pair.

    ``fragment`` carries the offending substring.
    """

    def __init__(self, fragment: str):
        super().__init__(f"malformed trajectory fragment: {fragment!r}")
        self.fragment = fragment


@dataclass(frozen=True)
class SpecialTokens:
    """The six sentinel literals delimiting the three output stages."""

    desc_start: str = "<DESC_START>"
    desc_end: str = "<DESC_END>"
    deci_start: str = "<DECI_START>"
    deci_end: str = "<DECI_END>"
    traj_start: str = "<TRAJ_START>"
    traj_end: str = "<TRAJ_END>"

    def __post_init__(self) -> None:
        toks = self.ordered()
        if any(not t for t in toks):
            raise ValueError("special tokens must be non-empty")
        if len(set(toks)) != len(toks):
            raise ValueError("special tokens must be pairwise distinct")

    def ordered(self) -> tuple[str, ...]:
        return (
            self.desc_start,
            self.desc_end,
            self.deci_start,
            self.deci_end,
            self.traj_start,
            self.traj_end,
        )


@dataclass(frozen=True)
class PromptTemplates:
    """Named text templates used by ``build_prompt``."""

    view_line: str = "<image:{view}>"
    history_line: str = "t={t:.2f}s v={v:.2f}m/s a={a:.2f}m/s²"
    instruction_line: str = "Navigation: {instruction}"


@dataclass(frozen=True)
class PromptSpec:
    """Everything needed to assemble one deterministic planner prompt."""

    ego_history: EgoHistory = EgoHistory()
    nav_instruction: str | None = None
    view_order: tuple[str, ...] = VIEW_ORDER
    templates: PromptTemplates = PromptTemplates()

    def __post_init__(self) -> None:
        if tuple(self.view_order) != VIEW_ORDER:
            raise ValueError(f"view_order must be {VIEW_ORDER}")


def format_waypoints(traj: Trajectory) -> str:
    """Render waypoints as ``(x,y)`` pairs, comma separated, 4 decimal places."""
    return ",".join(
        f"({p.x:.{COORD_DECIMALS}f},{p.y:.{COORD_DECIMALS}f})" for p in traj.points
    )


def serialize_response(resp: StructuredResponse, tokens: SpecialTokens = SpecialTokens()) -> str:
    """Serialize a structured response into the sentinel-delimited wire format."""
    for name, text in (("description", resp.description), ("decision", resp.decision)):
        for tok in tokens.ordered():
            if tok in text:
                raise ValueError(f"{name} must not contain the token literal {tok!r}")
    return (
        tokens.desc_start
        + resp.description
        + tokens.desc_end
        + tokens.deci_start
        + resp.decision
        + tokens.deci_end
        + tokens.traj_start
        + format_waypoints(resp.trajectory)
        + tokens.traj_end
    )


def _parse_waypoints(body: str) -> tuple[Waypoint, ...]:
    """Parse a comma/whitespace separated list of ``(x,y)`` pairs.

    Tolerates arbitrary whitespace and newlines around pairs and around the
    coordinates. Anything that is not a parenthesized pair of finite numbers
    raises ``MalformedTrajectoryError`` with the offending fragment.
    """
    points: list[Waypoint] = []
    pos, n = 0, len(body)
    while True:
        while pos < n and (body[pos].isspace() or body[pos] == ","):
            pos += 1
        if pos >= n:
            break
        if body[pos] != "(":
            raise MalformedTrajectoryError(body[pos:].split(",")[0].strip() or body[pos:])
        close = body.find(")", pos)
        if close == -1:
            raise MalformedTrajectoryError(body[pos:].strip())
        chunk = body[pos : close + 1]
        parts = chunk[1:-1].split(",")
        if len(parts) != 2:
            raise MalformedTrajectoryError(chunk)
        try:
            x, y = float(parts[0]), float(parts[1])
        except ValueError:
            raise MalformedTrajectoryError(chunk) from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise MalformedTrajectoryError(chunk)
        points.append(Waypoint(x, y))
        pos = close + 1
    return tuple(points)


def parse_response(text: str, tokens: SpecialTokens = SpecialTokens()) -> StructuredResponse:
    """Parse arbitrary model output into a structured response.

    Text before the first token and after the last token is ignored (models
    often emit preambles). The six tokens must otherwise appear exactly in
    their canonical order; a missing or out-of-order token raises
    ``MalformedStructureError``, an unparseable waypoint raises
    ``MalformedTrajectoryError``. Parsed trajectories may have any length;
    normalization happens downstream.
    """
    ordered = tokens.ordered()
    positions: list[int] = []
    cursor = 0
    for tok in ordered:
        idx = text.find(tok, cursor)
        if idx == -1:
            anywhere = text.find(tok)
            pos = anywhere if anywhere != -1 else len(text)
            raise MalformedStructureError(f"token {tok!r} missing or out of order", pos)
        positions.append(idx)
        cursor = idx + len(tok)

    def segment(start_i: int) -> str:
        return text[positions[start_i] + len(ordered[start_i]) : positions[start_i + 1]]

    description = segment(0)
    decision = segment(2)
    traj_body = segment(4)

    # A sentinel inside a text field breaks the response invariant even when
    # the overall scan succeeded (e.g. a stray <TRAJ_START> inside the
    # description). The trajectory segment is exempt: it is never re-scanned.
    for seg_start, seg_text in ((0, description), (2, decision)):
        base = positions[seg_start] + len(ordered[seg_start])
        hits = [(seg_text.find(tok), tok) for tok in ordered if tok in seg_text]
        if hits:
            at, tok = min(hits)
            raise MalformedStructureError(f"token {tok!r} embedded in text field", base + at)

    return StructuredResponse(
        description=description,
        decision=decision,
        trajectory=Trajectory(_parse_waypoints(traj_body), dt=DEFAULT_DT),
    )


def build_prompt(spec: PromptSpec) -> str:
    """Assemble the deterministic prompt text for one planning query.

    Layout: the five camera-view placeholders in fixed order, then one line
    per kinematic history sample (oldest first), then the navigation
    instruction if present. Pure function: identical specs produce
    byte-identical output.
    """
    tpl = spec.templates
    blocks: list[str] = []
    blocks.append("\n".join(tpl.view_line.format(view=v) for v in spec.view_order))
    if spec.ego_history.samples:
        blocks.append(
            "\n".join(
                tpl.history_line.format(t=s.t, v=s.velocity, a=s.acceleration)
                for s in spec.ego_history.samples
            )
        )
    if spec.nav_instruction:
        blocks.append(tpl.instruction_line.format(instruction=spec.nav_instruction))
    return "\n".join(blocks)
