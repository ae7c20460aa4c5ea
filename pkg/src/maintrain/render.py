"""Deterministic DOT and SVG views of a model state.

Both renderers walk the model in sorted-id order and emit nothing that
depends on platform, hash order, or time, so equal inputs give identical
bytes.  Disconnected connections are dashed; annotation highlights are
drawn bold with a remove/establish label; the annotation's target block
gets a 3px outline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

from .model import Discipline, ModelState, PlantModel, Status
from .procedure import Annotation

DEFAULT_PALETTE: Mapping[Discipline, str] = {
    Discipline.MECHATRONIC_MODULE: "#FFD700",
    Discipline.ELECTRIC_ELECTRONIC: "#1E90FF",
    Discipline.SOFTWARE: "#DC143C",
    Discipline.MECHANICAL: "#2E8B57",
}

CELL_W = 160
CELL_H = 80


class InvalidState(ValueError):
    """The state does not cover the model's connections and observables."""


@dataclass(frozen=True, slots=True)
class RenderSpec:
    state: ModelState
    model: PlantModel
    annotation: Optional[Annotation] = None
    palette: Mapping[Discipline, str] = field(default_factory=lambda: DEFAULT_PALETTE)


def _check_domains(spec: RenderSpec) -> None:
    model = spec.model
    if set(spec.state.status) != set(model.connections) or set(
        spec.state.observables
    ) != set(model.observables):
        raise InvalidState("state does not match the model's domain")


def _highlights(spec: RenderSpec) -> dict[str, str]:
    if spec.annotation is None:
        return {}
    return dict(spec.annotation.highlights)


def _target(spec: RenderSpec) -> Optional[str]:
    return spec.annotation.target if spec.annotation is not None else None


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def render_dot(spec: RenderSpec) -> str:
    """Undirected graphviz text: one node per block, one edge per connection.

    Containment renders as nested cluster subgraphs.  Emission order is
    sorted block id, then sorted connection id.
    """
    _check_domains(spec)
    model = spec.model
    highlights = _highlights(spec)
    target = _target(spec)

    children: dict[Optional[str], list[str]] = {}
    for bid in sorted(model.blocks):
        children.setdefault(model.blocks[bid].parent, []).append(bid)

    lines = [f"graph {model.id or 'model'} {{", "  node [shape=box, style=filled];"]

    def node_line(bid: str, indent: str) -> str:
        block = model.blocks[bid]
        attrs = [
            f"label={_quote(block.name)}",
            f'fillcolor="{spec.palette[block.discipline]}"',
        ]
        if bid == target:
            attrs.append("penwidth=3")
        return f'{indent}{_quote(bid)} [{", ".join(attrs)}];'

    def emit(bid: str, depth: int) -> None:
        indent = "  " * depth
        kids = children.get(bid, [])
        if kids:
            lines.append(f"{indent}subgraph {_quote('cluster_' + bid)} {{")
            lines.append(f"{indent}  label={_quote(model.blocks[bid].name)};")
            lines.append(f"{indent}  style=dashed;")
            lines.append(node_line(bid, indent + "  "))
            for kid in kids:
                emit(kid, depth + 1)
            lines.append(f"{indent}}}")
        else:
            lines.append(node_line(bid, indent))

    roots = [bid for bid in sorted(model.blocks) if model.blocks[bid].parent not in model.blocks]
    for bid in roots:
        emit(bid, 1)

    for cid in sorted(model.connections):
        conn = model.connections[cid]
        a = model.ports[conn.a].owner
        b = model.ports[conn.b].owner
        attrs = [f'id="{cid}"']
        if spec.state.status[cid] is Status.DISCONNECTED:
            attrs.append("style=dashed")
        if cid in highlights:
            attrs.append("penwidth=3")
            attrs.append(f'label="{highlights[cid]}"')
        lines.append(f'  {_quote(a)} -- {_quote(b)} [{", ".join(attrs)}];')

    lines.append("}")
    return "\n".join(lines) + "\n"


def _escape_xml(text: str) -> str:
    return (
        text.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def render_svg(spec: RenderSpec) -> str:
    """Self-contained SVG: blocks on a row-major grid, orthogonal edges.

    Blocks occupy 160x80 cells in sorted-id order; containment shows as a
    dashed rect around the group's bounding box.  Byte-identical output
    for equal inputs.
    """
    _check_domains(spec)
    model = spec.model
    highlights = _highlights(spec)
    target = _target(spec)

    order = sorted(model.blocks)
    count = len(order)
    cols = 1
    while cols * cols < count:
        cols += 1
    rows = (count + cols - 1) // cols if count else 1
    width = CELL_W * max(cols, 1)
    height = CELL_H * rows

    cell: dict[str, tuple[int, int]] = {}
    for i, bid in enumerate(order):
        col, row = i % cols, i // cols
        cell[bid] = (col * CELL_W, row * CELL_H)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect class="bg" x="0" y="0" width="{width}" height="{height}" fill="#FFFFFF"/>',
    ]

    # group rects first, so blocks and edges draw over them
    for bid in order:
        kids = [b for b in order if model.blocks[b].parent == bid]
        if not kids:
            continue
        member_cells = [cell[bid]] + [cell[k] for k in kids]
        # the bounding box covers every descendant, found transitively
        frontier = list(kids)
        while frontier:
            nxt = [b for b in order if model.blocks[b].parent in frontier]
            member_cells.extend(cell[b] for b in nxt)
            frontier = nxt
        x0 = min(x for x, _ in member_cells) + 2
        y0 = min(y for _, y in member_cells) + 2
        x1 = max(x for x, _ in member_cells) + CELL_W - 2
        y1 = max(y for _, y in member_cells) + CELL_H - 2
        out.append(
            f'<rect class="group" data-block="{_escape_xml(bid)}" x="{x0}" y="{y0}" '
            f'width="{x1 - x0}" height="{y1 - y0}" fill="none" stroke="#999999" '
            f'stroke-dasharray="6,3"/>'
        )

    for cid in sorted(model.connections):
        conn = model.connections[cid]
        a = model.ports[conn.a].owner
        b = model.ports[conn.b].owner
        ax, ay = cell[a][0] + CELL_W // 2, cell[a][1] + CELL_H // 2
        bx, by = cell[b][0] + CELL_W // 2, cell[b][1] + CELL_H // 2
        my = (ay + by) // 2
        points = f"{ax},{ay} {ax},{my} {bx},{my} {bx},{by}"
        attrs = [f'class="conn" id="conn_{_escape_xml(cid)}"', f'points="{points}"', 'fill="none"']
        width_px = 3 if cid in highlights else 1
        attrs.append(f'stroke="#333333" stroke-width="{width_px}"')
        if spec.state.status[cid] is Status.DISCONNECTED:
            attrs.append('stroke-dasharray="6,3"')
        out.append(f"<polyline {' '.join(attrs)}/>")
        if cid in highlights:
            lx, ly = (ax + bx) // 2, my - 4
            out.append(
                f'<text class="conn-label" x="{lx}" y="{ly}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="11">{_escape_xml(highlights[cid])}</text>'
            )

    for bid in order:
        block = model.blocks[bid]
        x, y = cell[bid]
        stroke_width = 3 if bid == target else 1
        out.append(
            f'<rect class="block" id="block_{_escape_xml(bid)}" x="{x + 10}" y="{y + 10}" '
            f'width="{CELL_W - 20}" height="{CELL_H - 20}" '
            f'fill="{spec.palette[block.discipline]}" stroke="#000000" '
            f'stroke-width="{stroke_width}"/>'
        )
        out.append(
            f'<text class="block-label" x="{x + CELL_W // 2}" y="{y + CELL_H // 2 + 4}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="12">'
            f"{_escape_xml(block.name)}</text>"
        )

    if spec.annotation is not None and spec.annotation.observable_note is not None:
        name, expected = spec.annotation.observable_note
        out.append(
            f'<text class="obs-note" x="{width // 2}" y="{height - 6}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">'
            f"{_escape_xml(name)} = {expected:g}</text>"
        )

    out.append("</svg>")
    return "\n".join(out) + "\n"
