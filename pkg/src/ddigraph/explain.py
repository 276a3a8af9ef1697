"""Attention-based atom highlighting for a scored drug pair."""

from __future__ import annotations

import json
from dataclasses import dataclass
from xml.sax.saxutils import escape

import networkx as nx
import numpy as np

from ddigraph.errors import UnsupportedFormat
from ddigraph.features import featurize
from ddigraph.model import ModelParams, Prediction, forward
from ddigraph.smiles import BondKind, MolecularGraph, parse

# light-to-dark single-hue ramp, linear in RGB
RAMP_LOW = (255, 245, 240)
RAMP_HIGH = (103, 0, 13)
LAYOUT_SEED = 7
LAYOUT_ITERATIONS = 200


@dataclass
class AttentionMap:
    layers: list[tuple[np.ndarray, np.ndarray]]  # live-atom sigma_a, sigma_b per layer
    selected_layer: int  # 1-based, joint selection
    selected_layer_a: int
    selected_layer_b: int
    intensities_a: np.ndarray
    intensities_b: np.ndarray


def _pick(peaks) -> int:
    # np.argmax returns the first maximum, i.e. the lowest layer on ties
    return int(np.argmax(peaks)) + 1


def attention_map(prediction: Prediction, per_drug: bool = False) -> AttentionMap:
    """Choose the layer whose largest atom weight (over both drugs) is greatest.

    With ``per_drug`` each drug gets its own layer, chosen the same way
    from its own weights. Intensities are the chosen layer's weights divided
    by their maximum.
    """
    na, nb = prediction.n_atoms_a, prediction.n_atoms_b
    layers = [(sa[:na].copy(), sb[:nb].copy()) for sa, sb in prediction.sigmas()]
    joint = _pick([max(sa.max(), sb.max()) for sa, sb in layers])
    if per_drug:
        la = _pick([sa.max() for sa, _ in layers])
        lb = _pick([sb.max() for _, sb in layers])
    else:
        la = lb = joint
    sa = layers[la - 1][0]
    sb = layers[lb - 1][1]
    return AttentionMap(layers, joint, la, lb, sa / sa.max(), sb / sb.max())


def ramp_color(intensity: float) -> str:
    t = min(max(float(intensity), 0.0), 1.0)
    rgb = [round(lo + t * (hi - lo)) for lo, hi in zip(RAMP_LOW, RAMP_HIGH)]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def ramp_position(color: str) -> float:
    """Inverse of :func:`ramp_color` (via the red channel, which spans the ramp)."""
    red = int(color.lstrip("#")[:2], 16)
    return (red - RAMP_LOW[0]) / (RAMP_HIGH[0] - RAMP_LOW[0])


def layout(graph: MolecularGraph, seed: int = LAYOUT_SEED) -> np.ndarray:
    """Deterministic force-directed 2D coordinates scaled to [0, 1]^2."""
    n = graph.n_atoms
    if n == 1:
        return np.array([[0.5, 0.5]])
    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_edges_from((b.begin, b.end) for b in graph.bonds)
    init = {v: (np.cos(2 * np.pi * v / n), np.sin(2 * np.pi * v / n)) for v in range(n)}
    pos = nx.spring_layout(g, pos=init, seed=seed, iterations=LAYOUT_ITERATIONS)
    xy = np.array([pos[v] for v in range(n)], dtype=np.float64)
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    span = np.where(hi - lo > 1e-12, hi - lo, 1.0)
    return (xy - lo) / span


def _label(atom) -> str:
    label = atom.element
    if atom.formal_charge:
        sign = "+" if atom.formal_charge > 0 else "-"
        mag = abs(atom.formal_charge)
        label += sign if mag == 1 else f"{sign}{mag}"
    return label


def render_svg(graph: MolecularGraph, intensities, size: int = 360, title: str = "") -> str:
    xy = layout(graph)
    margin, radius = 28.0, 11.0
    pts = margin + xy * (size - 2 * margin)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
    ]
    if title:
        out.append(f"<title>{escape(title)}</title>")
    out.append('<rect width="100%" height="100%" fill="#ffffff"/>')
    out.append('<g class="bonds" stroke="#333333" stroke-width="1.6">')
    for b in graph.bonds:
        (x1, y1), (x2, y2) = pts[b.begin], pts[b.end]
        dx, dy = x2 - x1, y2 - y1
        norm = float(np.hypot(dx, dy)) or 1.0
        ox, oy = -dy / norm * 3.0, dx / norm * 3.0
        count = {BondKind.SINGLE: 1, BondKind.DOUBLE: 2, BondKind.TRIPLE: 3, BondKind.AROMATIC: 2}[b.kind]
        offsets = [0.0] if count == 1 else ([-0.5, 0.5] if count == 2 else [-1.0, 0.0, 1.0])
        for k, off in enumerate(offsets):
            dash = ' stroke-dasharray="3,2"' if b.kind is BondKind.AROMATIC and k == 1 else ""
            out.append(
                f'<line class="bond bond-{b.kind.value}" x1="{x1 + off * ox:.3f}" y1="{y1 + off * oy:.3f}" '
                f'x2="{x2 + off * ox:.3f}" y2="{y2 + off * oy:.3f}"{dash}/>'
            )
    out.append("</g>")
    out.append('<g class="atoms" font-family="sans-serif" font-size="10" text-anchor="middle">')
    for v, atom in enumerate(graph.atoms):
        x, y = pts[v]
        t = float(intensities[v])
        fill = ramp_color(t)
        ink = "#ffffff" if t > 0.6 else "#000000"
        out.append(
            f'<circle class="atom" data-index="{v}" data-intensity="{t:.6f}" cx="{x:.3f}" cy="{y:.3f}" '
            f'r="{radius}" fill="{fill}" stroke="#333333" stroke-width="0.8"/>'
        )
        out.append(f'<text x="{x:.3f}" y="{y + 3.5:.3f}" fill="{ink}">{escape(_label(atom))}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_dot(graph: MolecularGraph, intensities, title: str = "") -> str:
    xy = layout(graph) * 4.0
    name = "mol"
    out = [f"graph {name} {{"]
    if title:
        out.append(f'  label="{_dot_escape(title)}";')
    out.append('  node [shape=circle, style=filled, fontname="sans-serif"];')
    for v, atom in enumerate(graph.atoms):
        t = float(intensities[v])
        ink = "#ffffff" if t > 0.6 else "#000000"
        out.append(
            f'  a{v} [label="{_dot_escape(_label(atom))}", fillcolor="{ramp_color(t)}", fontcolor="{ink}", '
            f'intensity="{t:.6f}", pos="{xy[v, 0]:.3f},{xy[v, 1]:.3f}!"];'
        )
    styles = {
        BondKind.SINGLE: 'penwidth="1"',
        BondKind.DOUBLE: 'color="black:black"',
        BondKind.TRIPLE: 'color="black:black:black"',
        BondKind.AROMATIC: 'style="dashed", penwidth="2"',
    }
    for b in graph.bonds:
        out.append(f'  a{b.begin} -- a{b.end} [kind="{b.kind.value}", {styles[b.kind]}];')
    out.append("}")
    return "\n".join(out) + "\n"


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def render_highlights(graph: MolecularGraph, intensities, format: str = "svg", title: str = "") -> str:
    intensities = np.asarray(intensities, dtype=np.float64)
    if intensities.shape != (graph.n_atoms,):
        raise ValueError(f"need {graph.n_atoms} intensities, got {intensities.shape}")
    if format == "svg":
        return render_svg(graph, intensities, title=title)
    if format == "dot":
        return render_dot(graph, intensities, title=title)
    raise UnsupportedFormat(f"unsupported format {format!r} (use svg or dot)")


@dataclass
class Explanation:
    probability: float
    documents: tuple[str, str]
    json_text: str
    attention: AttentionMap


def explain_pair(smiles_a: str, smiles_b: str, model, format: str = "svg", per_drug: bool = False) -> Explanation:
    """Score a pair and render both drugs coloured by attention.

    ``model`` is a :class:`ModelParams` or a path to a model file.
    """
    if format not in ("svg", "dot"):
        raise UnsupportedFormat(f"unsupported format {format!r} (use svg or dot)")
    if not isinstance(model, ModelParams):
        from ddigraph.model_io import load_model

        model = load_model(model)
    graphs = (parse(smiles_a), parse(smiles_b))
    max_nodes = model.config.max_nodes
    pred = forward(featurize(graphs[0], max_nodes), featurize(graphs[1], max_nodes), model)
    amap = attention_map(pred, per_drug=per_drug)
    docs = (
        render_highlights(graphs[0], amap.intensities_a, format, title=smiles_a),
        render_highlights(graphs[1], amap.intensities_b, format, title=smiles_b),
    )
    payload = {
        "probability": pred.probability,
        "selected_layer": amap.selected_layer,
        "drugs": [
            {
                "smiles": smi,
                "selected_layer": layer,
                "atoms": [
                    {"index": i, "element": atom.element, "intensity": float(inten[i])}
                    for i, atom in enumerate(g.atoms)
                ],
            }
            for smi, g, inten, layer in zip(
                (smiles_a, smiles_b),
                graphs,
                (amap.intensities_a, amap.intensities_b),
                (amap.selected_layer_a, amap.selected_layer_b),
            )
        ],
    }
    return Explanation(pred.probability, docs, json.dumps(payload, indent=2) + "\n", amap)
