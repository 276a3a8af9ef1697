"""Fixed-shape, zero-padded node features for the graph encoder.

Atom rows follow the neural-fingerprint layout (62 columns)::

    [0, 44)   element one-hot, last slot = any other element
    [44, 50)  degree 0..5
    [50, 55)  attached hydrogens 0..4
    [55, 61)  implicit valence 0..5
    61        aromatic flag

Bond rows are ``[single, double, triple, aromatic, conjugated, in_ring]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ddigraph.errors import DegreeOverflow, FeaturizationError, TooManyAtoms
from ddigraph.smiles import Atom, Bond, BondKind, MolecularGraph

FEATURE_LAYOUT = "nfp62-v1"
MAX_NODES = 65
MAX_DEGREE = 5

ELEMENT_TABLE = (
    "C", "N", "O", "S", "F", "Si", "P", "Cl", "Br", "Mg", "Na", "Ca", "Fe", "As",
    "Al", "I", "B", "V", "K", "Tl", "Yb", "Sb", "Sn", "Ag", "Pd", "Co", "Se", "Ti",
    "Zn", "H", "Li", "Ge", "Cu", "Au", "Ni", "Cd", "In", "Mn", "Zr", "Cr", "Pt",
    "Hg", "Pb", "Unknown",
)  # fmt: skip
_ELEMENT_INDEX = {e: i for i, e in enumerate(ELEMENT_TABLE[:-1])}

BLOCKS = (
    ("element", len(ELEMENT_TABLE)),
    ("degree", 6),
    ("hydrogens", 5),
    ("implicit_valence", 6),
    ("aromatic", 1),
)
BLOCK_OFFSETS = {}
_off = 0
for _name, _width in BLOCKS:
    BLOCK_OFFSETS[_name] = _off
    _off += _width
N_ATOM_FEATURES = _off
N_BOND_FEATURES = 6
assert N_ATOM_FEATURES == 62


@dataclass(frozen=True)
class FeaturizedDrug:
    node_features: np.ndarray  # (max_nodes, 62)
    neighbors: np.ndarray  # (max_nodes, MAX_DEGREE) int64, -1 = empty slot
    degree: np.ndarray  # (max_nodes,) int64, -1 on padding rows
    node_mask: np.ndarray  # (max_nodes,) float 0/1
    bond_features: np.ndarray  # (n_bonds, 6)
    n_atoms: int
    graph: MolecularGraph | None = None

    @property
    def max_nodes(self) -> int:
        return self.node_features.shape[0]


def _one_hot_slot(block: str, value: int, width: int, what: str) -> int:
    if not 0 <= value < width:
        raise FeaturizationError(f"{what}={value} outside supported range 0..{width - 1}")
    return BLOCK_OFFSETS[block] + value


def atom_feature(atom: Atom, graph_context: MolecularGraph | None = None) -> np.ndarray:
    """62-dim indicator vector for one atom.

    ``graph_context`` is accepted for interface symmetry; all needed
    quantities are already stored on the parsed atom.
    """
    if atom.degree > MAX_DEGREE:
        raise DegreeOverflow(f"atom {atom.element} has degree {atom.degree} > {MAX_DEGREE}")
    vec = np.zeros(N_ATOM_FEATURES)
    vec[_ELEMENT_INDEX.get(atom.element, len(ELEMENT_TABLE) - 1)] = 1.0
    vec[_one_hot_slot("degree", atom.degree, 6, "degree")] = 1.0
    vec[_one_hot_slot("hydrogens", atom.implicit_hydrogens, 5, "hydrogen count")] = 1.0
    vec[_one_hot_slot("implicit_valence", atom.implicit_valence, 6, "implicit valence")] = 1.0
    if atom.is_aromatic:
        vec[BLOCK_OFFSETS["aromatic"]] = 1.0
    return vec


def bond_feature(bond: Bond) -> np.ndarray:
    kinds = (BondKind.SINGLE, BondKind.DOUBLE, BondKind.TRIPLE, BondKind.AROMATIC)
    vec = np.zeros(N_BOND_FEATURES)
    vec[kinds.index(bond.kind)] = 1.0
    vec[4] = float(bond.is_conjugated)
    vec[5] = float(bond.is_in_ring)
    return vec


def featurize(graph: MolecularGraph, max_nodes: int = MAX_NODES) -> FeaturizedDrug:
    n = graph.n_atoms
    if n > max_nodes:
        raise TooManyAtoms(n, max_nodes)
    x = np.zeros((max_nodes, N_ATOM_FEATURES))
    neighbors = np.full((max_nodes, MAX_DEGREE), -1, dtype=np.int64)
    degree = np.full(max_nodes, -1, dtype=np.int64)
    for v, atom in enumerate(graph.atoms):
        x[v] = atom_feature(atom, graph)
        nbrs = graph.adjacency[v]
        neighbors[v, : len(nbrs)] = nbrs
        degree[v] = len(nbrs)
    mask = np.zeros(max_nodes)
    mask[:n] = 1.0
    if graph.bonds:
        bonds = np.stack([bond_feature(b) for b in graph.bonds])
    else:
        bonds = np.zeros((0, N_BOND_FEATURES))
    return FeaturizedDrug(
        node_features=x,
        neighbors=neighbors,
        degree=degree,
        node_mask=mask,
        bond_features=bonds,
        n_atoms=n,
        graph=graph,
    )


def featurize_smiles(smiles: str, max_nodes: int = MAX_NODES) -> FeaturizedDrug:
    from ddigraph.smiles import parse

    return featurize(parse(smiles), max_nodes)


def feature_names() -> list[str]:
    names = [f"element={e}" for e in ELEMENT_TABLE]
    names += [f"degree={d}" for d in range(6)]
    names += [f"num_h={h}" for h in range(5)]
    names += [f"implicit_valence={v}" for v in range(6)]
    names.append("aromatic")
    return names


def to_csv(drug: FeaturizedDrug) -> str:
    """Real-atom feature rows as CSV (header + one row per atom)."""
    lines = ["atom_index,element," + ",".join(feature_names())]
    for v in range(drug.n_atoms):
        element = drug.graph.atoms[v].element if drug.graph is not None else ""
        row = ",".join(str(int(val)) for val in drug.node_features[v])
        lines.append(f"{v},{element},{row}")
    return "\n".join(lines) + "\n"
