"""Exception hierarchy.

Every error carries a short ``category`` used by the CLI to choose an exit
code (usage=2, data=3, model=4).
"""


class DDIError(Exception):
    category = "data"


class SmilesError(DDIError, ValueError):
    """Bad SMILES input. ``position`` is a 0-based character offset."""

    def __init__(self, message, smiles="", position=None):
        self.smiles = smiles
        self.position = position
        where = f" at offset {position}" if position is not None else ""
        super().__init__(f"{message}{where}: {smiles!r}" if smiles else message + where)


class EmptyInput(DDIError, ValueError):
    pass


class EmptySmiles(SmilesError, EmptyInput):
    pass


class UnknownToken(SmilesError):
    pass


class UnterminatedBracket(SmilesError):
    pass


class UnclosedRing(SmilesError):
    pass


class UnbalancedParens(SmilesError):
    pass


class ValenceError(SmilesError):
    pass


class FeaturizationError(DDIError, ValueError):
    pass


class DegreeOverflow(FeaturizationError):
    pass


class TooManyAtoms(FeaturizationError):
    def __init__(self, n_atoms, max_nodes):
        self.n_atoms = n_atoms
        self.max_nodes = max_nodes
        super().__init__(f"molecule has {n_atoms} atoms, max_nodes is {max_nodes}")


class ShapeMismatch(DDIError, ValueError):
    category = "internal"


class NonFiniteError(DDIError, FloatingPointError):
    category = "internal"


class AllMasked(DDIError, ValueError):
    category = "internal"


class MalformedRow(DDIError, ValueError):
    def __init__(self, row, reason):
        self.row = row
        self.reason = reason
        super().__init__(f"row {row}: {reason}")


class PoolExhausted(DDIError, RuntimeError):
    pass


class SingleClassDataset(DDIError, ValueError):
    pass


class SingleClass(DDIError, ValueError):
    pass


class UnsupportedFormat(DDIError, ValueError):
    category = "usage"


class ModelFileError(DDIError):
    category = "model"


class VersionMismatch(ModelFileError):
    pass


class CorruptFile(ModelFileError):
    pass


class IncompatibleHyperparameters(ModelFileError):
    pass
