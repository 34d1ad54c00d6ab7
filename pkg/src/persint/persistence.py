"""Cubical persistent homology of grid fields, dims 0 and 1.

The complex is vertex-based: grid nodes are vertices with 4-connectivity,
and every edge/square enters the filtration at the extremal value of its
vertices (max for a sublevel ascent). Superlevel diagrams are computed by
negating the field, running the sublevel engine, un-negating, and swapping
birth/death so stored points lie on or above the diagonal. Ties between
equal values are broken by lexicographic (i, j) node order.

Dim-0 pairs come from union-find with the elder rule; dim-1 pairs from
GF(2) boundary-matrix reduction of the square columns, with columns kept
as Python integer bitmasks over edge filtration positions.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import CsvFormatError, InvalidInputError, InvalidParameterError

DIRECTIONS = ("superlevel", "sublevel")


@dataclass(frozen=True)
class PersistencePair:
    """One finite topological feature: (dim, birth, death) with death >= birth."""

    dim: int
    birth: float
    death: float

    @property
    def lifetime(self):
        return self.death - self.birth


@dataclass
class PersistenceDiagram:
    """Finite multiset of persistence pairs plus provenance metadata."""

    pairs: list
    direction: str = "superlevel"
    essential_birth: float | None = None
    grid_spec: object = None
    field_kind: str | None = None

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise InvalidParameterError(
                f"direction must be one of {DIRECTIONS}, got {self.direction!r}"
            )
        for p in self.pairs:
            if p.death < p.birth:
                raise InvalidInputError(f"pair {p} lies below the diagonal")

    def __len__(self):
        return len(self.pairs)

    def select(self, dim):
        return [p for p in self.pairs if p.dim == dim]

    def arrays(self):
        """(dims, births, deaths) as float arrays, in stored order."""
        dims = np.array([p.dim for p in self.pairs], dtype=np.int64)
        births = np.array([p.birth for p in self.pairs], dtype=np.float64)
        deaths = np.array([p.death for p in self.pairs], dtype=np.float64)
        return dims, births, deaths

    def multiset(self):
        """Sorted tuple view, convenient for exact comparisons."""
        return tuple(sorted((p.dim, p.birth, p.death) for p in self.pairs))


def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def _sublevel_pairs(vals, max_dim):
    """Finite (dim, birth, death) pairs of the sublevel filtration of ``vals``.

    Returns (pairs, essential_birth). Zero-lifetime pairs are dropped.
    """
    nx, ny = vals.shape
    m = nx * ny
    flat = vals.ravel()  # linear index i*ny + j
    lin = np.arange(m)
    # Total vertex order: by value, then (i, j) lexicographically.
    order = np.lexsort((lin % ny, lin // ny, flat))
    rank = np.empty(m, dtype=np.int64)
    rank[order] = np.arange(m)
    sval = flat[order]  # value of the vertex with a given rank

    pairs = []

    # Dim 0: union-find over vertex ranks, processed in filtration order.
    # The root of a set is always its eldest member (minimal rank), so the
    # root doubles as the component's birth.
    parent = list(range(m))
    order_list = order.tolist()
    rank_list = rank.tolist()
    for r in range(m):
        v = order_list[r]
        i, j = divmod(v, ny)
        for nb in (
            v - ny if i > 0 else -1,
            v + ny if i < nx - 1 else -1,
            v - 1 if j > 0 else -1,
            v + 1 if j < ny - 1 else -1,
        ):
            if nb < 0:
                continue
            nr = rank_list[nb]
            if nr > r:
                continue
            ra = _find(parent, r)
            rb = _find(parent, nr)
            if ra == rb:
                continue
            if ra > rb:
                ra, rb = rb, ra  # ra elder, rb younger
            parent[rb] = ra
            birth = sval[rb]
            death = sval[r]
            if birth != death:
                pairs.append((0, float(birth), float(death)))
    essential_birth = float(sval[0])

    if max_dim >= 1 and nx >= 2 and ny >= 2:
        pairs.extend(_square_reduction(rank, sval, nx, ny))
    return pairs, essential_birth


def _square_reduction(rank, sval, nx, ny):
    """Dim-1 pairs by reducing square boundary columns over edge bitmasks."""
    rank2d = rank.reshape(nx, ny)
    # Horizontal edges (i, j)-(i, j+1); vertical edges (i, j)-(i+1, j).
    h_rank = np.maximum(rank2d[:, :-1], rank2d[:, 1:])
    v_rank = np.maximum(rank2d[:-1, :], rank2d[1:, :])
    n_h = nx * (ny - 1)
    edge_rank = np.concatenate([h_rank.ravel(), v_rank.ravel()])
    edge_kind = np.concatenate(
        [np.zeros(n_h, dtype=np.int64), np.ones((nx - 1) * ny, dtype=np.int64)]
    )
    edge_i = np.concatenate(
        [np.repeat(np.arange(nx), ny - 1), np.repeat(np.arange(nx - 1), ny)]
    )
    edge_j = np.concatenate([np.tile(np.arange(ny - 1), nx), np.tile(np.arange(ny), nx - 1)])
    # Edge filtration positions: by entry rank, ties by (kind, i, j).
    edge_order = np.lexsort((edge_j, edge_i, edge_kind, edge_rank))
    pos = np.empty(edge_rank.size, dtype=np.int64)
    pos[edge_order] = np.arange(edge_rank.size)
    pos_birth = sval[edge_rank[edge_order]]  # birth value by edge position

    h_pos = pos[:n_h].reshape(nx, ny - 1)
    v_pos = pos[n_h:].reshape(nx - 1, ny)

    sq_rank = np.maximum(
        np.maximum(rank2d[:-1, :-1], rank2d[:-1, 1:]),
        np.maximum(rank2d[1:, :-1], rank2d[1:, 1:]),
    )
    sq_i, sq_j = np.unravel_index(np.arange(sq_rank.size), sq_rank.shape)
    sq_order = np.lexsort((sq_j, sq_i, sq_rank.ravel()))

    pairs = []
    low_to_col = {}
    sq_rank_flat = sq_rank.ravel()
    for s in sq_order.tolist():
        i, j = divmod(s, ny - 1)
        col = (
            (1 << int(h_pos[i, j]))
            | (1 << int(h_pos[i + 1, j]))
            | (1 << int(v_pos[i, j]))
            | (1 << int(v_pos[i, j + 1]))
        )
        while True:
            low = col.bit_length() - 1
            other = low_to_col.get(low)
            if other is None:
                break
            col ^= other
        # A square column can never vanish: a nonzero 2-chain on a planar
        # rectangle has nonempty boundary.
        assert col, "square boundary column reduced to zero"
        low_to_col[low] = col
        birth = float(pos_birth[low])
        death = float(sval[sq_rank_flat[s]])
        if birth != death:
            pairs.append((1, birth, death))
    return pairs


def grid_persistence(values, direction="superlevel", max_dim=1):
    """Persistence diagram of a raw value array's level-set filtration.

    The single essential dim-0 class (the whole grid's component) is
    removed; its birth is kept as diagram metadata. Zero-lifetime pairs are
    dropped. For the superlevel direction, raw pairs have birth >= death
    and are stored swapped, so stored points always satisfy death >= birth.
    """
    if direction not in DIRECTIONS:
        raise InvalidParameterError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    if max_dim not in (0, 1):
        raise InvalidParameterError(f"max_dim must be 0 or 1, got {max_dim}")
    vals = np.asarray(values, dtype=np.float64)
    if vals.ndim != 2 or vals.size == 0:
        raise InvalidInputError(f"values must be a nonempty 2D array, got shape {vals.shape}")
    if not np.all(np.isfinite(vals)):
        raise InvalidInputError("field values must all be finite")

    if direction == "superlevel":
        raw, essential = _sublevel_pairs(-vals, max_dim)
        pairs = [PersistencePair(d, -death, -birth) for d, birth, death in raw]
        essential = -essential
    else:
        raw, essential = _sublevel_pairs(vals, max_dim)
        pairs = [PersistencePair(d, birth, death) for d, birth, death in raw]

    pairs.sort(key=lambda p: (p.dim, p.birth, p.death))
    return PersistenceDiagram(pairs=pairs, direction=direction, essential_birth=essential)


def compute_persistence(field, direction="superlevel", max_dim=1):
    """Persistence diagram of a GridField; see :func:`grid_persistence`."""
    diagram = grid_persistence(field.values, direction, max_dim)
    diagram.grid_spec = field.spec
    diagram.field_kind = field.kind
    return diagram


def write_diagram(diagram, path):
    """Write pairs as CSV with header dim,birth,death at full precision."""
    with open(path, "w", newline="") as fh:
        fh.write("dim,birth,death\n")
        for p in diagram.pairs:
            fh.write(f"{p.dim},{float(p.birth)!r},{float(p.death)!r}\n")


def read_diagram(path, direction="superlevel"):
    """Read a diagram written by :func:`write_diagram`."""
    pairs = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["dim", "birth", "death"]:
            raise CsvFormatError(path, 1, "expected header 'dim,birth,death'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise CsvFormatError(path, lineno, f"expected 3 columns, got {len(row)}")
            try:
                dim = int(row[0])
                birth = float(row[1])
                death = float(row[2])
            except ValueError as exc:
                raise CsvFormatError(path, lineno, f"bad value: {exc}") from None
            if dim not in (0, 1):
                raise CsvFormatError(path, lineno, f"dim must be 0 or 1, got {dim}")
            if death < birth:
                raise CsvFormatError(
                    path, lineno, f"death {death!r} < birth {birth!r} (below diagonal)"
                )
            if not (np.isfinite(birth) and np.isfinite(death)):
                raise CsvFormatError(path, lineno, "birth/death must be finite")
            pairs.append(PersistencePair(dim, birth, death))
    return PersistenceDiagram(pairs=pairs, direction=direction)
