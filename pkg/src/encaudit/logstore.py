"""In-memory relational log store with three-valued lookups.

A :class:`Log` is an ordered collection of :class:`Table` objects.  Cells are
stored physically:

* ``plain`` tables hold ``str``/``int`` values,
* ``det`` tables hold ciphertext ``bytes``,
* ``kh`` tables hold two physical cells per logical column, the hash and the
  probabilistic ciphertext.

Selections compare *keys*: the value itself for plain and DET tables, the
hash component for KH tables.
"""

import enum
import os
import re
from collections import defaultdict

from .policy.ast import DetValue, KhValue

KINDS = ("plain", "det", "kh")


class Lookup3(enum.Enum):
    TOP = "true"
    BOT = "false"
    UU = "uu"


class LogError(ValueError):
    pass


class Table:
    def __init__(self, name, columns, complete=True, kind="plain", time_cols=()):
        if kind not in KINDS:
            raise LogError(f"unknown table kind {kind!r}")
        if len(set(columns)) != len(columns):
            raise LogError(f"duplicate column names in {name}")
        self.name = name
        self.columns = list(columns)
        self.complete = bool(complete)
        self.kind = kind
        self.time_cols = frozenset(time_cols)
        self.rows = []
        self._indexes = {}
        self._rowset = None
        self.probes = 0
        self.scans = 0

    @property
    def width(self):
        return len(self.columns)

    @property
    def physical_width(self):
        return 2 * self.width if self.kind == "kh" else self.width

    def schema(self):
        return (self.name, tuple(self.columns), self.time_cols, self.complete)

    def copy_empty(self, kind=None, complete=None):
        return Table(self.name, self.columns, self.complete if complete is None else complete,
                     kind or self.kind, self.time_cols)

    def append(self, row):
        row = tuple(row)
        if len(row) != self.physical_width:
            raise LogError(f"row width {len(row)} does not match {self.name} "
                           f"({self.physical_width} physical columns)")
        idx = len(self.rows)
        self.rows.append(row)
        for cols, index in self._indexes.items():
            index[tuple(self.key(row, c) for c in cols)].append(idx)
        if self._rowset is not None:
            self._rowset.add(self.keys(row))

    def extend(self, rows):
        for r in rows:
            self.append(r)

    # cell access (columns are 1-based, like provenances)
    def key(self, row, col):
        if self.kind == "kh":
            return row[2 * col - 2]
        return row[col - 1]

    def keys(self, row):
        if self.kind == "kh":
            return row[0::2]
        return row

    def cell(self, row, col):
        if self.kind == "kh":
            return KhValue(row[2 * col - 2], row[2 * col - 1])
        if self.kind == "det":
            return DetValue(row[col - 1])
        return row[col - 1]

    # indexing and selection
    def build_index(self, cols):
        cols = tuple(sorted(cols))
        if cols in self._indexes:
            return
        index = defaultdict(list)
        for i, row in enumerate(self.rows):
            index[tuple(self.key(row, c) for c in cols)].append(i)
        self._indexes[cols] = index

    def indexed(self, cols):
        return tuple(sorted(cols)) in self._indexes

    def select(self):
        return list(self.rows)

    def constrained_select(self, constraints, auto_index=False):
        """Rows whose keys equal every ``{col: key}`` constraint, in insertion order."""
        if not constraints:
            return list(self.rows)
        for c in constraints:
            if not 1 <= c <= self.width:
                raise LogError(f"{self.name} has no column {c}")
        cols = tuple(sorted(constraints))
        if auto_index and cols not in self._indexes:
            self.build_index(cols)
        index = self._indexes.get(cols)
        if index is not None:
            self.probes += 1
            hits = index.get(tuple(constraints[c] for c in cols), ())
            return [self.rows[i] for i in hits]
        # fall back to the best single-column index, then filter
        for c in cols:
            index = self._indexes.get((c,))
            if index is not None:
                self.probes += 1
                cand = (self.rows[i] for i in index.get((constraints[c],), ()))
                break
        else:
            self.scans += 1
            cand = iter(self.rows)
        return [r for r in cand if all(self.key(r, c) == k for c, k in constraints.items())]

    def contains(self, keys):
        if self._rowset is None:
            self._rowset = {self.keys(r) for r in self.rows}
        return tuple(keys) in self._rowset

    def lookup(self, keys):
        if len(keys) != self.width:
            raise LogError(f"{self.name} expects {self.width} arguments, got {len(keys)}")
        if self.contains(keys):
            return Lookup3.TOP
        return Lookup3.BOT if self.complete else Lookup3.UU


class Log:
    def __init__(self, tables=(), kind="plain"):
        self.kind = kind
        self.tables = {}
        for t in tables:
            self.add_table(t)
        # encrypted timestamp structure (set by the scheme encryptors)
        self.et = None

    def add_table(self, table):
        if table.name in self.tables:
            raise LogError(f"duplicate table {table.name}")
        if table.kind != self.kind:
            raise LogError(f"table {table.name} is {table.kind}, log is {self.kind}")
        self.tables[table.name] = table
        return table

    def table(self, name):
        try:
            return self.tables[name]
        except KeyError:
            raise LogError(f"unknown table {name!r}") from None

    def __iter__(self):
        return iter(self.tables.values())

    def schema(self):
        return [t.schema() for t in self]

    def lookup(self, atom):
        """Three-valued lookup of a ground predicate atom over a plain log."""
        from .policy.ast import Const
        t = self.table(atom.name)
        if any(not isinstance(a, Const) for a in atom.args):
            raise LogError("lookup needs a ground atom")
        return t.lookup(tuple(a.value for a in atom.args))

    def total_rows(self):
        return sum(len(t.rows) for t in self)


def empty_like(log, kind="plain"):
    return Log([t.copy_empty(kind) for t in log], kind)


def lookup(log, atom):
    return log.lookup(atom)


def extends(l1, l2):
    """True when ``l1`` only settles entries that ``l2`` leaves unknown."""
    if set(l1.tables) != set(l2.tables):
        raise LogError("logs have different table names")
    for name, t2 in l2.tables.items():
        t1 = l1.tables[name]
        if t1.width != t2.width:
            raise LogError(f"table {name} has different widths")
        r1 = {t1.keys(r) for r in t1.rows}
        r2 = {t2.keys(r) for r in t2.rows}
        if t2.complete:
            if not t1.complete or r1 != r2:
                return False
        elif not r1 >= r2:
            return False
    return True


def timestamps_of(log):
    """Unique timestamps in first-occurrence order (schema order, then rows)."""
    seen, out = set(), []
    for t in log:
        cols = sorted(t.time_cols)
        for row in t.rows:
            for c in cols:
                v = t.key(row, c)
                if v not in seen:
                    seen.add(v)
                    out.append(v)
    return out


def select(log, table):
    return log.table(table).select()


def constrained_select(log, table, constraints):
    return log.table(table).constrained_select(constraints)


def build_index(log, table, columns):
    log.table(table).build_index(columns)


# ---------------------------------------------------------------- file format

_HEADER = re.compile(r"table\s+([a-zA-Z_][a-zA-Z0-9_]*)\s+(complete|incomplete)\s+cols\(([^)]*)\)\s*\Z")
_INT = re.compile(r"-?[0-9]+\Z")
MANIFEST = "MANIFEST"
ET_FILE = "et.txt"


def _fmt_cell(table, row, col):
    if table.kind == "kh":
        return row[2 * col - 2].hex() + ":" + row[2 * col - 1].hex()
    v = row[col - 1]
    if table.kind == "det":
        return v.hex()
    if isinstance(v, int):
        return str(v)
    if "\t" in v or "\n" in v or _INT.match(v):
        raise LogError(f"value {v!r} cannot be stored in the text format")
    return v


def render_table(table):
    state = "complete" if table.complete else "incomplete"
    lines = [f"table {table.name} {state} cols({','.join(table.columns)})"]
    for row in table.rows:
        lines.append("\t".join(_fmt_cell(table, row, c) for c in range(1, table.width + 1)))
    return "\n".join(lines) + "\n"


def parse_table(text, kind="plain", time_cols=()):
    lines = text.split("\n")
    m = _HEADER.match(lines[0].strip())
    if not m:
        raise LogError(f"bad table header {lines[0]!r}")
    cols = [c.strip() for c in m.group(3).split(",") if c.strip()]
    t = Table(m.group(1), cols, m.group(2) == "complete", kind, time_cols)
    for lineno, line in enumerate(lines[1:], 2):
        if not line:
            continue
        cells = line.split("\t")
        if len(cells) != len(cols):
            raise LogError(f"{t.name} line {lineno}: expected {len(cols)} cells")
        if kind == "plain":
            row = tuple(int(c) if _INT.match(c) else c for c in cells)
        elif kind == "det":
            row = tuple(bytes.fromhex(c) for c in cells)
        else:
            row = []
            for c in cells:
                h, sep, e = c.partition(":")
                if not sep:
                    raise LogError(f"{t.name} line {lineno}: KH cell needs hash:cipher")
                row += [bytes.fromhex(h), bytes.fromhex(e)]
            row = tuple(row)
        t.append(row)
    return t


def serialized_size(log):
    """Bytes taken by the table files of ``log`` (timestamp structure excluded)."""
    return sum(len(render_table(t).encode()) for t in log)


def write_log(log, directory):
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, MANIFEST), "w") as fh:
        fh.write(f"scheme {log.kind}\n")
        fh.write("tables " + " ".join(log.tables) + "\n")
        for t in log:
            if t.time_cols:
                fh.write(f"time {t.name} {','.join(str(c) for c in sorted(t.time_cols))}\n")
    for t in log:
        with open(os.path.join(directory, t.name + ".tbl"), "w") as fh:
            fh.write(render_table(t))
    if log.et is not None:
        from .moped import render_et
        with open(os.path.join(directory, ET_FILE), "w") as fh:
            fh.write(render_et(log.et))


def read_log(directory, modes=None):
    """Load a log directory; ``modes`` supplies timestamp columns when the
    manifest is absent."""
    kind, order, times = "plain", None, {}
    mpath = os.path.join(directory, MANIFEST)
    if os.path.exists(mpath):
        with open(mpath) as fh:
            for line in fh:
                parts = line.split()
                if not parts:
                    continue
                if parts[0] == "scheme":
                    kind = parts[1]
                elif parts[0] == "tables":
                    order = parts[1:]
                elif parts[0] == "time":
                    times[parts[1]] = frozenset(int(c) for c in parts[2].split(","))
    if order is None:
        order = sorted(f[:-4] for f in os.listdir(directory) if f.endswith(".tbl"))
    if modes is not None:
        for name, m in modes.items():
            times.setdefault(name, m.time_cols)
    log = Log(kind=kind)
    for name in order:
        with open(os.path.join(directory, name + ".tbl")) as fh:
            t = parse_table(fh.read(), kind, times.get(name, ()))
        if t.name != name:
            raise LogError(f"file {name}.tbl holds table {t.name}")
        log.add_table(t)
    epath = os.path.join(directory, ET_FILE)
    if os.path.exists(epath):
        from .moped import parse_et
        with open(epath) as fh:
            log.et = parse_et(fh.read())
    return log
