"""Order structure for encrypted timestamps with displacements.

Both variants answer ``rank(et, ed)``: the position of ``t + d`` among all
distinct registered sums, where ``et`` and ``ed`` are the (deterministic)
encryptions of a timestamp and a displacement.  ``time_order`` then compares
two ranks; no key material is used at query time.

* :class:`MopedStatic` precomputes ranks in nested dictionaries.
* :class:`MopedTree` is an AVL tree keyed by opaque sum ciphertexts, built
  through a :class:`ClientOracle` that can compare the sums they hide.
"""


class UnknownTimestamp(KeyError):
    """A (timestamp, displacement) pair that was never registered."""


class ClientOracle:
    """Trusted-side comparator.  Holds the plaintext behind each sum ciphertext."""

    def __init__(self, decrypt=None):
        self._plain = {}
        self._decrypt = decrypt
        self.calls = 0

    def register(self, cipher, value):
        self._plain[cipher] = value

    def value(self, cipher):
        v = self._plain.get(cipher)
        if v is None:
            if self._decrypt is None:
                raise UnknownTimestamp(cipher)
            v = self._plain[cipher] = self._decrypt(cipher)
        return v

    def compare(self, a, b):
        self.calls += 1
        va, vb = self.value(a), self.value(b)
        return (va > vb) - (va < vb)


class MopedStatic:
    def __init__(self, table=None):
        self.table = table or {}

    @property
    def n(self):
        return len({r for inner in self.table.values() for r in inner.values()})

    def rank(self, et, ed):
        try:
            return self.table[et][ed]
        except KeyError:
            raise UnknownTimestamp((et, ed)) from None

    def time_order(self, et1, ed1, et2, ed2):
        return self.rank(et1, ed1) <= self.rank(et2, ed2)

    def pairs(self):
        return [(et, ed) for et, inner in self.table.items() for ed in inner]

    def inorder(self):
        """``[(rank, [(et, ed), ...]), ...]`` ascending, without sum ciphers."""
        groups = {}
        for et, inner in self.table.items():
            for ed, r in inner.items():
                groups.setdefault(r, []).append((et, ed))
        return [(r, sorted(groups[r])) for r in sorted(groups)]


def build_static(timestamps, displacements, enc):
    """Rank every ``t + d`` for the given timestamps and displacement set."""
    ds = sorted(set(displacements) | {0})
    sums = sorted({t + d for t in timestamps for d in ds})
    rank = {s: i + 1 for i, s in enumerate(sums)}
    enc_d = {d: enc(d) for d in ds}
    table = {}
    for t in timestamps:
        inner = table.setdefault(enc(t), {})
        for d in ds:
            inner[enc_d[d]] = rank[t + d]
    return MopedStatic(table)


class _Node:
    __slots__ = ("key", "assoc", "left", "right", "parent", "size", "height")

    def __init__(self, key):
        self.key = key
        self.assoc = set()
        self.left = self.right = self.parent = None
        self.size = 1
        self.height = 1


def _h(n):
    return n.height if n else 0


def _s(n):
    return n.size if n else 0


def _update(n):
    n.height = 1 + max(_h(n.left), _h(n.right))
    n.size = 1 + _s(n.left) + _s(n.right)


class MopedTree:
    def __init__(self):
        self.root = None
        self.nodes = {}      # sum cipher -> node
        self.where = {}      # (et, ed) -> node

    def __len__(self):
        return _s(self.root)

    # rotations keep parent pointers consistent
    def _rotate(self, x, right):
        y = x.left if right else x.right
        mid = y.right if right else y.left
        if right:
            x.left, y.right = mid, x
        else:
            x.right, y.left = mid, x
        if mid:
            mid.parent = x
        y.parent = x.parent
        x.parent = y
        _update(x)
        _update(y)
        return y

    def _rebalance(self, n):
        _update(n)
        bal = _h(n.left) - _h(n.right)
        if bal > 1:
            if _h(n.left.left) < _h(n.left.right):
                n.left = self._rotate(n.left, right=False)
                n.left.parent = n
            return self._rotate(n, right=True)
        if bal < -1:
            if _h(n.right.right) < _h(n.right.left):
                n.right = self._rotate(n.right, right=True)
                n.right.parent = n
            return self._rotate(n, right=False)
        return n

    def _insert_key(self, key, oracle):
        node = self.nodes.get(key)
        if node is not None:
            return node
        if self.root is None:
            node = self.root = self.nodes[key] = _Node(key)
            return node
        path = []
        cur = self.root
        while True:
            c = oracle.compare(key, cur.key)
            if c == 0:
                # a different ciphertext of an equal sum: coalesce
                self.nodes[key] = cur
                return cur
            path.append(cur)
            nxt = cur.left if c < 0 else cur.right
            if nxt is None:
                break
            cur = nxt
        node = _Node(key)
        node.parent = cur
        if c < 0:
            cur.left = node
        else:
            cur.right = node
        self.nodes[key] = node
        for anc in reversed(path):
            parent = anc.parent
            new = self._rebalance(anc)
            if parent is None:
                self.root = new
                new.parent = None
            elif parent.left is anc:
                parent.left = new
            else:
                parent.right = new
        return node

    def insert(self, et, sums, oracle):
        """Register timestamp ``et`` with ``[(ed, enc_sum), ...]``."""
        for ed, es in sums:
            node = self._insert_key(es, oracle)
            node.assoc.add((et, ed))
            self.where[(et, ed)] = node

    def _node_rank(self, node):
        r = _s(node.left) + 1
        while node.parent is not None:
            if node.parent.right is node:
                r += _s(node.parent.left) + 1
            node = node.parent
        return r

    def rank(self, et, ed):
        node = self.where.get((et, ed))
        if node is None:
            raise UnknownTimestamp((et, ed))
        return self._node_rank(node)

    def time_order(self, et1, ed1, et2, ed2):
        return self.rank(et1, ed1) <= self.rank(et2, ed2)

    def pairs(self):
        return list(self.where)

    def _walk(self):
        stack, cur = [], self.root
        while stack or cur:
            while cur:
                stack.append(cur)
                cur = cur.left
            cur = stack.pop()
            yield cur
            cur = cur.right

    def inorder_nodes(self):
        return list(self._walk())

    def inorder(self):
        return [(i + 1, sorted(n.assoc)) for i, n in enumerate(self._walk())]

    def shape(self, relabel=lambda x: x):
        """Nested tuple describing the tree with association labels mapped by
        ``relabel``; used to compare structures of equivalent logs."""
        def go(n):
            if n is None:
                return None
            return (go(n.left), tuple(sorted(relabel(a) for a in n.assoc)), go(n.right))
        return go(self.root)

    def check(self):
        """Assert AVL, size, parent and ordering invariants (test helper)."""
        def go(n, parent):
            if n is None:
                return 0, 0
            assert n.parent is parent
            hl, sl = go(n.left, n)
            hr, sr = go(n.right, n)
            assert abs(hl - hr) <= 1
            assert n.height == 1 + max(hl, hr)
            assert n.size == 1 + sl + sr
            return n.height, n.size
        go(self.root, None)


def build_tree(timestamps, displacements, enc, oracle, sum_enc=None):
    """Insert timestamps in order, each with all its displaced sums.

    ``sum_enc`` encrypts sums (defaults to ``enc``); every sum ciphertext is
    registered with the oracle before insertion.
    """
    sum_enc = sum_enc or enc
    ds = sorted(set(displacements) | {0})
    enc_d = {d: enc(d) for d in ds}
    tree = MopedTree()
    for t in timestamps:
        sums = []
        for d in ds:
            es = sum_enc(t + d)
            oracle.register(es, t + d)
            sums.append((enc_d[d], es))
        tree.insert(enc(t), sums, oracle)
    return tree


def render_et(et):
    """In-order text form: ``sumcipher | et:ed, et:ed``."""
    lines = []
    if isinstance(et, MopedTree):
        for n in et.inorder_nodes():
            assoc = ", ".join(f"{a.hex()}:{b.hex()}" for a, b in sorted(n.assoc))
            lines.append(f"{n.key.hex()} | {assoc}")
    else:
        for r, assoc in et.inorder():
            body = ", ".join(f"{a.hex()}:{b.hex()}" for a, b in assoc)
            lines.append(f"{r:08x} | {body}")
    return "".join(line + "\n" for line in lines)


def parse_et(text, variant="tree"):
    """Rebuild a structure from :func:`render_et` output without an oracle."""
    groups = []
    for line in text.splitlines():
        if not line.strip():
            continue
        key, _, body = line.partition("|")
        assoc = []
        for item in body.split(","):
            item = item.strip()
            if item:
                a, _, b = item.partition(":")
                assoc.append((bytes.fromhex(a), bytes.fromhex(b)))
        groups.append((bytes.fromhex(key.strip()), assoc))
    if variant == "static":
        table = {}
        for r, (_, assoc) in enumerate(groups, 1):
            for a, b in assoc:
                table.setdefault(a, {})[b] = r
        return MopedStatic(table)
    tree = MopedTree()

    def build(lo, hi, parent):
        if lo >= hi:
            return None
        mid = (lo + hi) // 2
        key, assoc = groups[mid]
        n = _Node(key)
        n.parent = parent
        n.assoc = set(assoc)
        tree.nodes[key] = n
        for p in assoc:
            tree.where[p] = n
        n.left = build(lo, mid, n)
        n.right = build(mid + 1, hi, n)
        _update(n)
        return n

    tree.root = build(0, len(groups), None)
    return tree
