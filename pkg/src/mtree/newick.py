"""Newick reading and writing.

Newick is rooted; trees here are not. On reading, a root with exactly two
children is suppressed by merging its two edges; any other degree-2 vertex is
an error. Every non-root branch must carry a positive ``:length``. Internal
node names are accepted and dropped. Quoted labels (``'like this'``, with
``''`` for a literal quote) and ``[comments]`` are supported; underscores are
kept as-is.
"""

from __future__ import annotations

from .errors import NewickError, TreeError
from .scalar import ScalarMode
from .tree_core import EXACT, WeightedTree

_PUNCT = set("(),:;[]'")
_SAFE_EXTRA = set("._-/+*#@!$%&=?~^|<>{}\"`\\")


class _Node:
    __slots__ = ("children", "name", "length", "length_pos")

    def __init__(self):
        self.children = []
        self.name = None
        self.length = None
        self.length_pos = None


class _Reader:
    def __init__(self, text: str, mode: ScalarMode):
        self.text = text
        self.pos = 0
        self.mode = mode

    def error(self, msg, pos=None):
        raise NewickError(msg, self.pos if pos is None else pos)

    def skip(self):
        text = self.text
        while self.pos < len(text):
            ch = text[self.pos]
            if ch.isspace():
                self.pos += 1
            elif ch == "[":
                end = text.find("]", self.pos)
                if end < 0:
                    self.error("unterminated comment")
                self.pos = end + 1
            else:
                break

    def peek(self):
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def name(self):
        self.skip()
        text = self.text
        if self.pos < len(text) and text[self.pos] == "'":
            out = []
            i = self.pos + 1
            while True:
                if i >= len(text):
                    self.error("unterminated quoted label")
                if text[i] == "'":
                    if i + 1 < len(text) and text[i + 1] == "'":
                        out.append("'")
                        i += 2
                        continue
                    break
                out.append(text[i])
                i += 1
            self.pos = i + 1
            return "".join(out)
        start = self.pos
        while self.pos < len(text) and text[self.pos] not in _PUNCT and not text[self.pos].isspace():
            self.pos += 1
        return text[start:self.pos] or None

    def length(self, node):
        if self.peek() != ":":
            return
        self.pos += 1
        self.skip()
        start = self.pos
        text = self.text
        while self.pos < len(text) and text[self.pos] not in _PUNCT and not text[self.pos].isspace():
            self.pos += 1
        literal = text[start:self.pos]
        try:
            node.length = self.mode.parse(literal)
        except ValueError:
            self.error(f"bad branch length {literal!r}", start)
        node.length_pos = start

    def parse(self) -> _Node:
        # iterative descent; the stack holds open '(' nodes
        root = _Node()
        stack = [root]
        if self.peek() != "(":
            self.error("expected '('")
        self.pos += 1
        current = _Node()
        root.children.append(current)
        expect_item = True
        while True:
            ch = self.peek()
            if expect_item:
                if ch == "(":
                    self.pos += 1
                    stack.append(current)
                    child = _Node()
                    current.children.append(child)
                    current = child
                    continue
                current.name = self.name()
                self.length(current)
                expect_item = False
                continue
            if ch == ",":
                self.pos += 1
                parent = stack[-1]
                current = _Node()
                parent.children.append(current)
                expect_item = True
            elif ch == ")":
                self.pos += 1
                current = stack.pop()
                current.name = self.name()
                if stack:
                    self.length(current)
                elif self.peek() == ":":
                    self.error("the root branch must not carry a length")
                if not stack:
                    break
            elif ch == "":
                self.error("unexpected end of input")
            else:
                self.error(f"unexpected character {ch!r}")
        if self.peek() != ";":
            self.error("expected ';'")
        self.pos += 1
        if self.peek() != "":
            self.error("trailing text after ';'")
        return root


def parse_newick(text: str, mode: ScalarMode = EXACT) -> WeightedTree:
    """Parse a Newick string into an unrooted :class:`WeightedTree`."""
    root = _Reader(text, mode).parse()

    edges = []
    labels = {}
    next_id = 0
    # pre-order walk; the root gets id 0
    stack = [(root, None)]
    while stack:
        node, parent_id = stack.pop()
        vid = next_id
        next_id += 1
        if node.children:
            if parent_id is not None and len(node.children) == 1:
                raise NewickError(f"internal node with a single child (degree 2) near position {node.length_pos}")
        else:
            if not node.name:
                raise NewickError("unnamed leaf", node.length_pos)
            if node.name in labels.values():
                raise NewickError(f"duplicate leaf label {node.name!r}")
            labels[vid] = node.name
        if parent_id is not None:
            if node.length is None:
                raise NewickError(f"missing branch length for {'leaf ' + repr(node.name) if not node.children else 'an internal branch'}")
            if not node.length > 0:
                raise NewickError(f"non-positive branch length {node.length}", node.length_pos)
            edges.append((parent_id, vid, node.length))
        for child in reversed(node.children):
            stack.append((child, vid))

    root_id = 0
    n_root_children = len(root.children)
    if n_root_children == 1:
        raise NewickError("root has a single child")
    if n_root_children == 2:
        a_edge, b_edge = [e for e in edges if e[0] == root_id]
        edges = [e for e in edges if e[0] != root_id]
        edges.append((a_edge[1], b_edge[1], a_edge[2] + b_edge[2]))
    if len(labels) < 3:
        raise NewickError(f"tree has {len(labels)} leaves; at least 3 are required")
    try:
        return WeightedTree(edges, labels, mode)
    except TreeError as exc:
        raise NewickError(str(exc)) from None


def _quote(label: str) -> str:
    if label and all(ch.isalnum() or ch in _SAFE_EXTRA for ch in label):
        return label
    return "'" + label.replace("'", "''") + "'"


def write_newick(tree: WeightedTree) -> str:
    """Canonical Newick text.

    Rooted at the internal vertex adjacent to the smallest leaf label; children
    are ordered by the smallest leaf label they contain.
    """
    fmt = tree.mode.format
    first = tree.leaf(tree.labels[0])
    root = tree.neighbors(first)[0]
    if tree.is_leaf(root):
        raise ValueError("Newick output needs at least 3 leaves")

    def min_label(parent, v):
        return min(tree.side(parent, v))

    def render(parent, v):
        w = fmt(tree.weight(parent, v))
        if tree.is_leaf(v):
            return f"{_quote(tree.label_of(v))}:{w}"
        kids = sorted((c for c in tree.neighbors(v) if c != parent), key=lambda c: min_label(v, c))
        return "(" + ",".join(render(v, c) for c in kids) + f"):{w}"

    kids = sorted(tree.neighbors(root), key=lambda c: min_label(root, c))
    return "(" + ",".join(render(root, c) for c in kids) + ");"
