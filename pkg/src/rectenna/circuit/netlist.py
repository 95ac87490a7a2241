"""Immutable netlist description and validation."""
from collections import deque
from dataclasses import dataclass
import math
import re

from ..diode import DiodeModelCard, load_model_card
from ..errors import (DanglingNode, EmptyCircuit, FloatingSubcircuit, NetlistError,
                      NonPositiveValue)

GROUND = "0"
GROUND_ALIASES = {"0", "gnd", "GND", "ground"}

KINDS = ("resistor", "inductor", "capacitor", "diode", "voltage-source", "current-source")
_PASSIVE = {"resistor", "inductor", "capacitor"}
_SOURCES = {"voltage-source", "current-source"}


@dataclass(frozen=True)
class Source:
    """``dc + amplitude * sin(2*pi*frequency*t + phase)``."""
    dc: float = 0.0
    amplitude: float = 0.0
    frequency: float = 0.0
    phase: float = 0.0

    def value(self, t):
        return self.dc + self.amplitude * math.sin(2 * math.pi * self.frequency * t + self.phase)


@dataclass(frozen=True)
class Element:
    name: str
    kind: str
    nodes: tuple
    value: float = None
    model: DiodeModelCard = None
    source: Source = None


@dataclass(frozen=True)
class Netlist:
    nodes: tuple      # non-ground node names, sorted
    elements: tuple

    def element(self, name):
        for e in self.elements:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def is_linear(self):
        return not any(e.kind == "diode" for e in self.elements)

    def replace(self, name, **changes):
        """Copy of the netlist with one element's fields replaced."""
        elems = []
        for e in self.elements:
            if e.name == name:
                d = dict(e.__dict__)
                d.update(changes)
                e = Element(**d)
            elems.append(e)
        return build_netlist({"nodes": self.nodes, "elements": elems})


def _norm_node(n):
    n = str(n)
    return GROUND if n in GROUND_ALIASES else n


def _as_source(spec):
    if spec is None:
        return Source()
    if isinstance(spec, Source):
        return spec
    if isinstance(spec, (int, float)):
        return Source(dc=float(spec))
    return Source(**spec)


def _as_element(item, models):
    if isinstance(item, Element):
        d = dict(item.__dict__)
    elif isinstance(item, dict):
        d = dict(item)
    else:
        raise NetlistError(f"cannot interpret element {item!r}")
    kind = d.get("kind")
    if kind not in KINDS:
        raise NetlistError(f"element {d.get('name')!r}: unknown kind {kind!r}")
    name = d.get("name")
    if not name:
        raise NetlistError("every element needs a name")
    nodes = tuple(_norm_node(n) for n in d.get("nodes", ()))
    if len(nodes) != 2:
        raise NetlistError(f"element {name!r} needs exactly two terminals")
    value = d.get("value")
    model = d.get("model")
    source = None
    if kind in _PASSIVE:
        if value is None or not math.isfinite(value) or value <= 0:
            raise NonPositiveValue(f"{kind} {name!r} has non-positive value {value!r}")
        value = float(value)
    elif kind == "diode":
        if model is None or model == "default":
            model = DiodeModelCard()
        elif isinstance(model, str):
            if model not in models:
                raise NetlistError(f"diode {name!r}: unknown model {model!r}")
            model = models[model]
    else:
        source = _as_source(d.get("source", value))
        if source.amplitude < 0:
            raise NonPositiveValue(f"source {name!r} has negative amplitude")
        value = None
    return Element(name=name, kind=kind, nodes=nodes, value=value, model=model, source=source)


def build_netlist(description, models=None):
    """Validate a structured element list and return an immutable :class:`Netlist`.

    *description* is either a list of elements or a mapping with ``elements``
    and, optionally, a declared ``nodes`` list. Elements may be :class:`Element`
    instances or dicts with keys ``name``, ``kind``, ``nodes``, ``value``,
    ``model`` (diodes) and ``source`` (independent sources).
    """
    models = models or {}
    declared = None
    if isinstance(description, dict):
        items = description.get("elements", [])
        if description.get("nodes") is not None:
            declared = {_norm_node(n) for n in description["nodes"]}
    else:
        items = description
    items = list(items or [])
    if not items:
        raise EmptyCircuit("circuit has no elements")

    elements = [_as_element(it, models) for it in items]
    names = [e.name for e in elements]
    if len(set(names)) != len(names):
        raise NetlistError("duplicate element names")

    used = {n for e in elements for n in e.nodes}
    if declared is not None:
        declared.add(GROUND)
        unknown = sorted(used - declared)
        if unknown:
            raise DanglingNode(f"terminal references undeclared node(s): {', '.join(unknown)}")
        all_nodes = declared
    else:
        all_nodes = used | {GROUND}

    adj = {n: set() for n in all_nodes}
    for e in elements:
        a, b = e.nodes
        adj[a].add(b)
        adj[b].add(a)
    seen = {GROUND}
    todo = deque([GROUND])
    while todo:
        for m in adj[todo.popleft()]:
            if m not in seen:
                seen.add(m)
                todo.append(m)
    floating = sorted(all_nodes - seen)
    if floating:
        raise FloatingSubcircuit(f"node(s) not connected to ground: {', '.join(floating)}")

    return Netlist(nodes=tuple(sorted(all_nodes - {GROUND})), elements=tuple(elements))


_SUFFIX = {"f": 1e-15, "p": 1e-12, "n": 1e-9, "u": 1e-6, "m": 1e-3, "k": 1e3,
           "meg": 1e6, "g": 1e9, "t": 1e12}
_NUM = re.compile(r"^([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)(meg|[fpnumkgt])?[a-zA-Z]*$")


def parse_value(token):
    """Parse a SPICE-style number such as ``4.7k`` or ``100p``."""
    m = _NUM.match(token.strip().lower())
    if not m:
        raise NetlistError(f"bad numeric value {token!r}")
    return float(m.group(1)) * _SUFFIX.get(m.group(2), 1.0)


_KIND_BY_LETTER = {"R": "resistor", "L": "inductor", "C": "capacitor", "D": "diode",
                   "V": "voltage-source", "I": "current-source"}


def parse_netlist_text(text, models=None):
    """Read a small SPICE-flavoured netlist.

    One element per line: ``NAME N+ N- VALUE``; the first letter of NAME picks
    the kind. Sources take ``DC x`` and/or ``SIN(offset amplitude freq [phase_deg])``.
    Diodes take an optional model name (``default`` for the bundled card) or a
    ``.model`` line ``.model NAME file=PATH``. ``*`` and ``#`` start comments.
    """
    models = dict(models or {})
    elements = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("*"):
            continue
        if line.lower().startswith(".model"):
            parts = line.split()
            if len(parts) != 3 or not parts[2].lower().startswith("file="):
                raise NetlistError(f"line {lineno}: expected '.model NAME file=PATH'")
            models[parts[1]] = load_model_card(parts[2][5:])
            continue
        if line.lower() == ".end":
            break
        parts = line.replace("(", " ( ").replace(")", " ) ").split()
        name = parts[0]
        kind = _KIND_BY_LETTER.get(name[0].upper())
        if kind is None or len(parts) < 3:
            raise NetlistError(f"line {lineno}: cannot parse {raw!r}")
        d = {"name": name, "kind": kind, "nodes": (parts[1], parts[2])}
        rest = parts[3:]
        if kind == "diode":
            d["model"] = rest[0] if rest else "default"
        elif kind in _SOURCES:
            d["source"] = _parse_source(rest, lineno)
        else:
            if len(rest) != 1:
                raise NetlistError(f"line {lineno}: expected one value")
            d["value"] = parse_value(rest[0])
        elements.append(d)
    return build_netlist(elements, models)


def _parse_source(tokens, lineno):
    src = {"dc": 0.0}
    i = 0
    while i < len(tokens):
        tok = tokens[i].upper()
        if tok == "DC":
            src["dc"] = parse_value(tokens[i + 1])
            i += 2
        elif tok == "SIN":
            j = tokens.index(")", i)
            args = [parse_value(t) for t in tokens[i + 2:j]]
            if len(args) < 3:
                raise NetlistError(f"line {lineno}: SIN needs offset, amplitude, frequency")
            src["dc"] += args[0]
            src["amplitude"] = args[1]
            src["frequency"] = args[2]
            src["phase"] = math.radians(args[3]) if len(args) > 3 else 0.0
            i = j + 1
        else:
            src["dc"] = parse_value(tokens[i])
            i += 1
    return src
