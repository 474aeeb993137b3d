"""Spiking-network and hardware graph models, file I/O and statistics.

Graphs are stored as versioned YAML documents with explicit ``neurons``,
``inputs`` and ``synapses`` sections (``cores``/``links`` for hardware),
chosen to keep fixtures diff-friendly.  Loaders validate every structural
invariant and raise :class:`~snnflow.errors.GraphValidationError` naming
the violated rule.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field

import yaml

from .errors import GraphFormatError, GraphValidationError

SNN_FORMAT = "snn-graph/1"
HW_FORMAT = "hardware-graph/1"


@dataclass(frozen=True)
class Synapse:
    """A weighted connection carrying an average number of spikes per frame."""

    src: str
    dst: str
    weight: float = 1.0
    spikes: float = 0.0


@dataclass(frozen=True)
class InputSource:
    """An external stimulus node with a fixed per-frame spike count."""

    id: str
    spikes: float = 0.0


@dataclass(frozen=True)
class Neuron:
    id: str
    # optional per-neuron overrides of the integrate-and-fire parameters
    params: tuple[tuple[str, float], ...] = ()

    @staticmethod
    def make(id: str, params: dict[str, float] | None = None) -> "Neuron":
        return Neuron(id, tuple(sorted((params or {}).items())))

    def params_dict(self) -> dict[str, float]:
        return dict(self.params)


@dataclass(frozen=True)
class SnnGraph:
    """Directed neuron/synapse graph with per-synapse spike counts.

    ``inputs`` model external stimuli as source nodes; they may appear as
    synapse sources but never as destinations.
    """

    neurons: tuple[Neuron, ...]
    inputs: tuple[InputSource, ...] = ()
    synapses: tuple[Synapse, ...] = ()

    def neuron_ids(self) -> list[str]:
        return [n.id for n in self.neurons]

    def input_ids(self) -> list[str]:
        return [i.id for i in self.inputs]

    def node_ids(self) -> list[str]:
        return self.neuron_ids() + self.input_ids()

    def validate(self) -> None:
        neuron_ids = set()
        for n in self.neurons:
            if n.id in neuron_ids:
                raise GraphValidationError(f"duplicate neuron id {n.id!r}")
            neuron_ids.add(n.id)
        input_ids = set()
        for i in self.inputs:
            if i.id in input_ids or i.id in neuron_ids:
                raise GraphValidationError(f"duplicate node id {i.id!r}")
            input_ids.add(i.id)
            if i.spikes < 0:
                raise GraphValidationError(
                    f"input {i.id!r} has negative spikes per frame")
        seen_pairs = set()
        for s in self.synapses:
            if s.src not in neuron_ids and s.src not in input_ids:
                raise GraphValidationError(
                    f"synapse source {s.src!r} references an undeclared node")
            if s.dst not in neuron_ids:
                raise GraphValidationError(
                    f"synapse destination {s.dst!r} references an undeclared neuron")
            if (s.src, s.dst) in seen_pairs:
                raise GraphValidationError(
                    f"duplicate synapse ({s.src!r}, {s.dst!r})")
            seen_pairs.add((s.src, s.dst))
            if s.spikes < 0:
                raise GraphValidationError(
                    f"synapse ({s.src!r}, {s.dst!r}) has negative spikes per frame")


@dataclass(frozen=True)
class Core:
    """A neuromorphic processing element.

    ``crossbar_dim`` bounds both the distinct pre-synaptic sources and the
    neurons a hosted cluster may use; connection and bandwidth caps are
    optional (``None`` means unconstrained).
    """

    id: str
    crossbar_dim: int
    exec_time: float = 1
    in_connections: int | None = None
    out_connections: int | None = None
    in_bandwidth: float | None = None
    out_bandwidth: float | None = None

    def validate(self) -> None:
        if self.crossbar_dim < 1:
            raise GraphValidationError(
                f"core {self.id!r}: crossbar_dim must be >= 1")
        if not self.exec_time > 0:
            raise GraphValidationError(
                f"core {self.id!r}: exec_time must be > 0")
        for name in ("in_connections", "out_connections",
                     "in_bandwidth", "out_bandwidth"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise GraphValidationError(
                    f"core {self.id!r}: {name} must be >= 0")


@dataclass(frozen=True)
class Link:
    src: str
    dst: str
    latency: float = 0


@dataclass(frozen=True)
class HardwareGraph:
    """Many-core platform model: cores joined by directed latency links."""

    cores: tuple[Core, ...]
    links: tuple[Link, ...] = ()

    def core_ids(self) -> list[str]:
        return [c.id for c in self.cores]

    def core(self, core_id: str) -> Core:
        for c in self.cores:
            if c.id == core_id:
                return c
        raise KeyError(core_id)

    def validate(self) -> None:
        ids = set()
        for c in self.cores:
            if c.id in ids:
                raise GraphValidationError(f"duplicate core id {c.id!r}")
            ids.add(c.id)
            c.validate()
        for l in self.links:
            if l.src not in ids or l.dst not in ids:
                raise GraphValidationError(
                    f"link ({l.src!r}, {l.dst!r}) references an undeclared core")
            if l.latency < 0:
                raise GraphValidationError(
                    f"link ({l.src!r}, {l.dst!r}) has negative latency")

    def routed_latencies(self) -> dict[tuple[str, str], float]:
        """All-pairs routed latency: shortest path over the link graph.

        Pairs with no route are absent from the result; a mapping that
        needs such a pair is infeasible.
        """
        ids = self.core_ids()
        dist: dict[tuple[str, str], float] = {(i, i): 0 for i in ids}
        for l in self.links:
            key = (l.src, l.dst)
            if key not in dist or l.latency < dist[key]:
                dist[key] = l.latency
        for k in ids:
            for i in ids:
                if (i, k) not in dist:
                    continue
                for j in ids:
                    if (k, j) not in dist:
                        continue
                    alt = dist[(i, k)] + dist[(k, j)]
                    if (i, j) not in dist or alt < dist[(i, j)]:
                        dist[(i, j)] = alt
        return dist


@dataclass(frozen=True)
class GraphStats:
    """Degree and diameter summary of a spiking-network graph."""

    max_in_degree: int
    avg_in_degree: float
    max_out_degree: int
    avg_out_degree: float
    diameter: int


def _load_yaml(path: str, expected_format: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except FileNotFoundError:
        raise
    except yaml.YAMLError as exc:
        raise GraphFormatError(f"{path}: not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise GraphFormatError(f"{path}: expected a mapping at top level")
    fmt = doc.get("format")
    if fmt != expected_format:
        raise GraphFormatError(
            f"{path}: format is {fmt!r}, expected {expected_format!r}")
    return doc


_REQUIRED = object()


def _field(entry: dict, key: str, ctx: str, default=_REQUIRED):
    if key in entry:
        return entry[key]
    if default is _REQUIRED:
        raise GraphFormatError(f"{ctx}: missing required field {key!r}")
    return default


def snn_graph_from_dict(doc: dict, ctx: str = "<snn-graph>") -> SnnGraph:
    neurons = []
    for e in doc.get("neurons") or []:
        if isinstance(e, str):
            neurons.append(Neuron.make(e))
        else:
            neurons.append(Neuron.make(str(_field(e, "id", ctx)),
                                       e.get("params")))
    inputs = []
    for e in doc.get("inputs") or []:
        inputs.append(InputSource(str(_field(e, "id", ctx)),
                                  float(e.get("spikes", 0.0))))
    synapses = []
    for e in doc.get("synapses") or []:
        synapses.append(Synapse(
            src=str(_field(e, "src", ctx)),
            dst=str(_field(e, "dst", ctx)),
            weight=float(e.get("weight", 1.0)),
            spikes=float(e.get("spikes", 0.0))))
    g = SnnGraph(tuple(neurons), tuple(inputs), tuple(synapses))
    g.validate()
    return g


def load_snn_graph(path: str) -> SnnGraph:
    """Load and validate a spiking-network graph file."""
    return snn_graph_from_dict(_load_yaml(path, SNN_FORMAT), ctx=path)


def snn_graph_to_dict(g: SnnGraph) -> dict:
    doc: dict = {"format": SNN_FORMAT}
    doc["neurons"] = [
        {"id": n.id} | ({"params": n.params_dict()} if n.params else {})
        for n in g.neurons]
    doc["inputs"] = [{"id": i.id, "spikes": i.spikes} for i in g.inputs]
    doc["synapses"] = [
        {"src": s.src, "dst": s.dst, "weight": s.weight, "spikes": s.spikes}
        for s in g.synapses]
    return doc


def save_snn_graph(g: SnnGraph, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(snn_graph_to_dict(g), fh, sort_keys=False)


def hardware_graph_from_dict(doc: dict, ctx: str = "<hardware-graph>") -> HardwareGraph:
    cores = []
    for e in doc.get("cores") or []:
        cores.append(Core(
            id=str(_field(e, "id", ctx)),
            crossbar_dim=int(_field(e, "crossbar_dim", ctx)),
            exec_time=e.get("exec_time", 1),
            in_connections=e.get("in_connections"),
            out_connections=e.get("out_connections"),
            in_bandwidth=e.get("in_bandwidth"),
            out_bandwidth=e.get("out_bandwidth")))
    links = []
    for e in doc.get("links") or []:
        links.append(Link(src=str(_field(e, "src", ctx)),
                          dst=str(_field(e, "dst", ctx)),
                          latency=e.get("latency", 0)))
    hw = HardwareGraph(tuple(cores), tuple(links))
    hw.validate()
    return hw


def load_hardware_graph(path: str) -> HardwareGraph:
    """Load and validate a hardware platform file."""
    return hardware_graph_from_dict(_load_yaml(path, HW_FORMAT), ctx=path)


def hardware_graph_to_dict(hw: HardwareGraph) -> dict:
    doc: dict = {"format": HW_FORMAT}
    doc["cores"] = []
    for c in hw.cores:
        entry: dict = {"id": c.id, "crossbar_dim": c.crossbar_dim,
                       "exec_time": c.exec_time}
        for name in ("in_connections", "out_connections",
                     "in_bandwidth", "out_bandwidth"):
            v = getattr(c, name)
            if v is not None:
                entry[name] = v
        doc["cores"].append(entry)
    doc["links"] = [{"src": l.src, "dst": l.dst, "latency": l.latency}
                    for l in hw.links]
    return doc


def save_hardware_graph(hw: HardwareGraph, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(hardware_graph_to_dict(hw), fh, sort_keys=False)


def compute_graph_stats(g: SnnGraph) -> GraphStats:
    """Degrees over the synapse relation and the directed diameter.

    Degrees are averaged over all nodes (neurons and inputs).  The
    diameter is the longest finite shortest path; unreachable pairs are
    ignored, so a disconnected graph reports the diameter of its largest
    reachable stretch.  An empty graph yields all zeros.
    """
    nodes = g.node_ids()
    if not nodes:
        return GraphStats(0, 0.0, 0, 0.0, 0)
    in_deg: dict[str, int] = defaultdict(int)
    out_deg: dict[str, int] = defaultdict(int)
    adj: dict[str, list[str]] = defaultdict(list)
    for s in g.synapses:
        out_deg[s.src] += 1
        in_deg[s.dst] += 1
        adj[s.src].append(s.dst)
    n = len(nodes)
    max_in = max((in_deg[v] for v in nodes), default=0)
    max_out = max((out_deg[v] for v in nodes), default=0)
    total = len(g.synapses)
    diameter = 0
    for src in nodes:
        # BFS over unit-length directed edges
        dist = {src: 0}
        q = deque([src])
        while q:
            u = q.popleft()
            for v in adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    q.append(v)
        far = max(dist.values())
        if far > diameter:
            diameter = far
    return GraphStats(max_in, total / n, max_out, total / n, diameter)
