"""JSON scenario files: schema, parsing and canonicalization.

A scenario names nodes by string ids.  Generators are numbered in file order
ahead of loads, which is the index convention used by every analysis module.
"""
import hashlib
import json
from dataclasses import dataclass

import jsonschema
import numpy as np

from .coop import CooperativeConfig, laplacian, physical_laplacian
from .droop import PrimaryDroopConfig
from .errors import InvalidInputError
from .network import NetworkSpec, ReducedNetwork, kron_reduce
from .sim import RK4, Exact, Phase, Scenario

_number = {"type": "number"}
_per_node = {
    "oneOf": [
        _number,
        {"type": "array", "items": _number, "minItems": 1},
        {"type": "object", "additionalProperties": _number},
    ]
}
_matrix = {"type": "array", "items": {"type": "array", "items": _number}, "minItems": 1}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["network"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "network": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "nodes": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "required": ["id", "type"],
                        "additionalProperties": False,
                        "properties": {
                            "id": {"type": "string", "minLength": 1},
                            "type": {"enum": ["generator", "load"]},
                            "shunt_conductance": {"type": "number", "minimum": 0},
                            "shunt_resistance": {"type": "number", "exclusiveMinimum": 0},
                            "injection": _number,
                        },
                        "not": {"required": ["shunt_conductance", "shunt_resistance"]},
                    },
                },
                "lines": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["from", "to"],
                        "additionalProperties": False,
                        "properties": {
                            "from": {"type": "string"},
                            "to": {"type": "string"},
                            "resistance": {"type": "number", "exclusiveMinimum": 0},
                            "conductance": {"type": "number", "minimum": 0},
                        },
                        "oneOf": [{"required": ["resistance"]}, {"required": ["conductance"]}],
                    },
                },
                "ids": {"type": "array", "items": {"type": "string"}},
                "Y": _matrix,
            },
            "oneOf": [{"required": ["nodes"]}, {"required": ["Y"]}],
        },
        "primary": {
            "type": "object",
            "required": ["R", "tau", "Ud"],
            "additionalProperties": False,
            "properties": {"R": _per_node, "tau": _per_node, "Ud": _per_node},
        },
        "cooperative": {
            "type": "object",
            "required": ["beta", "Imax"],
            "additionalProperties": False,
            "properties": {
                "edges": {"type": "array", "items": {"type": "array", "items": {"type": "string"},
                                                     "minItems": 2, "maxItems": 2}},
                "laplacian": _matrix,
                "alpha": _per_node,
                "beta": _per_node,
                "Imax": _per_node,
            },
            "not": {"required": ["edges", "laplacian"]},
        },
        "simulation": {
            "type": "object",
            "required": ["phases"],
            "additionalProperties": False,
            "properties": {
                "phases": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "required": ["mode", "duration"],
                        "additionalProperties": False,
                        "properties": {
                            "mode": {"enum": ["primary", "cooperative"]},
                            "duration": {"type": "number", "exclusiveMinimum": 0},
                        },
                    },
                },
                "record_dt": {"type": "number", "exclusiveMinimum": 0},
                "method": {"enum": ["exact", "rk4"]},
                "rk4_dt": {"type": "number", "exclusiveMinimum": 0},
                "Im0": _per_node,
            },
        },
        "analysis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "checks": {"type": "array", "items": {"enum": ["spectral", "c1", "c2", "corollaries"]}},
            },
        },
    },
}

ALL_CHECKS = ("spectral", "c1", "c2", "corollaries")
_MODES = {"primary": "PrimaryOnly", "cooperative": "Cooperative"}


@dataclass(frozen=True)
class LoadedScenario:
    """Canonicalized scenario: reduced network plus optional controllers."""

    doc: dict
    sha256: str
    ids: tuple
    net: ReducedNetwork
    injection: np.ndarray
    primary: PrimaryDroopConfig = None
    cooperative: CooperativeConfig = None
    simulation: Scenario = None
    checks: tuple = ALL_CHECKS


def _error_path(err):
    path = "/".join(str(p) for p in err.absolute_path)
    return f"at '{path or '<root>'}': {err.message}"


def validate(doc):
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        raise InvalidInputError("scenario failed validation:\n  " + "\n  ".join(_error_path(e) for e in errors))


def _as_matrix(value, name):
    try:
        M = np.asarray(value, dtype=float)
    except ValueError as exc:
        raise InvalidInputError(f"{name} must be a rectangular numeric matrix") from exc
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInputError(f"{name} must be a square matrix")
    return M


def _per_node_values(value, ids, name):
    n = len(ids)
    if isinstance(value, (int, float)):
        return np.full(n, float(value))
    if isinstance(value, list):
        if len(value) != n:
            raise InvalidInputError(f"{name}: expected {n} values (one per generator), got {len(value)}")
        return np.asarray(value, dtype=float)
    missing = [i for i in ids if i not in value]
    extra = [k for k in value if k not in ids]
    if missing or extra:
        raise InvalidInputError(f"{name}: missing ids {missing}, unknown ids {extra}")
    return np.array([float(value[i]) for i in ids])


def _network(doc):
    net_doc = doc["network"]
    if "Y" in net_doc:
        Y = _as_matrix(net_doc["Y"], "network.Y")
        ids = tuple(net_doc.get("ids") or [f"g{k + 1}" for k in range(Y.shape[0])])
        if len(ids) != Y.shape[0] or len(set(ids)) != len(ids):
            raise InvalidInputError("network.ids must list one unique id per row of Y")
        return ids, ReducedNetwork.from_matrix(Y), np.zeros(len(ids))
    nodes = net_doc["nodes"]
    seen = set()
    for node in nodes:
        if node["id"] in seen:
            raise InvalidInputError(f"duplicate node id {node['id']!r}")
        seen.add(node["id"])
    gens = [nd for nd in nodes if nd["type"] == "generator"]
    loads = [nd for nd in nodes if nd["type"] == "load"]
    if not gens:
        raise InvalidInputError("network needs at least one generator node")
    order = gens + loads
    index = {nd["id"]: k for k, nd in enumerate(order)}
    shunts = []
    for nd in order:
        if "shunt_resistance" in nd:
            shunts.append(1.0 / nd["shunt_resistance"])
        else:
            shunts.append(float(nd.get("shunt_conductance", 0.0)))
    for nd in gens:
        if "injection" in nd:
            raise InvalidInputError(f"node {nd['id']!r}: injections are only allowed on load nodes")
    branches = []
    for k, line in enumerate(net_doc.get("lines", [])):
        for end in ("from", "to"):
            if line[end] not in index:
                raise InvalidInputError(f"network.lines[{k}].{end}: unknown node {line[end]!r}")
        g = 1.0 / line["resistance"] if "resistance" in line else float(line["conductance"])
        branches.append((index[line["from"]], index[line["to"]], g))
    spec = NetworkSpec(len(gens), len(loads), tuple(branches), np.array(shunts),
                       np.array([float(nd.get("injection", 0.0)) for nd in loads]))
    reduced, injection = kron_reduce(spec)
    return tuple(nd["id"] for nd in gens), reduced, injection


def load_scenario(text, source="<scenario>") -> LoadedScenario:
    """Parse, validate and canonicalize a scenario document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{source}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    validate(doc)
    sha = hashlib.sha256(text.encode() if isinstance(text, str) else text).hexdigest()
    ids, net, injection = _network(doc)
    primary = cooperative = simulation = None
    if "primary" in doc:
        p = doc["primary"]
        primary = PrimaryDroopConfig(*(_per_node_values(p[k], ids, f"primary.{k}") for k in ("R", "tau", "Ud")))
    if "cooperative" in doc:
        c = doc["cooperative"]
        if "laplacian" in c:
            L = _as_matrix(c["laplacian"], "cooperative.laplacian")
            if L.shape != (len(ids), len(ids)):
                raise InvalidInputError(f"cooperative.laplacian must be {len(ids)}x{len(ids)}")
        elif "edges" in c:
            pos = {i: k for k, i in enumerate(ids)}
            for e in c["edges"]:
                for end in e:
                    if end not in pos:
                        raise InvalidInputError(f"cooperative.edges: unknown generator {end!r}")
            L = laplacian(len(ids), [(pos[a], pos[b]) for a, b in c["edges"]])
        else:
            L = physical_laplacian(net)
        cooperative = CooperativeConfig(L, _per_node_values(c.get("alpha", 0.0), ids, "cooperative.alpha"),
                                        _per_node_values(c["beta"], ids, "cooperative.beta"),
                                        _per_node_values(c["Imax"], ids, "cooperative.Imax"))
    if "simulation" in doc:
        if primary is None:
            raise InvalidInputError("simulation section requires a primary section")
        s = doc["simulation"]
        method = RK4(s.get("rk4_dt")) if s.get("method", "exact") == "rk4" else Exact()
        Im0 = _per_node_values(s["Im0"], ids, "simulation.Im0") if "Im0" in s else None
        phases = tuple(Phase(_MODES[ph["mode"]], float(ph["duration"])) for ph in s["phases"])
        simulation = Scenario(net, primary, phases, cooperative, Im0, float(s.get("record_dt", 1e-3)), method)
    checks = tuple(doc.get("analysis", {}).get("checks", ALL_CHECKS))
    return LoadedScenario(doc, sha, ids, net, injection, primary, cooperative, simulation, checks)


def read_scenario(path) -> LoadedScenario:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InvalidInputError(f"cannot read scenario {path}: {exc.strerror}") from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InvalidInputError(f"{path}: not UTF-8 text") from exc
    return load_scenario(text, str(path))


def triangle_scenario():
    """Three-generator triangle grid with the droop and cooperative settings
    used as the reference case throughout the test-suite."""
    return {
        "name": "three-node triangle",
        "network": {
            "nodes": [
                {"id": "n1", "type": "generator", "shunt_resistance": 2.0},
                {"id": "n2", "type": "generator", "shunt_resistance": 5.0},
                {"id": "n3", "type": "generator", "shunt_resistance": 4.0},
            ],
            "lines": [
                {"from": "n1", "to": "n2", "resistance": 1.0},
                {"from": "n1", "to": "n3", "resistance": 0.5},
                {"from": "n2", "to": "n3", "resistance": 0.4},
            ],
        },
        "primary": {"R": 0.1, "tau": 0.01, "Ud": 48.0},
        "cooperative": {
            "edges": [["n1", "n2"], ["n2", "n3"], ["n1", "n3"]],
            "alpha": 0.0,
            "beta": 100.0,
            "Imax": 30.0,
        },
        "simulation": {
            "phases": [{"mode": "primary", "duration": 0.5}, {"mode": "cooperative", "duration": 1.5}],
            "record_dt": 0.001,
            "method": "exact",
        },
        "analysis": {"checks": ["spectral", "c1", "c2", "corollaries"]},
    }
