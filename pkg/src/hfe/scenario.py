"""Scenario files: JSON schema, loading, and the built-in corpus.

A scenario bundles a nerve, group-valued cocycles (by role), sampled
scalar fields, frame sections, and the list of verification pipelines to
run on them.  Everything is declarative: transition functions and
sections are generator descriptions resolved by :mod:`hfe.generators`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

import jsonschema

from .cech import Cocycle, Nerve, OverlapComponent, SamplePoint, SignCochain, TriplePoint
from .errors import ValidationError
from .generators import build_generator, parse_complex

_GENERATOR = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "params": {"type": "object"},
    },
    "required": ["name"],
    "additionalProperties": False,
}

_COCYCLE = {
    "type": "object",
    "properties": {
        "group": {"type": "string"},
        "transitions": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "pair": {"type": "array", "items": {"type": "string"},
                             "minItems": 2, "maxItems": 2},
                    "component": {"type": "integer", "minimum": 0},
                    "generator": _GENERATOR,
                },
                "required": ["pair", "component", "generator"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["group", "transitions"],
    "additionalProperties": False,
}

_CHART_GENERATORS = {"type": "object", "additionalProperties": _GENERATOR}

SCENARIO_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "hfe scenario",
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "n": {"type": "integer", "minimum": 0},
        "k": {"type": "integer", "minimum": 0},
        "nerve": {
            "type": "object",
            "properties": {
                "charts": {"type": "array", "items": {"type": "string"}},
                "overlaps": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "pair": {"type": "array", "items": {"type": "string"},
                                     "minItems": 2, "maxItems": 2},
                            "components": {
                                "type": "array",
                                "items": {
                                    "type": "object",
                                    "properties": {
                                        "points": {
                                            "type": "array",
                                            "items": {
                                                "type": "object",
                                                "properties": {
                                                    "id": {"type": "string"},
                                                    "params": {
                                                        "type": "array",
                                                        "items": {"type": "number"},
                                                    },
                                                },
                                                "required": ["id"],
                                                "additionalProperties": False,
                                            },
                                        },
                                        "edges": {
                                            "type": "array",
                                            "items": {
                                                "type": "array",
                                                "items": {"type": "integer"},
                                                "minItems": 2,
                                                "maxItems": 2,
                                            },
                                        },
                                        "contractible": {"type": "boolean"},
                                    },
                                    "required": ["points"],
                                    "additionalProperties": False,
                                },
                            },
                        },
                        "required": ["pair", "components"],
                        "additionalProperties": False,
                    },
                },
                "triples": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "key": {"type": "array", "items": {"type": "string"},
                                    "minItems": 3, "maxItems": 3},
                            "points": {
                                "type": "array",
                                "items": {
                                    "type": "object",
                                    "properties": {
                                        "id": {"type": "string"},
                                        "memberships": {
                                            "type": "object",
                                            "additionalProperties": {
                                                "type": "array",
                                                "items": {"type": "integer"},
                                                "minItems": 2,
                                                "maxItems": 2,
                                            },
                                        },
                                    },
                                    "required": ["id", "memberships"],
                                    "additionalProperties": False,
                                },
                            },
                        },
                        "required": ["key", "points"],
                        "additionalProperties": False,
                    },
                },
            },
            "required": ["charts"],
            "additionalProperties": False,
        },
        "pair_cocycle": _COCYCLE,
        "gl_cocycle": _COCYCLE,
        "mp_cocycle": _COCYCLE,
        "d_adapted": {"type": "boolean"},
        "delta_samples": _CHART_GENERATORS,
        "sections": {
            "type": "object",
            "properties": {
                "first": _CHART_GENERATORS,
                "second": _CHART_GENERATORS,
            },
            "additionalProperties": False,
        },
        "pair_sections": _CHART_GENERATORS,
        "self_compat": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "name": {"type": "string"},
                    "pair_cocycle": _COCYCLE,
                    "delta_samples": _CHART_GENERATORS,
                },
                "required": ["name", "pair_cocycle", "delta_samples"],
                "additionalProperties": False,
            },
        },
        "frame_pairs": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "name": {"type": "string"},
                    "first": _GENERATOR,
                    "second": _GENERATOR,
                    "k": {"type": "integer", "minimum": 0},
                    "expected_delta": {},
                },
                "required": ["name", "first", "second", "k", "expected_delta"],
                "additionalProperties": False,
            },
        },
        "sign_cochains": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "properties": {
                    "degree": {"type": "integer", "enum": [1, 2]},
                    "values": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "properties": {
                                "triple": {"type": "array",
                                           "items": {"type": "string"},
                                           "minItems": 3, "maxItems": 3},
                                "point": {"type": "string"},
                                "sign": {"type": "integer", "enum": [1, -1]},
                            },
                            "required": ["triple", "point", "sign"],
                            "additionalProperties": False,
                        },
                    },
                },
                "required": ["degree", "values"],
                "additionalProperties": False,
            },
        },
        "pipelines": {"type": "array", "items": {"type": "string"}},
        "expectations": {"type": "object"},
        "tolerances": {"type": "object",
                       "additionalProperties": {"type": "number"}},
    },
    "required": ["name", "n", "k", "nerve", "pipelines"],
    "additionalProperties": False,
}


@dataclass
class Scenario:
    """A loaded scenario with all generator descriptions resolved."""

    name: str
    description: str
    n: int
    k: int
    nerve: Nerve
    pipelines: list[str]
    pair_cocycle: Optional[Cocycle] = None
    gl_cocycle: Optional[Cocycle] = None
    mp_cocycle: Optional[Cocycle] = None
    d_adapted: bool = False
    delta_samples: Optional[dict[str, Callable]] = None
    sections_first: Optional[dict[str, Callable]] = None
    sections_second: Optional[dict[str, Callable]] = None
    pair_sections: Optional[dict[str, Callable]] = None
    self_compat_cases: list[dict] = field(default_factory=list)
    frame_pairs: list[dict] = field(default_factory=list)
    sign_cochains: dict[str, SignCochain] = field(default_factory=dict)
    expectations: dict = field(default_factory=dict)
    tolerance_overrides: dict[str, float] = field(default_factory=dict)
    noncontractible_components: list = field(default_factory=list)


def _build_nerve(doc: dict) -> Nerve:
    overlaps = {}
    for ov in doc.get("overlaps", []):
        pair = tuple(ov["pair"])
        comps = []
        for comp in ov["components"]:
            pts = tuple(
                SamplePoint(p["id"], tuple(p.get("params", []))) for p in comp["points"]
            )
            edges = tuple(tuple(e) for e in comp.get("edges", []))
            comps.append(
                OverlapComponent(pts, edges, comp.get("contractible", True))
            )
        overlaps[pair] = tuple(comps)
    triples = {}
    for tr in doc.get("triples", []):
        key = tuple(tr["key"])
        pts = []
        for p in tr["points"]:
            memberships = {
                tuple(pair.split(",")): tuple(v)
                for pair, v in p["memberships"].items()
            }
            pts.append(TriplePoint(p["id"], memberships))
        triples[key] = tuple(pts)
    return Nerve(tuple(doc["charts"]), overlaps, triples)


def _build_cocycle(doc: dict, nerve: Nerve, n: int, k: int) -> Cocycle:
    table: dict[tuple[str, str], dict[int, Callable]] = {}
    for tr in doc["transitions"]:
        pair = tuple(tr["pair"])
        if pair not in nerve.overlaps:
            raise ValidationError(f"cocycle references unknown overlap {pair}")
        table.setdefault(pair, {})[tr["component"]] = build_generator(
            tr["generator"], n, k
        )
    transitions = {}
    for pair, comps in nerve.overlaps.items():
        fns = table.get(pair, {})
        missing = [ci for ci in range(len(comps)) if ci not in fns]
        if missing:
            raise ValidationError(
                f"cocycle missing transitions for {pair} components {missing}"
            )
        transitions[pair] = tuple(fns[ci] for ci in range(len(comps)))
    return Cocycle(doc["group"], n, k, transitions)


def _build_chart_generators(doc: dict, nerve: Nerve, n: int, k: int
                            ) -> dict[str, Callable]:
    out = {}
    for ch, gen in doc.items():
        if ch not in nerve.charts:
            raise ValidationError(f"generator for unknown chart {ch!r}")
        out[ch] = build_generator(gen, n, k)
    return out


def _build_sign_cochain(doc: dict) -> SignCochain:
    values = {
        (tuple(v["triple"]), v["point"]): v["sign"] for v in doc["values"]
    }
    return SignCochain(doc["degree"], values)


def load_scenario(source: str | Path | dict) -> Scenario:
    """Load and validate a scenario from a path, JSON text, or dict."""
    if isinstance(source, dict):
        doc = source
    else:
        text = Path(source).read_text()
        doc = json.loads(text)
    jsonschema.validate(doc, SCENARIO_SCHEMA)
    n, k = doc["n"], doc["k"]
    if k > n:
        raise ValidationError("k must not exceed n")
    nerve = _build_nerve(doc["nerve"])
    sc = Scenario(
        name=doc["name"],
        description=doc.get("description", ""),
        n=n,
        k=k,
        nerve=nerve,
        pipelines=list(doc["pipelines"]),
        d_adapted=doc.get("d_adapted", False),
        expectations=doc.get("expectations", {}),
        tolerance_overrides=doc.get("tolerances", {}),
    )
    if "pair_cocycle" in doc:
        sc.pair_cocycle = _build_cocycle(doc["pair_cocycle"], nerve, n, k)
    if "gl_cocycle" in doc:
        sc.gl_cocycle = _build_cocycle(doc["gl_cocycle"], nerve, n, k)
    if "mp_cocycle" in doc:
        sc.mp_cocycle = _build_cocycle(doc["mp_cocycle"], nerve, n, k)
    if "delta_samples" in doc:
        sc.delta_samples = _build_chart_generators(doc["delta_samples"], nerve, n, k)
    sections = doc.get("sections", {})
    if "first" in sections:
        sc.sections_first = _build_chart_generators(sections["first"], nerve, n, k)
    if "second" in sections:
        sc.sections_second = _build_chart_generators(sections["second"], nerve, n, k)
    if "pair_sections" in doc:
        sc.pair_sections = _build_chart_generators(doc["pair_sections"], nerve, n, k)
    for case in doc.get("self_compat", []):
        sc.self_compat_cases.append(
            {
                "name": case["name"],
                "pair_cocycle": _build_cocycle(case["pair_cocycle"], nerve, n, k),
                "delta_samples": _build_chart_generators(
                    case["delta_samples"], nerve, n, k
                ),
            }
        )
    for fp in doc.get("frame_pairs", []):
        sc.frame_pairs.append(
            {
                "name": fp["name"],
                "first": build_generator(fp["first"], n, fp["k"]),
                "second": build_generator(fp["second"], n, fp["k"]),
                "k": fp["k"],
                "expected_delta": parse_complex(fp["expected_delta"]),
            }
        )
    for name, sdoc in doc.get("sign_cochains", {}).items():
        sc.sign_cochains[name] = _build_sign_cochain(sdoc)
    sc.noncontractible_components = [
        (pair, ci)
        for pair, comps in nerve.overlaps.items()
        for ci, comp in enumerate(comps)
        if not comp.contractible
    ]
    return sc


def builtin_scenario_names() -> list[str]:
    """Names of the scenarios shipped with the package."""
    pkg = resources.files("hfe") / "scenarios"
    return sorted(p.name[: -len(".json")] for p in pkg.iterdir()
                  if p.name.endswith(".json"))


def builtin_scenario_path(name: str) -> Path:
    pkg = resources.files("hfe") / "scenarios" / f"{name}.json"
    if not pkg.is_file():
        raise ValidationError(f"no built-in scenario named {name!r}")
    return Path(str(pkg))
