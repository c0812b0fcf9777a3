"""File formats: versioned JSON documents for the schema/instance graphs,
hierarchies, scenarios and configuration, JSONL for streams and run logs.

Every document carries a `format` tag (`<kind>/<version>`); loaders reject
unknown kinds and versions. Saving then loading yields semantically equal
objects (set-valued fields compare as sets).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .core import (
    Containment,
    Coordinates,
    FunctionAssignment,
    PersonEntry,
    StreamRecord,
    StreamingContext,
    Timestamp,
    append_record,
    format_timestamp,
    parse_timestamp,
)
from .errors import FormatError
from .hierarchy import ConceptNode, Hierarchy, NodeKind
from .kg import EG, ETG, DataPropertyDef, Entity, EntityType, ObjectPropertyDef, PropertyValue
from .learn import QueryStrategy
from .simulate import EmissionSpec, ScenarioScript, Segment, WindowEvent

FORMATS = {
    "etg": "etg/1",
    "eg": "eg/1",
    "stream": "stream/1",
    "hierarchy": "hierarchy/1",
    "scenario": "scenario/1",
    "config": "config/1",
    "runlog": "runlog/1",
    "metrics": "metrics/1",
}


def _check_format(doc: Mapping[str, Any], kind: str, path: Any) -> None:
    tag = doc.get("format")
    if tag != FORMATS[kind]:
        raise FormatError(path, f"expected format {FORMATS[kind]!r}, found {tag!r}")


def _read_json(path: str | Path) -> Any:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(path, exc.msg, line=exc.lineno, col=exc.colno) from None


def _write_json(path: str | Path, doc: Any) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def dumps_canonical(doc: Any) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


# -- ETG ---------------------------------------------------------------

def etg_to_dict(etg: ETG) -> dict:
    return {
        "format": FORMATS["etg"],
        "me_etype": etg.me_etype,
        "etypes": [
            {
                "id": et.id,
                "name": et.name,
                "parent": et.parent,
                "data_properties": [
                    {
                        "name": dp.name,
                        "datatype": dp.datatype,
                        **({"values": list(dp.enum_values)} if dp.datatype == "enum" else {}),
                    }
                    for dp in et.data_properties
                ],
            }
            for et in etg.etypes.values()
        ],
        "properties": [
            {
                "id": p.id,
                "name": p.name,
                "domain": p.domain,
                "codomain": p.codomain,
                "context_dependent": p.context_dependent,
            }
            for p in etg.properties.values()
        ],
        "q": sorted(etg.q),
    }


def etg_from_dict(doc: Mapping[str, Any], path: Any = "<memory>") -> ETG:
    _check_format(doc, "etg", path)
    try:
        etypes = [
            EntityType(
                id=et["id"],
                name=et["name"],
                parent=et.get("parent"),
                data_properties=tuple(
                    DataPropertyDef(
                        name=dp["name"],
                        datatype=dp["datatype"],
                        enum_values=tuple(dp.get("values", ())),
                    )
                    for dp in et.get("data_properties", ())
                ),
            )
            for et in doc.get("etypes", ())
        ]
        properties = [
            ObjectPropertyDef(
                id=p["id"],
                name=p["name"],
                domain=p["domain"],
                codomain=p["codomain"],
                context_dependent=bool(p.get("context_dependent", False)),
            )
            for p in doc.get("properties", ())
        ]
        return ETG(etypes, properties, me_etype=doc["me_etype"], q=doc.get("q"))
    except (KeyError, TypeError) as exc:
        raise FormatError(path, f"malformed ETG document: {exc}") from None


def load_etg(path: str | Path) -> ETG:
    return etg_from_dict(_read_json(path), path)


def save_etg(path: str | Path, etg: ETG) -> None:
    _write_json(path, etg_to_dict(etg))


# -- EG ----------------------------------------------------------------

def _value_to_json(v: Any) -> Any:
    if isinstance(v, Coordinates):
        return {"x": v.x, "y": v.y, "z": v.z, "frame": v.frame}
    if isinstance(v, Timestamp):
        return format_timestamp(v)
    return v


def _value_from_json(datatype: str, v: Any) -> Any:
    if datatype == "coordinates" and isinstance(v, Mapping):
        return Coordinates(v["x"], v["y"], v["z"], v.get("frame", "local"))
    if datatype == "timestamp" and isinstance(v, str):
        return parse_timestamp(v)
    return v


def eg_to_dict(eg: EG) -> dict:
    return {
        "format": FORMATS["eg"],
        "at": format_timestamp(eg.at) if eg.at is not None else None,
        "entities": [
            {
                "id": e.id,
                "name": e.name,
                "etype": e.etype,
                "values": {k: _value_to_json(v) for k, v in e.values.items()},
            }
            for e in eg.entities
        ],
        "triples": [
            {"property": t.property, "subject": t.subject, "object": t.object}
            for t in eg.triples
        ],
    }


def eg_from_dict(doc: Mapping[str, Any], etg: ETG | None = None, path: Any = "<memory>") -> EG:
    _check_format(doc, "eg", path)
    try:
        entities = []
        for e in doc.get("entities", ()):
            values: dict[str, Any] = dict(e.get("values", {}))
            if etg is not None and e.get("etype") in etg.etypes:
                effective = etg.effective_data_properties(e["etype"])
                values = {
                    k: _value_from_json(effective[k].datatype, v) if k in effective else v
                    for k, v in values.items()
                }
            entities.append(Entity(id=e["id"], name=e["name"], etype=e["etype"], values=values))
        triples = [
            PropertyValue(t["property"], t["subject"], t["object"])
            for t in doc.get("triples", ())
        ]
        at = doc.get("at")
        return EG(entities, triples, at=parse_timestamp(at) if at else None)
    except (KeyError, TypeError) as exc:
        raise FormatError(path, f"malformed EG document: {exc}") from None


def load_eg(path: str | Path, etg: ETG | None = None) -> EG:
    return eg_from_dict(_read_json(path), etg, path)


def save_eg(path: str | Path, eg: EG) -> None:
    _write_json(path, eg_to_dict(eg))


# -- stream records (JSONL) ---------------------------------------------

def _coordinates_to_json(c: Coordinates | None) -> Any:
    if c is None:
        return None
    return {"x": c.x, "y": c.y, "z": c.z, "frame": c.frame}


def _coordinates_from_json(d: Any) -> Coordinates | None:
    if d is None:
        return None
    return Coordinates(d["x"], d["y"], d["z"], d.get("frame", "local"))


def record_to_dict(r: StreamRecord) -> dict:
    return {
        "ts": format_timestamp(r.ts),
        "super_location": r.super_location,
        "super_event": r.super_event,
        "location": r.location,
        "event": r.event,
        "coo_me": _coordinates_to_json(r.coo_me),
        "my_actions": sorted(r.my_actions) if r.my_actions is not None else None,
        "persons": None
        if r.person_entries is None
        else [
            {
                "function": e.function.function_name,
                "holder": e.function.holder,
                "beneficiary": e.function.beneficiary,
                "actions": sorted(e.actions),
            }
            for e in r.person_entries
        ],
        "objects": None
        if r.object_entries is None
        else [
            {
                "function": fa.function_name,
                "holder": fa.holder,
                "beneficiary": fa.beneficiary,
            }
            for fa in r.object_entries
        ],
    }


def record_from_dict(d: Mapping[str, Any], path: Any = "<memory>", ts: Timestamp | None = None) -> StreamRecord:
    try:
        my_actions = d.get("my_actions")
        persons = d.get("persons")
        objects = d.get("objects")
        return StreamRecord(
            ts=ts if ts is not None else parse_timestamp(d["ts"]),
            super_location=d.get("super_location"),
            super_event=d.get("super_event"),
            location=d.get("location"),
            event=d.get("event"),
            coo_me=_coordinates_from_json(d.get("coo_me")),
            my_actions=frozenset(my_actions) if my_actions is not None else None,
            person_entries=None
            if persons is None
            else tuple(
                PersonEntry(
                    function=FunctionAssignment(
                        function_name=p["function"],
                        holder=p["holder"],
                        beneficiary=p["beneficiary"],
                    ),
                    actions=frozenset(p.get("actions", ())),
                )
                for p in persons
            ),
            object_entries=None
            if objects is None
            else tuple(
                FunctionAssignment(
                    function_name=o["function"],
                    holder=o["holder"],
                    beneficiary=o["beneficiary"],
                )
                for o in objects
            ),
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(path, f"malformed stream record: {exc}") from None


def load_stream(path: str | Path, containment: Containment | None = None) -> StreamingContext:
    """Read a JSONL stream: a format header line, then one record per line."""
    stream = StreamingContext()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(path, exc.msg, line=lineno, col=exc.colno) from None
            if lineno == 1:
                _check_format(doc, "stream", path)
                continue
            record = record_from_dict(doc, path)
            stream = append_record(stream, record, containment)
    return stream


def save_stream(path: str | Path, stream: StreamingContext) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"format": FORMATS["stream"]}) + "\n")
        for r in stream.records:
            fh.write(json.dumps(record_to_dict(r), ensure_ascii=False) + "\n")


# -- hierarchy -----------------------------------------------------------

def _source_ref_to_json(ref) -> Any:
    if isinstance(ref, tuple):
        return list(ref)
    return ref


def hierarchy_to_dict(h: Hierarchy) -> dict:
    return {
        "format": FORMATS["hierarchy"],
        "root": h.root,
        "nodes": [
            {
                "id": node.id,
                "kind": node.kind.value,
                "display_name": node.display_name,
                "source_ref": _source_ref_to_json(node.source_ref),
            }
            for node in sorted(h.nodes.values(), key=lambda n: n.id)
        ],
        "edges": [list(e) for e in sorted(h.edges)],
    }


def hierarchy_from_dict(doc: Mapping[str, Any], path: Any = "<memory>") -> Hierarchy:
    _check_format(doc, "hierarchy", path)
    try:
        nodes = [
            ConceptNode(
                id=n["id"],
                kind=NodeKind(n["kind"]),
                display_name=n["display_name"],
                source_ref=tuple(n["source_ref"])
                if isinstance(n["source_ref"], list)
                else n["source_ref"],
            )
            for n in doc["nodes"]
        ]
        edges = [(e[0], e[1]) for e in doc["edges"]]
        return Hierarchy(nodes, edges, root=doc["root"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(path, f"malformed hierarchy document: {exc}") from None


def load_hierarchy(path: str | Path) -> Hierarchy:
    return hierarchy_from_dict(_read_json(path), path)


def save_hierarchy(path: str | Path, h: Hierarchy) -> None:
    _write_json(path, hierarchy_to_dict(h))


# -- scenario ------------------------------------------------------------

def scenario_to_dict(script: ScenarioScript) -> dict:
    return {
        "format": FORMATS["scenario"],
        "seed": script.seed,
        "reading_interval_s": script.reading_interval_s,
        "channels": list(script.channels),
        "segments": [
            {
                "begin": format_timestamp(seg.begin),
                "end": format_timestamp(seg.end),
                "emissions": {
                    ch: {"mean": spec.mean, "std": spec.std}
                    for ch, spec in sorted(seg.emissions.items())
                },
                "record": {
                    k: v for k, v in record_to_dict(seg.record).items() if k != "ts"
                },
            }
            for seg in script.segments
        ],
    }


def scenario_from_dict(doc: Mapping[str, Any], path: Any = "<memory>") -> ScenarioScript:
    _check_format(doc, "scenario", path)
    try:
        segments = []
        for seg in doc.get("segments", ()):
            begin = parse_timestamp(seg["begin"])
            segments.append(
                Segment(
                    begin=begin,
                    end=parse_timestamp(seg["end"]),
                    emissions={
                        ch: EmissionSpec(float(spec["mean"]), float(spec["std"]))
                        for ch, spec in seg.get("emissions", {}).items()
                    },
                    record=record_from_dict(seg["record"], path, ts=begin),
                )
            )
        return ScenarioScript(
            seed=int(doc["seed"]),
            reading_interval_s=float(doc["reading_interval_s"]),
            channels=tuple(doc["channels"]),
            segments=tuple(segments),
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(path, f"malformed scenario document: {exc}") from None


def load_scenario(path: str | Path) -> ScenarioScript:
    return scenario_from_dict(_read_json(path), path)


def save_scenario(path: str | Path, script: ScenarioScript) -> None:
    _write_json(path, scenario_to_dict(script))


# -- config --------------------------------------------------------------

CONFIG_KEYS = {"format", "near_threshold_m", "window_minutes", "strategy", "seed"}


@dataclass(frozen=True)
class Config:
    near_threshold_m: float = 10.0
    window_minutes: float = 30.0
    strategy: QueryStrategy = QueryStrategy("always")
    seed: int | None = None

    def __post_init__(self):
        if self.near_threshold_m <= 0:
            raise ValueError("near_threshold_m must be positive")
        if self.window_minutes <= 0:
            raise ValueError("window_minutes must be positive")


def config_from_dict(doc: Mapping[str, Any], path: Any = "<memory>") -> Config:
    _check_format(doc, "config", path)
    unknown = set(doc) - CONFIG_KEYS
    if unknown:
        raise FormatError(path, f"unknown config keys: {sorted(unknown)}")
    try:
        return Config(
            near_threshold_m=float(doc.get("near_threshold_m", 10.0)),
            window_minutes=float(doc.get("window_minutes", 30.0)),
            strategy=QueryStrategy.from_dict(doc.get("strategy", {"kind": "always"})),
            seed=int(doc["seed"]) if doc.get("seed") is not None else None,
        )
    except (TypeError, ValueError) as exc:
        raise FormatError(path, f"malformed config: {exc}") from None


def config_to_dict(config: Config) -> dict:
    return {
        "format": FORMATS["config"],
        "near_threshold_m": config.near_threshold_m,
        "window_minutes": config.window_minutes,
        "strategy": config.strategy.to_dict(),
        "seed": config.seed,
    }


def load_config(path: str | Path) -> Config:
    return config_from_dict(_read_json(path), path)


def save_config(path: str | Path, config: Config) -> None:
    _write_json(path, config_to_dict(config))


# -- run logs and metrics --------------------------------------------------

def event_to_dict(e: WindowEvent) -> dict:
    return {
        "begin": format_timestamp(e.begin),
        "end": format_timestamp(e.end),
        "features": [float(v) for v in e.features],
        "queried": e.queried,
        "prediction": [int(b) for b in e.prediction],
        "truth": [int(b) for b in e.truth],
    }


def runlog_to_lines(node_order: Sequence[str], manifest: Sequence[str], seed: int,
                    events: Iterable[WindowEvent]) -> list[str]:
    header = {
        "format": FORMATS["runlog"],
        "seed": seed,
        "nodes": list(node_order),
        "manifest": list(manifest),
    }
    return [json.dumps(header, ensure_ascii=False)] + [
        json.dumps(event_to_dict(e), ensure_ascii=False) for e in events
    ]


def save_runlog(path: str | Path, node_order: Sequence[str], manifest: Sequence[str],
                seed: int, events: Iterable[WindowEvent]) -> None:
    lines = runlog_to_lines(node_order, manifest, seed, events)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_runlog(path: str | Path) -> tuple[dict, np.ndarray, np.ndarray, list[dict]]:
    """Returns (header, predictions, truths, raw event dicts)."""
    header: dict | None = None
    events: list[dict] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(path, exc.msg, line=lineno, col=exc.colno) from None
            if lineno == 1:
                _check_format(doc, "runlog", path)
                header = doc
                continue
            events.append(doc)
    if header is None:
        raise FormatError(path, "empty run log")
    n = len(header["nodes"])
    preds = np.array([e["prediction"] for e in events], dtype=np.uint8).reshape(-1, n)
    truths = np.array([e["truth"] for e in events], dtype=np.uint8).reshape(-1, n)
    return header, preds, truths, events


def save_metrics(path: str | Path, metrics: Mapping[str, Any]) -> None:
    doc = {"format": FORMATS["metrics"], **metrics}
    _write_json(path, doc)


def load_metrics(path: str | Path) -> dict:
    doc = _read_json(path)
    _check_format(doc, "metrics", path)
    return {k: v for k, v in doc.items() if k != "format"}
