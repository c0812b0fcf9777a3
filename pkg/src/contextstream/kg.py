"""Entity Type Graph (schema) and Entity Graph (instances): validation,
per-record snapshots of the streaming context, and recognized-context updates.

The streaming context is treated as a stream of entity graphs: each snapshot
copies the static graph and regenerates every context-dependent triple from
one stream record.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .core import Containment, Coordinates, StreamRecord, Timestamp, super_of
from .errors import CycleError, StaticPropertyError, UnknownIdError
from .report import ValidationReport

log = logging.getLogger(__name__)

DATATYPES = ("string", "integer", "float", "boolean", "timestamp", "coordinates", "enum")

# The context-dependent properties used for hierarchy exclusion when an ETG
# does not declare its own set.
DEFAULT_Q = frozenset(
    {"near", "use", "interact", "in", "do", "happenIn", "during", "participate"}
)

# Structural properties collapsed to direct edges by the hierarchy compiler.
COLLAPSE_PROPERTIES = ("isA", "partOf", "has")


@dataclass(frozen=True)
class DataPropertyDef:
    name: str
    datatype: str
    enum_values: tuple[str, ...] = ()

    def __post_init__(self):
        if self.datatype not in DATATYPES:
            raise ValueError(f"unknown datatype {self.datatype!r} for {self.name!r}")
        if self.datatype == "enum":
            if not self.enum_values:
                raise ValueError(f"enum property {self.name!r} lists no values")
            if len(set(self.enum_values)) != len(self.enum_values):
                raise ValueError(f"enum property {self.name!r} has duplicate values")
        elif self.enum_values:
            raise ValueError(f"property {self.name!r} is not an enum but lists values")


@dataclass(frozen=True)
class EntityType:
    id: str
    name: str
    parent: Optional[str] = None
    data_properties: tuple[DataPropertyDef, ...] = ()


@dataclass(frozen=True)
class ObjectPropertyDef:
    id: str
    name: str
    domain: str
    codomain: str
    context_dependent: bool = False


class ETG:
    """The schema graph. Immutable after construction; structural defects
    (unknown ids, inheritance cycles, property-name collisions) are rejected
    outright since no conforming data can exist for a broken schema."""

    def __init__(
        self,
        etypes: Iterable[EntityType],
        properties: Iterable[ObjectPropertyDef],
        me_etype: str,
        q: Iterable[str] | None = None,
    ):
        self.etypes: dict[str, EntityType] = {}
        for et in etypes:
            if et.id in self.etypes:
                raise ValueError(f"duplicate etype id {et.id!r}")
            self.etypes[et.id] = et
        self.properties: dict[str, ObjectPropertyDef] = {}
        for p in properties:
            if p.id in self.properties:
                raise ValueError(f"duplicate property id {p.id!r}")
            self.properties[p.id] = p
        if me_etype not in self.etypes:
            raise ValueError(f"me etype {me_etype!r} is not a declared etype")
        self.me_etype = me_etype
        for et in self.etypes.values():
            if et.parent is not None and et.parent not in self.etypes:
                raise ValueError(f"etype {et.id!r}: unknown parent {et.parent!r}")
        for p in self.properties.values():
            for end, label in ((p.domain, "domain"), (p.codomain, "codomain")):
                if end not in self.etypes:
                    raise ValueError(f"property {p.id!r}: unknown {label} {end!r}")
        parent_map = {
            et.id: et.parent for et in self.etypes.values() if et.parent is not None
        }
        for et_id in parent_map:
            super_of(et_id, parent_map)  # raises CycleError on inheritance cycles
        self._effective: dict[str, dict[str, DataPropertyDef]] = {}
        for et_id in self.etypes:
            self._effective[et_id] = self._build_effective(et_id)
        if q is None:
            self.q: frozenset[str] = frozenset(DEFAULT_Q & set(self.properties))
        else:
            q = frozenset(q)
            unknown = q - set(self.properties)
            if unknown:
                raise ValueError(f"q lists unknown properties: {sorted(unknown)}")
            self.q = q

    def _build_effective(self, etype_id: str) -> dict[str, DataPropertyDef]:
        chain: list[EntityType] = []
        cur: Optional[str] = etype_id
        while cur is not None:
            chain.append(self.etypes[cur])
            cur = self.etypes[cur].parent
        merged: dict[str, DataPropertyDef] = {}
        # walk from the topmost ancestor down so collisions name the culprit
        for et in reversed(chain):
            for dp in et.data_properties:
                if dp.name in merged:
                    raise ValueError(
                        f"etype {etype_id!r}: data property {dp.name!r} collides "
                        "with an inherited property"
                    )
                merged[dp.name] = dp
        return merged

    def etype(self, etype_id: str) -> EntityType:
        try:
            return self.etypes[etype_id]
        except KeyError:
            raise UnknownIdError(f"unknown etype {etype_id!r}") from None

    def property(self, prop_id: str) -> ObjectPropertyDef:
        try:
            return self.properties[prop_id]
        except KeyError:
            raise UnknownIdError(f"unknown property {prop_id!r}") from None

    def effective_data_properties(self, etype_id: str) -> Mapping[str, DataPropertyDef]:
        if etype_id not in self._effective:
            raise UnknownIdError(f"unknown etype {etype_id!r}")
        return self._effective[etype_id]

    def is_subtype(self, etype_id: str, ancestor_id: str) -> bool:
        """True when etype_id is ancestor_id or inherits from it."""
        cur: Optional[str] = etype_id
        while cur is not None:
            if cur == ancestor_id:
                return True
            cur = self.etypes[cur].parent if cur in self.etypes else None
        return False

    def __eq__(self, other) -> bool:
        if not isinstance(other, ETG):
            return NotImplemented
        return (
            self.etypes == other.etypes
            and self.properties == other.properties
            and self.me_etype == other.me_etype
            and self.q == other.q
        )


@dataclass(frozen=True)
class Entity:
    id: str
    name: str
    etype: str
    values: Mapping[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class PropertyValue:
    """One object-property triple: property(subject, object)."""

    property: str
    subject: str
    object: str


class EG:
    """The instance graph. Construction is permissive; conformance against an
    ETG is checked by validate_eg, which reports instead of raising."""

    def __init__(
        self,
        entities: Iterable[Entity],
        triples: Iterable[PropertyValue],
        at: Timestamp | None = None,
    ):
        self.entities: tuple[Entity, ...] = tuple(entities)
        self.triples: tuple[PropertyValue, ...] = tuple(dict.fromkeys(triples))
        self.at = at
        self._by_id: dict[str, Entity] = {}
        self._by_name: dict[str, list[Entity]] = {}
        for e in self.entities:
            self._by_id.setdefault(e.id, e)
            self._by_name.setdefault(e.name, []).append(e)

    def entity(self, entity_id: str) -> Entity:
        try:
            return self._by_id[entity_id]
        except KeyError:
            raise UnknownIdError(f"unknown entity {entity_id!r}") from None

    def has_entity(self, entity_id: str) -> bool:
        return entity_id in self._by_id

    def resolve(self, ref: str) -> Entity | None:
        """Resolve a reference by id, falling back to a unique name match."""
        if ref in self._by_id:
            return self._by_id[ref]
        matches = self._by_name.get(ref, [])
        return matches[0] if len(matches) == 1 else None

    def triple_set(self) -> frozenset[PropertyValue]:
        return frozenset(self.triples)

    def me_entity(self, etg: ETG) -> Entity | None:
        """The unique entity typed by the observer etype, if any."""
        mine = [
            e
            for e in self.entities
            if e.etype in etg.etypes and etg.is_subtype(e.etype, etg.me_etype)
        ]
        return mine[0] if len(mine) == 1 else None

    def __eq__(self, other) -> bool:
        if not isinstance(other, EG):
            return NotImplemented
        return (
            sorted(self.entities, key=lambda e: e.id) == sorted(other.entities, key=lambda e: e.id)
            and self.triple_set() == other.triple_set()
            and self.at == other.at
        )


def _value_matches(dp: DataPropertyDef, value: object) -> bool:
    if dp.datatype == "string":
        return isinstance(value, str)
    if dp.datatype == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    if dp.datatype == "float":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if dp.datatype == "boolean":
        return isinstance(value, bool)
    if dp.datatype == "timestamp":
        return isinstance(value, Timestamp)
    if dp.datatype == "coordinates":
        return isinstance(value, Coordinates)
    if dp.datatype == "enum":
        return isinstance(value, str) and value in dp.enum_values
    return False


def validate_eg(etg: ETG, eg: EG) -> ValidationReport:
    """Every conformance violation of `eg` against `etg`: duplicate ids,
    unknown etypes/properties/entities, datatype mismatches, domain/codomain
    violations. An empty report means the graph conforms."""
    report = ValidationReport()
    seen: set[str] = set()
    for e in eg.entities:
        if e.id in seen:
            report.add("duplicate-id", "entity id appears more than once", e.id)
            continue
        seen.add(e.id)
        if e.etype not in etg.etypes:
            report.add("unknown-etype", f"etype {e.etype!r} not in the ETG", e.id)
            continue
        effective = etg.effective_data_properties(e.etype)
        for name, value in e.values.items():
            dp = effective.get(name)
            if dp is None:
                report.add(
                    "unknown-data-property",
                    f"value {name!r} not a data property of {e.etype!r}",
                    e.id,
                )
            elif not _value_matches(dp, value):
                report.add(
                    "datatype-mismatch",
                    f"value {name!r}={value!r} does not match datatype {dp.datatype}",
                    e.id,
                )
    for t in eg.triples:
        subject_label = f"{t.property}({t.subject}, {t.object})"
        if t.property not in etg.properties:
            report.add("unknown-property", "property not in the ETG", subject_label)
            continue
        prop = etg.properties[t.property]
        ok = True
        for end, expect, role in (
            (t.subject, prop.domain, "domain"),
            (t.object, prop.codomain, "codomain"),
        ):
            if not eg.has_entity(end):
                report.add("unknown-entity", f"{role} entity {end!r} missing", subject_label)
                ok = False
        if not ok:
            continue
        if not etg.is_subtype(eg.entity(t.subject).etype, prop.domain):
            report.add(
                "domain-violation",
                f"subject etype {eg.entity(t.subject).etype!r} is not a {prop.domain!r}",
                subject_label,
            )
        if not etg.is_subtype(eg.entity(t.object).etype, prop.codomain):
            report.add(
                "codomain-violation",
                f"object etype {eg.entity(t.object).etype!r} is not a {prop.codomain!r}",
                subject_label,
            )
    return report


def _add_triple(
    triples: list[PropertyValue],
    etg: ETG,
    prop_id: str,
    subject: Entity | None,
    obj: Entity | None,
    report: ValidationReport,
    what: str,
) -> None:
    if prop_id not in etg.properties:
        report.add("unresolved", f"property {prop_id!r} not declared", what)
        return
    if subject is None or obj is None:
        report.add("unresolved", "endpoint entity not found", what)
        return
    triples.append(PropertyValue(prop_id, subject.id, obj.id))


def snapshot_eg(
    static_eg: EG,
    record: StreamRecord,
    etg: ETG,
    report: ValidationReport | None = None,
) -> EG:
    """The entity graph at record.ts: static triples are kept, every
    context-dependent triple is dropped and regenerated from the record.

    Regeneration: me `in` location, me `do` my actions, each annotated person
    `do` their actions, event `happenIn` location, me and persons
    `participate` in the event, event `during` its super event, and each
    function assignment as a triple of the property named like the function.
    Unresolvable references are reported; the snapshot is still produced.
    """
    if report is None:
        report = ValidationReport()
    static_triples = [
        t
        for t in static_eg.triples
        if t.property not in etg.properties or not etg.properties[t.property].context_dependent
    ]
    new: list[PropertyValue] = []
    me = static_eg.me_entity(etg)
    if me is None:
        report.add("unresolved", "no unique observer entity in the static EG")
    location = static_eg.resolve(record.location) if record.location else None
    if record.location and location is None:
        report.add("unresolved", f"location {record.location!r} not in the EG")
    event = static_eg.resolve(record.event) if record.event else None
    if record.event and event is None:
        report.add("unresolved", f"event {record.event!r} not in the EG")
    super_event = static_eg.resolve(record.super_event) if record.super_event else None
    if record.super_event and super_event is None:
        report.add("unresolved", f"super event {record.super_event!r} not in the EG")

    if me is not None and location is not None:
        _add_triple(new, etg, "in", me, location, report, "me in location")
    if me is not None and record.my_actions:
        for name in sorted(record.my_actions):
            action = static_eg.resolve(name)
            _add_triple(new, etg, "do", me, action, report, f"my action {name!r}")
    if event is not None and location is not None:
        _add_triple(new, etg, "happenIn", event, location, report, "event happenIn location")
    if event is not None and super_event is not None:
        _add_triple(new, etg, "during", event, super_event, report, "event during super event")
    if me is not None and event is not None:
        _add_triple(new, etg, "participate", me, event, report, "me participate event")

    def materialize(fa, actions: frozenset[str] | None, is_person: bool) -> None:
        label = f"{fa.function_name}({fa.beneficiary}, {fa.holder})"
        holder = static_eg.resolve(fa.holder)
        beneficiary = static_eg.resolve(fa.beneficiary)
        _add_triple(new, etg, fa.function_name, beneficiary, holder, report, label)
        if not is_person or holder is None:
            return
        if event is not None:
            _add_triple(new, etg, "participate", holder, event, report, f"{fa.holder} participate")
        for name in sorted(actions or ()):
            action = static_eg.resolve(name)
            _add_triple(new, etg, "do", holder, action, report, f"{fa.holder} does {name!r}")

    for entry in record.person_entries or ():
        materialize(entry.function, entry.actions, is_person=True)
    for fa in record.object_entries or ():
        materialize(fa, None, is_person=False)

    return EG(static_eg.entities, static_triples + new, at=record.ts)


def apply_context_update(eg: EG, recognized: Iterable[PropertyValue], etg: ETG) -> EG:
    """Replace context-dependent triples with recognized ones, per
    (property, subject). Updates touching a static property fail atomically."""
    recognized = list(dict.fromkeys(recognized))
    report = ValidationReport()
    for t in recognized:
        prop = etg.properties.get(t.property)
        if prop is None:
            report.add("unknown-property", "recognized triple uses undeclared property", t.property)
        elif not prop.context_dependent:
            report.add(
                "static-property",
                f"{t.property}({t.subject}, {t.object}) updates a static property",
                t.property,
            )
    if not report.ok:
        raise StaticPropertyError(report)
    touched = {(t.property, t.subject) for t in recognized}
    kept = [t for t in eg.triples if (t.property, t.subject) not in touched]
    return EG(eg.entities, kept + recognized, at=eg.at)


def containment_from_eg(
    eg: EG,
    etg: ETG,
    *,
    location_property: str = "partOf",
    event_property: str = "during",
) -> Containment:
    """Parent maps read off the EG's containment triples. Multiple parents
    per child cannot be represented; the first triple wins with a warning."""
    location_parent: dict[str, str] = {}
    event_parent: dict[str, str] = {}
    for t in eg.triples:
        target = None
        if t.property == location_property:
            target = location_parent
        elif t.property == event_property:
            target = event_parent
        if target is None:
            continue
        if t.subject in target and target[t.subject] != t.object:
            log.warning("entity %r has several %s parents; keeping %r",
                        t.subject, t.property, target[t.subject])
            continue
        target[t.subject] = t.object
    return Containment(location_parent=location_parent, event_parent=event_parent)
