"""JSON scenario files: channel specs, initial states and analysis options.

A scenario file is either ``{"version": "1", "scenarios": [...]}``, a single
scenario object, or a bare channel ``{"dim": d, "kraus": [...]}``. Each
scenario has an ``id``, a ``channel`` spec, an optional ``psi`` and an
optional ``options`` mapping. Channel specs are discriminated by ``type``:

``kraus``            ``{"dim", "kraus"}``, complex entries as ``[re, im]``
``unitary``          ``{"u"}``
``classical_chain``  ``{"W", "generators"?, "start"?}``
``site_coupling``    ``{"psi", "in": [{"rate", "state"}], "out": [...], "inner"}``
``hitting_time``     ``{"inner", "source", "target"}``
``random``           ``{"dim", "rank", "seed"}``
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .channel import (
    ChannelValidationError,
    QuantumChannel,
    basis_state,
    channel_from_json,
    parse_matrix,
    parse_real_matrix,
    parse_vector,
    pure_state,
)
from .constructions import (
    ClassicalChain,
    SiteCoupling,
    embed_inner,
    from_classical_chain,
    from_unitary,
    hitting_time_channel,
    monitored_site_channel,
    random_channel,
)

SCHEMA_VERSION = "1"


class ScenarioError(Exception):
    """Malformed scenario file (structure, types, missing keys)."""


@dataclass
class Scenario:
    id: str
    channel: QuantumChannel
    psi: np.ndarray
    options: dict[str, Any] = field(default_factory=dict)
    kind: str = "kraus"
    hitting: dict[str, Any] | None = None


def build_channel(spec: dict[str, Any]) -> tuple[QuantumChannel, np.ndarray | None]:
    """Channel from a spec plus the initial state the spec implies, if any."""
    kind = spec.get("type", "kraus")
    if kind == "kraus":
        return channel_from_json(spec), None
    if kind == "unitary":
        return from_unitary(parse_matrix(spec["u"]), tol=float(spec.get("tol", 1e-10))), None
    if kind == "classical_chain":
        chain = ClassicalChain(parse_real_matrix(spec["W"]))
        gens = spec.get("generators")
        gens = [parse_matrix(g) for g in gens] if gens is not None else None
        ch = from_classical_chain(chain, gens)
        return ch, basis_state(chain.n_states, int(spec.get("start", 0)))
    if kind == "site_coupling":
        psi = pure_state(parse_vector(spec["psi"]))
        if "inner_kraus" in spec:
            inner_ops = [parse_matrix(k) for k in spec["inner_kraus"]]
        else:
            inner, _ = build_channel(spec["inner"])
            inner_ops = embed_inner(inner.checked(), psi)
        coupling = SiteCoupling(
            in_rates=tuple((float(r["rate"]), parse_vector(r["state"])) for r in spec["in"]),
            out_rates=tuple((float(r["rate"]), parse_vector(r["state"])) for r in spec["out"]),
            inner_kraus=tuple(inner_ops),
        )
        return monitored_site_channel(coupling, psi), psi
    if kind == "hitting_time":
        inner, _ = build_channel(spec["inner"])
        ch, ancilla = hitting_time_channel(inner, parse_vector(spec["source"]), parse_vector(spec["target"]))
        return ch, ancilla
    if kind == "random":
        return random_channel(int(spec["dim"]), int(spec["rank"]), int(spec["seed"])), None
    raise ScenarioError(f"unknown channel type {kind!r}")


def parse_scenario(obj: dict[str, Any], index: int = 0) -> Scenario:
    if not isinstance(obj, dict):
        raise ScenarioError(f"scenario #{index} is not an object")
    try:
        if "channel" in obj:
            spec = obj["channel"]
            sid = str(obj.get("id", f"scenario{index}"))
        else:
            spec = obj
            sid = str(obj.get("id", f"scenario{index}"))
        if not isinstance(spec, dict):
            raise ScenarioError(f"scenario {sid!r}: channel spec must be an object")
        channel, implied_psi = build_channel(spec)
        if "psi" in obj and spec is not obj:
            psi = pure_state(parse_vector(obj["psi"]))
            if spec.get("type") == "hitting_time":
                raise ScenarioError(f"scenario {sid!r}: hitting_time fixes psi to the ancilla")
        elif implied_psi is not None:
            psi = implied_psi
        else:
            psi = basis_state(channel.dim, 0)
        if psi.size != channel.dim:
            raise ChannelValidationError(
                f"scenario {sid!r}: psi has length {psi.size}, channel dimension is {channel.dim}"
            )
        options = dict(obj.get("options", {}))
    except (KeyError, TypeError, IndexError) as exc:
        raise ScenarioError(f"scenario #{index}: malformed ({type(exc).__name__}: {exc})") from exc
    hitting = None
    if spec.get("type") == "hitting_time":
        hitting = {"source": spec["source"], "target": spec["target"]}
    return Scenario(sid, channel, psi, options, spec.get("type", "kraus"), hitting)


def parse_document(doc: Any) -> list[Scenario]:
    if isinstance(doc, dict) and "scenarios" in doc:
        version = str(doc.get("version", SCHEMA_VERSION))
        if version != SCHEMA_VERSION:
            raise ScenarioError(f"unsupported scenario schema version {version!r}")
        items = doc["scenarios"]
        if not isinstance(items, list):
            raise ScenarioError("'scenarios' must be a list")
    elif isinstance(doc, dict):
        items = [doc]
    else:
        raise ScenarioError("top-level JSON value must be an object")
    scenarios = [parse_scenario(obj, i) for i, obj in enumerate(items)]
    ids = [s.id for s in scenarios]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise ChannelValidationError(f"scenario ids must be unique, duplicated: {dupes}")
    return scenarios


def load(path: str | Path) -> list[Scenario]:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    return parse_document(doc)
