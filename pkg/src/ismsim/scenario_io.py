"""Scenario files in, BER curves out.

Scenario files are YAML::

    defaults:            # optional, merged under every scenario
      num_rx: 4
      seed: 7
    allow_mixed_efficiency: false
    scenarios:
      ism:
        scheme: ISM
        num_tx: 4
        num_active: 2
        mod_order: 4
        snr_db: {start: 8, stop: 20, step: 2}
      sm:
        scheme: SM
        num_tx: 4
        mod_order: 16
        snr_db: [8, 12, 16, 20]

Scenarios sharing a ``group`` (all of them, by default) are meant to be
compared on one plot, so they must have the same spectral efficiency unless
``allow_mixed_efficiency`` is set.

Curves are written as CSV with a JSON sidecar (same stem) that carries the full
scenario, enough to re-run and reproduce the counts exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Optional

import yaml

from . import __version__
from .channel import SNR_CONVENTION
from .errors import IsmError, ParseError, ValidationError
from .modem import Modulation
from .montecarlo import BerCurve, BerPoint, Scenario, Scheme, StoppingRule

__all__ = [
    "CSV_HEADER",
    "parse_scenarios",
    "load_scenarios",
    "write_csv",
    "read_csv",
    "manifest_for",
    "scenario_from_manifest",
]

CSV_HEADER = ["snr_db", "bits_sent", "bit_errors", "ber", "blocks_sent", "wall_time_s"]

SCENARIO_KEYS = {
    "scheme", "num_tx", "num_rx", "num_active", "mod_order", "mod_scheme", "snr_db",
    "min_bit_errors", "max_blocks", "max_bits", "seed", "symbol_energy", "group",
    "batch_size",
}
TOP_KEYS = {"scenarios", "defaults", "allow_mixed_efficiency"}
INT_KEYS = ("num_tx", "num_rx", "num_active", "mod_order", "min_bit_errors",
            "max_blocks", "max_bits", "seed", "batch_size")


def _line(node) -> int:
    return node.start_mark.line + 1


def _mapping(node, what: str) -> dict:
    """Key -> (value node, key line) for a YAML mapping node, rejecting duplicates."""
    if not isinstance(node, yaml.MappingNode):
        raise ParseError(_line(node), f"{what} must be a mapping")
    out = {}
    for k, v in node.value:
        if not isinstance(k, yaml.ScalarNode):
            raise ParseError(_line(k), f"{what}: keys must be plain names")
        if k.value in out:
            raise ParseError(_line(k), f"{what}: duplicate key '{k.value}'")
        out[k.value] = (v, _line(k))
    return out


def _value(node):
    return yaml.safe_load(yaml.serialize(node))


def _snr_points(value, line: int) -> tuple:
    if isinstance(value, dict):
        extra = set(value) - {"start", "stop", "step"}
        missing = {"start", "stop", "step"} - set(value)
        if extra or missing:
            raise ValidationError("snr_db", "range form needs exactly start, stop, step", line)
        try:
            start, stop, step = (float(value[k]) for k in ("start", "stop", "step"))
        except (TypeError, ValueError):
            raise ValidationError("snr_db", "start/stop/step must be numbers", line) from None
        if step <= 0 or stop < start:
            raise ValidationError("snr_db", "need step > 0 and stop >= start", line)
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + k * step, 10) for k in range(n))
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, list) or not value:
        raise ValidationError("snr_db", "must be a non-empty list or {start, stop, step}", line)
    pts = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValidationError("snr_db", f"not a number: {v!r}", line)
        pts.append(float(v))
    if len(set(pts)) != len(pts):
        raise ValidationError("snr_db", "duplicate SNR points", line)
    return tuple(pts)


def _is_pow2(n: int) -> bool:
    return n >= 1 and not n & (n - 1)


def _build(name: str, fields: dict, lines: dict, block_line: int) -> Scenario:
    def where(key):
        return lines.get(key, block_line)

    for key in ("scheme", "num_tx", "mod_order", "snr_db"):
        if key not in fields:
            raise ValidationError(key, f"required key missing in scenario '{name}'", block_line)
    for key in INT_KEYS:
        if key in fields and (isinstance(fields[key], bool) or not isinstance(fields[key], int)):
            raise ValidationError(key, f"must be an integer, got {fields[key]!r}", where(key))

    try:
        scheme = Scheme(str(fields["scheme"]).upper())
    except ValueError:
        raise ValidationError("scheme", f"must be one of ISM, SM, VBLAST (got {fields['scheme']!r})",
                              where("scheme")) from None
    num_tx = fields["num_tx"]
    mod_order = fields["mod_order"]
    if not _is_pow2(mod_order) or mod_order < 2:
        raise ValidationError("mod_order", f"NotPowerOfTwo: {mod_order}", where("mod_order"))
    if mod_order > 512:
        raise ValidationError("mod_order", f"UnsupportedOrder: {mod_order} > 512", where("mod_order"))
    if scheme is not Scheme.VBLAST and not _is_pow2(num_tx):
        raise ValidationError("num_tx", f"NotPowerOfTwo: {num_tx}", where("num_tx"))
    if num_tx < 1:
        raise ValidationError("num_tx", "must be >= 1", where("num_tx"))

    default_active = {Scheme.SM: 1, Scheme.VBLAST: num_tx}.get(scheme)
    num_active = fields.get("num_active", default_active)
    if num_active is None:
        raise ValidationError("num_active", "required for ISM", block_line)
    if scheme is Scheme.ISM and not 1 <= num_active < num_tx:
        raise ValidationError("num_active", f"ISM requires 1 <= num_active < num_tx ({num_tx})",
                              where("num_active"))

    mod_scheme = fields.get("mod_scheme")
    if mod_scheme is not None:
        try:
            mod_scheme = Modulation(str(mod_scheme).upper())
        except ValueError:
            raise ValidationError("mod_scheme", f"must be BPSK or QAM (got {mod_scheme!r})",
                                  where("mod_scheme")) from None

    snr = _snr_points(fields["snr_db"], where("snr_db"))
    try:
        stop = StoppingRule(
            min_bit_errors=fields.get("min_bit_errors", 200),
            max_blocks=fields.get("max_blocks", StoppingRule.max_blocks),
            max_bits=fields.get("max_bits"),
        )
        energy = fields.get("symbol_energy", 1.0)
        if isinstance(energy, bool) or not isinstance(energy, (int, float)):
            raise ValidationError("symbol_energy", "must be a number")
        kw = {}
        if "batch_size" in fields:
            kw["batch_size"] = fields["batch_size"]
        return Scenario(
            scheme=scheme, num_tx=num_tx, num_rx=fields.get("num_rx", 1),
            num_active=num_active, mod_order=mod_order, snr_points_db=snr, stop=stop,
            master_seed=fields.get("seed", 0), mod_scheme=mod_scheme,
            symbol_energy=float(energy), name=name, **kw,
        )
    except ValidationError as e:
        raise ValidationError(e.field, e.constraint, e.line or where(e.field)) from None
    except IsmError as e:
        raise ValidationError(type(e).__name__, str(e), block_line) from None


def parse_scenarios(document: str) -> list:
    """Parse and validate a scenario document; returns scenarios in file order."""
    try:
        root = yaml.compose(document, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark or e.context_mark
        raise ParseError(mark.line + 1 if mark else None, str(e.problem or e)) from None
    except yaml.YAMLError as e:
        raise ParseError(None, str(e)) from None
    if root is None:
        raise ParseError(1, "empty document")
    top = _mapping(root, "document")
    for key, (_, line) in top.items():
        if key not in TOP_KEYS:
            raise ParseError(line, f"unknown top-level key '{key}'")
    if "scenarios" not in top:
        raise ParseError(1, "missing 'scenarios' section")

    defaults, default_lines = {}, {}
    if "defaults" in top:
        for key, (node, line) in _mapping(top["defaults"][0], "defaults").items():
            if key not in SCENARIO_KEYS:
                raise ParseError(line, f"unknown key '{key}' in defaults")
            defaults[key] = _value(node)
            default_lines[key] = line

    allow_mixed = False
    if "allow_mixed_efficiency" in top:
        node, line = top["allow_mixed_efficiency"]
        allow_mixed = _value(node)
        if not isinstance(allow_mixed, bool):
            raise ValidationError("allow_mixed_efficiency", "must be true or false", line)

    out, groups = [], {}
    for name, (node, block_line) in _mapping(top["scenarios"][0], "scenarios").items():
        fields, lines = dict(defaults), dict(default_lines)
        for key, (vnode, line) in _mapping(node, f"scenario '{name}'").items():
            if key not in SCENARIO_KEYS:
                raise ParseError(line, f"unknown key '{key}' in scenario '{name}'")
            fields[key] = _value(vnode)
            lines[key] = line
        sc = _build(str(name), fields, lines, block_line)
        out.append(sc)
        groups.setdefault(str(fields.get("group", "")), []).append((sc, block_line))
    if not out:
        raise ParseError(_line(top["scenarios"][0]), "no scenarios declared")

    if not allow_mixed:
        for members in groups.values():
            first = members[0][0]
            for sc, line in members[1:]:
                if sc.spectral_efficiency != first.spectral_efficiency:
                    raise ValidationError(
                        "spectral_efficiency",
                        f"scenario '{sc.name}' has {sc.spectral_efficiency} bits/s/Hz but "
                        f"'{first.name}' has {first.spectral_efficiency}; set "
                        "allow_mixed_efficiency: true or use separate groups",
                        line,
                    )
    return out


def load_scenarios(path) -> list:
    return parse_scenarios(Path(path).read_text())


def manifest_for(curve: BerCurve) -> dict:
    sc = curve.scenario
    return {
        "tool": "ismsim",
        "version": __version__,
        "name": sc.label,
        "scheme": sc.scheme.value,
        "num_tx": sc.num_tx,
        "num_rx": sc.num_rx,
        "num_active": sc.num_active,
        "mod_order": sc.mod_order,
        "mod_scheme": sc.mod_scheme.value,
        "spectral_efficiency": sc.spectral_efficiency,
        "block_bits": sc.block_bits,
        "symbol_energy": sc.symbol_energy,
        "seed": sc.master_seed,
        "snr_convention": SNR_CONVENTION,
        "snr_points_db": list(sc.snr_points_db),
        "min_bit_errors": sc.stop.min_bit_errors,
        "max_blocks": sc.stop.max_blocks,
        "max_bits": sc.stop.max_bits,
        "batch_size": sc.batch_size,
        "stopping_note": "each point stops at the first block reaching min_bit_errors, "
                         "or at the block cap; 200 errors is about 7% relative standard error",
    }


def scenario_from_manifest(manifest) -> Scenario:
    """Rebuild the scenario recorded in a manifest (dict or path to the JSON)."""
    if not isinstance(manifest, dict):
        manifest = json.loads(Path(manifest).read_text())
    return Scenario(
        scheme=Scheme(manifest["scheme"]),
        num_tx=manifest["num_tx"],
        num_rx=manifest["num_rx"],
        num_active=manifest["num_active"],
        mod_order=manifest["mod_order"],
        mod_scheme=Modulation(manifest["mod_scheme"]),
        snr_points_db=tuple(manifest["snr_points_db"]),
        stop=StoppingRule(manifest["min_bit_errors"], manifest["max_blocks"],
                          manifest.get("max_bits")),
        master_seed=manifest["seed"],
        symbol_energy=manifest["symbol_energy"],
        name=manifest.get("name", ""),
        batch_size=manifest["batch_size"],
    )


def _rows(curve: BerCurve):
    for p in curve.points:
        yield [repr(float(p.snr_db)), str(p.bits_sent), str(p.bit_errors),
               f"{p.ber:.17e}", str(p.blocks_sent), f"{p.wall_time_s:.6f}"]


def write_csv(curve: BerCurve, destination, manifest: bool = True) -> Optional[Path]:
    """Write ``curve`` as CSV to a path or text stream.

    When writing to a path and ``manifest`` is true, a JSON sidecar with the
    same stem is written next to it; its path is returned.
    """
    if not curve.points:
        raise ValueError("cannot write an empty curve")
    if hasattr(destination, "write"):
        w = csv.writer(destination, lineterminator="\n")
        w.writerow(CSV_HEADER)
        w.writerows(_rows(curve))
        return None
    path = Path(destination)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        write_csv(curve, f)
    if manifest and curve.scenario is not None:
        side = path.with_suffix(".json")
        side.write_text(json.dumps(manifest_for(curve), indent=2) + "\n")
        return side
    return None


def read_csv(source) -> BerCurve:
    """Read a curve written by :func:`write_csv`.

    The scenario is restored from the sidecar manifest when one exists next to
    the CSV; otherwise ``curve.scenario`` is ``None``.
    """
    scenario = None
    if hasattr(source, "read"):
        text = source.read()
    else:
        path = Path(source)
        text = path.read_text()
        side = path.with_suffix(".json")
        if side.exists():
            scenario = scenario_from_manifest(side)
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != CSV_HEADER:
        raise ParseError(1, f"unexpected CSV header {header}")
    points = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise ParseError(lineno, f"expected {len(CSV_HEADER)} columns, got {len(row)}")
        try:
            points.append(BerPoint(snr_db=float(row[0]), bits_sent=int(row[1]),
                                   bit_errors=int(row[2]), blocks_sent=int(row[4]),
                                   wall_time_s=float(row[5])))
        except ValueError as e:
            raise ParseError(lineno, str(e)) from None
    return BerCurve(scenario=scenario, points=points)
