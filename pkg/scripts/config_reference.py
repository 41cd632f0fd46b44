"""Write docs/config_reference.md listing every config field with its default."""

import dataclasses
import typing
from pathlib import Path

from srsfp.dnn import Architecture, TrainConfig
from srsfp.run import PipelineOptions, RunConfig, SessionSpec, Splits
from srsfp.synthgen.scenario import Blocker, GnssModel, Reflector, Scenario, Shadowing

SECTIONS = [
    ("Run config (`run_*.yaml`)", RunConfig),
    ("`sessions[]`", SessionSpec),
    ("`splits`", Splits),
    ("`pipeline`", PipelineOptions),
    ("`train`", TrainConfig),
    ("`architecture`", Architecture),
    ("Scenario file (`scenario:` section)", Scenario),
    ("`scenario.reflectors[]`", Reflector),
    ("`scenario.blockers[]`", Blocker),
    ("`scenario.shadowing`", Shadowing),
    ("`scenario.gnss`", GnssModel),
]


def type_name(tp) -> str:
    return str(tp).replace("typing.", "").replace("<class '", "").replace("'>", "")


def default_of(f) -> str:
    if f.default is not dataclasses.MISSING:
        return repr(f.default)
    if f.default_factory is not dataclasses.MISSING:
        v = f.default_factory()
        return "(see section)" if dataclasses.is_dataclass(v) else repr(v)
    return "required"


def render() -> str:
    out = [
        "# Configuration reference",
        "",
        "Generated by `python scripts/config_reference.py`. Unknown keys are rejected",
        "with the dotted path of the offending field.",
        "",
    ]
    for title, cls in SECTIONS:
        hints = typing.get_type_hints(cls)
        out += [f"## {title}", "", "| field | type | default |", "|---|---|---|"]
        for f in dataclasses.fields(cls):
            if f.name == "base_dir":
                continue
            out.append(f"| `{f.name}` | `{type_name(hints[f.name])}` | `{default_of(f)}` |")
        out.append("")
    return "\n".join(out)


def main():
    dst = Path(__file__).resolve().parent.parent / "docs" / "config_reference.md"
    dst.write_text(render())
    print(f"wrote {dst}")


if __name__ == "__main__":
    main()
