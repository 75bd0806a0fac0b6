"""Dataclass configs overridable from the command line."""
import argparse
import dataclasses
import json


def parse(cls, description=None, argv=None):
    p = argparse.ArgumentParser(description=description)
    for f in dataclasses.fields(cls):
        kind = type(f.default) if f.default is not dataclasses.MISSING else str
        if kind is bool:
            p.add_argument(f"--{f.name.replace('_', '-')}", action="store_true", default=f.default)
        else:
            p.add_argument(f"--{f.name.replace('_', '-')}", type=kind, default=f.default)
    return cls(**vars(p.parse_args(argv)))


def dump(cfg, rows, path):
    if not path:
        return
    with open(path, "w") as fh:
        json.dump({"config": dataclasses.asdict(cfg), "rows": rows}, fh, indent=1, sort_keys=True)
