"""Scenario configuration files (YAML) with strict, position-aware validation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from fractions import Fraction
from importlib import resources
from pathlib import Path

import yaml

from finslerlab import geometry as geo
from finslerlab.mesh import Mesh, disk_mesh, rectangle_mesh
from finslerlab.norms import FinslerStructure, StructureError, _FIELDS, structure_from_dict
from finslerlab.pde import SolverConfig


class ConfigError(ValueError):
    def __init__(self, message: str, node=None, source: str = "<config>"):
        self.line = self.column = None
        if node is not None:
            self.line = node.start_mark.line + 1
            self.column = node.start_mark.column + 1
            message = f"{source}:{self.line}:{self.column}: {message}"
        super().__init__(message)


class UnknownScenario(ConfigError, FileNotFoundError):
    pass


EXPERIMENTS = {
    "solve": {"boundary": "2 + x1"},
    "norm-check": {"samples": 1000},
    "gradient": {"radii": [0.5, 1.0], "data": 3, "refine": False},
    "harnack": {"radii": [0.5, 1.0], "data": 3, "refine": False},
    "liouville": {"radii": [2, 4, 8, 16], "h_rel": 1 / 32, "boundary": "2 + x1/2 + 0.3*x1*x2", "control": True,
                  "scaled": True},
    "bochner": {"boundary": "x1**2 - x2**2", "levels": 3, "eta_radius": 0.6},
    "poincare": {"radii": [0.5, 1.0, 2.0], "samples": 50, "h_rel": 1 / 16},
    "sobolev": {"radii": [0.5, 1.0, 2.0], "samples": 50, "h_rel": 1 / 16, "nu": None},
    "volume": {"R1": None, "R2": None},
    "curvature": {"grid": 3, "directions": 8},
}
DOMAIN_KINDS = ("square", "disk", "ball-in-square")
TOP_KEYS = ("name", "description", "structure", "domain", "mesh", "solver", "experiments", "N", "seed", "output")


@dataclass
class DomainConfig:
    kind: str = "square"
    center: tuple = (0.0, 0.0)
    radius: float = 1.0


@dataclass
class ExperimentConfig:
    kind: str
    params: dict = field(default_factory=dict)

    def get(self, key):
        return self.params.get(key, EXPERIMENTS[self.kind][key])


@dataclass
class ScenarioConfig:
    name: str
    structure: dict
    description: str = ""
    domain: DomainConfig = field(default_factory=DomainConfig)
    h: float = 1 / 16
    solver: SolverConfig = field(default_factory=SolverConfig)
    experiments: list = field(default_factory=list)
    N: tuple = (math.inf,)
    seed: int = 0
    output: str = "out"

    # -- construction ---------------------------------------------------------
    @classmethod
    def loads(cls, text: str, source: str = "<config>") -> "ScenarioConfig":
        try:
            root = yaml.compose(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f"{source}:{mark.line + 1}:{mark.column + 1}: " if mark else f"{source}: "
            raise ConfigError(f"{where}malformed YAML: {getattr(exc, 'problem', exc)}") from None
        if root is None:
            raise ConfigError(f"{source}: empty config")
        return _Parser(source).scenario(root)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        path = Path(path)
        return cls.loads(path.read_text(), str(path))

    def build_structure(self) -> FinslerStructure:
        return structure_from_dict(self.structure)

    def build_mesh(self, S: FinslerStructure | None = None) -> Mesh:
        c, r = self.domain.center, self.domain.radius
        if self.domain.kind == "disk":
            return disk_mesh(r, self.h, c)
        lo = (c[0] - r, c[1] - r)
        hi = (c[0] + r, c[1] + r)
        if self.domain.kind == "square":
            return rectangle_mesh(lo, hi, self.h)
        # forward ball of radius r about the center, cut from a covering square
        from finslerlab.verify import covering_mesh

        S = S or self.build_structure()
        big = covering_mesh(S, c, r, self.h)
        ball = geo.forward_ball(S, c, r, big, refine=False)
        sub, _ = big.submesh(ball.element_mask(big))
        return sub

    # -- canonical form -------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "structure": self.build_structure().to_dict(),
            "domain": {"kind": self.domain.kind, "center": list(self.domain.center), "radius": self.domain.radius},
            "mesh": {"h": self.h},
            "solver": {f.name: getattr(self.solver, f.name) for f in fields(self.solver)},
            "experiments": [{"kind": e.kind, **e.params} for e in self.experiments],
            "N": [_num_out(n) for n in self.N],
            "seed": self.seed,
            "output": self.output,
        }

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


def _num_out(v):
    return "inf" if v == math.inf else v


class _Parser:
    def __init__(self, source: str):
        self.source = source

    def err(self, msg, node):
        return ConfigError(msg, node, self.source)

    def mapping(self, node, allowed, what) -> dict:
        if not isinstance(node, yaml.MappingNode):
            raise self.err(f"{what} must be a mapping", node)
        out = {}
        for k, v in node.value:
            key = k.value
            if key not in allowed:
                raise self.err(f"unknown key {key!r} in {what} (allowed: {', '.join(allowed)})", k)
            if key in out:
                raise self.err(f"duplicate key {key!r} in {what}", k)
            out[key] = (k, v)
        return out

    def plain(self, node):
        """Python value of a scalar/sequence/mapping node with YAML core typing."""
        if isinstance(node, yaml.ScalarNode):
            return yaml.safe_load(yaml.serialize(node))
        if isinstance(node, yaml.SequenceNode):
            return [self.plain(v) for v in node.value]
        return {k.value: self.plain(v) for k, v in node.value}

    def number(self, node, what, positive=False, allow_inf=False) -> float:
        v = self.plain(node)
        try:
            if isinstance(v, str):
                s = v.strip().lower()
                x = math.inf if allow_inf and s in ("inf", "infinity") else float(Fraction(s))
            elif isinstance(v, bool):
                raise TypeError
            else:
                x = float(v)
        except (TypeError, ValueError, ZeroDivisionError):
            raise self.err(f"{what} must be a number, got {v!r}", node) from None
        if positive and not x > 0:
            raise self.err(f"{what} must be positive", node)
        if not allow_inf and not math.isfinite(x):
            raise self.err(f"{what} must be finite", node)
        return x

    def integer(self, node, what) -> int:
        v = self.plain(node)
        if isinstance(v, bool) or not isinstance(v, int):
            raise self.err(f"{what} must be an integer", node)
        return v

    def string(self, node, what) -> str:
        if not isinstance(node, yaml.ScalarNode):
            raise self.err(f"{what} must be a string", node)
        return str(node.value)

    def scenario(self, root) -> ScenarioConfig:
        top = self.mapping(root, TOP_KEYS, "scenario")
        for req in ("name", "structure"):
            if req not in top:
                raise self.err(f"missing required key {req!r}", root)
        kw = {"name": self.string(top["name"][1], "name")}
        if "description" in top:
            kw["description"] = self.string(top["description"][1], "description")
        kw["structure"] = self.structure(top["structure"][1])
        if "domain" in top:
            kw["domain"] = self.domain(top["domain"][1])
        if "mesh" in top:
            m = self.mapping(top["mesh"][1], ("h",), "mesh")
            if "h" in m:
                kw["h"] = self.number(m["h"][1], "mesh.h", positive=True)
        if "solver" in top:
            kw["solver"] = self.solver(top["solver"][1])
        if "experiments" in top:
            kw["experiments"] = self.experiments(top["experiments"][1])
        if "N" in top:
            node = top["N"][1]
            items = node.value if isinstance(node, yaml.SequenceNode) else [node]
            Ns = tuple(self.number(n, "N", allow_inf=True) for n in items)
            if not Ns:
                raise self.err("N must list at least one value", node)
            kw["N"] = Ns
        if "seed" in top:
            kw["seed"] = self.integer(top["seed"][1], "seed")
        if "output" in top:
            kw["output"] = self.string(top["output"][1], "output")
        dim = int(kw["structure"].get("dim", 2))
        for n, item in zip(kw.get("N", ()), items if "N" in top else ()):
            if n < dim:
                raise self.err(f"every N must be at least the dimension {dim}", item)
        return ScenarioConfig(**kw)

    def structure(self, node) -> dict:
        if not isinstance(node, yaml.MappingNode):
            raise self.err("structure must be a mapping", node)
        fam_node = next((v for k, v in node.value if k.value == "family"), None)
        if fam_node is None:
            raise self.err("structure needs a 'family'", node)
        family = fam_node.value
        if family not in _FIELDS:
            raise self.err(f"unknown family {family!r}", fam_node)
        allowed = tuple(sorted(_FIELDS[family]))
        entries = self.mapping(node, allowed, f"{family} structure")
        d = {k: self.plain(v) for k, (_, v) in entries.items()}
        for key in ("metric", "density", "curvature"):
            if key in d and not isinstance(d[key], list):
                d[key] = str(d[key])
        if "drift" in d:
            d["drift"] = [str(c) for c in d["drift"]]
        if "metric" in d and isinstance(d["metric"], list):
            d["metric"] = [[str(c) for c in row] for row in d["metric"]]
        try:
            structure_from_dict(d)
        except (StructureError, ValueError, TypeError) as exc:
            raise self.err(f"invalid structure: {exc}", node) from None
        return d

    def domain(self, node) -> DomainConfig:
        m = self.mapping(node, ("kind", "center", "radius"), "domain")
        out = DomainConfig()
        if "kind" in m:
            kind = self.string(m["kind"][1], "domain.kind")
            if kind not in DOMAIN_KINDS:
                raise self.err(f"domain.kind must be one of {', '.join(DOMAIN_KINDS)}", m["kind"][1])
            out.kind = kind
        if "center" in m:
            c = m["center"][1]
            if not isinstance(c, yaml.SequenceNode) or len(c.value) != 2:
                raise self.err("domain.center must be a pair of numbers", c)
            out.center = tuple(self.number(v, "domain.center") for v in c.value)
        if "radius" in m:
            out.radius = self.number(m["radius"][1], "domain.radius", positive=True)
        return out

    def solver(self, node) -> SolverConfig:
        names = tuple(f.name for f in fields(SolverConfig))
        m = self.mapping(node, names, "solver")
        kw = {}
        for k, (_, v) in m.items():
            if k in ("max_iter",):
                kw[k] = self.integer(v, f"solver.{k}")
            elif k == "method":
                kw[k] = self.string(v, "solver.method")
            elif k == "verbose":
                kw[k] = bool(self.plain(v))
            else:
                kw[k] = self.number(v, f"solver.{k}", positive=True)
        try:
            return SolverConfig(**kw)
        except ValueError as exc:
            raise self.err(str(exc), node) from None

    def experiments(self, node) -> list:
        if not isinstance(node, yaml.SequenceNode):
            raise self.err("experiments must be a list", node)
        out = []
        for item in node.value:
            if isinstance(item, yaml.ScalarNode):
                kind, params = item.value, {}
                if kind not in EXPERIMENTS:
                    raise self.err(f"unknown experiment {kind!r} (known: {', '.join(EXPERIMENTS)})", item)
            else:
                kind_node = next((v for k, v in getattr(item, "value", []) if getattr(k, "value", None) == "kind"), None)
                if kind_node is None:
                    raise self.err("experiment entries need a 'kind'", item)
                kind = kind_node.value
                if kind not in EXPERIMENTS:
                    raise self.err(f"unknown experiment {kind!r} (known: {', '.join(EXPERIMENTS)})", kind_node)
                m = self.mapping(item, ("kind", *EXPERIMENTS[kind]), f"{kind} experiment")
                params = {}
                for k, (_, v) in m.items():
                    if k == "kind":
                        continue
                    default = EXPERIMENTS[kind][k]
                    if isinstance(default, bool):
                        params[k] = bool(self.plain(v))
                    elif isinstance(default, list):
                        if not isinstance(v, yaml.SequenceNode) or not v.value:
                            raise self.err(f"{kind}.{k} must be a non-empty list", v)
                        params[k] = [self.number(x, f"{kind}.{k}", positive=True) for x in v.value]
                    elif isinstance(default, str):
                        params[k] = self.string(v, f"{kind}.{k}")
                    elif isinstance(default, int) and not isinstance(default, bool):
                        params[k] = self.integer(v, f"{kind}.{k}")
                    else:
                        params[k] = self.number(v, f"{kind}.{k}", positive=True)
            out.append(ExperimentConfig(kind, params))
        return out


# -- bundled scenarios ---------------------------------------------------------

def _scenario_dir():
    return resources.files("finslerlab") / "scenarios"


def bundled_scenarios() -> dict:
    """Name -> path of every scenario shipped with the package."""
    out = {}
    for entry in sorted(_scenario_dir().iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".yaml"):
            out[entry.name[: -len(".yaml")]] = Path(str(entry))
    return out


def resolve_config(name_or_path) -> Path:
    p = Path(name_or_path)
    if p.exists():
        return p
    known = bundled_scenarios()
    if str(name_or_path) in known:
        return known[str(name_or_path)]
    raise UnknownScenario(f"no config file or bundled scenario named {name_or_path!r}")
