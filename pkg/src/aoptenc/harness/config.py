"""Flat ``key = value`` experiment configuration, parsed strictly against a typed schema.

Grammar: one ``key = value`` per line; ``#`` starts a comment; blank lines are ignored.  Keys are
dotted (``prior.gamma``).  Optional ``[section]`` lines prefix the keys that follow them with
``section.``.  Values are numbers, booleans (``true``/``false``), bare strings, or Python-style
lists (``[0, 0.5, 1]``, ``[[0.1, 0.2], [0.3, 0.4]]``).  Unknown keys, duplicate keys and values of
the wrong type are errors.
"""
import ast
import hashlib
import math


class ConfigError(ValueError):
    pass


def _int(v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise TypeError("expected an integer")
    return v


def _float(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeError("expected a number")
    return float(v)


def _str(v):
    if not isinstance(v, str):
        raise TypeError("expected a string")
    return v


def _bool(v):
    if not isinstance(v, bool):
        raise TypeError("expected true or false")
    return v


def _opt(conv):
    def f(v):
        return None if v is None else conv(v)
    return f


def _list(conv):
    def f(v):
        if not isinstance(v, (list, tuple)):
            raise TypeError("expected a list")
        return [conv(x) for x in v]
    return f


def _points(v):
    pts = _list(_list(_float))(v)
    if any(len(p) != 2 for p in pts):
        raise TypeError("expected a list of [x, y] pairs")
    return pts


# key -> (converter, default)
SCHEMA = {
    "seed": (_int, 0),
    "mesh.n": (_int, 12),
    "helmholtz.kappa": (_float, 2.0 * math.pi),
    "geometry.preset": (_str, "two_source"),
    "geometry.sources": (_opt(_points), None),
    "geometry.source_subset": (_opt(_list(_int)), None),
    "geometry.receivers": (_opt(_points), None),
    "geometry.eps_source": (_float, 1e-6),
    "geometry.source_model": (_str, "point"),
    "prior.gamma": (_float, 1e-3),
    "prior.beta": (_float, 1e-4),
    "prior.eta": (_float, 1e-2),
    "prior.mean": (_float, 1.0),
    "noise.pct": (_float, 0.02),
    "noise.sigma": (_float, 1.0),
    "noise.seed": (_opt(_int), None),
    "target.name": (_str, "medium2"),
    "target.background": (_float, 1.0),
    "data.path": (_opt(_str), None),
    "map.tol": (_float, 1e-8),
    "map.max_iter": (_int, 500),
    "map.gn_switch": (_float, 1e-6),
    "map.weights": (_str, "random"),
    "trace.cg_tol": (_float, 1e-8),
    "aopt.kind": (_str, "laplace_map"),
    "aopt.lambda": (_float, 1e3),
    "aopt.n_tr": (_int, 10),
    "aopt.n_w": (_int, 3),
    "aopt.max_iters": (_int, 200),
    "aopt.tol": (_float, 1e-6),
    "aopt.memory": (_int, 10),
    "aopt.seed_weights": (_opt(_int), None),
    "aopt.seed_trace": (_opt(_int), None),
    "aopt.distribution": (_str, "uniform"),
    "aopt.grad_cg_tol": (_float, 1e-10),
    "aopt.renormalize": (_bool, True),
    "study.media": (_list(_str), ["medium1", "medium2"]),
    "study.grid_size": (_int, 101),
    "study.s_values": (_list(_float), [0.0, 0.5, 1.0]),
    "study.n_tr_list": (_list(_int), [1, 10, 30]),
    "study.sample_count": (_int, 100),
    "study.n_w_list": (_list(_int), [3]),
    "study.n_restarts": (_int, 5),
    "study.kinds": (_list(_str), ["gn_map", "laplace_map"]),
    "study.repeats": (_int, 20),
    "study.variability_n_tr": (_list(_int), [30, 10, 4]),
    "check.mesh_n": (_int, 6),
    "check.kappa": (_float, 5.5),
    "check.source_subset": (_list(_int), [0, 3, 6, 8]),
    "check.n_w": (_int, 2),
    "check.n_tr": (_int, 3),
    "check.n_points": (_int, 3),
    "check.n_directions": (_int, 5),
    "check.inner_tol": (_float, 1e-5),
    "check.sym_tol": (_float, 1e-9),
    "check.outer_tol": (_float, 1e-4),
    "check.kinds": (_list(_str), ["gn_map", "laplace_map", "gn_ref"]),
    "check.corrupt": (_bool, False),
}

CHOICES = {
    "geometry.preset": ("two_source", "ten_source", "custom"),
    "geometry.source_model": ("point", "mollifier"),
    "target.name": ("medium1", "medium2", "medium10src"),
    "map.weights": ("random", "identity"),
    "aopt.distribution": ("uniform", "rademacher"),
}


def parse_value(text):
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", "null"):
        return None
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


class ExperimentConfig:
    """Validated configuration; every schema key has a value (explicit or default)."""

    def __init__(self, values=None):
        self._explicit = {}
        for key, value in (values or {}).items():
            self._set(key, value)

    def _set(self, key, value):
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        conv, _ = SCHEMA[key]
        try:
            value = conv(value)
        except TypeError as exc:
            raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None
        if key in CHOICES and value not in CHOICES[key]:
            raise ConfigError(f"{key} must be one of {CHOICES[key]}, got {value!r}")
        self._explicit[key] = value

    def __getitem__(self, key):
        if key not in SCHEMA:
            raise KeyError(key)
        if key in self._explicit:
            return self._explicit[key]
        default = SCHEMA[key][1]
        return list(default) if isinstance(default, list) else default

    def with_overrides(self, **values):
        """A copy with some keys replaced; pass dotted keys as ``**{"mesh.n": 8}``."""
        out = ExperimentConfig(self._explicit)
        for k, v in values.items():
            out._set(k, v)
        return out

    def canonical(self):
        """Every key with its effective value, sorted; the basis of :meth:`hash`."""
        return "\n".join(f"{k} = {self[k]!r}" for k in sorted(SCHEMA)) + "\n"

    def hash(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    @property
    def explicit(self):
        return dict(self._explicit)


def parse_config(text, source="<string>"):
    values = {}
    section = ""
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]") and "=" not in line:
            section = line[1:-1].strip()
            if not section:
                raise ConfigError(f"{source}:{lineno}: empty section name")
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"{source}:{lineno}: empty key or value")
        if section:
            key = f"{section}.{key}"
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = parse_value(value)
    try:
        return ExperimentConfig(values)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, str(path))
